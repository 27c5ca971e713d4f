use std::fs;
use std::path::{Path, PathBuf};

use super::ScenarioError;

/// Named tolerances shared by every scenario; each can be overridden as
/// `tolerances.<name>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// `sup |Phi^* w1 - w0|` for Moser and Darboux maps.
    pub pullback: f64,
    /// `sup |d alpha - f|` for computed primitives.
    pub primitive: f64,
    /// `sup |Phi^{-1}(Phi(x)) - x|`.
    pub inverse: f64,
    /// Identity flow for a trivial Moser pair.
    pub identity: f64,
    /// `sup |xi - d phi|`.
    pub gauge: f64,
    pub path_family: f64,
    /// `sup |Re phi|` for hermitian gauge functions.
    pub hermitian: f64,
    /// Flow commuting with the circle action.
    pub equivariance: f64,
    /// Invariance of an averaged gauge function.
    pub invariance: f64,
    /// `|hol - 1|` at a Bohr-Sommerfeld level.
    pub holonomy: f64,
    /// Level-wise spectrum deviation and distance to analytic levels.
    pub level: f64,
    pub period: f64,
    /// `sup |t^* dtheta - beta|`.
    pub circle_map: f64,
    /// Holonomy change under a gauge transformation.
    pub gauge_invariance: f64,
    /// Lower bound on the sample variance of a non-constant gauge function.
    pub variance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pullback: 1e-3,
            primitive: 1e-6,
            inverse: 1e-6,
            identity: 1e-12,
            gauge: 1e-5,
            path_family: 1e-5,
            hermitian: 1e-10,
            equivariance: 1e-5,
            invariance: 1e-6,
            holonomy: 1e-6,
            level: 1e-6,
            period: 1e-9,
            circle_map: 1e-4,
            gauge_invariance: 1e-8,
            variance: 0.1,
        }
    }
}

impl Tolerances {
    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "pullback" => &mut self.pullback,
            "primitive" => &mut self.primitive,
            "inverse" => &mut self.inverse,
            "identity" => &mut self.identity,
            "gauge" => &mut self.gauge,
            "path_family" => &mut self.path_family,
            "hermitian" => &mut self.hermitian,
            "equivariance" => &mut self.equivariance,
            "invariance" => &mut self.invariance,
            "holonomy" => &mut self.holonomy,
            "level" => &mut self.level,
            "period" => &mut self.period,
            "circle_map" => &mut self.circle_map,
            "gauge_invariance" => &mut self.gauge_invariance,
            "variance" => &mut self.variance,
            _ => return None,
        })
    }
}

/// Numeric scenario parameters, overridable as `params.<name>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub epsilon: f64,
    pub k: i64,
    pub k_max: i64,
    pub c: f64,
    /// RK4 steps of the Moser flow.
    pub steps: usize,
    pub darboux_steps: usize,
    pub radius: f64,
    pub grid_step: f64,
    pub root_tol: f64,
    pub gl_order: usize,
    pub trapezoid_nodes: usize,
    pub samples: usize,
    pub perturbations: usize,
    pub average_nodes: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            epsilon: 0.2,
            k: 2,
            k_max: 3,
            c: 0.5,
            steps: 200,
            darboux_steps: 30,
            radius: 0.3,
            grid_step: 0.05,
            root_tol: 1e-10,
            gl_order: 32,
            trapezoid_nodes: 256,
            samples: 200,
            perturbations: 20,
            average_nodes: 16,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ScenarioError> {
    value.parse().map_err(|_| ScenarioError::Config(format!("`{key}`: cannot parse `{value}`")))
}

impl Params {
    fn set(&mut self, key: &str, value: &str) -> Result<(), ScenarioError> {
        let full = format!("params.{key}");
        match key {
            "epsilon" => self.epsilon = parse_num(&full, value)?,
            "k" => self.k = parse_num(&full, value)?,
            "k_max" => self.k_max = parse_num(&full, value)?,
            "c" => self.c = parse_num(&full, value)?,
            "steps" => self.steps = parse_num(&full, value)?,
            "darboux_steps" => self.darboux_steps = parse_num(&full, value)?,
            "radius" => self.radius = parse_num(&full, value)?,
            "grid_step" => self.grid_step = parse_num(&full, value)?,
            "root_tol" => self.root_tol = parse_num(&full, value)?,
            "gl_order" => self.gl_order = parse_num(&full, value)?,
            "trapezoid_nodes" => self.trapezoid_nodes = parse_num(&full, value)?,
            "samples" => self.samples = parse_num(&full, value)?,
            "perturbations" => self.perturbations = parse_num(&full, value)?,
            "average_nodes" => self.average_nodes = parse_num(&full, value)?,
            _ => return Err(ScenarioError::Config(format!("unknown key `{full}`"))),
        }
        Ok(())
    }

    /// `(key, value)` pairs in a fixed order, as recorded in reports.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("epsilon", self.epsilon.to_string()),
            ("k", self.k.to_string()),
            ("k_max", self.k_max.to_string()),
            ("c", self.c.to_string()),
            ("steps", self.steps.to_string()),
            ("darboux_steps", self.darboux_steps.to_string()),
            ("radius", self.radius.to_string()),
            ("grid_step", self.grid_step.to_string()),
            ("root_tol", self.root_tol.to_string()),
            ("gl_order", self.gl_order.to_string()),
            ("trapezoid_nodes", self.trapezoid_nodes.to_string()),
            ("samples", self.samples.to_string()),
            ("perturbations", self.perturbations.to_string()),
            ("average_nodes", self.average_nodes.to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub tolerances: Tolerances,
    pub params: Params,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn new(scenario: impl Into<String>) -> Self {
        ScenarioConfig {
            scenario: scenario.into(),
            tolerances: Tolerances::default(),
            params: Params::default(),
            seed: 0,
            out_dir: None,
        }
    }

    /// Applies one `section.key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ScenarioError> {
        let (section, name) =
            key.split_once('.').ok_or_else(|| ScenarioError::Config(format!("key `{key}` has no section")))?;
        match section {
            "tolerances" => {
                let v: f64 = parse_num(key, value)?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(ScenarioError::Config(format!("tolerance `{key}` must be positive, got {value}")));
                }
                *self.tolerances.slot(name).ok_or_else(|| ScenarioError::Config(format!("unknown key `{key}`")))? = v;
            }
            "params" => self.params.set(name, value)?,
            "run" => match name {
                "seed" => self.seed = parse_num(key, value)?,
                "out" => self.out_dir = Some(PathBuf::from(value)),
                "scenario" => self.scenario = value.to_string(),
                _ => return Err(ScenarioError::Config(format!("unknown key `{key}`"))),
            },
            _ => return Err(ScenarioError::Config(format!("unknown section in `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ScenarioError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ScenarioError::Config(format!("`{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    /// Applies every assignment of a flat config text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ScenarioError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line).map_err(|e| match e {
                ScenarioError::Config(m) => ScenarioError::Config(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ScenarioError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ScenarioError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_text_is_applied() {
        let mut c = ScenarioConfig::new("bs-sphere");
        c.apply_text("# demo\nparams.k = 3\ntolerances.level = 1e-7  # tighter\n\nrun.seed = 9\n").unwrap();
        assert_eq!((c.params.k, c.tolerances.level, c.seed), (3, 1e-7, 9));
    }

    #[test]
    fn bad_keys_and_values_are_rejected() {
        let mut c = ScenarioConfig::new("bs-sphere");
        for bad in ["params.kk = 1", "tolerances.level = -1", "tolerances.level = 0", "k = 2", "params.k = two", "nokey"] {
            assert!(matches!(c.apply_text(bad), Err(ScenarioError::Config(_))), "{bad}");
        }
    }
}
