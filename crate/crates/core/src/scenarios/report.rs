use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::quantization::BSSpectrum;

pub const CSV_HEADER: [&str; 4] = ["level", "holonomy_re", "holonomy_im", "residual"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub curvature: String,
    pub holonomy: String,
    pub moser_sign: String,
    pub orientation: String,
    pub gauge: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            curvature: "potentials are real 1-forms alpha with d alpha = omega; connection form A = -i alpha".into(),
            holonomy: "hol(C) = exp(i oint_C alpha); integrality means int omega in 2 pi Z".into(),
            moser_sign: "i_{X_t} omega_t = -alpha, omega_t = omega0 + t (omega1 - omega0), d alpha = omega1 - omega0".into(),
            orientation: "sphere coordinates (theta, z) with dz ^ dtheta positive; torus dtheta1 ^ dtheta2 positive".into(),
            gauge: "xi = A_a - A_b = -i (alpha_a - alpha_b); gauge by phi sends alpha to alpha + i d phi".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `measured <= tolerance`.
    AtMost,
    /// `measured >= tolerance`.
    AtLeast,
    /// Boolean outcome; `measured` is 1 for true and must equal `tolerance`.
    Equals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub level: f64,
    pub holonomy_re: f64,
    pub holonomy_im: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub name: String,
    pub connection: String,
    pub continuum: bool,
    pub regular: Vec<SpectrumRow>,
    pub singular_levels: Vec<f64>,
    /// `[b, unwrapped holonomy phase]` along the scan grid.
    pub profile: Vec<[f64; 2]>,
}

impl SpectrumTable {
    pub fn from_spectrum(name: impl Into<String>, s: &BSSpectrum) -> Self {
        SpectrumTable {
            name: name.into(),
            connection: s.connection.clone(),
            continuum: s.continuum,
            regular: s
                .regular_levels
                .iter()
                .zip(&s.holonomies)
                .zip(&s.residuals)
                .map(|((&level, h), &residual)| SpectrumRow { level, holonomy_re: h.re, holonomy_im: h.im, residual })
                .collect(),
            singular_levels: s.singular_levels.clone(),
            profile: s.phase_profile.iter().map(|&(b, p)| [b, p]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub pass: bool,
    pub conventions: Conventions,
    pub parameters: Vec<[String; 2]>,
    pub checks: Vec<Check>,
    pub observations: Vec<Observation>,
    pub spectra: Vec<SpectrumTable>,
    pub duration_seconds: f64,
}

impl Report {
    pub fn new(scenario: impl Into<String>, seed: u64) -> Self {
        Report {
            scenario: scenario.into(),
            seed,
            pass: true,
            conventions: Conventions::default(),
            parameters: vec![],
            checks: vec![],
            observations: vec![],
            spectra: vec![],
            duration_seconds: 0.0,
        }
    }

    fn push(&mut self, name: &str, measured: f64, tolerance: f64, comparison: Comparison) -> bool {
        let pass = match comparison {
            Comparison::AtMost => measured <= tolerance,
            Comparison::AtLeast => measured >= tolerance,
            Comparison::Equals => measured == tolerance,
        };
        self.checks.push(Check { name: name.into(), measured, tolerance, comparison, pass });
        self.pass &= pass;
        pass
    }

    pub fn at_most(&mut self, name: &str, measured: f64, tolerance: f64) -> bool {
        self.push(name, measured, tolerance, Comparison::AtMost)
    }

    pub fn at_least(&mut self, name: &str, measured: f64, bound: f64) -> bool {
        self.push(name, measured, bound, Comparison::AtLeast)
    }

    pub fn expect(&mut self, name: &str, outcome: bool, wanted: bool) -> bool {
        self.push(name, f64::from(u8::from(outcome)), f64::from(u8::from(wanted)), Comparison::Equals)
    }

    pub fn observe(&mut self, name: &str, value: f64) {
        self.observations.push(Observation { name: name.into(), value });
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn observation(&self, name: &str) -> Option<f64> {
        self.observations.iter().find(|o| o.name == name).map(|o| o.value)
    }

    /// Recomputes `pass` from the checks.
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        toml::to_string(self).map_err(|e| ScenarioError::Io(format!("serialising report: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Io(format!("parsing report: {e}")))
    }
}

/// Writes `report.toml`, one `<name>.csv` and one `<name>.dat` per spectrum.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    let io = |p: &Path, e: std::io::Error| ScenarioError::Io(format!("{}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    let path = dir.join("report.toml");
    fs::write(&path, report.to_toml()?).map_err(|e| io(&path, e))?;
    written.push(path);
    for table in &report.spectra {
        let csv_path = dir.join(format!("{}.csv", table.name));
        let mut w = csv::Writer::from_path(&csv_path).map_err(|e| ScenarioError::Io(format!("{}: {e}", csv_path.display())))?;
        let csv_err = |e: csv::Error| ScenarioError::Io(format!("writing spectrum table: {e}"));
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        let mut rows: Vec<[f64; 4]> =
            table.regular.iter().map(|r| [r.level, r.holonomy_re, r.holonomy_im, r.residual]).collect();
        // holonomy is undefined on singular leaves
        rows.extend(table.singular_levels.iter().map(|&l| [l, f64::NAN, f64::NAN, f64::NAN]));
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for r in rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        w.flush().map_err(|e| io(&csv_path, e))?;
        written.push(csv_path);

        let dat_path = dir.join(format!("{}.dat", table.name));
        let mut f = fs::File::create(&dat_path).map_err(|e| io(&dat_path, e))?;
        let mut text = String::from("# base_value holonomy_phase\n");
        for [b, p] in &table.profile {
            text.push_str(&format!("{b} {p}\n"));
        }
        f.write_all(text.as_bytes()).map_err(|e| io(&dat_path, e))?;
        written.push(dat_path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_passes_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let r = Report::new("empty", 0);
        emit_report(&r, dir.path()).unwrap();
        let back = Report::from_toml(&fs::read_to_string(dir.path().join("report.toml")).unwrap()).unwrap();
        assert!(back.pass && back == r);
    }

    #[test]
    fn checks_drive_the_verdict() {
        let mut r = Report::new("x", 1);
        assert!(r.at_most("a", 1e-9, 1e-6));
        assert!(r.at_least("b", 0.2, 0.1));
        assert!(!r.expect("c", true, false));
        assert!(!r.pass && r.pass == r.all_checks_pass());
        let back = Report::from_toml(&r.to_toml().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
