use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use prequant::scenarios::{
    default_output_root, exit_code, run_scenario, scenario_list, scenario_names, ScenarioConfig, ScenarioError,
    EXIT_CHECK_FAILURE, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PASS, OUTPUT_ENV,
};

#[derive(Parser)]
#[command(name = "prequant", about = "Run prequantization scenarios and write their reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        scenario: String,
        /// Flat `section.key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default: `$PREQUANT_OUT/<scenario>`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// `section.key=value` override, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List registered scenarios.
    List,
    /// Run every scenario with default parameters.
    VerifyAll {
        /// Output root; each scenario writes to `<out>/<scenario>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn build_config(
    scenario: String,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    set: &[String],
) -> Result<ScenarioConfig, ScenarioError> {
    if !scenario_names().contains(&scenario.as_str()) {
        return Err(ScenarioError::UnknownScenario(scenario));
    }
    let mut cfg = ScenarioConfig::new(scenario);
    if let Some(path) = config {
        cfg.apply_file(&path)?;
    }
    for pair in set {
        cfg.set_pair(pair)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if out.is_some() {
        cfg.out_dir = out;
    }
    Ok(cfg)
}

fn summarize(name: &str, result: &Result<prequant::scenarios::Report, ScenarioError>) {
    match result {
        Ok(r) => {
            for c in &r.checks {
                println!("  [{}] {}: {:e} (tolerance {:e})", if c.pass { "ok" } else { "FAIL" }, c.name, c.measured, c.tolerance);
            }
            println!("{name}: {} in {:.2}s", if r.pass { "pass" } else { "FAIL" }, r.duration_seconds);
        }
        Err(e) => eprintln!("{name}: {e}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::List => {
            for (name, summary) in scenario_list() {
                println!("{name:<20} {summary}");
            }
            EXIT_PASS
        }
        Command::Run { scenario, config, out, seed, set } => {
            let name = scenario.clone();
            let result = build_config(scenario, config, out, seed, &set).and_then(|cfg| run_scenario(&cfg));
            summarize(&name, &result);
            exit_code(&result)
        }
        Command::VerifyAll { out, seed } => {
            let root = out.unwrap_or_else(default_output_root);
            let mut worst = EXIT_PASS;
            for name in scenario_names() {
                let mut cfg = ScenarioConfig::new(name);
                cfg.seed = seed;
                cfg.out_dir = Some(root.join(name));
                let result = run_scenario(&cfg);
                summarize(name, &result);
                worst = match (worst, exit_code(&result)) {
                    (_, EXIT_NUMERICAL) | (EXIT_NUMERICAL, _) => EXIT_NUMERICAL,
                    (_, EXIT_CONFIG) | (EXIT_CONFIG, _) => EXIT_CONFIG,
                    (_, EXIT_CHECK_FAILURE) | (EXIT_CHECK_FAILURE, _) => EXIT_CHECK_FAILURE,
                    _ => EXIT_PASS,
                };
            }
            println!("reports under {} (override with --out or {OUTPUT_ENV})", root.display());
            worst
        }
    };
    ExitCode::from(code as u8)
}
