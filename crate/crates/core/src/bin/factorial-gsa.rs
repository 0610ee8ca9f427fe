use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use factorial_gsa::report::{explain_weights, run, AnalysisConfig, RunError, WeightsConfig};
use factorial_gsa::{SubsetMask, WeightFamily};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Table {
    Weights,
}

/// Estimate a sensitivity map and its weighted factorial effects.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Analysis config (TOML).
    #[arg(long, required_unless_present = "table")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 4 when an enforced verifier fails.
    #[arg(long)]
    strict: bool,
    /// Also report effects of the dual map.
    #[arg(long)]
    dual: bool,
    /// Weight family name (uniform, mobius, shapley) or a weight-table path.
    #[arg(long)]
    weights: Option<String>,
    /// Print a table instead of running an analysis.
    #[arg(long, value_enum)]
    table: Option<Table>,
    /// Number of inputs for `--table weights`.
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Effect subset for `--table weights`, e.g. "{2}".
    #[arg(long, default_value = "{1}")]
    subset: String,
}

fn weight_table(cli: &Cli) -> Result<(), String> {
    let b = SubsetMask::parse(&cli.subset, cli.dim).map_err(|e| e.to_string())?;
    let mut families = vec![
        WeightFamily::uniform(cli.dim).map_err(|e| e.to_string())?,
        WeightFamily::mobius(cli.dim).map_err(|e| e.to_string())?,
        WeightFamily::shapley(cli.dim).map_err(|e| e.to_string())?,
    ];
    if let Some(sel) = &cli.weights {
        let cfg = WeightsConfig::from_selector(sel);
        if cfg.path.is_some() {
            families.push(cfg.resolve(cli.dim, std::path::Path::new(".")).map_err(|e| e.to_string())?);
        }
    }
    let table = explain_weights(cli.dim, b, &families).map_err(|e| e.to_string())?;
    print!("{table}");
    Ok(())
}

fn analysis(cli: &Cli) -> Result<i32, RunError> {
    let path = cli.config.as_ref().expect("clap enforces --config");
    let mut config = AnalysisConfig::load(path)?;
    let cwd = std::env::current_dir().unwrap_or_default();
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        config.output.dir = Some(out.clone());
    }
    if cli.dual {
        config.output.dual = true;
    }
    if let Some(sel) = &cli.weights {
        let mut w = WeightsConfig::from_selector(sel);
        w.path = w.path.map(|p| cwd.join(p));
        config.weights = w;
    }
    let summary = run(&config)?;
    for f in summary.analysis.failures() {
        eprintln!("subset {} failed: {}", f.subset, f.message);
    }
    for v in &summary.analysis.verifiers {
        if v.enforced && !v.passed {
            eprintln!("verifier {} failed: residual {} > {}", v.check, v.residual, v.tolerance);
        }
    }
    println!("wrote {} files to {}", summary.files.len(), summary.out_dir.display());
    Ok(summary.exit_code(cli.strict))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = if cli.table.is_some() {
        match weight_table(&cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        }
    } else {
        match analysis(&cli) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        }
    };
    ExitCode::from(code as u8)
}
