//! Run an analysis described by a TOML config and write its reports.
//!
//! `cargo run --release --example run_config -- examples/data/ishigami.toml out/ishigami`

use std::path::PathBuf;

use factorial_gsa::report::{run, AnalysisConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/linear_gaussian.toml"));
    let mut config = AnalysisConfig::load(&path)?;
    if let Some(out) = args.next() {
        config.output.dir = Some(out.into());
    }
    let summary = run(&config)?;
    for v in &summary.analysis.verifiers {
        println!("{:<36} residual {:.2e}  passed {}", v.check, v.residual, v.passed);
    }
    println!("wrote {:?} to {}", summary.files, summary.out_dir.display());
    std::process::exit(summary.exit_code(false));
}
