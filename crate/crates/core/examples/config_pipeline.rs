//! Drive a complete `simulate` run from a JSON config, the same document
//! the `haarsense simulate --config` command reads, and write its outputs
//! into a temporary directory.
//!
//!     cargo run --release --example config_pipeline

use haarsense::cli::{self, reconstruct, write_json, RunConfig};

const CONFIG: &str = r#"{
  "signal": { "kind": "sinusoid", "amplitude_ut": 0.05, "period_us": 64.0, "phase_rad": 1.5707963267948966 },
  "duration_us": 64.0,
  "sample_count": 4096,
  "protocol": { "kind": "haar", "order": 4 },
  "readout": { "shots": 100000000 },
  "mean": "none",
  "seed": 11,
  "run_overhead_us": 5.0
}"#;

fn main() -> haarsense::Result<()> {
    let config = RunConfig::from_json(CONFIG)?;
    let out = cli::simulate(&config)?;
    println!(
        "{} signal runs per sweep, {} in total, {:.1} s",
        out.budget.signal_runs_per_sweep, out.budget.total_runs, out.budget.wall_seconds
    );

    let dir = std::env::temp_dir().join("haarsense_config_pipeline");
    std::fs::create_dir_all(&dir)?;
    let coeff_path = dir.join("coefficients.json");
    let doc = out.coefficients.expect("Haar runs produce coefficients");
    write_json(&doc, Some(&coeff_path))?;
    cli::save_reconstruction_csv(&out.reconstruction, config.duration_us, &dir.join("recon.csv"))?;

    // Progressive reconstructions from the saved document.
    let reloaded = cli::CoefficientDocument::load(&coeff_path)?;
    for recon in reconstruct(&reloaded, None, true)? {
        let peak = recon.points().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("order {}: {} points, max {:+.4} uT", recon.order(), recon.len(), peak);
    }
    std::fs::write(
        dir.join("recon.svg"),
        cli::render_svg(&out.reconstruction, config.duration_us, "theta = pi/2", &[]),
    )?;
    println!("wrote {}", dir.display());

    // Same seed, sequential simulation: identical numbers.
    let mut sequential = config.clone();
    sequential.parallel = false;
    assert_eq!(cli::simulate(&sequential)?.reconstruction, out.reconstruction);
    Ok(())
}
