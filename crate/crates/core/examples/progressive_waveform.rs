//! Refine a 32-bin waveform order by order and compare with the Walsh
//! reconstruction, which needs one signal run per coefficient.
//!
//!     cargo run --release --example progressive_waveform

use haarsense::protocol::{
    plan_haar, plan_walsh, run_budget, run_haar_protocol, run_walsh_protocol, MeasurementOptions,
};
use haarsense::signals::{generate, SignalSpec};
use haarsense::spinsim::SensorParams;
use haarsense::wavelet::{haar_reconstruct_points, walsh_reconstruct};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> haarsense::Result<()> {
    let duration = 64.0;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // A smooth bump plus some structure, 32 levels held for 2 us each.
    let levels: Vec<f64> = (0..32)
        .map(|k| {
            let x = (k as f64 + 0.5) / 32.0;
            0.02 * (-(x - 0.4f64).powi(2) / 0.02).exp() + rng.random_range(-0.004..0.004)
        })
        .collect();
    let signal = generate(&SignalSpec::Waveform { path: None, samples: Some(levels.clone()) }, duration, 2048)?;
    let params = SensorParams::default();
    let options = MeasurementOptions::ideal();

    let coeffs = run_haar_protocol(&signal, &params, 5, &options)?;
    println!(" n  points  runs  L2 error (uT)");
    for n in 1..=5 {
        let recon = haar_reconstruct_points(&coeffs, n)?;
        // Compare on the 32-bin grid.
        let per_bin = 32 / recon.len();
        let err: f64 = levels
            .iter()
            .enumerate()
            .map(|(k, v)| (v - recon.points()[k / per_bin]).powi(2) * duration / 32.0)
            .sum::<f64>()
            .sqrt();
        let runs = run_budget(&plan_haar(n, duration, 1, 0.0)?).signal_runs_per_sweep;
        println!("{n:2}  {:6}  {runs:4}  {err:.3e}", recon.len());
    }

    let (spectrum, walsh_budget) = run_walsh_protocol(&signal, &params, 5, &options)?;
    let walsh = walsh_reconstruct(&spectrum)?;
    let haar = haar_reconstruct_points(&coeffs, 5)?;
    let diff = walsh
        .points()
        .iter()
        .zip(haar.points())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("\nmax |Walsh - Haar| at n = 5: {diff:.2e} uT");
    println!(
        "signal runs: Haar {} vs Walsh {} (plan says {})",
        run_budget(&plan_haar(5, duration, 1, 0.0)?).signal_runs_per_sweep,
        walsh_budget.signal_runs_per_sweep,
        run_budget(&plan_walsh(5, duration, 1, 0.0)?).signal_runs_per_sweep
    );
    Ok(())
}
