//! Contrast of a full-window echo against the amplitude of an in-phase
//! sinusoid, with the sinusoidal fit used as a calibration.
//!
//!     cargo run --release --example calibration_curve

use haarsense::spinsim::{calibrate, Readout, SensorParams};

fn main() -> haarsense::Result<()> {
    let params = SensorParams::default();
    let tau = 20.0;
    let amplitudes: Vec<f64> = (0..41).map(|k| 0.05 * k as f64).collect();
    let curve = calibrate(&params, tau, &amplitudes, Readout::Shots(10_000_000), 1)?;

    println!("A_uT   contrast");
    for (a, c) in curve.amplitudes_ut.iter().zip(&curve.contrasts).step_by(4) {
        println!("{a:4.2}  {c:+.4}");
    }
    println!(
        "\nfit: {:.4} sin({:.4} A) {:+.5}, residual {:.2e}",
        curve.scale, curve.frequency, curve.offset, curve.residual
    );
    println!(
        "period {:.4} uT (expected {:.4}), slope at 0: {:.4} /uT (expected {:.4})",
        curve.period_ut(),
        2.0 * std::f64::consts::PI / curve.predicted_frequency,
        curve.slope_at_origin(),
        curve.predicted_slope()
    );
    Ok(())
}
