//! 16-point Haar reconstruction of one period of a weak sinusoid, for two
//! phases. The noiseless protocol returns the block averages exactly; the
//! shot-noise run adds error bars.
//!
//! A free-precession run over the whole 64 us window decays with T2* and
//! carries no usable contrast, so the noisy run leaves the mean unmeasured
//! (it is zero for a full period anyway).
//!
//!     cargo run --release --example sinusoid_reconstruction

use std::f64::consts::FRAC_PI_2;

use haarsense::protocol::{run_haar_protocol, MeanSource, MeasurementOptions};
use haarsense::signals::{generate, SignalSpec};
use haarsense::spinsim::{Readout, SensorParams};
use haarsense::wavelet::haar_reconstruct_points;

fn main() -> haarsense::Result<()> {
    let duration = 64.0;
    let order = 4;
    let params = SensorParams::default();

    for (label, theta) in [("theta = 0", 0.0), ("theta = pi/2", FRAC_PI_2)] {
        let spec = SignalSpec::Sinusoid {
            amplitude_ut: 0.05,
            period_us: duration,
            phase_rad: theta,
        };
        let signal = generate(&spec, duration, 4096)?;
        let truth = signal.block_averages(order)?;

        let ideal = run_haar_protocol(&signal, &params, order, &MeasurementOptions::ideal())?;
        let ideal = haar_reconstruct_points(&ideal, order)?;
        let noisy = run_haar_protocol(
            &signal,
            &params,
            order,
            &MeasurementOptions::new(Readout::Shots(100_000_000), 7).with_mean(MeanSource::None),
        )?;
        let noisy = haar_reconstruct_points(&noisy, order)?;

        println!("{label}");
        println!("   t_us   block_uT   ideal_uT   shots_uT  +-sigma");
        for (k, t) in ideal.bin_centers_us(duration).iter().enumerate() {
            println!(
                "  {t:5.1}  {:+.5}  {:+.5}  {:+.5}  {:.5}",
                truth[k],
                ideal.points()[k],
                noisy.points()[k],
                noisy.sigmas()[k]
            );
        }
        let worst = truth
            .iter()
            .zip(ideal.points())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("  max |ideal - block| = {worst:.2e} uT\n");
    }
    Ok(())
}
