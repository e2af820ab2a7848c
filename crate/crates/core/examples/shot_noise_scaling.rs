//! Monte Carlo check of the propagated uncertainty: repeat a noisy
//! measurement of one coefficient with many seeds and compare the spread
//! with the mean reported sigma, then sweep the repetition count.
//!
//!     cargo run --release --example shot_noise_scaling

use haarsense::protocol::{run_sparse_haar, MeasurementOptions};
use haarsense::signals::{generate, SignalSpec};
use haarsense::spinsim::{Readout, SensorParams};
use haarsense::wavelet::DyadicIndex;

fn spread(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn main() -> haarsense::Result<()> {
    let duration = 64.0;
    let signal = generate(
        &SignalSpec::Sinusoid { amplitude_ut: 0.05, period_us: duration, phase_rad: 0.0 },
        duration,
        1024,
    )?;
    let params = SensorParams::default();
    let idx = DyadicIndex::new(3, 1)?;
    let trials = 400;

    println!("        M   empirical_uT  propagated_uT  ratio");
    let mut points = Vec::new();
    for k in 0..8 {
        let m = 20_000u64 << k;
        let mut values = Vec::with_capacity(trials);
        let mut sigma = 0.0;
        // The reported sigma is itself estimated from noisy counts; average it.
        for seed in 0..trials as u64 {
            let options = MeasurementOptions::new(Readout::Shots(m), seed);
            let c = run_sparse_haar(&signal, &params, &[3], &options)?.get(idx)?;
            values.push(c.value);
            sigma += c.sigma / trials as f64;
        }
        let emp = spread(&values);
        println!("{m:9}   {emp:.6}       {sigma:.6}       {:.3}", emp / sigma);
        points.push(((m as f64).ln(), emp.ln()));
    }

    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let slope = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / points.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();
    println!("log-log slope of sigma against M: {slope:.3}");
    Ok(())
}
