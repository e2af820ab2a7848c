use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::SensorParams;
use crate::error::{Error, Result};

/// How a phase is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Exact contrast, no shot noise (the `M -> infinity` limit).
    Ideal,
    /// Photon counting accumulated over this many repetitions.
    Shots(u64),
}

impl Readout {
    pub fn repetitions(&self) -> Option<u64> {
        match self {
            Readout::Ideal => None,
            Readout::Shots(m) => Some(*m),
        }
    }
}

/// Photon counts accumulated over `repetitions` shots of one sequence,
/// together with its bright and dark references.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub repetitions: u64,
    pub signal_counts: u64,
    pub reference_bright_counts: u64,
    pub reference_dark_counts: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    pub phi: f64,
    pub sigma: f64,
}

/// Random stream for measurement number `stream` under `seed`.
///
/// Every measurement draws from its own ChaCha8 stream, so results do not
/// depend on the order (or thread) in which measurements are simulated.
pub fn measurement_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as u64
}

/// Draw counts for `repetitions` shots at phase `phi`.
///
/// The bright-state probability is `(1 + visibility * sin(phi)) / 2`; each
/// shot detects a Poisson number of photons with mean interpolated between
/// the dark and bright rates. Sums of Poisson variables are Poisson, so the
/// totals are drawn directly.
pub fn simulate_counts<R: Rng + ?Sized>(
    phi: f64,
    visibility: f64,
    params: &SensorParams,
    repetitions: u64,
    rng: &mut R,
) -> MeasurementOutcome {
    let m = repetitions as f64;
    let p_bright = 0.5 * (1.0 + visibility * phi.sin());
    let rate = params.photons_dark + (params.photons_bright - params.photons_dark) * p_bright;
    MeasurementOutcome {
        repetitions,
        signal_counts: poisson(rng, m * rate),
        reference_bright_counts: poisson(rng, m * params.photons_bright),
        reference_dark_counts: poisson(rng, m * params.photons_dark),
    }
}

/// Shot-noise readout of a single echo of length `tau_us`.
pub fn simulate_readout(
    phi: f64,
    tau_us: f64,
    params: &SensorParams,
    repetitions: u64,
    seed: u64,
) -> Result<MeasurementOutcome> {
    if repetitions == 0 {
        return Err(Error::Config("repetitions must be >= 1".into()));
    }
    let visibility = echo_visibility(tau_us, params);
    let mut rng = measurement_rng(seed, 0);
    Ok(simulate_counts(phi, visibility, params, repetitions, &mut rng))
}

fn echo_visibility(tau_us: f64, params: &SensorParams) -> f64 {
    params.contrast_amplitude * params.echo_decay(tau_us) * params.pi_pulse_fidelity
}

/// Contrast estimate `(2S - B - D) / (B - D)` and its first-order
/// Poisson uncertainty.
pub fn estimate_contrast(outcome: &MeasurementOutcome, params: &SensorParams) -> Result<(f64, f64)> {
    if !(params.photons_bright > params.photons_dark) {
        return Err(Error::DegenerateReference(format!(
            "bright rate {} does not exceed dark rate {}",
            params.photons_bright, params.photons_dark
        )));
    }
    let s = outcome.signal_counts as f64;
    let b = outcome.reference_bright_counts as f64;
    let d = outcome.reference_dark_counts as f64;
    if b <= d {
        return Err(Error::DegenerateReference(format!(
            "bright counts {b} do not exceed dark counts {d}"
        )));
    }
    let span = b - d;
    let c = (2.0 * s - b - d) / span;
    let var = (4.0 * s + (1.0 + c).powi(2) * b + (1.0 - c).powi(2) * d) / (span * span);
    Ok((c, var.sqrt()))
}

/// Invert a shot-noise outcome of an echo of length `tau_us`.
pub fn estimate_phase(
    outcome: &MeasurementOutcome,
    tau_us: f64,
    params: &SensorParams,
) -> Result<PhaseEstimate> {
    estimate_phase_with_visibility(outcome, echo_visibility(tau_us, params), params)
}

/// Invert a shot-noise outcome given the sequence's contrast scale.
///
/// `phi = asin(C / visibility)`. Normalized contrasts beyond +-1 by less
/// than three standard deviations are clamped to +-pi/2; larger excursions
/// are refused as phase wraps. The uncertainty is the first-order
/// propagation through the arcsine, with the slope floored near the branch
/// ends where the linearization breaks down.
pub fn estimate_phase_with_visibility(
    outcome: &MeasurementOutcome,
    visibility: f64,
    params: &SensorParams,
) -> Result<PhaseEstimate> {
    if !(visibility > 0.0) {
        return Err(Error::DegenerateReference(format!(
            "sequence visibility {visibility} is not positive"
        )));
    }
    let (c, sigma_c) = estimate_contrast(outcome, params)?;
    let r = c / visibility;
    let sigma_r = sigma_c / visibility;
    if r.abs() > 1.0 + 3.0 * sigma_r {
        return Err(Error::PhaseWrap {
            reason: format!("normalized contrast {r:.4} outside [-1, 1]"),
            location: None,
        });
    }
    let r_clamped = r.clamp(-1.0, 1.0);
    let slope_floor = 2.0 * sigma_r;
    let sigma = sigma_r / (1.0 - r_clamped * r_clamped).max(slope_floor).sqrt();
    Ok(PhaseEstimate {
        phi: r_clamped.asin(),
        sigma,
    })
}

/// Noiseless readout: invert the exact contrast.
///
/// Phases outside `(-pi/2, pi/2)` cannot be distinguished from their
/// mirror images by a sine readout and are refused.
pub fn ideal_phase(phi: f64, visibility: f64) -> Result<PhaseEstimate> {
    if phi.abs() >= FRAC_PI_2 {
        return Err(Error::PhaseWrap {
            reason: format!("phase {phi:.4} rad beyond the invertible branch"),
            location: None,
        });
    }
    if !(visibility > 0.0) {
        return Err(Error::DegenerateReference(format!(
            "sequence visibility {visibility} is not positive"
        )));
    }
    let contrast = visibility * phi.sin();
    Ok(PhaseEstimate {
        phi: (contrast / visibility).clamp(-1.0, 1.0).asin(),
        sigma: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SensorParams {
        SensorParams::default()
    }

    /// Counts equal to their expectations, with a large M to keep them
    /// integral enough for an exact inversion.
    fn expected_counts(phi: f64, visibility: f64, p: &SensorParams) -> MeasurementOutcome {
        // Rates chosen so every expectation is an integer.
        let m = 1u64 << 40;
        let p_bright = 0.5 * (1.0 + visibility * phi.sin());
        let rate = p.photons_dark + (p.photons_bright - p.photons_dark) * p_bright;
        MeasurementOutcome {
            repetitions: m,
            signal_counts: (m as f64 * rate).round() as u64,
            reference_bright_counts: (m as f64 * p.photons_bright).round() as u64,
            reference_dark_counts: (m as f64 * p.photons_dark).round() as u64,
        }
    }

    #[test]
    fn noiseless_counts_invert_exactly() {
        let p = SensorParams {
            photons_bright: 1.0,
            photons_dark: 0.0,
            ..params()
        };
        let out = expected_counts(0.2, 1.0, &p);
        let est = estimate_phase_with_visibility(&out, 1.0, &p).unwrap();
        assert!((est.phi - 0.2).abs() < 1e-12, "{}", est.phi);
    }

    #[test]
    fn excessive_contrast_is_phase_wrap() {
        let p = SensorParams {
            photons_bright: 1.0,
            photons_dark: 0.0,
            ..params()
        };
        // Normalized contrast 1.2 with negligible noise.
        let m = 1u64 << 40;
        let out = MeasurementOutcome {
            repetitions: m,
            signal_counts: (m as f64 * 1.1) as u64,
            reference_bright_counts: m,
            reference_dark_counts: 0,
        };
        assert!(matches!(
            estimate_phase_with_visibility(&out, 1.0, &p),
            Err(Error::PhaseWrap { .. })
        ));
        let (c, _) = estimate_contrast(&out, &p).unwrap();
        assert!((c - 1.2).abs() < 1e-9);
    }

    #[test]
    fn equal_rates_are_degenerate() {
        let p = SensorParams {
            photons_bright: 0.02,
            photons_dark: 0.02,
            ..params()
        };
        let out = simulate_readout(0.1, 10.0, &p, 1000, 3).unwrap();
        assert!(matches!(
            estimate_phase(&out, 10.0, &p),
            Err(Error::DegenerateReference(_))
        ));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let a = simulate_readout(0.3, 10.0, &params(), 100_000, 42).unwrap();
        let b = simulate_readout(0.3, 10.0, &params(), 100_000, 42).unwrap();
        let c = simulate_readout(0.3, 10.0, &params(), 100_000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_phase_contrast_converges_to_zero() {
        let p = params();
        let out = simulate_readout(0.0, 10.0, &p, 10_000_000, 5).unwrap();
        let (c, sigma) = estimate_contrast(&out, &p).unwrap();
        assert!(c.abs() < 3.0 * sigma, "c = {c}, sigma = {sigma}");
        assert!(sigma < 0.02);
    }

    #[test]
    fn reported_sigma_matches_spread() {
        // Repeat-simulation oracle at phi = 0.3, M = 1e5.
        let p = params();
        let tau = 10.0;
        let trials = 4000;
        let mut phis = Vec::with_capacity(trials);
        let mut sigmas = Vec::with_capacity(trials);
        for t in 0..trials {
            let out = simulate_readout(0.3, tau, &p, 100_000, 1000 + t as u64).unwrap();
            let est = estimate_phase(&out, tau, &p).unwrap();
            phis.push(est.phi);
            sigmas.push(est.sigma);
        }
        let mean = phis.iter().sum::<f64>() / trials as f64;
        let std = (phis.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
        let reported = sigmas.iter().sum::<f64>() / trials as f64;
        assert!(((std - reported) / reported).abs() < 0.10, "std {std} vs {reported}");
    }

    #[test]
    fn ideal_readout_refuses_wrapped_phase() {
        assert!((ideal_phase(0.4, 0.7).unwrap().phi - 0.4).abs() < 1e-15);
        assert!(matches!(ideal_phase(2.0, 1.0), Err(Error::PhaseWrap { .. })));
    }
}
