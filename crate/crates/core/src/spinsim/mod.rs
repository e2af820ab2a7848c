//! Two-level spin sensor model.
//!
//! A pulse sequence is described by its filter function, the `+1/-1/0`
//! weight it applies to the field inside the phase integral. The spin picks
//! up `phi = gamma * integral(b(t) * filter(t) dt)`, which the final pi/2
//! pulse (on the quadrature axis) maps to an optical contrast proportional
//! to `sin(phi)`.
//!
//! Units: time in microseconds, field in microtesla, `gamma` in
//! rad s^-1 T^-1. [`SensorParams::gamma_ut_us`] gives the phase rate per
//! microtesla-microsecond.

mod calibration;
mod readout;

pub use calibration::{calibrate, CalibrationCurve};
pub use readout::{
    estimate_contrast, estimate_phase, estimate_phase_with_visibility, ideal_phase,
    measurement_rng, simulate_counts, simulate_readout, MeasurementOutcome, PhaseEstimate,
    Readout,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::SampledSignal;
use crate::wavelet::walsh_value;

/// Electron gyromagnetic ratio in rad s^-1 T^-1.
pub const ELECTRON_GAMMA: f64 = 1.760_859_6e11;

/// rad s^-1 T^-1 times microtesla times microsecond.
const UT_US: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorParams {
    /// rad s^-1 T^-1.
    pub gamma: f64,
    pub t2_us: f64,
    pub t2_star_us: f64,
    /// Spin-state visibility in `(0, 1]`.
    pub contrast_amplitude: f64,
    /// Mean detected photons per readout in the bright state.
    pub photons_bright: f64,
    /// Mean detected photons per readout in the dark state.
    pub photons_dark: f64,
    /// Stretched-exponential exponent of the echo envelope.
    pub decoherence_exponent: f64,
    /// Exponent of the free-precession envelope.
    pub ramsey_exponent: f64,
    /// Contrast multiplier per pi pulse.
    pub pi_pulse_fidelity: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            gamma: ELECTRON_GAMMA,
            t2_us: 300.0,
            t2_star_us: 3.0,
            contrast_amplitude: 1.0,
            photons_bright: 0.03,
            photons_dark: 0.02,
            decoherence_exponent: 3.0,
            ramsey_exponent: 2.0,
            pi_pulse_fidelity: 1.0,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("sensor: {what}")));
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive");
        }
        if !(self.t2_star_us > 0.0 && self.t2_us > self.t2_star_us && self.t2_us.is_finite()) {
            return bad("need t2 > t2_star > 0");
        }
        if !(self.contrast_amplitude > 0.0 && self.contrast_amplitude <= 1.0) {
            return bad("contrast_amplitude must lie in (0, 1]");
        }
        if !(self.photons_dark >= 0.0 && self.photons_bright.is_finite()) {
            return bad("photon rates must be finite and non-negative");
        }
        if !(self.decoherence_exponent >= 1.0 && self.ramsey_exponent >= 1.0) {
            return bad("decoherence exponents must be >= 1");
        }
        if !(self.pi_pulse_fidelity > 0.0 && self.pi_pulse_fidelity <= 1.0) {
            return bad("pi_pulse_fidelity must lie in (0, 1]");
        }
        Ok(())
    }

    /// Phase per microtesla-microsecond.
    pub fn gamma_ut_us(&self) -> f64 {
        self.gamma * UT_US
    }

    /// Echo coherence envelope `exp(-(tau/T2)^p)`.
    pub fn echo_decay(&self, tau_us: f64) -> f64 {
        (-(tau_us / self.t2_us).powf(self.decoherence_exponent)).exp()
    }

    /// Free-precession envelope `exp(-(tau/T2*)^p*)`.
    pub fn ramsey_decay(&self, tau_us: f64) -> f64 {
        (-(tau_us / self.t2_star_us).powf(self.ramsey_exponent)).exp()
    }

    /// Contrast scale `C0 * D` for a sequence: the largest contrast it can
    /// produce.
    pub fn visibility(&self, seq: &dyn FilterFunction) -> f64 {
        let (start, end) = seq.window();
        let duration = end - start;
        let envelope = if seq.pi_pulses() == 0 {
            self.ramsey_decay(duration)
        } else {
            self.echo_decay(duration)
        };
        self.contrast_amplitude * envelope * self.pi_pulse_fidelity.powf(seq.pi_pulses() as f64)
    }
}

/// Temporal weight a pulse sequence applies to the field.
pub trait FilterFunction: Sync {
    /// Weight at time `t_us`: +1, -1, or 0 outside the sequence.
    fn weight(&self, t_us: f64) -> f64;
    /// `[start, end)` in microseconds.
    fn window(&self) -> (f64, f64);
    /// Shortest interval between sign changes, in microseconds.
    fn shortest_segment(&self) -> f64;
    fn pi_pulses(&self) -> u64;
}

/// Hahn echo: free evolution, pi pulse at the midpoint, free evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoSequence {
    pub start_us: f64,
    /// Total echo duration.
    pub tau_us: f64,
}

impl EchoSequence {
    pub fn new(start_us: f64, tau_us: f64) -> Result<Self> {
        if !(start_us >= 0.0 && tau_us > 0.0 && (start_us + tau_us).is_finite()) {
            return Err(Error::Bounds(format!(
                "echo start {start_us} us, tau {tau_us} us"
            )));
        }
        Ok(Self { start_us, tau_us })
    }
}

impl FilterFunction for EchoSequence {
    fn weight(&self, t: f64) -> f64 {
        let mid = self.start_us + 0.5 * self.tau_us;
        if t >= self.start_us && t < mid {
            1.0
        } else if t >= mid && t < self.start_us + self.tau_us {
            -1.0
        } else {
            0.0
        }
    }

    fn window(&self) -> (f64, f64) {
        (self.start_us, self.start_us + self.tau_us)
    }

    fn shortest_segment(&self) -> f64 {
        0.5 * self.tau_us
    }

    fn pi_pulses(&self) -> u64 {
        1
    }
}

/// Ramsey free precession: filter identically +1 over the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreePrecession {
    pub start_us: f64,
    pub tau_us: f64,
}

impl FilterFunction for FreePrecession {
    fn weight(&self, t: f64) -> f64 {
        if t >= self.start_us && t < self.start_us + self.tau_us {
            1.0
        } else {
            0.0
        }
    }

    fn window(&self) -> (f64, f64) {
        (self.start_us, self.start_us + self.tau_us)
    }

    fn shortest_segment(&self) -> f64 {
        self.tau_us
    }

    fn pi_pulses(&self) -> u64 {
        0
    }
}

/// Multi-pulse sequence whose filter is the sequency-ordered Walsh function
/// `w_index` stretched over `[0, duration)`. Resolution is limited by the
/// order `n` of the Walsh family it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalshSequence {
    pub index: u64,
    pub order: u32,
    pub duration_us: f64,
}

impl FilterFunction for WalshSequence {
    fn weight(&self, t: f64) -> f64 {
        if t >= 0.0 && t < self.duration_us {
            walsh_value(self.index, t / self.duration_us)
        } else {
            0.0
        }
    }

    fn window(&self) -> (f64, f64) {
        (0.0, self.duration_us)
    }

    fn shortest_segment(&self) -> f64 {
        self.duration_us / (1u64 << self.order) as f64
    }

    fn pi_pulses(&self) -> u64 {
        self.index
    }
}

/// Filter value of an echo at `t` (+1, -1 or 0).
pub fn filter_function(seq: &EchoSequence, t_us: f64) -> f64 {
    seq.weight(t_us)
}

/// `gamma * integral(b(t) filter(t) dt)` by the midpoint rule on the
/// signal grid, in radians.
pub fn accumulate_phase(
    signal: &SampledSignal,
    seq: &dyn FilterFunction,
    params: &SensorParams,
) -> Result<f64> {
    Ok(params.gamma_ut_us() * filtered_area(signal, seq)?)
}

/// `integral(b(t) filter(t) dt)` in microtesla-microseconds.
pub fn filtered_area(signal: &SampledSignal, seq: &dyn FilterFunction) -> Result<f64> {
    let (start, end) = seq.window();
    let duration = signal.duration_us();
    let slack = 1e-9 * duration;
    if start < -slack || end > duration + slack {
        return Err(Error::Bounds(format!(
            "sequence [{start}, {end}) us outside signal [0, {duration}) us"
        )));
    }
    let dt = signal.dt_us();
    if seq.shortest_segment() < 2.0 * dt * (1.0 - 1e-9) {
        return Err(Error::InsufficientResolution(format!(
            "segment of {} us holds fewer than 2 samples of {dt} us",
            seq.shortest_segment()
        )));
    }
    let first = ((start / dt).floor().max(0.0)) as usize;
    let last = ((end / dt).ceil() as usize).min(signal.len());
    // Sum each sign separately so a constant field cancels exactly.
    let (mut positive, mut negative) = (0.0, 0.0);
    for k in first..last {
        let w = seq.weight(signal.time_us(k));
        if w > 0.0 {
            positive += signal.samples()[k];
        } else if w < 0.0 {
            negative += signal.samples()[k];
        }
    }
    Ok((positive - negative) * dt)
}

/// Optical contrast of an echo of length `tau_us` that accumulated `phi`:
/// `C0 sin(phi) exp(-(tau/T2)^p)`.
pub fn contrast_of_phase(phi: f64, tau_us: f64, params: &SensorParams) -> f64 {
    params.contrast_amplitude * phi.sin() * params.echo_decay(tau_us)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{generate, SignalSpec};
    use std::f64::consts::PI;

    fn params() -> SensorParams {
        SensorParams::default()
    }

    #[test]
    fn filter_signs() {
        let e = EchoSequence::new(2.0, 4.0).unwrap();
        assert_eq!(filter_function(&e, 3.999_999), 1.0);
        assert_eq!(filter_function(&e, 4.000_001), -1.0);
        assert_eq!(filter_function(&e, 1.0), 0.0);
        assert_eq!(filter_function(&e, 6.0), 0.0);
    }

    #[test]
    fn filter_integrates_to_zero() {
        let e = EchoSequence::new(0.0, 8.0).unwrap();
        let one = SampledSignal::new(8.0, vec![1.0; 1024]).unwrap();
        assert_eq!(filtered_area(&one, &e).unwrap(), 0.0);
    }

    #[test]
    fn echo_rejects_static_field() {
        let s = SampledSignal::new(16.0, vec![3.7; 256]).unwrap();
        for (start, tau) in [(0.0, 16.0), (4.0, 8.0), (2.0, 1.0)] {
            let e = EchoSequence::new(start, tau).unwrap();
            assert_eq!(accumulate_phase(&s, &e, &params()).unwrap(), 0.0);
        }
    }

    #[test]
    fn in_phase_sinusoid_response() {
        // Closed form: gamma A (int_0^{tau/2} sin - int_{tau/2}^tau sin) = 2 gamma A tau / pi.
        let tau = 10.0;
        let amp = 0.05;
        let s = generate(
            &SignalSpec::Sinusoid {
                amplitude_ut: amp,
                period_us: tau,
                phase_rad: 0.0,
            },
            tau,
            1 << 14,
        )
        .unwrap();
        let e = EchoSequence::new(0.0, tau).unwrap();
        let phi = accumulate_phase(&s, &e, &params()).unwrap();
        let expected = 2.0 * params().gamma_ut_us() * amp * tau / PI;
        assert!(((phi - expected) / expected).abs() < 1e-7);
    }

    #[test]
    fn haar_shaped_field_phase() {
        // Unit-coefficient h_3^1 on T = 16 us: +2 on [4,6), -2 on [6,8).
        let t = 16.0;
        let k_total = 256;
        let samples = (0..k_total)
            .map(|k| {
                let x = (k as f64 + 0.5) / k_total as f64;
                if (0.25..0.375).contains(&x) {
                    2.0
                } else if (0.375..0.5).contains(&x) {
                    -2.0
                } else {
                    0.0
                }
            })
            .collect();
        let s = SampledSignal::new(t, samples).unwrap();
        let tau3 = t / 4.0;
        let e = EchoSequence::new(tau3, tau3).unwrap();
        let phi = accumulate_phase(&s, &e, &params()).unwrap();
        let expected = params().gamma_ut_us() * tau3 * 2.0;
        assert!((phi - expected).abs() < 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn bounds_and_resolution_errors() {
        let s = SampledSignal::new(10.0, vec![0.0; 10]).unwrap();
        let outside = EchoSequence::new(8.0, 4.0).unwrap();
        assert!(matches!(
            accumulate_phase(&s, &outside, &params()),
            Err(Error::Bounds(_))
        ));
        let coarse = EchoSequence::new(0.0, 2.0).unwrap();
        assert!(matches!(
            accumulate_phase(&s, &coarse, &params()),
            Err(Error::InsufficientResolution(_))
        ));
    }

    #[test]
    fn contrast_examples() {
        let p = params();
        assert_eq!(contrast_of_phase(0.0, 10.0, &p), 0.0);
        assert!((contrast_of_phase(PI / 2.0, 1e-3, &p) - p.contrast_amplitude).abs() < 1e-9);
        let q = SensorParams {
            contrast_amplitude: 0.3,
            ..params()
        };
        // Reference value from a separate evaluation: 0.3 * sin(0.3) * e^-1.
        let expected = 0.3 * 0.295_520_206_661_339_6 * 0.367_879_441_171_442_33;
        assert!((contrast_of_phase(0.3, q.t2_us, &q) - expected).abs() < 1e-15);
    }

    #[test]
    fn contrast_non_increasing_in_tau() {
        let p = params();
        let mut last = f64::INFINITY;
        for k in 0..200 {
            let c = contrast_of_phase(0.7, k as f64 * 5.0, &p).abs();
            assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn walsh_sequence_filter() {
        let w = WalshSequence {
            index: 1,
            order: 2,
            duration_us: 8.0,
        };
        assert_eq!(w.weight(1.0), 1.0);
        assert_eq!(w.weight(5.0), -1.0);
        assert_eq!(w.weight(9.0), 0.0);
        assert_eq!(w.shortest_segment(), 2.0);
    }

    #[test]
    fn default_params_validate() {
        params().validate().unwrap();
        let bad = SensorParams {
            t2_star_us: 400.0,
            ..params()
        };
        assert!(bad.validate().is_err());
    }
}
