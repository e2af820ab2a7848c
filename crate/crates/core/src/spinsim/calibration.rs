//! Reference curve of contrast against the amplitude of an in-phase
//! sinusoidal field, and its sinusoidal least-squares fit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::readout::{estimate_contrast, measurement_rng, simulate_counts, Readout};
use super::{accumulate_phase, EchoSequence, SensorParams};
use crate::error::{Error, Result};
use crate::signals::{generate, SignalSpec};

const CALIBRATION_SAMPLES: usize = 16384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub amplitudes_ut: Vec<f64>,
    pub contrasts: Vec<f64>,
    /// Fitted `a` in `a sin(b A) + c`.
    pub scale: f64,
    /// Fitted `b`, radians per microtesla.
    pub frequency: f64,
    pub offset: f64,
    /// Sum of squared residuals of the fit.
    pub residual: f64,
    /// `b` expected from the echo response `phi = 2 gamma A tau / pi`.
    pub predicted_frequency: f64,
    /// `a` expected from the sensor visibility.
    pub predicted_scale: f64,
}

impl CalibrationCurve {
    /// Amplitude period of the fitted sinusoid, in microtesla.
    pub fn period_ut(&self) -> f64 {
        2.0 * PI / self.frequency
    }

    /// Contrast per microtesla at zero amplitude.
    pub fn slope_at_origin(&self) -> f64 {
        self.scale * self.frequency
    }

    pub fn predicted_slope(&self) -> f64 {
        self.predicted_scale * self.predicted_frequency
    }
}

/// Sweep the amplitude of an in-phase sinusoid through an echo of length
/// `tau_us` and fit `C(A) = a sin(b A) + c`.
pub fn calibrate(
    params: &SensorParams,
    tau_us: f64,
    amplitudes_ut: &[f64],
    readout: Readout,
    seed: u64,
) -> Result<CalibrationCurve> {
    params.validate()?;
    if amplitudes_ut.len() < 5 {
        return Err(Error::Config(format!(
            "calibration needs at least 5 amplitudes, got {}",
            amplitudes_ut.len()
        )));
    }
    let echo = EchoSequence::new(0.0, tau_us)?;
    let visibility = params.visibility(&echo);

    let unit = generate(
        &SignalSpec::Sinusoid {
            amplitude_ut: 1.0,
            period_us: tau_us,
            phase_rad: 0.0,
        },
        tau_us,
        CALIBRATION_SAMPLES,
    )?;
    let unit_phase = accumulate_phase(&unit, &echo, params)?;

    let contrasts = amplitudes_ut
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let phi = unit_phase * a;
            match readout {
                Readout::Ideal => Ok(visibility * phi.sin()),
                Readout::Shots(m) => {
                    let mut rng = measurement_rng(seed, k as u64);
                    let out = simulate_counts(phi, visibility, params, m, &mut rng);
                    estimate_contrast(&out, params).map(|(c, _)| c)
                }
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let fit = fit_sinusoid(amplitudes_ut, &contrasts)?;
    Ok(CalibrationCurve {
        amplitudes_ut: amplitudes_ut.to_vec(),
        contrasts,
        scale: fit.scale,
        frequency: fit.frequency,
        offset: fit.offset,
        residual: fit.residual,
        predicted_frequency: 2.0 * params.gamma_ut_us() * tau_us / PI,
        predicted_scale: visibility,
    })
}

#[derive(Debug, Clone, Copy)]
struct SineFit {
    scale: f64,
    frequency: f64,
    offset: f64,
    residual: f64,
}

/// Best `(a, c)` for fixed `b` by linear least squares.
fn linear_part(x: &[f64], y: &[f64], b: f64) -> Option<SineFit> {
    let n = x.len() as f64;
    let (mut ss, mut s, mut sy, mut y_sum) = (0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let v = (b * xi).sin();
        ss += v * v;
        s += v;
        sy += v * yi;
        y_sum += yi;
    }
    let det = ss * n - s * s;
    if det.abs() < 1e-14 * n * n {
        return None;
    }
    let a = (sy * n - s * y_sum) / det;
    let c = (ss * y_sum - s * sy) / det;
    Some(SineFit {
        scale: a,
        frequency: b,
        offset: c,
        residual: rss(x, y, a, b, c),
    })
}

fn rss(x: &[f64], y: &[f64], a: f64, b: f64, c: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| (a * (b * xi).sin() + c - yi).powi(2))
        .sum()
}

/// Variable-projection fit: grid search over `b` with `(a, c)` solved
/// linearly, golden-section refinement, then Gauss-Newton on all three.
fn fit_sinusoid(x: &[f64], y: &[f64]) -> Result<SineFit> {
    let span = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - x.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min_step = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !(span > 0.0 && min_step.is_finite()) {
        return Err(Error::FitFailed {
            residual: f64::INFINITY,
        });
    }
    // From a quarter period across the whole grid up to the Nyquist limit.
    let b_lo = 0.25 * PI / sorted.last().unwrap().abs().max(span);
    let b_hi = PI / min_step;
    let grid = 4000;
    let ratio = (b_hi / b_lo).powf(1.0 / grid as f64);

    let mut best: Option<(usize, SineFit)> = None;
    for k in 0..=grid {
        let b = b_lo * ratio.powi(k as i32);
        if let Some(fit) = linear_part(x, y, b) {
            if best.is_none_or(|(_, f)| fit.residual < f.residual) {
                best = Some((k, fit));
            }
        }
    }
    let (k, _) = best.ok_or(Error::FitFailed {
        residual: f64::INFINITY,
    })?;

    // Golden-section on ln(b) in the bracketing grid cells.
    let profile = |lnb: f64| linear_part(x, y, lnb.exp()).map_or(f64::INFINITY, |f| f.residual);
    let step = ratio.ln();
    let (mut lo, mut hi) = (
        b_lo.ln() + step * (k as f64 - 1.0),
        b_lo.ln() + step * (k as f64 + 1.0),
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut m1, mut m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (profile(m1), profile(m2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - g * (hi - lo);
            f1 = profile(m1);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + g * (hi - lo);
            f2 = profile(m2);
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let mut fit = linear_part(x, y, (0.5 * (lo + hi)).exp()).ok_or(Error::FitFailed {
        residual: f64::INFINITY,
    })?;

    // Gauss-Newton polish on (a, b, c).
    for _ in 0..20 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&xi, &yi) in x.iter().zip(y) {
            let s = (fit.frequency * xi).sin();
            let c = (fit.frequency * xi).cos();
            let r = fit.scale * s + fit.offset - yi;
            let j = [s, fit.scale * xi * c, 1.0];
            for p in 0..3 {
                jtr[p] += j[p] * r;
                for q in 0..3 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        let Some(delta) = solve3(jtj, jtr) else { break };
        let trial = SineFit {
            scale: fit.scale - delta[0],
            frequency: fit.frequency - delta[1],
            offset: fit.offset - delta[2],
            residual: 0.0,
        };
        let residual = rss(x, y, trial.scale, trial.frequency, trial.offset);
        if !(residual < fit.residual) {
            break;
        }
        fit = SineFit { residual, ..trial };
    }

    if !fit.residual.is_finite() || !fit.frequency.is_finite() {
        return Err(Error::FitFailed {
            residual: fit.residual,
        });
    }
    // Report a positive frequency; the sign moves into the scale.
    if fit.frequency < 0.0 {
        fit.frequency = -fit.frequency;
        fit.scale = -fit.scale;
    }
    Ok(fit)
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if !(d.abs() > 0.0) || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut m = a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *slot = det(m) / d;
    }
    Some(out)
}
