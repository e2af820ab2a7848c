//! Sensing protocols over a simulated sensor.
//!
//! The Haar protocol measures coefficient `c_i^j` with a Hahn echo of
//! length `tau_i = T / 2^(i-1)` starting at `j tau_i`; its filter is the
//! wavelet `h_i^j` up to the factor `2^((i-1)/2)`, so
//! `phi = gamma T 2^(-(i-1)/2) c_i^j`. All echoes of one order tile the
//! signal window and fit into a single pass of the signal. The Walsh
//! baseline needs one full-length multi-pulse sequence per coefficient; the
//! Ramsey baseline measures `N` consecutive free-precession windows.

mod detect;
mod plan;

pub use detect::{detect_events, DetectedEvent, EventDetection, EventDetector};
pub use plan::{
    order_runs, plan_haar, plan_haar_orders, plan_ramsey, plan_walsh, run_budget, window_runs,
    PlannedSequence, ProtocolPlan, RunBudget, SignalRun,
};

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::SampledSignal;
use crate::spinsim::{
    accumulate_phase, estimate_phase_with_visibility, ideal_phase, measurement_rng,
    simulate_counts, FilterFunction, FreePrecession, PhaseEstimate, Readout, SensorParams,
};
use crate::wavelet::{
    Coefficient, DyadicIndex, HaarCoefficients, HaarLevel, Reconstruction, WalshSpectrum,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Haar,
    Walsh,
    Ramsey,
}

/// Constant relating an echo phase to a Haar coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `c = 2^(-(i-1)/2) phi / (gamma tau_i)`, from the coefficient
    /// integral and the echo filter.
    #[default]
    Integral,
    /// `c = 2^(-(i+1)/2) pi phi / (gamma tau_i)`: the integral form times
    /// `pi/2`.
    Paper,
}

impl Convention {
    pub fn factor(&self) -> f64 {
        match self {
            Convention::Integral => 1.0,
            Convention::Paper => PI / 2.0,
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Integral => "integral",
            Convention::Paper => "paper",
        })
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integral" => Ok(Convention::Integral),
            "paper" => Ok(Convention::Paper),
            other => Err(Error::Config(format!(
                "unknown convention `{other}` (expected `integral` or `paper`)"
            ))),
        }
    }
}

/// How the mean `c0` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanSource {
    /// One free-precession run over the whole window (decays with T2*).
    #[default]
    Ramsey,
    /// Supplied by the caller.
    External(Coefficient),
    /// Not measured; `c0 = 0`.
    None,
}

/// Settings shared by every protocol run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOptions {
    pub readout: Readout,
    pub seed: u64,
    pub convention: Convention,
    pub mean: MeanSource,
    /// Simulate independent measurements on the rayon pool. Results are
    /// identical either way.
    pub parallel: bool,
}

impl MeasurementOptions {
    pub fn new(readout: Readout, seed: u64) -> Self {
        Self {
            readout,
            seed,
            convention: Convention::Integral,
            mean: MeanSource::Ramsey,
            parallel: true,
        }
    }

    pub fn ideal() -> Self {
        Self::new(Readout::Ideal, 0)
    }

    pub fn with_convention(mut self, convention: Convention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_mean(mut self, mean: MeanSource) -> Self {
        self.mean = mean;
        self
    }

    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }
}

/// Where a reconstruction came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub protocol: ProtocolKind,
    /// `None` for an ideal (noiseless) readout.
    pub repetitions: Option<u64>,
    pub seed: u64,
    pub convention: Convention,
    pub orders: Vec<u32>,
}

impl Provenance {
    pub fn new(protocol: ProtocolKind, options: &MeasurementOptions, orders: Vec<u32>) -> Self {
        Self {
            protocol,
            repetitions: options.readout.repetitions(),
            seed: options.seed,
            convention: options.convention,
            orders,
        }
    }
}

/// Haar coefficient from the phase of its echo.
///
/// `gamma` is in rad s^-1 T^-1, `tau_us` in microseconds; the result is in
/// microtesla.
pub fn phase_to_coefficient(phi: f64, order: u32, tau_us: f64, gamma: f64, convention: Convention) -> f64 {
    let gamma_ut_us = gamma * 1e-12;
    convention.factor() * 2f64.powf(-(f64::from(order) - 1.0) / 2.0) * phi / (gamma_ut_us * tau_us)
}

/// Phase estimate for one sequence; `stream` selects its random stream.
fn measure(
    signal: &SampledSignal,
    params: &SensorParams,
    seq: &dyn FilterFunction,
    options: &MeasurementOptions,
    stream: u64,
) -> Result<PhaseEstimate> {
    let phi = accumulate_phase(signal, seq, params)?;
    let visibility = params.visibility(seq);
    match options.readout {
        Readout::Ideal => ideal_phase(phi, visibility),
        Readout::Shots(m) => {
            if phi.abs() >= FRAC_PI_2 {
                return Err(Error::PhaseWrap {
                    reason: format!("phase {phi:.4} rad beyond the invertible branch"),
                    location: None,
                });
            }
            let mut rng = measurement_rng(options.seed, stream);
            let outcome = simulate_counts(phi, visibility, params, m, &mut rng);
            estimate_phase_with_visibility(&outcome, visibility, params)
        }
    }
}

fn map_measurements<T, F>(count: usize, parallel: bool, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if parallel {
        (0..count).into_par_iter().map(f).collect()
    } else {
        (0..count).map(f).collect()
    }
}

fn check_readout(readout: Readout) -> Result<()> {
    if readout == Readout::Shots(0) {
        return Err(Error::Config("repetitions must be >= 1".into()));
    }
    Ok(())
}

fn measure_mean(
    signal: &SampledSignal,
    params: &SensorParams,
    options: &MeasurementOptions,
) -> Result<Coefficient> {
    match options.mean {
        MeanSource::None => Ok(Coefficient::default()),
        MeanSource::External(c) => Ok(c),
        MeanSource::Ramsey => {
            let duration = signal.duration_us();
            let seq = FreePrecession {
                start_us: 0.0,
                tau_us: duration,
            };
            let est = measure(signal, params, &seq, options, 0).map_err(|e| e.at("mean run"))?;
            let scale = 1.0 / (params.gamma_ut_us() * duration);
            Ok(Coefficient {
                value: est.phi * scale,
                sigma: est.sigma * scale,
            })
        }
    }
}

/// Measure the listed Haar orders. Unlisted orders below the maximum are
/// left as unmeasured zero levels.
fn measure_haar_orders(
    signal: &SampledSignal,
    params: &SensorParams,
    orders: &[u32],
    options: &MeasurementOptions,
) -> Result<HaarCoefficients> {
    params.validate()?;
    check_readout(options.readout)?;
    // Validates the order set and the window geometry.
    let plan = plan_haar_orders(orders, false, signal.duration_us(), 1, 0.0)?;
    let max_order = plan.order;

    let echoes: Vec<(DyadicIndex, crate::spinsim::EchoSequence)> = plan
        .runs
        .iter()
        .flat_map(|r| r.sequences.iter())
        .filter_map(|s| match s {
            PlannedSequence::Haar { index, echo } => Some((*index, *echo)),
            _ => None,
        })
        .collect();

    let measured = map_measurements(echoes.len(), options.parallel, |k| {
        let (index, echo) = echoes[k];
        // Streams 1.. are Haar measurements, stream 0 is the mean run.
        let stream = DyadicIndex::count(index.order()) + index.shift();
        let est = measure(signal, params, &echo, options, stream).map_err(|e| {
            e.at(format!("h_{}^{}", index.order(), index.shift()))
        })?;
        let scale = phase_to_coefficient(1.0, index.order(), echo.tau_us, params.gamma, options.convention);
        Ok((
            index,
            Coefficient {
                value: est.phi * scale,
                sigma: est.sigma * scale.abs(),
            },
        ))
    })?;

    let mut levels: Vec<HaarLevel> = (1..=max_order)
        .map(|i| HaarLevel {
            coefficients: vec![Coefficient::default(); DyadicIndex::count(i) as usize],
            measured: orders.contains(&i),
        })
        .collect();
    for (index, c) in measured {
        levels[index.order() as usize - 1].coefficients[index.shift() as usize] = c;
    }
    let mean = measure_mean(signal, params, options)?;
    HaarCoefficients::new(mean, levels)
}

/// Haar coefficients up to order `n` from echo measurements, with `c0`
/// taken from `options.mean`.
pub fn run_haar_protocol(
    signal: &SampledSignal,
    params: &SensorParams,
    n: u32,
    options: &MeasurementOptions,
) -> Result<HaarCoefficients> {
    if n == 0 {
        return Err(Error::Config("Haar order must be >= 1".into()));
    }
    let orders: Vec<u32> = (1..=n).collect();
    measure_haar_orders(signal, params, &orders, options)
}

/// Measure only `orders`; the mean is not measured and reconstructions use
/// `c0 = 0`.
pub fn run_sparse_haar(
    signal: &SampledSignal,
    params: &SensorParams,
    orders: &[u32],
    options: &MeasurementOptions,
) -> Result<HaarCoefficients> {
    if orders.is_empty() {
        return Err(Error::Config("sparse Haar needs at least one order".into()));
    }
    let options = options.with_mean(MeanSource::None);
    measure_haar_orders(signal, params, orders, &options)
}

/// Walsh coefficients `W_m = phi_m / (gamma T)` from one full-length
/// sequence per index.
pub fn run_walsh_protocol(
    signal: &SampledSignal,
    params: &SensorParams,
    n: u32,
    options: &MeasurementOptions,
) -> Result<(WalshSpectrum, RunBudget)> {
    params.validate()?;
    check_readout(options.readout)?;
    let duration = signal.duration_us();
    let plan = plan_walsh(n, duration, options.readout.repetitions().unwrap_or(1), 0.0)?;
    let sequences: Vec<crate::spinsim::WalshSequence> = plan
        .runs
        .iter()
        .flat_map(|r| r.sequences.iter())
        .filter_map(|s| match s {
            PlannedSequence::Walsh(w) => Some(*w),
            _ => None,
        })
        .collect();
    let scale = 1.0 / (params.gamma_ut_us() * duration);
    let estimates = map_measurements(sequences.len(), options.parallel, |k| {
        let seq = sequences[k];
        measure(signal, params, &seq, options, seq.index).map_err(|e| e.at(format!("w_{}", seq.index)))
    })?;
    let spectrum = WalshSpectrum::new(
        n,
        estimates.iter().map(|e| e.phi * scale).collect(),
        estimates.iter().map(|e| e.sigma * scale).collect(),
    )?;
    Ok((spectrum, run_budget(&plan)))
}

/// Sequential Ramsey reconstruction: `points` free-precession windows of
/// `T / points`, each giving the window-averaged field.
pub fn run_ramsey_protocol(
    signal: &SampledSignal,
    params: &SensorParams,
    points: usize,
    options: &MeasurementOptions,
) -> Result<Reconstruction> {
    params.validate()?;
    check_readout(options.readout)?;
    let duration = signal.duration_us();
    let plan = plan_ramsey(points, duration, 1, 0.0)?;
    let tau = duration / points as f64;
    let ratio = tau / params.t2_star_us;
    if !(0.1..=10.0).contains(&ratio) {
        log::warn!("Ramsey window {tau} us is {ratio:.3} x T2*; sensitivity will be poor");
    }
    let scale = 1.0 / (params.gamma_ut_us() * tau);
    let estimates = map_measurements(points, options.parallel, |k| {
        let seq = FreePrecession {
            start_us: k as f64 * tau,
            tau_us: tau,
        };
        measure(signal, params, &seq, options, k as u64).map_err(|e| e.at(format!("point {k}")))
    })?;
    let recon = Reconstruction::new(
        plan.order,
        estimates.iter().map(|e| e.phi * scale).collect(),
        estimates.iter().map(|e| e.sigma * scale).collect(),
    )?;
    Ok(recon.with_provenance(Provenance::new(ProtocolKind::Ramsey, options, vec![])))
}
