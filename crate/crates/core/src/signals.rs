//! Temporal magnetic fields: sinusoids, sampled waveforms and nerve-impulse
//! trains, plus the two-column CSV format used to move them around.
//!
//! Times are in microseconds and fields in microtesla. Samples sit at the
//! midpoints of a uniform grid over `[0, T)`.

use std::f64::consts::PI;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "t_us,b_uT";

/// Uniformly sampled field `b(t)` over `[0, duration)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    duration_us: f64,
    samples: Vec<f64>,
}

impl SampledSignal {
    pub fn new(duration_us: f64, samples: Vec<f64>) -> Result<Self> {
        if !(duration_us.is_finite() && duration_us > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "duration must be positive and finite, got {duration_us}"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidSignal(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample {k} is not finite")));
        }
        Ok(Self {
            duration_us,
            samples,
        })
    }

    pub fn duration_us(&self) -> f64 {
        self.duration_us
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Grid spacing in microseconds.
    pub fn dt_us(&self) -> f64 {
        self.duration_us / self.samples.len() as f64
    }

    /// Midpoint time of sample `k`.
    pub fn time_us(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt_us()
    }

    /// Midpoint of sample `k` on the normalized axis `x = t / T`.
    pub fn normalized_time(&self, k: usize) -> f64 {
        (k as f64 + 0.5) / self.samples.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            duration_us: self.duration_us,
            samples: self.samples.iter().map(|v| v * factor).collect(),
        }
    }

    /// Pointwise sum of two signals on the same grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        if (other.duration_us - self.duration_us).abs() > 1e-12 * self.duration_us {
            return Err(Error::InvalidSignal("durations differ".into()));
        }
        Ok(Self {
            duration_us: self.duration_us,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Average of the samples falling in each of `2^order` dyadic bins.
    /// Requires the sample count to be a multiple of the bin count.
    pub fn block_averages(&self, order: u32) -> Result<Vec<f64>> {
        let bins = 1usize << order;
        if !self.len().is_multiple_of(bins) {
            return Err(Error::InsufficientResolution(format!(
                "{} samples do not split evenly into {bins} bins",
                self.len()
            )));
        }
        let per = self.len() / bins;
        Ok(self
            .samples
            .chunks(per)
            .map(|c| c.iter().sum::<f64>() / per as f64)
            .collect())
    }
}

/// A single nerve impulse in a train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpulseEvent {
    /// Midpoint of the leading lobe.
    pub center_us: f64,
    /// +1 or -1.
    pub polarity: i8,
    pub amplitude_ut: f64,
    pub width_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    /// `A sin(2 pi t / period + phase)`.
    Sinusoid {
        amplitude_ut: f64,
        period_us: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    /// Piecewise-constant waveform given inline or as a CSV file, resampled
    /// onto the requested grid by zero-order hold.
    Waveform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<Vec<f64>>,
    },
    ImpulseTrain { events: Vec<ImpulseEvent> },
}

/// Shape constants of the biphasic impulse template for a given width.
///
/// The template is the time derivative of `exp(-s/tau_f) - exp(-s/tau_r)`
/// for `s >= 0`, with `tau_r = w/5` and `tau_f = w`, scaled so the leading
/// lobe peaks at the event amplitude.
#[derive(Debug, Clone, Copy)]
struct ImpulseShape {
    tau_rise: f64,
    tau_fall: f64,
    zero_crossing: f64,
    peak: f64,
}

impl ImpulseShape {
    fn new(width_us: f64) -> Self {
        let tau_rise = width_us / 5.0;
        let tau_fall = width_us;
        let zero_crossing =
            (tau_fall / tau_rise).ln() * tau_rise * tau_fall / (tau_fall - tau_rise);
        Self {
            tau_rise,
            tau_fall,
            zero_crossing,
            peak: 1.0 / tau_rise - 1.0 / tau_fall,
        }
    }

    /// Unit-peak template at time `s` after onset.
    fn eval(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        let d = (-s / self.tau_rise).exp() / self.tau_rise - (-s / self.tau_fall).exp() / self.tau_fall;
        d / self.peak
    }
}

impl ImpulseEvent {
    fn validate(&self, duration_us: f64) -> Result<()> {
        if !(self.width_us.is_finite() && self.width_us > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "impulse width must be positive, got {}",
                self.width_us
            )));
        }
        if !(self.center_us >= 0.0 && self.center_us < duration_us) {
            return Err(Error::InvalidSignal(format!(
                "impulse center {} outside [0, {duration_us})",
                self.center_us
            )));
        }
        if self.polarity != 1 && self.polarity != -1 {
            return Err(Error::InvalidSignal(format!(
                "impulse polarity must be +1 or -1, got {}",
                self.polarity
            )));
        }
        if !self.amplitude_ut.is_finite() {
            return Err(Error::InvalidSignal("impulse amplitude not finite".into()));
        }
        Ok(())
    }

    /// Time at which the leading lobe starts.
    pub fn onset_us(&self) -> f64 {
        self.center_us - 0.5 * ImpulseShape::new(self.width_us).zero_crossing
    }

    pub fn eval(&self, t_us: f64) -> f64 {
        let shape = ImpulseShape::new(self.width_us);
        let onset = self.center_us - 0.5 * shape.zero_crossing;
        f64::from(self.polarity) * self.amplitude_ut * shape.eval(t_us - onset)
    }
}

impl SignalSpec {
    fn validate(&self, duration_us: f64) -> Result<()> {
        match self {
            SignalSpec::Sinusoid {
                amplitude_ut,
                period_us,
                phase_rad,
            } => {
                if !(*amplitude_ut >= 0.0 && amplitude_ut.is_finite()) {
                    return Err(Error::InvalidSignal(format!(
                        "sinusoid amplitude must be non-negative, got {amplitude_ut}"
                    )));
                }
                if !(*period_us > 0.0 && period_us.is_finite()) {
                    return Err(Error::InvalidSignal(format!(
                        "sinusoid period must be positive, got {period_us}"
                    )));
                }
                if !phase_rad.is_finite() {
                    return Err(Error::InvalidSignal("sinusoid phase not finite".into()));
                }
                Ok(())
            }
            SignalSpec::Waveform { path, samples } => match (path, samples) {
                (Some(_), None) | (None, Some(_)) => Ok(()),
                _ => Err(Error::InvalidSignal(
                    "waveform needs exactly one of `path` or `samples`".into(),
                )),
            },
            SignalSpec::ImpulseTrain { events } => {
                events.iter().try_for_each(|e| e.validate(duration_us))
            }
        }
    }
}

/// Render a signal spec on a midpoint grid of `sample_count` points.
pub fn generate(spec: &SignalSpec, duration_us: f64, sample_count: usize) -> Result<SampledSignal> {
    if !(duration_us.is_finite() && duration_us > 0.0) {
        return Err(Error::InvalidSignal(format!(
            "duration must be positive, got {duration_us}"
        )));
    }
    if sample_count < 2 {
        return Err(Error::InvalidSignal(format!(
            "need at least 2 samples, got {sample_count}"
        )));
    }
    spec.validate(duration_us)?;

    let dt = duration_us / sample_count as f64;
    let times = (0..sample_count).map(|k| (k as f64 + 0.5) * dt);

    let samples: Vec<f64> = match spec {
        SignalSpec::Sinusoid {
            amplitude_ut,
            period_us,
            phase_rad,
        } => times
            .map(|t| amplitude_ut * (2.0 * PI * t / period_us + phase_rad).sin())
            .collect(),
        SignalSpec::Waveform { path, samples } => {
            let source = match (path, samples) {
                (Some(p), None) => load_csv(p)?.samples,
                (None, Some(s)) => s.clone(),
                _ => unreachable!("validated above"),
            };
            if source.is_empty() {
                return Err(Error::InvalidSignal("waveform has no samples".into()));
            }
            let n = source.len();
            times
                .map(|t| {
                    let k = ((t / duration_us) * n as f64).floor() as usize;
                    source[k.min(n - 1)]
                })
                .collect()
        }
        SignalSpec::ImpulseTrain { events } => times
            .map(|t| events.iter().map(|e| e.eval(t)).sum())
            .collect(),
    };
    SampledSignal::new(duration_us, samples)
}

/// Place `count` impulses at random, at least `min_separation_us` apart.
///
/// Centers are uniform on `[s/2, T - s/2)` with `s` the separation, drawn
/// by rejection until every pair is far enough apart. Polarities are random.
pub fn random_impulse_train(
    seed: u64,
    count: usize,
    duration_us: f64,
    width_us: f64,
    amplitude_ut: f64,
    min_separation_us: f64,
) -> Result<Vec<ImpulseEvent>> {
    const MAX_DRAWS: usize = 100_000;
    if !(min_separation_us > 0.0 && min_separation_us.is_finite()) {
        return Err(Error::InvalidSignal("separation must be positive".into()));
    }
    let (lo, hi) = (0.5 * min_separation_us, duration_us - 0.5 * min_separation_us);
    if count == 0 || (count as f64 - 1.0) * min_separation_us >= hi - lo {
        return Err(Error::InvalidSignal(format!(
            "cannot place {count} impulses {min_separation_us} us apart in {duration_us} us"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let mut centers: Vec<f64> = (0..count).map(|_| rng.random_range(lo..hi)).collect();
        centers.sort_by(f64::total_cmp);
        if centers.windows(2).all(|w| w[1] - w[0] >= min_separation_us) {
            let events = centers
                .into_iter()
                .map(|center_us| ImpulseEvent {
                    center_us,
                    polarity: if rng.random_bool(0.5) { 1 } else { -1 },
                    amplitude_ut,
                    width_us,
                })
                .collect::<Vec<_>>();
            for e in &events {
                e.validate(duration_us)?;
            }
            return Ok(events);
        }
    }
    Err(Error::InvalidSignal(format!(
        "no separated placement of {count} impulses found in {MAX_DRAWS} draws"
    )))
}

pub fn save_csv(signal: &SampledSignal, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(signal, std::io::BufWriter::new(file))
}

pub fn write_csv<W: Write>(signal: &SampledSignal, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for (k, v) in signal.samples.iter().enumerate() {
        writeln!(out, "{:.16e},{:.16e}", signal.time_us(k), v)?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<SampledSignal> {
    read_csv(std::fs::File::open(path)?)
}

pub fn read_csv<R: Read>(input: R) -> Result<SampledSignal> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(BufReader::new(input));

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| Error::Format {
            line,
            message: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(Error::Format {
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        if line == 1 {
            if record.get(0).map(str::trim) != Some("t_us")
                || record.get(1).map(str::trim) != Some("b_uT")
            {
                return Err(Error::Format {
                    line,
                    message: format!("expected header `{CSV_HEADER}`"),
                });
            }
            continue;
        }
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| Error::Format {
                line,
                message: format!("`{s}`: {e}"),
            })
        };
        times.push(parse(&record[0])?);
        values.push(parse(&record[1])?);
    }

    if times.len() < 2 {
        return Err(Error::Format {
            line: times.len() + 1,
            message: "need at least 2 data rows".into(),
        });
    }
    let steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    if let Some(k) = steps.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::Format {
            line: k + 3,
            message: "time column is not strictly increasing".into(),
        });
    }
    let mean_step = (times[times.len() - 1] - times[0]) / steps.len() as f64;
    if let Some(k) = steps
        .iter()
        .position(|d| ((d - mean_step) / mean_step).abs() > 1e-9)
    {
        return Err(Error::Spacing { line: k + 3 });
    }
    SampledSignal::new(mean_step * values.len() as f64, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(signal: &SampledSignal) -> f64 {
        signal.samples().iter().sum::<f64>() * signal.dt_us()
    }

    #[test]
    fn zero_amplitude_sinusoid_is_zero() {
        let spec = SignalSpec::Sinusoid {
            amplitude_ut: 0.0,
            period_us: 10.0,
            phase_rad: 1.3,
        };
        let s = generate(&spec, 10.0, 64).unwrap();
        assert!(s.samples().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn quarter_phase_sinusoid_is_cosine() {
        let spec = SignalSpec::Sinusoid {
            amplitude_ut: 1.0,
            period_us: 20.0,
            phase_rad: PI / 2.0,
        };
        let s = generate(&spec, 20.0, 128).unwrap();
        for (k, v) in s.samples().iter().enumerate() {
            let expected = (2.0 * PI * s.time_us(k) / 20.0).cos();
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_is_two_pi_periodic() {
        let mk = |phase| SignalSpec::Sinusoid {
            amplitude_ut: 0.7,
            period_us: 8.0,
            phase_rad: phase,
        };
        let a = generate(&mk(0.4), 8.0, 256).unwrap();
        let b = generate(&mk(0.4 + 2.0 * PI), 8.0, 256).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn single_impulse_integrates_to_zero() {
        let duration = 64.0;
        let width = 2.0;
        let spec = SignalSpec::ImpulseTrain {
            events: vec![ImpulseEvent {
                center_us: duration / 2.0,
                polarity: 1,
                amplitude_ut: 1.0,
                width_us: width,
            }],
        };
        let s = generate(&spec, duration, 1 << 18).unwrap();
        let positive: f64 = s.samples().iter().filter(|v| **v > 0.0).sum::<f64>() * s.dt_us();
        // Net area is the tail beyond T plus midpoint error; both far below the lobe area.
        assert!(integrate(&s).abs() < 1e-4 * positive, "{}", integrate(&s));
    }

    #[test]
    fn impulse_peaks_at_amplitude_with_polarity() {
        let e = ImpulseEvent {
            center_us: 10.0,
            polarity: -1,
            amplitude_ut: 3.0,
            width_us: 2.0,
        };
        assert!((e.eval(e.onset_us()) + 3.0).abs() < 1e-12);
        assert_eq!(e.eval(e.onset_us() - 1e-9), 0.0);
        // Leading lobe spans onset..onset + zero crossing, centred on center_us.
        assert!(e.eval(e.center_us) < 0.0);
    }

    #[test]
    fn disjoint_impulses_superpose() {
        let a = ImpulseEvent {
            center_us: 5.0,
            polarity: 1,
            amplitude_ut: 1.0,
            width_us: 0.5,
        };
        let b = ImpulseEvent {
            center_us: 40.0,
            polarity: -1,
            amplitude_ut: 2.0,
            width_us: 0.5,
        };
        let both = generate(&SignalSpec::ImpulseTrain { events: vec![a, b] }, 64.0, 4096).unwrap();
        let sa = generate(&SignalSpec::ImpulseTrain { events: vec![a] }, 64.0, 4096).unwrap();
        let sb = generate(&SignalSpec::ImpulseTrain { events: vec![b] }, 64.0, 4096).unwrap();
        let sum = sa.add(&sb).unwrap();
        for (x, y) in both.samples().iter().zip(sum.samples()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn impulse_outside_window_rejected() {
        let spec = SignalSpec::ImpulseTrain {
            events: vec![ImpulseEvent {
                center_us: 70.0,
                polarity: 1,
                amplitude_ut: 1.0,
                width_us: 1.0,
            }],
        };
        assert!(matches!(generate(&spec, 64.0, 64), Err(Error::InvalidSignal(_))));
    }

    #[test]
    fn non_positive_width_rejected() {
        let spec = SignalSpec::ImpulseTrain {
            events: vec![ImpulseEvent {
                center_us: 7.0,
                polarity: 1,
                amplitude_ut: 1.0,
                width_us: 0.0,
            }],
        };
        assert!(matches!(generate(&spec, 64.0, 64), Err(Error::InvalidSignal(_))));
    }

    #[test]
    fn random_train_is_separated_and_deterministic() {
        let a = random_impulse_train(7, 4, 64.0, 2.0, 1.0, 12.0).unwrap();
        let b = random_impulse_train(7, 4, 64.0, 2.0, 1.0, 12.0).unwrap();
        assert_eq!(a, b);
        for w in a.windows(2) {
            assert!(w[1].center_us - w[0].center_us >= 12.0);
        }
        assert!(a.iter().all(|e| e.center_us >= 6.0 && e.center_us < 58.0));
        assert!(random_impulse_train(7, 10, 64.0, 2.0, 1.0, 12.0).is_err());
        assert!(random_impulse_train(7, 0, 64.0, 2.0, 1.0, 12.0).is_err());
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<f64> = (0..256).map(|_| rng.random_range(-5.0..5.0)).collect();
        let s = SampledSignal::new(12.345, samples).unwrap();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples(), s.samples());
        assert!((back.duration_us() - s.duration_us()).abs() < 1e-9);
    }

    #[test]
    fn csv_three_columns_is_format_error() {
        let text = "t_us,b_uT\n0.5,1.0,2.0\n1.5,1.0\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(Error::Format { line: 2, .. })));
    }

    #[test]
    fn csv_jittered_grid_is_spacing_error() {
        let mut text = String::from("t_us,b_uT\n");
        for k in 0..16 {
            let jitter = if k == 7 { 1e-3 } else { 0.0 };
            text.push_str(&format!("{},{}\n", k as f64 + 0.5 + jitter, 0.0));
        }
        assert!(matches!(read_csv(text.as_bytes()), Err(Error::Spacing { .. })));
    }

    #[test]
    fn csv_decreasing_time_rejected() {
        let text = "t_us,b_uT\n1.5,0\n0.5,0\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(Error::Format { .. })));
    }

    #[test]
    fn waveform_zero_order_hold() {
        let spec = SignalSpec::Waveform {
            path: None,
            samples: Some(vec![1.0, -1.0]),
        };
        let s = generate(&spec, 4.0, 8).unwrap();
        assert_eq!(s.samples(), &[1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0]);
    }
}
