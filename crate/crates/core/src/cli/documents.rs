//! JSON documents and the reconstruction CSV written by the command-line
//! front end.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{
    Convention, EventDetector, MeanSource, ProtocolKind, ProtocolPlan, Provenance, RunBudget,
};
use crate::signals::SignalSpec;
use crate::spinsim::{Readout, SensorParams};
use crate::wavelet::{
    Coefficient, DyadicIndex, HaarCoefficients, HaarLevel, Reconstruction, WalshSpectrum,
};

pub const RECONSTRUCTION_HEADER: &str = "t_us,b_uT,sigma_uT";

/// Which protocol a `simulate` run executes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolConfig {
    /// Orders `1..=order` plus the mean.
    Haar { order: u32 },
    /// Only the listed orders; no mean.
    SparseHaar { orders: Vec<u32> },
    Walsh { order: u32 },
    Ramsey { points: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub coefficients: Option<PathBuf>,
    #[serde(default)]
    pub budget: Option<PathBuf>,
    #[serde(default)]
    pub reconstruction: Option<PathBuf>,
}

fn default_readout() -> Readout {
    Readout::Ideal
}

fn yes() -> bool {
    true
}

/// A complete `simulate` run. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub signal: SignalSpec,
    pub duration_us: f64,
    pub sample_count: usize,
    #[serde(default)]
    pub sensor: SensorParams,
    pub protocol: ProtocolConfig,
    #[serde(default = "default_readout")]
    pub readout: Readout,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub convention: Convention,
    #[serde(default)]
    pub mean: MeanSource,
    /// Initialization and readout time after each measurement, microseconds.
    #[serde(default)]
    pub overhead_us: f64,
    /// Dead time between signal runs, microseconds.
    #[serde(default)]
    pub run_overhead_us: f64,
    #[serde(default = "yes")]
    pub parallel: bool,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut config = Self::from_json(&std::fs::read_to_string(path)?)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_us > 0.0 && self.duration_us.is_finite()) {
            return Err(Error::Config(format!(
                "duration_us must be positive, got {}",
                self.duration_us
            )));
        }
        if self.sample_count < 2 {
            return Err(Error::Config("sample_count must be >= 2".into()));
        }
        if self.readout == Readout::Shots(0) {
            return Err(Error::Config("readout shots must be >= 1".into()));
        }
        self.sensor.validate()?;
        match &self.protocol {
            ProtocolConfig::Haar { order } | ProtocolConfig::Walsh { order } if *order == 0 => {
                Err(Error::Config("protocol order must be >= 1".into()))
            }
            ProtocolConfig::SparseHaar { orders } if orders.is_empty() => {
                Err(Error::Config("sparse_haar needs at least one order".into()))
            }
            ProtocolConfig::Ramsey { points } if *points == 0 => {
                Err(Error::Config("ramsey needs at least one point".into()))
            }
            _ => Ok(()),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let SignalSpec::Waveform { path: Some(p), .. } = &mut self.signal {
            fix(p);
        }
        for p in [
            &mut self.outputs.coefficients,
            &mut self.outputs.budget,
            &mut self.outputs.reconstruction,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexedCoefficient {
    pub i: u32,
    pub j: u64,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRecord {
    pub order: u32,
    pub measured: bool,
    pub coefficients: Vec<IndexedCoefficient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaarDocument {
    pub duration_us: f64,
    pub max_order: u32,
    pub mean: Coefficient,
    pub levels: Vec<LevelRecord>,
    /// Absent for a direct transform of sampled data.
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalshRecord {
    pub m: u64,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalshDocument {
    pub duration_us: f64,
    pub order: u32,
    pub coefficients: Vec<WalshRecord>,
    pub provenance: Option<Provenance>,
}

/// Coefficient file, tagged by `"basis"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum CoefficientDocument {
    Haar(HaarDocument),
    Walsh(WalshDocument),
}

impl HaarDocument {
    pub fn new(coeffs: &HaarCoefficients, duration_us: f64, provenance: Option<Provenance>) -> Self {
        let levels = coeffs
            .levels()
            .iter()
            .enumerate()
            .map(|(k, level)| LevelRecord {
                order: k as u32 + 1,
                measured: level.measured,
                coefficients: level
                    .coefficients
                    .iter()
                    .enumerate()
                    .map(|(j, c)| IndexedCoefficient {
                        i: k as u32 + 1,
                        j: j as u64,
                        value: c.value,
                        sigma: c.sigma,
                    })
                    .collect(),
            })
            .collect();
        Self {
            duration_us,
            max_order: coeffs.max_order(),
            mean: coeffs.mean(),
            levels,
            provenance,
        }
    }

    pub fn coefficients(&self) -> Result<HaarCoefficients> {
        if self.levels.len() != self.max_order as usize {
            return Err(Error::Config(format!(
                "max_order {} but {} levels",
                self.max_order,
                self.levels.len()
            )));
        }
        let mut levels = Vec::with_capacity(self.levels.len());
        for (k, record) in self.levels.iter().enumerate() {
            let order = k as u32 + 1;
            if record.order != order {
                return Err(Error::Config(format!(
                    "level {} listed where order {order} expected",
                    record.order
                )));
            }
            let mut coefficients = vec![Coefficient::default(); DyadicIndex::count(order) as usize];
            if record.coefficients.len() != coefficients.len() {
                return Err(Error::LengthMismatch {
                    expected: coefficients.len(),
                    actual: record.coefficients.len(),
                });
            }
            for c in &record.coefficients {
                let idx = DyadicIndex::new(c.i, c.j)?;
                if idx.order() != order {
                    return Err(Error::InvalidIndex {
                        order: c.i,
                        shift: c.j,
                    });
                }
                coefficients[c.j as usize] = Coefficient {
                    value: c.value,
                    sigma: c.sigma,
                };
            }
            levels.push(HaarLevel {
                coefficients,
                measured: record.measured,
            });
        }
        HaarCoefficients::new(self.mean, levels)
    }
}

impl WalshDocument {
    pub fn new(spectrum: &WalshSpectrum, duration_us: f64, provenance: Option<Provenance>) -> Self {
        Self {
            duration_us,
            order: spectrum.order(),
            coefficients: spectrum
                .coefficients()
                .iter()
                .zip(spectrum.sigmas())
                .enumerate()
                .map(|(m, (&value, &sigma))| WalshRecord {
                    m: m as u64,
                    value,
                    sigma,
                })
                .collect(),
            provenance,
        }
    }

    pub fn spectrum(&self) -> Result<WalshSpectrum> {
        for (k, c) in self.coefficients.iter().enumerate() {
            if c.m != k as u64 {
                return Err(Error::Config(format!(
                    "Walsh coefficients must be listed in order; found m = {} at position {k}",
                    c.m
                )));
            }
        }
        WalshSpectrum::new(
            self.order,
            self.coefficients.iter().map(|c| c.value).collect(),
            self.coefficients.iter().map(|c| c.sigma).collect(),
        )
    }
}

impl CoefficientDocument {
    pub fn duration_us(&self) -> f64 {
        match self {
            CoefficientDocument::Haar(d) => d.duration_us,
            CoefficientDocument::Walsh(d) => d.duration_us,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Run accounting written by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetDocument {
    pub protocol: ProtocolKind,
    pub order: u32,
    pub points: usize,
    pub duration_us: f64,
    pub overhead_us: f64,
    pub run_overhead_us: f64,
    pub signal_runs_per_sweep: u64,
    pub repetitions: u64,
    pub total_runs: u64,
    pub wall_seconds: f64,
}

impl BudgetDocument {
    pub fn new(plan: &ProtocolPlan, budget: &RunBudget) -> Self {
        Self {
            protocol: plan.kind,
            order: plan.order,
            points: plan.points,
            duration_us: plan.duration_us,
            overhead_us: plan.overhead_us,
            run_overhead_us: plan.run_overhead_us,
            signal_runs_per_sweep: budget.signal_runs_per_sweep,
            repetitions: budget.repetitions,
            total_runs: budget.total_runs,
            wall_seconds: budget.wall_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub bin: usize,
    pub first_bin: usize,
    pub last_bin: usize,
    pub t_us: f64,
    pub polarity: i8,
    pub peak_ut: f64,
    pub sigma_ut: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventsDocument {
    pub duration_us: f64,
    pub order: u32,
    /// Haar orders used; 0 stands for the mean.
    pub orders: Vec<u32>,
    pub detector: EventDetector,
    pub events: Vec<EventRecord>,
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(&text, path)
}

pub(crate) fn write_text(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Reconstruction as `t_us,b_uT,sigma_uT` rows at the bin centers.
pub fn write_reconstruction_csv<W: Write>(recon: &Reconstruction, duration_us: f64, mut out: W) -> Result<()> {
    writeln!(out, "{RECONSTRUCTION_HEADER}")?;
    for ((t, v), s) in recon
        .bin_centers_us(duration_us)
        .iter()
        .zip(recon.points())
        .zip(recon.sigmas())
    {
        writeln!(out, "{t:.16e},{v:.16e},{s:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_reconstruction_csv(recon: &Reconstruction, duration_us: f64, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_reconstruction_csv(recon, duration_us, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Inverse of [`write_reconstruction_csv`]: bin-center times and the
/// reconstruction. The row count must be a power of two.
pub fn read_reconstruction_csv<R: Read>(input: R) -> Result<(Vec<f64>, Reconstruction)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut times = Vec::new();
    let mut points = Vec::new();
    let mut sigmas = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let line = k + 1;
        let row = row.map_err(|e| Error::Format {
            line,
            message: e.to_string(),
        })?;
        if row.len() != 3 {
            return Err(Error::Format {
                line,
                message: format!("expected 3 columns, found {}", row.len()),
            });
        }
        if k == 0 {
            if row.iter().collect::<Vec<_>>().join(",") != RECONSTRUCTION_HEADER {
                return Err(Error::Format {
                    line,
                    message: format!("expected header `{RECONSTRUCTION_HEADER}`"),
                });
            }
            continue;
        }
        let mut parsed = [0.0; 3];
        for (slot, field) in parsed.iter_mut().zip(row.iter()) {
            *slot = field.trim().parse().map_err(|_| Error::Format {
                line,
                message: format!("not a number: `{field}`"),
            })?;
        }
        times.push(parsed[0]);
        points.push(parsed[1]);
        sigmas.push(parsed[2]);
    }
    if !points.len().is_power_of_two() {
        return Err(Error::Format {
            line: points.len() + 1,
            message: format!("{} rows is not a power of two", points.len()),
        });
    }
    let order = points.len().trailing_zeros();
    Ok((times, Reconstruction::new(order, points, sigmas)?))
}
