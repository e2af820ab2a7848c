//! Command-line front end: `transform`, `simulate`, `reconstruct`,
//! `detect` and `sensitivity`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 phase wrap,
//! 3 infeasible packing, 4 file I/O or format error.

mod documents;
mod plot;

pub use documents::{
    read_reconstruction_csv, save_reconstruction_csv, write_json, write_reconstruction_csv,
    BudgetDocument, CoefficientDocument, EventRecord, EventsDocument, HaarDocument,
    IndexedCoefficient, LevelRecord, OutputPaths, ProtocolConfig, RunConfig, WalshDocument,
    WalshRecord, RECONSTRUCTION_HEADER,
};
pub use plot::render_svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::protocol::{
    plan_haar_orders, plan_ramsey, plan_walsh, run_budget, run_haar_protocol,
    run_ramsey_protocol, run_sparse_haar, run_walsh_protocol, Convention, MeanSource,
    EventDetector, MeasurementOptions, ProtocolKind, Provenance,
};
use crate::sensitivity::{compare_protocols, write_comparison_csv};
use crate::signals::{generate, load_csv};
use crate::spinsim::ELECTRON_GAMMA;
use crate::wavelet::{
    haar_reconstruct_points, haar_transform, walsh_reconstruct, Coefficient, HaarCoefficients,
    Reconstruction, WalshSpectrum,
};

#[derive(Debug, Parser)]
#[command(name = "haarsense", version, about = "Haar-wavelet spin-echo magnetometry simulator")]
pub struct Cli {
    /// Override the seed of a simulate config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Phase-to-coefficient constant: integral or paper.
    #[arg(long, global = true)]
    pub convention: Option<Convention>,
    /// Also write an SVG step plot of the reconstruction.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Haar coefficients of a sampled signal by direct quadrature.
    Transform {
        /// Signal CSV (`t_us,b_uT`).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        order: u32,
        /// Coefficient JSON; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a sensing protocol described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Piecewise-constant reconstruction from a coefficient file.
    Reconstruct {
        #[arg(long)]
        coefficients: PathBuf,
        /// Defaults to the highest order in the file.
        #[arg(long)]
        order: Option<u32>,
        /// Reconstruction CSV (`t_us,b_uT,sigma_uT`).
        #[arg(long)]
        output: PathBuf,
        /// Write `<stem>_n<k>.csv` for every order 1..=order instead.
        #[arg(long)]
        all_orders: bool,
    },
    /// Find significant excursions in a Haar or Walsh reconstruction.
    Detect {
        #[arg(long)]
        coefficients: PathBuf,
        /// Haar orders to keep, comma separated; 0 keeps the mean.
        /// Defaults to every measured order and the mean.
        #[arg(long, value_delimiter = ',')]
        orders: Vec<u32>,
        /// Threshold in units of the point-wise sigma.
        #[arg(long, default_value_t = 5.0)]
        threshold: f64,
        /// Quiet bins allowed inside one event.
        #[arg(long, default_value_t = 0)]
        merge_gap: usize,
        /// Take polarity from the earliest bin reaching this fraction of
        /// the event peak (biphasic pulses).
        #[arg(long)]
        lead_fraction: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Haar, Walsh and Ramsey resolution table as CSV.
    Sensitivity {
        #[arg(long, default_value_t = 300.0)]
        t2_us: f64,
        #[arg(long, default_value_t = 3.0)]
        t2_star_us: f64,
        #[arg(long, default_value_t = 1e6)]
        repetitions: f64,
        #[arg(long, default_value_t = 100.0)]
        duration_us: f64,
        #[arg(long, default_value_t = 10)]
        n_max: u32,
        #[arg(long, default_value_t = ELECTRON_GAMMA)]
        gamma: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::PhaseWrap { .. } => 2,
        Error::Packing(_) => 3,
        Error::Io(_) | Error::Format { .. } | Error::Spacing { .. } | Error::Json(_) => 4,
        _ => 1,
    }
}

/// Entry point for the binary.
pub fn run() -> ExitCode {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    ExitCode::from(run_with_args(std::env::args_os()))
}

/// Parse `args` (program name first), execute, report errors on stderr and
/// return the exit code.
pub fn run_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let plot = cli.plot.as_deref();
    match &cli.command {
        Command::Transform {
            input,
            order,
            output,
        } => {
            let signal = load_csv(input)?;
            let coeffs = haar_transform(&signal, *order)?;
            let doc = CoefficientDocument::Haar(HaarDocument::new(&coeffs, signal.duration_us(), None));
            write_json(&doc, output.as_deref())?;
            if let Some(p) = plot {
                let recon = haar_reconstruct_points(&coeffs, *order)?;
                write_plot(p, &recon, signal.duration_us(), "Haar transform", &[])?;
            }
            Ok(())
        }
        Command::Simulate { config } => {
            let mut config = RunConfig::load(config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            if let Some(convention) = cli.convention {
                config.convention = convention;
            }
            let out = simulate(&config)?;
            if let (Some(path), Some(doc)) = (&config.outputs.coefficients, &out.coefficients) {
                write_json(doc, Some(path))?;
            }
            if let Some(path) = &config.outputs.budget {
                write_json(&out.budget, Some(path))?;
            }
            if let Some(path) = &config.outputs.reconstruction {
                save_reconstruction_csv(&out.reconstruction, config.duration_us, path)?;
            }
            if let Some(p) = plot {
                write_plot(p, &out.reconstruction, config.duration_us, "simulated reconstruction", &[])?;
            }
            Ok(())
        }
        Command::Reconstruct {
            coefficients,
            order,
            output,
            all_orders,
        } => {
            let doc = CoefficientDocument::load(coefficients)?;
            let duration = doc.duration_us();
            let recons = reconstruct(&doc, *order, *all_orders)?;
            if *all_orders {
                for recon in &recons {
                    save_reconstruction_csv(recon, duration, &order_path(output, recon.order()))?;
                }
            } else {
                save_reconstruction_csv(&recons[0], duration, output)?;
            }
            if let (Some(p), Some(last)) = (plot, recons.last()) {
                let title = format!("order {} reconstruction", last.order());
                write_plot(p, last, duration, &title, &[])?;
            }
            Ok(())
        }
        Command::Detect {
            coefficients,
            orders,
            threshold,
            merge_gap,
            lead_fraction,
            output,
        } => {
            let doc = CoefficientDocument::load(coefficients)?;
            let (recon, used) = detection_input(&doc, orders)?;
            let detection = EventDetector::new(*threshold)
                .with_merge_gap(*merge_gap)
                .with_lead_fraction(*lead_fraction)
                .detect(&recon)?;
            let centers = recon.bin_centers_us(doc.duration_us());
            let events = EventsDocument {
                duration_us: doc.duration_us(),
                order: recon.order(),
                orders: used,
                detector: detection.detector,
                events: detection
                    .events
                    .iter()
                    .map(|e| EventRecord {
                        bin: e.bin,
                        first_bin: e.first_bin,
                        last_bin: e.last_bin,
                        t_us: centers[e.bin],
                        polarity: e.polarity,
                        peak_ut: e.peak_ut,
                        sigma_ut: recon.sigmas()[e.bin],
                    })
                    .collect(),
            };
            write_json(&events, output.as_deref())?;
            if let Some(p) = plot {
                let bins: Vec<usize> = detection.events.iter().map(|e| e.bin).collect();
                write_plot(p, &recon, doc.duration_us(), "detected events", &bins)?;
            }
            Ok(())
        }
        Command::Sensitivity {
            t2_us,
            t2_star_us,
            repetitions,
            duration_us,
            n_max,
            gamma,
            output,
        } => {
            let rows = compare_protocols(*t2_us, *t2_star_us, *repetitions, *duration_us, *n_max, *gamma)?;
            let mut buf = Vec::new();
            write_comparison_csv(&rows, &mut buf)?;
            documents::write_text(&String::from_utf8_lossy(&buf), output.as_deref())?;
            if plot.is_some() {
                log::warn!("--plot has no effect on the sensitivity table");
            }
            Ok(())
        }
    }
}

/// Everything a `simulate` run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    /// Absent for the Ramsey protocol, which yields points directly.
    pub coefficients: Option<CoefficientDocument>,
    pub budget: BudgetDocument,
    pub reconstruction: Reconstruction,
}

/// Execute a run config in memory.
///
/// The plan is checked before any measurement, so an infeasible packing
/// fails fast.
pub fn simulate(config: &RunConfig) -> Result<SimulationOutput> {
    config.validate()?;
    let duration = config.duration_us;
    let repetitions = config.readout.repetitions().unwrap_or(1);
    let mut plan = match &config.protocol {
        ProtocolConfig::Haar { order } => {
            let orders: Vec<u32> = (1..=*order).collect();
            plan_haar_orders(
                &orders,
                config.mean == MeanSource::Ramsey,
                duration,
                repetitions,
                config.overhead_us,
            )?
        }
        ProtocolConfig::SparseHaar { orders } => {
            plan_haar_orders(orders, false, duration, repetitions, config.overhead_us)?
        }
        ProtocolConfig::Walsh { order } => plan_walsh(*order, duration, repetitions, config.overhead_us)?,
        ProtocolConfig::Ramsey { points } => plan_ramsey(*points, duration, repetitions, config.overhead_us)?,
    };
    plan.run_overhead_us = config.run_overhead_us;
    let budget = BudgetDocument::new(&plan, &run_budget(&plan));

    let signal = generate(&config.signal, duration, config.sample_count)?;
    let mut options = MeasurementOptions::new(config.readout, config.seed)
        .with_convention(config.convention)
        .with_mean(config.mean);
    options.parallel = config.parallel;

    let (coefficients, reconstruction) = match &config.protocol {
        ProtocolConfig::Haar { order } => {
            let coeffs = run_haar_protocol(&signal, &config.sensor, *order, &options)?;
            let provenance = Provenance::new(ProtocolKind::Haar, &options, coeffs.measured_orders());
            let recon = haar_reconstruct_points(&coeffs, *order)?.with_provenance(provenance.clone());
            let doc = HaarDocument::new(&coeffs, duration, Some(provenance));
            (Some(CoefficientDocument::Haar(doc)), recon)
        }
        ProtocolConfig::SparseHaar { orders } => {
            let coeffs = run_sparse_haar(&signal, &config.sensor, orders, &options)?;
            let provenance = Provenance::new(ProtocolKind::Haar, &options, coeffs.measured_orders());
            let recon =
                haar_reconstruct_points(&coeffs, coeffs.max_order())?.with_provenance(provenance.clone());
            let doc = HaarDocument::new(&coeffs, duration, Some(provenance));
            (Some(CoefficientDocument::Haar(doc)), recon)
        }
        ProtocolConfig::Walsh { order } => {
            let (spectrum, _) = run_walsh_protocol(&signal, &config.sensor, *order, &options)?;
            let provenance = Provenance::new(ProtocolKind::Walsh, &options, vec![*order]);
            let recon = walsh_reconstruct(&spectrum)?.with_provenance(provenance.clone());
            let doc = WalshDocument::new(&spectrum, duration, Some(provenance));
            (Some(CoefficientDocument::Walsh(doc)), recon)
        }
        ProtocolConfig::Ramsey { points } => {
            (None, run_ramsey_protocol(&signal, &config.sensor, *points, &options)?)
        }
    };
    Ok(SimulationOutput {
        coefficients,
        budget,
        reconstruction,
    })
}

/// Reconstructions at `order` (default: the file's highest order), or at
/// every order up to it when `all_orders` is set.
pub fn reconstruct(doc: &CoefficientDocument, order: Option<u32>, all_orders: bool) -> Result<Vec<Reconstruction>> {
    let (max, build): (u32, Box<dyn Fn(u32) -> Result<Reconstruction>>) = match doc {
        CoefficientDocument::Haar(d) => {
            let coeffs = d.coefficients()?;
            (d.max_order, Box::new(move |k| haar_reconstruct_points(&coeffs, k)))
        }
        CoefficientDocument::Walsh(d) => {
            let spectrum = d.spectrum()?;
            (d.order, Box::new(move |k| walsh_reconstruct(&truncate_walsh(&spectrum, k)?)))
        }
    };
    let order = order.unwrap_or(max);
    if order == 0 || order > max {
        return Err(Error::OrderOutOfRange {
            requested: order,
            max,
        });
    }
    if all_orders {
        (1..=order).map(build).collect()
    } else {
        Ok(vec![build(order)?])
    }
}

/// The first `2^k` sequency-ordered coefficients, which span the functions
/// constant on `2^k` bins.
fn truncate_walsh(spectrum: &WalshSpectrum, k: u32) -> Result<WalshSpectrum> {
    let len = 1usize << k;
    WalshSpectrum::new(
        k,
        spectrum.coefficients()[..len].to_vec(),
        spectrum.sigmas()[..len].to_vec(),
    )
}

/// Reconstruction used for event detection and the orders it includes.
fn detection_input(doc: &CoefficientDocument, orders: &[u32]) -> Result<(Reconstruction, Vec<u32>)> {
    match doc {
        CoefficientDocument::Walsh(d) => {
            if !orders.is_empty() {
                return Err(Error::Config("--orders applies only to Haar coefficients".into()));
            }
            Ok((walsh_reconstruct(&d.spectrum()?)?, vec![]))
        }
        CoefficientDocument::Haar(d) => {
            let coeffs = d.coefficients()?;
            let mut selected: Vec<u32> = if orders.is_empty() {
                std::iter::once(0).chain(coeffs.measured_orders()).collect()
            } else {
                orders.to_vec()
            };
            selected.sort_unstable();
            selected.dedup();
            let top = selected.last().copied().unwrap_or(0);
            if top == 0 {
                return Err(Error::Config("select at least one Haar order".into()));
            }
            if top > coeffs.max_order() {
                return Err(Error::OrderOutOfRange {
                    requested: top,
                    max: coeffs.max_order(),
                });
            }
            let levels = coeffs.levels()[..top as usize]
                .iter()
                .enumerate()
                .map(|(k, level)| {
                    let mut level = level.clone();
                    if !selected.contains(&(k as u32 + 1)) {
                        level.coefficients.fill(Coefficient::default());
                        level.measured = false;
                    }
                    level
                })
                .collect();
            let mean = if selected.contains(&0) {
                coeffs.mean()
            } else {
                Coefficient::default()
            };
            let kept = HaarCoefficients::new(mean, levels)?;
            Ok((haar_reconstruct_points(&kept, top)?, selected))
        }
    }
}

/// `dir/stem_n<k>.ext` for `dir/stem.ext`.
pub fn order_path(path: &Path, order: u32) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_n{order}.{}", ext.to_string_lossy()),
        None => format!("{stem}_n{order}"),
    };
    path.with_file_name(name)
}

fn write_plot(path: &Path, recon: &Reconstruction, duration_us: f64, title: &str, markers: &[usize]) -> Result<()> {
    std::fs::write(path, render_svg(recon, duration_us, title, markers))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::SignalSpec;
    use crate::spinsim::Readout;

    fn config(protocol: ProtocolConfig) -> RunConfig {
        RunConfig {
            signal: SignalSpec::Sinusoid {
                amplitude_ut: 0.05,
                period_us: 64.0,
                phase_rad: 0.0,
            },
            duration_us: 64.0,
            sample_count: 1024,
            sensor: Default::default(),
            protocol,
            readout: Readout::Ideal,
            seed: 1,
            convention: Convention::Integral,
            mean: MeanSource::Ramsey,
            overhead_us: 0.0,
            run_overhead_us: 0.0,
            parallel: true,
            outputs: OutputPaths::default(),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::PhaseWrap { reason: "x".into(), location: None }), 2);
        assert_eq!(exit_code(&Error::Packing("x".into())), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 4);
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let text = r#"{"signal":{"kind":"sinusoid","amplitude_ut":0,"period_us":1},
            "duration_us":1,"sample_count":8,"protocol":{"kind":"haar","order":1},"colour":1}"#;
        assert!(matches!(RunConfig::from_json(text), Err(Error::Config(_))));
    }

    #[test]
    fn haar_budget_counts_mean_run() {
        let out = simulate(&config(ProtocolConfig::Haar { order: 4 })).unwrap();
        assert_eq!(out.budget.signal_runs_per_sweep, 5);
        assert_eq!(out.reconstruction.len(), 16);
    }

    #[test]
    fn overhead_on_full_window_is_a_packing_error() {
        let mut c = config(ProtocolConfig::Haar { order: 2 });
        c.overhead_us = 1.0;
        assert!(matches!(simulate(&c), Err(Error::Packing(_))));
    }

    #[test]
    fn walsh_truncation_matches_lower_order_transform() {
        let out = simulate(&config(ProtocolConfig::Walsh { order: 4 })).unwrap();
        let doc = out.coefficients.unwrap();
        let all = reconstruct(&doc, None, true).unwrap();
        assert_eq!(all.len(), 4);
        let direct = simulate(&config(ProtocolConfig::Walsh { order: 2 })).unwrap();
        for (a, b) in all[1].points().iter().zip(direct.reconstruction.points()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn order_paths() {
        assert_eq!(order_path(Path::new("out/r.csv"), 3), PathBuf::from("out/r_n3.csv"));
        assert_eq!(order_path(Path::new("r"), 1), PathBuf::from("r_n1"));
    }

    #[test]
    fn coefficient_document_round_trip() {
        let out = simulate(&config(ProtocolConfig::Haar { order: 3 })).unwrap();
        let doc = out.coefficients.unwrap();
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains(r#""basis":"haar""#));
        let back: CoefficientDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        let bad = text.replacen(r#""max_order""#, r#""extra":1,"max_order""#, 1);
        assert!(serde_json::from_str::<CoefficientDocument>(&bad).is_err());
    }

    #[test]
    fn reconstruction_csv_round_trip() {
        let r = Reconstruction::new(2, vec![1.0, -0.25, 1e-17, 3.0], vec![0.0, 0.1, 0.2, 0.3]).unwrap();
        let mut buf = Vec::new();
        write_reconstruction_csv(&r, 8.0, &mut buf).unwrap();
        let (times, back) = read_reconstruction_csv(buf.as_slice()).unwrap();
        assert_eq!(times, vec![1.0, 3.0, 5.0, 7.0]);
        assert_eq!(back, r);
    }
}
