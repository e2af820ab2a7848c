use serde::{Deserialize, Serialize};

use super::ProtocolKind;
use crate::error::{Error, Result};
use crate::spinsim::{EchoSequence, FreePrecession, WalshSequence};
use crate::wavelet::DyadicIndex;

/// One measurement scheduled inside a signal run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlannedSequence {
    /// Full-window free precession measuring the mean `c0`.
    Mean(FreePrecession),
    Haar {
        index: DyadicIndex,
        echo: EchoSequence,
    },
    Walsh(WalshSequence),
    Ramsey {
        point: usize,
        window: FreePrecession,
    },
}

/// Sequences executed during one pass of the temporal signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRun {
    pub sequences: Vec<PlannedSequence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPlan {
    pub kind: ProtocolKind,
    /// Reconstruction order `n`; the point count is `2^n` for Haar and
    /// Walsh plans.
    pub order: u32,
    pub points: usize,
    pub duration_us: f64,
    /// Repetitions `M` of every sweep.
    pub repetitions: u64,
    /// Initialization and readout time between measurements in one run.
    pub overhead_us: f64,
    /// Dead time between signal runs, used only for the wall estimate.
    pub run_overhead_us: f64,
    pub runs: Vec<SignalRun>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunBudget {
    pub signal_runs_per_sweep: u64,
    pub repetitions: u64,
    pub total_runs: u64,
    pub wall_seconds: f64,
}

fn check_timing(duration_us: f64, overhead_us: f64, repetitions: u64) -> Result<()> {
    if !(duration_us > 0.0 && duration_us.is_finite()) {
        return Err(Error::Config(format!(
            "signal duration must be positive, got {duration_us}"
        )));
    }
    if !(overhead_us >= 0.0 && overhead_us.is_finite()) {
        return Err(Error::Config(format!(
            "overhead must be non-negative, got {overhead_us}"
        )));
    }
    if repetitions == 0 {
        return Err(Error::Config("repetitions must be >= 1".into()));
    }
    Ok(())
}

/// Signal runs needed for `count` back-to-back windows of `tau_us`, each
/// followed by `overhead_us` of initialization and readout:
/// `ceil(count * (tau + t_o) / T)`.
///
/// Windows sit at fixed positions in the signal, so window `j` goes to run
/// `j mod runs`; the runs interleave with a stride that leaves at least the
/// overhead between consecutive windows of one run.
pub fn window_runs(count: u64, tau_us: f64, duration_us: f64, overhead_us: f64) -> Result<u64> {
    if tau_us + overhead_us > duration_us * (1.0 + 1e-12) {
        return Err(Error::Packing(format!(
            "a {tau_us} us window plus {overhead_us} us overhead exceeds the {duration_us} us signal"
        )));
    }
    let runs = (count as f64 * (tau_us + overhead_us) / duration_us * (1.0 - 1e-12)).ceil() as u64;
    Ok(runs.clamp(1, count.max(1)))
}

/// Runs taken by all echoes of Haar order `order`.
pub fn order_runs(order: u32, duration_us: f64, overhead_us: f64) -> Result<u64> {
    let count = DyadicIndex::count(order);
    window_runs(count, duration_us / count as f64, duration_us, overhead_us)
}

fn haar_runs_for_order(order: u32, duration_us: f64, overhead_us: f64) -> Result<Vec<SignalRun>> {
    let count = DyadicIndex::count(order);
    let tau = duration_us / count as f64;
    let runs = order_runs(order, duration_us, overhead_us)
        .map_err(|e| Error::Packing(format!("order {order}: {e}")))?;
    Ok((0..runs)
        .map(|r| SignalRun {
            sequences: (r..count)
                .step_by(runs as usize)
                .map(|j| PlannedSequence::Haar {
                    index: DyadicIndex::new(order, j).expect("shift within order"),
                    echo: EchoSequence {
                        start_us: j as f64 * tau,
                        tau_us: tau,
                    },
                })
                .collect(),
        })
        .collect())
}

fn mean_run(duration_us: f64, overhead_us: f64) -> Result<SignalRun> {
    window_runs(1, duration_us, duration_us, overhead_us)
        .map_err(|e| Error::Packing(format!("mean run: {e}")))?;
    Ok(SignalRun {
        sequences: vec![PlannedSequence::Mean(FreePrecession {
            start_us: 0.0,
            tau_us: duration_us,
        })],
    })
}

/// Haar plan for orders `1..=n` plus one free-precession run for `c0`.
pub fn plan_haar(n: u32, duration_us: f64, repetitions: u64, overhead_us: f64) -> Result<ProtocolPlan> {
    if n == 0 {
        return Err(Error::Config("Haar order must be >= 1".into()));
    }
    let orders: Vec<u32> = (1..=n).collect();
    plan_haar_orders(&orders, true, duration_us, repetitions, overhead_us)
}

/// Haar plan measuring only `orders`, optionally with the `c0` run.
pub fn plan_haar_orders(
    orders: &[u32],
    include_mean: bool,
    duration_us: f64,
    repetitions: u64,
    overhead_us: f64,
) -> Result<ProtocolPlan> {
    check_timing(duration_us, overhead_us, repetitions)?;
    let mut orders = orders.to_vec();
    orders.sort_unstable();
    orders.dedup();
    let Some(&max_order) = orders.last() else {
        return Err(Error::Config("at least one Haar order is required".into()));
    };
    if orders[0] == 0 || max_order > crate::wavelet::MAX_ORDER {
        return Err(Error::Config(format!("Haar orders must lie in 1..={}", crate::wavelet::MAX_ORDER)));
    }
    let mut runs = Vec::new();
    if include_mean {
        runs.push(mean_run(duration_us, overhead_us)?);
    }
    for &order in &orders {
        runs.extend(haar_runs_for_order(order, duration_us, overhead_us)?);
    }
    Ok(ProtocolPlan {
        kind: ProtocolKind::Haar,
        order: max_order,
        points: 1usize << max_order,
        duration_us,
        repetitions,
        overhead_us,
        run_overhead_us: 0.0,
        runs,
    })
}

/// Walsh plan: one full-length sequence, hence one run, per coefficient.
pub fn plan_walsh(n: u32, duration_us: f64, repetitions: u64, overhead_us: f64) -> Result<ProtocolPlan> {
    check_timing(duration_us, overhead_us, repetitions)?;
    if n > 24 {
        return Err(Error::Config(format!("Walsh order {n} too large")));
    }
    window_runs(1, duration_us, duration_us, overhead_us)?;
    let runs = (0..1u64 << n)
        .map(|m| SignalRun {
            sequences: vec![PlannedSequence::Walsh(WalshSequence {
                index: m,
                order: n,
                duration_us,
            })],
        })
        .collect();
    Ok(ProtocolPlan {
        kind: ProtocolKind::Walsh,
        order: n,
        points: 1usize << n,
        duration_us,
        repetitions,
        overhead_us,
        run_overhead_us: 0.0,
        runs,
    })
}

/// Sequential Ramsey plan: `points` free-precession windows of `T / points`.
pub fn plan_ramsey(points: usize, duration_us: f64, repetitions: u64, overhead_us: f64) -> Result<ProtocolPlan> {
    check_timing(duration_us, overhead_us, repetitions)?;
    if points == 0 {
        return Err(Error::Config("Ramsey point count must be >= 1".into()));
    }
    let tau = duration_us / points as f64;
    let runs = window_runs(points as u64, tau, duration_us, overhead_us)?;
    let layout = (0..runs as usize)
        .map(|r| SignalRun {
            sequences: (r..points)
                .step_by(runs as usize)
                .map(|k| PlannedSequence::Ramsey {
                    point: k,
                    window: FreePrecession {
                        start_us: k as f64 * tau,
                        tau_us: tau,
                    },
                })
                .collect(),
        })
        .collect();
    Ok(ProtocolPlan {
        kind: ProtocolKind::Ramsey,
        order: (points as f64).log2().ceil() as u32,
        points,
        duration_us,
        repetitions,
        overhead_us,
        run_overhead_us: 0.0,
        runs: layout,
    })
}

/// Total signal runs and wall-clock estimate of a plan.
pub fn run_budget(plan: &ProtocolPlan) -> RunBudget {
    let per_sweep = plan.runs.len() as u64;
    let total = per_sweep * plan.repetitions;
    RunBudget {
        signal_runs_per_sweep: per_sweep,
        repetitions: plan.repetitions,
        total_runs: total,
        wall_seconds: total as f64 * (plan.duration_us + plan.run_overhead_us) * 1e-6,
    }
}
