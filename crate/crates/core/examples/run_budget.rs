//! Signal runs per sweep for each protocol, with and without measurement
//! overhead.
//!
//!     cargo run --example run_budget

use haarsense::protocol::{
    order_runs, plan_haar, plan_haar_orders, plan_ramsey, plan_walsh, run_budget, PlannedSequence,
};

fn main() -> haarsense::Result<()> {
    let duration = 64.0;
    println!(" n   haar  walsh  ratio");
    for n in 1..=10 {
        let h = run_budget(&plan_haar(n, duration, 1, 0.0)?).signal_runs_per_sweep;
        let w = run_budget(&plan_walsh(n, duration, 1, 0.0)?).signal_runs_per_sweep;
        println!("{n:2}  {h:5}  {w:5}  {:6.1}", w as f64 / h as f64);
    }

    // A 2 us reset after every echo. Echoes no longer tile one run, and a
    // full-window echo (order 1, or the mean) no longer fits at all.
    let overhead = 2.0;
    println!("\nwith {overhead} us overhead per echo:");
    for order in 1..=6 {
        match order_runs(order, duration, overhead) {
            Ok(r) => println!("  order {order}: {r} run(s)"),
            Err(e) => println!("  order {order}: {e}"),
        }
    }

    let mut plan = plan_haar_orders(&[2, 3, 4, 5, 6], false, duration, 1_000_000, overhead)?;
    plan.run_overhead_us = 10.0;
    let budget = run_budget(&plan);
    println!("\norders 2..=6: {} runs per sweep", budget.signal_runs_per_sweep);
    for (r, run) in plan.runs.iter().enumerate() {
        let labels: Vec<String> = run
            .sequences
            .iter()
            .map(|s| match s {
                PlannedSequence::Haar { index, .. } => format!("h{}^{}", index.order(), index.shift()),
                PlannedSequence::Mean(_) => "c0".into(),
                other => format!("{other:?}"),
            })
            .collect();
        println!("  run {r:2}: {}", labels.join(" "));
    }
    println!(
        "M = 1e6 with 10 us between runs: {} runs, {:.1} s",
        budget.total_runs, budget.wall_seconds
    );

    let ramsey = run_budget(&plan_ramsey(32, duration, 1, 0.0)?);
    println!("\n32-point Ramsey: {} run(s) per sweep", ramsey.signal_runs_per_sweep);
    Ok(())
}
