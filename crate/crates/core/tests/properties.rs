use haarsense::protocol::{
    plan_haar, plan_walsh, run_budget, run_haar_protocol, run_sparse_haar, run_walsh_protocol,
    MeasurementOptions,
};
use haarsense::sensitivity::{compare_protocols, haar_resolution};
use haarsense::signals::SampledSignal;
use haarsense::spinsim::{Readout, SensorParams, ELECTRON_GAMMA};
use haarsense::wavelet::{
    haar_partial_sum, haar_reconstruct_points, haar_transform, inner_product, walsh_inner_product,
    walsh_reconstruct, walsh_transform, DyadicIndex, HaarBasis,
};
use proptest::prelude::*;

/// Signal constant on `2^order` bins with `per_bin` samples each.
fn steps(levels: &[f64], per_bin: usize, duration: f64) -> SampledSignal {
    let samples = levels
        .iter()
        .flat_map(|v| std::iter::repeat_n(*v, per_bin))
        .collect();
    SampledSignal::new(duration, samples).unwrap()
}

fn step_levels(max_order: u32, scale: f64) -> impl Strategy<Value = (u32, Vec<f64>)> {
    (1..=max_order).prop_flat_map(move |n| {
        (Just(n), prop::collection::vec(-scale..scale, 1usize << n))
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dyadic_steps_round_trip((n, levels) in step_levels(7, 10.0), per_bin in 1usize..4) {
        let s = steps(&levels, per_bin, 8.0);
        let recon = haar_reconstruct_points(&haar_transform(&s, n).unwrap(), n).unwrap();
        let tol = 1e-12 * max_abs(&levels).max(1.0);
        for (a, b) in recon.points().iter().zip(&levels) {
            prop_assert!((a - b).abs() <= tol, "{a} vs {b}");
        }
    }

    #[test]
    fn refinement_never_increases_error(samples in prop::collection::vec(-1.0f64..1.0, 256)) {
        let s = SampledSignal::new(1.0, samples.clone()).unwrap();
        let coeffs = haar_transform(&s, 8).unwrap();
        let mut last = f64::INFINITY;
        for n in 0..=8 {
            let recon = haar_reconstruct_points(&coeffs, n).unwrap();
            let per = 256 / recon.len();
            let held: Vec<f64> = (0..256).map(|k| recon.points()[k / per]).collect();
            let err = l2(&held, &samples);
            prop_assert!(err <= last + 1e-12, "order {n}: {err} > {last}");
            last = err;
        }
        prop_assert!(last < 1e-12);
    }

    #[test]
    fn transform_is_linear(
        x in prop::collection::vec(-1.0f64..1.0, 64),
        y in prop::collection::vec(-1.0f64..1.0, 64),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let sx = SampledSignal::new(4.0, x).unwrap();
        let sy = SampledSignal::new(4.0, y).unwrap();
        let combo = sx.scaled(a).add(&sy.scaled(b)).unwrap();
        let (cx, cy, cc) = (
            haar_transform(&sx, 5).unwrap(),
            haar_transform(&sy, 5).unwrap(),
            haar_transform(&combo, 5).unwrap(),
        );
        let lhs = cc.mean().value;
        let rhs = a * cx.mean().value + b * cy.mean().value;
        prop_assert!((lhs - rhs).abs() < 1e-12);
        for ((i, p), ((_, q), (_, r))) in cc.iter().zip(cx.iter().zip(cy.iter())) {
            prop_assert!((p.value - (a * q.value + b * r.value)).abs() < 1e-12, "{i:?}");
        }
    }

    #[test]
    fn walsh_and_haar_agree_at_bin_centers(samples in prop::collection::vec(-1.0f64..1.0, 128), n in 1u32..=6) {
        let s = SampledSignal::new(2.0, samples).unwrap();
        let h = haar_reconstruct_points(&haar_transform(&s, n).unwrap(), n).unwrap();
        let w = walsh_reconstruct(&walsh_transform(&s, n).unwrap()).unwrap();
        for (a, b) in h.points().iter().zip(w.points()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_sum_matches_bin_value(samples in prop::collection::vec(-1.0f64..1.0, 64), x in 0.0f64..1.0) {
        let s = SampledSignal::new(1.0, samples).unwrap();
        let coeffs = haar_transform(&s, 4).unwrap();
        let recon = haar_reconstruct_points(&coeffs, 4).unwrap();
        let bin = ((x * 16.0) as usize).min(15);
        prop_assert!((haar_partial_sum(&coeffs, 4, x).unwrap() - recon.points()[bin]).abs() < 1e-12);
    }

    #[test]
    fn basis_is_orthonormal(i in 1u32..=8, j in 0u64..128, k in 1u32..=8, l in 0u64..128) {
        let j = j % DyadicIndex::count(i);
        let l = l % DyadicIndex::count(k);
        let a = HaarBasis::Wavelet(DyadicIndex::new(i, j).unwrap());
        let b = HaarBasis::Wavelet(DyadicIndex::new(k, l).unwrap());
        let expected = if (i, j) == (k, l) { 1.0 } else { 0.0 };
        prop_assert!((inner_product(a, b) - expected).abs() < 1e-12);
        prop_assert!(inner_product(HaarBasis::Scaling, a).abs() < 1e-12);
    }

    #[test]
    fn walsh_is_orthonormal(n in 1u32..=8, a in 0u64..256, b in 0u64..256) {
        let (a, b) = (a % (1 << n), b % (1 << n));
        let expected = if a == b { 1.0 } else { 0.0 };
        prop_assert!((walsh_inner_product(a, b, n) - expected).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noiseless_protocol_equals_transform((n, levels) in step_levels(5, 0.04)) {
        let s = steps(&levels, 4, 16.0);
        let params = SensorParams::default();
        let measured = run_haar_protocol(&s, &params, n, &MeasurementOptions::ideal()).unwrap();
        let direct = haar_transform(&s, n).unwrap();
        prop_assert!((measured.mean().value - direct.mean().value).abs() < 1e-9);
        for ((i, a), (_, b)) in measured.iter().zip(direct.iter()) {
            prop_assert!((a.value - b.value).abs() < 1e-12, "{i:?}: {} vs {}", a.value, b.value);
        }
        let (walsh, _) = run_walsh_protocol(&s, &params, n, &MeasurementOptions::ideal()).unwrap();
        let w = walsh_reconstruct(&walsh).unwrap();
        let h = haar_reconstruct_points(&measured, n).unwrap();
        for (a, b) in w.points().iter().zip(h.points()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn parallel_and_sequential_agree(seed in any::<u64>(), (n, levels) in step_levels(5, 0.04)) {
        let s = steps(&levels, 4, 16.0);
        let params = SensorParams::default();
        let options = MeasurementOptions::new(Readout::Shots(50_000), seed)
            .with_mean(haarsense::protocol::MeanSource::None);
        let orders: Vec<u32> = (1..=n).collect();
        let par = run_sparse_haar(&s, &params, &orders, &options);
        let seq = run_sparse_haar(&s, &params, &orders, &options.sequential());
        match (par, seq) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn run_count_law(n in 1u32..=12, duration in 1.0f64..1000.0) {
        let haar = run_budget(&plan_haar(n, duration, 1, 0.0).unwrap());
        let walsh = run_budget(&plan_walsh(n, duration, 1, 0.0).unwrap());
        prop_assert_eq!(haar.signal_runs_per_sweep, u64::from(n) + 1);
        prop_assert_eq!(walsh.signal_runs_per_sweep, 1u64 << n);
    }

    #[test]
    fn runs_scale_with_repetitions(n in 1u32..=8, m in 1u64..1_000_000) {
        let b = run_budget(&plan_haar(n, 64.0, m, 0.0).unwrap());
        prop_assert_eq!(b.total_runs, (u64::from(n) + 1) * m);
    }

    #[test]
    fn sensitivity_sum_matches_closed_form(
        n in 1u32..=12,
        m in 1.0f64..1e8,
        duration in 1.0f64..1e4,
        t2 in 10.0f64..1e4,
    ) {
        let r = haar_resolution(n, m, duration, t2, 1.0, ELECTRON_GAMMA).unwrap();
        prop_assert!(((r.total_sum_ut - r.total_closed_form_ut) / r.total_closed_form_ut).abs() < 1e-9);
    }

    #[test]
    fn table_gain_ratio_identity(ratio in 1.5f64..1e4, n_max in 1u32..=16) {
        let rows = compare_protocols(ratio, 1.0, 1e6, 100.0, n_max, ELECTRON_GAMMA).unwrap();
        for r in rows {
            let expected = (3.0 / f64::from(r.n)).sqrt();
            prop_assert!((r.gain_walsh_ratio - expected).abs() < 1e-12 * expected);
            prop_assert!((r.haar_db_ut / r.walsh_db_ut - 1.0 / expected).abs() < 1e-9);
        }
    }
}
