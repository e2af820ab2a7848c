//! Amplitude-resolution scaling laws for the Haar, Walsh and sequential
//! Ramsey reconstructions.
//!
//! These are proportionalities: the single-measurement resolution is fixed
//! as `KAPPA / (gamma sqrt(M tau T2))` and only ratios and scaling laws carry
//! physical meaning. Units follow the rest of the crate (microseconds,
//! microtesla, rad s^-1 T^-1).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prefactor of the single-measurement resolution.
pub const KAPPA: f64 = 1.0;

/// Largest order accepted by [`compare_protocols`].
pub const MAX_TABLE_ORDER: u32 = 16;

pub const TABLE_HEADER: &str =
    "n,N,haar_db_uT,walsh_db_uT,ramsey_db_uT,haar_runs,walsh_runs,gain_ramsey,gain_walsh_ratio";

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Smallest field detectable by one sequence of length `tau_us` repeated
/// `m` times: `KAPPA / (gamma sqrt(M tau T2))`, in microtesla.
pub fn min_detectable_field(m: f64, tau_us: f64, t2_us: f64, gamma: f64) -> Result<f64> {
    positive("M", m)?;
    positive("tau", tau_us)?;
    positive("T2", t2_us)?;
    positive("gamma", gamma)?;
    Ok(KAPPA / (gamma * 1e-12 * (m * tau_us * t2_us).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub order: u32,
    pub points: u64,
    pub repetitions: f64,
    pub duration_us: f64,
    pub t2_us: f64,
    pub t2_star_us: f64,
    pub gamma: f64,
    /// Single-coefficient resolution at each order `1..=n`.
    pub per_order_ut: Vec<f64>,
    /// Quadrature sum over every coefficient.
    pub total_sum_ut: f64,
    /// `sqrt((N^2 - 1) / (3 M T T2)) / gamma`.
    pub total_closed_form_ut: f64,
    pub gain_vs_ramsey: f64,
    /// Haar gain over Ramsey divided by Walsh gain over Ramsey.
    pub gain_vs_walsh: f64,
}

/// Resolution of an order-`n` Haar reconstruction, computed both as the
/// explicit coefficient-wise sum and in closed form.
pub fn haar_resolution(
    n: u32,
    m: f64,
    duration_us: f64,
    t2_us: f64,
    t2_star_us: f64,
    gamma: f64,
) -> Result<ResolutionReport> {
    if n == 0 || n > 30 {
        return Err(Error::Domain(format!("order must lie in 1..=30, got {n}")));
    }
    positive("T2*", t2_star_us)?;
    let mut per_order = Vec::with_capacity(n as usize);
    let mut sum_sq = 0.0;
    for order in 1..=n {
        let count = (1u64 << (order - 1)) as f64;
        let tau = duration_us / count;
        let db = min_detectable_field(m, tau, t2_us, gamma)?;
        per_order.push(db);
        sum_sq += count * db * db;
    }
    let points = 1u64 << n;
    let big_n = points as f64;
    let closed = KAPPA * ((big_n * big_n - 1.0) / (3.0 * m * duration_us * t2_us)).sqrt() / (gamma * 1e-12);
    Ok(ResolutionReport {
        order: n,
        points,
        repetitions: m,
        duration_us,
        t2_us,
        t2_star_us,
        gamma,
        per_order_ut: per_order,
        total_sum_ut: sum_sq.sqrt(),
        total_closed_form_ut: closed,
        gain_vs_ramsey: gain_over_ramsey(t2_us, t2_star_us, n)?,
        gain_vs_walsh: (3.0 / f64::from(n)).sqrt(),
    })
}

fn check_times(t2_us: f64, t2_star_us: f64) -> Result<()> {
    positive("T2*", t2_star_us)?;
    if !(t2_us > t2_star_us && t2_us.is_finite()) {
        return Err(Error::Domain(format!(
            "need T2 > T2* > 0, got T2 = {t2_us}, T2* = {t2_star_us}"
        )));
    }
    Ok(())
}

/// Haar sensitivity gain over sequential Ramsey: `sqrt(T2/T2*) sqrt(3/n)`.
pub fn gain_over_ramsey(t2_us: f64, t2_star_us: f64, n: u32) -> Result<f64> {
    check_times(t2_us, t2_star_us)?;
    if n == 0 {
        return Err(Error::Domain("order must be >= 1".into()));
    }
    Ok((t2_us / t2_star_us).sqrt() * (3.0 / f64::from(n)).sqrt())
}

/// Walsh sensitivity gain over sequential Ramsey: `sqrt(T2/T2*)`.
pub fn walsh_gain_over_ramsey(t2_us: f64, t2_star_us: f64) -> Result<f64> {
    check_times(t2_us, t2_star_us)?;
    Ok((t2_us / t2_star_us).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n: u32,
    pub points: u64,
    pub haar_db_ut: f64,
    pub walsh_db_ut: f64,
    pub ramsey_db_ut: f64,
    pub haar_runs: u64,
    pub walsh_runs: u64,
    pub gain_ramsey: f64,
    pub gain_walsh_ratio: f64,
}

/// Per-order comparison of the three reconstructions.
///
/// The Haar column is the closed-form resolution; the Ramsey and Walsh
/// columns follow from it through the two gain formulas, so the table is
/// internally consistent: `haar / walsh = sqrt(n / 3)` on every row. Run
/// counts assume zero overhead and include the `c0` run for Haar.
pub fn compare_protocols(
    t2_us: f64,
    t2_star_us: f64,
    m: f64,
    duration_us: f64,
    n_max: u32,
    gamma: f64,
) -> Result<Vec<ComparisonRow>> {
    if n_max == 0 || n_max > MAX_TABLE_ORDER {
        return Err(Error::Domain(format!(
            "n_max must lie in 1..={MAX_TABLE_ORDER}, got {n_max}"
        )));
    }
    positive("T", duration_us)?;
    (1..=n_max)
        .map(|n| {
            let report = haar_resolution(n, m, duration_us, t2_us, t2_star_us, gamma)?;
            let gain_haar = report.gain_vs_ramsey;
            let gain_walsh = walsh_gain_over_ramsey(t2_us, t2_star_us)?;
            let haar = report.total_closed_form_ut;
            let ramsey = haar * gain_haar;
            Ok(ComparisonRow {
                n,
                points: report.points,
                haar_db_ut: haar,
                walsh_db_ut: ramsey / gain_walsh,
                ramsey_db_ut: ramsey,
                haar_runs: u64::from(n) + 1,
                walsh_runs: report.points,
                gain_ramsey: gain_haar,
                gain_walsh_ratio: gain_haar / gain_walsh,
            })
        })
        .collect()
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], mut out: W) -> Result<()> {
    writeln!(out, "{TABLE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e}",
            r.n,
            r.points,
            r.haar_db_ut,
            r.walsh_db_ut,
            r.ramsey_db_ut,
            r.haar_runs,
            r.walsh_runs,
            r.gain_ramsey,
            r.gain_walsh_ratio
        )?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinsim::ELECTRON_GAMMA as G;

    #[test]
    fn square_root_laws() {
        let a = min_detectable_field(100.0, 10.0, 300.0, G).unwrap();
        let b = min_detectable_field(400.0, 10.0, 300.0, G).unwrap();
        let c = min_detectable_field(100.0, 5.0, 300.0, G).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!((c / a - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn collapses_onto_product() {
        let reference = min_detectable_field(1.0, 1.0, 1.0, G).unwrap();
        for &m in &[1.0, 10.0, 1e4] {
            for &tau in &[0.5, 3.0, 40.0] {
                for &t2 in &[50.0, 300.0, 2000.0] {
                    let v = min_detectable_field(m, tau, t2, G).unwrap();
                    let expected = reference / (m * tau * t2).sqrt();
                    assert!(((v - expected) / expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_non_positive() {
        assert!(min_detectable_field(0.0, 1.0, 1.0, G).is_err());
        assert!(min_detectable_field(1.0, -1.0, 1.0, G).is_err());
    }

    #[test]
    fn first_order_sum_is_closed_form() {
        let r = haar_resolution(1, 1000.0, 100.0, 300.0, 3.0, G).unwrap();
        let expected = 1.0 / (G * 1e-12 * (1000.0f64 * 100.0 * 300.0).sqrt());
        assert!((r.total_sum_ut - expected).abs() < 1e-12 * expected);
        assert!((r.total_closed_form_ut - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn quadrupling_m_halves_total() {
        let a = haar_resolution(6, 1000.0, 100.0, 300.0, 3.0, G).unwrap();
        let b = haar_resolution(6, 4000.0, 100.0, 300.0, 3.0, G).unwrap();
        assert!((a.total_sum_ut / b.total_sum_ut - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gain_examples() {
        assert!((gain_over_ramsey(300.0, 3.0, 3).unwrap() - 10.0).abs() < 1e-12);
        // T2/T2* = 100, n = 10: 10 sqrt(0.3).
        assert!((gain_over_ramsey(300.0, 3.0, 10).unwrap() - 5.477_225_575_051_661).abs() < 1e-12);
        assert!(gain_over_ramsey(3.0, 3.0, 1).is_err());
        assert!(gain_over_ramsey(300.0, 3.0, 0).is_err());
    }

    #[test]
    fn haar_beats_walsh_only_at_low_order() {
        for n in 1..=12 {
            let h = gain_over_ramsey(300.0, 3.0, n).unwrap();
            let w = walsh_gain_over_ramsey(300.0, 3.0).unwrap();
            if n <= 3 {
                assert!(h >= w);
            } else {
                assert!(h < w);
            }
        }
    }

    #[test]
    fn table_guard_and_csv() {
        assert!(compare_protocols(300.0, 3.0, 1e6, 100.0, 17, G).is_err());
        let rows = compare_protocols(300.0, 3.0, 1e6, 100.0, 4, G).unwrap();
        let mut buf = Vec::new();
        write_comparison_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(TABLE_HEADER));
        assert_eq!(text.lines().count(), 5);
    }
}
