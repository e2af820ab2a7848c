use super::haar::check_unit_interval;
use super::Reconstruction;
use crate::error::{Error, Result};
use crate::signals::SampledSignal;

/// Sequency-ordered Walsh spectrum of order `n` (length `2^n`).
#[derive(Debug, Clone, PartialEq)]
pub struct WalshSpectrum {
    order: u32,
    coefficients: Vec<f64>,
    sigmas: Vec<f64>,
}

impl WalshSpectrum {
    pub fn new(order: u32, coefficients: Vec<f64>, sigmas: Vec<f64>) -> Result<Self> {
        let expected = 1usize
            .checked_shl(order)
            .ok_or_else(|| Error::Domain(format!("walsh order {order} too large")))?;
        for len in [coefficients.len(), sigmas.len()] {
            if len != expected {
                return Err(Error::LengthMismatch {
                    expected,
                    actual: len,
                });
            }
        }
        if sigmas.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidSignal("negative sigma in spectrum".into()));
        }
        Ok(Self {
            order,
            coefficients,
            sigmas,
        })
    }

    pub fn exact(order: u32, coefficients: Vec<f64>) -> Result<Self> {
        let n = coefficients.len();
        Self::new(order, coefficients, vec![0.0; n])
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }
}

/// Rademacher function `r_k(x)`: the sign of the k-th binary digit of `x`.
fn rademacher(k: u32, x: f64) -> f64 {
    let digit = (x * 2f64.powi(k as i32)).floor() % 2.0;
    if digit == 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Sequency-ordered Walsh function without the domain check.
pub(crate) fn walsh_value(m: u64, x: f64) -> f64 {
    let gray = m ^ (m >> 1);
    let mut value = 1.0;
    let mut bits = gray;
    let mut k = 1;
    while bits != 0 {
        if bits & 1 == 1 {
            value *= rademacher(k, x);
        }
        bits >>= 1;
        k += 1;
    }
    value
}

/// Walsh function `w_m(x)` in sequency order: `w_m` has exactly `m` sign
/// changes on `[0, 1)`.
pub fn walsh_eval(m: u64, x: f64) -> Result<f64> {
    check_unit_interval(x)?;
    Ok(walsh_value(m, x))
}

/// Number of sign changes (pi pulses) in `w_m`.
pub fn walsh_sign_changes(m: u64) -> u64 {
    m
}

/// Midpoint-rule projection onto the first `2^n` Walsh functions.
pub fn walsh_transform(signal: &SampledSignal, n: u32) -> Result<WalshSpectrum> {
    let size = 1usize << n;
    if signal.len() < size {
        return Err(Error::InsufficientResolution(format!(
            "{} samples cannot resolve {size} Walsh functions",
            signal.len()
        )));
    }
    let weight = 1.0 / signal.len() as f64;
    let mut coefficients = vec![0.0; size];
    for (k, &f) in signal.samples().iter().enumerate() {
        let x = signal.normalized_time(k);
        for (m, c) in coefficients.iter_mut().enumerate() {
            *c += f * walsh_value(m as u64, x);
        }
    }
    coefficients.iter_mut().for_each(|c| *c *= weight);
    WalshSpectrum::exact(n, coefficients)
}

/// Inverse transform evaluated at the `2^n` dyadic bin centers.
pub fn walsh_inverse(spectrum: &WalshSpectrum) -> Vec<f64> {
    let size = spectrum.coefficients.len();
    (0..size)
        .map(|k| {
            let x = (k as f64 + 0.5) / size as f64;
            spectrum
                .coefficients
                .iter()
                .enumerate()
                .map(|(m, c)| c * walsh_value(m as u64, x))
                .sum()
        })
        .collect()
}

/// Inverse transform with independent-coefficient uncertainty propagation.
/// Every Walsh function has unit magnitude, so each point carries the
/// quadrature sum of all coefficient sigmas.
pub fn walsh_reconstruct(spectrum: &WalshSpectrum) -> Result<Reconstruction> {
    let points = walsh_inverse(spectrum);
    let sigma = spectrum.sigmas.iter().map(|s| s * s).sum::<f64>().sqrt();
    let n = points.len();
    Reconstruction::new(spectrum.order, points, vec![sigma; n])
}

/// Exact `L2[0,1)` inner product of `w_a` and `w_b`.
///
/// Both are products of Rademacher functions and therefore constant on
/// dyadic bins; on bin `k` of `2^bits` the factor `r_j` is the sign of bit
/// `bits - j` of `k`. Indices at or above `2^n` widen the grid as needed.
pub fn walsh_inner_product(a: u64, b: u64, n: u32) -> f64 {
    let factors = (a ^ (a >> 1)) ^ (b ^ (b >> 1));
    let bits = n.max(64 - factors.leading_zeros());
    if bits == 0 {
        return 1.0;
    }
    let bins = 1u64 << bits;
    let sum: i64 = (0..bins)
        .map(|k| {
            let digits = k.reverse_bits() >> (64 - bits);
            if (factors & digits).count_ones().is_multiple_of(2) {
                1
            } else {
                -1
            }
        })
        .sum();
    sum as f64 / bins as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rows of the Sylvester-Hadamard matrix sorted by number of sign
    /// changes; an independent construction of sequency-ordered Walsh.
    fn hadamard_sequency(n: u32) -> Vec<Vec<f64>> {
        let mut h = vec![vec![1.0]];
        for _ in 0..n {
            let size = h.len();
            let mut next = vec![vec![0.0; 2 * size]; 2 * size];
            for r in 0..size {
                for c in 0..size {
                    next[r][c] = h[r][c];
                    next[r][c + size] = h[r][c];
                    next[r + size][c] = h[r][c];
                    next[r + size][c + size] = -h[r][c];
                }
            }
            h = next;
        }
        let changes = |row: &Vec<f64>| row.windows(2).filter(|w| w[0] != w[1]).count();
        h.sort_by_key(changes);
        h
    }

    #[test]
    fn low_index_values() {
        assert_eq!(walsh_eval(0, 0.9).unwrap(), 1.0);
        assert_eq!(walsh_eval(1, 0.25).unwrap(), 1.0);
        assert_eq!(walsh_eval(1, 0.75).unwrap(), -1.0);
        assert!(walsh_eval(1, 1.0).is_err());
    }

    #[test]
    fn matches_sorted_hadamard_rows() {
        for n in 1..=6 {
            let rows = hadamard_sequency(n);
            let size = rows.len();
            for (m, row) in rows.iter().enumerate() {
                for (k, &expected) in row.iter().enumerate() {
                    let x = (k as f64 + 0.5) / size as f64;
                    assert_eq!(walsh_value(m as u64, x), expected, "n={n} m={m} k={k}");
                }
            }
        }
        // w_3 at x = 0.3 sits in the second quarter of + - + -.
        let rows = hadamard_sequency(2);
        assert_eq!(walsh_eval(3, 0.3).unwrap(), rows[3][1]);
        assert_eq!(walsh_eval(3, 0.3).unwrap(), -1.0);
    }

    #[test]
    fn constant_signal_spectrum() {
        let s = SampledSignal::new(3.0, vec![1.5; 64]).unwrap();
        let w = walsh_transform(&s, 3).unwrap();
        assert_eq!(w.coefficients()[0], 1.5);
        assert!(w.coefficients()[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(matches!(
            WalshSpectrum::exact(3, vec![0.0; 7]),
            Err(Error::LengthMismatch { expected: 8, actual: 7 })
        ));
    }

    #[test]
    fn sigma_propagates_in_quadrature() {
        let w = WalshSpectrum::new(1, vec![0.0, 0.0], vec![3.0, 4.0]).unwrap();
        let r = walsh_reconstruct(&w).unwrap();
        assert_eq!(r.sigmas(), &[5.0, 5.0]);
    }

    #[test]
    fn inner_product_matches_fine_sampling() {
        // 2^10 midpoints resolve every index below 1024.
        let sampled = |a: u64, b: u64| {
            (0..1024)
                .map(|k| {
                    let x = (k as f64 + 0.5) / 1024.0;
                    walsh_value(a, x) * walsh_value(b, x)
                })
                .sum::<f64>()
                / 1024.0
        };
        for (a, b, n) in [(0, 0, 0), (3, 3, 2), (3, 5, 3), (7, 9, 2), (200, 200, 3), (513, 1, 4)] {
            assert_eq!(walsh_inner_product(a, b, n), sampled(a, b), "({a}, {b}, {n})");
        }
    }
}
