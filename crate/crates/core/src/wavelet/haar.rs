use serde::{Deserialize, Serialize};

use super::Reconstruction;
use crate::error::{Error, Result};
use crate::signals::SampledSignal;

/// Position `(order, shift)` of a Haar wavelet `h_i^j`.
///
/// Order `i >= 1` sets the dilation: the support has width `2^-(i-1)` and
/// amplitude `2^((i-1)/2)`. Shift `j` runs over `0..2^(i-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicIndex {
    order: u32,
    shift: u64,
}

/// Highest order supported; keeps `2^(i-1)` and the sample arithmetic exact.
pub const MAX_ORDER: u32 = 30;

impl DyadicIndex {
    pub fn new(order: u32, shift: u64) -> Result<Self> {
        if order == 0 || order > MAX_ORDER || shift >= (1u64 << (order - 1)) {
            return Err(Error::InvalidIndex { order, shift });
        }
        Ok(Self { order, shift })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn shift(&self) -> u64 {
        self.shift
    }

    /// Number of wavelets at this order.
    pub fn count(order: u32) -> u64 {
        1u64 << (order - 1)
    }

    pub fn amplitude(&self) -> f64 {
        2f64.powf(f64::from(self.order - 1) / 2.0)
    }

    /// Support `[start, mid, end)` on the normalized axis; the wavelet is
    /// positive before `mid` and negative after.
    pub fn support(&self) -> (f64, f64, f64) {
        let width = 1.0 / Self::count(self.order) as f64;
        let start = self.shift as f64 * width;
        (start, start + 0.5 * width, start + width)
    }

    fn value(&self, x: f64) -> f64 {
        let (start, mid, end) = self.support();
        if x >= start && x < mid {
            self.amplitude()
        } else if x >= mid && x < end {
            -self.amplitude()
        } else {
            0.0
        }
    }
}

pub(crate) fn check_unit_interval(x: f64) -> Result<()> {
    if (0.0..1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} outside [0, 1)")))
    }
}

pub fn haar_eval(idx: DyadicIndex, x: f64) -> Result<f64> {
    check_unit_interval(x)?;
    Ok(idx.value(x))
}

/// Member of the complete Haar system: the constant scaling function or a
/// wavelet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaarBasis {
    Scaling,
    Wavelet(DyadicIndex),
}

impl HaarBasis {
    /// Constant pieces `(start, end, value)` covering the support.
    fn pieces(&self) -> Vec<(f64, f64, f64)> {
        match self {
            HaarBasis::Scaling => vec![(0.0, 1.0, 1.0)],
            HaarBasis::Wavelet(idx) => {
                let (start, mid, end) = idx.support();
                let a = idx.amplitude();
                vec![(start, mid, a), (mid, end, -a)]
            }
        }
    }
}

/// Exact `L2[0,1)` inner product of two basis functions, by summing the
/// overlaps of their constant pieces.
pub fn inner_product(a: HaarBasis, b: HaarBasis) -> f64 {
    let mut total = 0.0;
    for (a0, a1, av) in a.pieces() {
        for (b0, b1, bv) in b.pieces() {
            let overlap = (a1.min(b1) - a0.max(b0)).max(0.0);
            total += av * bv * overlap;
        }
    }
    total
}

/// A coefficient with its one-sigma uncertainty, both in microtesla.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Coefficient {
    pub value: f64,
    pub sigma: f64,
}

impl Coefficient {
    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }
}

/// All coefficients of one order. Unmeasured levels hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarLevel {
    pub coefficients: Vec<Coefficient>,
    pub measured: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarCoefficients {
    mean: Coefficient,
    levels: Vec<HaarLevel>,
}

impl HaarCoefficients {
    pub fn new(mean: Coefficient, levels: Vec<HaarLevel>) -> Result<Self> {
        for (k, level) in levels.iter().enumerate() {
            let order = k as u32 + 1;
            let expected = DyadicIndex::count(order) as usize;
            if level.coefficients.len() != expected {
                return Err(Error::LengthMismatch {
                    expected,
                    actual: level.coefficients.len(),
                });
            }
            if level
                .coefficients
                .iter()
                .any(|c| !(c.sigma >= 0.0) || !c.value.is_finite())
            {
                return Err(Error::InvalidSignal(format!(
                    "order {order} has a non-finite value or negative sigma"
                )));
            }
        }
        if !(mean.sigma >= 0.0) || !mean.value.is_finite() {
            return Err(Error::InvalidSignal("mean has invalid value or sigma".into()));
        }
        Ok(Self { mean, levels })
    }

    /// All-zero coefficients up to `max_order`, every level marked measured.
    pub fn zeros(max_order: u32) -> Self {
        let levels = (1..=max_order)
            .map(|i| HaarLevel {
                coefficients: vec![Coefficient::default(); DyadicIndex::count(i) as usize],
                measured: true,
            })
            .collect();
        Self {
            mean: Coefficient::default(),
            levels,
        }
    }

    pub fn max_order(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn mean(&self) -> Coefficient {
        self.mean
    }

    pub fn set_mean(&mut self, mean: Coefficient) {
        self.mean = mean;
    }

    pub fn levels(&self) -> &[HaarLevel] {
        &self.levels
    }

    pub fn level(&self, order: u32) -> Result<&HaarLevel> {
        self.check_order(order)?;
        Ok(&self.levels[order as usize - 1])
    }

    pub fn get(&self, idx: DyadicIndex) -> Result<Coefficient> {
        Ok(self.level(idx.order())?.coefficients[idx.shift() as usize])
    }

    pub fn set(&mut self, idx: DyadicIndex, c: Coefficient) -> Result<()> {
        self.check_order(idx.order())?;
        self.levels[idx.order() as usize - 1].coefficients[idx.shift() as usize] = c;
        Ok(())
    }

    /// Orders whose coefficients were actually measured.
    pub fn measured_orders(&self) -> Vec<u32> {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.measured)
            .map(|(k, _)| k as u32 + 1)
            .collect()
    }

    /// Iterate `(index, coefficient)` over every stored wavelet coefficient.
    pub fn iter(&self) -> impl Iterator<Item = (DyadicIndex, Coefficient)> + '_ {
        self.levels.iter().enumerate().flat_map(|(k, level)| {
            level.coefficients.iter().enumerate().map(move |(j, c)| {
                (
                    DyadicIndex {
                        order: k as u32 + 1,
                        shift: j as u64,
                    },
                    *c,
                )
            })
        })
    }

    fn check_order(&self, order: u32) -> Result<()> {
        if order == 0 || order > self.max_order() {
            return Err(Error::OrderOutOfRange {
                requested: order,
                max: self.max_order(),
            });
        }
        Ok(())
    }
}

/// Midpoint-rule Haar coefficients of `signal` up to order `n`, on the
/// normalized axis `x = t/T`. Uncertainties are zero.
pub fn haar_transform(signal: &SampledSignal, n: u32) -> Result<HaarCoefficients> {
    if n > MAX_ORDER {
        return Err(Error::OrderOutOfRange {
            requested: n,
            max: MAX_ORDER,
        });
    }
    let k_total = signal.len();
    if (k_total as u64) < (1u64 << n) {
        return Err(Error::InsufficientResolution(format!(
            "{k_total} samples cannot resolve order {n} (need at least {})",
            1u64 << n
        )));
    }
    let weight = 1.0 / k_total as f64;
    let mean = signal.samples().iter().sum::<f64>() * weight;

    let mut levels = Vec::with_capacity(n as usize);
    for order in 1..=n {
        let count = DyadicIndex::count(order) as usize;
        let amp = 2f64.powf(f64::from(order - 1) / 2.0);
        let mut sums = vec![0.0; count];
        for (k, &f) in signal.samples().iter().enumerate() {
            let x = signal.normalized_time(k);
            // Position in units of half-supports; even halves are positive.
            let half = (x * 2.0 * count as f64).floor() as usize;
            let j = half / 2;
            if half.is_multiple_of(2) {
                sums[j] += f;
            } else {
                sums[j] -= f;
            }
        }
        levels.push(HaarLevel {
            coefficients: sums
                .into_iter()
                .map(|s| Coefficient::exact(s * amp * weight))
                .collect(),
            measured: true,
        });
    }
    HaarCoefficients::new(Coefficient::exact(mean), levels)
}

fn check_partial_order(coeffs: &HaarCoefficients, n: u32) -> Result<()> {
    if n > coeffs.max_order() {
        return Err(Error::OrderOutOfRange {
            requested: n,
            max: coeffs.max_order(),
        });
    }
    Ok(())
}

/// `S_n(x) = c0 + sum over orders i <= n of c_i^j h_i^j(x)`.
pub fn haar_partial_sum(coeffs: &HaarCoefficients, n: u32, x: f64) -> Result<f64> {
    check_partial_order(coeffs, n)?;
    check_unit_interval(x)?;
    let mut total = coeffs.mean().value;
    for order in 1..=n {
        let count = DyadicIndex::count(order);
        let j = ((x * count as f64).floor() as u64).min(count - 1);
        let idx = DyadicIndex { order, shift: j };
        total += coeffs.levels[order as usize - 1].coefficients[j as usize].value * idx.value(x);
    }
    Ok(total)
}

/// Evaluate `S_n` at the `2^n` dyadic bin centers, propagating independent
/// coefficient uncertainties to each point.
pub fn haar_reconstruct_points(coeffs: &HaarCoefficients, n: u32) -> Result<Reconstruction> {
    check_partial_order(coeffs, n)?;
    let bins = 1usize << n;
    let mut points = Vec::with_capacity(bins);
    let mut sigmas = Vec::with_capacity(bins);
    for k in 0..bins {
        let x = (k as f64 + 0.5) / bins as f64;
        let mut value = coeffs.mean.value;
        let mut variance = coeffs.mean.sigma * coeffs.mean.sigma;
        for order in 1..=n {
            // Bin k lies in wavelet j = k >> (n - order + 1) at this order.
            let j = (k >> (n - order + 1)) as u64;
            let idx = DyadicIndex { order, shift: j };
            let h = idx.value(x);
            let c = coeffs.levels[order as usize - 1].coefficients[j as usize];
            value += c.value * h;
            variance += h * h * c.sigma * c.sigma;
        }
        points.push(value);
        sigmas.push(variance.sqrt());
    }
    Reconstruction::new(n, points, sigmas)
}
