//! The Haar system on [0, 1): evaluation, orthonormality, and the
//! transform of a sampled signal.
//!
//!     cargo run --example haar_basis

use haarsense::signals::{generate, SignalSpec};
use haarsense::wavelet::{
    haar_eval, haar_partial_sum, haar_transform, inner_product, DyadicIndex, HaarBasis,
};

fn main() -> haarsense::Result<()> {
    // h_3^1: support [1/4, 1/2), amplitude 2.
    let h = DyadicIndex::new(3, 1)?;
    let (start, mid, end) = h.support();
    println!("h_3^1 support [{start}, {end}), sign change at {mid}, amplitude {}", h.amplitude());
    for x in [0.2, 0.3, 0.4, 0.6] {
        println!("  h_3^1({x}) = {:+}", haar_eval(h, x)?);
    }

    let a = HaarBasis::Wavelet(DyadicIndex::new(4, 5)?);
    let b = HaarBasis::Wavelet(DyadicIndex::new(2, 1)?);
    println!(
        "<h_4^5, h_4^5> = {}, <h_4^5, h_2^1> = {}, <1, h_2^1> = {}",
        inner_product(a, a),
        inner_product(a, b),
        inner_product(HaarBasis::Scaling, b)
    );

    let signal = generate(
        &SignalSpec::Sinusoid { amplitude_ut: 1.0, period_us: 1.0, phase_rad: 0.0 },
        1.0,
        1024,
    )?;
    let coeffs = haar_transform(&signal, 3)?;
    println!("\nsin(2 pi x), orders 1..=3:");
    println!("  c0 = {:+.6}", coeffs.mean().value);
    for (idx, c) in coeffs.iter() {
        println!("  c_{}^{} = {:+.6}", idx.order(), idx.shift(), c.value);
    }
    println!("  S_3(0.3) = {:+.6}  (sin = {:+.6})", haar_partial_sum(&coeffs, 3, 0.3)?, (0.6 * std::f64::consts::PI).sin());
    Ok(())
}
