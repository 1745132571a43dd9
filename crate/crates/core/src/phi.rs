//! Exponential-integrator weight functions
//!
//! `phi1(z) = (e^z - 1) / z` and `phi2(z) = (e^z - 1 - z) / z^2`, evaluated
//! without cancellation near `z = 0`.

use num_complex::Complex64 as C64;

const SERIES_RADIUS: f64 = 0.5;
const SERIES_TERMS: usize = 24;

/// Sum of `z^k / (k + offset)!` for k = 0.. truncated; offset 1 gives phi1,
/// offset 2 gives phi2.
fn phi_series(z: C64, offset: usize) -> C64 {
    let mut term = C64::new(1.0, 0.0);
    for k in 1..=offset {
        term /= k as f64;
    }
    let mut sum = term;
    for k in 1..SERIES_TERMS {
        term *= z / (k + offset) as f64;
        sum += term;
    }
    sum
}

pub fn phi1(z: C64) -> C64 {
    if z.norm() < SERIES_RADIUS {
        phi_series(z, 1)
    } else {
        (z.exp() - 1.0) / z
    }
}

pub fn phi2(z: C64) -> C64 {
    if z.norm() < SERIES_RADIUS {
        phi_series(z, 2)
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}
