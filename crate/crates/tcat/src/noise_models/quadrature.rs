//! Periodic trapezoid rule on `[-π, π)`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Initial node count.
pub const BASE_NODES: usize = 4096;
/// Largest node count tried before giving up.
pub const MAX_NODES: usize = 1 << 20;

/// Integrates `K` complex-valued periodic functions over `[-π, π)`.
///
/// Starts at [`BASE_NODES`] equispaced nodes and doubles (reusing previous
/// nodes) until two successive estimates agree to `tol` in every component.
pub fn periodic<T: Real, const K: usize>(
    f: impl Fn(T) -> [Complex<T>; K],
    tol: T,
) -> Result<[Complex<T>; K]> {
    let two_pi = T::lit(2.0) * T::PI();
    let mut n = BASE_NODES;
    let mut acc = [Complex::new(T::zero(), T::zero()); K];
    for j in 0..n {
        let phi = -T::PI() + two_pi * T::usize(j) / T::usize(n);
        add(&mut acc, &f(phi));
    }
    let mut est = scale(&acc, two_pi / T::usize(n));
    loop {
        if n >= MAX_NODES {
            return Err(Error::Numerical(format!(
                "periodic quadrature did not reach {tol:e} within {MAX_NODES} nodes"
            )));
        }
        // midpoints of the current grid
        for j in 0..n {
            let phi = -T::PI() + two_pi * (T::usize(j) + T::lit(0.5)) / T::usize(n);
            add(&mut acc, &f(phi));
        }
        n *= 2;
        let next = scale(&acc, two_pi / T::usize(n));
        let change = est
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max);
        est = next;
        if change <= tol {
            return Ok(est);
        }
    }
}

fn add<T: Real, const K: usize>(acc: &mut [Complex<T>; K], v: &[Complex<T>; K]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += *b;
    }
}

fn scale<T: Real, const K: usize>(v: &[Complex<T>; K], s: T) -> [Complex<T>; K] {
    let mut out = *v;
    for x in out.iter_mut() {
        *x = *x * s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_trig_polynomials_exactly() {
        let v = periodic(
            |p: f64| {
                [
                    Complex::new(1.0, 0.0),
                    Complex::new((2.0 * p).cos().powi(2), 0.0),
                    Complex::new(p.sin() * p.cos(), 0.0),
                ]
            },
            1e-13,
        )
        .unwrap();
        let tp = 2.0 * std::f64::consts::PI;
        assert!((v[0].re - tp).abs() < 1e-12);
        assert!((v[1].re - tp / 2.0).abs() < 1e-12);
        assert!(v[2].re.abs() < 1e-12);
    }
}
