//! Modified Bessel functions of the first kind, in the forms the angle
//! distributions need: ratios `I_n(x)/I_0(x)` and the scaled `e^{-|x|} I_0(x)`.
//!
//! Below [`ASYMPTOTIC_FROM`] the ratios come from the backward continued
//! fraction `I_k/I_{k-1} = x / (2k + x·I_{k+1}/I_k)` (Miller's recurrence in
//! ratio form). Above it both are taken from Hankel's large-argument series,
//! truncated at its smallest term.

use crate::scalar::Real;

/// Argument above which the asymptotic series is used.
pub const ASYMPTOTIC_FROM: f64 = 20.0;

/// `I_n(x) / I_0(x)`, valid for any real `x` (odd orders flip sign with `x`).
pub fn ratio<T: Real>(n: u32, x: T) -> T {
    if n == 0 {
        return T::one();
    }
    let ax = x.abs();
    if ax == T::zero() {
        return T::zero();
    }
    let r = if ax < T::lit(ASYMPTOTIC_FROM) {
        ratio_recurrence(n, ax)
    } else {
        hankel_sum(n, ax) / hankel_sum(0, ax)
    };
    if x < T::zero() && n % 2 == 1 {
        -r
    } else {
        r
    }
}

/// `e^{-|x|} I_0(x)`.
pub fn i0_scaled<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax < T::lit(ASYMPTOTIC_FROM) {
        let q = ax * ax / T::lit(4.0);
        let mut term = T::one();
        let mut sum = T::one();
        let mut k = 1usize;
        loop {
            term *= q / T::usize(k * k);
            sum += term;
            if term <= T::epsilon() * sum * T::lit(1e-2) {
                break;
            }
            k += 1;
        }
        sum * (-ax).exp()
    } else {
        hankel_sum(0, ax) / (T::lit(2.0) * T::PI() * ax).sqrt()
    }
}

fn ratio_recurrence<T: Real>(n: u32, x: T) -> T {
    // Starting depth well past the turning point k ≈ x.
    let start = n as usize + 2 * x.to_usize().unwrap_or(0) + 60;
    let mut r = T::zero();
    let mut prod = T::one();
    for k in (1..=start).rev() {
        r = x / (T::usize(2 * k) + x * r);
        if k as u32 <= n {
            prod *= r;
        }
    }
    prod
}

/// `sqrt(2πx) e^{-x} I_ν(x)` by the large-argument series.
fn hankel_sum<T: Real>(nu: u32, x: T) -> T {
    let mu = T::lit(4.0) * T::usize((nu * nu) as usize);
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..200usize {
        let odd = T::usize(2 * k - 1);
        let next = -term * (mu - odd * odd) / (T::lit(8.0) * T::usize(k) * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= T::epsilon() * sum.abs() * T::lit(1e-2) {
            break;
        }
    }
    sum
}
