//! Closed-form solution of the pure-Y rotation model through its staggered
//! vertex representation on the 45°-tilted lattice.
//!
//! With `r = R/(2 − R)`, the two-row transfer matrix is diagonal in the arrow
//! variables `σ ∈ {±1}^{2lx}` and depends only on `O(σ) = Σσᵢ = 2p`:
//! `T_p = ε^{2p} (2r^{2lx} + r^{2(lx+p)} + r^{2(lx−p)}) = 2ε^{2p} r^{2lx} [1 + cosh(2p log r)]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default symmetry-breaking field for ordered evaluations.
pub const DEFAULT_EPSILON: f64 = 1.0 + 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StaggeredVertexParams<T> {
    /// `R/(2 − R)`.
    pub r: T,
    /// Alternating field; `1` is the symmetric model.
    pub epsilon: T,
    /// Half-width of the tilted lattice (columns come in pairs).
    pub lx: usize,
    /// Half-height (number of two-row transfer steps).
    pub ly: usize,
}

impl<T: Real> StaggeredVertexParams<T> {
    pub fn new(r: T, epsilon: T, lx: usize, ly: usize) -> Result<Self> {
        if !(r >= T::zero() && r <= T::one()) {
            return Err(Error::domain("r", format!("{r} not in [0, 1]")));
        }
        if !(epsilon >= T::one() && epsilon.is_finite()) {
            return Err(Error::domain("epsilon", format!("{epsilon} < 1")));
        }
        if lx == 0 || ly == 0 {
            return Err(Error::domain("size", format!("{lx}x{ly} has an empty side")));
        }
        Ok(Self { r, epsilon, lx, ly })
    }

    /// Parameters from the physical `R`.
    pub fn from_big_r(big_r: T, epsilon: T, lx: usize, ly: usize) -> Result<Self> {
        Self::new(small_r(big_r)?, epsilon, lx, ly)
    }
}

/// `r = R/(2 − R)` for `R ∈ [0, 1]`.
pub fn small_r<T: Real>(big_r: T) -> Result<T> {
    if !(big_r >= T::zero() && big_r <= T::one()) {
        return Err(Error::domain("R", format!("{big_r} not in [0, 1]")));
    }
    Ok(big_r / (T::lit(2.0) - big_r))
}

/// `log(1 + cosh x)` without overflow.
fn log_one_plus_cosh<T: Real>(x: T) -> T {
    let a = x.abs();
    a - T::LN_2() + T::lit(2.0) * (-a).exp().ln_1p()
}

/// `log(2r^{2lx} + r^{2(lx+p)} + r^{2(lx−p)})`, finite for `r > 0` and exact
/// at `r = 0` (where only `|p| = lx` survives).
fn log_bracket<T: Real>(r: T, lx: usize, p: i64) -> T {
    if r == T::zero() {
        return if p.unsigned_abs() as usize == lx { T::zero() } else { T::neg_infinity() };
    }
    let lr = r.ln();
    T::lit(2.0) * T::usize(lx) * lr + T::LN_2() + log_one_plus_cosh(T::lit(2.0 * p as f64) * lr)
}

fn check_p<T: Real>(p: i64, params: &StaggeredVertexParams<T>) -> Result<()> {
    if p.unsigned_abs() as usize > params.lx {
        return Err(Error::domain("p", format!("|{p}| > lx = {}", params.lx)));
    }
    Ok(())
}

/// Transfer-matrix element `T_p` for `O(σ) = 2p`.
pub fn transfer_element<T: Real>(p: i64, params: &StaggeredVertexParams<T>) -> Result<T> {
    check_p(p, params)?;
    let StaggeredVertexParams { r, epsilon, lx, .. } = *params;
    let pw = |k: i64| r.powi(2 * k as i32);
    let lx = lx as i64;
    Ok(epsilon.powi(2 * p as i32) * (T::lit(2.0) * pw(lx) + pw(lx + p) + pw(lx - p)))
}

/// `log T_p`, usable where `T_p` itself under- or overflows.
pub fn log_transfer_element<T: Real>(p: i64, params: &StaggeredVertexParams<T>) -> Result<T> {
    check_p(p, params)?;
    Ok(T::lit(2.0 * p as f64) * params.epsilon.ln() + log_bracket(params.r, params.lx, p))
}

/// Thermodynamic correlation length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ExactXi<T> {
    Finite(T),
    /// `R = 1`, where the correlation length diverges.
    Divergent,
}

impl<T: Real> ExactXi<T> {
    /// The value, `+∞` when divergent.
    pub fn value(self) -> T {
        match self {
            ExactXi::Finite(x) => x,
            ExactXi::Divergent => T::infinity(),
        }
    }
}

/// `ξ = −1/(2 log r)` as a function of the physical `R`.
pub fn exact_correlation_length<T: Real>(big_r: T) -> Result<ExactXi<T>> {
    let r = small_r(big_r)?;
    if r == T::one() {
        return Ok(ExactXi::Divergent);
    }
    if r == T::zero() {
        return Ok(ExactXi::Finite(T::zero()));
    }
    Ok(ExactXi::Finite(-T::one() / (T::lit(2.0) * r.ln())))
}

/// Correlation length at finite width from the two largest transfer elements,
/// `−1/log[(1 + cosh(2(lx − 1) log r)) / (1 + cosh(2lx log r))]`.
pub fn finite_lx_correlation_length<T: Real>(big_r: T, lx: usize) -> Result<ExactXi<T>> {
    let r = small_r(big_r)?;
    if lx == 0 {
        return Err(Error::domain("lx", "must be positive"));
    }
    if r == T::one() {
        return Ok(ExactXi::Divergent);
    }
    if r == T::zero() {
        return Ok(ExactXi::Finite(T::zero()));
    }
    let lr = r.ln();
    let log_ratio = log_one_plus_cosh(T::usize(2 * (lx - 1)) * lr) - log_one_plus_cosh(T::usize(2 * lx) * lr);
    Ok(ExactXi::Finite(-T::one() / log_ratio))
}

/// `ln C(n, k)`.
fn log_binomial<T: Real>(n: usize, k: usize) -> T {
    let k = k.min(n - k);
    (1..=k).map(|i| (T::usize(n - k + i) / T::usize(i)).ln()).sum()
}

/// `log Σ_p w_p` and the normalized weights `w_p / max w`, for
/// `w_p = C(2lx, lx + p) T_p^{ly}`.
fn sector_weights<T: Real>(params: &StaggeredVertexParams<T>) -> Result<(T, Vec<(i64, T)>)> {
    let lx = params.lx as i64;
    let logs: Vec<(i64, T)> = (-lx..=lx)
        .map(|p| {
            let lt = log_transfer_element(p, params)?;
            Ok((p, log_binomial::<T>(2 * params.lx, (lx + p) as usize) + T::usize(params.ly) * lt))
        })
        .collect::<Result<_>>()?;
    let top = logs.iter().map(|(_, l)| *l).fold(T::neg_infinity(), T::max);
    if !top.is_finite() {
        return Err(Error::Numerical(format!("sector weights not finite (max log {top})")));
    }
    let w: Vec<(i64, T)> = logs.iter().map(|(p, l)| (*p, (*l - top).exp())).collect();
    let total: T = w.iter().map(|(_, x)| *x).sum();
    Ok((top + total.ln(), w))
}

/// `log Z = log Σ_σ T(σ)^{ly}` on the `2lx × 2ly` tilted torus, periodic
/// arrow sectors only.
pub fn log_partition_function<T: Real>(params: &StaggeredVertexParams<T>) -> Result<T> {
    Ok(sector_weights(params)?.0)
}

/// `O = ⟨O(σ)⟩ / (2lx)` under `T^{ly}`.
pub fn order_parameter<T: Real>(params: &StaggeredVertexParams<T>) -> Result<T> {
    if params.epsilon == T::one() {
        // p ↔ −p pairs cancel exactly
        return Ok(T::zero());
    }
    let (_, w) = sector_weights(params)?;
    let num: T = w.iter().map(|(p, x)| T::lit(*p as f64) * *x).sum();
    let den: T = w.iter().map(|(_, x)| *x).sum();
    let o = num / (T::usize(params.lx) * den);
    if !o.is_finite() {
        return Err(Error::Numerical(format!("order parameter evaluated to {o}")));
    }
    Ok(o)
}

/// Thermodynamic anyon parameters for `R < 1`: `⟨ee⟩ = 0`, `⟨eI|eI⟩ = 1`,
/// `⟨mm⟩ = 0`, `⟨mI|mI⟩ = 1`.
pub fn anyon_constants<T: Real>(big_r: T) -> Result<[T; 4]> {
    if !(big_r >= T::zero() && big_r < T::one()) {
        return Err(Error::domain("R", format!("{big_r} not in [0, 1)")));
    }
    Ok([T::zero(), T::one(), T::zero(), T::one()])
}

/// One output row: `(R, ξ_exact, ξ at width lx, O)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StaggeredRow {
    pub r_big: f64,
    pub xi_exact: f64,
    pub xi_finite: f64,
    pub order: f64,
}

/// Rows over a grid of `R` at fixed sizes and field.
pub fn staggered_rows(r_grid: &[f64], lx: usize, ly: usize, epsilon: f64) -> Result<Vec<StaggeredRow>> {
    r_grid
        .iter()
        .map(|&r_big| {
            let params = StaggeredVertexParams::from_big_r(r_big, epsilon, lx, ly)?;
            Ok(StaggeredRow {
                r_big,
                xi_exact: exact_correlation_length(r_big)?.value(),
                xi_finite: finite_lx_correlation_length(r_big, lx)?.value(),
                order: order_parameter(&params)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(r: f64, eps: f64, lx: usize, ly: usize) -> StaggeredVertexParams<f64> {
        StaggeredVertexParams::new(r, eps, lx, ly).unwrap()
    }

    #[test]
    fn transfer_element_examples() {
        let want = 4.0 * 0.3f64.powi(6);
        assert!((transfer_element(0, &params(0.3, 1.0, 3, 1)).unwrap() - want).abs() < 1e-15 * want);
        assert_eq!(transfer_element(4, &params(1.0, 1.0, 4, 1)).unwrap(), 4.0);
        assert!((transfer_element(1, &params(0.5, 1.0, 2, 1)).unwrap() - 0.390625).abs() < 1e-15);
        assert!(transfer_element(3, &params(0.5, 1.0, 2, 1)).is_err());
    }

    #[test]
    fn zero_r_keeps_only_the_full_sectors() {
        let p = params(0.0, 1.0, 3, 2);
        assert_eq!(transfer_element(3, &p).unwrap(), 1.0);
        assert_eq!(transfer_element(-3, &p).unwrap(), 1.0);
        assert_eq!(transfer_element(1, &p).unwrap(), 0.0);
        assert_eq!(log_transfer_element(3, &p).unwrap(), 0.0);
    }

    #[test]
    fn log_element_matches_direct() {
        let p = params(0.37, 1.3, 5, 1);
        for k in -5..=5 {
            let a = transfer_element(k, &p).unwrap().ln();
            let b = log_transfer_element(k, &p).unwrap();
            assert!((a - b).abs() < 1e-12, "{k}: {a} {b}");
        }
    }

    #[test]
    fn correlation_length_examples() {
        let xi = exact_correlation_length(2.0 / 3.0).unwrap().value();
        assert!((xi - 1.0 / (2.0 * 2f64.ln())).abs() < 1e-12);
        assert_eq!(exact_correlation_length(1.0).unwrap(), ExactXi::Divergent);
        assert_eq!(exact_correlation_length(0.0).unwrap().value(), 0.0);
        assert!(exact_correlation_length(1.2).is_err());
    }

    #[test]
    fn order_parameter_examples() {
        assert_eq!(order_parameter(&params(0.4, 1.0, 6, 9)).unwrap(), 0.0);
        let eps = 1.001f64;
        let o = order_parameter(&params(1.0, eps, 5, 30)).unwrap();
        let e = eps.powi(60);
        assert!((o - (e - 1.0) / (e + 1.0)).abs() < 1e-12);
        let p = StaggeredVertexParams::<f64>::from_big_r(0.5, 1.01, 8, 400).unwrap();
        assert!((order_parameter(&p).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn anyon_constants_need_r_below_one() {
        assert_eq!(anyon_constants(0.0).unwrap(), [0.0, 1.0, 0.0, 1.0]);
        assert!(anyon_constants(1.0).is_err());
    }
}
