//! Corner transfer matrix renormalization for the Ashkin-Teller vertex model.
//!
//! The edge weight `W[σ, σ′] = W(σ ⊕ σ′)` is a convolution on `Z₂ × Z₂`, so
//! `W = H·Λ·Hᵀ` with the fixed characters `H[σ, c] = χ_c(σ)` and
//! `Λ = diag(1, j1, j2, k)`. Splitting `W = P·Pᵀ`, `P = H·√Λ`, and summing the
//! site spin gives
//!
//! `a[l, u, r, d] = 4·δ(c_l ⊕ c_u ⊕ c_r ⊕ c_d = 0)·Π √λ_c`,
//!
//! which is invariant under every permutation of its legs. One corner `C` and
//! one edge `T` therefore describe all four directions.
//!
//! Channel labels on the legs: `0 = 1`, `1 = s`, `2 = τ`, `3 = sτ`.

pub mod arnoldi;
mod blas_check;
mod iterate;

use ndarray::{Array1, Array2, Array3, Array4};
use ndarray_linalg::{Lapack, Scalar};
use num_complex::Complex64;
use serde::Serialize;

use crate::coupling_map::ATCouplings;
use crate::error::{Error, Result};

pub use blas_check::{blas_is_sound, CORETYPE_VAR};
pub use iterate::{ctmrg_continue, ctmrg_converge, initial_environment};

/// Default convergence threshold on the corner spectrum.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default sweep cap.
pub const DEFAULT_MAX_ITERS: usize = 5000;

/// Scalar field of a contraction: `f64` or `Complex64`.
pub trait Field: Scalar<Real = f64, Complex = Complex64> + Lapack + Send + Sync {
    const IS_REAL: bool;
    /// Converts a value known to lie in the field.
    fn from_c64(z: Complex64) -> Self;
}

impl Field for f64 {
    const IS_REAL: bool = true;
    fn from_c64(z: Complex64) -> Self {
        z.re
    }
}

impl Field for Complex64 {
    const IS_REAL: bool = false;
    fn from_c64(z: Complex64) -> Self {
        z
    }
}

/// `χ_c(σ)` with `σ = 2·[s = −1] + [τ = −1]` and channel `c ∈ {1, s, τ, sτ}`.
fn character(sigma: usize, c: usize) -> f64 {
    let s = if sigma & 2 == 0 { 1.0 } else { -1.0 };
    let t = if sigma & 1 == 0 { 1.0 } else { -1.0 };
    [1.0, s, t, s * t][c]
}

/// Site tensor with its three single-spin impurities.
#[derive(Clone, Debug)]
pub struct VertexTensor<F> {
    /// Legs `[l, u, r, d]`, each a channel index.
    pub data: Array4<F>,
    /// `s`, `τ`, `sτ` inserted on the site.
    pub impurities: [Array4<F>; 3],
    /// Edge half `P[σ, c]` with `W = P·Pᵀ`.
    pub half: Array2<F>,
    pub couplings: ATCouplings<f64>,
    /// Every `λ ≥ 0`: the tensor is real and the symmetric update applies.
    pub hermitian: bool,
}

/// Walsh eigenvalues `(1, j1, j2, k)` of the edge weight.
pub fn walsh_eigenvalues(at: &ATCouplings<f64>) -> [f64; 4] {
    [1.0, at.j1, at.j2, at.k]
}

impl<F: Field> VertexTensor<F> {
    /// Builds the tensor; for real fields every Walsh eigenvalue must be ≥ 0.
    pub fn new(at: &ATCouplings<f64>) -> Result<Self> {
        if !at.is_finite() {
            return Err(Error::Validation(format!("non-finite couplings {at:?}")));
        }
        let lam = walsh_eigenvalues(at);
        let hermitian = lam.iter().all(|&l| l >= 0.0);
        let real_field = F::from_c64(Complex64::new(0.0, 1.0)).im() == 0.0;
        if real_field && !hermitian {
            return Err(Error::domain(
                "real vertex tensor",
                format!("negative Walsh eigenvalue in {lam:?}"),
            ));
        }
        let roots = lam.map(|l| Complex64::new(l, 0.0).sqrt());
        let half = Array2::from_shape_fn((4, 4), |(s, c)| F::from_c64(roots[c] * character(s, c)));
        let site = |w: &dyn Fn(usize) -> f64| {
            Array4::from_shape_fn((4, 4, 4, 4), |(l, u, r, d)| {
                (0..4).fold(F::zero(), |acc, s| {
                    acc + half[[s, l]] * half[[s, u]] * half[[s, r]] * half[[s, d]] * F::from_c64(Complex64::new(w(s), 0.0))
                })
            })
        };
        let data = site(&|_| 1.0);
        let impurities = [site(&|s| character(s, 1)), site(&|s| character(s, 2)), site(&|s| character(s, 3))];
        Ok(Self { data, impurities, half, couplings: *at, hermitian })
    }

    /// `W[σ, σ′] = Σ_c P[σ, c] P[σ′, c]`.
    pub fn edge_weight(&self) -> Array2<F> {
        self.half.dot(&self.half.t())
    }
}

/// Complex vertex tensor (valid for any couplings).
pub fn build_vertex_tensor(at: &ATCouplings<f64>) -> Result<VertexTensor<Complex64>> {
    VertexTensor::new(at)
}

/// Corner and edge tensors with convergence metadata.
#[derive(Clone, Debug)]
pub struct CTMEnvironment<F> {
    pub corner: Array2<F>,
    /// Legs `[χ, channel, χ]`.
    pub edge: Array3<F>,
    pub d: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Corner singular values, descending, normalized to a unit maximum.
    pub spectrum: Vec<f64>,
}

impl<F: Field> CTMEnvironment<F> {
    pub fn chi(&self) -> usize {
        self.corner.nrows()
    }
}

/// Local measurements on a converged (or flagged) environment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Observables {
    pub m_s: Complex64,
    pub m_tau: Complex64,
    pub m_stau: Complex64,
    /// `ξ_D`; `+∞` when the two leading transfer eigenvalues tie.
    pub xi: f64,
    pub entropy: f64,
    /// `|⟨sτ⟩| + (|⟨s⟩| + |⟨τ⟩|)/2`.
    pub indicator: f64,
    /// `log |Z|` per site.
    pub free_energy: f64,
}

/// Contracts the four `T·C` blocks around one site: `E[l, u, r, d]`.
fn site_environment<F: Field>(env: &CTMEnvironment<F>) -> Array4<F> {
    let chi = env.chi();
    let g = env
        .edge
        .view()
        .into_shape_with_order((chi * 4, chi))
        .expect("contiguous edge")
        .dot(&env.corner); // [(p, l), a]
    let g_right = g.view().into_shape_with_order((chi, 4 * chi)).expect("contiguous"); // [a, (u, b)]
    let gg = g.dot(&g_right).into_shape_with_order((chi, 4, 4, chi)).expect("contiguous"); // [p, l, u, b]
    let left = gg
        .view()
        .permuted_axes([1, 2, 0, 3])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((16, chi * chi))
        .expect("contiguous"); // [(l, u), (p, b)]
    // second half GG[b, r, d, p] arranged as [(p, b), (r, d)]
    let right = gg
        .view()
        .permuted_axes([3, 0, 1, 2])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((chi * chi, 16))
        .expect("contiguous");
    left.dot(&right).into_shape_with_order((4, 4, 4, 4)).expect("contiguous")
}

fn full_contract<F: Field>(a: &Array4<F>, b: &Array4<F>) -> F {
    a.iter().zip(b.iter()).fold(F::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Order parameters, correlation length, corner entropy and free energy.
pub fn measure<F: Field>(env: &CTMEnvironment<F>, t: &VertexTensor<F>) -> Result<Observables> {
    let e = site_environment(env);
    let z = full_contract(&t.data, &e);
    if z.abs() == 0.0 || !z.abs().is_finite() {
        return Err(Error::Numerical(format!("site contraction is {z}")));
    }
    let m = |i: usize| (full_contract(&t.impurities[i], &e) / z).as_c();
    let (m_s, m_tau, m_stau) = (m(0), m(1), m(2));

    let chi = env.chi();
    let c2 = env.corner.dot(&env.corner);
    let z00 = c2.dot(&c2).diag().iter().fold(F::zero(), |a, b| a + *b);
    let mut z10 = F::zero();
    let slices: Vec<Array2<F>> = (0..4).map(|s| env.edge.index_axis(ndarray::Axis(1), s).to_owned()).collect();
    for ts in &slices {
        let x = ts.dot(&c2);
        z10 += x.dot(&x).diag().iter().fold(F::zero(), |a, b| a + *b);
    }
    let kappa = (z * z00 / (z10 * z10)).as_c();
    let free_energy = kappa.norm().ln();

    let xi = correlation_length(&slices, chi)?;
    let sv = &env.spectrum;
    let p4: Vec<f64> = sv.iter().map(|s| s.powi(4)).collect();
    let total: f64 = p4.iter().sum();
    let entropy = p4
        .iter()
        .map(|p| p / total)
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>();
    Ok(Observables {
        m_s,
        m_tau,
        m_stau,
        xi,
        entropy,
        indicator: m_stau.norm() + 0.5 * (m_s.norm() + m_tau.norm()),
        free_energy,
    })
}

/// `ξ = 1/log|λ₀/λ₁|` of `v ↦ Σ_s T_s·v·T_s`.
fn correlation_length<F: Field>(slices: &[Array2<F>], chi: usize) -> Result<f64> {
    if chi == 1 {
        // a single transfer eigenvalue: no decay channel
        return Ok(0.0);
    }
    let n = chi * chi;
    let apply = |v: &Array1<F>| {
        let vm = v.view().into_shape_with_order((chi, chi)).expect("contiguous");
        let mut out = Array2::<F>::zeros((chi, chi));
        for ts in slices {
            out = out + ts.dot(&vm).dot(ts);
        }
        out.into_shape_with_order(n).expect("contiguous")
    };
    let ev = match arnoldi::leading_eigenvalues(n, 2, apply, arnoldi::ArnoldiOptions::default()) {
        Ok(ev) => ev,
        // reported as an unknown length rather than failing the point
        Err(Error::Numerical(_)) => return Ok(f64::NAN),
        Err(e) => return Err(e),
    };
    let (l0, l1) = (ev[0].norm(), ev[1].norm());
    if l1 == 0.0 {
        return Ok(0.0);
    }
    if (l0 - l1).abs() <= 1e-14 * l0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (l0 / l1).ln())
}

/// Result of a least-squares fit of `S` against `(1/6)·log ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CentralChargeFit {
    pub c: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub goodness: f64,
}

/// Fits `S = (c/6)·log ξ + b` over `(ξ, S)` pairs.
pub fn central_charge_fit(points: &[(f64, f64)]) -> Result<CentralChargeFit> {
    if points.len() < 4 {
        return Err(Error::Validation(format!("need at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|(xi, s)| !(xi.is_finite() && *xi > 0.0 && s.is_finite())) {
        return Err(Error::Validation("ξ must be finite and positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|(xi, _)| xi.ln() / 6.0).collect();
    let ys: Vec<f64> = points.iter().map(|(_, s)| *s).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys)?;
    Ok(CentralChargeFit { c: slope, intercept, goodness: r2 })
}

/// Ordinary least squares `y = slope·x + intercept`; also returns `R²`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 1e-300 * n) {
        return Err(Error::Validation("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok((slope, my - slope * mx, r2))
}

/// Environment of either field, so callers can warm-start across runs.
#[derive(Clone, Debug)]
pub enum AnyEnvironment {
    Real(CTMEnvironment<f64>),
    Complex(CTMEnvironment<Complex64>),
}

impl AnyEnvironment {
    pub fn iterations(&self) -> usize {
        match self {
            AnyEnvironment::Real(e) => e.iterations,
            AnyEnvironment::Complex(e) => e.iterations,
        }
    }
    pub fn residual(&self) -> f64 {
        match self {
            AnyEnvironment::Real(e) => e.residual,
            AnyEnvironment::Complex(e) => e.residual,
        }
    }
    pub fn converged(&self) -> bool {
        match self {
            AnyEnvironment::Real(e) => e.converged,
            AnyEnvironment::Complex(e) => e.converged,
        }
    }
}

/// CTMRG controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct CtmrgControls {
    pub d: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl CtmrgControls {
    pub fn validate(&self) -> Result<()> {
        if self.d < 4 {
            return Err(Error::Validation(format!("bond dimension {} < 4", self.d)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Validation(format!("tolerance {} must be positive", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Validation("max_iters must be positive".into()));
        }
        Ok(())
    }
}

impl Default for CtmrgControls {
    fn default() -> Self {
        Self { d: 32, tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS }
    }
}

/// One converged point, serializable as a sweep record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointRecord {
    pub couplings: ATCouplings<f64>,
    pub d: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    #[serde(flatten)]
    pub observables: Observables,
}

/// Runs CTMRG at one coupling point, in real arithmetic when the tensor is
/// real. A compatible `warm` environment is used as the starting point.
pub fn run_point(
    at: &ATCouplings<f64>,
    controls: CtmrgControls,
    warm: Option<&AnyEnvironment>,
) -> Result<(PointRecord, AnyEnvironment)> {
    let real = walsh_eigenvalues(at).iter().all(|&l| l >= 0.0);
    let (obs, env) = if real {
        let t = VertexTensor::<f64>::new(at)?;
        let init = match warm {
            Some(AnyEnvironment::Real(e)) => e.clone(),
            _ => initial_environment(&t),
        };
        let env = ctmrg_continue(init, &t, controls.d, controls.tol, controls.max_iters)?;
        (measure(&env, &t)?, AnyEnvironment::Real(env))
    } else {
        let t = VertexTensor::<Complex64>::new(at)?;
        let init = match warm {
            Some(AnyEnvironment::Complex(e)) => e.clone(),
            Some(AnyEnvironment::Real(e)) => CTMEnvironment {
                corner: e.corner.mapv(Complex64::from),
                edge: e.edge.mapv(Complex64::from),
                d: e.d,
                iterations: 0,
                residual: f64::INFINITY,
                converged: false,
                spectrum: e.spectrum.clone(),
            },
            None => initial_environment(&t),
        };
        let env = ctmrg_continue(init, &t, controls.d, controls.tol, controls.max_iters)?;
        (measure(&env, &t)?, AnyEnvironment::Complex(env))
    };
    Ok((
        PointRecord {
            couplings: *at,
            d: controls.d,
            iterations: env.iterations(),
            residual: env.residual(),
            converged: env.converged(),
            observables: obs,
        },
        env,
    ))
}

/// Runs `at` at each bond dimension of `ds` in turn, each run starting from
/// the environment of the previous one.
pub fn bond_dimension_ladder(
    at: &ATCouplings<f64>,
    ds: &[usize],
    tol: f64,
    max_iters: usize,
) -> Result<Vec<PointRecord>> {
    let mut warm: Option<AnyEnvironment> = None;
    let mut out = Vec::with_capacity(ds.len());
    for &d in ds {
        let (rec, env) = run_point(at, CtmrgControls { d, tol, max_iters }, warm.as_ref())?;
        out.push(rec);
        warm = Some(env);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_tensor_symmetry_and_weight() {
        let at = ATCouplings::new(0.3, -0.2, 0.5);
        let t = build_vertex_tensor(&at).unwrap();
        let w = t.edge_weight();
        let uv = at.weights();
        for s in 0..4 {
            for sp in 0..4 {
                let d = s ^ sp;
                // d bits: 2 → s differs, 1 → τ differs; weights stored (++,+−,−+,−−)
                assert!((w[[s, sp]] - Complex64::new(uv[d], 0.0)).norm() < 1e-14);
            }
        }
        for (idx, x) in t.data.indexed_iter() {
            let (l, u, r, d) = idx;
            assert!((t.data[[u, r, d, l]] - *x).norm() < 1e-14);
            assert!((t.data[[r, u, l, d]] - *x).norm() < 1e-14);
            if l ^ u ^ r ^ d != 0 {
                assert!(x.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn real_field_rejects_negative_eigenvalues() {
        assert!(VertexTensor::<f64>::new(&ATCouplings::new(0.3, -0.2, 0.5)).is_err());
        assert!(VertexTensor::<f64>::new(&ATCouplings::new(0.3, 0.2, 0.5)).unwrap().hermitian);
    }

    #[test]
    fn fit_recovers_slope() {
        let pts: Vec<(f64, f64)> = [10.0, 30.0, 90.0, 300.0].iter().map(|&x: &f64| (x, 0.5 / 6.0 * x.ln() + 0.1)).collect();
        let f = central_charge_fit(&pts).unwrap();
        assert!((f.c - 0.5).abs() < 1e-12 && (f.goodness - 1.0).abs() < 1e-12);
        assert!(central_charge_fit(&pts[..3]).is_err());
        assert!(central_charge_fit(&[(5.0, 0.1); 4]).is_err());
    }
}
