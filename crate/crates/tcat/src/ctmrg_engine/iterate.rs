//! Corner/edge absorption and truncation.

use ndarray::{s, Array1, Array2, Array3, Axis};
use ndarray_linalg::{Eigh, JobSvd, SVDDC, UPLO};

use super::{CTMEnvironment, Field, VertexTensor};
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are discarded.
const SPECTRUM_FLOOR: f64 = 1e-14;
/// Relative gap below which neighbouring singular values form one multiplet.
const MULTIPLET_REL: f64 = 1e-8;
/// Largest growth of χ beyond `d` to keep a multiplet whole.
const MULTIPLET_SLACK: usize = 3;

/// Fixed-spin boundary: all boundary pairs `(s, τ) = (+, +)`.
pub fn initial_environment<F: Field>(t: &VertexTensor<F>) -> CTMEnvironment<F> {
    let mut edge = Array3::<F>::zeros((1, 4, 1));
    for c in 0..4 {
        edge[[0, c, 0]] = t.half[[0, c]];
    }
    CTMEnvironment {
        corner: Array2::from_elem((1, 1), F::one()),
        edge,
        d: 0,
        iterations: 0,
        residual: f64::INFINITY,
        converged: false,
        spectrum: vec![1.0],
    }
}

/// Iterates from the fixed-spin boundary.
pub fn ctmrg_converge<F: Field>(
    t: &VertexTensor<F>,
    d: usize,
    tol: f64,
    max_iters: usize,
) -> Result<CTMEnvironment<F>> {
    ctmrg_continue(initial_environment(t), t, d, tol, max_iters)
}

/// Iterates from a given environment until the normalized corner spectrum
/// changes by less than `tol` in one step, or `max_iters` steps were taken.
/// Non-convergence is reported through `converged`, not as an error.
pub fn ctmrg_continue<F: Field>(
    mut env: CTMEnvironment<F>,
    t: &VertexTensor<F>,
    d: usize,
    tol: f64,
    max_iters: usize,
) -> Result<CTMEnvironment<F>> {
    if d < 4 {
        return Err(Error::Validation(format!("bond dimension {d} < 4")));
    }
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance {tol} must be positive")));
    }
    super::blas_check::require_sound_blas()?;
    env.d = d;
    env.iterations = 0;
    env.converged = false;
    env.residual = f64::INFINITY;
    // a warm start at a different D is re-truncated by the first step
    while env.iterations < max_iters {
        let (corner, edge, spectrum) = step(&env, t, d)?;
        let residual = spectrum_change(&env.spectrum, &spectrum);
        env.corner = corner;
        env.edge = edge;
        env.spectrum = spectrum;
        env.iterations += 1;
        env.residual = residual;
        if residual < tol {
            env.converged = true;
            break;
        }
    }
    Ok(env)
}

fn spectrum_change(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0))
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

/// `M[(i, d), (j, r)] = Σ T[i, σL, x] C[x, y] T[y, σT, j] a[σL, σT, r, d]`.
fn enlarged_corner<F: Field>(c: &Array2<F>, t: &Array3<F>, a: &ndarray::Array4<F>) -> Array2<F> {
    let chi = c.nrows();
    let t_rows = t.view().into_shape_with_order((chi * 4, chi)).expect("contiguous");
    let t_cols = t.view().into_shape_with_order((chi, 4 * chi)).expect("contiguous");
    let tct = t_rows.dot(c).dot(&t_cols); // [(i, σL), (σT, j)]
    let tct = tct
        .into_shape_with_order((chi, 4, 4, chi))
        .expect("contiguous")
        .permuted_axes([0, 3, 1, 2])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((chi * chi, 16))
        .expect("contiguous"); // [(i, j), (σL, σT)]
    let a2 = a.view().into_shape_with_order((16, 16)).expect("contiguous"); // [(l, u), (r, d)]
    tct.dot(&a2)
        .into_shape_with_order((chi, chi, 4, 4))
        .expect("contiguous")
        .permuted_axes([0, 3, 1, 2])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((4 * chi, 4 * chi))
        .expect("contiguous")
}

/// `T̃[(i, d), r, (x, u)] = Σ_σ T[i, σ, x] a[σ, u, r, d]`.
fn enlarged_edge<F: Field>(t: &Array3<F>, a: &ndarray::Array4<F>) -> Array3<F> {
    let chi = t.shape()[0];
    let tp = t
        .view()
        .permuted_axes([0, 2, 1])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((chi * chi, 4))
        .expect("contiguous");
    let a2 = a.view().into_shape_with_order((4, 64)).expect("contiguous");
    tp.dot(&a2)
        .into_shape_with_order((chi, chi, 4, 4, 4))
        .expect("contiguous") // [i, x, u, r, d]
        .permuted_axes([0, 4, 3, 1, 2])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((4 * chi, 4, 4 * chi))
        .expect("contiguous")
}

/// Number of states to keep from a descending spectrum.
fn cut(values: &[f64], d: usize) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    let nonzero = values.iter().take_while(|v| **v > SPECTRUM_FLOOR * top).count().max(1);
    let mut keep = d.min(nonzero);
    while keep < nonzero
        && keep < d + MULTIPLET_SLACK
        && (values[keep - 1] - values[keep]).abs() <= MULTIPLET_REL * values[keep - 1]
    {
        keep += 1;
    }
    keep
}

fn frobenius<F: Field, D: ndarray::Dimension>(x: &ndarray::Array<F, D>) -> f64 {
    x.iter().map(|v| v.square()).sum::<f64>().sqrt()
}

fn lapack<T>(r: std::result::Result<T, ndarray_linalg::error::LinalgError>, what: &str) -> Result<T> {
    r.map_err(|e| Error::Numerical(format!("{what}: {e}")))
}

type Step<F> = (Array2<F>, Array3<F>, Vec<f64>);

fn step<F: Field>(env: &CTMEnvironment<F>, t: &VertexTensor<F>, d: usize) -> Result<Step<F>> {
    let m = enlarged_corner(&env.corner, &env.edge, &t.data);
    let n = m.nrows();
    let (p, pt, corner) = if t.hermitian {
        symmetric_projectors(m, d)?
    } else {
        oblique_projectors(&m, d)?
    };
    let chi = p.ncols();
    let tt = enlarged_edge(&env.edge, &t.data)
        .into_shape_with_order((n, 4 * n))
        .expect("contiguous");
    let edge = pt
        .dot(&tt)
        .into_shape_with_order((chi * 4, n))
        .expect("contiguous")
        .dot(&p)
        .into_shape_with_order((chi, 4, chi))
        .expect("contiguous");
    let (cn, en) = (frobenius(&corner), frobenius(&edge));
    if !(cn > 0.0 && en > 0.0 && cn.is_finite() && en.is_finite()) {
        return Err(Error::Numerical(format!("environment norm degenerated (corner {cn}, edge {en})")));
    }
    let corner = corner.mapv(|x| x.div_real(cn));
    let edge = edge.mapv(|x| x.div_real(en));
    let spectrum = if t.hermitian {
        let mut s: Vec<f64> = corner.diag().iter().map(|x| x.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    } else {
        let (_, s, _) = lapack(corner.svddc(JobSvd::None), "corner SVD")?;
        s.to_vec()
    };
    let top = spectrum[0];
    Ok((corner, edge, spectrum.iter().map(|x| x / top).collect()))
}

type Projectors<F> = (Array2<F>, Array2<F>, Array2<F>);

/// Real symmetric corners: keep the dominant eigenvectors of `M`, giving a
/// diagonal new corner.
fn symmetric_projectors<F: Field>(m: Array2<F>, d: usize) -> Result<Projectors<F>> {
    let herm = (&m + &m.t().mapv(|x| x.conj())).mapv(|x| x.div_real(2.0));
    let (vals, vecs) = lapack(herm.eigh(UPLO::Lower), "corner eigh")?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()));
    let mags: Vec<f64> = order.iter().map(|&i| vals[i].abs()).collect();
    let keep = cut(&mags, d);
    let p = vecs.select(Axis(1), &order[..keep]);
    let pt = p.t().mapv(|x| x.conj());
    let corner = Array2::from_diag(&Array1::from_iter(order[..keep].iter().map(|&i| F::from_real(vals[i]))));
    Ok((p, pt, corner))
}

/// General corners: oblique projectors from the SVD of the product of the two
/// half systems `A = M·M`.
fn oblique_projectors<F: Field>(m: &Array2<F>, d: usize) -> Result<Projectors<F>> {
    let a = m.dot(m);
    let (u, s, vt) = lapack(a.dot(&a).svddc(JobSvd::Some), "projector SVD")?;
    let (u, vt) = (u.expect("U requested"), vt.expect("Vᵀ requested"));
    let keep = cut(s.as_slice().expect("contiguous"), d);
    let isq: Vec<f64> = s.iter().take(keep).map(|x| 1.0 / x.sqrt()).collect();
    let mut v = vt.slice(s![..keep, ..]).t().mapv(|x| x.conj());
    let mut uh = u.slice(s![.., ..keep]).t().mapv(|x| x.conj());
    for (k, f) in isq.iter().enumerate() {
        v.column_mut(k).mapv_inplace(|x| x.mul_real(*f));
        uh.row_mut(k).mapv_inplace(|x| x.mul_real(*f));
    }
    let p = a.dot(&v);
    let pt = uh.dot(&a);
    let corner = pt.dot(m).dot(&p);
    Ok((p, pt, corner))
}
