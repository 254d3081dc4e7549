//! Leading eigenvalues of an implicitly given operator.
//!
//! Krylov-Schur style iteration: the Krylov space grows until the wanted Ritz
//! pairs converge or the space is full, then shrinks to the leading Ritz
//! vectors plus the current continuation vector.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::Eig;
use num_complex::Complex64;

use super::Field;
use crate::error::{Error, Result};

/// Operators up to this size are diagonalized densely.
pub const DENSE_LIMIT: usize = 400;

#[derive(Clone, Copy, Debug)]
pub struct ArnoldiOptions {
    /// Largest Krylov dimension before a restart.
    pub max_dim: usize,
    /// Ritz vectors kept at a restart beyond the wanted ones.
    pub keep_extra: usize,
    /// Steps between Ritz checks.
    pub check_every: usize,
    pub max_restarts: usize,
    /// Ritz residual relative to `|λ₀|`.
    pub tol: f64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self { max_dim: 240, keep_extra: 30, check_every: 20, max_restarts: 100, tol: 1e-10 }
    }
}

/// The `count` eigenvalues of largest modulus, sorted by decreasing modulus.
/// Missing eigenvalues (operator rank below `count`) are returned as zero.
pub fn leading_eigenvalues<F: Field>(
    n: usize,
    count: usize,
    apply: impl Fn(&Array1<F>) -> Array1<F>,
    opts: ArnoldiOptions,
) -> Result<Vec<Complex64>> {
    if n == 0 {
        return Err(Error::Numerical("empty operator".into()));
    }
    if n <= DENSE_LIMIT {
        let mut m = Array2::<F>::zeros((n, n));
        let mut e = Array1::<F>::zeros(n);
        for j in 0..n {
            e[j] = F::one();
            m.column_mut(j).assign(&apply(&e));
            e[j] = F::zero();
        }
        let (vals, _) = m.eig().map_err(|e| Error::Numerical(format!("dense eig: {e}")))?;
        return Ok(top(vals.to_vec(), count));
    }
    let max_dim = opts.max_dim.min(n - 1).max(count + opts.keep_extra + 2);
    // deterministic start vector with components in every symmetry sector
    let mut start = Array1::from_shape_fn(n, |i| F::from_c64(Complex64::new(1.0 + (0.618_034 * i as f64).sin(), 0.0)));
    normalize(&mut start);
    let mut basis: Vec<Array1<F>> = vec![start];
    // h[[i, j]] = ⟨v_i, A v_j⟩; row `k` couples the space to the continuation vector
    let mut h = Array2::<F>::zeros((max_dim + 1, max_dim));
    let mut k = 0;
    for _ in 0..=opts.max_restarts {
        let mut exhausted = false;
        while k < max_dim {
            let mut w = apply(&basis[k]);
            let wnorm = norm(&w);
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dotc(v, &w);
                    h[[i, k]] += c;
                    w.scaled_add(-c, v);
                }
            }
            let beta = norm(&w);
            k += 1;
            if beta <= 1e-13 * wnorm.max(1e-300) {
                exhausted = true;
                break;
            }
            h[[k, k - 1]] = F::from_c64(Complex64::new(beta, 0.0));
            basis.push(w.mapv(|x| x.div_real(beta)));
            if k % opts.check_every == 0 && k < max_dim && converged(&h, k, count, opts.tol)?.is_some() {
                break;
            }
        }
        let hk = h.slice(s![..k, ..k]).to_owned();
        let (vals, vecs) = hk.eig().map_err(|e| Error::Numerical(format!("Ritz eig: {e}")))?;
        let order = by_modulus(&vals.to_vec());
        let wanted: Vec<Complex64> = order.iter().take(count).map(|&i| vals[i]).collect();
        if exhausted || residuals_ok(&h, k, &vals.to_vec(), &vecs, &order[..count.min(k)], opts.tol) {
            let mut out = wanted;
            out.resize(count, Complex64::new(0.0, 0.0));
            return Ok(out);
        }
        // shrink to the leading Ritz vectors, orthonormalized in coefficient space
        let keep = (count + opts.keep_extra).min(k - 1);
        let mut coeffs: Vec<Array1<F>> = Vec::new();
        for &i in order.iter().take(keep) {
            let y = vecs.column(i);
            let parts: Vec<Array1<F>> = if F::IS_REAL {
                vec![
                    y.mapv(|z| F::from_c64(Complex64::new(z.re, 0.0))),
                    y.mapv(|z| F::from_c64(Complex64::new(z.im, 0.0))),
                ]
            } else {
                vec![y.mapv(F::from_c64)]
            };
            for mut c in parts {
                for _pass in 0..2 {
                    for q in &coeffs {
                        let a = dotc(q, &c);
                        c.scaled_add(-a, q);
                    }
                }
                let cn = norm(&c);
                if cn > 1e-8 {
                    coeffs.push(c.mapv(|x| x.div_real(cn)));
                }
            }
            if coeffs.len() >= keep {
                break;
            }
        }
        let kk = coeffs.len();
        let c = Array2::from_shape_fn((k, kk), |(r, col)| coeffs[col][r]);
        let ch = c.t().mapv(|x| x.conj());
        let mut newh = Array2::<F>::zeros((max_dim + 1, max_dim));
        newh.slice_mut(s![..kk, ..kk]).assign(&ch.dot(&hk).dot(&c));
        newh.slice_mut(s![kk, ..kk]).assign(&h.slice(s![k, ..k]).dot(&c));
        let mut newbasis: Vec<Array1<F>> = (0..kk)
            .map(|col| {
                let mut x = Array1::<F>::zeros(n);
                for (r, v) in basis.iter().take(k).enumerate() {
                    x.scaled_add(c[[r, col]], v);
                }
                x
            })
            .collect();
        newbasis.push(basis[k].clone());
        basis = newbasis;
        h = newh;
        k = kk;
    }
    Err(Error::Numerical("leading eigenvalues did not converge".into()))
}

fn by_modulus(vals: &[Complex64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].norm().total_cmp(&vals[a].norm()));
    order
}

/// Ritz residual `|h[k, ..k]·y| / |y|` against `tol·|θ₀|`.
fn residuals_ok<F: Field>(
    h: &Array2<F>,
    k: usize,
    vals: &[Complex64],
    vecs: &Array2<Complex64>,
    wanted: &[usize],
    tol: f64,
) -> bool {
    let scale = wanted.first().map(|&i| vals[i].norm()).unwrap_or(0.0).max(1e-300);
    wanted.iter().all(|&i| {
        let y = vecs.column(i);
        let ynorm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let r: Complex64 = (0..k).map(|j| h[[k, j]].as_c() * y[j]).sum();
        r.norm() / ynorm <= tol * scale
    })
}

/// Ritz values if the wanted pairs of the current space have converged.
fn converged<F: Field>(h: &Array2<F>, k: usize, count: usize, tol: f64) -> Result<Option<Vec<Complex64>>> {
    let hk = h.slice(s![..k, ..k]).to_owned();
    let (vals, vecs) = hk.eig().map_err(|e| Error::Numerical(format!("Ritz eig: {e}")))?;
    let vals = vals.to_vec();
    let order = by_modulus(&vals);
    let wanted = &order[..count.min(k)];
    Ok(residuals_ok(h, k, &vals, &vecs, wanted, tol).then(|| wanted.iter().map(|&i| vals[i]).collect()))
}

fn top(mut vals: Vec<Complex64>, count: usize) -> Vec<Complex64> {
    vals.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    vals.resize(count.max(vals.len()), Complex64::new(0.0, 0.0));
    vals.truncate(count);
    vals
}

fn dotc<F: Field>(a: &Array1<F>, b: &Array1<F>) -> F {
    a.iter().zip(b.iter()).fold(F::zero(), |acc, (x, y)| acc + x.conj() * *y)
}

fn norm<F: Field>(a: &Array1<F>) -> f64 {
    a.iter().map(|x| x.square()).sum::<f64>().sqrt()
}

fn normalize<F: Field>(a: &mut Array1<F>) {
    let n = norm(a);
    if n > 0.0 {
        a.mapv_inplace(|x| x.div_real(n));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_krylov_agree_on_a_diagonal_operator() {
        let n = 900;
        let diag: Vec<f64> = (0..n).map(|i| 0.999_f64.powi(i as i32 * 3) * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let apply = |v: &Array1<f64>| Array1::from_shape_fn(n, |i| diag[i] * v[i]);
        let ev = leading_eigenvalues(n, 2, apply, ArnoldiOptions::default()).unwrap();
        assert!((ev[0].re - 1.0).abs() < 1e-9, "{ev:?}");
        assert!((ev[1].norm() - 0.999_f64.powi(3)).abs() < 1e-9, "{ev:?}");
    }

    #[test]
    fn resolves_a_tiny_gap_next_to_a_wide_bulk() {
        let n = 3000;
        let gap = 2e-4;
        let diag: Vec<f64> = (0..n)
            .map(|i| match i {
                0 => 1.0,
                1 => 1.0 - gap,
                2 => 1.0 - 3.0 * gap,
                _ => -0.99 + 1.98 * ((i * 7919) % n) as f64 / n as f64 * 0.999,
            })
            .collect();
        let apply = |v: &Array1<f64>| Array1::from_shape_fn(n, |i| diag[i] * v[i]);
        let ev = leading_eigenvalues(n, 2, apply, ArnoldiOptions::default()).unwrap();
        assert!((ev[1].re - (1.0 - gap)).abs() < 1e-9, "{ev:?}");
    }

    #[test]
    fn complex_rotation_pairs() {
        // 2×2 rotation blocks scaled by decreasing radii
        let n = 800;
        let apply = |v: &Array1<f64>| {
            let mut out = Array1::zeros(n);
            for b in 0..n / 2 {
                let r = 0.99_f64.powi(b as i32);
                let (c, s) = (0.3_f64.cos() * r, 0.3_f64.sin() * r);
                out[2 * b] = c * v[2 * b] - s * v[2 * b + 1];
                out[2 * b + 1] = s * v[2 * b] + c * v[2 * b + 1];
            }
            out
        };
        let ev = leading_eigenvalues(n, 3, apply, ArnoldiOptions::default()).unwrap();
        assert!((ev[0].norm() - 1.0).abs() < 1e-9 && (ev[1].norm() - 1.0).abs() < 1e-9, "{ev:?}");
        assert!((ev[2].norm() - 0.99).abs() < 1e-9, "{ev:?}");
    }

    #[test]
    fn small_operators_use_dense_path() {
        let apply = |v: &Array1<Complex64>| v.mapv(|x| x * Complex64::new(0.0, 2.0));
        let ev = leading_eigenvalues(3, 2, apply, ArnoldiOptions::default()).unwrap();
        assert!((ev[0].norm() - 2.0).abs() < 1e-12 && (ev[1].norm() - 2.0).abs() < 1e-12);
    }
}
