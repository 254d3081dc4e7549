//! Fixed-size complex matrices for single-qubit channels and edge weights.

use num_complex::Complex;

use crate::scalar::Real;

pub type Mat2<T> = [[Complex<T>; 2]; 2];
pub type Mat4<T> = [[Complex<T>; 4]; 4];

#[inline]
pub fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub fn zeros4<T: Real>() -> Mat4<T> {
    [[c(0.0, 0.0); 4]; 4]
}

pub fn identity2<T: Real>() -> Mat2<T> {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

pub fn identity4<T: Real>() -> Mat4<T> {
    let mut m = zeros4();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0, 0.0);
    }
    m
}

pub fn pauli_x<T: Real>() -> Mat2<T> {
    [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn pauli_y<T: Real>() -> Mat2<T> {
    [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]]
}

pub fn pauli_z<T: Real>() -> Mat2<T> {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]
}

/// `n·σ` for a real vector `n`.
pub fn n_dot_sigma<T: Real>(n: [T; 3]) -> Mat2<T> {
    let (x, y, z) = (pauli_x::<T>(), pauli_y::<T>(), pauli_z::<T>());
    let mut m = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = x[i][j] * n[0] + y[i][j] * n[1] + z[i][j] * n[2];
        }
    }
    m
}

pub fn conj2<T: Real>(a: &Mat2<T>) -> Mat2<T> {
    let mut m = *a;
    for row in m.iter_mut() {
        for x in row.iter_mut() {
            *x = x.conj();
        }
    }
    m
}

/// `a ⊗ b` with index `2i + j`.
pub fn kron<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat4<T> {
    let mut m = zeros4();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    m
}

pub fn mul4<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut m = zeros4();
    for i in 0..4 {
        for k in 0..4 {
            for j in 0..4 {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

pub fn add4<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut m = *a;
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] += b[i][j];
        }
    }
    m
}

pub fn scale4<T: Real>(a: &Mat4<T>, s: Complex<T>) -> Mat4<T> {
    let mut m = *a;
    for row in m.iter_mut() {
        for x in row.iter_mut() {
            *x = *x * s;
        }
    }
    m
}

pub fn transpose4<T: Real>(a: &Mat4<T>) -> Mat4<T> {
    let mut m = zeros4();
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = a[j][i];
        }
    }
    m
}

pub fn adjoint4<T: Real>(a: &Mat4<T>) -> Mat4<T> {
    let mut m = transpose4(a);
    for row in m.iter_mut() {
        for x in row.iter_mut() {
            *x = x.conj();
        }
    }
    m
}

/// Entrywise max modulus of `a − b`.
pub fn max_abs_diff4<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> T {
    let mut d = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            d = d.max((a[i][j] - b[i][j]).norm());
        }
    }
    d
}

pub fn flatten4<T: Real>(a: &Mat4<T>) -> [Complex<T>; 16] {
    let mut v = [c(0.0, 0.0); 16];
    for i in 0..4 {
        for j in 0..4 {
            v[4 * i + j] = a[i][j];
        }
    }
    v
}

pub fn unflatten4<T: Real>(v: &[Complex<T>; 16]) -> Mat4<T> {
    let mut m = zeros4();
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = v[4 * i + j];
        }
    }
    m
}
