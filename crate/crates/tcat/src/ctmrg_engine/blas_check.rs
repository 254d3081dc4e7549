//! One-time sanity check of the BLAS matrix product.

use std::sync::OnceLock;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Environment variable that pins the OpenBLAS kernel family.
pub const CORETYPE_VAR: &str = "OPENBLAS_CORETYPE";

/// Compares one BLAS-backed product against a plain triple loop. The shape
/// triggers the faulty small-matrix kernels some OpenBLAS builds select on
/// recent Xeons.
pub fn blas_is_sound() -> bool {
    static SOUND: OnceLock<bool> = OnceLock::new();
    *SOUND.get_or_init(|| {
        let (m, k, n) = (32, 124, 496);
        let a = Array2::from_shape_fn((m, k), |(i, j)| ((3 * i + 7 * j) % 11) as f64 - 5.0);
        let b = Array2::from_shape_fn((k, n), |(i, j)| ((5 * i + 2 * j) % 13) as f64 - 6.0);
        let c = a.dot(&b);
        (0..m).all(|i| {
            (0..n).all(|j| {
                let exact: f64 = (0..k).map(|l| a[[i, l]] * b[[l, j]]).sum();
                (exact - c[[i, j]]).abs() <= 1e-9 * (1.0 + exact.abs())
            })
        })
    })
}

pub(crate) fn require_sound_blas() -> Result<()> {
    if blas_is_sound() {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "the linked BLAS returns wrong matrix products; rerun with {CORETYPE_VAR}=Haswell"
        )))
    }
}
