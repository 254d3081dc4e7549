//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use tcat::coupling_map::{ATCouplings, Channels};

/// Which couplings each bond uses, given its endpoints `(x, y)` and direction.
pub enum Bond {
    Horizontal,
    Vertical,
}

/// Brute-force `Σ_{s,τ} Π_bonds W_b(s s′, τ τ′) · Π_sites insert`.
///
/// `bond(x, y, dir)` returns the couplings of the bond leaving `(x, y)` in
/// direction `dir`; `insert(x, y, s, τ)` is the site factor.
pub fn enumerate_z(
    lx: usize,
    ly: usize,
    bond: impl Fn(usize, usize, Bond) -> ATCouplings<f64>,
    insert: impl Fn(usize, usize, i8, i8) -> f64,
) -> f64 {
    let n = lx * ly;
    assert!(n <= 10, "enumeration over 4^{n} configurations");
    let mut z = 0.0;
    let mut s = vec![1i8; n];
    let mut t = vec![1i8; n];
    for cfg in 0u64..(1u64 << (2 * n)) {
        for i in 0..n {
            s[i] = if cfg >> (2 * i) & 1 == 1 { -1 } else { 1 };
            t[i] = if cfg >> (2 * i + 1) & 1 == 1 { -1 } else { 1 };
        }
        let mut w = 1.0;
        for y in 0..ly {
            for x in 0..lx {
                let i = y * lx + x;
                let r = y * lx + (x + 1) % lx;
                let u = ((y + 1) % ly) * lx + x;
                w *= bond(x, y, Bond::Horizontal).weight(s[i] * s[r], t[i] * t[r]);
                w *= bond(x, y, Bond::Vertical).weight(s[i] * s[u], t[i] * t[u]);
                w *= insert(x, y, s[i], t[i]);
            }
        }
        z += w;
    }
    z
}

/// Partition function with the `(a, b)` defect of the given channel set.
pub fn enumerate_defect(lx: usize, ly: usize, at: ATCouplings<f64>, ch: Channels, a: bool, b: bool) -> f64 {
    enumerate_z(
        lx,
        ly,
        |x, y, dir| match dir {
            Bond::Vertical if a && y == ly - 1 => at.flipped(ch),
            Bond::Horizontal if b && x == lx - 1 => at.flipped(ch),
            _ => at,
        },
        |_, _, _, _| 1.0,
    )
}

/// `I_n(x)` by its power series (only for moderate `x`).
pub fn bessel_i_series(n: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = half.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
    let mut sum = term;
    for k in 1..400 {
        term *= half * half / (k as f64 * (k + n) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
