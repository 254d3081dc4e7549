//! Noise channel → Ashkin-Teller edge couplings.
//!
//! Every edge contributes `ω ∝ 1 + j1·ss′ + j2·ττ′ + k·ss′ττ′`. Writing
//! `u = ss′`, `v = ττ′`, the four weights `W(u, v)` are stored in the order
//! `(++, +−, −+, −−)`.
//!
//! The exponential form `ω ∝ exp(𝒥₁u + 𝒥₂v + 𝒦uv) ∝ (1 + t1·u)(1 + t2·v)(1 + tk·uv)`
//! is kept as tanh values so that the noiseless point (`𝒦 = ∞`) is `tk = 1`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise_models::{self, NoiseChannelSpec, RotationAxis};
use crate::scalar::Real;
use crate::small::{self, c, Mat4};

/// Linear-form couplings of one edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ATCouplings<T> {
    pub j1: T,
    pub j2: T,
    pub k: T,
}

/// The four `(u, v)` pairs in storage order.
pub const UV: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

impl<T: Real> ATCouplings<T> {
    pub fn new(j1: T, j2: T, k: T) -> Self {
        Self { j1, j2, k }
    }

    /// `W(u, v) = 1 + j1·u + j2·v + k·uv`.
    pub fn weight(&self, u: i8, v: i8) -> T {
        let (u, v) = (T::lit(u as f64), T::lit(v as f64));
        T::one() + self.j1 * u + self.j2 * v + self.k * u * v
    }

    pub fn weights(&self) -> [T; 4] {
        UV.map(|(u, v)| self.weight(u, v))
    }

    /// Relabels `s ↔ sτ` (exchanges the `j1` and `k` channels).
    pub fn swap_s_stau(&self) -> Self {
        Self::new(self.k, self.j2, self.j1)
    }

    /// Relabels `τ ↔ sτ` (exchanges the `j2` and `k` channels).
    pub fn swap_tau_stau(&self) -> Self {
        Self::new(self.j1, self.k, self.j2)
    }

    /// Flips the sign of the selected channels.
    pub fn flipped(&self, channels: Channels) -> Self {
        let f = |on: bool, x: T| if on { -x } else { x };
        Self::new(f(channels.s, self.j1), f(channels.tau, self.j2), f(channels.stau, self.k))
    }

    pub fn is_finite(&self) -> bool {
        self.j1.is_finite() && self.j2.is_finite() && self.k.is_finite()
    }
}

/// A subset of the three interaction channels `s`, `τ`, `sτ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channels {
    pub s: bool,
    pub tau: bool,
    pub stau: bool,
}

impl Channels {
    pub const NONE: Self = Self { s: false, tau: false, stau: false };
    pub const S: Self = Self { s: true, tau: false, stau: false };
    pub const TAU: Self = Self { s: false, tau: true, stau: false };
    pub const STAU: Self = Self { s: false, tau: false, stau: true };
    pub const S_AND_TAU: Self = Self { s: true, tau: true, stau: false };
    pub const TAU_AND_STAU: Self = Self { s: false, tau: true, stau: true };
    pub const S_AND_STAU: Self = Self { s: true, tau: false, stau: true };

    pub fn is_empty(&self) -> bool {
        !(self.s || self.tau || self.stau)
    }
}

/// Couplings of random rotations about `axis` with parameter `r = R`.
pub fn rotation_couplings<T: Real>(r: T, axis: &RotationAxis<T>) -> Result<ATCouplings<T>> {
    check_unit("R", r)?;
    let [nx, ny, nz] = axis.unit();
    let d = T::lit(2.0) - r + r * nx * nx;
    Ok(ATCouplings::new(
        r * (nz * nz + ny * ny) / d,
        r * (nz * nz - ny * ny) / d,
        (T::lit(2.0) - r - r * nx * nx) / d,
    ))
}

/// Couplings of amplitude damping: `(J₊, −J₋, K)` with
/// `J± = γ(1 ± γ)/(γ² − γ + 2)`, `K = (γ² − 3γ + 2)/(γ² − γ + 2)`.
pub fn amp_damp_couplings<T: Real>(gamma: T) -> Result<ATCouplings<T>> {
    check_unit("gamma", gamma)?;
    let d = gamma * gamma - gamma + T::lit(2.0);
    Ok(ATCouplings::new(
        gamma * (T::one() + gamma) / d,
        -gamma * (T::one() - gamma) / d,
        (gamma * gamma - T::lit(3.0) * gamma + T::lit(2.0)) / d,
    ))
}

/// Couplings of any supported channel (rotations enter only through `R`).
pub fn couplings_for<T: Real>(spec: &NoiseChannelSpec<T>) -> Result<ATCouplings<T>> {
    match spec {
        NoiseChannelSpec::RandomRotation { axis, dist } => rotation_couplings(dist.r_parameter(), axis),
        NoiseChannelSpec::AmplitudeDamping { gamma } => amp_damp_couplings(*gamma),
    }
}

fn check_unit<T: Real>(what: &'static str, x: T) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(what, format!("{x} not in [0, 1]")))
    }
}

/// Exponential-form couplings as `tanh` values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoltzmannCouplings<T> {
    pub t1: Complex<T>,
    pub t2: Complex<T>,
    pub tk: Complex<T>,
}

impl<T: Real> BoltzmannCouplings<T> {
    /// Linear-form couplings of `(1 + t1·u)(1 + t2·v)(1 + tk·uv)`; complex in
    /// general, real up to rounding when the source couplings were real.
    pub fn reconstruct(&self) -> [Complex<T>; 3] {
        let one = Complex::new(T::one(), T::zero());
        let (t1, t2, tk) = (self.t1, self.t2, self.tk);
        let d = one + t1 * t2 * tk;
        [(t1 + t2 * tk) / d, (t2 + t1 * tk) / d, (tk + t1 * t2) / d]
    }
}

/// Solves `W(u, v) ∝ (1 + t1·u)(1 + t2·v)(1 + tk·uv)`.
///
/// With all weights nonzero, `t = (a − b)/(a + b)` where `a, b` are products of
/// principal square roots, e.g. `t1: a = √W₊₊√W₊₋, b = √W₋₊√W₋₋`. Using the same
/// root of each weight in all three ratios keeps the branches mutually
/// consistent, so the product form reproduces `W` exactly.
///
/// Vanishing weights: an (anti)diagonal pair of zeros is representable with the
/// matching tanh equal to ±1; three zeros pin all three tanh values to ±1.
/// A single zero (or all four) has no finite representation.
pub fn boltzmann_form<T: Real>(at: &ATCouplings<T>) -> Result<BoltzmannCouplings<T>> {
    let w = at.weights();
    let scale = w.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let tiny = T::epsilon() * T::lit(64.0) * scale;
    let zero: [bool; 4] = w.map(|x| x.abs() <= tiny);
    let nz = zero.iter().filter(|z| **z).count();
    let one = Complex::new(T::one(), T::zero());
    let degenerate = |why: &str| {
        Error::DegenerateWeights(format!(
            "W(++,+−,−+,−−) = ({}, {}, {}, {}): {why}",
            w[0], w[1], w[2], w[3]
        ))
    };
    match nz {
        0 | 2 => {
            let root = |i: usize| {
                if zero[i] {
                    None
                } else {
                    Some(Complex::new(w[i], T::zero()).sqrt())
                }
            };
            let r = [root(0), root(1), root(2), root(3)];
            // (indices in a, indices in b) for t1, t2, tk
            let pairs = [([0, 1], [2, 3]), ([0, 2], [1, 3]), ([0, 3], [1, 2])];
            if nz == 2 && !pairs.iter().any(|(a, b)| (zero[a[0]] && zero[a[1]]) || (zero[b[0]] && zero[b[1]])) {
                return Err(degenerate("two zeros in one row or column of the (u, v) table"));
            }
            let mut t = [one; 3];
            for (slot, (ia, ib)) in t.iter_mut().zip(pairs.iter()) {
                let both_a = zero[ia[0]] && zero[ia[1]];
                let both_b = zero[ib[0]] && zero[ib[1]];
                *slot = if both_a {
                    -one
                } else if both_b {
                    one
                } else {
                    let a = r[ia[0]].unwrap_or(one) * r[ia[1]].unwrap_or(one);
                    let b = r[ib[0]].unwrap_or(one) * r[ib[1]].unwrap_or(one);
                    let den = a + b;
                    if den.norm() <= tiny {
                        return Err(degenerate("a tanh value is infinite"));
                    }
                    (a - b) / den
                };
            }
            Ok(BoltzmannCouplings { t1: t[0], t2: t[1], tk: t[2] })
        }
        3 => {
            let i = zero.iter().position(|z| !z).expect("one nonzero weight");
            let (u, v) = UV[i];
            let f = |x: i8| Complex::new(T::lit(x as f64), T::zero());
            Ok(BoltzmannCouplings { t1: f(u), t2: f(v), tk: f(u * v) })
        }
        1 => Err(degenerate("a single vanishing weight")),
        _ => Err(degenerate("all weights vanish")),
    }
}

/// `|e^{−2𝒦} − sinh 2𝒥|` for isotropic (`t1 = t2`) real couplings.
///
/// Infinite when either side diverges (`tk = −1` or `t = ±1`).
pub fn self_duality_residual<T: Real>(b: &BoltzmannCouplings<T>) -> Result<T> {
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
    let imag = b.t1.im.abs().max(b.t2.im.abs()).max(b.tk.im.abs());
    if imag > tol {
        return Err(Error::domain("self-duality input", "couplings are not real"));
    }
    if (b.t1 - b.t2).norm() > tol * T::one().max(b.t1.norm()) {
        return Err(Error::domain(
            "self-duality input",
            format!("anisotropic couplings t1={}, t2={}", b.t1.re, b.t2.re),
        ));
    }
    let t = b.t1.re;
    let tk = b.tk.re;
    if tk + T::one() == T::zero() || T::one() - t * t == T::zero() {
        return Ok(T::infinity());
    }
    let e2k = (T::one() - tk) / (T::one() + tk);
    let sinh2j = T::lit(2.0) * t / (T::one() - t * t);
    Ok((e2k - sinh2j).abs())
}

/// Weight table of the rotation channel computed from the doubled-space
/// operator rather than from the closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationOracle<T> {
    /// `W(u, v)` normalized to unit mean, storage order `(++, +−, −+, −−)`.
    pub table: [T; 4],
    pub couplings: ATCouplings<T>,
    /// Largest change of the table under the gauge spin `C → −C`.
    pub gauge_spread: T,
}

/// Brute-force edge weight for rotation noise.
///
/// Builds `𝔼†𝔼` of the equivalent stochastic channel (`(1 − 2p)² = 1 − R`),
/// drops the Pauli cross terms `σ_a ⊗ σ_b*` with `a ≠ b`, which leaves
/// `∝ 1 + λ(n_x² XX̄ − n_y² YȲ + n_z² ZZ̄)` with `λ = R/(2 − R)`, and sums the
/// four `z` variables of the two copies against the domain-wall spins.
pub fn weight_oracle_rotation<T: Real>(r: T, axis: &RotationAxis<T>) -> Result<RotationOracle<T>> {
    check_unit("R", r)?;
    let n = axis.unit();
    let p = (T::one() - (T::one() - r).sqrt()) / T::lit(2.0);
    let a = small::n_dot_sigma(n);
    let e = small::add4(
        &small::scale4(&small::identity4(), Complex::new(T::one() - p, T::zero())),
        &small::scale4(&small::kron(&a, &small::conj2(&a)), Complex::new(p, T::zero())),
    );
    let m = small::mul4(&small::adjoint4(&e), &e);
    let m = pauli_diagonal_part(&m);
    let w = walsh_abc(&m);
    let spread = [w[1], w[2], w[3], w[7]]
        .iter()
        .fold(T::zero(), |acc, x| acc.max(x.abs() / w[0].abs()));
    let couplings = ATCouplings::new(w[6] / w[0], w[5] / w[0], w[4] / w[0]);
    Ok(RotationOracle { table: couplings.weights(), couplings, gauge_spread: spread })
}

/// Couplings recovered from the full amplitude-damping `𝔼†𝔼`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmpDampOracle<T> {
    pub at: ATCouplings<T>,
    /// Coefficient of the `A + B + C + ABC` term excluded from lattice models.
    pub dropped_coeff: T,
}

/// Brute-force edge weight for amplitude damping from its Kraus operators.
pub fn weight_oracle_ampdamp<T: Real>(gamma: T) -> Result<AmpDampOracle<T>> {
    let spec = NoiseChannelSpec::amplitude_damping(gamma)?;
    let e = noise_models::channel_superoperator(&spec)?;
    let m = small::mul4(&small::adjoint4(&e), &e);
    let w = walsh_abc(&m);
    Ok(AmpDampOracle {
        at: ATCouplings::new(w[6] / w[0], w[5] / w[0], w[4] / w[0]),
        dropped_coeff: w[1] / w[0],
    })
}

/// Keeps only the `σ_a ⊗ σ_a*` components of a doubled-space operator.
fn pauli_diagonal_part<T: Real>(m: &Mat4<T>) -> Mat4<T> {
    let paulis = [
        small::identity2::<T>(),
        small::pauli_x(),
        small::pauli_y(),
        small::pauli_z(),
    ];
    let mut out = small::zeros4();
    for p in paulis.iter() {
        let basis = small::kron(p, &small::conj2(p));
        // coefficient = Tr(basis† m) / 4
        let mut coef = c::<T>(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                coef += basis[i][j].conj() * m[i][j];
            }
        }
        out = small::add4(&out, &small::scale4(&basis, coef / T::lit(4.0)));
    }
    out
}

/// Walsh coefficients of `ω(A, B, C) = 16·⟨B, ABC|M|A, C⟩` (real part) in the
/// order `1, A, B, C, AB, BC, CA, ABC`.
///
/// The `z` sum `Σ ⟨z′z̄′|M|zz̄⟩ (1+zA)(1+z̄C)(1+z′B)(1+z̄′D)` collapses to a single
/// matrix element; `D = ABC` is imposed (other parities vanish).
fn walsh_abc<T: Real>(m: &Mat4<T>) -> [T; 8] {
    let idx = |s: i8| if s > 0 { 0usize } else { 1 };
    let mut coef = [T::zero(); 8];
    for a in [1i8, -1] {
        for b in [1i8, -1] {
            for cc in [1i8, -1] {
                let d = a * b * cc;
                let w = T::lit(16.0) * m[2 * idx(b) + idx(d)][2 * idx(a) + idx(cc)].re;
                let chars = [1, a, b, cc, a * b, b * cc, cc * a, a * b * cc];
                for (k, ch) in chars.iter().enumerate() {
                    coef[k] += w * T::lit(*ch as f64) / T::lit(8.0);
                }
            }
        }
    }
    coef
}

/// `Λ = λ·max(|n_x n_y|, |n_y n_z|, |n_z n_x|)`, `λ = R/(2 − R)`: the
/// magnitude of the cross terms excluded from the lattice weight.
pub fn cross_term_bound<T: Real>(r: T, axis: &RotationAxis<T>) -> Result<T> {
    check_unit("R", r)?;
    let [nx, ny, nz] = axis.unit();
    let lambda = r / (T::lit(2.0) - r);
    Ok(lambda * (nx * ny).abs().max((ny * nz).abs()).max((nz * nx).abs()))
}
