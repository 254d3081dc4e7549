//! Exact Ashkin-Teller partition functions on small tori.
//!
//! Sites `(x, y)` carry a spin pair `(s, τ)` encoded as `q = 2·[s = −1] + [τ = −1]`.
//! An edge weight depends only on `q ⊕ q′`, whose value `d` indexes the
//! `(u, v)` table of [`ATCouplings::weights`]: `d = 0, 1, 2, 3` is
//! `(++), (+−), (−+), (−−)`.
//!
//! Row-to-row transfer: rows have `4^lx` states; the trace is accumulated from
//! independent starting rows, restricted to `q(0, 0) = 0` by the global
//! `Z₂ × Z₂` symmetry.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling_map::{ATCouplings, Channels};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest supported torus width.
pub const MAX_LX: usize = 10;

/// Relative size of an imaginary part that marks a result as complex.
pub const IMAG_FLAG_REL: f64 = 1e-8;

/// Periodic `lx × ly` lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusSpec {
    pub lx: usize,
    pub ly: usize,
}

impl TorusSpec {
    pub fn new(lx: usize, ly: usize) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::Validation(format!("torus {lx}×{ly} has no sites")));
        }
        if lx > MAX_LX {
            return Err(Error::Capacity(format!("lx = {lx} exceeds {MAX_LX} (4^lx row states)")));
        }
        Ok(Self { lx, ly })
    }

    pub fn sites(&self) -> usize {
        self.lx * self.ly
    }

    fn site(&self, x: usize, y: usize) -> usize {
        (y % self.ly) * self.lx + x % self.lx
    }

    /// Both side lengths even, i.e. the torus is bipartite.
    pub fn is_bipartite(&self) -> bool {
        self.lx % 2 == 0 && self.ly % 2 == 0
    }
}

/// Channels flipped by the non-contractible defect loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChannelSet {
    SAndTau,
    TauAndStau,
}

impl ChannelSet {
    pub fn channels(self) -> Channels {
        match self {
            ChannelSet::SAndTau => Channels::S_AND_TAU,
            ChannelSet::TauAndStau => Channels::TAU_AND_STAU,
        }
    }
}

/// `a`: flip across the horizontal loop (vertical bonds from row `ly − 1` to
/// row 0); `b`: flip across the vertical loop (horizontal bonds from column
/// `lx − 1` to column 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DefectPattern {
    pub channelset: ChannelSet,
    pub a: bool,
    pub b: bool,
}

impl DefectPattern {
    pub fn none() -> Self {
        Self { channelset: ChannelSet::SAndTau, a: false, b: false }
    }

    pub fn is_identity(&self) -> bool {
        !(self.a || self.b)
    }
}

/// One of the three Ising variables on a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spin {
    S,
    Tau,
    STau,
}

impl Spin {
    fn mask(self) -> u8 {
        match self {
            Spin::S => 2,
            Spin::Tau => 1,
            Spin::STau => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SeamKind {
    /// Product of the spin at both endpoints (sites).
    OrderString(Spin),
    /// Channels flipped on every edge crossed by a dual path between two
    /// plaquettes; plaquette `(x, y)` has lower-left corner at site `(x, y)`.
    DisorderSeam(Channels),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeamSpec {
    pub kind: SeamKind,
    pub endpoints: [(usize, usize); 2],
}

/// `χ_c(d) = (−1)^{popcount(c ∧ d)}`.
fn character(c: u8, d: u8) -> i8 {
    if (c & d).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Negates the Walsh components of the given channels.
fn flip_weights<T: Real>(w: &[Complex<T>; 4], channels: Channels) -> [Complex<T>; 4] {
    // channel c ∈ {s = 2, τ = 1, sτ = 3}
    let negated = [false, channels.tau, channels.s, channels.stau];
    let mut lam = [Complex::new(T::zero(), T::zero()); 4];
    for (c, l) in lam.iter_mut().enumerate() {
        for (d, wd) in w.iter().enumerate() {
            *l += *wd * T::lit(character(c as u8, d as u8) as f64);
        }
    }
    let mut out = [Complex::new(T::zero(), T::zero()); 4];
    for (d, o) in out.iter_mut().enumerate() {
        for c in 0..4 {
            let sign = if negated[c] { -T::one() } else { T::one() };
            *o += lam[c] * T::lit(character(c as u8, d as u8) as f64) * sign;
        }
        *o = *o / T::lit(4.0);
    }
    out
}

fn complex_weights<T: Real>(at: &ATCouplings<T>) -> [Complex<T>; 4] {
    at.weights().map(|w| Complex::new(w, T::zero()))
}

/// Per-bond weights and site insertions on a torus.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeWeights<T> {
    pub torus: TorusSpec,
    /// Bond `(x, y)–(x + 1, y)` at index `y·lx + x`.
    pub h: Vec<[Complex<T>; 4]>,
    /// Bond `(x, y)–(x, y + 1)` at index `y·lx + x`.
    pub v: Vec<[Complex<T>; 4]>,
    /// Spin mask inserted on each site (0 = none).
    pub site: Vec<u8>,
}

impl<T: Real> LatticeWeights<T> {
    pub fn uniform(torus: TorusSpec, at: &ATCouplings<T>) -> Self {
        let w = complex_weights(at);
        let n = torus.sites();
        Self { torus, h: vec![w; n], v: vec![w; n], site: vec![0; n] }
    }

    pub fn with_defects(torus: TorusSpec, at: &ATCouplings<T>, defects: &DefectPattern) -> Self {
        let mut lw = Self::uniform(torus, at);
        let ch = defects.channelset.channels();
        if defects.a {
            for x in 0..torus.lx {
                lw.flip_v(x, torus.ly - 1, ch);
            }
        }
        if defects.b {
            for y in 0..torus.ly {
                lw.flip_h(torus.lx - 1, y, ch);
            }
        }
        lw
    }

    pub fn flip_h(&mut self, x: usize, y: usize, channels: Channels) {
        let i = self.torus.site(x, y);
        self.h[i] = flip_weights(&self.h[i], channels);
    }

    pub fn flip_v(&mut self, x: usize, y: usize, channels: Channels) {
        let i = self.torus.site(x, y);
        self.v[i] = flip_weights(&self.v[i], channels);
    }

    /// Multiplies the weight by `spin` at site `(x, y)`.
    pub fn insert(&mut self, x: usize, y: usize, spin: Spin) {
        let i = self.torus.site(x, y);
        self.site[i] ^= spin.mask();
    }

    /// Flips `channels` on every edge crossed by the dual path from plaquette
    /// `from` to `to`: first along +x, then along +y.
    pub fn seam(&mut self, from: (usize, usize), to: (usize, usize), channels: Channels) {
        let TorusSpec { lx, ly } = self.torus;
        let (mut px, mut py) = (from.0 % lx, from.1 % ly);
        let (tx, ty) = (to.0 % lx, to.1 % ly);
        while px != tx {
            // shared edge of plaquettes (px, py) and (px + 1, py)
            self.flip_v((px + 1) % lx, py, channels);
            px = (px + 1) % lx;
        }
        while py != ty {
            self.flip_h(px, (py + 1) % ly, channels);
            py = (py + 1) % ly;
        }
    }

    /// `Z = Σ_config Π_bonds w · Π_sites χ`.
    pub fn partition_function(&self) -> Complex<T> {
        let zero = Complex::new(T::zero(), T::zero());
        if self.site.iter().fold(0u8, |acc, m| acc ^ m) != 0 {
            return zero;
        }
        let TorusSpec { lx, ly } = self.torus;
        let dim = 1usize << (2 * lx);
        let diag: Vec<Vec<Complex<T>>> = (0..ly).map(|y| self.row_diagonal(y, dim)).collect();
        let starts: Vec<usize> = (0..dim).filter(|c| c & 3 == 0).collect();
        let terms: Vec<Complex<T>> = starts
            .par_iter()
            .map(|&c0| {
                let mut psi = vec![zero; dim];
                psi[c0] = Complex::new(T::one(), T::zero());
                for (y, d) in diag.iter().enumerate() {
                    for (p, f) in psi.iter_mut().zip(d.iter()) {
                        *p = *p * *f;
                    }
                    for x in 0..lx {
                        apply_column(&mut psi, x, &self.v[y * lx + x]);
                    }
                }
                psi[c0]
            })
            .collect();
        terms.into_iter().fold(zero, |a, b| a + b) * T::lit(4.0)
    }

    fn row_diagonal(&self, y: usize, dim: usize) -> Vec<Complex<T>> {
        let lx = self.torus.lx;
        (0..dim)
            .map(|c| {
                let q = |x: usize| ((c >> (2 * (x % lx))) & 3) as u8;
                let mut w = Complex::new(T::one(), T::zero());
                for x in 0..lx {
                    w = w * self.h[y * lx + x][(q(x) ^ q(x + 1)) as usize];
                    if character(self.site[y * lx + x], q(x)) < 0 {
                        w = -w;
                    }
                }
                w
            })
            .collect()
    }
}

/// `ψ′[.., q′_x, ..] = Σ_q w[q ⊕ q′] ψ[.., q_x, ..]`.
fn apply_column<T: Real>(psi: &mut [Complex<T>], x: usize, w: &[Complex<T>; 4]) {
    let stride = 1usize << (2 * x);
    let block = stride * 4;
    for base in (0..psi.len()).step_by(block) {
        for off in 0..stride {
            let i = base + off;
            let a = [psi[i], psi[i + stride], psi[i + 2 * stride], psi[i + 3 * stride]];
            for qp in 0..4 {
                psi[i + qp * stride] = w[qp] * a[0]
                    + w[qp ^ 1] * a[1]
                    + w[qp ^ 2] * a[2]
                    + w[qp ^ 3] * a[3];
            }
        }
    }
}

/// `log |λ₀| / lx` of the row transfer matrix of an infinitely long cylinder
/// with circumference `lx`, by power iteration from the uniform row.
pub fn cylinder_free_energy<T: Real>(lx: usize, at: &ATCouplings<T>) -> Result<T> {
    let torus = TorusSpec::new(lx, 1)?;
    let lw = LatticeWeights::uniform(torus, at);
    let dim = 1usize << (2 * lx);
    let diag = lw.row_diagonal(0, dim);
    let w = complex_weights(at);
    let norm = |psi: &[Complex<T>]| psi.iter().fold(T::zero(), |a, p| a + p.norm_sqr()).sqrt();
    let mut psi = vec![Complex::new(T::one(), T::zero()); dim];
    let mut prev = T::infinity();
    for _ in 0..100_000 {
        let n0 = norm(&psi);
        for p in psi.iter_mut() {
            *p = *p / n0;
        }
        for (p, f) in psi.iter_mut().zip(diag.iter()) {
            *p = *p * *f;
        }
        for x in 0..lx {
            apply_column(&mut psi, x, &w);
        }
        let n1 = norm(&psi);
        if !(n1 > T::zero() && n1.is_finite()) {
            return Err(Error::Degenerate("cylinder transfer matrix annihilated the row".into()));
        }
        let f = n1.ln() / T::lit(lx as f64);
        if (f - prev).abs() <= T::lit(1e-15) * (T::one() + f.abs()) {
            return Ok(f);
        }
        prev = f;
    }
    Err(Error::Numerical("cylinder power iteration did not converge".into()))
}

/// Whether `z` has an imaginary part beyond [`IMAG_FLAG_REL`] of its real part.
pub fn imag_flag<T: Real>(z: Complex<T>) -> bool {
    z.im.abs() > T::lit(IMAG_FLAG_REL) * z.re.abs()
}

pub fn partition_function<T: Real>(
    torus: TorusSpec,
    at: &ATCouplings<T>,
    defects: &DefectPattern,
) -> Result<Complex<T>> {
    let torus = TorusSpec::new(torus.lx, torus.ly)?;
    Ok(LatticeWeights::with_defects(torus, at, defects).partition_function())
}

/// The eight defect sectors and the resulting Rényi-2 coherent information.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoherentInfoRecord<T> {
    pub torus: TorusSpec,
    pub couplings: ATCouplings<T>,
    /// `[(0,0), (0,1), (1,0), (1,1)]` sectors of `S_AND_TAU`, then of `TAU_AND_STAU`.
    pub sectors: [[Complex<T>; 4]; 2],
    pub ic2: T,
    /// Set when the sector-sum ratio is not real to [`IMAG_FLAG_REL`].
    pub complex_flag: bool,
}

/// `log[Σ_{ab} Z_{S_AND_TAU}^{(a,b)} / Σ_{ab} Z_{TAU_AND_STAU}^{(a,b)}]` with
/// all sectors.
pub fn coherent_info_record<T: Real>(torus: TorusSpec, at: &ATCouplings<T>) -> Result<CoherentInfoRecord<T>> {
    let torus = TorusSpec::new(torus.lx, torus.ly)?;
    let zero = Complex::new(T::zero(), T::zero());
    let mut sectors = [[zero; 4]; 2];
    for (row, cs) in sectors.iter_mut().zip([ChannelSet::SAndTau, ChannelSet::TauAndStau]) {
        for (i, z) in row.iter_mut().enumerate() {
            let d = DefectPattern { channelset: cs, a: i & 2 != 0, b: i & 1 != 0 };
            *z = LatticeWeights::with_defects(torus, at, &d).partition_function();
        }
    }
    let sum = |r: &[Complex<T>; 4]| r.iter().fold(zero, |a, b| a + *b);
    let (num, den) = (sum(&sectors[0]), sum(&sectors[1]));
    let scale = sectors.iter().flatten().fold(T::zero(), |m, z| m.max(z.norm()));
    let tiny = T::epsilon() * T::lit(64.0) * scale;
    for (z, name) in [(num, "S_AND_TAU"), (den, "TAU_AND_STAU")] {
        if z.norm() <= tiny {
            return Err(Error::Degenerate(format!("{name} sector sum vanishes on {}×{}", torus.lx, torus.ly)));
        }
    }
    let ratio = num / den;
    if ratio.re <= T::zero() {
        return Err(Error::Numerical(format!("sector ratio {ratio} is not positive")));
    }
    Ok(CoherentInfoRecord {
        torus,
        couplings: *at,
        sectors,
        ic2: ratio.re.ln(),
        complex_flag: imag_flag(ratio),
    })
}

pub fn renyi2_coherent_info<T: Real>(torus: TorusSpec, at: &ATCouplings<T>) -> Result<T> {
    Ok(coherent_info_record(torus, at)?.ic2)
}

fn ratio_to_plain<T: Real>(lw: &LatticeWeights<T>, at: &ATCouplings<T>) -> Result<Complex<T>> {
    let z = LatticeWeights::uniform(lw.torus, at).partition_function();
    if z.norm() == T::zero() {
        return Err(Error::Degenerate("partition function vanishes".into()));
    }
    Ok(lw.partition_function() / z)
}

/// `⟨X_i X_j⟩` for the spin named by an order-string seam.
pub fn order_correlator<T: Real>(torus: TorusSpec, at: &ATCouplings<T>, seam: &SeamSpec) -> Result<Complex<T>> {
    let torus = TorusSpec::new(torus.lx, torus.ly)?;
    let SeamKind::OrderString(spin) = seam.kind else {
        return Err(Error::Validation("order_correlator needs an order-string seam".into()));
    };
    let [(x1, y1), (x2, y2)] = seam.endpoints;
    if torus.site(x1, y1) == torus.site(x2, y2) {
        return Err(Error::Validation("order-string endpoints coincide".into()));
    }
    let mut lw = LatticeWeights::uniform(torus, at);
    lw.insert(x1, y1, spin);
    lw.insert(x2, y2, spin);
    ratio_to_plain(&lw, at)
}

/// `Z_seam / Z` for a disorder seam.
pub fn disorder_correlator<T: Real>(torus: TorusSpec, at: &ATCouplings<T>, seam: &SeamSpec) -> Result<Complex<T>> {
    let torus = TorusSpec::new(torus.lx, torus.ly)?;
    let SeamKind::DisorderSeam(channels) = seam.kind else {
        return Err(Error::Validation("disorder_correlator needs a disorder seam".into()));
    };
    let mut lw = LatticeWeights::uniform(torus, at);
    lw.seam(seam.endpoints[0], seam.endpoints[1], channels);
    ratio_to_plain(&lw, at)
}

/// Endpoints used for the anyon parameters: `(0, 0)` and `(⌊lx/2⌋, ⌊ly/2⌋)`.
pub fn max_separation(torus: TorusSpec) -> [(usize, usize); 2] {
    [(0, 0), (torus.lx / 2, torus.ly / 2)]
}

/// `(⟨s s⟩, ⟨sτ sτ⟩, μ^τ seam, μ^s μ^τ seam)` at maximal separation.
///
/// The `μ^τ` seam flips the τ and sτ channels, `μ^s μ^τ` flips s and τ.
pub fn anyon_parameters<T: Real>(torus: TorusSpec, at: &ATCouplings<T>) -> Result<[Complex<T>; 4]> {
    let endpoints = max_separation(torus);
    let order = |spin| order_correlator(torus, at, &SeamSpec { kind: SeamKind::OrderString(spin), endpoints });
    let seam = |ch| disorder_correlator(torus, at, &SeamSpec { kind: SeamKind::DisorderSeam(ch), endpoints });
    Ok([
        order(Spin::S)?,
        order(Spin::STau)?,
        seam(Channels::TAU_AND_STAU)?,
        seam(Channels::S_AND_TAU)?,
    ])
}

/// Couplings after flipping τ on one sublattice of a bipartite torus: every
/// edge joins the two sublattices, so `j2` and `k` change sign.
pub fn stagger_tau<T: Real>(torus: TorusSpec, at: &ATCouplings<T>) -> Result<ATCouplings<T>> {
    if !torus.is_bipartite() {
        return Err(Error::Validation(format!(
            "sublattice flip needs even side lengths, got {}×{}",
            torus.lx, torus.ly
        )));
    }
    Ok(at.flipped(Channels::TAU_AND_STAU))
}

/// Maps Y-axis couplings `(r, −r, 1)` to `(r, −1, r)`: exchange τ ↔ sτ, then
/// flip τ on one sublattice.
pub fn relabel_y_axis<T: Real>(torus: TorusSpec, at: &ATCouplings<T>) -> Result<ATCouplings<T>> {
    stagger_tau(torus, &at.swap_tau_stau())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(lx: usize, ly: usize) -> TorusSpec {
        TorusSpec::new(lx, ly).unwrap()
    }

    #[test]
    fn free_spins() {
        let z = partition_function(t(3, 2), &ATCouplings::new(0.0_f64, 0.0, 0.0), &DefectPattern::none()).unwrap();
        assert!((z.re - 4f64.powi(6)).abs() < 1e-6 && z.im == 0.0);
    }

    #[test]
    fn capacity_and_validation() {
        assert!(matches!(TorusSpec::new(11, 2), Err(Error::Capacity(_))));
        assert!(TorusSpec::new(0, 2).is_err());
    }

    #[test]
    fn noiseless_coherent_info() {
        let at = ATCouplings::new(0.0_f64, 0.0, 1.0);
        for (lx, ly) in [(2, 2), (2, 3), (3, 3)] {
            let ic = renyi2_coherent_info(t(lx, ly), &at).unwrap();
            assert!((ic - 2.0 * 2f64.ln()).abs() < 1e-12, "{lx}x{ly}: {ic}");
        }
    }

    #[test]
    fn flip_weights_matches_coupling_flip() {
        let at = ATCouplings::new(0.3_f64, -0.2, 0.6);
        for ch in [Channels::S, Channels::TAU, Channels::STAU, Channels::S_AND_TAU] {
            let a = flip_weights(&complex_weights(&at), ch);
            let b = complex_weights(&at.flipped(ch));
            for i in 0..4 {
                assert!((a[i] - b[i]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn odd_insertion_vanishes() {
        let mut lw = LatticeWeights::uniform(t(2, 2), &ATCouplings::new(0.5_f64, 0.1, 0.2));
        lw.insert(0, 1, Spin::S);
        assert_eq!(lw.partition_function().norm(), 0.0);
    }

    #[test]
    fn stagger_needs_even_torus() {
        let at = ATCouplings::new(0.4_f64, -0.4, 1.0);
        assert!(relabel_y_axis(t(3, 2), &at).is_err());
        let r = relabel_y_axis(t(2, 4), &at).unwrap();
        assert_eq!((r.j1, r.j2, r.k), (0.4, -1.0, 0.4));
    }
}
