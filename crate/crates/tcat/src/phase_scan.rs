//! Sweeps, phase classification and boundary location.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling_map::{amp_damp_couplings, rotation_couplings, ATCouplings};
use crate::ctmrg_engine::{linear_fit, run_point, CtmrgControls, Observables, PointRecord};
use crate::error::{Error, Result};
use crate::noise_models::{bessel, RotationAxis};

/// Bond dimension of sweeps.
pub const SCAN_D: usize = 32;
/// Bond dimension of boundary refinement.
pub const BISECT_D: usize = 40;
/// Points per ray.
pub const RAY_POINTS: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    /// Only `sτ` ordered.
    Po,
    /// `s`, `τ` and `sτ` ordered.
    Fm,
    Pm,
    Unclassified,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Po => "PO",
            Phase::Fm => "FM",
            Phase::Pm => "PM",
            Phase::Unclassified => "UNCLASSIFIED",
        }
    }
}

/// Labels a point from the indicator `|⟨sτ⟩| + (|⟨s⟩| + |⟨τ⟩|)/2`.
pub fn classify(obs: &Observables) -> Phase {
    let ind = obs.indicator;
    if (0.75..=1.25).contains(&ind) && obs.m_s.norm() < 0.1 && obs.m_tau.norm() < 0.1 {
        Phase::Po
    } else if ind > 1.6 {
        Phase::Fm
    } else if ind < 0.25 {
        Phase::Pm
    } else {
        Phase::Unclassified
    }
}

/// A one-parameter family of couplings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingPath {
    /// `R ↦ rotation_couplings(R, axis)`.
    Rotation { theta: f64, phi: f64 },
    /// `γ ↦ amp_damp_couplings(γ)`.
    AmpDamp,
}

impl CouplingPath {
    pub fn rotation(axis: &RotationAxis<f64>) -> Self {
        CouplingPath::Rotation { theta: axis.theta, phi: axis.phi }
    }

    pub fn couplings(&self, t: f64) -> Result<ATCouplings<f64>> {
        match *self {
            CouplingPath::Rotation { theta, phi } => rotation_couplings(t, &RotationAxis::new(theta, phi)?),
            CouplingPath::AmpDamp => amp_damp_couplings(t),
        }
    }

    /// Short identifier used in output files.
    pub fn label(&self) -> String {
        match self {
            CouplingPath::Rotation { theta, phi } => format!("rotation(theta={theta},phi={phi})"),
            CouplingPath::AmpDamp => "ampdamp".to_string(),
        }
    }

    fn angles(&self) -> (f64, f64) {
        match *self {
            CouplingPath::Rotation { theta, phi } => (theta, phi),
            CouplingPath::AmpDamp => (f64::NAN, f64::NAN),
        }
    }
}

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRecord {
    /// Position in the originating grid.
    pub index: usize,
    pub path: CouplingPath,
    /// `R` for rotations, `γ` for amplitude damping.
    pub param: f64,
    pub point: PointRecord,
    pub phase: Phase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    RayMax,
    Bisection,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryEstimate {
    pub line: String,
    pub value: f64,
    pub bracket_width: f64,
    pub method: Method,
    /// Phase labels on the two sides (bisection only).
    pub sides: Option<(Phase, Phase)>,
}

/// Evaluates one point of a path.
pub fn scan_point(path: CouplingPath, index: usize, param: f64, controls: CtmrgControls) -> Result<ScanRecord> {
    let at = path.couplings(param)?;
    let (point, _) = run_point(&at, controls, None)?;
    let phase = classify(&point.observables);
    Ok(ScanRecord { index, path, param, point, phase })
}

/// Evaluates a grid on the current worker pool; the output is in grid order
/// regardless of scheduling.
pub fn scan_grid(path: CouplingPath, grid: &[f64], controls: CtmrgControls) -> Result<Vec<ScanRecord>> {
    let points: Vec<(CouplingPath, f64)> = grid.iter().map(|&t| (path, t)).collect();
    scan_points(&points, controls)
}

/// [`scan_grid`] over points from several paths; `index` is the position in `points`.
pub fn scan_points(points: &[(CouplingPath, f64)], controls: CtmrgControls) -> Result<Vec<ScanRecord>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, &(path, t))| scan_point(path, i, t, controls))
        .collect()
}

/// `n` evenly spaced points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Scans `R` along `axis` and reports the grid point of largest `ξ_D`.
pub fn ray_scan(
    axis: &RotationAxis<f64>,
    r_grid: &[f64],
    controls: CtmrgControls,
) -> Result<(Vec<ScanRecord>, BoundaryEstimate)> {
    if r_grid.is_empty() {
        return Err(Error::Validation("empty R grid".into()));
    }
    if r_grid.windows(2).any(|w| !(w[0] < w[1])) || r_grid[0] < 0.0 || r_grid[r_grid.len() - 1] > 1.0 {
        return Err(Error::Validation("R grid must be strictly increasing within [0, 1]".into()));
    }
    let path = CouplingPath::rotation(axis);
    let records = scan_grid(path, r_grid, controls)?;
    let best = argmax_xi(&records)
        .ok_or_else(|| Error::Numerical("no grid point has a finite correlation length".into()))?;
    let left = if best > 0 { r_grid[best] - r_grid[best - 1] } else { 0.0 };
    let right = if best + 1 < r_grid.len() { r_grid[best + 1] - r_grid[best] } else { 0.0 };
    let estimate = BoundaryEstimate {
        line: path.label(),
        value: r_grid[best],
        bracket_width: left + right,
        method: Method::RayMax,
        sides: None,
    };
    Ok((records, estimate))
}

/// Index of the largest `ξ_D`, skipping points where it is unknown.
fn argmax_xi(records: &[ScanRecord]) -> Option<usize> {
    (0..records.len())
        .filter(|&i| !records[i].point.observables.xi.is_nan())
        .max_by(|&a, &b| records[a].point.observables.xi.total_cmp(&records[b].point.observables.xi))
}

/// Whether the ξ maximum of a ray lies strictly inside the grid.
pub fn has_interior_maximum(records: &[ScanRecord]) -> bool {
    let last = records.len().saturating_sub(1);
    match argmax_xi(records) {
        Some(i) => i > 0 && i < last && records[i].point.observables.xi > records[last].point.observables.xi,
        None => false,
    }
}

/// Bisection on the phase label between `lo` and `hi`. The bracket follows
/// the less ordered classified endpoint (PM, then PO, then FM), so the
/// estimate marks where its phase ends and unclassified points count as
/// ordered.
pub fn bisect_boundary(
    path: CouplingPath,
    lo: f64,
    hi: f64,
    controls: CtmrgControls,
    tol: f64,
) -> Result<(BoundaryEstimate, Vec<ScanRecord>)> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::Validation(format!("need lo < hi and tol > 0 (got {lo}, {hi}, {tol})")));
    }
    let mut evals = Vec::new();
    let eval = |t: f64, evals: &mut Vec<ScanRecord>| -> Result<Phase> {
        let rec = scan_point(path, evals.len(), t, controls)?;
        let phase = rec.phase;
        evals.push(rec);
        Ok(phase)
    };
    let (mut a, mut b) = (lo, hi);
    let pa = eval(a, &mut evals)?;
    let pb = eval(b, &mut evals)?;
    if pa == pb {
        return Err(Error::Validation(format!(
            "bracketing failed: both ends of [{lo}, {hi}] classify as {}",
            pa.as_str()
        )));
    }
    let rank = |p: Phase| match p {
        Phase::Pm => 0,
        Phase::Po => 1,
        Phase::Fm => 2,
        Phase::Unclassified => 3,
    };
    let follow_lo = rank(pa) <= rank(pb);
    while b - a > tol {
        let m = 0.5 * (a + b);
        let pm = eval(m, &mut evals)?;
        let on_lo_side = if follow_lo { pm == pa } else { pm != pb };
        if on_lo_side {
            a = m;
        } else {
            b = m;
        }
    }
    let estimate = BoundaryEstimate {
        line: path.label(),
        value: 0.5 * (a + b),
        bracket_width: b - a,
        method: Method::Bisection,
        sides: Some((pa, pb)),
    };
    Ok((estimate, evals))
}

/// Log-log slope of `|m|` against `γ − γ_c` over the window `[1e-3, 5e-2]`.
pub fn beta_exponent_fit(samples: &[(f64, f64)], gamma_c: f64) -> Result<f64> {
    if let Some((g, _)) = samples.iter().find(|(g, _)| *g <= gamma_c) {
        return Err(Error::Validation(format!("γ = {g} is not past γ_c = {gamma_c}")));
    }
    let window: Vec<(f64, f64)> =
        samples.iter().copied().filter(|(g, _)| (1e-3..=5e-2).contains(&(g - gamma_c))).collect();
    if window.len() < 5 {
        return Err(Error::Validation(format!("{} points in the fit window, need 5", window.len())));
    }
    if window.iter().any(|(_, m)| !(*m > 0.0)) {
        return Err(Error::Numerical("vanishing magnetization in the fit window".into()));
    }
    let xs: Vec<f64> = window.iter().map(|(g, _)| (g - gamma_c).ln()).collect();
    let ys: Vec<f64> = window.iter().map(|(_, m)| m.ln()).collect();
    let (slope, _, _) = linear_fit(&xs, &ys)?;
    Ok(slope)
}

/// Runs amplitude damping at `gammas` and fits `|⟨s⟩| ∝ (γ − γ_c)^β`.
pub fn beta_exponent_scan(gammas: &[f64], gamma_c: f64, controls: CtmrgControls) -> Result<(f64, Vec<ScanRecord>)> {
    if let Some(g) = gammas.iter().find(|g| **g <= gamma_c) {
        return Err(Error::Validation(format!("γ = {g} is not past γ_c = {gamma_c}")));
    }
    let records = scan_grid(CouplingPath::AmpDamp, gammas, controls)?;
    let samples: Vec<(f64, f64)> = records.iter().map(|r| (r.param, r.point.observables.m_s.norm())).collect();
    Ok((beta_exponent_fit(&samples, gamma_c)?, records))
}

/// Boundary of the region where the equal-weight double von Mises
/// distribution pushes `R` past `r_c`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VonMisesBoundary {
    /// Rotation axis the critical `R` belongs to.
    pub axis: RotationAxis<f64>,
    pub r_c: f64,
    /// `(κ, Δφ)` with `R(κ, Δφ) = r_c`, `Δφ ∈ [0, π/2]`.
    pub curve: Vec<(f64, f64)>,
    /// Below this concentration every `Δφ` exceeds `r_c`.
    pub kappa_min: Option<f64>,
    pub diagnostic: Option<String>,
}

/// `R` of the equal-weight pair of von Mises peaks at `0` and `Δφ`:
/// `1 − (I₂(κ)/I₀(κ))² cos²Δφ`.
fn double_von_mises_r(kappa: f64, delta_phi: f64) -> f64 {
    let a = bessel::ratio(2, kappa);
    1.0 - a * a * delta_phi.cos().powi(2)
}

fn bisect_root(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Solves `R(κ, Δφ) = r_c` for `Δφ(κ)` on `kappas` and locates the smallest
/// `κ` for which a solution exists.
pub fn von_mises_boundary(axis: &RotationAxis<f64>, r_c: f64, kappas: &[f64]) -> Result<VonMisesBoundary> {
    if !(r_c > 0.0 && r_c <= 1.0) {
        return Err(Error::domain("r_c", format!("{r_c} not in (0, 1]")));
    }
    let empty = |msg: String| VonMisesBoundary {
        axis: *axis,
        r_c,
        curve: vec![],
        kappa_min: None,
        diagnostic: Some(msg),
    };
    if r_c >= 1.0 {
        return Ok(empty("R < 1 for every (κ, Δφ) with κ > 0 and Δφ < π/2: memory survives everywhere".into()));
    }
    // R(κ, 0) decreases from 1 at κ = 0 towards 0
    let g = |k: f64| double_von_mises_r(k, 0.0) - r_c;
    let mut hi = 1.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(empty(format!("no concentration reaches R = {r_c}")));
        }
    }
    let kappa_min = bisect_root(0.0, hi, g);
    let curve = kappas
        .iter()
        .filter(|&&k| k >= kappa_min)
        .map(|&k| (k, bisect_root(0.0, std::f64::consts::FRAC_PI_2, |d| double_von_mises_r(k, d) - r_c)))
        .collect();
    Ok(VonMisesBoundary { axis: *axis, r_c, curve, kappa_min: Some(kappa_min), diagnostic: None })
}

/// `x` with `digits` significant digits in scientific notation.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{:.*e}", digits.saturating_sub(1), x + 0.0)
    }
}

/// Column order of [`write_csv`].
pub const CSV_COLUMNS: [&str; 24] = [
    "index", "path", "param", "theta", "phi", "j1", "j2", "k", "d", "iterations", "residual", "converged",
    "m_s_re", "m_s_im", "m_tau_re", "m_tau_im", "m_stau_re", "m_stau_im", "indicator", "xi", "entropy",
    "free_energy", "phase", "m_s_abs",
];

/// One row per record, floats with 10 significant digits.
pub fn write_csv<W: Write>(out: W, records: &[ScanRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    let f = |x: f64| fmt_sig(x, 10);
    let c = |z: Complex64| [f(z.re), f(z.im)];
    let opt = |x: f64| if x.is_nan() { String::new() } else { f(x) };
    for r in records {
        let (theta, phi) = r.path.angles();
        let p = &r.point;
        let o = &p.observables;
        let mut row = vec![
            r.index.to_string(),
            match r.path {
                CouplingPath::Rotation { .. } => "rotation".into(),
                CouplingPath::AmpDamp => "ampdamp".into(),
            },
            f(r.param),
            opt(theta),
            opt(phi),
            f(p.couplings.j1),
            f(p.couplings.j2),
            f(p.couplings.k),
            p.d.to_string(),
            p.iterations.to_string(),
            f(p.residual),
            p.converged.to_string(),
        ];
        row.extend(c(o.m_s));
        row.extend(c(o.m_tau));
        row.extend(c(o.m_stau));
        row.extend([f(o.indicator), f(o.xi), f(o.entropy), f(o.free_energy), r.phase.as_str().into(), f(o.m_s.norm())]);
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated columns `param xi indicator m_s_abs m_tau_abs m_stau_abs entropy`
/// with a `#` header, one block per path, for gnuplot.
pub fn write_dat<W: Write>(mut out: W, records: &[ScanRecord]) -> Result<()> {
    writeln!(out, "# param xi indicator m_s_abs m_tau_abs m_stau_abs entropy phase")?;
    let mut last: Option<CouplingPath> = None;
    for r in records {
        if last.is_some_and(|p| p != r.path) {
            writeln!(out)?;
            writeln!(out)?;
        }
        last = Some(r.path);
        let o = &r.point.observables;
        let cols = [r.param, o.xi, o.indicator, o.m_s.norm(), o.m_tau.norm(), o.m_stau.norm(), o.entropy];
        let line: Vec<String> = cols.iter().map(|&x| fmt_sig(x, 10)).collect();
        writeln!(out, "{} {}", line.join(" "), r.phase.as_str())?;
    }
    Ok(())
}
