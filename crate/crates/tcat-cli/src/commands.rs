use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use tcat::coupling_map::{boltzmann_form, self_duality_residual};
use tcat::ctmrg_engine::{bond_dimension_ladder, central_charge_fit, run_point, walsh_eigenvalues};
use tcat::lattice_exact::{anyon_parameters, coherent_info_record};
use tcat::noise_models::{stochastic_reduction_check, AngleDistribution};
use tcat::phase_scan::{
    self, beta_exponent_fit, beta_exponent_scan, bisect_boundary, classify, ray_scan, scan_points,
    von_mises_boundary, write_csv, write_dat, CouplingPath, ScanRecord,
};
use tcat::staggered_vertex::{anyon_constants, staggered_rows, DEFAULT_EPSILON};
use tcat::{Error, Result};

use crate::config::*;
use crate::output::{to_json, Sink};

/// What a command leaves behind: its summary line.
pub type Outcome = Result<String>;

fn provenance(command: &str, config: &ConfigFile) -> Value {
    json!({ "command": command, "config": config })
}

fn emit_json(sink: &Sink, command: &str, config: &ConfigFile, mut body: Value) -> Result<std::path::PathBuf> {
    if let Value::Object(map) = &mut body {
        map.insert("provenance".into(), provenance(command, config));
    }
    sink.write("json", &to_json(&body)?)
}

fn run_section(run: &RunArgs) -> Option<RunArgs> {
    Some(RunArgs { deterministic: run.deterministic, ..Default::default() })
}

pub fn map_couplings(noise: NoiseArgs, run: &RunArgs, sink: &Sink) -> Outcome {
    let at = noise.couplings()?;
    let boltzmann = boltzmann_form(&at);
    // defined only for real exponential couplings
    let residual = boltzmann.as_ref().ok().and_then(|b| self_duality_residual(b).ok());
    let body = json!({
        "couplings": at,
        "weights": at.weights(),
        "walsh_eigenvalues": walsh_eigenvalues(&at),
        "boltzmann": boltzmann.as_ref().ok(),
        "boltzmann_error": boltzmann.as_ref().err().map(|e| e.to_string()),
        "self_duality_residual": residual,
    });
    let cfg = ConfigFile { run: run_section(run), noise: Some(noise), ..Default::default() };
    let path = emit_json(sink, "map-couplings", &cfg, body)?;
    Ok(format!("J1={:.10} J2={:.10} K={:.10} -> {}", at.j1, at.j2, at.k, path.display()))
}

pub fn noise_check(dist: DistArgs, axis: AxisArgs, run: &RunArgs, sink: &Sink, base: Option<&Path>) -> Outcome {
    let d: AngleDistribution<f64> = dist.resolve()?.build(base)?;
    let ax = axis.resolve()?;
    let a2 = d.second_fourier_moment();
    let check = stochastic_reduction_check(&d, &ax)?;
    let body = json!({
        "R": d.r_parameter(),
        "a2": a2,
        "p": check.p,
        "p_from_moment": (1.0 - a2.re) / 2.0,
        "max_deviation": check.max_deviation,
    });
    let cfg = ConfigFile { run: run_section(run), dist: Some(dist), noise: Some(NoiseArgs { axis, ..Default::default() }), ..Default::default() };
    let path = emit_json(sink, "noise-check", &cfg, body)?;
    Ok(format!("R={:.10} p={:.10} max_deviation={:.3e} -> {}", d.r_parameter(), check.p, check.max_deviation, path.display()))
}

pub fn ctmrg_point(noise: NoiseArgs, ctmrg: CtmrgArgs, run: &RunArgs, sink: &Sink) -> Outcome {
    let at = noise.couplings()?;
    let controls = ctmrg.controls(phase_scan::SCAN_D)?;
    let (rec, _) = run_point(&at, controls, None)?;
    let phase = classify(&rec.observables);
    let body = json!({ "record": rec, "phase": phase });
    let cfg = ConfigFile { run: run_section(run), noise: Some(noise), ctmrg: Some(ctmrg), ..Default::default() };
    let path = emit_json(sink, "ctmrg-point", &cfg, body)?;
    Ok(format!(
        "D={} iterations={} converged={} xi={:.6} indicator={:.6} phase={} -> {}",
        rec.d,
        rec.iterations,
        rec.converged,
        rec.observables.xi,
        rec.observables.indicator,
        phase.as_str(),
        path.display()
    ))
}

fn phase_counts(records: &[ScanRecord]) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for r in records {
        *m.entry(r.phase.as_str()).or_insert(0) += 1;
    }
    m
}

fn single(grid: &Option<GridSpec>, name: &str) -> Result<Option<f64>> {
    match grid.as_ref().map(GridSpec::points) {
        None => Ok(None),
        Some(v) if v.len() == 1 => Ok(Some(v[0])),
        Some(_) => Err(Error::Validation(format!("--{name} must be a single value for this preset"))),
    }
}

pub fn sweep(args: SweepArgs, ctmrg: CtmrgArgs, run: &RunArgs, sink: &Sink) -> Outcome {
    let controls = ctmrg.controls(phase_scan::SCAN_D)?;
    let preset = match (args.preset, &args.gamma) {
        (Some(p), _) => p,
        (None, Some(_)) => Preset::AmpdampLine,
        (None, None) => return Err(Error::Validation("--preset is required".into())),
    };
    let grid = |g: &Option<GridSpec>, default: &str| -> Result<Vec<f64>> {
        let pts = g.clone().unwrap_or_else(|| default.parse().expect("valid default grid")).points();
        if pts.is_empty() || pts.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("empty or non-finite grid".into()));
        }
        Ok(pts)
    };
    let mut estimate = None;
    let mut interior = None;
    let records = match preset {
        Preset::AmpdampLine => {
            let gammas = grid(&args.gamma, "0:1:101")?;
            for &g in &gammas {
                tcat::coupling_map::amp_damp_couplings(g)?;
            }
            let points: Vec<_> = gammas.iter().map(|&g| (CouplingPath::AmpDamp, g)).collect();
            scan_points(&points, controls)?
        }
        Preset::Ray => {
            let axis = AxisArgs { axis: args.axis, theta: single(&args.theta, "theta")?, phi: single(&args.phi, "phi")? }
                .resolve()?;
            let rs = grid(&args.r, "0:0.98:25")?;
            let (records, est) = ray_scan(&axis, &rs, controls)?;
            interior = Some(phase_scan::has_interior_maximum(&records));
            estimate = Some(est);
            records
        }
        Preset::Box => {
            if args.axis.is_some() {
                return Err(Error::Validation("the box preset takes --theta/--phi grids, not --axis".into()));
            }
            let rs = grid(&args.r, "0.1:0.9:9")?;
            let thetas = grid(&args.theta, "0:1.5707963267948966:5")?;
            let phis = grid(&args.phi, "0:1.5707963267948966:5")?;
            let mut points = Vec::with_capacity(rs.len() * thetas.len() * phis.len());
            for &t in &thetas {
                for &p in &phis {
                    let path = CouplingPath::rotation(&tcat::noise_models::RotationAxis::new(t, p)?);
                    for &r in &rs {
                        path.couplings(r)?;
                        points.push((path, r));
                    }
                }
            }
            scan_points(&points, controls)?
        }
    };
    let csv = sink.write_with("csv", |b| write_csv(b, &records))?;
    sink.write_with("dat", |b| write_dat(b, &records))?;
    let unconverged = records.iter().filter(|r| !r.point.converged).count();
    let body = json!({
        "preset": preset,
        "points": records.len(),
        "unconverged": unconverged,
        "phases": phase_counts(&records),
        "estimate": estimate,
        "interior_maximum": interior,
        "csv": csv.file_name().map(|s| s.to_string_lossy().into_owned()),
    });
    let cfg = ConfigFile {
        run: run_section(run),
        sweep: Some(SweepArgs { preset: Some(preset), ..args }),
        ctmrg: Some(ctmrg),
        ..Default::default()
    };
    emit_json(sink, "sweep", &cfg, body)?;
    Ok(format!("sweep {:?}: {} points, {} unconverged -> {}", preset, records.len(), unconverged, csv.display()))
}

pub fn bisect(args: BisectArgs, ctmrg: CtmrgArgs, run: &RunArgs, sink: &Sink) -> Outcome {
    let path = args.path()?;
    let controls = ctmrg.controls(phase_scan::BISECT_D)?;
    let lo = args.lo.ok_or_else(|| Error::Validation("--lo is required".into()))?;
    let hi = args.hi.ok_or_else(|| Error::Validation("--hi is required".into()))?;
    let width = args.bracket.unwrap_or(2e-3);
    path.couplings(lo)?;
    path.couplings(hi)?;
    let (est, evals) = bisect_boundary(path, lo, hi, controls, width)?;
    let trace: Vec<Value> = evals
        .iter()
        .map(|r| json!({ "param": r.param, "phase": r.phase, "indicator": r.point.observables.indicator, "converged": r.point.converged }))
        .collect();
    let body = json!({ "estimate": est, "evaluations": trace });
    let cfg = ConfigFile { run: run_section(run), bisect: Some(args), ctmrg: Some(ctmrg), ..Default::default() };
    let out = emit_json(sink, "bisect", &cfg, body)?;
    Ok(format!("{} boundary at {:.6} (bracket {:.2e}) -> {}", est.line, est.value, est.bracket_width, out.display()))
}

pub fn coherent_info(noise: NoiseArgs, torus: TorusArgs, run: &RunArgs, sink: &Sink) -> Outcome {
    let at = noise.couplings()?;
    let t = torus.resolve()?;
    let rec = coherent_info_record(t, &at)?;
    let body = serde_json::to_value(&rec).map_err(|e| Error::Numerical(e.to_string()))?;
    let cfg = ConfigFile { run: run_section(run), noise: Some(noise), torus: Some(torus), ..Default::default() };
    let path = emit_json(sink, "coherent-info", &cfg, body)?;
    Ok(format!("ic2={:.12} on {}x{} -> {}", rec.ic2, t.lx, t.ly, path.display()))
}

pub fn anyon_params(noise: NoiseArgs, torus: TorusArgs, run: &RunArgs, sink: &Sink) -> Outcome {
    let at = noise.couplings()?;
    let t = torus.resolve()?;
    let finite: [Complex64; 4] = anyon_parameters(t, &at)?;
    let thermodynamic = match noise.pure_y()? {
        Some(r) if r < 1.0 => Some(anyon_constants(r)?),
        _ => None,
    };
    let body = json!({
        "labels": ["ee", "eI_eI", "mm", "mI_mI"],
        "finite": finite,
        "thermodynamic": thermodynamic,
    });
    let cfg = ConfigFile { run: run_section(run), noise: Some(noise), torus: Some(torus), ..Default::default() };
    let path = emit_json(sink, "anyon-params", &cfg, body)?;
    let parts: Vec<String> = finite.iter().map(|z| format!("{:.6}", z.re)).collect();
    Ok(format!("anyon parameters [{}] on {}x{} -> {}", parts.join(", "), t.lx, t.ly, path.display()))
}

pub fn staggered_vertex(args: StaggeredArgs, run: &RunArgs, sink: &Sink) -> Outcome {
    let rs = args.r.clone().unwrap_or_else(|| "0.1:0.9:9".parse().expect("valid default")).points();
    let (lx, ly) = (args.lx.unwrap_or(32), args.ly.unwrap_or(32));
    let rows = staggered_rows(&rs, lx, ly, args.epsilon.unwrap_or(DEFAULT_EPSILON))?;
    let csv = sink.write_with("csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        let f = |x: f64| phase_scan::fmt_sig(x, 10);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["R", "xi_exact", "xi_finite_lx", "order"]).map_err(io)?;
        for r in &rows {
            w.write_record([f(r.r_big), f(r.xi_exact), f(r.xi_finite), f(r.order)]).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    })?;
    let body = json!({ "lx": lx, "ly": ly, "rows": rows });
    let cfg = ConfigFile { run: run_section(run), staggered: Some(args), ..Default::default() };
    emit_json(sink, "staggered-vertex", &cfg, body)?;
    Ok(format!("{} rows at lx={lx} ly={ly} -> {}", rows.len(), csv.display()))
}

/// Reads named float columns from a headed CSV.
fn read_columns(path: &Path, names: &[&[&str]]) -> Result<Vec<Vec<f64>>> {
    let bad = |e: String| Error::Validation(format!("{}: {e}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|alts| {
            headers
                .iter()
                .position(|h| alts.contains(&h.trim()))
                .ok_or_else(|| bad(format!("missing column {}", alts[0])))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        for (c, &i) in cols.iter_mut().zip(&idx) {
            let v = rec.get(i).unwrap_or("").trim();
            c.push(v.parse::<f64>().map_err(|_| bad(format!("'{v}' is not a number")))?);
        }
    }
    Ok(cols)
}

#[derive(Serialize)]
struct LadderPoint {
    d: usize,
    xi: f64,
    entropy: f64,
    iterations: usize,
    converged: bool,
}

pub fn fit_central_charge(fit: FitArgs, noise: NoiseArgs, ctmrg: CtmrgArgs, run: &RunArgs, sink: &Sink) -> Outcome {
    let (points, ladder) = match &fit.input {
        Some(p) => {
            let cols = read_columns(p, &[&["xi"], &["entropy", "S"]])?;
            (cols[0].iter().copied().zip(cols[1].iter().copied()).collect::<Vec<_>>(), vec![])
        }
        None => {
            let at = noise.couplings()?;
            let ds = fit.ladder.clone().map(|l| l.0).unwrap_or_else(|| vec![10, 16, 24, 32]);
            let base = ctmrg.controls(ds.iter().copied().max().unwrap_or(4))?;
            for &d in &ds {
                tcat::ctmrg_engine::CtmrgControls { d, ..base }.validate()?;
            }
            let recs = bond_dimension_ladder(&at, &ds, base.tol, base.max_iters)?;
            let ladder: Vec<LadderPoint> = recs
                .iter()
                .map(|r| LadderPoint {
                    d: r.d,
                    xi: r.observables.xi,
                    entropy: r.observables.entropy,
                    iterations: r.iterations,
                    converged: r.converged,
                })
                .collect();
            (ladder.iter().map(|p| (p.xi, p.entropy)).collect(), ladder)
        }
    };
    let result = central_charge_fit(&points)?;
    let body = json!({ "fit": result, "points": points, "ladder": ladder });
    let cfg = ConfigFile {
        run: run_section(run),
        fit: Some(fit.clone()),
        noise: fit.input.is_none().then_some(noise),
        ctmrg: fit.input.is_none().then_some(ctmrg),
        ..Default::default()
    };
    let path = emit_json(sink, "fit-central-charge", &cfg, body)?;
    Ok(format!("c={:.6} (R^2={:.6}, {} points) -> {}", result.c, result.goodness, points.len(), path.display()))
}

pub fn fit_beta(fit: FitArgs, ctmrg: CtmrgArgs, run: &RunArgs, sink: &Sink) -> Outcome {
    let gc = fit.gamma_c.ok_or_else(|| Error::Validation("--gamma-c is required".into()))?;
    let (beta, samples) = match &fit.input {
        Some(p) => {
            let cols = read_columns(p, &[&["gamma", "param"], &["m_s_abs", "m_s"]])?;
            let samples: Vec<(f64, f64)> = cols[0].iter().copied().zip(cols[1].iter().map(|m| m.abs())).collect();
            (beta_exponent_fit(&samples, gc)?, samples)
        }
        None => {
            let controls = ctmrg.controls(phase_scan::SCAN_D)?;
            let gammas = match &fit.gammas {
                Some(g) => g.points(),
                None => [1.5e-3, 3e-3, 6e-3, 1.2e-2, 2.4e-2, 4.5e-2].iter().map(|d| gc + d).collect(),
            };
            for &g in &gammas {
                tcat::coupling_map::amp_damp_couplings(g)?;
            }
            let (beta, recs) = beta_exponent_scan(&gammas, gc, controls)?;
            (beta, recs.iter().map(|r| (r.param, r.point.observables.m_s.norm())).collect())
        }
    };
    let body = json!({ "beta": beta, "gamma_c": gc, "samples": samples });
    let cfg = ConfigFile {
        run: run_section(run),
        ctmrg: fit.input.is_none().then_some(ctmrg),
        fit: Some(fit),
        ..Default::default()
    };
    let path = emit_json(sink, "fit-beta", &cfg, body)?;
    Ok(format!("beta={beta:.6} from {} samples -> {}", samples.len(), path.display()))
}

pub fn von_mises(args: VonMisesArgs, run: &RunArgs, sink: &Sink) -> Outcome {
    let axis = match (args.axis.axis, args.axis.theta, args.axis.phi) {
        (None, None, None) => tcat::noise_models::RotationAxis::x(),
        _ => args.axis.resolve()?,
    };
    let r_c = args.r_c.unwrap_or(2.0 - 2f64.sqrt());
    let kappas = args.kappa.clone().unwrap_or_else(|| "0.5:50:100".parse().expect("valid default")).points();
    let b = von_mises_boundary(&axis, r_c, &kappas)?;
    let body = serde_json::to_value(&b).map_err(|e| Error::Numerical(e.to_string()))?;
    let cfg = ConfigFile { run: run_section(run), von_mises: Some(args), ..Default::default() };
    let path = emit_json(sink, "von-mises-boundary", &cfg, body)?;
    Ok(match b.kappa_min {
        Some(k) => format!("kappa_min={k:.6}, {} curve points -> {}", b.curve.len(), path.display()),
        None => format!("empty curve: {} -> {}", b.diagnostic.unwrap_or_default(), path.display()),
    })
}
