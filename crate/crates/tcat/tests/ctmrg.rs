//! CTMRG against exact contractions and small-torus results.

use num_complex::Complex64;
use tcat::coupling_map::{amp_damp_couplings, rotation_couplings};
use tcat::ctmrg_engine::*;
use tcat::lattice_exact::{anyon_parameters, cylinder_free_energy, partition_function, DefectPattern, TorusSpec};
use tcat::phase_scan::{classify, Phase};
use tcat::{Axis, Couplings};

/// Sums the vertex network on an `lx × ly` torus over every bond configuration.
fn contract_torus(t: &VertexTensor<Complex64>, lx: usize, ly: usize) -> Complex64 {
    let data: Vec<Complex64> = t.data.iter().copied().collect();
    let nb = 2 * lx * ly;
    let h = |x: usize, y: usize| y * lx + x;
    let v = |x: usize, y: usize| lx * ly + y * lx + x;
    let mut legs = vec![[0usize; 4]; lx * ly];
    for y in 0..ly {
        for x in 0..lx {
            legs[y * lx + x] = [h((x + lx - 1) % lx, y), v(x, (y + ly - 1) % ly), h(x, y), v(x, y)];
        }
    }
    let mut idx = vec![0usize; nb];
    let mut z = Complex64::new(0.0, 0.0);
    loop {
        let mut term = Complex64::new(1.0, 0.0);
        for l in &legs {
            term *= data[((idx[l[0]] * 4 + idx[l[1]]) * 4 + idx[l[2]]) * 4 + idx[l[3]]];
        }
        z += term;
        let mut k = 0;
        loop {
            if k == nb {
                return z;
            }
            idx[k] += 1;
            if idx[k] < 4 {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn controls(d: usize) -> CtmrgControls {
    CtmrgControls { d, tol: 1e-10, max_iters: 5000 }
}

#[test]
fn vertex_network_reproduces_small_tori() {
    let points = [
        rotation_couplings(0.3, &Axis::z()).unwrap(),
        rotation_couplings(0.5, &Axis::y()).unwrap(),
        rotation_couplings(1.0, &Axis::new(std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4).unwrap()).unwrap(),
        amp_damp_couplings(0.3).unwrap(),
    ];
    for at in points {
        let t = build_vertex_tensor(&at).unwrap();
        for (lx, ly) in [(2, 2), (2, 3)] {
            let exact = partition_function(TorusSpec::new(lx, ly).unwrap(), &at, &DefectPattern::none()).unwrap();
            let tn = contract_torus(&t, lx, ly);
            assert!((tn - exact).norm() <= 1e-10 * exact.norm(), "{at:?} {lx}×{ly}: {tn} vs {exact}");
        }
    }
}

#[test]
fn real_and_complex_tensors_agree() {
    let at = rotation_couplings(0.4, &Axis::new(1.1, 0.3).unwrap()).unwrap();
    let r = VertexTensor::<f64>::new(&at).unwrap();
    let c = build_vertex_tensor(&at).unwrap();
    for (a, b) in r.data.iter().zip(c.data.iter()) {
        assert!((Complex64::new(*a, 0.0) - b).norm() < 1e-14);
    }
    let ew = c.edge_weight();
    for (s, row) in ew.outer_iter().enumerate() {
        for (sp, w) in row.iter().enumerate() {
            let (u, v) = (sign(s >> 1, sp >> 1), sign(s & 1, sp & 1));
            let want = 1.0 + at.j1 * u + at.j2 * v + at.k * u * v;
            assert!((w - want).norm() < 1e-14);
        }
    }
}

fn sign(a: usize, b: usize) -> f64 {
    if a == b { 1.0 } else { -1.0 }
}

#[test]
fn free_energy_matches_the_cylinder() {
    let at = rotation_couplings(0.1, &Axis::z()).unwrap();
    let (rec, _) = run_point(&at, controls(16), None).unwrap();
    let exact = cylinder_free_energy(6, &at).unwrap();
    assert!(rec.converged);
    assert!((rec.observables.free_energy - exact).abs() <= 1e-6, "{} vs {exact}", rec.observables.free_energy);
}

#[test]
fn observables_survive_the_s_stau_exchange() {
    for at in [rotation_couplings(0.3, &Axis::new(0.9, 0.4).unwrap()).unwrap(), amp_damp_couplings(0.2).unwrap()] {
        let (a, _) = run_point(&at, controls(16), None).unwrap();
        let (b, _) = run_point(&at.swap_s_stau(), controls(16), None).unwrap();
        let (a, b) = (a.observables, b.observables);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-8 * (1.0 + x.abs());
        assert!(close(a.m_s.norm(), b.m_stau.norm()) && close(a.m_stau.norm(), b.m_s.norm()));
        assert!(close(a.m_tau.norm(), b.m_tau.norm()));
        assert!(close(a.free_energy, b.free_energy));
        assert!(close(a.entropy, b.entropy) && close(a.xi, b.xi), "{a:?} {b:?}");
        // the indicator weighs sτ apart from s, so it follows the relabeled magnitudes
        let swapped = a.m_s.norm() + 0.5 * (a.m_stau.norm() + a.m_tau.norm());
        assert!(close(b.indicator, swapped));
    }
}

#[test]
fn correlation_length_grows_with_d_at_criticality() {
    let at = rotation_couplings(2.0 - 2f64.sqrt(), &Axis::z()).unwrap();
    let recs = bond_dimension_ladder(&at, &[6, 10, 14], 1e-8, 20_000).unwrap();
    for w in recs.windows(2) {
        let (a, b) = (w[0].observables.xi, w[1].observables.xi);
        assert!(b >= 0.98 * a, "{a} → {b}");
    }
}

#[test]
fn plateau_examples() {
    let (po, _) = run_point(&rotation_couplings(0.1, &Axis::z()).unwrap(), controls(12), None).unwrap();
    assert!((po.observables.indicator - 1.0).abs() < 0.02 && po.observables.m_s.norm() < 1e-6);
    let (fm, _) = run_point(&rotation_couplings(0.9, &Axis::z()).unwrap(), controls(12), None).unwrap();
    assert!((fm.observables.indicator - 2.0).abs() < 0.1, "{:?}", fm.observables);
    let (free, _) = run_point(&Couplings::new(0.0, 0.0, 0.0), controls(8), None).unwrap();
    let o = free.observables;
    assert!(o.indicator.abs() < 1e-8 && o.xi.abs() < 1e-6 && o.entropy.abs() < 1e-8, "{o:?}");
}

/// Phase read off the order correlators of a 4×4 torus.
fn torus_phase(at: &Couplings) -> Phase {
    let p = anyon_parameters(TorusSpec::new(4, 4).unwrap(), at).unwrap();
    match (p[0].norm() > 0.5, p[1].norm() > 0.5) {
        (false, true) => Phase::Po,
        (true, true) => Phase::Fm,
        (false, false) => Phase::Pm,
        (true, false) => Phase::Unclassified,
    }
}

#[test]
fn indicator_agrees_with_small_tori() {
    let points = [
        rotation_couplings(0.1, &Axis::z()).unwrap(),
        rotation_couplings(0.3, &Axis::z()).unwrap(),
        rotation_couplings(0.9, &Axis::z()).unwrap(),
        rotation_couplings(1.0, &Axis::z()).unwrap(),
        rotation_couplings(0.2, &Axis::x()).unwrap(),
        rotation_couplings(0.9, &Axis::x()).unwrap(),
        rotation_couplings(0.3, &Axis::new(std::f64::consts::FRAC_PI_2, 0.6).unwrap()).unwrap(),
        amp_damp_couplings(0.05).unwrap(),
        amp_damp_couplings(0.2).unwrap(),
        amp_damp_couplings(0.95).unwrap(),
    ];
    for at in points {
        let (rec, _) = run_point(&at, controls(12), None).unwrap();
        assert_eq!(classify(&rec.observables), torus_phase(&at), "{at:?}: {:?}", rec.observables);
    }
}
