//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line; run with
//! `--nocapture` to see them.

use std::time::Instant;

use graphkdv::graph::inner_product;
use graphkdv::group::{bromwich_apply, domain_invariance_check, timestep_apply, AiryFlow, ContourSpec};
use graphkdv::instability::{
    assemble_linearized, audit_assumptions, balanced_instability, evolve_coefficients, evolve_linearized,
    growing_modes, EigenOptions,
};
use graphkdv::profiles::check_vertex_conditions;
use graphkdv::resolvent::{
    apply_resolvent, boundary_matrix, characteristic_roots, green_minus_derivative, green_plus_derivative, BetaSign,
};
use graphkdv::schrodinger::{assemble, cosine_similarity, VertexKind};
use graphkdv::*;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, ok: bool, what: &str, detail: String) {
    println!(
        "criterion {id:>2} {} {what}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

fn line_grid(l: f64, n: usize) -> GraphGrid {
    build_grid(StarGraph::two_half_lines(), l, n).unwrap()
}

fn observed_order(v: &[f64]) -> f64 {
    ((v[0] - v[1]) / (v[1] - v[2])).abs().log2()
}

#[test]
fn c01_profile_exactness() {
    let t0 = Instant::now();
    let grid = line_grid(40.0, 2000);
    let mut vertex: f64 = 0.0;
    let mut stat: f64 = 0.0;
    for z in [-1.5, -1.0, -0.5, 0.5, 1.0, 1.5] {
        let p = make_profile(z, 1.0, 1.0).unwrap();
        vertex = vertex.max(check_vertex_conditions(&p).max());
        for e in 0..2 {
            for k in 0..=grid.n {
                stat = stat.max(p.stationarity_residual(grid.x(e, k)).abs());
            }
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    let ok = vertex < 1e-12 && stat < 1e-10 && dt < 1.0;
    report(
        1,
        ok,
        "profile exactness",
        format!("vertex {vertex:.1e}, stationarity {stat:.1e}, {dt:.3} s"),
    );
    assert!(ok);
}

#[test]
fn c02_poschl_teller() {
    let t0 = Instant::now();
    let grid = line_grid(40.0, 2000);
    let p = make_profile(0.0, 1.0, 1.0).unwrap();
    let phi = p.sample(&grid);
    let op = assemble(&grid, VertexKind::Kirchhoff, Some(&phi)).unwrap();
    let spec = op.spectrum_below_edge(3).unwrap();
    let expect = [-1.25, 0.0, 0.75];
    let err = spec
        .eigenvalues
        .iter()
        .zip(expect)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let dphi = GraphFunction::from_fn(&grid, |e, x| p.derivative(grid.graph.side(e), x, 1));
    let cos = cosine_similarity(&spec.eigenvectors[1], &dphi).unwrap().abs();
    let dt = t0.elapsed().as_secs_f64();
    let ok = spec.eigenvalues.len() == 3 && err < 5e-3 && cos > 0.999 && dt < 30.0;
    report(
        2,
        ok,
        "Poschl-Teller spectrum",
        format!(
            "{:?}, max error {err:.1e}, kernel cosine {cos:.6}, {dt:.2} s",
            spec.eigenvalues
        ),
    );
    assert!(ok);
}

#[test]
fn c03_morse_table() {
    let t0 = Instant::now();
    let grid = line_grid(40.0, 2000);
    let zs = [-1.5, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 1.5];
    let mut ok = true;
    let mut omegas = Vec::new();
    for z in zs {
        let p = make_profile(z, 1.0, 1.0).unwrap();
        let op = assemble(&grid, VertexKind::Delta(z), Some(&p.sample(&grid))).unwrap();
        let s = op.spectrum_below_edge(3).unwrap();
        let min_abs = s.eigenvalues.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
        let want = if z > 0.0 { 2 } else { 1 };
        ok &= s.morse_index == want && !s.kernel_detected && min_abs > s.kernel_threshold;
        // Without a second bound state the second point of the spectrum is
        // the essential edge, which is positive.
        omegas.push(s.omega().unwrap_or(s.essential_edge));
    }
    // Second eigenvalue: positive for Z < 0, negative for Z > 0.
    let sign_change = zs.iter().zip(&omegas).all(|(z, o)| (*z < 0.0) == (*o > 0.0));
    ok &= sign_change;
    let dt = t0.elapsed().as_secs_f64();
    ok &= dt < 300.0;
    report(
        3,
        ok,
        "Morse index table",
        format!("second eigenvalues {omegas:.4?}, {dt:.1} s"),
    );
    assert!(ok);
}

#[test]
fn c04_mass_derivative() {
    let grid = line_grid(40.0, 2000);
    let mut ok = true;
    let mut detail = String::new();
    for z in [-1.0, -0.5, 0.5, 1.0] {
        let p = make_profile(z, 1.0, 1.0).unwrap();
        let phi = p.sample(&grid);
        let op = assemble(&grid, VertexKind::Delta(z), Some(&phi)).unwrap();
        let psi = op.solve_resolvent_at_zero(&phi).unwrap();
        let exact = p.sample_psi(&grid);
        let rel = psi.zip_with(&exact, |a, b| a - b).unwrap().norm() / exact.norm();
        let ip = inner_product(&psi, &phi).unwrap().re;
        let closed = -4.5 * (1.0 + 0.5 * z);
        ok &= rel < 1e-3 && (ip - closed).abs() < 1e-3;
        detail += &format!("Z={z}: rel {rel:.1e}, <psi,phi> {ip:.5} vs {closed}; ");
    }
    report(4, ok, "psi and <psi, phi>", detail);
    assert!(ok);
}

#[test]
fn c05_reduced_operator() {
    let grid = line_grid(40.0, 2000);
    let mut counts = Vec::new();
    for z in [0.5, 1.0] {
        let p = make_profile(z, 1.0, 1.0).unwrap();
        let phi = p.sample(&grid);
        let op = assemble(&grid, VertexKind::Delta(z), Some(&phi)).unwrap();
        counts.push(op.reduced(&phi).unwrap().morse_index());
    }
    let ok = counts.iter().all(|&c| c == 1);
    report(
        5,
        ok,
        "n(F) on the orthogonal complement",
        format!("Z=0.5, 1: {counts:?}"),
    );
    assert!(ok);
}

#[test]
fn c06_green_and_resolvent() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut green: f64 = 0.0;
    for _ in 0..200 {
        let lam = C::new(rng.gen_range(0.05..5.0), rng.gen_range(-10.0..10.0));
        let bs = if rng.gen_bool(0.5) {
            BetaSign::Plus
        } else {
            BetaSign::Minus
        };
        let r = characteristic_roots(lam, bs).unwrap();
        let zp = rng.gen_range(0.1..5.0);
        let zm = -zp;
        let d = |f: &dyn Fn(u32, bool) -> C, o| f(o, false) - f(o, true);
        let gp = |o, b| green_plus_derivative(zp, zp, &r, o, b);
        let gm = |o, b| green_minus_derivative(zm, zm, &r, o, b);
        let checks = [
            green_plus_derivative(0.0, zp, &r, 0, false).norm(),
            green_minus_derivative(0.0, zm, &r, 0, false).norm(),
            green_minus_derivative(0.0, zm, &r, 1, false).norm(),
            d(&gp, 0).norm(),
            d(&gp, 1).norm(),
            (d(&gp, 2) - 1.0).norm(),
            d(&gm, 0).norm(),
            d(&gm, 1).norm(),
            (d(&gm, 2) - 1.0).norm(),
        ];
        green = checks.iter().fold(green, |a, b| a.max(*b));
    }
    let mut det: f64 = 0.0;
    for _ in 0..1000 {
        let lam = C::new(rng.gen_range(0.05..10.0), rng.gen_range(-20.0..20.0));
        let bs = if rng.gen_bool(0.5) {
            BetaSign::Plus
        } else {
            BetaSign::Minus
        };
        let z = rng.gen_range(-3.0..3.0);
        let r = characteristic_roots(lam, bs).unwrap();
        let s = boundary_matrix(z, &r).unwrap();
        det = det.max((s.det_direct - s.det_closed).norm() / s.det_closed.norm().max(1.0));
    }
    let grid = line_grid(40.0, 2000);
    let w = GraphFunction::from_fn(&grid, |_, x| C::new((-(x.abs() - 5.0).powi(2) / 2.0).exp(), 0.0));
    let mut res: f64 = 0.0;
    for z in [-1.0, 0.0, 1.0] {
        for bs in [BetaSign::Minus, BetaSign::Plus] {
            res = res.max(apply_resolvent(&w, C::new(2.0, 0.0), z, bs).unwrap().residual);
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    let ok = green < 1e-10 && det < 1e-12 && res < 1e-6 && dt < 60.0;
    report(
        6,
        ok,
        "Green's functions and resolvent",
        format!("Green {green:.1e}, det {det:.1e}, resolvent {res:.1e}, {dt:.1} s"),
    );
    assert!(ok);
}

#[test]
fn c07_group() {
    let t0 = Instant::now();
    let grid = line_grid(40.0, 2000);
    let bump = |x: f64| (-(x.abs() - 10.0).powi(2) / 4.0).exp();
    let flow = AiryFlow::new(&grid, 1.0).unwrap();
    let mut u = flow.project_fn(|_, x| bump(x));
    let n0 = flow.norm(&u);
    let mut drift: f64 = 0.0;
    flow.evolve(&mut u, 1e-3, 1000, |_, v| {
        drift = drift.max((flow.norm(v) / n0 - 1.0).abs())
    })
    .unwrap();

    let w = GraphFunction::from_fn(&grid, |_, x| bump(x));
    let stepped = timestep_apply(&w, 0.5, 1e-3, 1.0).unwrap();
    let bro = bromwich_apply(&w.to_complex(), 0.5, 1.0, BetaSign::Minus, &ContourSpec::default()).unwrap();
    let diff = bro.re().zip_with(&stepped, |a, b| a - b).unwrap().norm() / stepped.norm();

    let g2 = build_grid(StarGraph::uniform(2, 2, 1.0, -1.0).unwrap(), 30.0, 600).unwrap();
    let inv = domain_invariance_check(&g2, |_, x| (-(x.abs() - 6.0).powi(2)).exp(), 0.5, 1.0, 1e-3, 50).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let ok = drift < 1e-10 && diff < 1e-3 && inv.max_spread() < 1e-6 && inv.max_condition() < 1e-6 && dt < 300.0;
    report(
        7,
        ok,
        "Airy group",
        format!(
            "norm drift {drift:.1e}, Bromwich vs stepper {diff:.1e}, continuity {:.1e}, vertex conditions {:.1e}, {dt:.1} s",
            inv.max_spread(),
            inv.max_condition()
        ),
    );
    assert!(ok);
}

#[test]
fn c08_instability() {
    let grid = line_grid(40.0, 2000);
    let opts = EigenOptions::default();
    let mut found = Vec::new();
    let mut missing = Vec::new();
    let mut ok_found = true;
    for z in [-1.0, -0.5, 0.5, 1.0] {
        let t0 = Instant::now();
        let p = make_profile(z, 1.0, 1.0).unwrap();
        let op = assemble_linearized(&grid, z, Some(&BalancedProfile::replicated(&p, 1))).unwrap();
        let r = growing_modes(&op, &opts).unwrap();
        assert!(r.conjugation_defect < 1e-6 && r.symmetry_defect < 1e-6);
        match &r.mode {
            Some(m) => {
                let tr = evolve_coefficients(&op, &m.coefficients, 15.0 / m.zeta, 0.01, None).unwrap();
                let v0 = GraphFunction::from_fn(&grid, |e, x| {
                    (-(x - 1.0).powi(2)).exp() * (1.0 + 0.3 * x + 0.1 * e as f64)
                });
                let rnd = evolve_linearized(&op, &v0, 25.0 / m.zeta, 0.02, None).unwrap();
                let fit = (tr.sigma_fit / m.zeta - 1.0)
                    .abs()
                    .max((rnd.sigma_fit / m.zeta - 1.0).abs());
                ok_found &= m.residual < 1e-6 && m.paired_residual < 1e-6 && m.mirror_defect() < 1e-6 && fit < 0.05;
                ok_found &= t0.elapsed().as_secs_f64() < 600.0;
                found.push(format!(
                    "Z={z}: zeta {:.8}, residual {:.1e}, mirror {:.1e}, fit {fit:.1e}",
                    m.zeta,
                    m.residual,
                    m.mirror_defect()
                ));
            }
            None => {
                // Certificate for the negative result: the spectrum sits on the
                // imaginary axis and generic data does not grow.
                assert!(r.max_real_part < 1e-8, "{}", r.max_real_part);
                let v0 = GraphFunction::from_fn(&grid, |e, x| {
                    (-(x - 1.0).powi(2)).exp() * (1.0 + 0.3 * x + 0.1 * e as f64)
                });
                let rnd = evolve_linearized(&op, &v0, 150.0, 0.02, None).unwrap();
                assert!(rnd.sigma_fit < 0.01, "{}", rnd.sigma_fit);
                let last = rnd.norms.last().unwrap() / rnd.norms[0];
                missing.push(format!(
                    "Z={z}: max Re lambda {:.1e}, norm ratio at t=150 {last:.2}",
                    r.max_real_part
                ));
            }
        }
    }
    let b = balanced_instability(1.0, &[1.0, 1.0], &[-1.0, -1.0], 40.0, 2000, &opts).unwrap();
    let full = b.full.require().unwrap();
    let d = b.zeta_difference.unwrap();
    ok_found &= d < 1e-6 && full.residual < 1e-6;
    found.push(format!(
        "n=2 Z=1: zeta {:.8}, |zeta_full - zeta_line| {d:.1e}",
        full.zeta
    ));
    let tail2 = balanced_instability(-1.0, &[1.0, 1.0], &[-1.0, -1.0], 40.0, 2000, &opts).unwrap();
    if tail2.full.mode.is_none() {
        assert!(tail2.full.max_real_part < 1e-8);
        missing.push(format!("n=2 Z=-1: max Re lambda {:.1e}", tail2.full.max_real_part));
    }
    assert!(ok_found, "{found:?}");
    let ok = ok_found && missing.is_empty();
    let mut detail = found.join("; ");
    if !missing.is_empty() {
        detail += &format!("; no growing mode for the tail: {}", missing.join("; "));
    }
    report(8, ok, "growing modes", detail);
}

#[test]
fn c09_general_coefficients() {
    let (alphas, betas) = ([0.5, 1.5], [-0.875, -1.125]);
    let graph = StarGraph::balanced_pairs(&alphas, &betas).unwrap();
    let bp = make_balanced_profile(&graph, 1.0, &alphas, &betas).unwrap();
    let grid = build_grid(graph.clone(), 40.0, 2000).unwrap();
    let phi = bp.sample(&grid);
    let schr = assemble(&grid, VertexKind::FullDeltaSum(1.0), Some(&phi)).unwrap();
    let spec = schr.spectrum_below_edge(4).unwrap();
    let op = assemble_linearized(&grid, 1.0, Some(&bp)).unwrap();
    let audit = audit_assumptions(&op, 20, 9).unwrap();
    let r = balanced_instability(1.0, &alphas, &betas, 40.0, 2000, &EigenOptions::default()).unwrap();
    let zeta = r.full.mode.as_ref().map(|m| (m.zeta, m.residual));
    let ok =
        !spec.kernel_detected && audit.s4_orthogonality < 1e-8 && zeta.is_some_and(|(z, res)| z > 0.0 && res < 1e-6);
    // Constraint validator must also reject a mismatched beta.
    assert!(make_balanced_profile(&graph, 1.0, &alphas, &[-1.0, -1.0]).is_err());
    report(
        9,
        ok,
        "general coefficients",
        format!(
            "E eigenvalues {:.4?} (no kernel), S4 {:.1e}, zeta {:?}",
            spec.eigenvalues, audit.s4_orthogonality, zeta
        ),
    );
    assert!(ok);
}

#[test]
fn c10_grid_convergence() {
    let z = 1.0;
    let p = make_profile(z, 1.0, 1.0).unwrap();
    let mut eig = [vec![], vec![]];
    for n in [500, 1000, 2000] {
        let grid = line_grid(40.0, n);
        let op = assemble(&grid, VertexKind::Delta(z), Some(&p.sample(&grid))).unwrap();
        let s = op.spectrum_below_edge(2).unwrap();
        eig[0].push(s.eigenvalues[0]);
        eig[1].push(s.eigenvalues[1]);
    }
    // The growing mode decays slowly on one side; the far end sits where it
    // is negligible so only the spatial error is measured.
    let mut zs = vec![];
    for n in [250, 500, 1000] {
        let grid = line_grid(100.0, n);
        let op = assemble_linearized(&grid, z, Some(&BalancedProfile::replicated(&p, 1))).unwrap();
        zs.push(
            growing_modes(&op, &EigenOptions::default())
                .unwrap()
                .require()
                .unwrap()
                .zeta,
        );
    }
    let orders = [observed_order(&eig[0]), observed_order(&eig[1]), observed_order(&zs)];
    let ok = orders.iter().all(|o| *o >= 1.8);
    report(
        10,
        ok,
        "grid convergence",
        format!("observed orders (lambda_1, lambda_2, zeta) {orders:.2?}"),
    );
    assert!(ok);
}
