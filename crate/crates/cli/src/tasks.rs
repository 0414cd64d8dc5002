use std::path::{Path, PathBuf};

use clap::ValueEnum;
use graphkdv::graph::inner_product;
use graphkdv::group::{bromwich_apply, timestep_apply, ContourSpec};
use graphkdv::instability::{
    assemble_linearized, audit_assumptions, evolve_linearized, growing_modes, schrodinger_vertex, EigenOptions,
    LinearizedOperator, ModeReport,
};
use graphkdv::resolvent::{apply_resolvent, BetaSign};
use graphkdv::schrodinger::assemble;
use graphkdv::{build_grid, stationary_profile, BalancedProfile, Error, GraphFunction, GraphGrid, StarGraph};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{write_edges, write_series, write_table, Header};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Profile,
    Spectrum,
    Modes,
    Evolve,
    Resolvent,
    Audit,
    All,
    Sweep,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskOutcome {
    pub task: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub data: Value,
    pub notes: Vec<String>,
    pub files: Vec<String>,
}

impl TaskOutcome {
    fn new(task: &str) -> Self {
        Self {
            task: task.into(),
            passed: true,
            checks: Vec::new(),
            data: Value::Null,
            notes: Vec::new(),
            files: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, value: f64, limit: &str, passed: bool) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.into(),
            value,
            limit: limit.into(),
            passed,
        });
    }

    fn below(&mut self, name: &str, value: f64, limit: f64) {
        self.check(name, value, &format!("< {limit:e}"), value < limit);
    }

    fn fail(&mut self, note: String) {
        self.passed = false;
        self.notes.push(note);
    }

    fn files(&mut self, paths: impl IntoIterator<Item = PathBuf>) {
        self.files.extend(paths.into_iter().map(|p| p.display().to_string()));
    }
}

pub type TaskResult = std::result::Result<TaskOutcome, Error>;

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub z: f64,
    pub out: &'a Path,
}

impl Ctx<'_> {
    fn header(&self) -> Header {
        Header {
            z: self.z,
            l: self.cfg.discretization.l,
            n: self.cfg.discretization.n,
            extra: Vec::new(),
        }
    }

    fn graph(&self) -> Result<StarGraph, Error> {
        let g = &self.cfg.graph;
        let alpha = self.cfg.alpha().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let beta = self.cfg.beta().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        StarGraph::new(g.m, g.n, alpha, beta)
    }

    pub fn grid(&self) -> Result<GraphGrid, Error> {
        build_grid(self.graph()?, self.cfg.discretization.l, self.cfg.discretization.n)
    }

    pub fn profile(&self) -> Result<(GraphGrid, BalancedProfile), Error> {
        let grid = self.grid()?;
        let bp = stationary_profile(&grid.graph, self.z)?;
        Ok((grid, bp))
    }

    fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            coarse_n: self.cfg.eigen.coarse_n,
            window: self.cfg.eigen.window,
            ..Default::default()
        }
    }

    fn linearized(&self) -> Result<LinearizedOperator, Error> {
        let (grid, bp) = self.profile()?;
        assemble_linearized(&grid, self.z, Some(&bp))
    }
}

fn write_err(e: anyhow::Error) -> Error {
    Error::Numerical(format!("output: {e:#}"))
}

pub fn profile(ctx: &Ctx) -> TaskResult {
    let mut out = TaskOutcome::new("profile");
    let (grid, bp) = ctx.profile()?;
    let (pair, spread, flux) = bp.residuals();
    let mut stat: f64 = 0.0;
    for e in 0..grid.edge_count() {
        let p = bp.edge_profile(e);
        for k in 0..=grid.n {
            stat = stat.max(p.stationarity_residual(grid.x(e, k)).abs());
        }
    }
    out.below("vertex_residual", pair, 1e-10);
    out.below("vertex_value_spread", spread, 1e-10);
    out.below("flux_residual", flux, 1e-10);
    out.below("stationarity_residual", stat, 1e-10);
    let pairs: Vec<Value> = bp
        .pairs
        .iter()
        .map(|p| {
            json!({
                "alpha": p.alpha, "beta": p.beta, "omega": p.omega, "kind": p.kind,
                "width": p.k, "shift": p.shift, "mass": p.mass(), "mass_derivative": p.mass_derivative(),
            })
        })
        .collect();
    out.data = json!({ "pairs": pairs });
    let h = ctx.header();
    out.files(write_edges(ctx.out, "profile", &bp.sample(&grid), &h).map_err(write_err)?);
    out.files(write_edges(ctx.out, "psi", &bp.sample_psi(&grid), &h).map_err(write_err)?);
    Ok(out)
}

pub fn spectrum(ctx: &Ctx) -> TaskResult {
    let mut out = TaskOutcome::new("spectrum");
    let (grid, bp) = ctx.profile()?;
    let phi = bp.sample(&grid);
    let op = assemble(&grid, schrodinger_vertex(&bp), Some(&phi))?;
    let spec = op.spectrum_below_edge(4)?;
    let z = ctx.z;
    if z != 0.0 {
        out.check(
            "kernel_free",
            spec.kernel_detected as u8 as f64,
            "= 0",
            !spec.kernel_detected,
        );
    }
    if grid.graph.n == 1 && z != 0.0 {
        let want = if z > 0.0 { 2 } else { 1 };
        out.check(
            "morse_index",
            spec.morse_index as f64,
            &format!("= {want}"),
            spec.morse_index == want,
        );
    }
    let mut psi_phi = None;
    if !spec.kernel_detected {
        let psi = op.solve_resolvent_at_zero(&phi)?;
        let ip = inner_product(&psi, &phi)?.re;
        out.check("psi_phi", ip, "< 0", ip < 0.0);
        psi_phi = Some(ip);
        out.files(write_edges(ctx.out, "psi_numeric", &psi, &ctx.header()).map_err(write_err)?);
    }
    let reduced = if spec.morse_index == 2 && !spec.kernel_detected {
        let nf = op.reduced(&phi)?.morse_index();
        out.check("reduced_morse_index", nf as f64, "= 1", nf == 1);
        Some(nf)
    } else {
        None
    };
    for (i, v) in spec.eigenvectors.iter().enumerate() {
        out.files(write_edges(ctx.out, &format!("eigenvector{i}"), v, &ctx.header()).map_err(write_err)?);
    }
    out.data = json!({
        "eigenvalues": spec.eigenvalues,
        "morse_index": spec.morse_index,
        "omega": spec.omega(),
        "kernel_detected": spec.kernel_detected,
        "kernel_threshold": spec.kernel_threshold,
        "essential_edge": spec.essential_edge,
        "residuals": spec.residuals,
        "psi_phi": psi_phi,
        "reduced_morse_index": reduced,
    });
    Ok(out)
}

fn mode_data(r: &ModeReport) -> Value {
    let window: Vec<[f64; 2]> = r
        .window
        .iter()
        .filter(|l| l.re.abs() > 1e-9)
        .map(|l| [l.re, l.im])
        .collect();
    json!({
        "zeta": r.mode.as_ref().map(|m| m.zeta),
        "paired_negative": r.mode.as_ref().map(|m| m.paired_negative),
        "residual": r.mode.as_ref().map(|m| m.residual),
        "paired_residual": r.mode.as_ref().map(|m| m.paired_residual),
        "coarse_zeta": r.mode.as_ref().map(|m| m.coarse_zeta),
        "far_mass": r.mode.as_ref().map(|m| m.far_mass),
        "max_real_part": r.max_real_part,
        "symmetry_defect": r.symmetry_defect,
        "conjugation_defect": r.conjugation_defect,
        "off_axis_eigenvalues": window,
        "note": r.note,
    })
}

pub fn modes(ctx: &Ctx) -> TaskResult {
    let mut out = TaskOutcome::new("modes");
    let op = ctx.linearized()?;
    let r = growing_modes(&op, &ctx.eigen_options())?;
    let tol = ctx.cfg.tolerances.residual;
    out.below("symmetry_defect", r.symmetry_defect, tol);
    out.below("conjugation_defect", r.conjugation_defect, tol);
    match &r.mode {
        Some(m) => {
            out.check("zeta", m.zeta, "> 0", m.zeta > 0.0);
            out.below("residual", m.residual, tol);
            out.below("paired_residual", m.paired_residual, tol);
            out.below("mirror_defect", m.mirror_defect(), tol);
            let mut h = ctx.header();
            h.extra.push(("zeta".into(), format!("{}", m.zeta)));
            out.files(write_edges(ctx.out, "growing_mode", &m.eigenfunction, &h).map_err(write_err)?);
        }
        None => out.fail(format!("no growing mode: {}", r.note)),
    }
    out.data = mode_data(&r);
    Ok(out)
}

pub fn evolve(ctx: &Ctx) -> TaskResult {
    let mut out = TaskOutcome::new("evolve");
    let op = ctx.linearized()?;
    let r = growing_modes(&op, &ctx.eigen_options())?;
    let zeta = r.mode.as_ref().map(|m| m.zeta);
    let t = ctx.cfg.evolve.periods / zeta.unwrap_or(0.1);
    let grid = &op.grid;
    let v0 = GraphFunction::from_fn(grid, |e, x| {
        (-(x - 1.0).powi(2)).exp() * (1.0 + 0.3 * x + 0.1 * e as f64)
    });
    let tr = evolve_linearized(&op, &v0, t, ctx.cfg.evolve.dt, None)?;
    match zeta {
        Some(z) => {
            let rel = (tr.sigma_fit / z - 1.0).abs();
            out.below("growth_fit_relative_error", rel, ctx.cfg.tolerances.growth_fit);
        }
        None => out.fail(format!(
            "no growing mode to compare with; fitted rate {:e}",
            tr.sigma_fit
        )),
    }
    let mut h = ctx.header();
    h.extra.push(("dt".into(), format!("{}", ctx.cfg.evolve.dt)));
    out.files([write_series(ctx.out, "growth_norm", &tr.times, &tr.norms, &h).map_err(write_err)?]);
    out.data = json!({
        "zeta": zeta,
        "sigma_fit": tr.sigma_fit,
        "fit_window": tr.fit_window,
        "final_time": t,
        "norm_ratio": tr.norms.last().copied().unwrap_or(f64::NAN) / tr.norms[0],
    });
    Ok(out)
}

fn airy_sign(grid: &GraphGrid) -> Result<BetaSign, Error> {
    let g = &grid.graph;
    if !g.balanced() || g.alpha.iter().any(|a| *a != 1.0) {
        return Err(Error::InvalidArgument(
            "the resolvent task needs a balanced star with alpha = 1".into(),
        ));
    }
    let b = g.beta[0];
    if g.beta.iter().any(|x| *x != b) {
        return Err(Error::InvalidArgument(
            "the resolvent task needs equal beta on all edges".into(),
        ));
    }
    BetaSign::from_beta(b)
}

pub fn resolvent(ctx: &Ctx) -> TaskResult {
    let mut out = TaskOutcome::new("resolvent");
    let grid = ctx.grid()?;
    let bs = airy_sign(&grid)?;
    let rc = &ctx.cfg.resolvent;
    let lambda = Complex64::new(rc.lambda_re, rc.lambda_im);
    let x0 = (0.25 * grid.l).min(10.0);
    let bump = move |x: f64| (-(x.abs() - x0).powi(2) / 4.0).exp();
    let w = GraphFunction::from_fn(&grid, |_, x| Complex64::new(bump(x), 0.0));
    let r = apply_resolvent(&w, lambda, ctx.z, bs)?;
    out.below("resolvent_residual", r.residual, ctx.cfg.tolerances.resolvent);
    out.below(
        "resolvent_vertex_residual",
        r.vertex_residual,
        ctx.cfg.tolerances.resolvent,
    );
    let h = ctx.header();
    let re = r.v.re();
    let im = r.v.map(|c| Complex64::new(c.im, 0.0)).re();
    out.files(write_edges(ctx.out, "resolvent_re", &re, &h).map_err(write_err)?);
    out.files(write_edges(ctx.out, "resolvent_im", &im, &h).map_err(write_err)?);

    let contour = ContourSpec {
        r: rc.contour_r,
        t_im: rc.contour_t,
        m: rc.contour_m,
    };
    let wr = w.re();
    let stepped = timestep_apply(&wr, rc.t, 1e-3, ctx.z)?;
    let bro = bromwich_apply(&w, rc.t, ctx.z, bs, &contour)?;
    let diff = bro.re().zip_with(&stepped, |a, b| a - b)?.norm() / stepped.norm();
    out.below("bromwich_vs_stepper", diff, ctx.cfg.tolerances.bromwich);
    let drift = (stepped.norm() / wr.norm() - 1.0).abs();
    let mut h = ctx.header();
    h.extra.push(("t".into(), format!("{}", rc.t)));
    out.files(write_edges(ctx.out, "group_stepper", &stepped, &h).map_err(write_err)?);
    out.files(write_edges(ctx.out, "group_bromwich", &bro.re(), &h).map_err(write_err)?);
    out.data = json!({
        "lambda": [rc.lambda_re, rc.lambda_im],
        "beta_sign": bs.value(),
        "residual": r.residual,
        "vertex_residual": r.vertex_residual,
        "boundary_coefficients": r.coefficients.iter().map(|c| c.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "group_time": rc.t,
        "bromwich_vs_stepper": diff,
        "grid_norm_change": drift,
    });
    Ok(out)
}

pub fn audit(ctx: &Ctx) -> TaskResult {
    let mut out = TaskOutcome::new("audit");
    let op = ctx.linearized()?;
    let a = audit_assumptions(&op, 50, 1)?;
    out.below("s4_orthogonality", a.s4_orthogonality, 1e-8);
    out.check("criterion_applicable", a.passed as u8 as f64, "= 1", a.passed);
    out.notes.extend(a.notes.iter().cloned());
    out.data = serde_json::to_value(&a).unwrap_or(Value::Null);
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub z: f64,
    pub omega: Option<f64>,
    pub morse_index: Option<usize>,
    pub psi_phi: Option<f64>,
    pub zeta: Option<f64>,
    pub zeta_residual: Option<f64>,
    pub eigen_residual: Option<f64>,
    pub error: Option<String>,
}

fn sweep_row(cfg: &RunConfig, z: f64, out: &Path) -> SweepRow {
    let mut row = SweepRow {
        z,
        omega: None,
        morse_index: None,
        psi_phi: None,
        zeta: None,
        zeta_residual: None,
        eigen_residual: None,
        error: None,
    };
    let ctx = Ctx { cfg, z, out };
    let mut run = || -> Result<(), Error> {
        let (grid, bp) = ctx.profile()?;
        let phi = bp.sample(&grid);
        let op = assemble(&grid, schrodinger_vertex(&bp), Some(&phi))?;
        let spec = op.spectrum_below_edge(3)?;
        row.omega = spec.omega();
        row.morse_index = Some(spec.morse_index);
        row.eigen_residual = spec.residuals.iter().copied().reduce(f64::max);
        if !spec.kernel_detected {
            row.psi_phi = Some(inner_product(&op.solve_resolvent_at_zero(&phi)?, &phi)?.re);
        }
        let lin = assemble_linearized(&grid, z, Some(&bp))?;
        let r = growing_modes(&lin, &ctx.eigen_options())?;
        row.zeta = r.mode.as_ref().map(|m| m.zeta);
        row.zeta_residual = r.mode.as_ref().map(|m| m.residual);
        Ok(())
    };
    if let Err(e) = run() {
        row.error = Some(e.to_string());
    }
    row
}

pub fn sweep(cfg: &RunConfig, out_dir: &Path) -> TaskResult {
    let mut out = TaskOutcome::new("sweep");
    let zs = &cfg.vertex.z_list;
    if zs.is_empty() {
        return Err(Error::InvalidArgument(
            "vertex.Z_list: sweep needs at least one value".into(),
        ));
    }
    let rows: Vec<SweepRow> = zs.par_iter().map(|&z| sweep_row(cfg, z, out_dir)).collect();
    for r in &rows {
        if let Some(e) = &r.error {
            out.fail(format!("Z={}: {e}", r.z));
        }
    }
    let ok_rows: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let neg = ok_rows.iter().filter_map(|r| r.psi_phi).all(|v| v < 0.0);
    out.check("psi_phi_negative", neg as u8 as f64, "= 1", neg);
    if cfg.graph.n == 1 {
        let morse = ok_rows
            .iter()
            .filter(|r| r.z != 0.0)
            .all(|r| r.morse_index == Some(if r.z > 0.0 { 2 } else { 1 }));
        out.check("morse_column", morse as u8 as f64, "= 1", morse);
        // Without a second eigenvalue below the edge the second point of the
        // spectrum is the (positive) essential edge.
        let sign = ok_rows
            .iter()
            .filter(|r| r.z != 0.0)
            .all(|r| (r.z < 0.0) == r.omega.is_none_or(|o| o > 0.0));
        out.check("omega_sign_change_at_zero", sign as u8 as f64, "= 1", sign);
    }
    let unstable = ok_rows
        .iter()
        .filter(|r| r.z != 0.0)
        .all(|r| r.zeta.is_some_and(|z| z > 0.0));
    out.check("zeta_positive_for_nonzero_Z", unstable as u8 as f64, "= 1", unstable);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.12e}"));
            vec![
                format!("{}", r.z),
                f(r.omega),
                r.morse_index.map_or(String::new(), |m| m.to_string()),
                f(r.psi_phi),
                f(r.zeta),
                f(r.zeta_residual),
                f(r.eigen_residual),
                r.error.clone().unwrap_or_default().replace(',', ";"),
            ]
        })
        .collect();
    let path = out_dir.join("sweep.csv");
    write_table(
        &path,
        &format!("Z sweep L={} N={}", cfg.discretization.l, cfg.discretization.n),
        &[
            "Z",
            "omega",
            "morse_index",
            "psi_phi",
            "zeta",
            "zeta_residual",
            "eigen_residual",
            "error",
        ],
        &table,
    )
    .map_err(write_err)?;
    out.files([path]);
    out.data = serde_json::to_value(&rows).unwrap_or(Value::Null);
    Ok(out)
}

pub fn run_task(task: Task, ctx: &Ctx) -> Vec<TaskResult> {
    match task {
        Task::Profile => vec![profile(ctx)],
        Task::Spectrum => vec![spectrum(ctx)],
        Task::Modes => vec![modes(ctx)],
        Task::Evolve => vec![evolve(ctx)],
        Task::Resolvent => vec![resolvent(ctx)],
        Task::Audit => vec![audit(ctx)],
        Task::Sweep => vec![sweep(ctx.cfg, ctx.out)],
        Task::All => {
            let mut v = vec![profile(ctx), spectrum(ctx), modes(ctx), evolve(ctx)];
            // The Airy resolvent is only defined for unit dispersion.
            match ctx.grid().and_then(|g| airy_sign(&g)) {
                Ok(_) => v.push(resolvent(ctx)),
                Err(e) => {
                    let mut o = TaskOutcome::new("resolvent");
                    o.notes.push(format!("skipped: {e}"));
                    v.push(Ok(o));
                }
            }
            v.push(audit(ctx));
            v
        }
    }
}
