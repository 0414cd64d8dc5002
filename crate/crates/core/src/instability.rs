//! Linearization `d/dt v = NE v` of the KdV flow around a stationary profile,
//! its real eigenvalue pair `±zeta`, the assumption audit behind the
//! instability criteria, and growth-rate cross-validation by evolution.
//!
//! On a balanced star the vertex conditions act on each edge pair
//! separately, so the operator is block diagonal over pairs; each block is a
//! Galerkin matrix on the spline space of [`PairSpace`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{inner_product, GraphFunction, GraphGrid, StarGraph};
use crate::linalg::{dense_eigenvalues, Band};
use crate::profiles::{check_vertex_conditions, make_balanced_profile, BalancedProfile, Profile};
use crate::schrodinger::{assemble, VertexKind};
use crate::spline::{m_dot, Midpoint, PairSpace, SideProfile};

/// Galerkin form of `v -> alpha v''' + beta v' + 2 (phi v)'` on every edge
/// pair, with the vertex conditions built into the trial space.
#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub grid: GraphGrid,
    pub z: f64,
    /// `None` is the unperturbed Airy generator.
    pub profile: Option<BalancedProfile>,
    pub pairs: Vec<PairSpace>,
    pub mass: Vec<Band>,
    pub matrix: Vec<Band>,
}

fn side_profile(p: &Profile) -> impl Fn(f64) -> (f64, f64) + Sync + '_ {
    move |s| {
        let d = p.plus_derivs(s);
        (d[0], d[1])
    }
}

fn pair_operator(space: &PairSpace, p: Option<&Profile>) -> Band {
    match p {
        None => space.operator(None),
        Some(p) => {
            let f = side_profile(p);
            space.operator(Some([&f, &f]))
        }
    }
}

pub fn assemble_linearized(grid: &GraphGrid, z: f64, profile: Option<&BalancedProfile>) -> Result<LinearizedOperator> {
    let g = &grid.graph;
    if !g.balanced() {
        return invalid("the linearized operator needs a balanced star");
    }
    if let Some(bp) = profile {
        if bp.pairs.len() != g.m || bp.graph != *g {
            return invalid("profile and grid describe different graphs");
        }
        if (bp.z - z).abs() > 1e-14 {
            return invalid(format!("profile built for Z = {}, operator asked for Z = {z}", bp.z));
        }
        for (j, p) in bp.pairs.iter().enumerate() {
            let r = check_vertex_conditions(p).max();
            if r > 1e-10 {
                return invalid(format!("profile on pair {j} violates the vertex conditions by {r:e}"));
            }
        }
    }
    let mut pairs = Vec::with_capacity(g.m);
    for j in 0..g.m {
        let (a, b) = g.pair(j);
        if g.alpha[a] != g.alpha[b] || g.beta[a] != g.beta[b] {
            return invalid(format!("pair {j} has unequal coefficients"));
        }
        pairs.push(PairSpace::new(grid.l, grid.n, z, g.alpha[b], g.beta[b])?);
    }
    let mass = pairs.iter().map(PairSpace::mass).collect();
    let matrix = pairs
        .iter()
        .enumerate()
        .map(|(j, s)| pair_operator(s, profile.map(|bp| &bp.pairs[j])))
        .collect();
    Ok(LinearizedOperator {
        grid: grid.clone(),
        z,
        profile: profile.cloned(),
        pairs,
        mass,
        matrix,
    })
}

/// Block-diagonal concatenation of square band matrices.
pub fn block_diag(blocks: &[Band]) -> Band {
    let n: usize = blocks.iter().map(|b| b.n).sum();
    let kl = blocks.iter().map(|b| b.kl).max().unwrap_or(0);
    let ku = blocks.iter().map(|b| b.ku).max().unwrap_or(0);
    let mut out = Band::zeros(n, kl, ku);
    let mut off = 0;
    for b in blocks {
        for i in 0..b.n {
            for j in i.saturating_sub(b.kl)..(i + b.ku + 1).min(b.n) {
                let v = b.get(i, j);
                if v != 0.0 {
                    out.add(off + i, off + j, v);
                }
            }
        }
        off += b.n;
    }
    out
}

impl LinearizedOperator {
    /// `(M, K)` over the whole graph.
    pub fn full_matrices(&self) -> (Band, Band) {
        (block_diag(&self.mass), block_diag(&self.matrix))
    }

    fn offsets(&self) -> Vec<usize> {
        let mut o = vec![0];
        for p in &self.pairs {
            o.push(o.last().unwrap() + p.dim());
        }
        o
    }

    fn split(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let o = self.offsets();
        (0..self.pairs.len()).map(|j| x[o[j]..o[j + 1]].to_vec()).collect()
    }

    pub fn to_grid(&self, u: &[Vec<f64>]) -> GraphFunction<f64> {
        let m = self.grid.graph.m;
        let mut out = GraphFunction::zeros(&self.grid);
        for j in 0..m {
            out.values[j] = self.pairs[j].nodal_values(0, &u[j]);
            out.values[m + j] = self.pairs[j].nodal_values(1, &u[j]);
        }
        out
    }

    pub fn project(&self, f: impl Fn(usize, f64) -> f64) -> Result<Vec<Vec<f64>>> {
        let m = self.grid.graph.m;
        (0..m)
            .map(|j| {
                let fm = |s: f64| f(j, -s);
                let fp = |s: f64| f(m + j, s);
                let b = self.pairs[j].load([&fm, &fp]);
                Ok(self.mass[j].lu()?.solve(&b))
            })
            .collect()
    }

    pub fn norm(&self, u: &[Vec<f64>]) -> f64 {
        u.iter()
            .zip(&self.mass)
            .map(|(v, m)| m_dot(m, v, v))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Cells per half-line of the dense discovery solve.
    pub coarse_n: usize,
    /// Eigenvalues with `|lambda| <= window` are kept from the dense solve.
    pub window: f64,
    /// Real parts below `10 tol` count as neutral.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            coarse_n: 300,
            window: 4.0,
            tol: 1e-4,
            max_iter: 60,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowingMode {
    pub zeta: f64,
    #[serde(skip)]
    pub eigenfunction: GraphFunction<f64>,
    pub residual: f64,
    pub paired_negative: f64,
    pub paired_residual: f64,
    /// Estimate from the dense coarse solve.
    pub coarse_zeta: f64,
    /// Share of the eigenfunction's mass within `5h` of the far ends.
    pub far_mass: f64,
    #[serde(skip)]
    pub coefficients: Vec<Vec<f64>>,
}

impl GrowingMode {
    /// `|zeta + paired_negative|` relative to `max(1, zeta)`.
    pub fn mirror_defect(&self) -> f64 {
        (self.zeta + self.paired_negative).abs() / self.zeta.max(1.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeReport {
    pub mode: Option<GrowingMode>,
    /// Coarse eigenvalues with `|lambda| <= window`.
    pub window: Vec<Complex64>,
    pub max_real_part: f64,
    /// Largest distance from a coarse eigenvalue off the imaginary axis to
    /// the nearest of its mirror images `-lambda`, `conj(lambda)`.
    pub symmetry_defect: f64,
    pub conjugation_defect: f64,
    pub note: String,
}

impl ModeReport {
    pub fn require(&self) -> Result<&GrowingMode> {
        self.mode.as_ref().ok_or_else(|| Error::NotFound(self.note.clone()))
    }
}

fn dense_window(space: &PairSpace, p: Option<&Profile>, window: f64) -> Result<Vec<Complex64>> {
    let m = space.mass().to_dense();
    let k = pair_operator(space, p).to_dense();
    let a = m
        .lu()
        .solve(&k)
        .ok_or_else(|| Error::Singular("coarse mass matrix".into()))?;
    Ok(dense_eigenvalues(a)
        .into_iter()
        .filter(|l| l.norm() <= window)
        .collect())
}

fn nearest(set: &[Complex64], z: Complex64) -> f64 {
    set.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Rayleigh-shifted inverse iteration for a real eigenvalue of
/// `K x = zeta M x` near `sigma`. Returns `(zeta, x, residual)`.
pub fn refine_real(m: &Band, k: &Band, sigma: f64, max_iter: usize, seed: u64) -> Result<(f64, Vec<f64>, f64)> {
    let n = m.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mlu = m.lu()?;
    let mut shift = sigma;
    let mut zeta = sigma;
    for it in 0..max_iter {
        let lu = match k.combine(1.0, m, -shift).lu() {
            Ok(lu) => lu,
            Err(_) => k.combine(1.0, m, -(shift + 1e-12 * (1.0 + shift.abs()))).lu()?,
        };
        let mx = m.matvec(&x);
        let y = lu.solve(&mx);
        let xy = m_dot(m, &x, &y);
        let xx = m_dot(m, &x, &x);
        let est = shift + xx / xy;
        let ny = m_dot(m, &y, &y).sqrt();
        x = y.iter().map(|v| v / ny).collect();
        let done = (est - zeta).abs() <= 1e-14 * (1.0 + est.abs());
        zeta = est;
        if done && it > 2 {
            break;
        }
        if it >= 2 {
            shift = zeta;
        }
    }
    let r = k
        .matvec(&x)
        .iter()
        .zip(m.matvec(&x))
        .map(|(a, b)| a - zeta * b)
        .collect::<Vec<_>>();
    let y = mlu.solve(&r);
    let res = m_dot(m, &y, &y).sqrt() / m_dot(m, &x, &x).sqrt();
    Ok((zeta, x, res))
}

fn far_mass(op: &LinearizedOperator, u: &GraphFunction<f64>) -> f64 {
    let n = op.grid.n;
    let cut = n - 5;
    let mut far = 0.0;
    let mut all = 0.0;
    for e in &u.values {
        for (k, v) in e.iter().enumerate() {
            all += v * v;
            if k >= cut {
                far += v * v;
            }
        }
    }
    if all > 0.0 {
        far / all
    } else {
        0.0
    }
}

/// The real eigenvalue pair `±zeta` of the linearized operator: dense
/// discovery on a coarse copy, then refinement on the full graph.
pub fn growing_modes(op: &LinearizedOperator, opts: &EigenOptions) -> Result<ModeReport> {
    let g = &op.grid.graph;
    let mut window = Vec::new();
    let mut best: Option<f64> = None;
    let mut seen: Vec<(f64, f64, Option<&Profile>)> = Vec::new();
    for j in 0..g.m {
        let p = op.profile.as_ref().map(|bp| &bp.pairs[j]);
        let key = (op.pairs[j].alpha, op.pairs[j].beta, p);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let coarse = PairSpace::new(op.grid.l, opts.coarse_n, op.z, op.pairs[j].alpha, op.pairs[j].beta)?;
        let w = dense_window(&coarse, p, opts.window)?;
        for l in &w {
            if l.re > 10.0 * opts.tol && l.im.abs() <= 1e-8 * (1.0 + l.norm()) && best.is_none_or(|b| l.re > b) {
                best = Some(l.re);
            }
        }
        window.extend(w);
    }
    let max_real_part = window.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let off_axis: Vec<Complex64> = window
        .iter()
        .copied()
        .filter(|l| l.re.abs() > 10.0 * opts.tol)
        .collect();
    let symmetry_defect = off_axis.iter().map(|&l| nearest(&window, -l)).fold(0.0, f64::max);
    let conjugation_defect = window.iter().map(|&l| nearest(&window, l.conj())).fold(0.0, f64::max);
    let mut report = ModeReport {
        mode: None,
        window,
        max_real_part,
        symmetry_defect,
        conjugation_defect,
        note: String::new(),
    };
    let Some(coarse_zeta) = best else {
        report.note = format!(
            "no real eigenvalue with Re > {:e} at coarse N = {}; largest real part {max_real_part:e}",
            10.0 * opts.tol,
            opts.coarse_n
        );
        return Ok(report);
    };
    let (m, k) = op.full_matrices();
    let (zeta, x, residual) = refine_real(&m, &k, coarse_zeta, opts.max_iter, 7)?;
    let (neg, _, paired_residual) = refine_real(&m, &k, -zeta, opts.max_iter, 11)?;
    let coefficients = op.split(&x);
    let eigenfunction = op.to_grid(&coefficients);
    let fm = far_mass(op, &eigenfunction);
    if fm > 0.1 || !(zeta > 10.0 * opts.tol) {
        report.note = format!("candidate near {coarse_zeta} rejected: zeta = {zeta}, far-end mass {fm}");
        return Ok(report);
    }
    report.mode = Some(GrowingMode {
        zeta,
        eigenfunction,
        residual,
        paired_negative: neg,
        paired_residual,
        coarse_zeta,
        far_mass: fm,
        coefficients,
    });
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub sigma_fit: f64,
    pub fit_window: (f64, f64),
}

/// Least-squares slope of `log y` against `t` over `t in [a, b]`.
pub fn fit_growth(times: &[f64], norms: &[f64], a: f64, b: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(norms)
        .filter(|(t, _)| **t >= a && **t <= b)
        .map(|(t, y)| (*t, y.ln()))
        .collect();
    if pts.len() < 3 {
        return invalid("fit window holds fewer than three samples");
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mt, my) = (st / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mt) * (p.1 - my), a.1 + (p.0 - mt).powi(2))
    });
    Ok(num / den)
}

/// Implicit-midpoint evolution of spline coefficients; the growth rate is
/// fitted over `fit` (default: the second half of `[0, t]`).
pub fn evolve_coefficients(
    op: &LinearizedOperator,
    v0: &[Vec<f64>],
    t: f64,
    dt: f64,
    fit: Option<(f64, f64)>,
) -> Result<Trajectory> {
    if !(t > 0.0) || !(dt > 0.0) {
        return invalid("need t > 0 and dt > 0");
    }
    let steps = (t / dt).ceil() as usize;
    let dt = t / steps as f64;
    let st: Vec<Midpoint> = op
        .mass
        .iter()
        .zip(&op.matrix)
        .map(|(m, k)| Midpoint::new(m, k, dt))
        .collect::<Result<_>>()?;
    let mut u = v0.to_vec();
    let mut times = vec![0.0];
    let mut norms = vec![op.norm(&u)];
    for n in 1..=steps {
        for (v, s) in u.iter_mut().zip(&st) {
            *v = s.step(v);
        }
        let nv = op.norm(&u);
        if !nv.is_finite() || nv > 1e250 {
            return Err(Error::Numerical(format!("overflow at t = {}; shrink T", n as f64 * dt)));
        }
        times.push(n as f64 * dt);
        norms.push(nv);
    }
    let fit_window = fit.unwrap_or((0.5 * t, t));
    let sigma_fit = fit_growth(&times, &norms, fit_window.0, fit_window.1)?;
    Ok(Trajectory {
        times,
        norms,
        sigma_fit,
        fit_window,
    })
}

pub fn evolve_linearized(
    op: &LinearizedOperator,
    v0: &GraphFunction<f64>,
    t: f64,
    dt: f64,
    fit: Option<(f64, f64)>,
) -> Result<Trajectory> {
    if !v0.grid.same_shape(&op.grid) {
        return invalid("initial data on a different grid");
    }
    let h = op.grid.h;
    let v = op.project(|e, x| interpolate(&v0.values[e], h, x.abs()))?;
    evolve_coefficients(op, &v, t, dt, fit)
}

fn interpolate(values: &[f64], h: f64, s: f64) -> f64 {
    let n = values.len() - 1;
    let t = s / h;
    let i0 = ((t.floor() as isize) - 1).clamp(0, n as isize - 3) as usize;
    (0..4)
        .map(|i| {
            let l: f64 = (0..4)
                .filter(|&j| j != i)
                .map(|j| (t - (i0 + j) as f64) / (i as f64 - j as f64))
                .product();
            l * values[i0 + i]
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriterionRoute {
    /// Two negative directions of `E` plus the reduced condition on `[phi]^perp`.
    TwoNegative,
    /// A single negative direction; no reduction needed.
    OneNegative,
    Inapplicable,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditReport {
    pub z: f64,
    /// Skewness defect of the unperturbed generator, `max |K + K^T|`.
    pub s1_generator_skew: f64,
    /// Vertex and stationarity residuals of the profile.
    pub s2_profile_residual: f64,
    /// `max |<Eu, v> - <u, Ev>|` over random pairs, relative.
    pub s3_symmetry_defect: f64,
    /// `max |<NEu, phi>| / |u|` over random trial functions.
    pub s4_orthogonality: f64,
    pub s5_morse_index: usize,
    pub s5_eigenvalues: Vec<f64>,
    pub s5_invertible: bool,
    pub s5_essential_edge: f64,
    /// `<phi', Phi_i>` for the negative eigenvectors.
    pub s5_n_phi_overlaps: Vec<f64>,
    pub s6_psi_phi: f64,
    pub s6_closed_form: Option<f64>,
    /// Skewness defect of the discrete `d/dx`.
    pub s7_skew_defect: f64,
    /// `max |L phi'|` on each half-line away from the vertex.
    pub derivative_annihilation: f64,
    pub reduced_morse_index: Option<usize>,
    pub route: CriterionRoute,
    pub passed: bool,
    pub notes: Vec<String>,
}

fn skew_defect(k: &Band) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..k.n {
        for j in i.saturating_sub(k.kl)..(i + k.ku + 1).min(k.n) {
            worst = worst.max((k.get(i, j) + k.get(j, i)).abs());
            scale = scale.max(k.get(i, j).abs());
        }
    }
    worst / scale.max(1e-300)
}

/// Numerical checks of the hypotheses of the instability criteria.
pub fn audit_assumptions(op: &LinearizedOperator, samples: usize, seed: u64) -> Result<AuditReport> {
    let Some(bp) = op.profile.as_ref() else {
        return invalid("the audit needs a stationary profile");
    };
    let grid = &op.grid;
    let g = &grid.graph;
    let z = op.z;
    let mut notes = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let zero = |_: f64| (0.0, 0.0);
    let s1 = op
        .pairs
        .iter()
        .map(|p| skew_defect(&p.operator(Some([&zero, &zero]))))
        .fold(0.0, f64::max);

    let (pair_res, spread, flux) = bp.residuals();
    let stat = bp
        .pairs
        .iter()
        .flat_map(|p| (1..400).map(move |i| p.stationarity_residual(0.05 * i as f64).abs()))
        .fold(0.0, f64::max);
    let s2 = pair_res.max(spread).max(flux).max(stat);

    let mut s4: f64 = 0.0;
    for _ in 0..samples {
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, space) in op.pairs.iter().enumerate() {
            let u: Vec<f64> = (0..space.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = side_profile(&bp.pairs[j]);
            let phi = |s: f64| bp.pairs[j].plus_derivs(s)[0];
            let prof: [SideProfile<'_>; 2] = [&f, &f];
            num += space.pairing(&u, prof, [&phi, &phi]);
            den += m_dot(&op.mass[j], &u, &u);
        }
        s4 = s4.max(num.abs() / den.sqrt());
    }

    let s7 = op
        .pairs
        .iter()
        .map(|p| {
            let mut d = p.clone();
            d.alpha = 0.0;
            d.beta = 1.0;
            skew_defect(&d.operator(Some([&zero, &zero])))
        })
        .fold(0.0, f64::max);

    let ann = bp
        .pairs
        .iter()
        .flat_map(|p| (1..400).map(move |i| p.derivative_annihilation(0.05 * i as f64).abs()))
        .fold(0.0, f64::max);

    let vertex = schrodinger_vertex(bp);
    let phi = bp.sample(grid);
    let schr = assemble(grid, vertex, Some(&phi))?;
    let spec = schr.spectrum_below_edge(4)?;
    let mut s3: f64 = 0.0;
    for _ in 0..samples.min(10) {
        let (a, b): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let u = GraphFunction::from_fn(grid, |_, x| (-(x - a).powi(2)).exp());
        let v = GraphFunction::from_fn(grid, |_, x| (-(x - b).powi(2) / 2.0).exp());
        let a = inner_product(&schr.apply(&u), &v)?.re;
        let b = inner_product(&u, &schr.apply(&v))?.re;
        s3 = s3.max((a - b).abs() / (u.norm() * v.norm()));
    }
    let dphi = GraphFunction::from_fn(grid, |e, x| bp.edge_profile(e).derivative(g.side(e), x, 1));
    let morse = spec.morse_index;
    let overlaps: Vec<f64> = spec
        .eigenvectors
        .iter()
        .zip(&spec.eigenvalues)
        .filter(|(_, l)| **l < 0.0)
        .map(|(v, _)| inner_product(&dphi, v).map(|c| c.re))
        .collect::<Result<_>>()?;
    let invertible = !spec.kernel_detected;

    let psi = schr.solve_resolvent_at_zero(&phi);
    let (s6, closed) = match psi {
        Ok(psi) => {
            let ip = inner_product(&psi, &phi)?.re;
            let closed = (g.m == 1 && bp.pairs[0].omega == 1.0).then(|| -4.5 * (1.0 + 0.5 * z));
            (ip, closed)
        }
        Err(e) => {
            notes.push(format!("E phi = psi not solvable: {e}"));
            (f64::NAN, None)
        }
    };

    let mut reduced = None;
    let route = if !invertible {
        notes.push("E has a kernel: the criteria do not apply".into());
        CriterionRoute::Inapplicable
    } else if morse == 1 {
        CriterionRoute::OneNegative
    } else if morse == 2 {
        let nf = schr.reduced(&phi)?.morse_index();
        reduced = Some(nf);
        if nf != 1 {
            notes.push(format!("reduced operator has Morse index {nf}, expected 1"));
        }
        CriterionRoute::TwoNegative
    } else {
        notes.push(format!("Morse index {morse} is outside both criteria"));
        CriterionRoute::Inapplicable
    };

    let tol = 1e-8;
    let mut passed = route != CriterionRoute::Inapplicable;
    for (name, v) in [("S1", s1), ("S3", s3), ("S4", s4), ("S7", s7)] {
        if !(v < tol) {
            notes.push(format!("{name} defect {v:e} exceeds {tol:e}"));
            passed = false;
        }
    }
    if !(s2 < 1e-10) {
        notes.push(format!("S2 profile residual {s2:e}"));
        passed = false;
    }
    if !(s6.abs() > 1e-8) {
        notes.push("S6: <psi, phi> vanishes".into());
        passed = false;
    }
    if morse == 2 && overlaps.iter().all(|o| o.abs() < 1e-8) {
        notes.push("S5: phi' is orthogonal to both negative eigenvectors".into());
        passed = false;
    }
    if reduced.is_some_and(|nf| nf != 1) {
        passed = false;
    }
    Ok(AuditReport {
        z,
        s1_generator_skew: s1,
        s2_profile_residual: s2,
        s3_symmetry_defect: s3,
        s4_orthogonality: s4,
        s5_morse_index: morse,
        s5_eigenvalues: spec.eigenvalues.clone(),
        s5_invertible: invertible,
        s5_essential_edge: spec.essential_edge,
        s5_n_phi_overlaps: overlaps,
        s6_psi_phi: s6,
        s6_closed_form: closed,
        s7_skew_defect: s7,
        derivative_annihilation: ann,
        reduced_morse_index: reduced,
        route,
        passed,
        notes,
    })
}

/// Vertex condition of the Schrodinger operator matching the profile: the
/// flux `sum alpha_j (phi'(0+) - phi'(0-))` equals `Z sum alpha_j phi(0)`.
pub fn schrodinger_vertex(bp: &BalancedProfile) -> VertexKind {
    VertexKind::Delta(bp.z * bp.pairs.iter().map(|p| p.alpha).sum::<f64>())
}

#[derive(Clone, Debug, Serialize)]
pub struct BalancedInstability {
    pub n: usize,
    pub z: f64,
    pub full: ModeReport,
    /// Same computation on the two half-lines when all pairs coincide.
    pub reduced: Option<ModeReport>,
    pub zeta_difference: Option<f64>,
}

/// Growing mode on a balanced star with `n` pairs, compared with the
/// two-half-line problem when the coefficients are equal.
pub fn balanced_instability(
    z: f64,
    alphas: &[f64],
    betas: &[f64],
    l: f64,
    n_cells: usize,
    opts: &EigenOptions,
) -> Result<BalancedInstability> {
    let graph = StarGraph::balanced_pairs(alphas, betas)?;
    let bp = make_balanced_profile(&graph, z, alphas, betas)?;
    let grid = crate::graph::build_grid(graph, l, n_cells)?;
    let op = assemble_linearized(&grid, z, Some(&bp))?;
    let full = growing_modes(&op, opts)?;
    let equal = alphas.windows(2).all(|w| w[0] == w[1]) && betas.windows(2).all(|w| w[0] == w[1]);
    let (reduced, diff) = if equal {
        let g1 = StarGraph::balanced_pairs(&alphas[..1], &betas[..1])?;
        let bp1 = make_balanced_profile(&g1, z, &alphas[..1], &betas[..1])?;
        let grid1 = crate::graph::build_grid(g1, l, n_cells)?;
        let r = growing_modes(&assemble_linearized(&grid1, z, Some(&bp1))?, opts)?;
        let d = match (&full.mode, &r.mode) {
            (Some(a), Some(b)) => Some((a.zeta - b.zeta).abs()),
            _ => None,
        };
        (Some(r), d)
    } else {
        (None, None)
    };
    Ok(BalancedInstability {
        n: alphas.len(),
        z,
        full,
        reduced,
        zeta_difference: diff,
    })
}
