//! The unitary Airy group on a balanced star: Bromwich inversion of the
//! resolvent and a norm-conserving Galerkin time stepper.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{GraphFunction, GraphGrid};
use crate::linalg::{Band, BandLu};
use crate::resolvent::{airy_apply, reflect, resolvent_raw, BetaSign};
use crate::spline::{m_dot, Midpoint, PairSpace};

type C = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    /// Abscissa `Re lambda = r`.
    pub r: f64,
    /// The contour is truncated to `|Im lambda| <= t_im`.
    pub t_im: f64,
    /// Number of trapezoid panels.
    pub m: usize,
}

impl Default for ContourSpec {
    fn default() -> Self {
        Self {
            r: 1.0,
            t_im: 200.0,
            m: 4096,
        }
    }
}

impl ContourSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !(self.t_im > 0.0) || self.m < 2 || !self.m.is_multiple_of(2) {
            return invalid(format!("bad contour {self:?}: need r > 0, t_im > 0, even m"));
        }
        Ok(())
    }

    /// Nodes `Im lambda` and trapezoid weights; the weights sum to `2 t_im`.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let d = 2.0 * self.t_im / self.m as f64;
        (0..=self.m)
            .map(|j| {
                let w = if j == 0 || j == self.m { 0.5 * d } else { d };
                (-self.t_im + j as f64 * d, w)
            })
            .collect()
    }
}

/// `W(t) w` by the Bromwich integral. Two terms of the large-`lambda`
/// expansion `R = 1/lambda + A/lambda^2 + R A^2/lambda^2` are inverted
/// exactly, leaving an integrand that decays like `|lambda|^-3`; this needs
/// `w` in the domain of `A^2` (data vanishing near the vertex).
pub fn bromwich_apply(
    w: &GraphFunction<C>,
    t: f64,
    z: f64,
    beta_sign: BetaSign,
    contour: &ContourSpec,
) -> Result<GraphFunction<C>> {
    contour.validate()?;
    if t == 0.0 {
        return Ok(w.clone());
    }
    if t < 0.0 {
        // Reflection conjugates A_Z to -A_Z.
        let back = bromwich_apply(&reflect(w), -t, z, beta_sign, contour)?;
        return Ok(reflect(&back));
    }
    let beta = beta_sign.value();
    let aw = airy_apply(w, beta, 5);
    let a2w = airy_apply(&aw, beta, 5);
    let grid = &w.grid;
    let shape: Vec<usize> = w.values.iter().map(Vec::len).collect();
    let zero = || shape.iter().map(|&n| vec![C::new(0.0, 0.0); n]).collect::<Vec<_>>();
    let sum = contour
        .nodes()
        .par_iter()
        .map(|&(y, wt)| -> Result<Vec<Vec<C>>> {
            let lam = C::new(contour.r, y);
            let (v, _) = resolvent_raw(&a2w, lam, z, beta_sign)?;
            let f = (lam * t).exp() / (lam * lam) * wt;
            Ok(v.values
                .into_iter()
                .map(|e| e.into_iter().map(|x| x * f).collect())
                .collect())
        })
        .try_reduce(zero, |mut a, b| {
            for (ea, eb) in a.iter_mut().zip(b) {
                for (x, y) in ea.iter_mut().zip(eb) {
                    *x += y;
                }
            }
            Ok(a)
        })?;
    let mut out = w.clone();
    let scale = 1.0 / (2.0 * std::f64::consts::PI);
    for e in 0..grid.edge_count() {
        for k in 0..=grid.n {
            out.values[e][k] += t * aw.values[e][k] + scale * sum[e][k];
        }
    }
    let (n0, n1) = (w.norm(), out.norm());
    if (n1 - n0).abs() > 0.05 * n0 {
        return Err(Error::Accuracy(format!(
            "Bromwich quadrature underresolved: |W(t)w| = {n1}, |w| = {n0}; enlarge t_im or m"
        )));
    }
    Ok(out)
}

/// Local cubic interpolation of samples at `k h`, `k = 0..=N`.
fn interpolate(values: &[f64], h: f64, s: f64) -> f64 {
    let n = values.len() - 1;
    let t = s / h;
    let i0 = ((t.floor() as isize) - 1).clamp(0, n as isize - 3) as usize;
    let mut acc = 0.0;
    for i in 0..4 {
        let mut l = 1.0;
        for j in 0..4 {
            if j != i {
                l *= (t - (i0 + j) as f64) / (i as f64 - j as f64);
            }
        }
        acc += l * values[i0 + i];
    }
    acc
}

/// Galerkin realization of the vertex-coupled Airy generator on every
/// edge pair of a balanced star (the pairs decouple).
#[derive(Clone, Debug)]
pub struct AiryFlow {
    pub grid: GraphGrid,
    pub z: f64,
    pub pairs: Vec<PairSpace>,
    pub mass: Vec<Band>,
    pub generator: Vec<Band>,
    mass_lu: Vec<BandLu>,
}

impl AiryFlow {
    pub fn new(grid: &GraphGrid, z: f64) -> Result<Self> {
        let g = &grid.graph;
        if !g.balanced() {
            return invalid("the Airy group needs a balanced star");
        }
        let m = g.m;
        let mut pairs = Vec::with_capacity(m);
        for j in 0..m {
            let (a, b) = g.pair(j);
            if g.alpha[a] != g.alpha[b] || g.beta[a] != g.beta[b] {
                return invalid(format!("pair {j} has unequal coefficients; no unitary group"));
            }
            pairs.push(PairSpace::new(grid.l, grid.n, z, g.alpha[b], g.beta[b])?);
        }
        let mass: Vec<Band> = pairs.iter().map(PairSpace::mass).collect();
        let generator = pairs.iter().map(|p| p.operator(None)).collect();
        let mass_lu = mass.iter().map(Band::lu).collect::<Result<_>>()?;
        Ok(Self {
            grid: grid.clone(),
            z,
            pairs,
            mass,
            generator,
            mass_lu,
        })
    }

    /// `L^2` projection of `f(edge, x)` onto the spline space.
    pub fn project_fn(&self, f: impl Fn(usize, f64) -> f64) -> Vec<Vec<f64>> {
        let m = self.grid.graph.m;
        (0..m)
            .map(|j| {
                let fm = |s: f64| f(j, -s);
                let fp = |s: f64| f(m + j, s);
                let b = self.pairs[j].load([&fm, &fp]);
                self.mass_lu[j].solve(&b)
            })
            .collect()
    }

    /// Projection of grid samples (interpolated by local cubics).
    pub fn project(&self, w: &GraphFunction<f64>) -> Result<Vec<Vec<f64>>> {
        if !w.grid.same_shape(&self.grid) {
            return invalid("data on a different grid");
        }
        let h = self.grid.h;
        Ok(self.project_fn(|e, x| interpolate(&w.values[e], h, x.abs())))
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

    pub fn norm(&self, u: &[Vec<f64>]) -> f64 {
        u.iter()
            .zip(&self.mass)
            .map(|(v, m)| m_dot(m, v, v))
            .sum::<f64>()
            .sqrt()
    }

    pub fn stepper(&self, dt: f64) -> Result<Vec<Midpoint>> {
        self.mass
            .iter()
            .zip(&self.generator)
            .map(|(m, k)| Midpoint::new(m, k, dt))
            .collect()
    }

    /// Evolves `u` over `steps` steps, calling `observe(step, state)` after each.
    pub fn evolve(
        &self,
        u: &mut [Vec<f64>],
        dt: f64,
        steps: usize,
        mut observe: impl FnMut(usize, &[Vec<f64>]),
    ) -> Result<()> {
        let st = self.stepper(dt)?;
        for n in 1..=steps {
            u.par_iter_mut().zip(&st).for_each(|(v, s)| *v = s.step(v));
            observe(n, u);
        }
        Ok(())
    }

    /// Vertex continuity spread across all edges and the worst defect of the
    /// three vertex conditions over the pairs.
    pub fn vertex_report(&self, u: &[Vec<f64>]) -> (f64, f64) {
        let z = self.z;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut worst: f64 = 0.0;
        for (p, v) in self.pairs.iter().zip(u) {
            let (tm, tp) = p.vertex_traces(v);
            for x in [tm[0], tp[0]] {
                lo = lo.min(x);
                hi = hi.max(x);
            }
            let r = [
                (tp[0] - tm[0]).abs(),
                (tp[1] - tm[1] - z * tm[0]).abs(),
                (tp[2] - tm[2] - 0.5 * z * z * tm[0] - z * tm[1]).abs(),
            ];
            worst = r.iter().fold(worst, |a, b| a.max(*b));
        }
        (hi - lo, worst)
    }
}

/// `W(t) w` by implicit-midpoint steps of size about `dt`.
pub fn timestep_apply(w: &GraphFunction<f64>, t: f64, dt: f64, z: f64) -> Result<GraphFunction<f64>> {
    if !(dt > 0.0) {
        return invalid("time step must be positive");
    }
    let flow = AiryFlow::new(&w.grid, z)?;
    let mut u = flow.project(w)?;
    let steps = (t.abs() / dt).ceil().max(1.0) as usize;
    let step = t / steps as f64;
    flow.evolve(&mut u, step, steps, |_, _| {})?;
    Ok(flow.to_grid(&u))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub times: Vec<f64>,
    /// Spread of vertex values over all edges at each sampled time.
    pub continuity_spread: Vec<f64>,
    /// Worst vertex-condition defect at each sampled time.
    pub condition_residual: Vec<f64>,
    pub norm_drift: f64,
}

impl InvarianceReport {
    pub fn max_spread(&self) -> f64 {
        self.continuity_spread.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_condition(&self) -> f64 {
        self.condition_residual.iter().copied().fold(0.0, f64::max)
    }
}

/// Evolves `u0(edge, x)` to time `t` and tracks vertex continuity and the
/// vertex conditions at `samples` equally spaced times.
pub fn domain_invariance_check(
    grid: &GraphGrid,
    u0: impl Fn(usize, f64) -> f64,
    t: f64,
    z: f64,
    dt: f64,
    samples: usize,
) -> Result<InvarianceReport> {
    let flow = AiryFlow::new(grid, z)?;
    let mut u = flow.project_fn(u0);
    let n0 = flow.norm(&u);
    let steps = (t.abs() / dt).ceil().max(1.0) as usize;
    let every = (steps / samples.max(1)).max(1);
    let mut rep = InvarianceReport {
        times: vec![0.0],
        continuity_spread: vec![],
        condition_residual: vec![],
        norm_drift: 0.0,
    };
    let (s, c) = flow.vertex_report(&u);
    rep.continuity_spread.push(s);
    rep.condition_residual.push(c);
    let step = t / steps as f64;
    flow.evolve(&mut u, step, steps, |n, v| {
        if n % every == 0 || n == steps {
            let (s, c) = flow.vertex_report(v);
            rep.times.push(n as f64 * step);
            rep.continuity_spread.push(s);
            rep.condition_residual.push(c);
        }
    })?;
    rep.norm_drift = (flow.norm(&u) / n0 - 1.0).abs();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_grid, StarGraph};

    #[test]
    fn contour_weights() {
        let c = ContourSpec::default();
        let s: f64 = c.nodes().iter().map(|n| n.1).sum();
        assert!((s - 400.0).abs() < 1e-9);
        assert!(ContourSpec { m: 3, ..c }.validate().is_err());
    }

    #[test]
    fn stepper_conserves_norm_and_composes() {
        let grid = build_grid(StarGraph::uniform(1, 1, 1.0, -1.0).unwrap(), 20.0, 400).unwrap();
        let w = GraphFunction::from_fn(&grid, |_, x| (-(x.abs() - 5.0).powi(2)).exp());
        let flow = AiryFlow::new(&grid, 1.0).unwrap();
        let mut u = flow.project(&w).unwrap();
        let n0 = flow.norm(&u);
        let mut worst: f64 = 0.0;
        flow.evolve(&mut u, 0.01, 100, |_, v| {
            worst = worst.max((flow.norm(v) / n0 - 1.0).abs())
        })
        .unwrap();
        assert!(worst < 1e-10, "{worst}");
        let mut a = flow.project(&w).unwrap();
        flow.evolve(&mut a, 0.01, 30, |_, _| {}).unwrap();
        flow.evolve(&mut a, 0.01, 20, |_, _| {}).unwrap();
        let mut b = flow.project(&w).unwrap();
        flow.evolve(&mut b, 0.01, 50, |_, _| {}).unwrap();
        let d: f64 = a[0].iter().zip(&b[0]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-12);
    }

    #[test]
    fn bromwich_small_time_and_reflection() {
        let grid = build_grid(StarGraph::two_half_lines(), 30.0, 600).unwrap();
        let w = GraphFunction::from_fn(&grid, |_, x| C::new((-(x.abs() - 10.0).powi(2) / 4.0).exp(), 0.0));
        let c = ContourSpec {
            m: 2048,
            ..Default::default()
        };
        let u = bromwich_apply(&w, 0.1, 1.0, BetaSign::Minus, &c).unwrap();
        let wr = GraphFunction::from_fn(&grid, |_, x| (-(x.abs() - 10.0).powi(2) / 4.0).exp());
        let s = timestep_apply(&wr, 0.1, 1e-3, 1.0).unwrap();
        let d = (0..2)
            .flat_map(|e| (0..=600).map(move |k| (e, k)))
            .map(|(e, k)| (u.values[e][k] - s.values[e][k]).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-4, "{d}");
        let back = bromwich_apply(
            &bromwich_apply(&w, 0.2, 1.0, BetaSign::Minus, &c).unwrap(),
            -0.2,
            1.0,
            BetaSign::Minus,
            &c,
        )
        .unwrap();
        let d = back.zip_with(&w, |a, b| a - b).unwrap();
        assert!(d.norm() < 1e-4 * w.norm(), "{}", d.norm());
    }
}
