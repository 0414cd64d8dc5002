//! Finite-difference Schrodinger operators `-alpha_e d^2/dx^2 - beta_e - 2 phi_e`
//! on a star with a delta-type vertex, and their low-lying spectra.
//!
//! The discretization is the lumped P1 form
//! `sum_e alpha_e sum_k (u_{k+1} - u_k)^2 / h + sum w V u^2 + kappa u(0)^2`
//! with one shared vertex unknown, trapezoid weights `w`, and Dirichlet
//! conditions at `±L`. Its Euler-Lagrange vertex row is the flux condition
//! `sum_+ alpha u'(0+) - sum_- alpha u'(0-) = kappa u(0)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{inner_product, GraphFunction, GraphGrid};
use crate::linalg::{StarSym, StarVec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum VertexKind {
    /// `sum_+ alpha u' - sum_- alpha u' = Z u(0)`.
    Delta(f64),
    Kirchhoff,
    /// `sum_+ alpha u' - sum_- alpha u' = Z n u(0)` on a balanced star.
    FullDeltaSum(f64),
}

impl VertexKind {
    pub fn z(self) -> f64 {
        match self {
            VertexKind::Delta(z) | VertexKind::FullDeltaSum(z) => z,
            VertexKind::Kirchhoff => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SchrodingerOperator {
    pub grid: GraphGrid,
    pub vertex: VertexKind,
    /// `-beta_e - 2 phi_e` at every node.
    pub potential: GraphFunction<f64>,
    pub kappa: f64,
    pub matrix: StarSym,
}

pub fn assemble(grid: &GraphGrid, vertex: VertexKind, phi: Option<&GraphFunction<f64>>) -> Result<SchrodingerOperator> {
    let g = &grid.graph;
    let kappa = match vertex {
        VertexKind::Delta(z) => z,
        VertexKind::Kirchhoff => 0.0,
        VertexKind::FullDeltaSum(z) => {
            if !g.balanced() {
                return invalid("the full delta sum condition needs a balanced star");
            }
            z * g.n as f64
        }
    };
    if !kappa.is_finite() {
        return invalid("vertex strength must be finite");
    }
    if let Some(p) = phi {
        if !p.grid.same_shape(grid) {
            return invalid("profile sampled on a different grid");
        }
    }
    let potential = GraphFunction::from_fn(grid, |e, _| -g.beta[e]);
    let potential = match phi {
        Some(p) => potential.zip_with(p, |v, f| v - 2.0 * f)?,
        None => potential,
    };
    let h = grid.h;
    let n = grid.n;
    let ne = grid.edge_count();
    let mut diag = Vec::with_capacity(ne);
    let mut weight = Vec::with_capacity(ne);
    let mut off = Vec::with_capacity(ne);
    let mut link = Vec::with_capacity(ne);
    let mut vertex_diag = kappa;
    for e in 0..ne {
        let a = g.alpha[e];
        let v = &potential.values[e];
        diag.push((1..n).map(|k| 2.0 * a / h + h * v[k]).collect());
        weight.push(vec![h; n - 1]);
        off.push(vec![-a / h; n - 2]);
        link.push(-a / h);
        vertex_diag += a / h + 0.5 * h * v[0];
    }
    let matrix = StarSym {
        vertex_diag,
        vertex_weight: 0.5 * h * ne as f64,
        diag,
        weight,
        off,
        link,
    };
    Ok(SchrodingerOperator {
        grid: grid.clone(),
        vertex,
        potential,
        kappa,
        matrix,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub morse_index: usize,
    pub kernel_detected: bool,
    pub kernel_threshold: f64,
    pub essential_edge: f64,
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Vec<GraphFunction<f64>>,
}

impl SpectralReport {
    /// The second eigenvalue, if there is one below the edge.
    pub fn omega(&self) -> Option<f64> {
        self.eigenvalues.get(1).copied()
    }
}

impl SchrodingerOperator {
    pub fn kernel_threshold(&self) -> f64 {
        10.0 * self.grid.h * self.grid.h
    }

    pub fn to_star(&self, u: &GraphFunction<f64>) -> StarVec {
        let n = self.grid.n;
        StarVec {
            vertex: u.values.iter().map(|v| v[0]).sum::<f64>() / u.values.len() as f64,
            chains: u.values.iter().map(|v| v[1..n].to_vec()).collect(),
        }
    }

    pub fn from_star(&self, x: &StarVec) -> GraphFunction<f64> {
        let mut u = GraphFunction::zeros(&self.grid);
        for (e, c) in x.chains.iter().enumerate() {
            u.values[e][0] = x.vertex;
            u.values[e][1..self.grid.n].copy_from_slice(c);
        }
        u
    }

    /// `E u` at the unknowns (zero at the far ends).
    pub fn apply(&self, u: &GraphFunction<f64>) -> GraphFunction<f64> {
        let x = self.to_star(u);
        let mut y = self.matrix.matvec(&x);
        y.vertex /= self.matrix.vertex_weight;
        for (c, w) in y.chains.iter_mut().zip(&self.matrix.weight) {
            c.iter_mut().zip(w).for_each(|(a, b)| *a /= b);
        }
        self.from_star(&y)
    }

    /// Discrete quadratic form `<E u, u>`.
    pub fn form(&self, u: &GraphFunction<f64>) -> f64 {
        let x = self.to_star(u);
        let y = self.matrix.matvec(&x);
        y.vertex * x.vertex
            + y.chains
                .iter()
                .zip(&x.chains)
                .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>())
                .sum::<f64>()
    }

    /// Number of eigenvalues strictly below `mu`.
    pub fn count_below(&self, mu: f64) -> usize {
        self.matrix.inertia(mu, None)
    }

    fn residual(&self, lambda: f64, x: &StarVec) -> f64 {
        let s = &self.matrix;
        let mut r = s.matvec(x);
        r.axpy(-lambda, &s.weighted(x));
        // W^{-1}-norm of the residual over the W-norm of x.
        let mut rr = r.vertex * r.vertex / s.vertex_weight;
        for (c, w) in r.chains.iter().zip(&s.weight) {
            rr += c.iter().zip(w).map(|(a, b)| a * a / b).sum::<f64>();
        }
        rr.sqrt() / x.dot_weighted(x, s).sqrt()
    }

    /// The `k` smallest eigenvalues lying below `edge - 5 h^2`, eigenvectors,
    /// Morse index, and kernel flag.
    pub fn spectrum_below_edge(&self, k: usize) -> Result<SpectralReport> {
        if k == 0 {
            return invalid("ask for at least one eigenvalue");
        }
        let h = self.grid.h;
        let edge = self.grid.graph.essential_edge();
        let bound = self.count_below(edge - 5.0 * h * h).min(k);
        let thr = self.kernel_threshold();
        let mut eigenvalues = Vec::with_capacity(bound);
        let mut residuals = Vec::with_capacity(bound);
        let mut eigenvectors = Vec::with_capacity(bound);
        for j in 0..bound {
            let lam = self.matrix.eigenvalue(j, None, 1e-15);
            let v = self.matrix.eigenvector(lam)?;
            let res = self.residual(lam, &v);
            if !(res < 1e-8) {
                return Err(Error::Numerical(format!(
                    "eigenpair {j} (lambda = {lam}) has residual {res:e}"
                )));
            }
            eigenvalues.push(lam);
            residuals.push(res);
            eigenvectors.push(self.from_star(&v));
        }
        Ok(SpectralReport {
            morse_index: self.count_below(-thr),
            kernel_detected: self.count_below(thr) != self.count_below(-thr),
            kernel_threshold: thr,
            essential_edge: edge,
            eigenvalues,
            residuals,
            eigenvectors,
        })
    }

    /// Solves `E psi = rhs`.
    pub fn solve_resolvent_at_zero(&self, rhs: &GraphFunction<f64>) -> Result<GraphFunction<f64>> {
        if !rhs.grid.same_shape(&self.grid) {
            return invalid("right-hand side on a different grid");
        }
        let thr = self.kernel_threshold();
        if self.count_below(thr) != self.count_below(-thr) {
            return Err(Error::Singular("operator has a (near) kernel".into()));
        }
        let b = self.matrix.weighted(&self.to_star(rhs));
        let x = self.matrix.solve(0.0, &b)?;
        let r = self.residual_solve(&x, &b);
        if !(r < 1e-10) {
            return Err(Error::Numerical(format!("solve residual {r:e}")));
        }
        Ok(self.from_star(&x))
    }

    fn residual_solve(&self, x: &StarVec, b: &StarVec) -> f64 {
        let mut r = self.matrix.matvec(x);
        r.axpy(-1.0, b);
        let nr = r
            .vertex
            .abs()
            .max(r.chains.iter().flatten().fold(0.0, |a, v| a.max(v.abs())));
        let nb = b
            .vertex
            .abs()
            .max(b.chains.iter().flatten().fold(0.0, |a, v| a.max(v.abs())));
        if nb == 0.0 {
            nr
        } else {
            nr / nb
        }
    }

    /// The reduced operator `F = Q E Q` on the complement of `phi`.
    pub fn reduced(&self, phi: &GraphFunction<f64>) -> Result<ReducedOperator<'_>> {
        let nrm = phi.norm();
        if !(nrm > 0.0) {
            return invalid("projection direction must be nonzero");
        }
        let mut unit = self.to_star(phi);
        unit.scale(1.0 / nrm);
        Ok(ReducedOperator {
            op: self,
            border: self.matrix.weighted(&unit),
            unit: self.from_star(&unit),
        })
    }
}

/// `F u = E u - <E u, phi> phi / |phi|^2` restricted to `[phi]^⊥`, represented
/// through the bordered pencil rather than as a dense matrix.
#[derive(Clone, Debug)]
pub struct ReducedOperator<'a> {
    op: &'a SchrodingerOperator,
    border: StarVec,
    unit: GraphFunction<f64>,
}

impl ReducedOperator<'_> {
    fn project(&self, u: &GraphFunction<f64>) -> Result<GraphFunction<f64>> {
        let c = inner_product(u, &self.unit)?.re;
        u.zip_with(&self.unit, |a, b| a - c * b)
    }

    /// `Q E Q u`.
    pub fn apply(&self, u: &GraphFunction<f64>) -> Result<GraphFunction<f64>> {
        let v = self.op.apply(&self.project(u)?);
        self.project(&v)
    }

    /// Number of eigenvalues of `F` below `mu` on `[phi]^⊥`.
    pub fn count_below(&self, mu: f64) -> usize {
        self.op.matrix.inertia(mu, Some(&self.border)).saturating_sub(1)
    }

    /// `n(F)`, counting eigenvalues below minus the kernel threshold.
    pub fn morse_index(&self) -> usize {
        self.count_below(-self.op.kernel_threshold())
    }

    pub fn eigenvalues(&self, k: usize) -> Vec<f64> {
        (0..k)
            .map(|j| self.op.matrix.eigenvalue(j, Some(&self.border), 1e-14))
            .collect()
    }
}

/// `(Z, Omega(Z))` with `Omega` the second eigenvalue of the operator built by
/// `factory`; `None` when fewer than two eigenvalues lie below the edge.
pub fn perturbation_scan(
    zs: &[f64],
    factory: impl Fn(f64) -> Result<SchrodingerOperator> + Sync,
) -> Vec<(f64, Result<Option<f64>>)> {
    use rayon::prelude::*;
    zs.par_iter()
        .map(|&z| {
            (
                z,
                factory(z).and_then(|op| op.spectrum_below_edge(2)).map(|r| r.omega()),
            )
        })
        .collect()
}

/// Cosine similarity `|<u, v>| / (|u| |v|)`.
pub fn cosine_similarity(u: &GraphFunction<f64>, v: &GraphFunction<f64>) -> Result<f64> {
    Ok(inner_product(u, v)?.re.abs() / (u.norm() * v.norm()))
}

/// For `u = phi' g` vanishing at the vertex, the two sides of
/// `<(-d^2 + 1 - 2 phi) u, u> = sum ∫ (phi')^2 (g')^2`, the left from the
/// discrete form and the right by midpoint quadrature.
pub fn factorization_sides(
    op: &SchrodingerOperator,
    dphi: impl Fn(usize, f64) -> f64,
    g: impl Fn(usize, f64) -> f64,
    dg: impl Fn(usize, f64) -> f64,
) -> (f64, f64) {
    let grid = &op.grid;
    let u = GraphFunction::from_fn(grid, |e, x| if x == 0.0 { 0.0 } else { dphi(e, x) * g(e, x) });
    let lhs = op.form(&u);
    let h = grid.h;
    let mut rhs = 0.0;
    for e in 0..grid.edge_count() {
        let sg = grid.graph.side(e).sign();
        for k in 0..grid.n {
            let x = sg * (k as f64 + 0.5) * h;
            rhs += h * (dphi(e, x) * dg(e, x)).powi(2);
        }
    }
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_grid, StarGraph};
    use crate::profiles::make_profile;

    fn op_for(z: f64, l: f64, n: usize) -> SchrodingerOperator {
        let grid = build_grid(StarGraph::two_half_lines(), l, n).unwrap();
        let p = make_profile(z, 1.0, 1.0).unwrap();
        let phi = GraphFunction::from_fn(&grid, |_, x| p.value(x));
        assemble(&grid, VertexKind::Delta(z), Some(&phi)).unwrap()
    }

    #[test]
    fn free_laplacian_on_two_half_lines() {
        // -u'' + 1 with Dirichlet at ±L is the interval problem of length 2L.
        let grid = build_grid(StarGraph::two_half_lines(), 5.0, 50).unwrap();
        let op = assemble(&grid, VertexKind::Kirchhoff, None).unwrap();
        let h = grid.h;
        let m = 2 * grid.n;
        for j in 0..4 {
            let exact = 1.0 + (2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / m as f64).cos()) / (h * h);
            assert!((op.matrix.eigenvalue(j, None, 1e-15) - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn poschl_teller_levels() {
        let grid = build_grid(StarGraph::two_half_lines(), 30.0, 600).unwrap();
        let p = make_profile(0.0, 1.0, 1.0).unwrap();
        let phi = GraphFunction::from_fn(&grid, |_, x| p.value(x));
        let op = assemble(&grid, VertexKind::Kirchhoff, Some(&phi)).unwrap();
        let r = op.spectrum_below_edge(5).unwrap();
        assert_eq!(r.eigenvalues.len(), 3);
        for (a, b) in r.eigenvalues.iter().zip([-1.25, 0.0, 0.75]) {
            assert!((a - b).abs() < 2e-2, "{a} vs {b}");
        }
    }

    #[test]
    fn morse_index_sign_pattern() {
        for (z, want) in [(0.5, 2), (-0.5, 1)] {
            let r = op_for(z, 30.0, 600).spectrum_below_edge(3).unwrap();
            assert_eq!(r.morse_index, want, "Z = {z}: {:?}", r.eigenvalues);
            assert!(!r.kernel_detected);
        }
    }

    #[test]
    fn reduced_operator_projection() {
        let op = op_for(1.0, 30.0, 600);
        let p = make_profile(1.0, 1.0, 1.0).unwrap();
        let phi = GraphFunction::from_fn(&op.grid, |_, x| p.value(x));
        let f = op.reduced(&phi).unwrap();
        assert_eq!(f.morse_index(), 1);
        let v = GraphFunction::from_fn(&op.grid, |e, x| {
            if x.abs() >= 30.0 {
                0.0
            } else {
                (x + e as f64).sin() * (-0.1 * x * x).exp()
            }
        });
        let fv = f.apply(&v).unwrap();
        let c = inner_product(&fv, &phi).unwrap().re;
        assert!(c.abs() < 1e-10 * fv.norm() * phi.norm(), "{c}");
    }

    #[test]
    fn solve_rejects_kernel() {
        let grid = build_grid(StarGraph::two_half_lines(), 30.0, 600).unwrap();
        let p = make_profile(0.0, 1.0, 1.0).unwrap();
        let phi = GraphFunction::from_fn(&grid, |_, x| p.value(x));
        let op = assemble(&grid, VertexKind::Kirchhoff, Some(&phi)).unwrap();
        assert!(matches!(op.solve_resolvent_at_zero(&phi), Err(Error::Singular(_))));
        let zero = GraphFunction::zeros(&grid);
        let op1 = op_for(1.0, 30.0, 600);
        assert_eq!(op1.solve_resolvent_at_zero(&zero).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn full_delta_sum_needs_balanced() {
        let grid = build_grid(StarGraph::uniform(2, 1, 1.0, -1.0).unwrap(), 10.0, 100).unwrap();
        assert!(assemble(&grid, VertexKind::FullDeltaSum(1.0), None).is_err());
        assert!(assemble(&grid, VertexKind::Delta(1.0), None).is_ok());
    }
}
