//! Closed-form tail and bump profiles continuous at the vertex.
//!
//! On the positive half-line the profile is
//! `phi(x) = (3 omega / 2) sech^2(k x - p)` with `k = sqrt(omega / alpha) / 2`
//! and `p = atanh(Z sqrt(alpha) / (2 sqrt(omega)))`; the negative side is the
//! mirror image.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{GraphFunction, GraphGrid, Side, StarGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    Tail,
    Bump,
    HalfSoliton,
}

/// `-(3b/2) sech^2(sqrt(-b/a) x / 2 + p)`, the decaying soliton of
/// `a u'' + b u + u^2 = 0`.
pub fn soliton(x: f64, a: f64, b: f64, p: f64) -> Result<f64> {
    if a == 0.0 || !(b / a < 0.0) {
        return invalid(format!("no decaying soliton for a={a}, b={b}"));
    }
    let c = (0.5 * (-b / a).sqrt() * x + p).cosh();
    Ok(-1.5 * b / (c * c))
}

/// Derivatives 0..=3 of `sech^2` at `u`.
fn sech2_derivs(u: f64) -> [f64; 4] {
    let t = u.tanh();
    let c = u.cosh();
    let s = 1.0 / (c * c);
    [
        s,
        -2.0 * s * t,
        4.0 * s * t * t - 2.0 * s * s,
        -8.0 * s * t * t * t + 16.0 * s * s * t,
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub z: f64,
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub kind: ProfileKind,
    /// `sqrt(omega / alpha) / 2`.
    pub k: f64,
    /// `Z sqrt(alpha) / (2 sqrt(omega))`, the tanh of the shift.
    pub t: f64,
    pub shift: f64,
}

pub fn make_profile(z: f64, alpha: f64, omega: f64) -> Result<Profile> {
    if !(alpha > 0.0) || !(omega > 0.0) || !z.is_finite() {
        return invalid(format!("need alpha, omega > 0 (alpha={alpha}, omega={omega}, Z={z})"));
    }
    if !(omega / alpha > 0.25 * z * z) {
        return invalid(format!(
            "no profile: omega/alpha = {} must exceed Z^2/4 = {}",
            omega / alpha,
            0.25 * z * z
        ));
    }
    let t = z * alpha.sqrt() / (2.0 * omega.sqrt());
    let kind = if z < 0.0 {
        ProfileKind::Tail
    } else if z > 0.0 {
        ProfileKind::Bump
    } else {
        ProfileKind::HalfSoliton
    };
    Ok(Profile {
        z,
        alpha,
        beta: -omega,
        omega,
        kind,
        k: 0.5 * (omega / alpha).sqrt(),
        t,
        shift: t.atanh(),
    })
}

impl Profile {
    /// `d^j phi_+ / dx^j` at `s >= 0`, `j = 0..=3`.
    pub fn plus_derivs(&self, s: f64) -> [f64; 4] {
        let f = sech2_derivs(self.k * s - self.shift);
        let a = 1.5 * self.omega;
        [
            a * f[0],
            a * self.k * f[1],
            a * self.k * self.k * f[2],
            a * self.k.powi(3) * f[3],
        ]
    }

    /// One-sided derivative of order `d` at the signed coordinate `x` on the
    /// given side (`x = 0` gives the trace at `0-` or `0+`).
    pub fn derivative(&self, side: Side, x: f64, d: usize) -> f64 {
        let s = side.sign() * x;
        let v = self.plus_derivs(s)[d];
        match side {
            Side::Plus => v,
            Side::Minus if d % 2 == 1 => -v,
            Side::Minus => v,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let side = if x < 0.0 { Side::Minus } else { Side::Plus };
        self.derivative(side, x, 0)
    }

    /// `psi = -d phi / d omega` (the shift depends on omega too) on the
    /// positive half-line at `s >= 0`.
    pub fn psi_plus(&self, s: f64) -> f64 {
        let u = self.k * s - self.shift;
        let f = sech2_derivs(u);
        let dk = self.k / (2.0 * self.omega);
        let dshift = -self.t / (2.0 * self.omega * (1.0 - self.t * self.t));
        -(1.5 * f[0] + 1.5 * self.omega * f[1] * (s * dk - dshift))
    }

    pub fn psi(&self, x: f64) -> f64 {
        self.psi_plus(x.abs())
    }

    /// `||phi||^2` over both half-lines.
    pub fn mass(&self) -> f64 {
        let t = self.t;
        9.0 * self.alpha.sqrt() * self.omega.powf(1.5) * (2.0 / 3.0 + t - t.powi(3) / 3.0)
    }

    /// `d ||phi||^2 / d omega`; `<psi, phi> = -mass_derivative / 2`.
    pub fn mass_derivative(&self) -> f64 {
        let t = self.t;
        9.0 * self.alpha.sqrt()
            * self.omega.sqrt()
            * (1.5 * (2.0 / 3.0 + t - t.powi(3) / 3.0) - 0.5 * t * (1.0 - t * t))
    }

    /// `alpha phi'' - omega phi + phi^2` at the signed coordinate `x`.
    pub fn stationarity_residual(&self, x: f64) -> f64 {
        let d = self.plus_derivs(x.abs());
        self.alpha * d[2] - self.omega * d[0] + d[0] * d[0]
    }

    /// `alpha phi''' + beta phi' + 2 phi phi'`, i.e. `-L phi'` up to sign;
    /// vanishes identically for a stationary profile.
    pub fn derivative_annihilation(&self, x: f64) -> f64 {
        let d = self.plus_derivs(x.abs());
        self.alpha * d[3] + self.beta * d[1] + 2.0 * d[0] * d[1]
    }

    pub fn sample(&self, grid: &GraphGrid) -> GraphFunction<f64> {
        GraphFunction::from_fn(grid, |_, x| self.value(x))
    }

    pub fn sample_psi(&self, grid: &GraphGrid) -> GraphFunction<f64> {
        GraphFunction::from_fn(grid, |_, x| self.psi(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexResiduals {
    pub continuity: f64,
    pub first: f64,
    pub second: f64,
}

impl VertexResiduals {
    pub fn max(&self) -> f64 {
        self.continuity.max(self.first).max(self.second)
    }
}

/// The three vertex conditions of the Airy domain evaluated on the closed
/// forms: `u(0-) = u(0+)`, `u'(0+) - u'(0-) = Z u(0-)`,
/// `u''(0+) - u''(0-) = Z^2/2 u(0-) + Z u'(0-)`.
pub fn check_vertex_conditions(p: &Profile) -> VertexResiduals {
    let tm = |d| p.derivative(Side::Minus, 0.0, d);
    let tp = |d| p.derivative(Side::Plus, 0.0, d);
    let z = p.z;
    VertexResiduals {
        continuity: (tm(0) - tp(0)).abs(),
        first: (tp(1) - tm(1) - z * tm(0)).abs(),
        second: (tp(2) - tm(2) - 0.5 * z * z * tm(0) - z * tm(1)).abs(),
    }
}

/// `psi = -d phi / d omega` by a central difference in omega; the oracle for
/// [`Profile::psi`].
pub fn psi_by_difference(p: &Profile, x: f64, step: f64) -> Result<f64> {
    let hi = make_profile(p.z, p.alpha, p.omega + step)?;
    let lo = make_profile(p.z, p.alpha, p.omega - step)?;
    Ok(-(hi.value(x) - lo.value(x)) / (2.0 * step))
}

/// Profiles on a balanced star, one per edge pair, sharing the vertex value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalancedProfile {
    pub graph: StarGraph,
    pub z: f64,
    pub pairs: Vec<Profile>,
}

pub fn make_balanced_profile(graph: &StarGraph, z: f64, alphas: &[f64], betas: &[f64]) -> Result<BalancedProfile> {
    if !graph.balanced() {
        return invalid("balanced profile needs m == n");
    }
    let n = graph.n;
    if alphas.len() != n || betas.len() != n {
        return invalid(format!("expected {n} pair coefficients"));
    }
    for j in 0..n {
        let (a, b) = graph.pair(j);
        if graph.alpha[a] != alphas[j]
            || graph.alpha[b] != alphas[j]
            || graph.beta[a] != betas[j]
            || graph.beta[b] != betas[j]
        {
            return invalid(format!("edge pair {j} coefficients disagree with the graph"));
        }
    }
    let sum: f64 = alphas.iter().sum();
    if (sum - n as f64).abs() > 1e-12 * n as f64 {
        return invalid(format!("constraint sum(alpha) = n violated: sum = {sum}, n = {n}"));
    }
    let c0 = betas[0] + 0.25 * z * z * alphas[0];
    for j in 1..n {
        let c = betas[j] + 0.25 * z * z * alphas[j];
        if (c - c0).abs() > 1e-12 * (1.0 + c0.abs()) {
            return invalid(format!(
                "constraint beta_i + Z^2 alpha_i / 4 constant violated at pair {j}: {c} vs {c0}"
            ));
        }
    }
    let pairs = alphas
        .iter()
        .zip(betas)
        .map(|(&a, &b)| make_profile(z, a, -b))
        .collect::<Result<Vec<_>>>()?;
    Ok(BalancedProfile {
        graph: graph.clone(),
        z,
        pairs,
    })
}

/// The stationary profile on a balanced star. With one pair both half-lines
/// must carry the same coefficients; with several pairs the balance
/// constraints of [`make_balanced_profile`] apply.
pub fn stationary_profile(graph: &StarGraph, z: f64) -> Result<BalancedProfile> {
    if !graph.balanced() {
        return invalid("stationary profiles need a balanced star (m == n)");
    }
    let alphas: Vec<f64> = (0..graph.n).map(|j| graph.alpha[graph.pair(j).1]).collect();
    let betas: Vec<f64> = (0..graph.n).map(|j| graph.beta[graph.pair(j).1]).collect();
    if graph.n == 1 {
        if graph.alpha[0] != graph.alpha[1] || graph.beta[0] != graph.beta[1] {
            return invalid("both half-lines need equal coefficients");
        }
        return Ok(BalancedProfile::replicated(&make_profile(z, alphas[0], -betas[0])?, 1));
    }
    make_balanced_profile(graph, z, &alphas, &betas)
}

impl BalancedProfile {
    /// The same profile on every one of `n` pairs.
    pub fn replicated(p: &Profile, n: usize) -> Self {
        Self {
            graph: StarGraph::uniform(n, n, p.alpha, p.beta).expect("valid"),
            z: p.z,
            pairs: vec![*p; n],
        }
    }

    pub fn edge_profile(&self, e: usize) -> &Profile {
        let m = self.graph.m;
        &self.pairs[if e < m { e } else { e - m }]
    }

    pub fn sample(&self, grid: &GraphGrid) -> GraphFunction<f64> {
        GraphFunction::from_fn(grid, |e, x| self.edge_profile(e).value(x))
    }

    pub fn sample_psi(&self, grid: &GraphGrid) -> GraphFunction<f64> {
        GraphFunction::from_fn(grid, |e, x| self.edge_profile(e).psi(x))
    }

    /// Worst pairwise vertex residual, the spread of vertex values across all
    /// edges, and the alpha-weighted flux condition
    /// `sum alpha_i (u'_{i+} - u'_{i-}) = Z n u(0)`.
    pub fn residuals(&self) -> (f64, f64, f64) {
        let pair = self
            .pairs
            .iter()
            .map(|p| check_vertex_conditions(p).max())
            .fold(0.0, f64::max);
        let vals: Vec<f64> = self.pairs.iter().map(|p| p.derivative(Side::Plus, 0.0, 0)).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let flux: f64 = self
            .pairs
            .iter()
            .map(|p| p.alpha * (p.derivative(Side::Plus, 0.0, 1) - p.derivative(Side::Minus, 0.0, 1)))
            .sum();
        let n = self.pairs.len() as f64;
        (pair, hi - lo, (flux - self.z * n * vals[0]).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn soliton_values() {
        assert_abs_diff_eq!(soliton(0.0, 1.0, -1.0, 0.0).unwrap(), 1.5, epsilon = 1e-15);
        assert!(soliton(40.0, 1.0, -1.0, 0.0).unwrap() < 1e-12);
        assert_abs_diff_eq!(soliton(0.0, 1.0, -2.5, 0.0).unwrap(), 3.75, epsilon = 1e-14);
        assert!(soliton(0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn bump_and_tail_traces() {
        let p = make_profile(1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.kind, ProfileKind::Bump);
        assert_abs_diff_eq!(p.value(0.0), 1.125, epsilon = 1e-14);
        assert_abs_diff_eq!(p.derivative(Side::Plus, 0.0, 1), 0.5625, epsilon = 1e-14);
        let q = make_profile(-1.0, 1.0, 1.0).unwrap();
        assert_eq!(q.kind, ProfileKind::Tail);
        let h = 1e-5;
        let fd = (-3.0 * q.value(0.0) + 4.0 * q.value(h) - q.value(2.0 * h)) / (2.0 * h);
        assert_abs_diff_eq!(q.derivative(Side::Plus, 0.0, 1), -0.5625, epsilon = 1e-14);
        assert_abs_diff_eq!(fd, -0.5625, epsilon = 1e-8);
        let z = make_profile(0.0, 1.0, 1.0).unwrap();
        assert_eq!(z.kind, ProfileKind::HalfSoliton);
        assert_eq!(z.derivative(Side::Plus, 0.0, 1), 0.0);
        assert!(make_profile(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn psi_matches_difference() {
        for z in [-1.5, -1.0, 0.0, 0.5, 1.0] {
            let p = make_profile(z, 1.0, 1.0).unwrap();
            for x in [-3.0, -0.2, 0.0, 0.7, 4.0] {
                let d = psi_by_difference(&p, x, 1e-5).unwrap();
                assert!((p.psi(x) - d).abs() < 1e-7, "Z={z} x={x}");
            }
        }
    }

    #[test]
    fn mass_derivative_closed_form() {
        for z in [-1.0, 0.0, 1.0] {
            let p = make_profile(z, 1.0, 1.0).unwrap();
            assert_abs_diff_eq!(p.mass_derivative(), 9.0 * (1.0 + z / 2.0), epsilon = 1e-13);
            let hi = make_profile(z, 1.0, 1.0 + 1e-5).unwrap().mass();
            let lo = make_profile(z, 1.0, 1.0 - 1e-5).unwrap().mass();
            assert_abs_diff_eq!((hi - lo) / 2e-5, p.mass_derivative(), epsilon = 1e-6);
        }
        assert_abs_diff_eq!(make_profile(0.0, 1.0, 1.0).unwrap().mass(), 6.0, epsilon = 1e-14);
    }

    #[test]
    fn balanced_constraints() {
        let g = StarGraph::balanced_pairs(&[1.0, 1.0], &[-1.0, -1.0]).unwrap();
        let b = make_balanced_profile(&g, 1.0, &[1.0, 1.0], &[-1.0, -1.0]).unwrap();
        let (pair, spread, flux) = b.residuals();
        assert!(pair < 1e-12 && spread < 1e-12 && flux < 1e-12);

        let beta2 = -1.0 + 0.25 * 0.5 - 0.25 * 1.5;
        let g = StarGraph::balanced_pairs(&[0.5, 1.5], &[-1.0, beta2]).unwrap();
        let b = make_balanced_profile(&g, 1.0, &[0.5, 1.5], &[-1.0, beta2]).unwrap();
        let (pair, spread, flux) = b.residuals();
        assert!(pair < 1e-12 && spread < 1e-12 && flux < 1e-12, "{pair} {spread} {flux}");

        let g = StarGraph::balanced_pairs(&[0.5, 1.5], &[-1.0, -1.0]).unwrap();
        let err = make_balanced_profile(&g, 1.0, &[0.5, 1.5], &[-1.0, -1.0]).unwrap_err();
        assert!(err.to_string().contains("constant"));

        let g = StarGraph::balanced_pairs(&[1.0, 1.0, 1.0], &[-1.0, -1.0, -1.0]).unwrap();
        let b = make_balanced_profile(&g, 0.0, &[1.0; 3], &[-1.0; 3]).unwrap();
        assert!(b.residuals().2 == 0.0);
    }
}
