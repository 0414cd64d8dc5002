//! Resolvent of the Airy generator `A_Z = d^3/dx^3 + beta d/dx` (`beta = ±1`)
//! with the delta-type vertex conditions, built from explicit half-line
//! Green's functions of `lambda + d/dx + d^3/dx^3` and a 3x3 boundary system.
//!
//! Spatial reflection `x -> -x` (swapping the two edges of a pair) maps
//! `A_Z` to `-A_Z` and preserves its domain, so
//! `R(lambda; A_Z) = Refl (lambda + A_Z)^{-1} Refl`.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{GraphFunction, GraphGrid};
use crate::linalg::fd_weights;

type C = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BetaSign {
    Plus,
    Minus,
}

impl BetaSign {
    pub fn value(self) -> f64 {
        match self {
            BetaSign::Plus => 1.0,
            BetaSign::Minus => -1.0,
        }
    }

    pub fn from_beta(beta: f64) -> Result<Self> {
        if beta == 1.0 {
            Ok(BetaSign::Plus)
        } else if beta == -1.0 {
            Ok(BetaSign::Minus)
        } else {
            invalid(format!("the Airy resolvent is implemented for beta = ±1, got {beta}"))
        }
    }
}

/// Roots of `gamma^3 + b gamma + lambda = 0` with `Re g1 < 0 < Re g2, Re g3`
/// and `Im g2 >= Im g3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootTriple {
    pub lambda: C,
    pub beta_sign: BetaSign,
    pub gamma: [C; 3],
}

impl RootTriple {
    /// `(g1 - g2)(g1 - g3)(g2 - g3)`.
    pub fn delta(&self) -> C {
        let [g1, g2, g3] = self.gamma;
        (g1 - g2) * (g1 - g3) * (g2 - g3)
    }

    /// Elementary symmetric functions, expected `(0, b, -lambda)`.
    pub fn vieta(&self) -> [C; 3] {
        let [g1, g2, g3] = self.gamma;
        [g1 + g2 + g3, g1 * g2 + g1 * g3 + g2 * g3, g1 * g2 * g3]
    }

    pub fn max_residual(&self) -> f64 {
        let b = self.beta_sign.value();
        self.gamma
            .iter()
            .map(|g| (g * g * g + b * g + self.lambda).norm())
            .fold(0.0, f64::max)
    }
}

pub fn characteristic_roots(lambda: C, beta_sign: BetaSign) -> Result<RootTriple> {
    if !(lambda.re > 0.0) || !lambda.is_finite() {
        return invalid(format!("root ordering needs Re lambda > 0, got {lambda}"));
    }
    let p = beta_sign.value();
    let q = lambda;
    // Cardano for t^3 + p t + q: t = u - p / (3u), u^3 = -q/2 ± sqrt(q^2/4 + p^3/27).
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let a = -q / 2.0 + disc;
    let b = -q / 2.0 - disc;
    let u3 = if a.norm() >= b.norm() { a } else { b };
    let u = u3.powf(1.0 / 3.0);
    let w = C::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut roots = [C::new(0.0, 0.0); 3];
    let mut uk = u;
    for r in roots.iter_mut() {
        *r = uk - p / (3.0 * uk);
        uk *= w;
    }
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = *r * *r * *r + p * *r + q;
            let df = 3.0 * *r * *r + p;
            if df.norm() > 0.0 {
                *r -= f / df;
            }
        }
    }
    roots.sort_by(|x, y| x.re.total_cmp(&y.re));
    let (mut g2, mut g3) = (roots[1], roots[2]);
    if g3.im > g2.im {
        std::mem::swap(&mut g2, &mut g3);
    }
    let t = RootTriple {
        lambda,
        beta_sign,
        gamma: [roots[0], g2, g3],
    };
    if !(t.gamma[0].re < 0.0 && g2.re > 0.0 && g3.re > 0.0) {
        return Err(Error::Numerical(format!("root sign pattern violated: {:?}", t.gamma)));
    }
    Ok(t)
}

/// `(coefficient, x-exponent, zeta-exponent)` for one exponential term.
type Term = (C, C, C);

fn green_terms_plus(r: &RootTriple, below: bool) -> Vec<Term> {
    let [g1, g2, g3] = r.gamma;
    let d = r.delta();
    let mut t = vec![((g3 - g1) / d, g1, g2), ((g1 - g2) / d, g1, g3)];
    if below {
        t.push(((g2 - g3) / d, g1, g1));
    } else {
        t.push(((g1 - g3) / d, g2, g2));
        t.push(((g2 - g1) / d, g3, g3));
    }
    t
}

fn green_terms_minus(r: &RootTriple, below: bool) -> Vec<Term> {
    let [g1, g2, g3] = r.gamma;
    let d = -r.delta();
    let mut t = vec![((g1 - g3) / d, g2, g1), ((g2 - g1) / d, g3, g1)];
    if below {
        t.push(((g3 - g2) / d, g1, g1));
    } else {
        t.push(((g3 - g1) / d, g2, g2));
        t.push(((g1 - g2) / d, g3, g3));
    }
    t
}

fn eval_terms(terms: &[Term], x: f64, zeta: f64, order: u32) -> C {
    terms
        .iter()
        .map(|(c, gx, gz)| c * gx.powu(order) * (gx * x - gz * zeta).exp())
        .sum()
}

/// `x`-derivative of order `0..=2` of the Green's function on `[0, inf)`:
/// `g(0) = 0`, decay at infinity, unit jump of `g''` at `x = zeta`.
/// At `x == zeta` the branch `zeta <= x` is used; `one_sided_below` selects
/// the other one.
pub fn green_plus_derivative(x: f64, zeta: f64, roots: &RootTriple, order: u32, one_sided_below: bool) -> C {
    let below = zeta <= x && !(one_sided_below && zeta == x);
    eval_terms(&green_terms_plus(roots, below), x, zeta, order)
}

pub fn green_plus(x: f64, zeta: f64, roots: &RootTriple) -> C {
    green_plus_derivative(x, zeta, roots, 0, false)
}

/// Green's function on `(-inf, 0]`: `g(0-) = g'(0-) = 0`, decay at `-inf`,
/// unit jump of `g''` at `x = zeta`.
pub fn green_minus_derivative(x: f64, zeta: f64, roots: &RootTriple, order: u32, one_sided_below: bool) -> C {
    let below = zeta <= x && !(one_sided_below && zeta == x);
    eval_terms(&green_terms_minus(roots, below), x, zeta, order)
}

pub fn green_minus(x: f64, zeta: f64, roots: &RootTriple) -> C {
    green_minus_derivative(x, zeta, roots, 0, false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySystem {
    pub matrix: [[C; 3]; 3],
    pub det_direct: C,
    pub det_closed: C,
}

pub fn boundary_matrix(z: f64, roots: &RootTriple) -> Result<BoundarySystem> {
    let [g1, g2, g3] = roots.gamma;
    let one = C::new(1.0, 0.0);
    let h = 0.5 * z * z;
    let matrix = [
        [one, -one, -one],
        [g1, -(g2 + z), -(g3 + z)],
        [g1 * g1, -(g2 * g2 + h + z * g2), -(g3 * g3 + h + z * g3)],
    ];
    let m = &matrix;
    let det_direct = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let det_closed = (g3 - g2) * (h + z * (g2 + g3 - g1) + (g1 - g2) * (g1 - g3));
    if det_direct.norm() < 1e-12 {
        return Err(Error::Singular(format!("boundary system determinant {det_direct}")));
    }
    Ok(BoundarySystem {
        matrix,
        det_direct,
        det_closed,
    })
}

/// `∫_0^1 e^{-z t} t^j dt` for `j = 0..=3`.
fn moments(z: C) -> [C; 4] {
    let mut mu = [C::new(0.0, 0.0); 4];
    if z.norm() < 1.0 {
        let mut term = C::new(1.0, 0.0);
        for n in 0..40 {
            for (j, m) in mu.iter_mut().enumerate() {
                *m += term / (n + j + 1) as f64;
            }
            term *= -z / (n + 1) as f64;
        }
    } else {
        let e = (-z).exp();
        mu[0] = (1.0 - e) / z;
        for j in 1..4 {
            mu[j] = (j as f64 * mu[j - 1] - e) / z;
        }
    }
    mu
}

/// `∫_0^1 e^{-z t} l_i(t) dt` for the cubic Lagrange basis on nodes `ts`.
fn cell_weights(z: C, ts: [f64; 4]) -> [C; 4] {
    let mu = moments(z);
    let mut out = [C::new(0.0, 0.0); 4];
    for i in 0..4 {
        // Monomial coefficients of prod_{j != i} (t - t_j) / (t_i - t_j).
        let mut poly = [1.0, 0.0, 0.0, 0.0];
        let mut denom = 1.0;
        let mut deg = 0;
        for j in 0..4 {
            if j == i {
                continue;
            }
            let mut next = [0.0; 4];
            for d in 0..=deg {
                next[d + 1] += poly[d];
                next[d] -= ts[j] * poly[d];
            }
            poly = next;
            deg += 1;
            denom *= ts[i] - ts[j];
        }
        out[i] = (0..4).map(|d| mu[d] * poly[d]).sum::<C>() / denom;
    }
    out
}

/// `F(s_k) = ∫_0^{s_k} e^{c (s_k - sigma)} f(sigma) dsigma` on the grid, by
/// product integration against local cubic interpolants. Stable for `Re c <= 0`.
fn forward_integral(c: C, f: &[C], h: f64) -> Vec<C> {
    let n = f.len() - 1;
    let decay = (c * h).exp();
    let mut cache: [Option<[C; 4]>; 4] = [None; 4];
    let mut out = vec![C::new(0.0, 0.0); n + 1];
    for k in 1..=n {
        let i0 = (k as isize - 2).clamp(0, n as isize - 3) as usize;
        let off = k - i0;
        let w = *cache[off].get_or_insert_with(|| {
            let ts = [0, 1, 2, 3].map(|j| off as f64 - j as f64);
            cell_weights(-c * h, ts)
        });
        let cell: C = (0..4).map(|j| w[j] * f[i0 + j]).sum();
        out[k] = decay * out[k - 1] + h * cell;
    }
    out
}

/// `B(s_k) = ∫_{s_k}^{s_N} e^{c (s_k - sigma)} f(sigma) dsigma`. Stable for `Re c >= 0`.
fn backward_integral(c: C, f: &[C], h: f64) -> Vec<C> {
    let n = f.len() - 1;
    let decay = (-c * h).exp();
    let mut cache: [Option<[C; 4]>; 4] = [None; 4];
    let mut out = vec![C::new(0.0, 0.0); n + 1];
    for k in (0..n).rev() {
        let i0 = (k as isize - 1).clamp(0, n as isize - 3) as usize;
        let off = k - i0;
        let w = *cache[off].get_or_insert_with(|| {
            let ts = [0, 1, 2, 3].map(|j| j as f64 - off as f64);
            cell_weights(c * h, ts)
        });
        let cell: C = (0..4).map(|j| w[j] * f[i0 + j]).sum();
        out[k] = decay * out[k + 1] + h * cell;
    }
    out
}

/// Solution of `(lambda + d/dx + d^3/dx^3) v = (p, q)` in the vertex domain for
/// one pair, with both halves sampled at distance `s_k = k h` from the vertex.
/// Returns `(v_-, v_+, [a0, alpha1, alpha2])`.
fn solve_pair(roots: &RootTriple, z: f64, p: &[C], q: &[C], h: f64) -> Result<(Vec<C>, Vec<C>, [C; 3])> {
    let [g1, g2, g3] = roots.gamma;
    let d = roots.delta();
    let n = q.len() - 1;
    // Positive half-line.
    let b2 = backward_integral(g2, q, h);
    let b3 = backward_integral(g3, q, h);
    let f1 = forward_integral(g1, q, h);
    let cq = (g3 - g1) * b2[0] + (g1 - g2) * b3[0];
    let ip1 = (g1 * cq + (g1 - g3) * g2 * b2[0] + (g2 - g1) * g3 * b3[0]) / d;
    let ip2 = (g1 * g1 * cq + (g1 - g3) * g2 * g2 * b2[0] + (g2 - g1) * g3 * g3 * b3[0]) / d;
    // Negative half-line, in s = -x.
    let bm1 = backward_integral(-g1, p, h);
    let fm2 = forward_integral(-g2, p, h);
    let fm3 = forward_integral(-g3, p, h);
    let dm = bm1[0];
    let im2 = -dm * ((g1 - g3) * g2 * g2 + (g2 - g1) * g3 * g3 + (g3 - g2) * g1 * g1) / d;

    let sys = boundary_matrix(z, roots)?;
    let a = Matrix3::from_fn(|i, j| sys.matrix[i][j]);
    let rhs = Vector3::new(C::new(0.0, 0.0), -ip1, im2 - ip2);
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("boundary system".into()))?;
    let (a0, al1, al2) = (sol[0], sol[1], sol[2]);

    let mut vp = vec![C::new(0.0, 0.0); n + 1];
    let mut vm = vec![C::new(0.0, 0.0); n + 1];
    for k in 0..=n {
        let s = k as f64 * h;
        let e1 = (g1 * s).exp();
        let e2 = (-g2 * s).exp();
        let e3 = (-g3 * s).exp();
        vp[k] = a0 * e1 + (e1 * cq + (g2 - g3) * f1[k] + (g1 - g3) * b2[k] + (g2 - g1) * b3[k]) / d;
        let im =
            -(((g1 - g3) * e2 + (g2 - g1) * e3) * dm + (g3 - g2) * bm1[k] + (g3 - g1) * fm2[k] + (g1 - g2) * fm3[k])
                / d;
        vm[k] = al1 * e2 + al2 * e3 + im;
    }
    Ok((vm, vp, [a0, al1, al2]))
}

#[derive(Clone, Debug)]
pub struct ResolventResult {
    pub v: GraphFunction<C>,
    /// `(a0, alpha1, alpha2)` per edge pair, for the reflected problem.
    pub coefficients: Vec<[C; 3]>,
    /// `|(lambda - A) v - w| / |w|` at interior nodes by high-order differences.
    pub residual: f64,
    /// Largest vertex-condition defect from one-sided difference traces.
    pub vertex_residual: f64,
}

fn check_balanced(grid: &GraphGrid) -> Result<()> {
    let g = &grid.graph;
    if !g.balanced() {
        return invalid("the Airy resolvent needs a balanced star");
    }
    if g.alpha.iter().any(|a| *a != 1.0) {
        return invalid("the Airy resolvent is implemented for alpha = 1");
    }
    Ok(())
}

/// `R(lambda; A_Z) w` without diagnostics.
pub fn resolvent_raw(
    w: &GraphFunction<C>,
    lambda: C,
    z: f64,
    beta_sign: BetaSign,
) -> Result<(GraphFunction<C>, Vec<[C; 3]>)> {
    let grid = &w.grid;
    check_balanced(grid)?;
    let roots = characteristic_roots(lambda, beta_sign)?;
    let m = grid.graph.m;
    let mut v = GraphFunction::zeros(grid);
    let mut coefficients = Vec::with_capacity(m);
    for j in 0..m {
        // Reflection swaps the two halves of the pair.
        let (p, q) = (&w.values[m + j], &w.values[j]);
        let (vm, vp, c) = solve_pair(&roots, z, p, q, grid.h)?;
        v.values[j] = vp;
        v.values[m + j] = vm;
        coefficients.push(c);
    }
    Ok((v, coefficients))
}

pub fn apply_resolvent(w: &GraphFunction<C>, lambda: C, z: f64, beta_sign: BetaSign) -> Result<ResolventResult> {
    let (v, coefficients) = resolvent_raw(w, lambda, z, beta_sign)?;
    let av = airy_apply(&v, beta_sign.value(), 5);
    let wn = w.norm();
    let g = &w.grid;
    let mut acc = 0.0;
    for e in 0..g.edge_count() {
        for k in 5..=g.n.saturating_sub(5) {
            let r = lambda * v.values[e][k] - av.values[e][k] - w.values[e][k];
            acc += g.h * r.norm_sqr();
        }
    }
    let residual = if wn > 0.0 { acc.sqrt() / wn } else { acc.sqrt() };
    let vertex_residual = vertex_defect(&v, z) / wn.max(1.0);
    Ok(ResolventResult {
        v,
        coefficients,
        residual,
        vertex_residual,
    })
}

/// `d^3 u/dx^3 + beta du/dx` on every edge by finite differences on
/// `2 * half + 1` nodes, centered in the interior and one-sided near ends.
pub fn airy_apply(u: &GraphFunction<C>, beta: f64, half: usize) -> GraphFunction<C> {
    let g = &u.grid;
    let n = g.n;
    let width = 2 * half + 1;
    let mut out = GraphFunction::zeros(g);
    let mut cache: Vec<Option<Vec<Vec<f64>>>> = vec![None; width];
    for e in 0..g.edge_count() {
        let sign = g.graph.side(e).sign();
        for k in 0..=n {
            let i0 = (k as isize - half as isize).clamp(0, (n + 1 - width) as isize) as usize;
            let pos = k - i0;
            let w = cache[pos].get_or_insert_with(|| {
                let nodes: Vec<f64> = (0..width).map(|i| (i as f64 - pos as f64) * g.h).collect();
                fd_weights(0.0, &nodes, 3)
            });
            let mut d1 = C::new(0.0, 0.0);
            let mut d3 = C::new(0.0, 0.0);
            for i in 0..width {
                let val = u.values[e][i0 + i];
                d1 += w[1][i] * val;
                d3 += w[3][i] * val;
            }
            // d/dx = sign * d/ds.
            out.values[e][k] = sign * (d3 + beta * d1);
        }
    }
    out
}

/// One-sided traces `(u, u', u'')` at the vertex in the edge's own `x`.
fn traces(u: &[C], h: f64, sign: f64) -> [C; 3] {
    let nodes: Vec<f64> = (0..8).map(|i| i as f64 * h).collect();
    let w = fd_weights(0.0, &nodes, 2);
    let mut t = [C::new(0.0, 0.0); 3];
    for (d, td) in t.iter_mut().enumerate() {
        *td = (0..8).map(|i| w[d][i] * u[i]).sum::<C>() * sign.powi(d as i32);
    }
    t
}

/// Largest defect of `u(0-) = u(0+)`, `u'(0+) - u'(0-) = Z u(0-)`,
/// `u''(0+) - u''(0-) = Z^2/2 u(0-) + Z u'(0-)` over the edge pairs.
pub fn vertex_defect(u: &GraphFunction<C>, z: f64) -> f64 {
    let g = &u.grid;
    let m = g.graph.m;
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let tm = traces(&u.values[j], g.h, -1.0);
        let tp = traces(&u.values[m + j], g.h, 1.0);
        let r0 = (tp[0] - tm[0]).norm();
        let r1 = (tp[1] - tm[1] - z * tm[0]).norm();
        let r2 = (tp[2] - tm[2] - 0.5 * z * z * tm[0] - z * tm[1]).norm();
        worst = worst.max(r0).max(r1).max(r2);
    }
    worst
}

/// Spatial reflection of a balanced graph function: edge `j` and `m + j` swap.
pub fn reflect(u: &GraphFunction<C>) -> GraphFunction<C> {
    let m = u.grid.graph.m;
    let mut out = u.clone();
    for j in 0..m {
        out.values.swap(j, m + j);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_grid, StarGraph};

    #[test]
    fn roots_at_two() {
        let r = characteristic_roots(C::new(2.0, 0.0), BetaSign::Plus).unwrap();
        let s7 = 7f64.sqrt();
        assert!((r.gamma[0] - C::new(-1.0, 0.0)).norm() < 1e-14);
        assert!((r.gamma[1] - C::new(0.5, s7 / 2.0)).norm() < 1e-14);
        assert!((r.gamma[2] - C::new(0.5, -s7 / 2.0)).norm() < 1e-14);
        let v = r.vieta();
        assert!(v[0].norm() < 1e-14 && (v[1] - 1.0).norm() < 1e-14 && (v[2] + 2.0).norm() < 1e-14);
        assert!(characteristic_roots(C::new(0.0, 1.0), BetaSign::Plus).is_err());
    }

    #[test]
    fn roots_complex_lambda() {
        for bs in [BetaSign::Plus, BetaSign::Minus] {
            let r = characteristic_roots(C::new(0.5, 3.0), bs).unwrap();
            assert!(r.max_residual() < 1e-12);
            assert!(r.gamma[0].re < 0.0 && r.gamma[1].re > 0.0 && r.gamma[2].re > 0.0);
        }
    }

    #[test]
    fn green_conditions() {
        let r = characteristic_roots(C::new(2.0, 0.0), BetaSign::Plus).unwrap();
        assert!(green_plus(0.0, 1.0, &r).norm() < 1e-15);
        let z = 1.3;
        let jump = green_plus_derivative(z, z, &r, 2, false) - green_plus_derivative(z, z, &r, 2, true);
        assert!((jump - 1.0).norm() < 1e-12);
        for d in 0..2 {
            let gap = green_plus_derivative(z, z, &r, d, false) - green_plus_derivative(z, z, &r, d, true);
            assert!(gap.norm() < 1e-14);
        }
        let z = -0.7;
        assert!(green_minus(0.0, z, &r).norm() < 1e-15);
        assert!(green_minus_derivative(0.0, z, &r, 1, false).norm() < 1e-14);
        let jump = green_minus_derivative(z, z, &r, 2, false) - green_minus_derivative(z, z, &r, 2, true);
        assert!((jump - 1.0).norm() < 1e-12);
    }

    #[test]
    fn green_solves_equation() {
        // lambda g + g' + g''' = 0 away from the diagonal.
        let r = characteristic_roots(C::new(1.0, 2.0), BetaSign::Plus).unwrap();
        let lam = r.lambda;
        for (x, zeta) in [(0.5, 1.0), (2.0, 1.0)] {
            let e = lam * green_plus(x, zeta, &r)
                + green_plus_derivative(x, zeta, &r, 1, false)
                + eval_terms(&green_terms_plus(&r, zeta <= x), x, zeta, 3);
            assert!(e.norm() < 1e-12);
        }
    }

    #[test]
    fn determinant_two_ways() {
        let r = characteristic_roots(C::new(2.0, 0.0), BetaSign::Plus).unwrap();
        let s = boundary_matrix(1.0, &r).unwrap();
        assert!((s.det_direct - s.det_closed).norm() < 1e-12);
        let s = boundary_matrix(0.0, &r).unwrap();
        let [g1, g2, g3] = r.gamma;
        assert!((s.det_direct - (g3 - g2) * (g1 - g2) * (g1 - g3)).norm() < 1e-12);
    }

    #[test]
    fn product_integration_is_exact_on_cubics() {
        let h = 0.1;
        let f: Vec<C> = (0..=30).map(|k| C::new((k as f64 * h).powi(3), 0.0)).collect();
        let c = C::new(-0.7, 0.4);
        let fw = forward_integral(c, &f, h);
        let bw = backward_integral(-c, &f, h);
        // Direct Simpson with many points as the reference.
        let exact = |a: f64, b: f64, s: f64, cc: C| {
            let m = 4000;
            let dx = (b - a) / m as f64;
            (0..=m)
                .map(|i| {
                    let x = a + i as f64 * dx;
                    let wgt = if i == 0 || i == m {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    wgt * (cc * (s - x)).exp() * x.powi(3)
                })
                .sum::<C>()
                * dx
                / 3.0
        };
        assert!((fw[17] - exact(0.0, 1.7, 1.7, c)).norm() < 1e-10);
        assert!((bw[4] - exact(0.4, 3.0, 0.4, -c)).norm() < 1e-10);
    }

    #[test]
    fn resolvent_of_gaussian() {
        let grid = build_grid(StarGraph::two_half_lines(), 20.0, 1000).unwrap();
        let w = GraphFunction::from_fn(&grid, |_, x| C::new((-(x.abs() - 3.0).powi(2)).exp(), 0.0));
        for (z, bs) in [(1.0, BetaSign::Plus), (-1.0, BetaSign::Minus), (0.0, BetaSign::Plus)] {
            let r = apply_resolvent(&w, C::new(2.0, 0.0), z, bs).unwrap();
            assert!(r.residual < 1e-6, "Z={z}: {}", r.residual);
            assert!(r.vertex_residual < 1e-6, "Z={z}: {}", r.vertex_residual);
            assert!(r.v.norm() <= w.norm() / 2.0 * (1.0 + 1e-6));
        }
        let zero = GraphFunction::zeros(&grid);
        let r = apply_resolvent(&zero, C::new(2.0, 0.0), 1.0, BetaSign::Plus).unwrap();
        assert_eq!(r.v.max_abs(), 0.0);
    }
}
