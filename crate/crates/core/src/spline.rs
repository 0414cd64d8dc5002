//! Galerkin discretization of third-order operators on one edge pair with
//! cubic C^2 B-splines whose vertex traces satisfy the delta-type
//! conditions exactly.
//!
//! On each half-line (distance `s` from the vertex) the basis is
//! `B_k(s) = B(s/h - k)`, `k = -1..=N-2`, so every function vanishes with its
//! first two derivatives at `s = L`. The three coefficients touching the
//! vertex are tied to three shared unknowns, the traces
//! `(u, u', u'')(0-)`; the plus side receives `L_Z` applied to them.

use crate::error::{invalid, Result};
use crate::linalg::{Band, BandLu};

const GAUSS_X: [f64; 6] = [
    -0.932_469_514_203_152,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GAUSS_W: [f64; 6] = [
    0.171_324_492_379_170_4,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691,
    0.467_913_934_572_691,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_4,
];

/// Cardinal cubic B-spline on `[-2, 2]` and its first three derivatives.
pub fn bspline(t: f64) -> [f64; 4] {
    let a = t.abs();
    let sg = t.signum();
    if a >= 2.0 {
        [0.0; 4]
    } else if a >= 1.0 {
        let r = 2.0 - a;
        [r * r * r / 6.0, -sg * r * r / 2.0, r, -sg]
    } else {
        [
            2.0 / 3.0 - a * a + a * a * a / 2.0,
            sg * (-2.0 * a + 1.5 * a * a),
            -2.0 + 3.0 * a,
            sg * 3.0,
        ]
    }
}

/// Background profile on one side in the side's own coordinate `s`:
/// `(phi, d phi / ds)`.
pub type SideProfile<'a> = &'a (dyn Fn(f64) -> (f64, f64) + Sync);

/// Coefficients and geometry of one edge pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSpace {
    pub l: f64,
    /// Number of cells per half-line.
    pub n: usize,
    pub h: f64,
    pub z: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Local coefficient combinations `(c_{-1}, c_0, c_1)` per unit trace,
    /// minus and plus side.
    vmap: [[[f64; 3]; 3]; 2],
}

/// Where a local coefficient lives in the global vector.
#[derive(Clone, Copy, Debug)]
enum Slot {
    Global(usize),
    Vertex(usize),
    Dropped,
}

fn inv3(a: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (i1, i2) = ((j + 1) % 3, (j + 2) % 3);
            let (j1, j2) = ((i + 1) % 3, (i + 2) % 3);
            r[i][j] = (a[i1][j1] * a[i2][j2] - a[i1][j2] * a[i2][j1]) / det;
        }
    }
    r
}

fn mul3(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    r
}

impl PairSpace {
    pub fn new(l: f64, n: usize, z: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(l > 0.0) || n < 16 {
            return invalid(format!("spline space needs L > 0 and N >= 16 (L={l}, N={n})"));
        }
        if !(alpha > 0.0) {
            return invalid("alpha must be positive");
        }
        let h = l / n as f64;
        let t = [
            [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0],
            [-0.5 / h, 0.0, 0.5 / h],
            [1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)],
        ];
        let ti = inv3(t);
        let flip = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        let lz = [[1.0, 0.0, 0.0], [z, 1.0, 0.0], [0.5 * z * z, z, 1.0]];
        Ok(Self {
            l,
            n,
            h,
            z,
            alpha,
            beta,
            vmap: [mul3(ti, flip), mul3(ti, lz)],
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.n - 3
    }

    /// First index of the three vertex unknowns.
    pub fn vertex_index(&self) -> usize {
        self.n - 3
    }

    fn slot(&self, side: usize, k: isize) -> Slot {
        let n = self.n as isize;
        if k <= 1 {
            Slot::Vertex((k + 1) as usize)
        } else if k > n - 2 {
            Slot::Dropped
        } else if side == 0 {
            Slot::Global((n - 2 - k) as usize)
        } else {
            Slot::Global((n + k - 2) as usize)
        }
    }

    /// `(global index, weight)` pairs making up local coefficient `k`.
    fn expand(&self, side: usize, k: isize) -> Vec<(usize, f64)> {
        match self.slot(side, k) {
            Slot::Global(g) => vec![(g, 1.0)],
            Slot::Vertex(r) => (0..3)
                .filter(|&a| self.vmap[side][r][a] != 0.0)
                .map(|a| (self.vertex_index() + a, self.vmap[side][r][a]))
                .collect(),
            Slot::Dropped => Vec::new(),
        }
    }

    /// Local B-spline coefficients `c_k`, `k = -1..=N+1`, of a side.
    pub fn local_coefficients(&self, side: usize, u: &[f64]) -> Vec<f64> {
        (-1..=self.n as isize + 1)
            .map(|k| self.expand(side, k).iter().map(|(g, w)| w * u[*g]).sum())
            .collect()
    }

    /// Value and derivatives `0..=3` (in `s`) of a side at `s`.
    pub fn eval_side(&self, c: &[f64], s: f64) -> [f64; 4] {
        let t = s / self.h;
        let k0 = t.floor() as isize;
        let mut out = [0.0; 4];
        for k in (k0 - 1)..=(k0 + 2) {
            if k < -1 || k > self.n as isize + 1 {
                continue;
            }
            let b = bspline(t - k as f64);
            let ck = c[(k + 1) as usize];
            for (d, o) in out.iter_mut().enumerate() {
                *o += ck * b[d] / self.h.powi(d as i32);
            }
        }
        out
    }

    /// Values at the nodes `s_k = k h`, `k = 0..=N`.
    pub fn nodal_values(&self, side: usize, u: &[f64]) -> Vec<f64> {
        let c = self.local_coefficients(side, u);
        (0..=self.n).map(|k| (c[k] + 4.0 * c[k + 1] + c[k + 2]) / 6.0).collect()
    }

    /// Traces `(u, u', u'')` at `0-` (in `x`) and at `0+`.
    pub fn vertex_traces(&self, u: &[f64]) -> ([f64; 3], [f64; 3]) {
        let v = self.vertex_index();
        let minus = [u[v], u[v + 1], u[v + 2]];
        let cp = self.local_coefficients(1, u);
        let p = self.eval_side(&cp, 0.0);
        (minus, [p[0], p[1], p[2]])
    }

    /// Loops over cells and Gauss points of one side: `f(s, weight, active)`
    /// with the active local indices and basis derivatives.
    fn for_quadrature(&self, mut f: impl FnMut(f64, f64, &[(isize, [f64; 4])])) {
        let h = self.h;
        let mut active: Vec<(isize, [f64; 4])> = Vec::with_capacity(4);
        for cell in 0..self.n {
            for q in 0..6 {
                let s = (cell as f64 + 0.5 + 0.5 * GAUSS_X[q]) * h;
                let w = 0.5 * h * GAUSS_W[q];
                active.clear();
                for k in (cell as isize - 1)..=(cell as isize + 2) {
                    if k < -1 || k > self.n as isize - 2 {
                        continue;
                    }
                    let b = bspline(s / h - k as f64);
                    active.push((k, [b[0], b[1] / h, b[2] / (h * h), b[3] / (h * h * h)]));
                }
                f(s, w, &active);
            }
        }
    }

    fn scatter(&self, side: usize, band: &mut Band, i: isize, j: isize, v: f64) {
        if v == 0.0 {
            return;
        }
        for (gi, wi) in self.expand(side, i) {
            for (gj, wj) in self.expand(side, j) {
                band.add(gi, gj, wi * wj * v);
            }
        }
    }

    /// Mass matrix `∫ b_i b_j` over both half-lines.
    pub fn mass(&self) -> Band {
        let mut m = Band::zeros(self.dim(), 5, 5);
        for side in 0..2 {
            self.for_quadrature(|_, w, act| {
                for (i, bi) in act {
                    for (j, bj) in act {
                        self.scatter(side, &mut m, *i, *j, w * bi[0] * bj[0]);
                    }
                }
            });
        }
        m
    }

    /// Galerkin matrix `K_ij = <Op b_j, b_i>` of
    /// `Op u = alpha u''' + beta u' + 2 (phi u)'` in `x`, with `phi` given on
    /// each side in the side's own coordinate.
    pub fn operator(&self, phi: Option<[SideProfile<'_>; 2]>) -> Band {
        let mut k = Band::zeros(self.dim(), 5, 5);
        for side in 0..2 {
            // d/dx = -d/ds on the minus side, so the whole operator flips sign.
            let sign = if side == 0 { -1.0 } else { 1.0 };
            self.for_quadrature(|s, w, act| {
                let (f, df) = phi.map_or((0.0, 0.0), |p| p[side](s));
                for (j, bj) in act {
                    let op = self.alpha * bj[3] + self.beta * bj[1] + 2.0 * (df * bj[0] + f * bj[1]);
                    for (i, bi) in act {
                        self.scatter(side, &mut k, *i, *j, sign * w * bi[0] * op);
                    }
                }
            });
        }
        if phi.is_none() {
            skew_symmetrize(&mut k);
        }
        k
    }

    /// Load vector `∫ f b_i` for `f` given per side in `s`.
    pub fn load(&self, f: [&dyn Fn(f64) -> f64; 2]) -> Vec<f64> {
        let mut b = vec![0.0; self.dim()];
        for side in 0..2 {
            self.for_quadrature(|s, w, act| {
                let fs = f[side](s);
                for (i, bi) in act {
                    for (g, wg) in self.expand(side, *i) {
                        b[g] += wg * w * fs * bi[0];
                    }
                }
            });
        }
        b
    }

    /// `∫ (Op u) g` by quadrature, `g` given per side in `s`.
    pub fn pairing(&self, u: &[f64], phi: [SideProfile<'_>; 2], g: [&dyn Fn(f64) -> f64; 2]) -> f64 {
        let mut acc = 0.0;
        for side in 0..2 {
            let sign = if side == 0 { -1.0 } else { 1.0 };
            let c = self.local_coefficients(side, u);
            self.for_quadrature(|s, w, _| {
                let d = self.eval_side(&c, s);
                let (f, df) = phi[side](s);
                let op = self.alpha * d[3] + self.beta * d[1] + 2.0 * (df * d[0] + f * d[1]);
                acc += sign * w * op * g[side](s);
            });
        }
        acc
    }
}

fn skew_symmetrize(k: &mut Band) {
    let n = k.n;
    let mut out = Band::zeros(n, k.kl, k.ku);
    for i in 0..n {
        for j in i.saturating_sub(k.kl)..(i + k.ku + 1).min(n) {
            let v = 0.5 * (k.get(i, j) - k.get(j, i));
            if v != 0.0 {
                out.add(i, j, v);
            }
        }
    }
    *k = out;
}

/// `M`-inner product.
pub fn m_dot(m: &Band, u: &[f64], v: &[f64]) -> f64 {
    m.matvec(v).iter().zip(u).map(|(a, b)| a * b).sum()
}

/// Implicit-midpoint propagator `(M - dt/2 K) v+ = (M + dt/2 K) v`.
#[derive(Clone, Debug)]
pub struct Midpoint {
    lhs: BandLu,
    rhs: Band,
    pub dt: f64,
}

impl Midpoint {
    pub fn new(m: &Band, k: &Band, dt: f64) -> Result<Self> {
        Ok(Self {
            lhs: m.combine(1.0, k, -0.5 * dt).lu()?,
            rhs: m.combine(1.0, k, 0.5 * dt),
            dt,
        })
    }

    pub fn step(&self, v: &[f64]) -> Vec<f64> {
        self.lhs.solve(&self.rhs.matvec(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bspline_partition_of_unity() {
        for t in [0.0, 0.25, 0.5, 0.9] {
            let s: f64 = (-2..=2).map(|k| bspline(t - k as f64)[0]).sum();
            let d: f64 = (-2..=2).map(|k| bspline(t - k as f64)[1]).sum();
            assert!((s - 1.0).abs() < 1e-14 && d.abs() < 1e-14);
        }
    }

    #[test]
    fn vertex_unknowns_are_the_traces() {
        let sp = PairSpace::new(10.0, 50, 0.8, 1.0, 1.0).unwrap();
        let mut u = vec![0.0; sp.dim()];
        let v = sp.vertex_index();
        u[v] = 0.3;
        u[v + 1] = -1.1;
        u[v + 2] = 2.0;
        u[v + 5] = 0.7;
        let cm = sp.local_coefficients(0, &u);
        let m = sp.eval_side(&cm, 0.0);
        assert!((m[0] - 0.3).abs() < 1e-12 && (-m[1] + 1.1).abs() < 1e-12 && (m[2] - 2.0).abs() < 1e-10);
        let (tm, tp) = sp.vertex_traces(&u);
        let z = 0.8;
        assert!((tp[0] - tm[0]).abs() < 1e-12);
        assert!((tp[1] - tm[1] - z * tm[0]).abs() < 1e-12);
        assert!((tp[2] - tm[2] - 0.5 * z * z * tm[0] - z * tm[1]).abs() < 1e-10);
    }

    #[test]
    fn airy_matrix_is_skew_and_conserves_norm() {
        let sp = PairSpace::new(20.0, 200, 1.0, 1.0, -1.0).unwrap();
        let m = sp.mass();
        let k0 = {
            // Unsymmetrized assembly is already skew up to rounding.
            let mut k = Band::zeros(sp.dim(), 5, 5);
            let zero = |_: f64| (0.0, 0.0);
            let full = sp.operator(Some([&zero, &zero]));
            for i in 0..sp.dim() {
                for j in i.saturating_sub(5)..(i + 6).min(sp.dim()) {
                    k.add(i, j, full.get(i, j));
                }
            }
            k
        };
        let mut worst: f64 = 0.0;
        for i in 0..sp.dim() {
            for j in i.saturating_sub(5)..(i + 6).min(sp.dim()) {
                worst = worst.max((k0.get(i, j) + k0.get(j, i)).abs());
            }
        }
        assert!(worst < 1e-9, "{worst}");
        let k = sp.operator(None);
        let g = |s: f64| (-(s - 5.0).powi(2)).exp();
        let b = sp.load([&g, &g]);
        let u0 = m.lu().unwrap().solve(&b);
        let step = Midpoint::new(&m, &k, 0.01).unwrap();
        let mut u = u0.clone();
        for _ in 0..100 {
            u = step.step(&u);
        }
        let drift = (m_dot(&m, &u, &u) / m_dot(&m, &u0, &u0)).sqrt() - 1.0;
        assert!(drift.abs() < 1e-12, "{drift}");
    }
}
