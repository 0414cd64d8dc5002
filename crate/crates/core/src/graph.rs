//! Star graph topology, uniform grids on the truncated half-lines, sampled
//! graph functions and their vertex traces.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    /// Orientation of the edge coordinate: `x = sign * s` with `s >= 0`.
    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }
}

/// `m` half-lines `(-inf, 0)` and `n` half-lines `(0, inf)` glued at the origin.
/// Edges `0..m` are the negative ones, `m..m+n` the positive ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarGraph {
    pub m: usize,
    pub n: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl StarGraph {
    pub fn new(m: usize, n: usize, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return invalid(format!("need m, n >= 1, got m={m}, n={n}"));
        }
        if alpha.len() != m + n || beta.len() != m + n {
            return invalid(format!(
                "expected {} coefficients per kind, got alpha={} beta={}",
                m + n,
                alpha.len(),
                beta.len()
            ));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return invalid(format!("alpha must be positive, got {a}"));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return invalid("beta must be finite");
        }
        Ok(Self { m, n, alpha, beta })
    }

    pub fn uniform(m: usize, n: usize, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(m, n, vec![alpha; m + n], vec![beta; m + n])
    }

    /// The normalized line: one edge per side, `alpha = 1`, `beta = -1`.
    pub fn two_half_lines() -> Self {
        Self::uniform(1, 1, 1.0, -1.0).expect("valid")
    }

    /// Balanced graph built from per-pair coefficients; pair `j` is the edge
    /// `j` on the negative side together with edge `n + j` on the positive side.
    pub fn balanced_pairs(alpha: &[f64], beta: &[f64]) -> Result<Self> {
        if alpha.len() != beta.len() {
            return invalid("alpha and beta lengths differ");
        }
        let n = alpha.len();
        let a = alpha.iter().chain(alpha).copied().collect();
        let b = beta.iter().chain(beta).copied().collect();
        Self::new(n, n, a, b)
    }

    pub fn edge_count(&self) -> usize {
        self.m + self.n
    }

    pub fn side(&self, e: usize) -> Side {
        if e < self.m {
            Side::Minus
        } else {
            Side::Plus
        }
    }

    pub fn balanced(&self) -> bool {
        self.m == self.n
    }

    /// Edge indices `(minus, plus)` of pair `j` in a balanced graph.
    pub fn pair(&self, j: usize) -> (usize, usize) {
        (j, self.m + j)
    }

    /// Bottom of the essential spectrum of the Schrodinger operators, `min(-beta_e)`.
    pub fn essential_edge(&self) -> f64 {
        self.beta.iter().map(|b| -b).fold(f64::INFINITY, f64::min)
    }
}

/// Uniform grid `x = ±k h`, `k = 0..=N`, on every edge truncated at `±L`.
/// Node `k = 0` of each edge is that edge's trace at the vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphGrid {
    pub graph: StarGraph,
    pub l: f64,
    pub n: usize,
    pub h: f64,
}

pub fn build_grid(graph: StarGraph, l: f64, n: usize) -> Result<GraphGrid> {
    if !(l > 0.0) || !l.is_finite() {
        return invalid(format!("truncation length must be positive, got {l}"));
    }
    if n < 16 {
        return invalid(format!("need at least 16 points per edge, got {n}"));
    }
    Ok(GraphGrid {
        graph,
        l,
        n,
        h: l / n as f64,
    })
}

impl GraphGrid {
    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Distance from the vertex of node `k`.
    pub fn s(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    /// Signed coordinate of node `k` on edge `e`.
    pub fn x(&self, e: usize, k: usize) -> f64 {
        self.graph.side(e).sign() * self.s(k)
    }

    /// Trapezoid weight of node `k` within one edge.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.n {
            0.5 * self.h
        } else {
            self.h
        }
    }

    pub fn same_shape(&self, other: &GraphGrid) -> bool {
        self.n == other.n && self.l == other.l && self.graph.m == other.graph.m && self.graph.n == other.graph.n
    }
}

/// Scalar fields a [`GraphFunction`] may carry.
pub trait Scalar:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Send + Sync + 'static
{
    fn conj(self) -> Self;
    fn to_complex(self) -> Complex64;
    fn from_real(x: f64) -> Self;
    fn scale(self, s: f64) -> Self;
    fn norm_sqr(self) -> f64;
}

impl Scalar for f64 {
    fn conj(self) -> Self {
        self
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
}

impl Scalar for Complex64 {
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
}

/// Samples `values[e][k]` at the nodes of a [`GraphGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFunction<T: Scalar = f64> {
    pub grid: GraphGrid,
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> GraphFunction<T> {
    pub fn zeros(grid: &GraphGrid) -> Self {
        Self {
            values: vec![vec![T::default(); grid.n + 1]; grid.edge_count()],
            grid: grid.clone(),
        }
    }

    /// Samples `f(e, x)` at every node, `x` being the signed coordinate.
    pub fn from_fn(grid: &GraphGrid, f: impl Fn(usize, f64) -> T) -> Self {
        let values = (0..grid.edge_count())
            .map(|e| (0..=grid.n).map(|k| f(e, grid.x(e, k))).collect())
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.iter().map(|x| f(*x)).collect()).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if !self.grid.same_shape(&other.grid) {
            return invalid("graph functions live on different grids");
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn norm(&self) -> f64 {
        inner_product(self, self)
            .map(|z| z.re.max(0.0).sqrt())
            .unwrap_or(f64::NAN)
    }

    pub fn to_complex(&self) -> GraphFunction<Complex64> {
        GraphFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .map(|v| v.iter().map(|x| x.to_complex()).collect())
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|x| x.norm_sqr().sqrt())
            .fold(0.0, f64::max)
    }
}

impl GraphFunction<Complex64> {
    pub fn re(&self) -> GraphFunction<f64> {
        GraphFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.iter().map(|x| x.re).collect()).collect(),
        }
    }
}

/// `sum_e ∫ u_e conj(v_e) dx` by the trapezoid rule on every edge.
pub fn inner_product<T: Scalar>(u: &GraphFunction<T>, v: &GraphFunction<T>) -> Result<Complex64> {
    if !u.grid.same_shape(&v.grid) {
        return invalid("inner product of functions on different grids");
    }
    let g = &u.grid;
    let mut acc = Complex64::new(0.0, 0.0);
    for (ue, ve) in u.values.iter().zip(&v.values) {
        for k in 0..=g.n {
            acc += (ue[k] * ve[k].conj()).to_complex() * g.weight(k);
        }
    }
    Ok(acc)
}

/// One-sided vertex traces of every edge, derivatives taken in the signed
/// coordinate `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    pub u0minus: Vec<f64>,
    pub u0plus: Vec<f64>,
    pub d1minus: Vec<f64>,
    pub d1plus: Vec<f64>,
    pub d2minus: Vec<f64>,
    pub d2plus: Vec<f64>,
}

/// Traces from 3-point (first derivative) and 4-point (second derivative)
/// one-sided stencils. `order` is the highest derivative wanted; the
/// unrequested entries are left empty.
pub fn vertex_traces(u: &GraphFunction<f64>, order: usize) -> Result<TraceSet> {
    if !(1..=2).contains(&order) {
        return invalid(format!("trace order must be 1 or 2, got {order}"));
    }
    let g = &u.grid;
    if g.n < 4 {
        return invalid("too few points for one-sided stencils");
    }
    let h = g.h;
    let mut t = TraceSet {
        u0minus: vec![],
        u0plus: vec![],
        d1minus: vec![],
        d1plus: vec![],
        d2minus: vec![],
        d2plus: vec![],
    };
    for (e, v) in u.values.iter().enumerate() {
        let sg = g.graph.side(e).sign();
        let d1 = sg * (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        let d2 = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h);
        let (u0, t1, t2) = match g.graph.side(e) {
            Side::Minus => (&mut t.u0minus, &mut t.d1minus, &mut t.d2minus),
            Side::Plus => (&mut t.u0plus, &mut t.d1plus, &mut t.d2plus),
        };
        u0.push(v[0]);
        t1.push(d1);
        if order == 2 {
            t2.push(d2);
        }
    }
    Ok(t)
}

/// Copies `f` onto every negative edge and `g` onto every positive edge.
/// Both are sampled at distance `k h` from the vertex, `k = 0..=N`.
pub fn embed_symmetric(f: &[f64], g: &[f64], grid: &GraphGrid) -> Result<GraphFunction<f64>> {
    if !grid.graph.balanced() {
        return invalid("symmetric embedding needs a balanced graph");
    }
    if f.len() != grid.n + 1 || g.len() != grid.n + 1 {
        return invalid(format!("expected {} samples per half-line", grid.n + 1));
    }
    let values = (0..grid.edge_count())
        .map(|e| match grid.graph.side(e) {
            Side::Minus => f.to_vec(),
            Side::Plus => g.to_vec(),
        })
        .collect();
    Ok(GraphFunction {
        grid: grid.clone(),
        values,
    })
}
