//! Boundary forms of the Airy operator, the delta coupling matrices `L_Z`,
//! deficiency data, and the angle parametrization of the Schrodinger
//! extensions.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{GraphFunction, GraphGrid, StarGraph};

type Mat = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryForm {
    pub n: usize,
    pub b_minus: Mat,
    pub b_plus: Mat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub z: f64,
    pub n: usize,
    pub l: Mat,
}

fn form_block<T: Clone + Zero + std::ops::Neg<Output = T>>(alpha: &[T], beta: &[T]) -> Vec<Vec<T>> {
    let n = alpha.len();
    let mut b = vec![vec![T::zero(); 3 * n]; 3 * n];
    for i in 0..n {
        b[i][i] = -beta[i].clone();
        b[i][2 * n + i] = -alpha[i].clone();
        b[n + i][n + i] = alpha[i].clone();
        b[2 * n + i][i] = -alpha[i].clone();
    }
    b
}

/// `B = [[-beta, 0, -alpha], [0, alpha, 0], [-alpha, 0, 0]]` (diagonal blocks)
/// for each side, acting on trace vectors `(u, u', u'')`.
pub fn boundary_matrices(
    alpha_minus: &[f64],
    beta_minus: &[f64],
    alpha_plus: &[f64],
    beta_plus: &[f64],
) -> Result<BoundaryForm> {
    let n = alpha_minus.len();
    if n == 0 || beta_minus.len() != n || alpha_plus.len() != n || beta_plus.len() != n {
        return invalid("boundary form needs four coefficient vectors of equal nonzero length");
    }
    if alpha_minus.iter().chain(alpha_plus).any(|a| !(*a > 0.0)) {
        return invalid("alpha must be positive");
    }
    Ok(BoundaryForm {
        n,
        b_minus: form_block(alpha_minus, beta_minus),
        b_plus: form_block(alpha_plus, beta_plus),
    })
}

fn coupling_block<T: Clone + Zero + One>(z: T, half_z2: T, n: usize) -> Vec<Vec<T>> {
    let mut l = vec![vec![T::zero(); 3 * n]; 3 * n];
    for i in 0..n {
        for b in 0..3 {
            l[b * n + i][b * n + i] = T::one();
        }
        l[n + i][i] = z.clone();
        l[2 * n + i][n + i] = z.clone();
        l[2 * n + i][i] = half_z2.clone();
    }
    l
}

/// `L_Z = [[I, 0, 0], [Z I, I, 0], [Z^2/2 I, Z I, I]]`; the delta vertex
/// reads `t_+ = L_Z t_-` on trace vectors.
pub fn coupling_matrix(z: f64, n: usize) -> CouplingMatrix {
    CouplingMatrix {
        z,
        n,
        l: coupling_block(z, 0.5 * z * z, n),
    }
}

fn transpose_times<T>(l: &[Vec<T>], b: &[Vec<T>]) -> Vec<Vec<T>>
where
    T: Clone + Zero + std::ops::Mul<Output = T>,
{
    // L^T B L
    let d = l.len();
    let mut bl = vec![vec![T::zero(); d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut s = T::zero();
            for k in 0..d {
                s = s + b[i][k].clone() * l[k][j].clone();
            }
            bl[i][j] = s;
        }
    }
    let mut out = vec![vec![T::zero(); d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut s = T::zero();
            for k in 0..d {
                s = s + l[k][i].clone() * bl[k][j].clone();
            }
            out[i][j] = s;
        }
    }
    out
}

/// `max |L^T B_+ L - B_-|`.
pub fn unitarity_residual(l: &CouplingMatrix, b: &BoundaryForm) -> Result<f64> {
    if l.n != b.n {
        return invalid(format!("coupling is {0}x{0} blocks, boundary form {1}", l.n, b.n));
    }
    let p = transpose_times(&l.l, &b.b_plus);
    let mut r: f64 = 0.0;
    for (pi, bi) in p.iter().zip(&b.b_minus) {
        for (x, y) in pi.iter().zip(bi) {
            r = r.max((x - y).abs());
        }
    }
    Ok(r)
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| crate::error::Error::InvalidArgument(format!("{x} is not finite")))
}

/// `L^T B_+ L == B_-` decided in exact rational arithmetic on the binary
/// values of the inputs.
pub fn unitarity_exact(
    z: f64,
    alpha_minus: &[f64],
    beta_minus: &[f64],
    alpha_plus: &[f64],
    beta_plus: &[f64],
) -> Result<bool> {
    boundary_matrices(alpha_minus, beta_minus, alpha_plus, beta_plus)?;
    let conv = |v: &[f64]| v.iter().map(|x| exact(*x)).collect::<Result<Vec<_>>>();
    let bm = form_block(&conv(alpha_minus)?, &conv(beta_minus)?);
    let bp = form_block(&conv(alpha_plus)?, &conv(beta_plus)?);
    let zq = exact(z)?;
    let half = BigRational::new(1.into(), 2.into());
    let l = coupling_block(zq.clone(), half * zq.clone() * zq, alpha_minus.len());
    Ok(transpose_times(&l, &bp) == bm)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeficiencyIndices {
    pub n_plus: usize,
    pub n_minus: usize,
    pub skew_extensions_exist: bool,
    /// Real dimension of the family of skew-self-adjoint extensions, `9 n^2`.
    pub family_dimension: usize,
}

pub fn deficiency_indices(graph: &StarGraph) -> DeficiencyIndices {
    let (m, n) = (graph.m, graph.n);
    let exist = m == n;
    DeficiencyIndices {
        n_plus: 2 * m + n,
        n_minus: m + 2 * n,
        skew_extensions_exist: exist,
        family_dimension: if exist { 9 * n * n } else { 0 },
    }
}

/// Delta strength of the extension with angle `theta`,
/// `Z = -2 (1 - e^{i theta}) / (e^{i pi/4} - e^{i (theta - pi/4)})`.
/// The quotient is real; at the pole `theta = pi/2` the sign of the
/// rounded denominator selects the side.
pub fn theta_to_z(theta: f64) -> f64 {
    let i = Complex64::i();
    let num = -2.0 * (1.0 - (i * theta).exp());
    let den = (i * PI / 4.0).exp() - (i * (theta - PI / 4.0)).exp();
    if den.norm() < 1e-15 {
        // den = 2i e^{i theta/2} sin(pi/4 - theta/2)
        let s = (PI / 4.0 - theta / 2.0).sin();
        return if s < 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    let q = num / den;
    // Near the pole the quotient loses relative accuracy quadratically.
    debug_assert!(
        q.im.abs() <= 1e-10 * (1.0 + q.norm()).powi(2),
        "theta_to_z not real: {q}"
    );
    2.0 * (theta / 2.0).sin() / (PI / 4.0 - theta / 2.0).sin()
}

/// `k_+ ` with `k^2 = -i`, `Im k > 0`, and `k_-` with `k^2 = i`, `Im k < 0`.
pub fn deficiency_wavenumbers() -> (Complex64, Complex64) {
    let kp = Complex64::from_polar(1.0, 3.0 * PI / 4.0);
    let km = -Complex64::from_polar(1.0, PI / 4.0);
    (kp, km)
}

/// `Psi_+ = (i/k_+) e^{i k_+ |x|}` and `Psi_- = (i/k_-) e^{-i k_- |x|}` on
/// every edge; they satisfy `-Psi'' ± i Psi = 0` edgewise.
pub fn deficiency_elements(grid: &GraphGrid) -> Result<(GraphFunction<Complex64>, GraphFunction<Complex64>)> {
    if !grid.graph.balanced() {
        return invalid("deficiency elements are built on balanced graphs");
    }
    let (kp, km) = deficiency_wavenumbers();
    let i = Complex64::i();
    let plus = GraphFunction::from_fn(grid, |_, x| i / kp * (i * kp * x.abs()).exp());
    let minus = GraphFunction::from_fn(grid, |_, x| i / km * (-i * km * x.abs()).exp());
    Ok((plus, minus))
}

/// Largest pointwise value of `-Psi'' ± i Psi` using the closed-form second
/// derivative, and the same with a centered second difference at nodes
/// `k >= 1` (interior of each edge).
pub fn deficiency_residuals(grid: &GraphGrid) -> Result<(f64, f64)> {
    let (plus, minus) = deficiency_elements(grid)?;
    let (kp, km) = deficiency_wavenumbers();
    let i = Complex64::i();
    let h = grid.h;
    let mut closed: f64 = 0.0;
    let mut fd: f64 = 0.0;
    for (f, kk, sgn) in [(&plus, i * kp, 1.0), (&minus, -i * km, -1.0)] {
        for v in &f.values {
            for k in 0..grid.n {
                let d2 = kk * kk * v[k];
                closed = closed.max((-d2 + sgn * i * v[k]).norm());
                if k >= 1 {
                    let d2h = (v[k + 1] - 2.0 * v[k] + v[k - 1]) / (h * h);
                    fd = fd.max((-d2h + sgn * i * v[k]).norm());
                }
            }
        }
    }
    Ok((closed, fd))
}

/// For `u = Psi_- + e^{i theta} Psi_+` on a balanced graph with `n` pairs,
/// the ratio `(sum_+ u'(0+) - sum_- u'(0-)) / (n u(0))`, computed from the
/// closed-form traces. It equals `theta_to_z(theta)`.
pub fn deficiency_flux_ratio(theta: f64, n: usize) -> f64 {
    let (kp, km) = deficiency_wavenumbers();
    let i = Complex64::i();
    let e = (i * theta).exp();
    let value = i / km + e * i / kp;
    // d/dx of (i/k) e^{c |x|} at 0+ is (i/k) c, at 0- it is -(i/k) c.
    let slope_p = i / km * (-i * km) + e * i / kp * (i * kp);
    let flux = n as f64 * 2.0 * slope_p;
    (flux / (n as f64 * value)).re
}
