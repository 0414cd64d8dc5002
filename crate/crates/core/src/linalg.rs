//! Small linear-algebra kernels: banded LU with partial pivoting, the
//! arrow-structured symmetric solver used on star graphs (inertia counts,
//! bisection, inverse iteration), and a shift-invert Arnoldi driver.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored by rows
/// over absolute columns `i - kl ..= i + ku + kl` (room for pivoting fill).
#[derive(Clone, Debug)]
pub struct Band {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl Band {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width || j >= self.n {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku));
        self.data[s] += v;
    }

    fn cols(&self, i: usize) -> std::ops::Range<usize> {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.kl + self.ku + 1).min(self.n);
        lo..hi
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.cols(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for j in self.cols(i) {
                y[j] += self.get(i, j) * x[i];
            }
        }
        y
    }

    /// `a * self + b * other` on a common band.
    pub fn combine(&self, a: f64, other: &Band, b: f64) -> Band {
        assert_eq!(self.n, other.n);
        let kl = self.kl.max(other.kl);
        let ku = self.ku.max(other.ku);
        let mut out = Band::zeros(self.n, kl, ku);
        for i in 0..self.n {
            for j in self.cols(i) {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.add(i, j, a * v);
                }
            }
            for j in other.cols(i) {
                let v = other.get(i, j);
                if v != 0.0 {
                    out.add(i, j, b * v);
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// LU factorization with row partial pivoting.
    pub fn lu(&self) -> Result<BandLu> {
        let mut a = self.clone();
        let n = a.n;
        let mut piv = vec![0usize; n];
        let reach = a.kl + a.ku;
        for k in 0..n {
            let last = (k + a.kl).min(n - 1);
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for r in k + 1..=last {
                let v = a.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(format!("zero pivot in band LU at column {k}")));
            }
            piv[k] = p;
            let hi = (k + reach + 1).min(n);
            if p != k {
                for j in k..hi {
                    let (sk, sp) = (a.slot(k, j).unwrap(), a.slot(p, j).unwrap());
                    a.data.swap(sk, sp);
                }
            }
            let d = a.get(k, k);
            for r in k + 1..=last {
                let sr = a.slot(r, k).unwrap();
                let f = a.data[sr] / d;
                if f == 0.0 {
                    continue;
                }
                a.data[sr] = f;
                for j in k + 1..hi {
                    let u = a.get(k, j);
                    if u != 0.0 {
                        let s = a.slot(r, j).unwrap();
                        a.data[s] -= f * u;
                    }
                }
            }
        }
        Ok(BandLu { a, piv })
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    a: Band,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let a = &self.a;
        let n = a.n;
        let reach = a.kl + a.ku;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let last = (k + a.kl).min(n - 1);
            for r in k + 1..=last {
                x[r] -= a.get(r, k) * x[k];
            }
        }
        for k in (0..n).rev() {
            let hi = (k + reach + 1).min(n);
            let mut s = x[k];
            for j in k + 1..hi {
                s -= a.get(k, j) * x[j];
            }
            x[k] = s / a.get(k, k);
        }
        x
    }
}

/// Symmetric matrix on a star: a shared vertex unknown and one chain per
/// edge (nodes `1..len`), with chain coupling `off` and vertex coupling
/// `link`. A positive diagonal weight turns eigenproblems into the pencil
/// `S u = lambda W u`.
#[derive(Clone, Debug)]
pub struct StarSym {
    pub vertex_diag: f64,
    pub vertex_weight: f64,
    pub diag: Vec<Vec<f64>>,
    pub weight: Vec<Vec<f64>>,
    /// `off[e][k]` couples chain nodes `k` and `k + 1` (0-based within the chain).
    pub off: Vec<Vec<f64>>,
    pub link: Vec<f64>,
}

/// Coefficients of a vector on a [`StarSym`].
#[derive(Clone, Debug, PartialEq)]
pub struct StarVec {
    pub vertex: f64,
    pub chains: Vec<Vec<f64>>,
}

impl StarVec {
    pub fn dot_weighted(&self, other: &StarVec, s: &StarSym) -> f64 {
        let mut acc = self.vertex * other.vertex * s.vertex_weight;
        for e in 0..self.chains.len() {
            for k in 0..self.chains[e].len() {
                acc += self.chains[e][k] * other.chains[e][k] * s.weight[e][k];
            }
        }
        acc
    }

    pub fn scale(&mut self, f: f64) {
        self.vertex *= f;
        self.chains.iter_mut().flatten().for_each(|x| *x *= f);
    }

    pub fn axpy(&mut self, a: f64, x: &StarVec) {
        self.vertex += a * x.vertex;
        for (c, d) in self.chains.iter_mut().zip(&x.chains) {
            for (u, v) in c.iter_mut().zip(d) {
                *u += a * v;
            }
        }
    }
}

impl StarSym {
    pub fn zeros_like(&self) -> StarVec {
        StarVec {
            vertex: 0.0,
            chains: self.diag.iter().map(|d| vec![0.0; d.len()]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        1 + self.diag.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn matvec(&self, x: &StarVec) -> StarVec {
        let mut y = self.zeros_like();
        y.vertex = self.vertex_diag * x.vertex;
        for e in 0..self.diag.len() {
            let (d, o, c) = (&self.diag[e], &self.off[e], &x.chains[e]);
            let ye = &mut y.chains[e];
            for k in 0..d.len() {
                ye[k] = d[k] * c[k];
                if k + 1 < d.len() {
                    ye[k] += o[k] * c[k + 1];
                }
                if k > 0 {
                    ye[k] += o[k - 1] * c[k - 1];
                }
            }
            ye[0] += self.link[e] * x.vertex;
            y.vertex += self.link[e] * c[0];
        }
        y
    }

    pub fn weighted(&self, x: &StarVec) -> StarVec {
        let mut y = x.clone();
        y.vertex *= self.vertex_weight;
        for (c, w) in y.chains.iter_mut().zip(&self.weight) {
            for (u, v) in c.iter_mut().zip(w) {
                *u *= v;
            }
        }
        y
    }

    /// Number of negative eigenvalues of `S - mu W`, optionally bordered by
    /// a constraint vector `b` as `[[S - mu W, b], [b^T, 0]]`.
    pub fn inertia(&self, mu: f64, border: Option<&StarVec>) -> usize {
        let tiny = 1e-300;
        let fix = |p: f64| if p == 0.0 { tiny } else { p };
        let mut neg = 0;
        let mut vd = self.vertex_diag - mu * self.vertex_weight;
        let mut vb = border.map_or(0.0, |b| b.vertex);
        let mut bb = 0.0;
        for e in 0..self.diag.len() {
            let (d, o, w) = (&self.diag[e], &self.off[e], &self.weight[e]);
            let len = d.len();
            let mut p = 0.0;
            let mut q = 0.0;
            for k in (0..len).rev() {
                let mut pk = d[k] - mu * w[k];
                let mut qk = border.map_or(0.0, |b| b.chains[e][k]);
                if k + 1 < len {
                    pk -= o[k] * o[k] / p;
                    qk -= o[k] * q / p;
                }
                pk = fix(pk);
                if pk < 0.0 {
                    neg += 1;
                }
                bb -= qk * qk / pk;
                p = pk;
                q = qk;
            }
            vd -= self.link[e] * self.link[e] / p;
            vb -= self.link[e] * q / p;
        }
        let vd = fix(vd);
        if vd < 0.0 {
            neg += 1;
        }
        if border.is_some() {
            let last = fix(bb - vb * vb / vd);
            if last < 0.0 {
                neg += 1;
            }
        }
        neg
    }

    /// Solves `(S - mu W) x = r`.
    pub fn solve(&self, mu: f64, r: &StarVec) -> Result<StarVec> {
        let ne = self.diag.len();
        let mut piv: Vec<Vec<f64>> = Vec::with_capacity(ne);
        let mut red: Vec<Vec<f64>> = Vec::with_capacity(ne);
        let mut vd = self.vertex_diag - mu * self.vertex_weight;
        let mut vr = r.vertex;
        for e in 0..ne {
            let (d, o, w) = (&self.diag[e], &self.off[e], &self.weight[e]);
            let len = d.len();
            let mut p = vec![0.0; len];
            let mut rr = vec![0.0; len];
            for k in (0..len).rev() {
                p[k] = d[k] - mu * w[k];
                rr[k] = r.chains[e][k];
                if k + 1 < len {
                    p[k] -= o[k] * o[k] / p[k + 1];
                    rr[k] -= o[k] * rr[k + 1] / p[k + 1];
                }
                if p[k] == 0.0 {
                    return Err(Error::Singular(format!("zero pivot on edge {e}")));
                }
            }
            vd -= self.link[e] * self.link[e] / p[0];
            vr -= self.link[e] * rr[0] / p[0];
            piv.push(p);
            red.push(rr);
        }
        if vd == 0.0 {
            return Err(Error::Singular("zero pivot at the vertex".into()));
        }
        let mut x = self.zeros_like();
        x.vertex = vr / vd;
        for e in 0..ne {
            let (o, p, rr) = (&self.off[e], &piv[e], &red[e]);
            let c = &mut x.chains[e];
            c[0] = (rr[0] - self.link[e] * x.vertex) / p[0];
            for k in 1..c.len() {
                c[k] = (rr[k] - o[k - 1] * c[k - 1]) / p[k];
            }
        }
        Ok(x)
    }

    fn spectral_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut vr: f64 = 0.0;
        for e in 0..self.diag.len() {
            let (d, o, w) = (&self.diag[e], &self.off[e], &self.weight[e]);
            for k in 0..d.len() {
                let mut r = 0.0;
                if k + 1 < d.len() {
                    r += o[k].abs();
                }
                if k > 0 {
                    r += o[k - 1].abs();
                }
                if k == 0 {
                    r += self.link[e].abs();
                }
                lo = lo.min((d[k] - r) / w[k]);
                hi = hi.max((d[k] + r) / w[k]);
            }
            vr += self.link[e].abs();
        }
        lo = lo.min((self.vertex_diag - vr) / self.vertex_weight);
        hi = hi.max((self.vertex_diag + vr) / self.vertex_weight);
        // Weighted Gershgorin is not a rigorous bound for the pencil; widen.
        let span = (hi - lo).abs().max(1.0);
        (lo - span, hi + span)
    }

    /// The `j`-th smallest eigenvalue (0-based) of the pencil, optionally
    /// restricted to the `W`-orthogonal complement of `border` (pass `W b`).
    pub fn eigenvalue(&self, j: usize, border: Option<&StarVec>, tol: f64) -> f64 {
        let shift = usize::from(border.is_some());
        let count = |mu: f64| self.inertia(mu, border).saturating_sub(shift);
        let (mut lo, mut hi) = self.spectral_bounds();
        while count(lo) > j {
            lo -= (hi - lo).abs();
        }
        while count(hi) <= j {
            hi += (hi - lo).abs();
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= tol * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector for an eigenvalue estimate by inverse iteration, `W`-normalized.
    pub fn eigenvector(&self, lambda: f64) -> Result<StarVec> {
        let mut x = self.zeros_like();
        x.vertex = 1.0;
        let mut state = 0x9e3779b97f4a7c15u64;
        for c in x.chains.iter_mut() {
            for v in c.iter_mut() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                *v = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            }
        }
        let mu = lambda + 1e-11 * (1.0 + lambda.abs());
        for _ in 0..4 {
            let mut y = self.solve(mu, &self.weighted(&x))?;
            let nrm = y.dot_weighted(&y, self).sqrt();
            if !nrm.is_finite() || nrm == 0.0 {
                return Err(Error::Numerical("inverse iteration broke down".into()));
            }
            y.scale(1.0 / nrm);
            x = y;
        }
        Ok(x)
    }
}

/// Ritz values of `op` (a shift-invert map) from `steps` Arnoldi steps.
pub fn arnoldi_ritz(op: &dyn Fn(&[f64]) -> Vec<f64>, start: &[f64], steps: usize) -> Result<Vec<Complex64>> {
    let n = start.len();
    let steps = steps.min(n);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    let s = norm(start);
    if s == 0.0 {
        return Err(Error::InvalidArgument("zero Arnoldi start vector".into()));
    }
    basis.push(start.iter().map(|x| x / s).collect());
    let mut h = DMatrix::<f64>::zeros(steps, steps);
    let mut used = steps;
    for j in 0..steps {
        let mut w = op(&basis[j]);
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                h[(i, j)] += c;
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nw = norm(&w);
        if j + 1 < steps {
            if nw < 1e-14 {
                used = j + 1;
                break;
            }
            h[(j + 1, j)] = nw;
            basis.push(w.iter().map(|x| x / nw).collect());
        }
    }
    let hm = h.view((0, 0), (used, used)).into_owned();
    Ok(hm.complex_eigenvalues().iter().copied().collect())
}

/// All eigenvalues of a dense real matrix.
pub fn dense_eigenvalues(a: DMatrix<f64>) -> Vec<Complex64> {
    a.complex_eigenvalues().iter().copied().collect()
}

/// Finite-difference weights at `z` for derivatives `0..=m` on the nodes `x`
/// (Fornberg's recursion). Row `d` holds the weights of the `d`-th derivative.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_lu_matches_dense() {
        let n = 40;
        let mut b = Band::zeros(n, 3, 2);
        for i in 0..n {
            for j in i.saturating_sub(3)..(i + 3).min(n) {
                let v = ((i * 7 + j * 13) % 11) as f64 - 5.0 + if i == j { 0.1 } else { 0.0 };
                b.add(i, j, v);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let rhs = b.matvec(&x);
        let y = b.lu().unwrap().solve(&rhs);
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        let t = b.transpose_matvec(&x);
        let td = b.to_dense().transpose() * nalgebra::DVector::from_vec(x.clone());
        assert!(t.iter().zip(td.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    fn path(n: usize) -> StarSym {
        // -u'' on a path of 2n+1 nodes, vertex in the middle, h = 1.
        StarSym {
            vertex_diag: 2.0,
            vertex_weight: 1.0,
            diag: vec![vec![2.0; n]; 2],
            weight: vec![vec![1.0; n]; 2],
            off: vec![vec![-1.0; n - 1]; 2],
            link: vec![-1.0; 2],
        }
    }

    #[test]
    fn bisection_on_path_laplacian() {
        let n = 10;
        let s = path(n);
        let len = 2 * n + 1;
        for j in 0..len {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (len + 1) as f64).cos();
            assert!((s.eigenvalue(j, None, 1e-14) - exact).abs() < 1e-10);
        }
        let v = s.eigenvector(s.eigenvalue(0, None, 1e-14)).unwrap();
        let av = s.matvec(&v);
        let lam = av.dot_weighted(&v, &s) / v.dot_weighted(&v, &s);
        let mut r = av.clone();
        r.axpy(-lam, &s.weighted(&v));
        assert!(r.dot_weighted(&r, &s).sqrt() < 1e-9);
    }

    #[test]
    fn bordered_inertia_counts_constrained_spectrum() {
        // Constrained to vectors orthogonal to the vertex unit vector, the
        // path splits into two independent chains.
        let n = 6;
        let s = path(n);
        let mut b = s.zeros_like();
        b.vertex = 1.0;
        let lam0 = s.eigenvalue(0, Some(&b), 1e-14);
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n + 1) as f64).cos();
        assert!((lam0 - exact).abs() < 1e-10, "{lam0} {exact}");
        assert!((s.eigenvalue(1, Some(&b), 1e-14) - exact).abs() < 1e-10);
    }

    #[test]
    fn star_solve_roundtrip() {
        let s = path(12);
        let mut x = s.zeros_like();
        x.vertex = 0.3;
        for (e, c) in x.chains.iter_mut().enumerate() {
            for (k, v) in c.iter_mut().enumerate() {
                *v = ((k + 3 * e) as f64).cos();
            }
        }
        let mut r = s.matvec(&x);
        r.axpy(-0.7, &s.weighted(&x));
        let y = s.solve(0.7, &r).unwrap();
        let mut d = y.clone();
        d.axpy(-1.0, &x);
        assert!(d.dot_weighted(&d, &s).sqrt() < 1e-10);
    }

    #[test]
    fn fornberg_weights() {
        let x = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w = fd_weights(0.0, &x, 3);
        let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let d3 = [-0.5, 1.0, 0.0, -1.0, 0.5];
        for i in 0..5 {
            assert!((w[1][i] - d1[i]).abs() < 1e-14);
            assert!((w[3][i] - d3[i]).abs() < 1e-13);
        }
        // One-sided weights reproduce the cube's third derivative.
        let x: Vec<f64> = (0..6).map(|k| k as f64 * 0.1).collect();
        let w = fd_weights(0.0, &x, 3);
        let d: f64 = x.iter().zip(&w[3]).map(|(a, b)| a.powi(3) * b).sum();
        assert!((d - 6.0).abs() < 1e-9);
    }

    #[test]
    fn arnoldi_finds_extreme_eigenvalues() {
        let diag: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let op = |x: &[f64]| x.iter().zip(&diag).map(|(a, d)| a / d).collect::<Vec<_>>();
        let start = vec![1.0; 50];
        let ritz = arnoldi_ritz(&op, &start, 20).unwrap();
        let largest = ritz.iter().map(|z| z.re).fold(0.0, f64::max);
        assert!((largest - 1.0).abs() < 1e-10);
    }
}
