//! Dense real-symmetric eigendecomposition, Gibbs-state utilities and a small
//! CSR sparse matrix used to assemble lattice operators.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Largest dimension accepted by the dense routines.
pub const DENSE_CAP: usize = 4096;

const SYMMETRY_TOL: f64 = 1e-12;

/// Square real matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::InvalidParameter(format!("{} entries do not form a {dim}×{dim} matrix", data.len())));
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        crate::sum::sum((0..self.dim).map(|i| self.get(i, i)))
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|v| a * v).collect() }
    }

    pub fn add(&self, other: &Self, alpha: f64) -> Self {
        assert_eq!(self.dim, other.dim);
        Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a + alpha * b).collect() }
    }

    /// `tr(A B)`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let n = self.dim;
        let mut acc = CompensatedSum::new();
        for i in 0..n {
            for j in 0..n {
                acc.add(self.data[i * n + j] * other.data[j * n + i]);
            }
        }
        acc.value()
    }

    /// `vᵀ M v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.dim;
        let mut acc = CompensatedSum::new();
        for i in 0..n {
            if v[i] == 0.0 {
                continue;
            }
            let row = &self.data[i * n..(i + 1) * n];
            let r: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            acc.add(v[i] * r);
        }
        acc.value()
    }

    fn check_symmetric(&self) -> Result<()> {
        let defect = self.symmetry_defect();
        if defect > SYMMETRY_TOL * self.max_abs().max(1.0) {
            return Err(Error::NotSymmetric(defect));
        }
        Ok(())
    }
}

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors,
/// `vectors[i]` belonging to `values[i]`.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl Eigen {
    /// Matrix `V` whose columns are the eigenvectors.
    pub fn vector_matrix(&self) -> OperatorMatrix {
        let n = self.values.len();
        OperatorMatrix::from_fn(n, |i, j| self.vectors[j][i])
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;
const JACOBI_REL_OFF: f64 = 1e-13;

/// Cyclic Jacobi. Eigenvectors are accumulated as rows of `vt` when requested.
fn jacobi(m: &OperatorMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    m.check_symmetric()?;
    let n = m.dim;
    if n > DENSE_CAP {
        return Err(Error::DimensionCap { dim: n, cap: DENSE_CAP });
    }
    let mut a = m.data.clone();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    let mut vt = want_vectors.then(|| OperatorMatrix::identity(n).data);
    let norm = m.frobenius();
    let target = JACOBI_REL_OFF * norm;
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        s.sqrt()
    };
    let mut converged = n <= 1 || norm == 0.0 || off(&a) < target;
    let mut sweep = 0;
    while !converged && sweep < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if sweep > 3 && apq.abs() < 1e-18 * (app.abs() + aqq.abs()) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta == 0.0 { 1.0 } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let g = a[p * n + k];
                    let h = a[q * n + k];
                    let gp = g - s * (h + g * tau);
                    let hq = h + s * (g - h * tau);
                    a[p * n + k] = gp;
                    a[k * n + p] = gp;
                    a[q * n + k] = hq;
                    a[k * n + q] = hq;
                }
                if let Some(v) = vt.as_mut() {
                    let (head, tail) = v.split_at_mut(q * n);
                    let vp = &mut head[p * n..(p + 1) * n];
                    let vq = &mut tail[..n];
                    for (g, h) in vp.iter_mut().zip(vq.iter_mut()) {
                        let (x, y) = (*g, *h);
                        *g = x - s * (y + x * tau);
                        *h = y + s * (x - y * tau);
                    }
                }
            }
        }
        sweep += 1;
        converged = off(&a) < target;
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "Jacobi eigensolver: off-diagonal norm {:.3e} after {JACOBI_MAX_SWEEPS} sweeps",
            off(&a)
        )));
    }
    Ok(((0..n).map(|i| a[i * n + i]).collect(), vt))
}

/// Symmetric eigendecomposition.
pub fn eigh(m: &OperatorMatrix) -> Result<Eigen> {
    let n = m.dim;
    let (vals, vt) = jacobi(m, true)?;
    let vt = vt.expect("vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    Ok(Eigen {
        values: order.iter().map(|&i| vals[i]).collect(),
        vectors: order.iter().map(|&i| vt[i * n..(i + 1) * n].to_vec()).collect(),
    })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &OperatorMatrix) -> Result<Vec<f64>> {
    let (mut vals, _) = jacobi(m, false)?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// `log Σ_i e^{−β λ_i}`, shifted by the smallest eigenvalue.
pub fn log_partition(eigenvalues: &[f64], beta: f64) -> f64 {
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let s = crate::sum::sum(eigenvalues.iter().map(|&e| (-beta * (e - min)).exp()));
    -beta * min + s.ln()
}

/// Normalized Boltzmann weights.
pub fn boltzmann_weights(eigenvalues: &[f64], beta: f64) -> Vec<f64> {
    let lz = log_partition(eigenvalues, beta);
    eigenvalues.iter().map(|&e| (-beta * e - lz).exp()).collect()
}

/// `log tr e^{−βH}`.
pub fn gibbs_trace(h: &OperatorMatrix, beta: f64) -> Result<f64> {
    Ok(log_partition(&eigvalsh(h)?, beta))
}

/// `tr(A e^{−βH}) / tr e^{−βH}`.
pub fn gibbs_expectation(h: &OperatorMatrix, beta: f64, a: &OperatorMatrix) -> Result<f64> {
    let e = eigh(h)?;
    let w = boltzmann_weights(&e.values, beta);
    Ok(crate::sum::sum(e.vectors.iter().zip(&w).map(|(v, wi)| wi * a.quadratic_form(v))))
}

/// `e^{−βH} / tr e^{−βH}`.
pub fn gibbs_state(h: &OperatorMatrix, beta: f64) -> Result<OperatorMatrix> {
    let e = eigh(h)?;
    let w = boltzmann_weights(&e.values, beta);
    let n = h.dim;
    let mut g = OperatorMatrix::zeros(n);
    for (v, wi) in e.vectors.iter().zip(&w) {
        for i in 0..n {
            let vi = wi * v[i];
            if vi == 0.0 {
                continue;
            }
            for j in 0..n {
                g.data[i * n + j] += vi * v[j];
            }
        }
    }
    Ok(g)
}

/// `tr HΓ + (1/β) tr Γ log Γ`, with `0 log 0 = 0`.
pub fn gibbs_functional(h: &OperatorMatrix, beta: f64, gamma: &OperatorMatrix) -> Result<f64> {
    let tr = gamma.trace();
    if (tr - 1.0).abs() > 1e-10 {
        return Err(Error::BadTrace(tr));
    }
    let p = eigvalsh(gamma)?;
    let entropy = crate::sum::sum(p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()));
    Ok(h.trace_product(gamma) + entropy / beta)
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(trips.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trips.len());
        let mut rows = Vec::with_capacity(trips.len());
        for (r, c, v) in trips {
            assert!(r < nrows && c < ncols, "entry ({r},{c}) outside {nrows}×{ncols}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] != 0.0).collect();
        let rows: Vec<usize> = keep.iter().map(|&i| rows[i]).collect();
        let cols: Vec<usize> = keep.iter().map(|&i| cols[i]).collect();
        let vals: Vec<f64> = keep.iter().map(|&i| vals[i]).collect();
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { nrows, ncols, row_ptr, cols, vals }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, Vec::new())
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect())
    }

    /// `self + alpha·other`.
    pub fn add(&self, other: &Self, alpha: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)));
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut m = self.clone();
        m.vals.iter_mut().for_each(|v| *v *= a);
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    t.push((i, j, a * b));
                }
            }
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.add(other, -1.0).max_abs()
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.max_abs_diff(&self.transpose())
    }

    /// Dense copy; the matrix must be square and within [`DENSE_CAP`].
    pub fn to_dense(&self) -> Result<OperatorMatrix> {
        let idx: Vec<usize> = (0..self.nrows).collect();
        if self.nrows != self.ncols {
            return Err(Error::InvalidParameter("dense copy needs a square matrix".into()));
        }
        self.block(&idx)
    }

    /// Dense principal sub-block on the given (sorted) indices.
    pub fn block(&self, indices: &[usize]) -> Result<OperatorMatrix> {
        let n = indices.len();
        if n > DENSE_CAP {
            return Err(Error::DimensionCap { dim: n, cap: DENSE_CAP });
        }
        let mut pos = std::collections::HashMap::with_capacity(n);
        for (a, &i) in indices.iter().enumerate() {
            pos.insert(i, a);
        }
        let mut m = OperatorMatrix::zeros(n);
        for (a, &i) in indices.iter().enumerate() {
            for (j, v) in self.row(i) {
                if let Some(&b) = pos.get(&j) {
                    m.data[a * n + b] += v;
                }
            }
        }
        Ok(m)
    }

    /// Largest entry connecting `indices` to their complement.
    pub fn leakage(&self, indices: &[usize]) -> f64 {
        let set: std::collections::HashSet<usize> = indices.iter().copied().collect();
        let mut m: f64 = 0.0;
        for &i in indices {
            for (j, v) in self.row(i) {
                if !set.contains(&j) {
                    m = m.max(v.abs());
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> OperatorMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = OperatorMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = next();
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    #[test]
    fn identity_and_swap() {
        assert!(eigh(&OperatorMatrix::identity(5)).unwrap().values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let m = OperatorMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let v = eigvalsh(&m).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reconstructs_random_matrices() {
        for (n, seed) in [(1, 1), (7, 2), (40, 3), (120, 4)] {
            let m = random_symmetric(n, seed);
            let e = eigh(&m).unwrap();
            let v = e.vector_matrix();
            let lam = OperatorMatrix::from_diagonal(&e.values);
            let rec = v.matmul(&lam).matmul(&v.transpose());
            assert!(rec.max_abs_diff(&m) < 1e-10 * m.max_abs().max(1.0));
            let orth = v.transpose().matmul(&v);
            assert!(orth.max_abs_diff(&OperatorMatrix::identity(n)) < 1e-10);
            let mv = m.matmul(&v);
            let vl = v.matmul(&lam);
            assert!(mv.max_abs_diff(&vl) < 1e-10 * m.max_abs());
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = OperatorMatrix::from_row_major(2, vec![0.0, 1.0, 0.5, 0.0]).unwrap();
        assert!(matches!(eigh(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn gibbs_trace_examples() {
        let beta = 0.7;
        assert!((gibbs_trace(&OperatorMatrix::zeros(6), beta).unwrap() - 6f64.ln()).abs() < 1e-14);
        let single = OperatorMatrix::from_diagonal(&[2.5]);
        assert!((gibbs_trace(&single, beta).unwrap() + beta * 2.5).abs() < 1e-14);
        let two = OperatorMatrix::from_diagonal(&[0.0, 1.3]);
        let want = (1.0 + (-beta * 1.3f64).exp()).ln();
        assert!((gibbs_trace(&two, beta).unwrap() - want).abs() < 1e-14);
        // no overflow for large energies
        let big = OperatorMatrix::from_diagonal(&[1e4, 1e4 + 1.0]);
        assert!(gibbs_trace(&big, 10.0).unwrap().is_finite());
    }

    #[test]
    fn gibbs_expectation_examples() {
        let h = random_symmetric(6, 9);
        let id = OperatorMatrix::identity(6);
        assert!((gibbs_expectation(&h, 1.1, &id).unwrap() - 1.0).abs() < 1e-13);
        let h = OperatorMatrix::from_diagonal(&[0.0, 1.0]);
        let a = OperatorMatrix::from_diagonal(&[3.0, -2.0]);
        let w1 = (-2.0f64).exp();
        let want = (3.0 - 2.0 * w1) / (1.0 + w1);
        assert!((gibbs_expectation(&h, 2.0, &a).unwrap() - want).abs() < 1e-14);
        assert!((gibbs_expectation(&h, 1e3, &a).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gibbs_functional_examples() {
        let h = random_symmetric(8, 5);
        let beta = 1.7;
        let free = -gibbs_trace(&h, beta).unwrap() / beta;
        let g = gibbs_state(&h, beta).unwrap();
        assert!((gibbs_functional(&h, beta, &g).unwrap() - free).abs() < 1e-12);
        let mixed = OperatorMatrix::identity(8).scaled(1.0 / 8.0);
        let z = OperatorMatrix::zeros(8);
        assert!((gibbs_functional(&z, beta, &mixed).unwrap() + 8f64.ln() / beta).abs() < 1e-13);
        assert!(matches!(gibbs_functional(&h, beta, &OperatorMatrix::identity(8)), Err(Error::BadTrace(_))));
    }

    #[test]
    fn sparse_roundtrip() {
        let m = SparseMatrix::from_triplets(3, 3, vec![(0, 1, 2.0), (0, 1, 1.0), (2, 2, 5.0), (1, 0, 0.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.matvec(&[1.0, 1.0, 2.0]), vec![3.0, 0.0, 10.0]);
        assert_eq!(m.transpose().get(1, 0), 3.0);
        let p = m.matmul(&m.transpose());
        assert_eq!(p.get(0, 0), 9.0);
        assert_eq!(m.block(&[0, 1]).unwrap().get(0, 1), 3.0);
        assert_eq!(m.leakage(&[0]), 3.0);
    }
}
