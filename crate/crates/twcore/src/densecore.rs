//! Dense complex linear algebra on spin-chain Hilbert spaces.
//!
//! Operators are stored row-major. A chain of `n` sites has site 1 as the
//! most significant bit of the basis index; when an auxiliary factor is
//! present it occupies the leftmost tensor slot, so the composite index is
//! `a * quantum_dim + x`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::C64;

/// Default ceiling on operator dimension, `3 * 2^14`.
pub const DEFAULT_MAX_DIM: usize = 3 << 14;

/// Relative tolerance of the hermiticity test.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dimension cap, overridable through `TWLAB_MAX_DIM`.
pub fn max_dim() -> usize {
    std::env::var("TWLAB_MAX_DIM")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&d| d > 0)
        .unwrap_or(DEFAULT_MAX_DIM)
}

fn check_dim(dim: usize) -> Result<()> {
    let cap = max_dim();
    if dim > cap {
        return Err(Error::Size { requested: dim, max: cap });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<C64>,
    label: Option<String>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim], label: None }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data, label: None }
    }

    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Argument(format!(
                "entry count {} does not match dim {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data, label: None })
    }

    /// Builds an operator from real rows, handy for small literal matrices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * dim + i] = *d;
        }
        m
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * s).collect(), label: None }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { dim: self.dim, data, label: None })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { dim: self.dim, data, label: None })
    }

    /// Adds `s` times the identity.
    pub fn shift(&self, s: C64) -> Self {
        let mut m = self.clone();
        m.label = None;
        for i in 0..self.dim {
            m.data[i * self.dim + i] += s;
        }
        m
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Argument(format!(
                "dimension mismatch {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (r, b) in row.iter_mut().zip(brow) {
                    *r += a * b;
                }
            }
        }
        Ok(Self { dim: n, data: out, label: None })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation `|A - B| / max(|A|, |B|, tiny)`.
    pub fn rel_diff(&self, other: &Self) -> Result<f64> {
        let d = self.sub(other)?.max_abs();
        let s = self.max_abs().max(other.max_abs()).max(f64::MIN_POSITIVE);
        Ok(d / s)
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                m = m.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        m
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_TOL * self.max_abs().max(f64::MIN_POSITIVE)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::Argument(format!(
                "vector length {} does not match dim {}",
                v.len(),
                self.dim
            )));
        }
        let n = self.dim;
        Ok((0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        Self::from_fn(n, |i, j| m[(i, j)])
    }

    /// Matrix inverse by LU with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let lu = self.to_matrix().lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular matrix in inverse".into()))?;
        if inv.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::Numerical("non-finite inverse".into()));
        }
        Ok(Self::from_matrix(&inv))
    }
}

/// Splits a composite space into an auxiliary factor and the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FactorSpace {
    aux_dim: usize,
    quantum_dim: usize,
}

impl FactorSpace {
    pub fn new(aux_dim: usize, quantum_dim: usize) -> Result<Self> {
        if !(1..=3).contains(&aux_dim) {
            return Err(Error::Argument(format!("aux_dim {aux_dim} not in 1..=3")));
        }
        if !quantum_dim.is_power_of_two() {
            return Err(Error::Argument(format!("quantum_dim {quantum_dim} is not a power of two")));
        }
        Ok(Self { aux_dim, quantum_dim })
    }

    pub fn aux_dim(&self) -> usize {
        self.aux_dim
    }

    pub fn quantum_dim(&self) -> usize {
        self.quantum_dim
    }

    pub fn total_dim(&self) -> usize {
        self.aux_dim * self.quantum_dim
    }
}

pub fn kron(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    let dim = a.dim.checked_mul(b.dim).ok_or(Error::Size { requested: usize::MAX, max: max_dim() })?;
    check_dim(dim)?;
    let mut out = DenseOperator::zeros(dim);
    for i in 0..a.dim {
        for j in 0..a.dim {
            let aij = a.get(i, j);
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..b.dim {
                for l in 0..b.dim {
                    out.set(i * b.dim + k, j * b.dim + l, aij * b.get(k, l));
                }
            }
        }
    }
    Ok(out)
}

/// Places a `k`-site operator on the listed sites (1-based) of an `n`-site chain.
///
/// The order of `sites` fixes which tensor factor of `op` lands where:
/// factor `m` of `op` acts on site `sites[m]`.
pub fn embed(op: &DenseOperator, sites: &[usize], n: usize) -> Result<DenseOperator> {
    let k = sites.len();
    if k == 0 || op.dim != 1usize << k {
        return Err(Error::Argument(format!(
            "operator dim {} does not match {} sites",
            op.dim,
            k
        )));
    }
    for (idx, &s) in sites.iter().enumerate() {
        if s == 0 || s > n {
            return Err(Error::Argument(format!("site {s} outside 1..={n}")));
        }
        if sites[..idx].contains(&s) {
            return Err(Error::Argument(format!("site {s} repeated")));
        }
    }
    let dim = 1usize.checked_shl(n as u32).filter(|_| n < usize::BITS as usize).ok_or(
        Error::Size { requested: usize::MAX, max: max_dim() },
    )?;
    check_dim(dim)?;
    let shifts: Vec<usize> = sites.iter().map(|&s| n - s).collect();
    let mask: usize = shifts.iter().map(|&sh| 1usize << sh).sum();
    let local = |x: usize| -> usize {
        shifts.iter().fold(0usize, |acc, &sh| (acc << 1) | ((x >> sh) & 1))
    };
    let spread = |l: usize| -> usize {
        shifts
            .iter()
            .enumerate()
            .fold(0usize, |acc, (m, &sh)| acc | (((l >> (k - 1 - m)) & 1) << sh))
    };
    let mut out = DenseOperator::zeros(dim);
    for x in 0..dim {
        let rest = x & !mask;
        let lx = local(x);
        for ly in 0..op.dim {
            let v = op.get(lx, ly);
            if v != C64::new(0.0, 0.0) {
                out.set(x, rest | spread(ly), v);
            }
        }
    }
    Ok(out)
}

/// Traces out the leftmost auxiliary factor.
pub fn partial_trace_aux(op: &DenseOperator, space: FactorSpace) -> Result<DenseOperator> {
    if op.dim != space.total_dim() {
        return Err(Error::Argument(format!(
            "operator dim {} does not match {}x{}",
            op.dim, space.aux_dim, space.quantum_dim
        )));
    }
    let q = space.quantum_dim;
    Ok(DenseOperator::from_fn(q, |i, j| {
        (0..space.aux_dim).map(|a| op.get(a * q + i, a * q + j)).sum()
    }))
}

/// Eigen-decomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `values`.
    pub vectors: DenseOperator,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }
}

/// Eigenpairs in ascending order.
pub fn hermitian_eigs(op: &DenseOperator) -> Result<HermitianEigen> {
    if !op.is_hermitian() {
        return Err(Error::Contract(format!(
            "operator is not hermitian (defect {:.3e})",
            op.hermiticity_defect()
        )));
    }
    let n = op.dim;
    let h = |i: usize, j: usize| (op.get(i, j) + op.get(j, i).conj()) * 0.5;
    let fail = |e: faer::linalg::evd::EvdError| Error::Numerical(format!("hermitian eigensolver failed: {e:?}"));
    let mut values = Vec::with_capacity(n);
    let mut vectors = DenseOperator::zeros(n);
    if op.data.iter().all(|z| z.im == 0.0) {
        let m = faer::Mat::<f64>::from_fn(n, n, |i, j| h(i, j).re);
        let e = m.self_adjoint_eigen(faer::Side::Lower).map_err(fail)?;
        let s = e.S().column_vector();
        let u = e.U();
        for k in 0..n {
            values.push(s[k]);
            for i in 0..n {
                vectors.set(i, k, C64::new(u[(i, k)], 0.0));
            }
        }
    } else {
        let m = faer::Mat::<C64>::from_fn(n, n, h);
        let e = m.self_adjoint_eigen(faer::Side::Lower).map_err(fail)?;
        let s = e.S().column_vector();
        let u = e.U();
        for k in 0..n {
            values.push(s[k].re);
            for i in 0..n {
                vectors.set(i, k, u[(i, k)]);
            }
        }
    }
    for k in 0..n {
        // largest component made real positive
        let mut best = 0;
        for i in 0..n {
            if vectors.get(i, k).norm() > vectors.get(best, k).norm() + 1e-12 {
                best = i;
            }
        }
        let b = vectors.get(best, k);
        if b.norm() > 0.0 {
            let ph = b.conj() / b.norm();
            for i in 0..n {
                vectors.set(i, k, vectors.get(i, k) * ph);
            }
        }
    }
    Ok(HermitianEigen { values, vectors })
}

pub fn pauli_x() -> DenseOperator {
    DenseOperator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).with_label("sigma_x")
}

pub fn pauli_y() -> DenseOperator {
    let i = Complex64::i();
    DenseOperator::from_fn(2, |r, c| match (r, c) {
        (0, 1) => -i,
        (1, 0) => i,
        _ => C64::new(0.0, 0.0),
    })
    .with_label("sigma_y")
}

pub fn pauli_z() -> DenseOperator {
    DenseOperator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).with_label("sigma_z")
}

/// Permutation operator on two spin-1/2 spaces.
pub fn permutation() -> DenseOperator {
    DenseOperator::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
    .with_label("P")
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
