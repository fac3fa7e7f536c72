//! Model operators of the XXX chain.
//!
//! R-matrices, reflection matrices and their fused versions, the transfer
//! matrices `t(u)`, `t^o(u)` and fused transfer matrices `W(u)`, `W^o(u)`,
//! the Hamiltonians and the scalar quantum-determinant functions.
//!
//! Transfer matrices are applied matrix-free: the auxiliary space is
//! contracted site by site against a vector on `aux (x) chain`, so the cost of
//! one application is `O(aux^2 * N * 2^N)`.

use serde::Serialize;

use crate::densecore::{kron, max_dim, DenseOperator};
use crate::error::{Error, Result};
use crate::{c64, C64};

/// Step used when the fused reflection matrices are evaluated near `u = 0`.
pub const FUSION_EPS: f64 = 1e-6;

const PHYS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Boundary {
    Periodic,
    Open { p: C64, q: C64, xi: C64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSpec {
    pub n_sites: usize,
    pub eta: C64,
    pub thetas: Vec<C64>,
    pub boundary: Boundary,
}

impl ChainSpec {
    pub fn new(n_sites: usize, eta: C64, thetas: Vec<C64>, boundary: Boundary) -> Result<Self> {
        let spec = Self { n_sites, eta, thetas, boundary };
        spec.validate()?;
        Ok(spec)
    }

    /// Homogeneous periodic chain with `eta = i`.
    pub fn periodic(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, c64(0.0, 1.0), vec![C64::default(); n_sites], Boundary::Periodic)
    }

    /// Homogeneous open chain with `eta = i`.
    pub fn open(n_sites: usize, p: C64, q: C64, xi: C64) -> Result<Self> {
        Self::new(n_sites, c64(0.0, 1.0), vec![C64::default(); n_sites], Boundary::Open { p, q, xi })
    }

    /// Open chain from `qbar = q / sqrt(1 + xi^2)`.
    pub fn open_from_qbar(n_sites: usize, p: C64, q_bar: C64, xi: C64) -> Result<Self> {
        let q = q_bar * (c64(1.0, 0.0) + xi * xi).sqrt();
        Self::open(n_sites, p, q, xi)
    }

    pub fn with_eta(mut self, eta: C64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_thetas(mut self, thetas: Vec<C64>) -> Result<Self> {
        self.thetas = thetas;
        self.validate()?;
        Ok(self)
    }

    pub fn with_n(&self, n_sites: usize) -> Result<Self> {
        Self::new(n_sites, self.eta, vec![C64::default(); n_sites], self.boundary)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::Argument("n_sites must be positive".into()));
        }
        if self.thetas.len() != self.n_sites {
            return Err(Error::Argument(format!(
                "{} inhomogeneities for {} sites",
                self.thetas.len(),
                self.n_sites
            )));
        }
        if self.eta.norm() == 0.0 {
            return Err(Error::Argument("eta must be nonzero".into()));
        }
        let finite = |z: C64| z.re.is_finite() && z.im.is_finite();
        if !finite(self.eta) || !self.thetas.iter().all(|&t| finite(t)) {
            return Err(Error::Argument("non-finite parameter".into()));
        }
        if let Boundary::Open { p, q, xi } = self.boundary {
            if !(finite(p) && finite(q) && finite(xi)) {
                return Err(Error::Argument("non-finite boundary parameter".into()));
            }
        }
        if self.n_sites >= usize::BITS as usize - 2 || (1usize << self.n_sites) > max_dim() {
            return Err(Error::Size { requested: 1usize << self.n_sites.min(60), max: max_dim() });
        }
        Ok(())
    }

    pub fn is_open(&self) -> bool {
        matches!(self.boundary, Boundary::Open { .. })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn is_homogeneous(&self) -> bool {
        self.thetas.iter().all(|t| t.norm() == 0.0)
    }

    /// Whether the Hamiltonian is Hermitian: always for the periodic chain,
    /// `p* = -p`, `q* = -q`, `xi* = xi` for the open chain, with imaginary `eta`.
    pub fn is_physical(&self) -> bool {
        match self.boundary {
            Boundary::Periodic => true,
            Boundary::Open { p, q, xi } => {
                let s = |z: C64| PHYS_TOL * z.norm().max(1.0);
                (p.conj() + p).norm() <= s(p)
                    && (q.conj() + q).norm() <= s(q)
                    && xi.im.abs() <= s(xi)
                    && self.eta.re.abs() <= s(self.eta)
            }
        }
    }

    pub fn q_bar(&self) -> Option<C64> {
        match self.boundary {
            Boundary::Open { q, xi, .. } => Some(q / (c64(1.0, 0.0) + xi * xi).sqrt()),
            Boundary::Periodic => None,
        }
    }

    fn open_params(&self) -> Result<(C64, C64, C64)> {
        match self.boundary {
            Boundary::Open { p, q, xi } => Ok((p, q, xi)),
            Boundary::Periodic => Err(Error::Mode("open-chain operator requested for a periodic chain".into())),
        }
    }

    fn require_periodic(&self) -> Result<()> {
        match self.boundary {
            Boundary::Periodic => Ok(()),
            Boundary::Open { .. } => Err(Error::Mode("periodic operator requested for an open chain".into())),
        }
    }
}

/// `R(u) = u + eta P`.
pub fn r_matrix(u: C64, eta: C64) -> DenseOperator {
    let z = C64::default();
    let a = u + eta;
    DenseOperator::from_vec(
        4,
        vec![a, z, z, z, z, u, eta, z, z, eta, u, z, z, z, z, a],
    )
    .expect("4x4")
    .with_label("R")
}

/// Spin-1 (x) spin-1/2 R-matrix in the symmetric basis
/// `{|11>, (|12>+|21>)/sqrt2, |22>}` of the fused pair.
pub fn fused_r_matrix(u: C64, eta: C64) -> DenseOperator {
    let s = eta * std::f64::consts::SQRT_2;
    let mut m = DenseOperator::zeros(6);
    m.set(0, 0, u + eta);
    m.set(1, 1, u - eta);
    m.set(1, 2, s);
    m.set(2, 1, s);
    m.set(2, 2, u);
    m.set(3, 3, u);
    m.set(3, 4, s);
    m.set(4, 3, s);
    m.set(4, 4, u - eta);
    m.set(5, 5, u + eta);
    m.with_label("R_fused")
}

/// Projector onto the symmetric subspace of two spin-1/2 spaces.
pub fn sym_projector() -> DenseOperator {
    let h = c64(0.5, 0.0);
    let mut m = DenseOperator::zeros(4);
    m.set(0, 0, c64(1.0, 0.0));
    m.set(1, 1, h);
    m.set(1, 2, h);
    m.set(2, 1, h);
    m.set(2, 2, h);
    m.set(3, 3, c64(1.0, 0.0));
    m.with_label("P+")
}

/// Projector onto the singlet.
pub fn antisym_projector() -> DenseOperator {
    DenseOperator::identity(4).sub(&sym_projector()).expect("4x4").with_label("P-")
}

/// Compresses a `4x4` operator to the symmetric subspace, `V^dag M V` with
/// `V` the `4x3` isometry onto `{|11>, (|12>+|21>)/sqrt2, |22>}`.
pub fn reduce_symmetric(m: &DenseOperator) -> Result<DenseOperator> {
    if m.dim() != 4 {
        return Err(Error::Argument("symmetric reduction needs a 4x4 operator".into()));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let v = |row: usize, col: usize| -> f64 {
        match (row, col) {
            (0, 0) | (3, 2) => 1.0,
            (1, 1) | (2, 1) => r,
            _ => 0.0,
        }
    };
    Ok(DenseOperator::from_fn(3, |i, j| {
        let mut acc = C64::default();
        for a in 0..4 {
            for b in 0..4 {
                acc += v(a, i) * m.get(a, b) * v(b, j);
            }
        }
        acc
    }))
}

/// Reflection matrices `(K^-(u), K^+(u))`.
pub fn k_matrices(u: C64, spec: &ChainSpec) -> Result<(DenseOperator, DenseOperator)> {
    let (p, q, xi) = spec.open_params()?;
    Ok(k_pair(u, spec.eta, p, q, xi))
}

fn k_minus(u: C64, p: C64) -> DenseOperator {
    DenseOperator::diagonal(&[p + u, p - u]).with_label("K-")
}

fn k_plus(u: C64, eta: C64, q: C64, xi: C64) -> DenseOperator {
    let o = xi * (u + eta);
    DenseOperator::from_vec(2, vec![q + u + eta, o, o, q - u - eta]).expect("2x2").with_label("K+")
}

fn k_pair(u: C64, eta: C64, p: C64, q: C64, xi: C64) -> (DenseOperator, DenseOperator) {
    (k_minus(u, p), k_plus(u, eta, q, xi))
}

/// Fused reflection matrices `(K^(1)-(u), K^(1)+(u))` on the spin-1 space.
pub fn fused_k_matrices(u: C64, spec: &ChainSpec) -> Result<(DenseOperator, DenseOperator)> {
    let (p, q, xi) = spec.open_params()?;
    if u.norm() == 0.0 {
        return Err(Error::DivisionByZero("fused reflection matrices at u = 0".into()));
    }
    let eta = spec.eta;
    let id = DenseOperator::identity(2);
    let two_u = u * 2.0;
    let km = kron(&id, &k_minus(u, p))?
        .matmul(&r_matrix(two_u - eta, eta))?
        .matmul(&kron(&k_minus(u - eta, p), &id)?)?;
    let kp = kron(&k_plus(u - eta, eta, q, xi), &id)?
        .matmul(&r_matrix(-two_u - eta, eta))?
        .matmul(&kron(&id, &k_plus(u, eta, q, xi))?)?;
    let km = reduce_symmetric(&km)?.scale(two_u.inv()).with_label("K1-");
    let kp = reduce_symmetric(&kp)?.scale(two_u.inv()).with_label("K1+");
    Ok((km, kp))
}

/// Fused reflection matrices, averaged over `u +- FUSION_EPS` when `|u|` is
/// below the step.
pub fn fused_k_matrices_regular(u: C64, spec: &ChainSpec) -> Result<(DenseOperator, DenseOperator)> {
    if u.norm() >= FUSION_EPS {
        return fused_k_matrices(u, spec);
    }
    let e = c64(FUSION_EPS, 0.0);
    let (m1, p1) = fused_k_matrices(u + e, spec)?;
    let (m2, p2) = fused_k_matrices(u - e, spec)?;
    let h = c64(0.5, 0.0);
    Ok((m1.add(&m2)?.scale(h), p1.add(&p2)?.scale(h)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OperatorKind {
    /// `t(u)`
    Transfer,
    /// `W(u)`
    Fused,
    /// `t^o(u)`
    OpenTransfer,
    /// `W^o(u)`
    OpenFused,
}

impl OperatorKind {
    pub fn aux_dim(self) -> usize {
        match self {
            OperatorKind::Transfer | OperatorKind::OpenTransfer => 2,
            OperatorKind::Fused | OperatorKind::OpenFused => 3,
        }
    }

    pub fn is_open(self) -> bool {
        matches!(self, OperatorKind::OpenTransfer | OperatorKind::OpenFused)
    }

    /// Transfer matrix (`true`) or fused transfer matrix (`false`) of a chain.
    pub fn for_chain(open: bool, fused: bool) -> Self {
        match (open, fused) {
            (false, false) => OperatorKind::Transfer,
            (false, true) => OperatorKind::Fused,
            (true, false) => OperatorKind::OpenTransfer,
            (true, true) => OperatorKind::OpenFused,
        }
    }
}

#[derive(Clone, Debug)]
enum Step {
    /// Acts on `aux (x) site`; `mat` has dimension `2 * aux`.
    Site { shift: usize, mat: Vec<C64> },
    /// Acts on the auxiliary space only.
    Aux(Vec<C64>),
}

/// A transfer-type operator `tr_0 (M_k ... M_1)` stored as its factor list.
#[derive(Clone, Debug)]
pub struct ChainOperator {
    kind: OperatorKind,
    u: C64,
    n_sites: usize,
    aux: usize,
    steps: Vec<Step>,
}

impl ChainOperator {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn u(&self) -> C64 {
        self.u
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    /// Applies the operator to a chain vector.
    pub fn apply(&self, psi: &[C64]) -> Result<Vec<C64>> {
        let q = self.dim();
        if psi.len() != q {
            return Err(Error::Argument(format!("vector length {} does not match {q}", psi.len())));
        }
        let a = self.aux;
        let mut out = vec![C64::default(); q];
        let mut v = vec![C64::default(); a * q];
        for s in 0..a {
            v.iter_mut().for_each(|x| *x = C64::default());
            v[s * q..(s + 1) * q].copy_from_slice(psi);
            for step in &self.steps {
                match step {
                    Step::Site { shift, mat } => apply_site(&mut v, a, q, *shift, mat),
                    Step::Aux(mat) => apply_aux(&mut v, a, q, mat),
                }
            }
            for (o, x) in out.iter_mut().zip(&v[s * q..(s + 1) * q]) {
                *o += x;
            }
        }
        Ok(out)
    }

    /// Dense matrix, column by column.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        let q = self.dim();
        let mut m = DenseOperator::zeros(q);
        let mut e = vec![C64::default(); q];
        for j in 0..q {
            e[j] = c64(1.0, 0.0);
            let col = self.apply(&e)?;
            e[j] = C64::default();
            for (i, x) in col.into_iter().enumerate() {
                m.set(i, j, x);
            }
        }
        Ok(m.with_label(format!("{:?}", self.kind)))
    }
}

fn apply_site(v: &mut [C64], a: usize, q: usize, shift: usize, mat: &[C64]) {
    let d = 2 * a;
    let bit = 1usize << shift;
    let mut buf = [C64::default(); 6];
    let mut res = [C64::default(); 6];
    for x0 in (0..q).filter(|x| x & bit == 0) {
        for al in 0..a {
            buf[2 * al] = v[al * q + x0];
            buf[2 * al + 1] = v[al * q + (x0 | bit)];
        }
        for r in 0..d {
            let row = &mat[r * d..(r + 1) * d];
            res[r] = row.iter().zip(&buf[..d]).map(|(m, x)| m * x).sum();
        }
        for al in 0..a {
            v[al * q + x0] = res[2 * al];
            v[al * q + (x0 | bit)] = res[2 * al + 1];
        }
    }
}

fn apply_aux(v: &mut [C64], a: usize, q: usize, mat: &[C64]) {
    let mut buf = [C64::default(); 3];
    for x in 0..q {
        for al in 0..a {
            buf[al] = v[al * q + x];
        }
        for r in 0..a {
            v[r * q + x] = (0..a).map(|c| mat[r * a + c] * buf[c]).sum();
        }
    }
}

fn site_step(spec: &ChainSpec, site: usize, m: DenseOperator) -> Step {
    Step::Site { shift: spec.n_sites - site, mat: m.data().to_vec() }
}

/// Builds `t(u)`, `W(u)`, `t^o(u)` or `W^o(u)` for the chain.
pub fn chain_operator(kind: OperatorKind, u: C64, spec: &ChainSpec) -> Result<ChainOperator> {
    spec.validate()?;
    let n = spec.n_sites;
    let eta = spec.eta;
    let fused = kind.aux_dim() == 3;
    let rm = |v: C64| if fused { fused_r_matrix(v, eta) } else { r_matrix(v, eta) };
    let mut steps = Vec::with_capacity(2 * n + 2);
    if kind.is_open() {
        spec.open_params()?;
        let (km, kp) = if fused { fused_k_matrices(u, spec)? } else { k_matrices(u, spec)? };
        // reflected row: R_{0N}(u+theta_N) acts first
        for j in (1..=n).rev() {
            steps.push(site_step(spec, j, rm(u + spec.thetas[j - 1])));
        }
        steps.push(Step::Aux(km.data().to_vec()));
        for j in 1..=n {
            steps.push(site_step(spec, j, rm(u - spec.thetas[j - 1])));
        }
        steps.push(Step::Aux(kp.data().to_vec()));
    } else {
        spec.require_periodic()?;
        for j in 1..=n {
            steps.push(site_step(spec, j, rm(u - spec.thetas[j - 1])));
        }
    }
    Ok(ChainOperator { kind, u, n_sites: n, aux: kind.aux_dim(), steps })
}

pub fn transfer_periodic(u: C64, spec: &ChainSpec) -> Result<ChainOperator> {
    chain_operator(OperatorKind::Transfer, u, spec)
}

pub fn w_operator_periodic(u: C64, spec: &ChainSpec) -> Result<ChainOperator> {
    chain_operator(OperatorKind::Fused, u, spec)
}

pub fn transfer_open(u: C64, spec: &ChainSpec) -> Result<ChainOperator> {
    chain_operator(OperatorKind::OpenTransfer, u, spec)
}

/// `W^o(u)`; fails at `u = 0` where the fused reflection matrices are
/// normalised by `2u`. See [`w_operator_open_limit`].
pub fn w_operator_open(u: C64, spec: &ChainSpec) -> Result<ChainOperator> {
    chain_operator(OperatorKind::OpenFused, u, spec)
}

/// `W^o(u)` as a dense matrix, averaged over `u +- FUSION_EPS` near zero.
pub fn w_operator_open_limit(u: C64, spec: &ChainSpec) -> Result<DenseOperator> {
    if u.norm() >= FUSION_EPS {
        return w_operator_open(u, spec)?.to_dense();
    }
    let e = c64(FUSION_EPS, 0.0);
    let a = w_operator_open(u + e, spec)?.to_dense()?;
    let b = w_operator_open(u - e, spec)?.to_dense()?;
    Ok(a.add(&b)?.scale(c64(0.5, 0.0)))
}

/// One term of a Hamiltonian written in Pauli matrices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PauliTerm {
    /// `coef * sigma_i . sigma_j`
    Exchange { i: usize, j: usize, coef: C64 },
    /// `coef * sigma^z_i`
    Z { i: usize, coef: C64 },
    /// `coef * sigma^x_i`
    X { i: usize, coef: C64 },
}

/// Hamiltonian as a list of Pauli terms on sites `1..=n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PauliHamiltonian {
    pub n_sites: usize,
    pub terms: Vec<PauliTerm>,
}

impl PauliHamiltonian {
    /// `H = sum_j sigma_j . sigma_{j+1}` (periodic) or
    /// `sum_{j<N} sigma_j . sigma_{j+1} + (eta/p) s^z_1 + (eta/q)(s^z_N + xi s^x_N)` (open).
    pub fn from_spec(spec: &ChainSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_sites;
        let one = c64(1.0, 0.0);
        let mut terms = Vec::new();
        match spec.boundary {
            Boundary::Periodic => {
                for j in 1..=n {
                    let k = j % n + 1;
                    if k != j {
                        terms.push(PauliTerm::Exchange { i: j, j: k, coef: one });
                    }
                }
            }
            Boundary::Open { p, q, xi } => {
                if p.norm() == 0.0 || q.norm() == 0.0 {
                    return Err(Error::DivisionByZero("boundary field with p = 0 or q = 0".into()));
                }
                for j in 1..n {
                    terms.push(PauliTerm::Exchange { i: j, j: j + 1, coef: one });
                }
                let eta = spec.eta;
                terms.push(PauliTerm::Z { i: 1, coef: eta / p });
                terms.push(PauliTerm::Z { i: n, coef: eta / q });
                terms.push(PauliTerm::X { i: n, coef: eta * xi / q });
            }
        }
        Ok(Self { n_sites: n, terms })
    }

    /// Whether the total magnetisation is conserved.
    pub fn conserves_magnetization(&self) -> bool {
        self.terms.iter().all(|t| match t {
            PauliTerm::X { coef, .. } => coef.norm() == 0.0,
            _ => true,
        })
    }

    /// Nonzero elements `(y, H[y][x])` of column `x`.
    pub fn column(&self, x: usize) -> Vec<(usize, C64)> {
        let n = self.n_sites;
        let bit = |s: usize| 1usize << (n - s);
        let spin = |s: usize| if x & bit(s) == 0 { 1.0 } else { -1.0 };
        let mut diag = C64::default();
        let mut off: Vec<(usize, C64)> = Vec::new();
        for t in &self.terms {
            match *t {
                PauliTerm::Exchange { i, j, coef } => {
                    let (si, sj) = (spin(i), spin(j));
                    diag += coef * (si * sj);
                    if si != sj {
                        off.push((x ^ bit(i) ^ bit(j), coef * 2.0));
                    }
                }
                PauliTerm::Z { i, coef } => diag += coef * spin(i),
                PauliTerm::X { i, coef } if coef.norm() != 0.0 => off.push((x ^ bit(i), coef)),
                PauliTerm::X { .. } => {}
            }
        }
        let mut out = Vec::with_capacity(off.len() + 1);
        out.push((x, diag));
        for (y, v) in off {
            match out.iter_mut().find(|(k, _)| *k == y) {
                Some(e) => e.1 += v,
                None => out.push((y, v)),
            }
        }
        out
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        let d = 1usize << self.n_sites;
        if d > max_dim() {
            return Err(Error::Size { requested: d, max: max_dim() });
        }
        let mut m = DenseOperator::zeros(d);
        for x in 0..d {
            for (y, v) in self.column(x) {
                m.set(y, x, m.get(y, x) + v);
            }
        }
        Ok(m.with_label("H"))
    }

    /// Restriction to the basis states listed in `basis`, which must be
    /// closed under the action of `H`.
    pub fn block(&self, basis: &[usize]) -> Result<DenseOperator> {
        let index: std::collections::HashMap<usize, usize> =
            basis.iter().enumerate().map(|(k, &x)| (x, k)).collect();
        let mut m = DenseOperator::zeros(basis.len());
        for (c, &x) in basis.iter().enumerate() {
            for (y, v) in self.column(x) {
                let r = *index
                    .get(&y)
                    .ok_or_else(|| Error::Argument("basis not invariant under H".into()))?;
                m.set(r, c, m.get(r, c) + v);
            }
        }
        Ok(m)
    }

    pub fn apply(&self, psi: &[C64]) -> Result<Vec<C64>> {
        let d = 1usize << self.n_sites;
        if psi.len() != d {
            return Err(Error::Argument("vector length mismatch".into()));
        }
        let mut out = vec![C64::default(); d];
        for (x, &a) in psi.iter().enumerate() {
            if a == C64::default() {
                continue;
            }
            for (y, v) in self.column(x) {
                out[y] += v * a;
            }
        }
        Ok(out)
    }
}

/// Hamiltonian built from its Pauli form.
pub fn hamiltonian(spec: &ChainSpec) -> Result<DenseOperator> {
    PauliHamiltonian::from_spec(spec)?.to_dense()
}

/// Hamiltonian generated by the transfer matrix:
/// `2 eta t'(0) t(0)^-1 - N` (periodic) or `eta t'(0) t(0)^-1 - N` (open),
/// with a central difference of step `h`.
pub fn hamiltonian_from_transfer(spec: &ChainSpec, h: f64) -> Result<DenseOperator> {
    let kind = OperatorKind::for_chain(spec.is_open(), false);
    let hh = c64(h, 0.0);
    let tp = chain_operator(kind, hh, spec)?.to_dense()?;
    let tm = chain_operator(kind, -hh, spec)?.to_dense()?;
    let t0 = chain_operator(kind, C64::default(), spec)?.to_dense()?;
    let inv = t0.inverse().map_err(|_| Error::Numerical("t(0) is not invertible".into()))?;
    let deriv = tp.sub(&tm)?.scale(c64(0.5 / h, 0.0));
    let pref = if spec.is_open() { spec.eta } else { spec.eta * 2.0 };
    Ok(deriv.matmul(&inv)?.scale(pref).shift(c64(-(spec.n_sites as f64), 0.0)))
}

/// Scalar functions attached to a chain.
#[derive(Clone, Debug)]
pub struct ScalarFns {
    spec: ChainSpec,
}

pub fn scalar_fns(spec: &ChainSpec) -> ScalarFns {
    ScalarFns { spec: spec.clone() }
}

impl ScalarFns {
    fn eta(&self) -> C64 {
        self.spec.eta
    }

    /// `a(u) = prod_j (u - theta_j + eta)`
    pub fn a(&self, u: C64) -> C64 {
        self.spec.thetas.iter().map(|t| u - t + self.eta()).product()
    }

    /// `d(u) = a(u - eta) = prod_j (u - theta_j)`
    pub fn d(&self, u: C64) -> C64 {
        self.a(u - self.eta())
    }

    fn sq(&self) -> C64 {
        let xi = match self.spec.boundary {
            Boundary::Open { xi, .. } => xi,
            Boundary::Periodic => C64::default(),
        };
        (c64(1.0, 0.0) + xi * xi).sqrt()
    }

    fn pq(&self) -> (C64, C64) {
        match self.spec.boundary {
            Boundary::Open { p, q, .. } => (p, q),
            Boundary::Periodic => (C64::default(), C64::default()),
        }
    }

    /// `a^o(u) = (u+eta)/(u+eta/2) (u+p)(sqrt(1+xi^2) u + q) prod_j (u-theta_j+eta)(u+theta_j+eta)`
    pub fn a_open(&self, u: C64) -> C64 {
        let eta = self.eta();
        let (p, q) = self.pq();
        let prod: C64 = self.spec.thetas.iter().map(|t| (u - t + eta) * (u + t + eta)).product();
        (u + eta) / (u + eta / 2.0) * (u + p) * (self.sq() * u + q) * prod
    }

    /// `d^o(u) = a^o(-u-eta)`
    pub fn d_open(&self, u: C64) -> C64 {
        self.a_open(-u - self.eta())
    }

    /// Quantum determinant `Delta^o(u) = a^o(u) d^o(u-eta) (u+eta/2)(u-eta/2)`, a polynomial.
    pub fn delta_open(&self, u: C64) -> C64 {
        let eta = self.eta();
        let (p, q) = self.pq();
        let sq = self.sq();
        let prod: C64 = self
            .spec
            .thetas
            .iter()
            .map(|t| (u - t + eta) * (u + t + eta) * (u - t - eta) * (u + t - eta))
            .product();
        (u + eta) * (u - eta) * (u + p) * (u - p) * (sq * u + q) * (sq * u - q) * prod
    }

    /// Homogeneous quantum determinant
    /// `Delta(u) = (u-eta)(u+eta)(u-p)(u+p)(s u+q)(s u-q)(u+eta)^2N (u-eta)^2N`.
    pub fn delta_hom(&self, u: C64) -> C64 {
        let eta = self.eta();
        let (p, q) = self.pq();
        let sq = self.sq();
        let n = self.spec.n_sites as i32;
        (u - eta) * (u + eta) * (u - p) * (u + p) * (sq * u + q) * (sq * u - q)
            * ((u + eta) * (u - eta)).powi(2 * n)
    }

    /// `phi(u) = eta^2 - u^2`
    pub fn phi(&self, u: C64) -> C64 {
        self.eta() * self.eta() - u * u
    }

    /// `rho_2(u) = -u(u + 2 eta)`
    pub fn rho2(&self, u: C64) -> C64 {
        -u * (u + self.eta() * 2.0)
    }

    /// `prod_j (u - theta_j)(u + theta_j)`
    pub fn theta_prod(&self, u: C64) -> C64 {
        self.spec.thetas.iter().map(|t| (u - t) * (u + t)).product()
    }

    /// Coefficient of `W^o(u)` in the open operator identity,
    /// `4u^2 / rho_2(2u - eta) * prod_j (u-theta_j)(u+theta_j)`.
    pub fn w_open_coefficient(&self, u: C64) -> C64 {
        u * u * 4.0 / self.rho2(u * 2.0 - self.eta()) * self.theta_prod(u)
    }

    pub fn q_bar(&self) -> Option<C64> {
        self.spec.q_bar()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densecore::{embed, hermitian_eigs, permutation, partial_trace_aux, FactorSpace};

    fn i() -> C64 {
        c64(0.0, 1.0)
    }

    fn fig2(n: usize) -> ChainSpec {
        ChainSpec::open_from_qbar(n, c64(0.0, -1.2), c64(0.0, 0.8), c64(1.0, 0.0)).unwrap()
    }

    #[test]
    fn r_initial_and_fusion_conditions() {
        let eta = i();
        assert_eq!(r_matrix(C64::default(), eta), permutation().scale(eta).with_label("R"));
        let r = r_matrix(eta, eta);
        let expect = sym_projector().scale(eta * 2.0);
        assert!(r.rel_diff(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn r_unitarity() {
        let eta = i();
        let u = c64(0.5, 0.0);
        let prod = r_matrix(u, eta).matmul(&r_matrix(-u, eta)).unwrap();
        let expect = DenseOperator::identity(4).scale(c64(-1.25, 0.0));
        assert!(prod.rel_diff(&expect).unwrap() < 1e-14);
    }

    #[test]
    fn traces_of_r_matrices() {
        let v = c64(0.3, -0.2);
        let t = partial_trace_aux(&r_matrix(v, i()), FactorSpace::new(2, 2).unwrap()).unwrap();
        assert!(t.rel_diff(&DenseOperator::identity(2).scale(v * 2.0 + i())).unwrap() < 1e-15);
        let t = partial_trace_aux(&fused_r_matrix(v, i()), FactorSpace::new(3, 2).unwrap()).unwrap();
        assert!(t.rel_diff(&DenseOperator::identity(2).scale(v * 3.0)).unwrap() < 1e-15);
    }

    #[test]
    fn fused_r_literal_entries() {
        let u = c64(0.7, 0.1);
        let m = fused_r_matrix(u, i());
        assert_eq!(m.get(0, 0), u + i());
        assert!((m.get(1, 2) - i() * 2f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn k_examples() {
        let spec = fig2(2);
        let (km, _) = k_matrices(C64::default(), &spec).unwrap();
        assert_eq!(km, DenseOperator::identity(2).scale(c64(0.0, -1.2)).with_label("K-"));
        let s0 = ChainSpec::open(2, c64(0.0, -1.2), c64(0.0, 0.8), C64::default()).unwrap();
        let u = c64(0.3, 0.0);
        let (_, kp) = k_matrices(u, &s0).unwrap();
        assert_eq!(kp.get(0, 1), C64::default());
        assert_eq!(kp.get(1, 1), c64(0.0, 0.8) - u - i());
        assert!(matches!(k_matrices(u, &ChainSpec::periodic(2).unwrap()), Err(Error::Mode(_))));
    }

    #[test]
    fn fused_k_near_zero() {
        let spec = fig2(2);
        assert!(matches!(fused_k_matrices(C64::default(), &spec), Err(Error::DivisionByZero(_))));
        let (a, b) = fused_k_matrices(c64(1e-6, 0.0), &spec).unwrap();
        let (c, d) = fused_k_matrices(c64(2e-6, 0.0), &spec).unwrap();
        // the fused matrices are smooth at 0: the change between the two
        // points is the first-order term, a few times 1e-6
        assert!(a.sub(&c).unwrap().max_abs() < 5e-6);
        assert!(b.sub(&d).unwrap().max_abs() < 5e-6);
        assert!(fused_k_matrices_regular(C64::default(), &spec).is_ok());
    }

    #[test]
    fn single_site_transfer_matrices() {
        let th = c64(0.2, 0.0);
        let spec = ChainSpec::periodic(1).unwrap().with_thetas(vec![th]).unwrap();
        let u = c64(0.4, 0.3);
        let t = transfer_periodic(u, &spec).unwrap().to_dense().unwrap();
        assert!(t.rel_diff(&DenseOperator::identity(2).scale((u - th) * 2.0 + i())).unwrap() < 1e-15);
        let w = w_operator_periodic(u, &spec).unwrap().to_dense().unwrap();
        assert!(w.rel_diff(&DenseOperator::identity(2).scale((u - th) * 3.0)).unwrap() < 1e-15);
    }

    #[test]
    fn mode_errors() {
        let p = ChainSpec::periodic(2).unwrap();
        assert!(matches!(transfer_open(C64::default(), &p), Err(Error::Mode(_))));
        assert!(matches!(transfer_periodic(C64::default(), &fig2(2)), Err(Error::Mode(_))));
    }

    #[test]
    fn open_transfer_at_zero_is_scalar() {
        let spec = fig2(2);
        let t = transfer_open(C64::default(), &spec).unwrap().to_dense().unwrap();
        let s = t.get(0, 0);
        assert!(t.rel_diff(&DenseOperator::identity(4).scale(s)).unwrap() < 1e-14);
        // t^o(0)^2 times (eta/2)(-eta/2) equals the quantum determinant at 0
        let f = scalar_fns(&spec);
        let eta = spec.eta;
        let lhs = s * s * (eta / 2.0) * (-eta / 2.0);
        let t1 = transfer_open(-eta, &spec).unwrap().to_dense().unwrap().get(0, 0);
        assert!((s - t1).norm() < 1e-12 * s.norm());
        assert!((lhs - f.delta_open(C64::default())).norm() < 1e-12 * lhs.norm());
    }

    #[test]
    fn pauli_hamiltonian_small() {
        let h = hamiltonian(&ChainSpec::periodic(2).unwrap()).unwrap();
        let e = hermitian_eigs(&h).unwrap();
        let expect = [-6.0, 2.0, 2.0, 2.0];
        for (a, b) in e.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let ho = hamiltonian(&fig2(3)).unwrap();
        assert!(ho.hermiticity_defect() <= 1e-12 * ho.max_abs());
        assert!(!PauliHamiltonian::from_spec(&fig2(3)).unwrap().conserves_magnetization());
    }

    #[test]
    fn pauli_apply_matches_dense() {
        let spec = fig2(4);
        let ph = PauliHamiltonian::from_spec(&spec).unwrap();
        let h = ph.to_dense().unwrap();
        let v: Vec<C64> = (0..16).map(|k| c64(k as f64 * 0.1, 1.0 - k as f64 * 0.05)).collect();
        let a = h.apply(&v).unwrap();
        let b = ph.apply(&v).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn exchange_term_matches_kron() {
        let spec = ChainSpec::periodic(3).unwrap();
        let h = hamiltonian(&spec).unwrap();
        let mut expect = DenseOperator::zeros(8);
        for (a, b) in [(1, 2), (2, 3), (3, 1)] {
            for s in [crate::densecore::pauli_x(), crate::densecore::pauli_y(), crate::densecore::pauli_z()] {
                let ss = kron(&s, &s).unwrap();
                expect = expect.add(&embed(&ss, &[a, b], 3).unwrap()).unwrap();
            }
        }
        assert!(h.rel_diff(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn physicality_flag() {
        assert!(fig2(2).is_physical());
        let real_p = ChainSpec::open(2, c64(1.0, 0.0), c64(0.0, 0.8), c64(1.0, 0.0)).unwrap();
        assert!(!real_p.is_physical());
        assert!(ChainSpec::periodic(4).unwrap().is_physical());
    }

    #[test]
    fn spec_validation() {
        assert!(ChainSpec::periodic(0).is_err());
        assert!(ChainSpec::periodic(2).unwrap().with_thetas(vec![C64::default()]).is_err());
        assert!(ChainSpec::periodic(2).unwrap().with_eta(C64::default()).is_err());
    }

    #[test]
    fn scalar_examples() {
        let spec = ChainSpec::periodic(3).unwrap();
        let f = scalar_fns(&spec);
        assert!((f.a(C64::default()) - i().powi(3)).norm() < 1e-15);
        let th = vec![c64(0.1, 0.0), c64(-0.2, 0.0)];
        let s2 = ChainSpec::periodic(2).unwrap().with_thetas(th.clone()).unwrap();
        let f2 = scalar_fns(&s2);
        for t in th {
            assert_eq!(f2.d(t), C64::default());
        }
        let fo = scalar_fns(&fig2(2));
        assert_eq!(fo.a_open(-i()), C64::default());
        let u = c64(0.37, 0.21);
        assert!((fo.d_open(u) - fo.a_open(-u - i())).norm() < 1e-14);
        let lhs = fo.a_open(u) * fo.d_open(u - i()) * (u + i() / 2.0) * (u - i() / 2.0);
        assert!((lhs - fo.delta_open(u)).norm() < 1e-12 * lhs.norm());
        assert!((fo.delta_open(u) - fo.delta_hom(u)).norm() < 1e-12 * lhs.norm());
    }
}
