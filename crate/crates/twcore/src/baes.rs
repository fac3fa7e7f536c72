//! Zero-root Bethe ansatz equations of the ground state.
//!
//! Roots are packed as real unknowns so that conjugation symmetry holds by
//! construction. Each bulk string is `x +- i y` with both `x` and `y`
//! iterated. The open chain also carries the boundary roots `z_1 eta`,
//! `chi_1 eta`, `chi_2 eta`; since `chi_1 - z_1 + 1/2` is exponentially small
//! in `N`, it enters as `log(delta)` and the two factors that would cancel
//! are written out analytically.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chainops::{Boundary, ChainSpec};
use crate::error::{Error, Result};
use crate::spectra::{RootSet, StringPair};
use crate::{c64, C64};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 200;
/// Relative finite-difference step of the Jacobian.
pub const FD_STEP: f64 = 1e-7;
pub const MAX_HALVINGS: usize = 30;
/// Smallest allowed distance between two factors of a product.
pub const COLLISION_TOL: f64 = 1e-10;

/// Seed offsets of the imaginary parts, in units of `|eta|`.
pub const SEED_Y_Z: f64 = 0.95;
pub const SEED_Y_W: f64 = 1.47;
pub const SEED_Y_Z_OPEN: f64 = 0.99;
pub const SEED_Y_W_OPEN: f64 = 1.51;
/// Default initial gap of the linked boundary pair.
pub const SEED_DELTA: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BaeKind {
    Periodic,
    Open,
}

/// Homogeneous BAE system of an even chain with imaginary `eta`.
#[derive(Clone, Debug, Serialize)]
pub struct BaeSystem {
    pub kind: BaeKind,
    pub n_sites: usize,
    pub eta: C64,
    /// `(p, q, xi)` for the open chain.
    pub boundary: Option<(C64, C64, C64)>,
}

/// Unpacked roots in absolute units.
#[derive(Clone, Debug)]
struct Roots {
    z: Vec<C64>,
    w: Vec<C64>,
    /// Open: `delta` of the linked pair `z[0]`, `w[0]`.
    delta: Option<f64>,
}

impl BaeSystem {
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        if spec.n_sites == 0 || !spec.n_sites.is_multiple_of(2) {
            return Err(Error::Argument("the ground-state ansatz needs an even number of sites".into()));
        }
        if !spec.is_homogeneous() {
            return Err(Error::Argument("BAE system is homogeneous".into()));
        }
        if spec.eta.re.abs() > 1e-12 * spec.eta.norm() || spec.eta.im <= 0.0 {
            return Err(Error::Domain("string packing assumes eta = i kappa with kappa > 0".into()));
        }
        let (kind, boundary) = match spec.boundary {
            Boundary::Periodic => (BaeKind::Periodic, None),
            Boundary::Open { p, q, xi } => (BaeKind::Open, Some((p, q, xi))),
        };
        Ok(Self { kind, n_sites: spec.n_sites, eta: spec.eta, boundary })
    }

    fn kappa(&self) -> f64 {
        self.eta.im
    }

    fn m(&self) -> usize {
        self.n_sites / 2
    }

    /// Number of real unknowns.
    pub fn unknown_count(&self) -> usize {
        match self.kind {
            BaeKind::Periodic => 2 * self.n_sites,
            BaeKind::Open => 2 * self.n_sites + 3,
        }
    }

    /// Number of strings per family.
    pub fn string_count(&self) -> usize {
        self.m()
    }

    fn unpack(&self, x: &[f64]) -> Result<Roots> {
        if x.len() != self.unknown_count() {
            return Err(Error::Argument(format!("{} unknowns, expected {}", x.len(), self.unknown_count())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("unknowns must be finite".into()));
        }
        let m = self.m();
        let eta = self.eta;
        let pairs = |s: &[f64]| -> Vec<C64> {
            s.chunks(2).flat_map(|c| [c64(c[0], c[1]), c64(c[0], -c[1])]).collect()
        };
        match self.kind {
            BaeKind::Periodic => Ok(Roots { z: pairs(&x[..2 * m]), w: pairs(&x[2 * m..]), delta: None }),
            BaeKind::Open => {
                let (z1, ld, c2) = (x[0], x[1], x[2]);
                let delta = ld.exp();
                let mut z = vec![eta * z1];
                z.extend(pairs(&x[3..3 + 2 * m]));
                let mut w = vec![eta * (z1 - 0.5 + delta), eta * c2];
                w.extend(pairs(&x[3 + 2 * m..]));
                Ok(Roots { z, w, delta: Some(delta) })
            }
        }
    }

    /// Complex log-ratio residuals, imaginary parts unwrapped.
    fn raw_residuals(&self, x: &[f64]) -> Result<Vec<C64>> {
        let r = self.unpack(x)?;
        let mut acc = LogAcc::default();
        match self.kind {
            BaeKind::Periodic => self.periodic(&r, &mut acc),
            BaeKind::Open => self.open(&r, &mut acc),
        }
        acc.finish()
    }

    fn periodic(&self, r: &Roots, acc: &mut LogAcc) {
        let eta = self.eta;
        let n = self.n_sites as f64;
        for &z in &r.z {
            let u = z - eta / 2.0;
            acc.start();
            acc.add_pow(z + eta / 2.0, n);
            acc.add_pow(z - eta * 1.5, n);
            acc.add_pow(u, -n);
            acc.add(c64(-1.0 / 3.0, 0.0), 1.0);
            for &w in &r.w {
                acc.add(u - w, -1.0);
            }
        }
        for &w in &r.w {
            acc.start();
            acc.add(c64(4.0, 0.0), 1.0);
            for &z in &r.z {
                acc.add(w - z + eta / 2.0, 1.0);
                acc.add(w - z - eta / 2.0, 1.0);
            }
            acc.add_pow((w + eta) * (w - eta), -n);
        }
    }

    fn log_delta_hom(&self, u: C64, acc: &mut LogAcc, sign: f64) {
        let (p, q, xi) = self.boundary.expect("open system");
        let eta = self.eta;
        let n = self.n_sites as f64;
        acc.add_pow((u + eta) * (u - eta), sign * (2.0 * n + 1.0));
        acc.add((u + p) * (u - p), sign);
        acc.add((xi * xi + 1.0) * u * u - q * q, sign);
    }

    fn open(&self, r: &Roots, acc: &mut LogAcc) {
        let (_, _, xi) = self.boundary.expect("open system");
        let eta = self.eta;
        let n = self.n_sites as f64;
        let delta = r.delta.unwrap_or(0.0);
        for (iz, &z) in r.z.iter().enumerate() {
            for sg in [1.0, -1.0] {
                let u = z * sg - eta / 2.0;
                acc.start();
                self.log_delta_hom(u, acc, 1.0);
                acc.add_pow(u, -(2.0 * n + 2.0));
                acc.add(xi * xi - 3.0, -1.0);
                for (iw, &w) in r.w.iter().enumerate() {
                    if iz == 0 && iw == 0 && sg > 0.0 {
                        acc.add_linked(-eta * delta, u + w, -1.0);
                    } else {
                        acc.add((u - w) * (u + w), -1.0);
                    }
                }
            }
        }
        for (iw, &w) in r.w.iter().enumerate() {
            acc.start();
            self.log_delta_hom(w, acc, 1.0);
            acc.add((w * w - eta * eta / 4.0) * 4.0, -1.0);
            for (iz, &z) in r.z.iter().enumerate() {
                for sh in [0.5, -0.5] {
                    let a = w + eta * sh;
                    if iz == 0 && iw == 0 && sh > 0.0 {
                        acc.add_linked(eta * delta, a + z, -1.0);
                    } else {
                        acc.add((a - z) * (a + z), -1.0);
                    }
                }
            }
        }
    }

    /// Real residual vector: log-magnitudes then phases (wrapped to `(-pi, pi]`).
    pub fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        let raw = self.raw_residuals(x)?;
        let mut out: Vec<f64> = raw.iter().map(|c| c.re).collect();
        out.extend(raw.iter().map(|c| wrap(c.im)));
        Ok(out)
    }

    fn jacobian(&self, x: &[f64], raw0: &[C64]) -> Result<DMatrix<f64>> {
        let k = x.len();
        let mrows = 2 * raw0.len();
        let mut jac = DMatrix::<f64>::zeros(mrows, k);
        let mut xp = x.to_vec();
        for col in 0..k {
            let h = FD_STEP * x[col].abs().max(1.0);
            xp[col] = x[col] + h;
            let fp = self.raw_residuals(&xp)?;
            xp[col] = x[col] - h;
            let fm = self.raw_residuals(&xp)?;
            xp[col] = x[col];
            let half = raw0.len();
            for row in 0..half {
                let d = fp[row] - fm[row];
                jac[(row, col)] = d.re / (2.0 * h);
                jac[(half + row, col)] = wrap(d.im) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// Roots of the packed unknowns, classified like the spectral extraction.
    pub fn root_set(&self, x: &[f64]) -> Result<RootSet> {
        let r = self.unpack(x)?;
        let k = self.kappa();
        let m = self.m();
        let strings = |s: &[f64], template: f64| -> Vec<StringPair> {
            let mut v: Vec<StringPair> = s
                .chunks(2)
                .map(|c| StringPair { center: c[0], imag: c[1].abs(), deviation: (c[1].abs() / k - template).abs() })
                .collect();
            v.sort_by(|a, b| a.center.total_cmp(&b.center));
            v
        };
        let mut set = RootSet::default();
        match self.kind {
            BaeKind::Periodic => {
                set.z_strings = strings(&x[..2 * m], 1.0);
                set.w_strings = strings(&x[2 * m..], 1.5);
            }
            BaeKind::Open => {
                set.z_strings = strings(&x[3..3 + 2 * m], 1.0);
                set.w_strings = strings(&x[3 + 2 * m..], 1.5);
                set.boundary_z = Some(x[0]);
                set.boundary_w = Some((x[0] - 0.5 + r.delta.unwrap_or(0.0), x[2]));
                set.boundary_link = r.delta;
            }
        }
        Ok(set)
    }

    /// Packs a classified root set. Open sets need the linked-pair gap.
    pub fn unknowns_from_roots(&self, roots: &RootSet) -> Result<Vec<f64>> {
        let m = self.m();
        if roots.z_strings.len() != m || roots.w_strings.len() != m {
            return Err(Error::Argument(format!(
                "{} z-strings and {} w-strings, expected {m} each",
                roots.z_strings.len(),
                roots.w_strings.len()
            )));
        }
        let mut x = Vec::with_capacity(self.unknown_count());
        if self.kind == BaeKind::Open {
            let z1 = roots.boundary_z.ok_or_else(|| Error::Argument("missing boundary z-root".into()))?;
            let (_, c2) = roots.boundary_w.ok_or_else(|| Error::Argument("missing boundary w-roots".into()))?;
            let d = roots
                .boundary_link
                .ok_or_else(|| Error::Argument("missing linked boundary pair".into()))?;
            if d <= 0.0 {
                return Err(Error::Domain(format!("linked-pair gap {d:e} is not positive")));
            }
            x.extend([z1, d.ln(), c2]);
        }
        for s in roots.z_strings.iter().chain(&roots.w_strings) {
            x.extend([s.center, s.imag]);
        }
        Ok(x)
    }

    /// Zero roots of `Lambda` (`z_j`) from the unknowns; open chain: one per `+-` pair.
    pub fn z_roots(&self, x: &[f64]) -> Result<Vec<C64>> {
        Ok(self.unpack(x)?.z)
    }

    pub fn w_roots(&self, x: &[f64]) -> Result<Vec<C64>> {
        Ok(self.unpack(x)?.w)
    }

    /// Monomial coefficients (ascending) of the reconstructed `Lambda`, in
    /// the variable of its spectral fit: `u` (periodic) or `(u + eta/2)^2` (open).
    pub fn lambda_coefficients(&self, x: &[f64]) -> Result<Vec<C64>> {
        let r = self.unpack(x)?;
        let roots: Vec<C64> = match self.kind {
            BaeKind::Periodic => r.z.iter().map(|z| z - self.eta / 2.0).collect(),
            BaeKind::Open => r.z.iter().map(|z| z * z).collect(),
        };
        let mut c = vec![c64(2.0, 0.0)];
        for root in roots {
            let mut next = vec![C64::default(); c.len() + 1];
            for (k, ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * root;
            }
            c = next;
        }
        Ok(c)
    }
}

fn wrap(phi: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let w = phi - 2.0 * pi * ((phi + pi) / (2.0 * pi)).floor();
    if w <= -pi {
        w + 2.0 * pi
    } else {
        w
    }
}

/// Accumulates `sum power * ln(factor)` per equation and flags collisions.
#[derive(Default)]
struct LogAcc {
    rows: Vec<C64>,
    collision: Option<C64>,
}

impl LogAcc {
    fn start(&mut self) {
        self.rows.push(C64::default());
    }

    fn add(&mut self, f: C64, power: f64) {
        if f.norm() < COLLISION_TOL || !f.re.is_finite() || !f.im.is_finite() {
            self.collision.get_or_insert(f);
        }
        if let Some(last) = self.rows.last_mut() {
            *last += f.ln() * power;
        }
    }

    fn add_pow(&mut self, f: C64, power: f64) {
        self.add(f, power)
    }

    /// `small * f`, where only `f` is subject to the collision test.
    fn add_linked(&mut self, small: C64, f: C64, power: f64) {
        self.add(f, power);
        if let Some(last) = self.rows.last_mut() {
            *last += small.ln() * power;
        }
    }

    fn finish(self) -> Result<Vec<C64>> {
        match self.collision {
            Some(f) => Err(Error::Singularity(format!("root collision: factor {f:e} in a BAE product"))),
            None => Ok(self.rows),
        }
    }
}

/// Outcome of a Newton solve.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Largest absolute residual component.
    pub final_residual: f64,
    /// Accepted step factor of each iteration.
    pub damping: Vec<f64>,
    pub unknowns: Vec<f64>,
    pub roots: RootSet,
    pub energy: f64,
    pub n_sites: usize,
    pub kind: BaeKind,
}

/// Seeding strategy of [`seed_roots`].
#[derive(Clone, Debug)]
pub enum SeedStrategy<'a> {
    DensityQuantile,
    /// Reuse the boundary unknowns of a solution at another size; the bulk
    /// is seeded by density quantiles.
    Continuation { from: &'a SolveReport },
}

/// Inverse cumulative of the ground-state density normalised to one:
/// `lambda = asinh(tan(pi (F - 1/2))) / pi`.
pub fn density_quantile(f: f64) -> f64 {
    (std::f64::consts::PI * (f - 0.5)).tan().asinh() / std::f64::consts::PI
}

/// Bulk centers of `m` strings, in units of `|eta|`. Periodic strings cover
/// the whole line; open ones take the positive half.
pub fn bulk_centers(m: usize, open: bool) -> Vec<f64> {
    (1..=m)
        .map(|j| {
            let f = (j as f64 - 0.5) / m as f64;
            density_quantile(if open { 0.5 + f / 2.0 } else { f })
        })
        .collect()
}

/// Initial unknowns.
pub fn seed_roots(spec: &ChainSpec, strategy: SeedStrategy<'_>) -> Result<Vec<f64>> {
    let sys = BaeSystem::new(spec)?;
    let k = sys.kappa();
    let m = sys.m();
    let open = sys.kind == BaeKind::Open;
    let centers = bulk_centers(m, open);
    let (yz, yw) = if open { (SEED_Y_Z_OPEN, SEED_Y_W_OPEN) } else { (SEED_Y_Z, SEED_Y_W) };
    let mut x = Vec::with_capacity(sys.unknown_count());
    if open {
        let head = match strategy {
            SeedStrategy::DensityQuantile => {
                let (p, _, _) = sys.boundary.expect("open system");
                let qb = spec.q_bar().unwrap_or_default();
                let ap = p.norm() / k;
                [ap, SEED_DELTA.ln(), ap + qb.norm() / k]
            }
            SeedStrategy::Continuation { from } => {
                if from.kind != BaeKind::Open || from.unknowns.len() < 3 {
                    return Err(Error::Argument("continuation source has a different boundary kind".into()));
                }
                [from.unknowns[0], from.unknowns[1], from.unknowns[2]]
            }
        };
        x.extend(head);
    } else if let SeedStrategy::Continuation { from } = strategy {
        if from.kind != BaeKind::Periodic {
            return Err(Error::Argument("continuation source has a different boundary kind".into()));
        }
    }
    for y in [yz, yw] {
        for c in &centers {
            x.extend([c * k, y * k]);
        }
    }
    Ok(x)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Gauss-Newton with a finite-difference Jacobian and SVD least squares.
pub fn newton_solve(system: &BaeSystem, seed: &[f64], tol: f64, max_iter: usize) -> Result<SolveReport> {
    if seed.len() != system.unknown_count() {
        return Err(Error::Argument(format!("seed has {} entries, expected {}", seed.len(), system.unknown_count())));
    }
    let mut x = seed.to_vec();
    let mut raw = system.raw_residuals(&x)?;
    let mut r = system.residuals(&x)?;
    let mut nr = l2(&r);
    let mut damping = Vec::new();
    let mut iterations = 0;
    let mut converged = max_abs(&r) <= tol;
    while !converged && iterations < max_iter {
        let jac = system.jacobian(&x, &raw)?;
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smax > 0.0) || smin <= smax * 1e-15 {
            return Err(Error::Conditioning(format!("singular BAE Jacobian (sigma {smin:e} / {smax:e})")));
        }
        let rhs = -DVector::from_vec(r.clone());
        let dx = svd
            .solve(&rhs, smax * 1e-14)
            .map_err(|e| Error::Conditioning(format!("least-squares step failed: {e}")))?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let xn: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, b)| a + t * b).collect();
            if let Ok(rn) = system.residuals(&xn) {
                let nn = l2(&rn);
                if nn.is_finite() && nn < nr {
                    accepted = Some((xn, rn, nn));
                    break;
                }
            }
            t /= 2.0;
        }
        iterations += 1;
        match accepted {
            Some((xn, rn, nn)) => {
                damping.push(t);
                x = xn;
                r = rn;
                nr = nn;
                raw = system.raw_residuals(&x)?;
                converged = max_abs(&r) <= tol;
            }
            None => break,
        }
    }
    let roots = {
        let mut s = system.root_set(&x)?;
        s.bae_residual = Some(max_abs(&r));
        s
    };
    let energy = energy_from_unknowns(system, &x)?;
    Ok(SolveReport {
        converged,
        iterations,
        final_residual: max_abs(&r),
        damping,
        unknowns: x,
        roots,
        energy,
        n_sites: system.n_sites,
        kind: system.kind,
    })
}

fn energy_from_z(z: &[C64], eta: C64, n: usize, open: bool) -> Result<f64> {
    let e: C64 = if open {
        z.iter().map(|zj| eta * eta / (eta * eta / 4.0 - zj * zj)).sum::<C64>() - n as f64
    } else {
        z.iter().map(|zj| -eta * 2.0 / (zj - eta / 2.0)).sum::<C64>() - n as f64
    };
    if e.im.abs() > 1e-6 {
        return Err(Error::Consistency(format!("energy has imaginary part {:.3e}", e.im)));
    }
    Ok(e.re)
}

fn energy_from_unknowns(system: &BaeSystem, x: &[f64]) -> Result<f64> {
    energy_from_z(&system.z_roots(x)?, system.eta, system.n_sites, system.kind == BaeKind::Open)
}

/// Energy from classified zero roots.
pub fn energy_from_roots(roots: &RootSet, spec: &ChainSpec) -> Result<f64> {
    energy_from_z(&roots.z_roots(spec.eta), spec.eta, spec.n_sites, spec.is_open())
}

/// Solves a sequence of even sizes, seeding each open solve from the
/// previous one.
pub fn solve_sweep(spec: &ChainSpec, sizes: &[usize]) -> Result<Vec<SolveReport>> {
    let mut out: Vec<SolveReport> = Vec::new();
    for &n in sizes {
        let s = spec.with_n(n)?;
        let sys = BaeSystem::new(&s)?;
        let seed = match out.last() {
            Some(prev) if s.is_open() => seed_roots(&s, SeedStrategy::Continuation { from: prev })?,
            _ => seed_roots(&s, SeedStrategy::DensityQuantile)?,
        };
        out.push(newton_solve(&sys, &seed, DEFAULT_TOL, DEFAULT_MAX_ITER)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert!(density_quantile(0.5).abs() < 1e-15);
        assert!((density_quantile(0.75) - 0.280_549_926_169_590_07).abs() < 1e-12);
        assert!((density_quantile(0.75) - 1f64.asinh() / std::f64::consts::PI).abs() < 1e-15);
        let c = bulk_centers(4, false);
        assert!((c[0] + c[3]).abs() < 1e-14 && (c[1] + c[2]).abs() < 1e-14);
        assert!(bulk_centers(3, true).iter().all(|&v| v > 0.0));
    }

    #[test]
    fn wrap_range() {
        let pi = std::f64::consts::PI;
        for phi in [-7.0, -pi, 0.0, pi, 3.5, 12.0] {
            let w = wrap(phi);
            assert!(w > -pi && w <= pi);
            assert!(((phi - w) / (2.0 * pi) - ((phi - w) / (2.0 * pi)).round()).abs() < 1e-12);
        }
    }

    #[test]
    fn two_site_periodic_energy() {
        let spec = ChainSpec::periodic(2).unwrap();
        let sys = BaeSystem::new(&spec).unwrap();
        let seed = seed_roots(&spec, SeedStrategy::DensityQuantile).unwrap();
        let rep = newton_solve(&sys, &seed, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!((rep.energy + 6.0).abs() < 1e-10);
    }

    #[test]
    fn odd_or_inhomogeneous_rejected() {
        assert!(BaeSystem::new(&ChainSpec::periodic(3).unwrap()).is_err());
        let s = ChainSpec::periodic(2).unwrap().with_thetas(vec![c64(0.1, 0.0), c64(0.0, 0.0)]).unwrap();
        assert!(BaeSystem::new(&s).is_err());
    }

    #[test]
    fn collision_is_singular() {
        let spec = ChainSpec::periodic(2).unwrap();
        let sys = BaeSystem::new(&spec).unwrap();
        // z = w + eta/2 makes u - w vanish
        let x = [0.0, 1.0, 0.0, 0.5];
        assert!(matches!(sys.residuals(&x), Err(Error::Singularity(_))));
    }

    #[test]
    fn continuation_kind_mismatch() {
        let per = ChainSpec::periodic(2).unwrap();
        let sys = BaeSystem::new(&per).unwrap();
        let seed = seed_roots(&per, SeedStrategy::DensityQuantile).unwrap();
        let rep = newton_solve(&sys, &seed, DEFAULT_TOL, 50).unwrap();
        let open = ChainSpec::open_from_qbar(4, c64(0.0, -1.2), c64(0.0, 0.8), c64(1.0, 0.0)).unwrap();
        assert!(matches!(
            seed_roots(&open, SeedStrategy::Continuation { from: &rep }),
            Err(Error::Argument(_))
        ));
    }
}
