//! Thermodynamic-limit closed forms at the ground state.
//!
//! All closed forms take `eta = i`. Open-chain boundary parameters enter as
//! real multiples of `eta` (so `p = -1.2i` is `-1.2`), and the kernels use
//! their magnitudes.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::chainops::{scalar_fns, Boundary, ChainSpec};
use crate::error::{Error, Result};
use crate::spectra::GroundStateData;
use crate::{c64, C64};

/// Absolute tolerance of all quadratures.
pub const QUAD_TOL: f64 = 1e-10;
/// Truncation of the density integrals.
pub const LAMBDA_CUTOFF: f64 = 30.0;

/// Fixed normalisations of the `W` asymptotics.
pub const C_W0: f64 = 2.0;
pub const C_W1: f64 = 3.0;
pub const C_W0_OPEN: f64 = 2.0;
pub const C_W1_OPEN: f64 = 0.25;

/// Bulk energy per site.
pub fn bulk_energy_per_site() -> f64 {
    1.0 - 4.0 * LN_2
}

/// Boundary-independent part of the surface energy.
pub fn surface_constant() -> f64 {
    -1.0 + PI - 2.0 * LN_2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DensityKind {
    ZRoots,
    WRoots,
    OpenCorrection,
}

/// Leading density of either root family, `1 / (2 cosh(pi lambda))`.
pub fn rho_ground(kind: DensityKind, lambda: f64) -> Result<f64> {
    match kind {
        DensityKind::ZRoots | DensityKind::WRoots => Ok(0.5 / (PI * lambda).cosh()),
        DensityKind::OpenCorrection => {
            Err(Error::Argument("the boundary correction needs boundary data; use DensityProfile".into()))
        }
    }
}

/// Integral of a smooth function over `[a, b]` on panels of width at most
/// `panel`, each by double-exponential quadrature with adaptive bisection.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panel: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Argument(format!("bad interval [{a}, {b}]")));
    }
    let k = (((b - a) / panel).ceil() as usize).max(1);
    let h = (b - a) / k as f64;
    let tol = QUAD_TOL / k as f64;
    let mut total = 0.0;
    for j in 0..k {
        let lo = a + j as f64 * h;
        total += bisect(&f, lo, lo + h, tol, 0)?;
    }
    Ok(total)
}

fn bisect(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
    let out = quadrature::double_exponential::integrate(f, a, b, tol);
    if out.error_estimate <= tol {
        return Ok(out.integral);
    }
    if depth >= 30 {
        return Err(Error::Numerical(format!("quadrature on [{a}, {b}] stalled at error {:.2e}", out.error_estimate)));
    }
    let m = 0.5 * (a + b);
    Ok(bisect(f, a, m, tol / 2.0, depth + 1)? + bisect(f, m, b, tol / 2.0, depth + 1)?)
}

/// Integral over the real line of an even density against a complex
/// function, truncated at `|lambda| = LAMBDA_CUTOFF`.
pub fn integrate_complex(f: impl Fn(f64) -> C64, a: f64, b: f64) -> Result<C64> {
    let re = integrate(|x| f(x).re, a, b, 2.0)?;
    let im = integrate(|x| f(x).im, a, b, 2.0)?;
    Ok(c64(re, im))
}

/// `a_n(w) = exp(-n |w| / 2)`.
pub fn a_n(n: f64, w: f64) -> f64 {
    (-n * w.abs() / 2.0).exp()
}

/// Boundary data entering the open-chain densities, as real multiples of `eta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OpenParams {
    pub p: f64,
    pub q_bar: f64,
    pub xi: f64,
    pub z1: f64,
    pub chi1: f64,
    pub chi2: f64,
}

impl OpenParams {
    /// Boundary parameters of an open chain; root data defaults to NaN.
    pub fn from_spec(spec: &ChainSpec) -> Result<Self> {
        let Boundary::Open { p, xi, .. } = spec.boundary else {
            return Err(Error::Mode("periodic chain has no boundary parameters".into()));
        };
        let qb = spec.q_bar().unwrap_or_default();
        let pe = p / spec.eta;
        let qe = qb / spec.eta;
        if pe.im.abs() > 1e-12 || qe.im.abs() > 1e-12 || xi.im.abs() > 1e-12 {
            return Err(Error::Domain("closed forms need p, q-bar as real multiples of eta and real xi".into()));
        }
        Ok(Self { p: pe.re, q_bar: qe.re, xi: xi.re, z1: f64::NAN, chi1: f64::NAN, chi2: f64::NAN })
    }

    pub fn with_roots(mut self, z1: f64, chi1: f64, chi2: f64) -> Self {
        self.z1 = z1;
        self.chi1 = chi1;
        self.chi2 = chi2;
        self
    }
}

/// Order of the `1/N` expansion of a density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DensityOrder {
    Leading,
    Boundary,
}

/// Fourier-space densities of the open chain.
pub fn open_density_fourier(w: f64, family: DensityKind, order: DensityOrder, params: &OpenParams) -> Result<f64> {
    let den = 2.0 * PI * (a_n(1.0, w) + a_n(3.0, w));
    let p = params.p.abs();
    let q = params.q_bar.abs();
    let num = match (order, family) {
        (DensityOrder::Leading, _) => a_n(2.0, w),
        (DensityOrder::Boundary, DensityKind::ZRoots) => {
            let z1 = params.z1;
            if !z1.is_finite() {
                return Err(Error::Argument("z-root correction needs z1".into()));
            }
            a_n(2.0, w) + a_n(2.0 * p, w) + a_n(2.0 * q, w)
                - a_n(1.0, w)
                - a_n(2.0 * z1 - 1.0, w)
                - a_n(2.0 * z1 + 1.0, w)
        }
        (DensityOrder::Boundary, DensityKind::WRoots) => {
            let (c1, c2) = (params.chi1, params.chi2);
            if !(c1.is_finite() && c2.is_finite()) {
                return Err(Error::Argument("w-root correction needs chi1, chi2".into()));
            }
            a_n(3.0, w) + a_n(2.0 * p + 1.0, w) + a_n(2.0 * p - 1.0, w) + a_n(2.0 * q + 1.0, w)
                + a_n(2.0 * q - 1.0, w)
                - a_n(1.0, w)
                - a_n(2.0 * c1 - 1.0, w)
                - a_n(2.0 * c1 + 1.0, w)
                - a_n(2.0 * c2 - 1.0, w)
                - a_n(2.0 * c2 + 1.0, w)
        }
        (DensityOrder::Boundary, DensityKind::OpenCorrection) => {
            return Err(Error::Argument("choose the z- or w-root family".into()))
        }
    };
    Ok(num / den)
}

/// A density with its closed and Fourier forms.
#[derive(Clone, Debug, Serialize)]
pub struct DensityProfile {
    pub kind: DensityKind,
    pub order: DensityOrder,
    pub params: Option<OpenParams>,
    /// `a_n` indices of the numerator (positive terms) of the Fourier form.
    pub kernel_terms: Vec<(f64, f64)>,
}

impl DensityProfile {
    pub fn leading(kind: DensityKind) -> Self {
        Self { kind, order: DensityOrder::Leading, params: None, kernel_terms: vec![(1.0, 2.0)] }
    }

    pub fn open_correction(family: DensityKind, params: OpenParams) -> Self {
        let p = params.p.abs();
        let q = params.q_bar.abs();
        let kernel_terms = match family {
            DensityKind::WRoots => vec![
                (1.0, 3.0),
                (1.0, 2.0 * p + 1.0),
                (1.0, 2.0 * p - 1.0),
                (1.0, 2.0 * q + 1.0),
                (1.0, 2.0 * q - 1.0),
                (-1.0, 1.0),
                (-1.0, 2.0 * params.chi1 - 1.0),
                (-1.0, 2.0 * params.chi1 + 1.0),
                (-1.0, 2.0 * params.chi2 - 1.0),
                (-1.0, 2.0 * params.chi2 + 1.0),
            ],
            _ => vec![
                (1.0, 2.0),
                (1.0, 2.0 * p),
                (1.0, 2.0 * q),
                (-1.0, 1.0),
                (-1.0, 2.0 * params.z1 - 1.0),
                (-1.0, 2.0 * params.z1 + 1.0),
            ],
        };
        Self { kind: DensityKind::OpenCorrection, order: DensityOrder::Boundary, params: Some(params), kernel_terms }
    }

    /// `rho-tilde(w)` as the ratio of `a_n` combinations.
    pub fn fourier_form(&self, w: f64) -> f64 {
        let num: f64 = self.kernel_terms.iter().map(|(s, n)| s * a_n(*n, w)).sum();
        num / (2.0 * PI * (a_n(1.0, w) + a_n(3.0, w)))
    }

    /// `rho(lambda)`: closed form for the leading density, inverse transform otherwise.
    pub fn closed_form(&self, lambda: f64) -> Result<f64> {
        match self.order {
            DensityOrder::Leading => rho_ground(DensityKind::ZRoots, lambda),
            DensityOrder::Boundary => {
                let f = |w: f64| 2.0 * self.fourier_form(w) * (w * lambda).cos();
                integrate(f, 0.0, 80.0, 2.0)
            }
        }
    }

    /// Numerical transform `(1/2pi) int rho(l) exp(-i w l) dl` of the closed form.
    pub fn fourier_numeric(&self, w: f64) -> Result<f64> {
        let f = |l: f64| -> f64 { self.closed_form(l).unwrap_or(f64::NAN) * (w * l).cos() };
        Ok(integrate(f, 0.0, LAMBDA_CUTOFF, 1.0)? / PI)
    }

    /// Total mass, `2 pi rho-tilde(0)`.
    pub fn mass(&self) -> f64 {
        2.0 * PI * self.fourier_form(0.0)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_pole(z: C64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// Stirling series for `Re z` large.
fn log_gamma_stirling(z: C64) -> C64 {
    const B: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let zi = z.inv();
    let zi2 = zi * zi;
    let mut s = C64::default();
    let mut pw = zi;
    for b in B {
        s += pw * b;
        pw *= zi2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + s
}

/// Log-gamma on the branch continuous in `Im z`: reflection for
/// `Re z < 1/2`, upward recurrence and the Stirling series otherwise.
pub fn log_gamma(z: C64) -> Result<C64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("log-gamma of {z}")));
    }
    if is_pole(z) {
        return Err(Error::Domain(format!("gamma has a pole at {z}")));
    }
    if z.re < 0.5 {
        // Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        let s = (z * PI).sin();
        return Ok(c64(PI.ln(), 0.0) - s.ln() - log_gamma(c64(1.0, 0.0) - z)?);
    }
    let mut shift = C64::default();
    let mut w = z;
    while w.re < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    Ok(log_gamma_stirling(w) - shift)
}

/// `Gamma(z)` by the Lanczos approximation, used as an independent check.
pub fn gamma_lanczos(z: C64) -> C64 {
    if z.re < 0.5 {
        return C64::from(PI) / ((z * PI).sin() * gamma_lanczos(c64(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut x = C64::from(LANCZOS[0]);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

fn require_unit_eta(spec: &ChainSpec) -> Result<()> {
    if (spec.eta - c64(0.0, 1.0)).norm() > 1e-12 {
        return Err(Error::Domain("closed forms are stated for eta = i".into()));
    }
    Ok(())
}

fn gamma_ratio(num: &[C64], den: &[C64]) -> Result<C64> {
    let mut s = C64::default();
    for &z in num {
        s += log_gamma(z)?;
    }
    for &z in den {
        s -= log_gamma(z)?;
    }
    Ok(s)
}

/// `ln` of the bulk per-site factor `2 G(1+iu/2) G(3/2-iu/2) / (G(1/2+iu/2) G(1-iu/2))`.
pub fn log_lambda_site(u: C64) -> Result<C64> {
    let iu = c64(0.0, 1.0) * u / 2.0;
    let one = c64(1.0, 0.0);
    Ok(c64(LN_2, 0.0) + gamma_ratio(&[one + iu, one * 1.5 - iu], &[one * 0.5 + iu, one - iu])?)
}

fn log_boundary_gamma(a: f64, u: C64) -> Result<C64> {
    let iu = c64(0.0, 1.0) * u / 2.0;
    let h = c64(a / 2.0, 0.0);
    gamma_ratio(&[h + 0.5 + iu, h + 1.0 - iu], &[h + iu, h + 0.5 - iu])
}

/// Closed form of the ground-state `Lambda` (periodic) or `Lambda-bar`
/// (open): returns the per-site factor and `ln` of the full eigenvalue.
pub fn lambda_g_closed(u: C64, spec: &ChainSpec) -> Result<(C64, C64)> {
    require_unit_eta(spec)?;
    let ls = log_lambda_site(u)?;
    let n = spec.n_sites as f64;
    match spec.boundary {
        Boundary::Periodic => Ok((ls.exp(), ls * n)),
        Boundary::Open { .. } => {
            let prm = OpenParams::from_spec(spec)?;
            let eta = spec.eta;
            let x = u * (PI / 2.0) - c64(0.0, PI / 4.0);
            let cs = x.cosh() / x.sinh();
            if !(cs.re.is_finite() && cs.im.is_finite()) || (u + eta / 2.0).norm() == 0.0 {
                return Err(Error::Domain(format!("boundary factor is singular at u = {u}")));
            }
            let pre = (8.0 * (1.0 + prm.xi * prm.xi).sqrt()) / (u + eta / 2.0) * cs;
            let full = pre.ln()
                + (ls - c64(LN_2, 0.0))
                + log_boundary_gamma(prm.p.abs(), u)?
                + log_boundary_gamma(prm.q_bar.abs(), u)?
                + ls * (2.0 * n);
            Ok((ls.exp(), full))
        }
    }
}

fn tanh_half_pi(u: C64) -> C64 {
    (u * (PI / 2.0)).tanh()
}

/// Closed form of the ground-state `W` (periodic) or `W-bar` (open).
pub fn w_g_closed(u: C64, n_sites: usize, spec: &ChainSpec) -> Result<C64> {
    require_unit_eta(spec)?;
    if u.norm() == 0.0 {
        return Err(Error::Domain("the per-site factor has a pole at u = 0".into()));
    }
    let eta = spec.eta;
    let n = n_sites as i32;
    let th = tanh_half_pi(u);
    match spec.boundary {
        Boundary::Periodic => Ok((((u + eta) * (u - eta) / u) * th * (C_W0 / 2.0)).powi(n) * C_W1),
        Boundary::Open { .. } => {
            let prm = OpenParams::from_spec(spec)?;
            let pe = eta * prm.p;
            let qe = eta * prm.q_bar;
            let bnd = (u - pe) * (u + pe) * (u - qe) * (u + qe);
            let bulk = ((u + eta) * (u - eta)).powi(2 * n + 1) / u.powi(2 * n + 2);
            Ok(bnd * th * th * bulk * (th * (C_W0_OPEN / 2.0)).powi(2 * n) * (4.0 * C_W1_OPEN * (prm.xi * prm.xi - 3.0)))
        }
    }
}

/// `int_0^inf exp(-a w) / (1 + exp(-w)) dw`.
pub fn boundary_integral(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("boundary integral needs a > 0, got {a}")));
    }
    let top = 40.0 / a;
    integrate(|w| (-a * w).exp() / (1.0 + (-w).exp()), 0.0, top, 2.0 / a.min(1.0))
}

/// One row of a decay table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayPoint {
    pub n_sites: usize,
    pub u: C64,
    pub measured: f64,
    pub predicted: f64,
}

/// Thermodynamic-limit summary.
#[derive(Clone, Debug, Serialize)]
pub struct ThermoResult {
    pub per_site_energy: f64,
    /// Open chain only.
    pub surface_energy: Option<f64>,
    /// Energy of `n_sites` sites, bulk plus surface.
    pub total_energy: f64,
    pub c_w0: f64,
    pub c_w1: f64,
    pub decay: Vec<DecayPoint>,
}

/// Surface energy of the open chain.
pub fn surface_energy(params: &OpenParams) -> Result<f64> {
    let p = params.p.abs();
    let q = params.q_bar.abs();
    if p == 0.0 || q == 0.0 {
        return Err(Error::Domain("surface energy needs |p|, |q| > 0".into()));
    }
    Ok(surface_constant() + 1.0 / p + 1.0 / q - 2.0 * (boundary_integral(p)? + boundary_integral(q)?))
}

/// Ground-state energy in the thermodynamic limit.
pub fn gs_energy_closed(spec: &ChainSpec) -> Result<ThermoResult> {
    let e0 = bulk_energy_per_site();
    let n = spec.n_sites as f64;
    match spec.boundary {
        Boundary::Periodic => Ok(ThermoResult {
            per_site_energy: e0,
            surface_energy: None,
            total_energy: e0 * n,
            c_w0: C_W0,
            c_w1: C_W1,
            decay: Vec::new(),
        }),
        Boundary::Open { .. } => {
            let s = surface_energy(&OpenParams::from_spec(spec)?)?;
            Ok(ThermoResult {
                per_site_energy: e0,
                surface_energy: Some(s),
                total_energy: e0 * n + s,
                c_w0: C_W0_OPEN,
                c_w1: C_W1_OPEN,
                decay: Vec::new(),
            })
        }
    }
}

/// Size of the `W` term of the t-W relation relative to the
/// quantum-determinant term, with its closed-form prediction.
pub fn decay_ratio(spec: &ChainSpec, data: &GroundStateData, u: C64) -> Result<DecayPoint> {
    if data.spec.n_sites != spec.n_sites || data.spec.is_open() != spec.is_open() {
        return Err(Error::Argument("state data belongs to another chain".into()));
    }
    let f = scalar_fns(spec);
    let eta = spec.eta;
    let n = spec.n_sites as i32;
    let th = tanh_half_pi(u).norm();
    let (num, den, predicted) = match spec.boundary {
        Boundary::Periodic => {
            let num = (f.d(u) * data.w.eval(u)).norm();
            let den = (f.a(u) * f.d(u - eta)).norm();
            (num, den, C_W1 * (C_W0 / 2.0 * th).powi(n))
        }
        Boundary::Open { xi, .. } => {
            let wv = data.w.eval(u);
            let num = (u * u * f.theta_prod(u) * wv).norm();
            let den = f.delta_open(u).norm();
            let pre = (4.0 * (xi * xi - 3.0) / (xi * xi + 1.0) * C_W1_OPEN).norm();
            (num, den, pre * th.powi(2) * (C_W0_OPEN / 2.0 * th).powi(2 * n))
        }
    };
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::Domain(format!("quantum determinant vanishes at u = {u}")));
    }
    Ok(DecayPoint { n_sites: spec.n_sites, u, measured: num / den, predicted })
}

/// Residual of the leading-density kernel equation at `u`:
/// `int (sum of four poles) rho(l) dl` against `1/(u+eta) + 1/(u-eta)`.
pub fn kernel_equation_residual(u: C64) -> Result<f64> {
    let eta = c64(0.0, 1.0);
    let f = |l: f64| -> C64 {
        let r = rho_ground(DensityKind::ZRoots, l).unwrap_or(0.0);
        let v = u - l;
        ((v - eta / 2.0).inv() + (v + eta / 2.0).inv() + (v - eta * 1.5).inv() + (v + eta * 1.5).inv()) * r
    };
    let lhs = integrate_complex(f, -LAMBDA_CUTOFF, LAMBDA_CUTOFF)?;
    let rhs = (u + eta).inv() + (u - eta).inv();
    Ok((lhs - rhs).norm())
}

/// Bulk energy per site from the leading density, by quadrature.
pub fn bulk_energy_from_density() -> Result<f64> {
    let i = c64(0.0, 1.0);
    let f = |l: f64| -> C64 {
        let r = rho_ground(DensityKind::WRoots, l).unwrap_or(0.0);
        ((c64(l, 0.0) + i * 0.5).inv() + (c64(l, 0.0) - i * 1.5).inv()) * r
    };
    let v = integrate_complex(f, -LAMBDA_CUTOFF, LAMBDA_CUTOFF)?;
    Ok((-i * 2.0 * v).re - 1.0)
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Argument("linear fit needs two or more points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Conditioning("degenerate abscissae".into()));
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

/// Finite-size surface energies `E(N) - N e_0` extrapolated linearly in `1/N`.
pub fn extrapolate_surface(sizes: &[usize], energies: &[f64]) -> Result<f64> {
    let x: Vec<f64> = sizes.iter().map(|&n| 1.0 / n as f64).collect();
    let y: Vec<f64> = sizes.iter().zip(energies).map(|(&n, e)| e - n as f64 * bulk_energy_per_site()).collect();
    Ok(linear_fit(&x, &y)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_values() {
        assert_eq!(rho_ground(DensityKind::ZRoots, 0.0).unwrap(), 0.5);
        assert!(rho_ground(DensityKind::WRoots, 40.0).unwrap() < 1e-50);
        assert_eq!(rho_ground(DensityKind::ZRoots, 0.7).unwrap(), rho_ground(DensityKind::ZRoots, -0.7).unwrap());
        let m = integrate(|l| rho_ground(DensityKind::ZRoots, l).unwrap(), -LAMBDA_CUTOFF, LAMBDA_CUTOFF, 2.0).unwrap();
        assert!((m - 0.5).abs() < 1e-10);
        assert!(rho_ground(DensityKind::OpenCorrection, 0.0).is_err());
    }

    #[test]
    fn gamma_known_values() {
        assert!(log_gamma(c64(1.0, 0.0)).unwrap().norm() < 1e-15);
        let h = log_gamma(c64(0.5, 0.0)).unwrap();
        assert!((h.exp() - c64(PI.sqrt(), 0.0)).norm() < 1e-14);
        let z = c64(0.7, 0.3);
        let lhs = log_gamma(z + 1.0).unwrap();
        let rhs = z.ln() + log_gamma(z).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
        let q = c64(0.25, 0.0);
        let refl = (log_gamma(q).unwrap() + log_gamma(c64(1.0, 0.0) - q).unwrap()).exp();
        assert!((refl.re - PI / (PI * 0.25).sin()).abs() < 1e-11);
        assert!(matches!(log_gamma(c64(-2.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(log_gamma(c64(0.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_against_lanczos() {
        for z in [c64(0.3, 0.1), c64(2.5, -3.0), c64(-1.7, 0.4), c64(7.0, 11.0), c64(0.5, 20.0)] {
            let a = log_gamma(z).unwrap().exp();
            let b = gamma_lanczos(z);
            assert!((a - b).norm() <= 1e-12 * b.norm(), "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn fourier_leading_at_zero() {
        let p = DensityProfile::leading(DensityKind::ZRoots);
        assert!((p.fourier_form(0.0) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((p.mass() - 0.5).abs() < 1e-15);
        for w in [0.0, 1.3, 7.0] {
            assert!((p.fourier_numeric(w).unwrap() - p.fourier_form(w)).abs() < 1e-8);
        }
    }

    #[test]
    fn site_factor_at_origin() {
        let l = log_lambda_site(c64(0.0, 0.0)).unwrap();
        assert!(l.norm() < 1e-14);
    }

    #[test]
    fn w_site_modulus() {
        let spec = ChainSpec::periodic(1).unwrap();
        let w = w_g_closed(c64(1.0, 0.0), 1, &spec).unwrap() / 3.0;
        assert!((w.norm() - 2.0 * (PI / 2.0).tanh()).abs() < 1e-12);
        assert!((w.norm() - 1.834_30).abs() < 1e-5);
        assert!(w_g_closed(c64(0.0, 0.0), 1, &spec).is_err());
    }

    #[test]
    fn energies() {
        assert!((bulk_energy_per_site() + 1.772_588_722_239_781).abs() < 1e-12);
        assert!((surface_constant() - 0.755_298_292_469_902).abs() < 1e-12);
        assert!((bulk_energy_from_density().unwrap() - bulk_energy_per_site()).abs() < 1e-9);
    }

    #[test]
    fn boundary_integral_digamma() {
        // a = 1: int exp(-w)/(1+exp(-w)) = ln 2
        assert!((boundary_integral(1.0).unwrap() - LN_2).abs() < 1e-10);
        // a = 2: 1 - ln 2
        assert!((boundary_integral(2.0).unwrap() - (1.0 - LN_2)).abs() < 1e-10);
        assert!(boundary_integral(0.0).is_err());
    }

    #[test]
    fn kernel_equation() {
        for u in [c64(0.5, 0.2), c64(1.3, -0.4)] {
            assert!(kernel_equation_residual(u).unwrap() < 1e-8);
        }
    }

    #[test]
    fn line_fit() {
        let (a, b) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((a - 1.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14);
    }
}
