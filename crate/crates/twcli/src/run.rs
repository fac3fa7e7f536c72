use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use twcore::baes::{newton_solve, seed_roots, BaeSystem, SeedStrategy, SolveReport};
use twcore::chainops::{hamiltonian, hamiltonian_from_transfer, ChainSpec};
use twcore::spectra::{
    family_roots, ground_state, ground_state_data, spectrum, symmetry_defect, verify_identity_suite, GroundStateData,
    RootSet, SpectralPolynomial,
};
use twcore::thermo::{decay_ratio, extrapolate_surface, gs_energy_closed, lambda_g_closed, linear_fit, w_g_closed};
use twcore::{c64, C64};

use crate::bundle::{Check, ResultBundle, Table};
use crate::config::{figure_open_spec, BoundaryName, Command, ConfigError, RunConfig, SeedName};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: twcore::Error,
    },
}

fn stage(name: impl Into<String>) -> impl FnOnce(twcore::Error) -> RunError {
    let stage = name.into();
    move |source| RunError::Stage { stage, source }
}

/// Largest size accepted by the identity suite.
pub const IDENTITY_MAX_N: usize = 8;
/// Trial points per size in `verify`.
pub const TRIAL_POINTS: usize = 4;

/// Manifest of a run: resolved configuration and versions.
pub fn manifest(cfg: &RunConfig) -> serde_json::Value {
    json!({
        "command": cfg.command.name(),
        "config": cfg,
        "versions": { "twlab": env!("CARGO_PKG_VERSION"), "twcore": twcore::VERSION },
        "max_dim": twcore::densecore::max_dim(),
    })
}

/// Runs the configured pipeline.
pub fn run(cfg: &RunConfig) -> Result<ResultBundle, RunError> {
    let mut b = ResultBundle::new(manifest(cfg));
    match cfg.command {
        Command::Verify => verify(cfg, &mut b)?,
        Command::Spectrum => run_spectrum(cfg, &mut b)?,
        Command::Roots => roots(cfg, &mut b)?,
        Command::Bae => bae(cfg, &mut b)?,
        Command::Thermo => thermo(cfg, &mut b)?,
        Command::Decay => decay(cfg, &mut b)?,
        Command::Figures => figures(cfg, &mut b)?,
    }
    Ok(b)
}

fn map_sizes<T: Send>(
    cfg: &RunConfig,
    f: impl Fn(usize) -> Result<T, RunError> + Sync + Send,
) -> Result<Vec<T>, RunError> {
    if cfg.parallel {
        cfg.sweep.par_iter().map(|&n| f(n)).collect()
    } else {
        cfg.sweep.iter().map(|&n| f(n)).collect()
    }
}

fn tagged<T: serde::Serialize>(cfg: &RunConfig, data: &T) -> serde_json::Value {
    json!({ "tolerances": cfg.tolerances, "data": data })
}

fn identity_threshold(cfg: &RunConfig, name: &str, default: f64) -> f64 {
    let t = &cfg.tolerances;
    match name {
        "t-W operator identity" => t.identity_tw,
        "open t-W operator identity" => t.identity_tw_open,
        "inhomogeneous points" | "open inhomogeneous points" => t.identity_point,
        "crossing" => t.identity_crossing,
        "W-bar parity" => t.identity_parity,
        n if n.contains("hermiticity") => t.identity_hermiticity,
        n if n.starts_with('[') => t.identity_commutator,
        _ => default,
    }
}

fn trial_points(seed: u64, n: usize) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    (0..TRIAL_POINTS).map(|_| c64(rng.gen_range(-1.5..1.5), rng.gen_range(-1.0..1.0))).collect()
}

fn verify(cfg: &RunConfig, b: &mut ResultBundle) -> Result<(), RunError> {
    let mut table = Table::new(&["n", "check", "residual", "threshold", "passed"]);
    let results = map_sizes(cfg, |n| {
        let spec = cfg.spec_at(n)?;
        let mut rows = Vec::new();
        if n <= IDENTITY_MAX_N {
            let rep = verify_identity_suite(&spec, &trial_points(cfg.seed, n)).map_err(stage(format!("verify[N={n}]")))?;
            for c in rep.checks {
                let th = identity_threshold(cfg, &c.name, c.threshold);
                rows.push(Check::at_most(c.name, c.residual, th));
            }
        }
        if n <= 6 {
            let h = hamiltonian(&spec).map_err(stage(format!("verify[N={n}]")))?;
            let ht = hamiltonian_from_transfer(&spec, cfg.tolerances.fd_step).map_err(stage(format!("verify[N={n}]")))?;
            let r = h.rel_diff(&ht).map_err(stage(format!("verify[N={n}]")))?;
            rows.push(Check::at_most("hamiltonian from transfer matrix", r, cfg.tolerances.hamiltonian));
        }
        Ok((n, rows))
    })?;
    for (n, rows) in results {
        if rows.is_empty() {
            b.errors.push(format!("N = {n} exceeds the identity-suite limit {IDENTITY_MAX_N}"));
        }
        for c in rows {
            table.push(vec![n.into(), c.name.clone().into(), c.residual.into(), c.threshold.into(), c.passed.into()]);
            b.check(Check { name: format!("N={n} {}", c.name), ..c });
        }
    }
    b.table("identities", table);
    Ok(())
}

fn run_spectrum(cfg: &RunConfig, b: &mut ResultBundle) -> Result<(), RunError> {
    let levels = map_sizes(cfg, |n| {
        let spec = cfg.spec_at(n)?;
        Ok((n, spectrum(&spec).map_err(stage(format!("spectrum[N={n}]")))?))
    })?;
    let mut table = Table::new(&["n", "index", "energy"]);
    for (n, ev) in &levels {
        for (k, e) in ev.iter().enumerate() {
            table.push(vec![(*n).into(), k.into(), (*e).into()]);
        }
    }
    b.table("spectrum", table);
    Ok(())
}

struct RootsResult {
    n: usize,
    data: GroundStateData,
    roots: RootSet,
    bae_residual: Option<f64>,
}

fn roots_at(spec: &ChainSpec) -> Result<RootsResult, RunError> {
    let n = spec.n_sites;
    let st = || stage(format!("roots[N={n}]"));
    let data = ground_state_data(spec).map_err(st())?;
    let roots = data.root_set().map_err(st())?;
    // absent when the roots do not fit the solver's string layout
    let bae_residual = BaeSystem::new(spec)
        .and_then(|sys| sys.residuals(&sys.unknowns_from_roots(&roots)?))
        .ok()
        .map(|r| r.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    Ok(RootsResult { n, data, roots, bae_residual })
}

/// Figure rows `re, im, family`: every zero root of both polynomials.
pub fn root_table(lambda: &SpectralPolynomial, w: &SpectralPolynomial, open: bool) -> Table {
    let mut t = Table::new(&["re", "im", "family"]);
    for (poly, fam) in [(lambda, "z"), (w, "w")] {
        let mut pts = family_roots(poly);
        if open {
            let neg: Vec<C64> = pts.iter().map(|z| -z).collect();
            pts.extend(neg);
        }
        pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        for z in pts {
            t.push(vec![z.re.into(), z.im.into(), fam.into()]);
        }
    }
    t
}

fn record_roots(cfg: &RunConfig, b: &mut ResultBundle, r: &RootsResult, prefix: &str) {
    let eta = r.data.spec.eta;
    let n = r.n;
    b.table(format!("{prefix}_n{n}"), root_table(&r.data.lambda, &r.data.w, r.data.spec.is_open()));
    b.record(format!("{prefix}_lambda_n{n}"), &tagged(cfg, &r.data.lambda));
    b.record(format!("{prefix}_w_n{n}"), &tagged(cfg, &r.data.w));
    b.record(format!("{prefix}_rootset_n{n}"), &tagged(cfg, &r.roots));
    let sym = symmetry_defect(&r.data.lambda, eta).max(symmetry_defect(&r.data.w, eta));
    b.check(Check::at_most(format!("N={n} root symmetry"), sym, cfg.tolerances.symmetry));
    let m = n / 2;
    let (zc, wc) = (r.roots.z_strings.len(), r.roots.w_strings.len());
    let pattern = if r.data.spec.is_open() {
        r.roots.boundary_z.is_some() && r.roots.boundary_w.is_some() && r.roots.unpaired.is_empty()
    } else {
        zc == m && wc == m && r.roots.unpaired.is_empty()
    };
    b.check(Check::flag(format!("N={n} 2-string pattern"), pattern, (zc + wc) as f64));
    if let Some(res) = r.bae_residual {
        b.check(Check::at_most(format!("N={n} BAE residual of ED roots"), res, cfg.tolerances.bae_roundtrip));
    }
}

fn roots(cfg: &RunConfig, b: &mut ResultBundle) -> Result<(), RunError> {
    let results = map_sizes(cfg, |n| roots_at(&cfg.spec_at(n)?))?;
    let mut summary = Table::new(&["n", "energy_ed", "energy_from_roots", "z_strings", "w_strings", "bae_residual"]);
    for r in &results {
        let e_roots = twcore::baes::energy_from_roots(&r.roots, &r.data.spec).unwrap_or(f64::NAN);
        summary.push(vec![
            r.n.into(),
            r.data.ground.energy.into(),
            e_roots.into(),
            r.roots.z_strings.len().into(),
            r.roots.w_strings.len().into(),
            r.bae_residual.unwrap_or(f64::NAN).into(),
        ]);
        record_roots(cfg, b, r, "roots");
    }
    b.table("roots_summary", summary);
    Ok(())
}

fn solve_one(cfg: &RunConfig, spec: &ChainSpec, from: Option<&SolveReport>) -> Result<SolveReport, twcore::Error> {
    let sys = BaeSystem::new(spec)?;
    let seed = match from {
        Some(prev) => seed_roots(spec, SeedStrategy::Continuation { from: prev })?,
        None => seed_roots(spec, SeedStrategy::DensityQuantile)?,
    };
    newton_solve(&sys, &seed, cfg.tolerances.bae, cfg.tolerances.bae_max_iter)
}

fn bae(cfg: &RunConfig, b: &mut ResultBundle) -> Result<(), RunError> {
    let mut solved: Vec<(usize, Result<SolveReport, twcore::Error>)> = Vec::new();
    match cfg.seed_strategy {
        SeedName::Density => {
            let out = map_sizes(cfg, |n| {
                let spec = cfg.spec_at(n)?;
                Ok((n, solve_one(cfg, &spec, None)))
            })?;
            solved.extend(out);
        }
        SeedName::Continuation => {
            for &n in &cfg.sweep {
                let spec = cfg.spec_at(n)?;
                let prev = solved.last().and_then(|(_, r)| r.as_ref().ok()).filter(|r| r.converged);
                let r = solve_one(cfg, &spec, prev);
                solved.push((n, r));
            }
        }
    }
    let ed = map_sizes(cfg, |n| {
        let spec = cfg.spec_at(n)?;
        Ok(ground_state(&spec).map_err(stage(format!("bae[N={n}] diagonalisation")))?.energy)
    })?;
    let mut table =
        Table::new(&["n", "converged", "iterations", "final_residual", "energy_bae", "energy_ed", "energy_diff"]);
    for ((n, res), e_ed) in solved.iter().zip(ed) {
        let n = *n;
        match res {
            Ok(rep) => {
                let diff = (rep.energy - e_ed).abs();
                table.push(vec![
                    n.into(),
                    rep.converged.into(),
                    rep.iterations.into(),
                    rep.final_residual.into(),
                    rep.energy.into(),
                    e_ed.into(),
                    diff.into(),
                ]);
                b.record(format!("solve_n{n}"), &tagged(cfg, rep));
                if !rep.converged {
                    b.converged = false;
                    b.errors.push(format!("bae[N={n}]: no convergence after {} iterations", rep.iterations));
                }
                let tol = if cfg.chain.boundary == BoundaryName::Open {
                    cfg.tolerances.energy_open
                } else {
                    cfg.tolerances.energy_periodic
                };
                b.check(Check::at_most(format!("N={n} BAE energy vs ED"), diff, tol));
            }
            Err(e) => {
                b.converged = false;
                b.errors.push(format!("bae[N={n}]: {e}"));
                table.push(vec![
                    n.into(),
                    false.into(),
                    0usize.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    e_ed.into(),
                    f64::NAN.into(),
                ]);
                b.record(format!("solve_n{n}"), &tagged(cfg, &json!({ "converged": false, "error": e.to_string() })));
            }
        }
    }
    b.table("bae", table);
    Ok(())
}

/// `|x|^(1/n)` relative gap `|a/b - 1|` of two per-site magnitudes.
fn per_site_gap(value: C64, closed: C64, n: usize) -> f64 {
    let a = value.norm().powf(1.0 / n as f64);
    let c = closed.norm().powf(1.0 / n as f64);
    (a / c - 1.0).abs()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn thermo(cfg: &RunConfig, b: &mut ResultBundle) -> Result<(), RunError> {
    let data = map_sizes(cfg, |n| {
        let spec = cfg.spec_at(n)?;
        let d = ground_state_data(&spec).map_err(stage(format!("thermo[N={n}]")))?;
        let closed = gs_energy_closed(&spec).map_err(stage(format!("thermo[N={n}] closed form")))?;
        let mut forms = Vec::new();
        for &u in &cfg.u_points {
            let (site, full) = lambda_g_closed(u, &spec).map_err(stage(format!("thermo[N={n}] closed form")))?;
            let wc = w_g_closed(u, n, &spec).map_err(stage(format!("thermo[N={n}] closed form")))?;
            let lam = d.lambda.eval(u);
            let wv = d.w.eval(u);
            forms.push((u, per_site_gap(lam, full.exp(), n), per_site_gap(wv, wc, n), site));
        }
        Ok((n, d.ground.energy, closed, forms))
    })?;
    let mut energy = Table::new(&["n", "energy_ed", "energy_closed", "per_site_ed", "per_site_gap"]);
    let mut forms = Table::new(&["n", "u_re", "u_im", "lambda_gap", "w_gap"]);
    let mut gaps = Vec::new();
    let mut sizes = Vec::new();
    let mut energies = Vec::new();
    for (n, e, closed, fs) in &data {
        let n = *n;
        let per = e / n as f64;
        let gap = (per - closed.per_site_energy).abs();
        energy.push(vec![n.into(), (*e).into(), closed.total_energy.into(), per.into(), gap.into()]);
        gaps.push(gap);
        sizes.push(n);
        energies.push(*e);
        for (u, lg, wg, _) in fs {
            forms.push(vec![n.into(), u.re.into(), u.im.into(), (*lg).into(), (*wg).into()]);
        }
    }
    let open = cfg.chain.boundary == BoundaryName::Open;
    let last = data.last().expect("non-empty sweep");
    let mut result = last.2.clone();
    result.decay = Vec::new();
    b.record("thermo", &tagged(cfg, &result));
    if !open {
        if sizes.len() > 1 {
            b.check(Check::flag("per-site energy gap decreasing", strictly_decreasing(&gaps), *gaps.last().unwrap()));
        }
        b.check(Check::at_most("per-site energy gap final", *gaps.last().unwrap(), cfg.tolerances.energy_gap));
        for (k, &u) in cfg.u_points.iter().enumerate() {
            for (col, name) in [(1usize, "lambda"), (2, "W")] {
                let g: Vec<f64> = data.iter().map(|d| if col == 1 { d.3[k].1 } else { d.3[k].2 }).collect();
                let tag = format!("{name} closed-form gap at u={}", fmt_u(u));
                if g.len() > 1 {
                    b.check(Check::flag(format!("{tag} decreasing"), strictly_decreasing(&g), *g.last().unwrap()));
                }
                b.check(Check::at_most(format!("{tag} final"), *g.last().unwrap(), cfg.tolerances.closed_form_gap));
            }
        }
    } else if sizes.len() > 1 {
        let fit = extrapolate_surface(&sizes, &energies).map_err(stage("thermo surface fit"))?;
        let closed = result.surface_energy.unwrap_or(f64::NAN);
        let rel = ((fit - closed) / closed).abs();
        let mut t = Table::new(&["surface_fit", "surface_closed", "relative_diff"]);
        t.push(vec![fit.into(), closed.into(), rel.into()]);
        b.table("surface", t);
        b.check(Check::at_most("surface energy extrapolation", rel, cfg.tolerances.surface_rel));
    }
    b.table("energy", energy);
    b.table("closed_forms", forms);
    Ok(())
}

fn fmt_u(u: C64) -> String {
    if u.im == 0.0 {
        format!("{}", u.re)
    } else {
        format!("{}{:+}i", u.re, u.im)
    }
}

fn decay(cfg: &RunConfig, b: &mut ResultBundle) -> Result<(), RunError> {
    let points = map_sizes(cfg, |n| {
        let spec = cfg.spec_at(n)?;
        let st = || stage(format!("decay[N={n}]"));
        let d = ground_state_data(&spec).map_err(st())?;
        cfg.u_points.iter().map(|&u| decay_ratio(&spec, &d, u).map_err(st())).collect::<Result<Vec<_>, _>>()
    })?;
    let mut table = Table::new(&["n", "u_re", "u_im", "measured", "predicted"]);
    let mut all = Vec::new();
    for row in &points {
        for p in row {
            table.push(vec![p.n_sites.into(), p.u.re.into(), p.u.im.into(), p.measured.into(), p.predicted.into()]);
            all.push(*p);
        }
    }
    for (k, &u) in cfg.u_points.iter().enumerate() {
        let col: Vec<_> = points.iter().map(|r| r[k]).collect();
        let measured: Vec<f64> = col.iter().map(|p| p.measured).collect();
        if col.len() > 1 {
            b.check(Check::flag(
                format!("decay at u={} strictly decreasing", fmt_u(u)),
                strictly_decreasing(&measured),
                *measured.last().unwrap(),
            ));
            let ns: Vec<f64> = col.iter().map(|p| p.n_sites as f64).collect();
            let lm: Vec<f64> = measured.iter().map(|m| m.ln()).collect();
            let lp: Vec<f64> = col.iter().map(|p| p.predicted.ln()).collect();
            if let (Ok((_, sm)), Ok((_, sp))) = (linear_fit(&ns, &lm), linear_fit(&ns, &lp)) {
                let rel = ((sm - sp) / sp).abs();
                b.check(Check::at_most(format!("decay slope at u={}", fmt_u(u)), rel, cfg.tolerances.decay_slope));
            }
        }
    }
    let spec = cfg.spec()?;
    let mut result = gs_energy_closed(&spec).map_err(stage("decay closed form"))?;
    result.decay = all;
    b.record("thermo", &tagged(cfg, &result));
    b.table("decay", table);
    Ok(())
}

fn figures(cfg: &RunConfig, b: &mut ResultBundle) -> Result<(), RunError> {
    let periodic_sizes: Vec<usize> =
        if cfg.chain.boundary == BoundaryName::Periodic { cfg.sweep.clone() } else { vec![6, 8, 10, 12] };
    let eta = cfg.chain.eta;
    let run_periodic = |n: usize| -> Result<RootsResult, RunError> {
        let spec = ChainSpec::periodic(n).and_then(|s| s.with_eta(eta)).map_err(stage(format!("figures[N={n}]")))?;
        roots_at(&spec)
    };
    let periodic: Vec<RootsResult> = if cfg.parallel {
        periodic_sizes.par_iter().map(|&n| run_periodic(n)).collect::<Result<_, _>>()?
    } else {
        periodic_sizes.iter().map(|&n| run_periodic(n)).collect::<Result<_, _>>()?
    };
    for r in &periodic {
        record_roots(cfg, b, r, "fig1");
    }
    let open_spec = if cfg.chain.boundary == BoundaryName::Open {
        cfg.spec()?
    } else {
        figure_open_spec(6).map_err(stage("figures open chain"))?
    };
    let open = roots_at(&open_spec)?;
    record_roots(cfg, b, &open, "fig2");
    Ok(())
}
