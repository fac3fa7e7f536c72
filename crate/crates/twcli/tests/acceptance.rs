use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twcli::{parse_config, run, Check, ResultBundle};
use twcore::chainops::{hamiltonian, hamiltonian_from_transfer, ChainSpec};
use twcore::spectra::verify_identity_suite;
use twcore::{c64, C64};

/// Criteria whose failure is documented and does not fail the target.
const KNOWN_FAILURES: &[usize] = &[10];

const FIG_OPEN: &str = "p = [0.0, -1.2]\nq_bar = [0.0, 0.8]\nxi = 1.0\n";

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = fn() -> Result<Outcome, String>;

fn bundle(toml: &str) -> Result<ResultBundle, String> {
    let cfg = parse_config(toml).map_err(|e| e.to_string())?;
    run(&cfg).map_err(|e| e.to_string())
}

fn matching<'a>(b: &'a ResultBundle, pat: &str) -> Vec<&'a Check> {
    b.checks.iter().filter(|c| c.name.contains(pat)).collect()
}

fn all_pass(checks: &[&Check]) -> bool {
    !checks.is_empty() && checks.iter().all(|c| c.passed)
}

fn worst(checks: &[&Check]) -> f64 {
    checks.iter().fold(0.0f64, |m, c| if c.residual.is_nan() { f64::NAN } else { m.max(c.residual) })
}

fn random_u(rng: &mut ChaCha8Rng, k: usize) -> Vec<C64> {
    (0..k).map(|_| c64(rng.gen_range(-1.5..1.5), rng.gen_range(-1.0..1.0))).collect()
}

fn random_thetas(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| c64(rng.gen_range(-0.3..0.3), 0.0)).collect()
}

fn fig_open(n: usize) -> Result<ChainSpec, String> {
    ChainSpec::open_from_qbar(n, c64(0.0, -1.2), c64(0.0, 0.8), c64(1.0, 0.0)).map_err(|e| e.to_string())
}

fn random_open(rng: &mut ChaCha8Rng, n: usize) -> Result<ChainSpec, String> {
    let p = c64(0.0, -rng.gen_range(0.5..2.0));
    let qb = c64(0.0, rng.gen_range(0.5..2.0));
    let xi = c64(rng.gen_range(-1.5..1.5), 0.0);
    let spec = ChainSpec::open_from_qbar(n, p, qb, xi).map_err(|e| e.to_string())?;
    if !spec.is_physical() {
        return Err(format!("random boundary set {p} {qb} {xi} is not physical"));
    }
    Ok(spec)
}

fn suite_max(spec: &ChainSpec, points: &[C64], names: &[&str]) -> Result<Vec<(String, f64)>, String> {
    let rep = verify_identity_suite(spec, points).map_err(|e| e.to_string())?;
    Ok(names.iter().filter_map(|&n| rep.get(n).map(|c| (n.to_string(), c.residual))).collect())
}

fn c1() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut res = 0.0f64;
    let mut count = 0;
    for n in [2usize, 3, 4, 6] {
        for _ in 0..5 {
            let spec = ChainSpec::periodic(n).and_then(|s| s.with_thetas(random_thetas(&mut rng, n))).map_err(|e| e.to_string())?;
            for (_, r) in suite_max(&spec, &random_u(&mut rng, 10), &["t-W operator identity"])? {
                res = res.max(r);
                count += 1;
            }
        }
    }
    Ok(Outcome { passed: count == 20 && res <= 1e-10, detail: format!("max relative residual {res:.2e} over 20 chains x 10 points (limit 1e-10)") })
}

fn c2() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut res = 0.0f64;
    let mut count = 0;
    for n in [2usize, 3, 4] {
        let specs = [fig_open(n)?, random_open(&mut rng, n)?, random_open(&mut rng, n)?];
        for spec in &specs {
            for (_, r) in suite_max(spec, &random_u(&mut rng, 10), &["open t-W operator identity"])? {
                res = res.max(r);
                count += 1;
            }
        }
    }
    Ok(Outcome { passed: count == 9 && res <= 1e-9, detail: format!("max relative residual {res:.2e} over 9 chains (limit 1e-9)") })
}

fn c3() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let periodic = ["inhomogeneous points", "t hermiticity", "W hermiticity"];
    let open = ["open inhomogeneous points", "crossing", "open t hermiticity"];
    let mut worst = 0.0f64;
    let mut seen = std::collections::BTreeSet::new();
    for n in 2..=6usize {
        let thetas = random_thetas(&mut rng, n);
        let ps = ChainSpec::periodic(n).and_then(|s| s.with_thetas(thetas.clone())).map_err(|e| e.to_string())?;
        let os = fig_open(n)?.with_thetas(thetas).map_err(|e| e.to_string())?;
        let pts = random_u(&mut rng, 6);
        for (name, r) in suite_max(&ps, &pts, &periodic)?.into_iter().chain(suite_max(&os, &pts, &open)?) {
            worst = worst.max(r);
            seen.insert(name);
        }
    }
    let complete = seen.len() == periodic.len() + open.len();
    Ok(Outcome {
        passed: complete && worst <= 1e-10,
        detail: format!("max residual {worst:.2e} across {} identities, N = 2..6 (limit 1e-10)", seen.len()),
    })
}

fn c4() -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for n in [2usize, 3] {
        for spec in [ChainSpec::periodic(n).map_err(|e| e.to_string())?, fig_open(n)?] {
            let h = hamiltonian(&spec).map_err(|e| e.to_string())?;
            let ht = hamiltonian_from_transfer(&spec, 1e-5).map_err(|e| e.to_string())?;
            worst = worst.max(h.rel_diff(&ht).map_err(|e| e.to_string())?);
        }
    }
    Ok(Outcome { passed: worst <= 1e-7, detail: format!("max relative difference {worst:.2e} (limit 1e-7)") })
}

struct Shared {
    roots_periodic: ResultBundle,
    roots_open: ResultBundle,
}

fn shared() -> Result<Shared, String> {
    Ok(Shared {
        roots_periodic: bundle("command = \"roots\"\n[chain]\nn = 12\n[sweep]\nn = [6, 8, 10, 12]\n")?,
        roots_open: bundle(&format!("command = \"roots\"\n[chain]\nn = 6\n{FIG_OPEN}[sweep]\nn = [4, 6, 8]\n"))?,
    })
}

fn c5() -> Result<Outcome, String> {
    let s = shared()?;
    let rp = matching(&s.roots_periodic, "BAE residual of ED roots");
    let ro = matching(&s.roots_open, "BAE residual of ED roots");
    let bp = bundle("command = \"bae\"\n[chain]\nn = 12\n[sweep]\nn = [6, 8, 10, 12]\n")?;
    let bo = bundle(&format!("command = \"bae\"\n[chain]\nn = 6\n{FIG_OPEN}[sweep]\nn = [4, 6, 8]\n"))?;
    let ep = matching(&bp, "BAE energy vs ED");
    let eo = matching(&bo, "BAE energy vs ED");
    let passed = rp.len() == 4 && ro.len() == 3 && ep.len() == 4 && eo.len() == 3
        && all_pass(&rp) && all_pass(&ro) && all_pass(&ep) && all_pass(&eo)
        && bp.converged && bo.converged;
    Ok(Outcome {
        passed,
        detail: format!(
            "ED roots in BAEs: periodic {:.2e}, open {:.2e} (limit 1e-7); Newton energy gap: periodic {:.2e} (1e-8), open {:.2e} (1e-7)",
            worst(&rp), worst(&ro), worst(&ep), worst(&eo)
        ),
    })
}

fn c6() -> Result<Outcome, String> {
    let b = bundle("command = \"thermo\"\n[chain]\nn = 12\n[sweep]\nn = [6, 8, 10, 12]\nu = [1.0]\n")?;
    let dec = matching(&b, "per-site energy gap decreasing");
    let fin = matching(&b, "per-site energy gap final");
    Ok(Outcome {
        passed: all_pass(&dec) && all_pass(&fin),
        detail: format!("|e(12) - (1 - 4 ln 2)| = {:.4} (limit 0.05), decreasing: {}", worst(&fin), all_pass(&dec)),
    })
}

fn c7() -> Result<Outcome, String> {
    let s = shared()?;
    let pat = matching(&s.roots_periodic, "2-string pattern");
    let sym_p = matching(&s.roots_periodic, "root symmetry");
    let pat_o: Vec<_> = matching(&s.roots_open, "N=6 2-string pattern");
    let sym_o: Vec<_> = matching(&s.roots_open, "N=6 root symmetry");
    let passed = pat.len() == 4 && sym_p.len() == 4 && pat_o.len() == 1 && sym_o.len() == 1
        && all_pass(&pat) && all_pass(&sym_p) && all_pass(&pat_o) && all_pass(&sym_o);
    Ok(Outcome {
        passed,
        detail: format!(
            "string patterns periodic {}/4, open N=6 {}; symmetry defects periodic {:.2e}, open {:.2e} (limit 1e-9)",
            pat.iter().filter(|c| c.passed).count(),
            all_pass(&pat_o),
            worst(&sym_p),
            worst(&sym_o)
        ),
    })
}

fn c8() -> Result<Outcome, String> {
    let b = bundle("command = \"thermo\"\n[chain]\nn = 12\n[sweep]\nn = [6, 8, 10, 12]\nu = [0.5, 1.0]\n")?;
    let gaps = matching(&b, "closed-form gap");
    let fin: Vec<_> = gaps.iter().copied().filter(|c| c.name.ends_with("final")).collect();
    Ok(Outcome {
        passed: gaps.len() == 8 && all_pass(&gaps),
        detail: format!(
            "{}/{} checks; final gaps {}",
            gaps.iter().filter(|c| c.passed).count(),
            gaps.len(),
            fin.iter().map(|c| format!("{:.2}%", 100.0 * c.residual)).collect::<Vec<_>>().join(", ")
        ),
    })
}

fn c9() -> Result<Outcome, String> {
    let b = bundle("command = \"decay\"\n[chain]\nn = 12\n[sweep]\nn = [6, 8, 10, 12]\nu = [1.0]\n")?;
    let dec = matching(&b, "strictly decreasing");
    let slope = matching(&b, "decay slope");
    let rec = b.records.get("thermo").ok_or("no thermo record")?;
    let data = &rec["data"];
    let consts = data["c_w0"] == 2.0 && data["c_w1"] == 3.0 && data["decay"].as_array().is_some_and(|d| d.len() == 4);
    let open = twcore::thermo::gs_energy_closed(&fig_open(6)?).map_err(|e| e.to_string())?;
    let consts_open = open.c_w0 == 2.0 && open.c_w1 == 0.25;
    Ok(Outcome {
        passed: all_pass(&dec) && all_pass(&slope) && consts && consts_open,
        detail: format!(
            "decreasing: {}, slope deviation {:.1}% (limit 30%), constants 2/3 and 2/0.25: {}",
            all_pass(&dec),
            100.0 * worst(&slope),
            consts && consts_open
        ),
    })
}

fn c10() -> Result<Outcome, String> {
    let sets = [("reference set", FIG_OPEN.to_string()), ("p=-0.6i, q_bar=0.5i, xi=0", "p = [0.0, -0.6]\nq_bar = [0.0, 0.5]\nxi = 0.0\n".to_string())];
    let mut passed = true;
    let mut parts = Vec::new();
    for (label, chain) in sets {
        let b = bundle(&format!("command = \"thermo\"\n[chain]\nn = 10\n{chain}[sweep]\nn = [4, 6, 8, 10]\nu = [0.5]\n"))?;
        let c = matching(&b, "surface energy extrapolation");
        passed &= all_pass(&c);
        parts.push(format!("{label} {:.2}%", 100.0 * worst(&c)));
    }
    Ok(Outcome { passed, detail: format!("relative deviation {} (limit 10%)", parts.join(", ")) })
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, Criterion); 10] = [
        (1, "periodic t-W operator identity", c1),
        (2, "open t-W operator identity", c2),
        (3, "inhomogeneous points, crossing, hermiticity", c3),
        (4, "Hamiltonian from transfer matrix", c4),
        (5, "ED and Bethe-ansatz round trip", c5),
        (6, "bulk ground-state energy", c6),
        (7, "root patterns and symmetries", c7),
        (8, "closed-form convergence", c8),
        (9, "decay of the W term", c9),
        (10, "open surface energy", c10),
    ];
    let mut unexpected = 0;
    for (k, label, f) in criteria {
        let start = Instant::now();
        let outcome = f().unwrap_or_else(|e| Outcome { passed: false, detail: format!("error: {e}") });
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.contains(&k);
        let tag = if outcome.passed { "PASS" } else if known { "FAIL (known)" } else { "FAIL" };
        println!("criterion {k:>2} {tag}: {label}: {} [{secs:.1}s]", outcome.detail);
        if !outcome.passed && !known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
