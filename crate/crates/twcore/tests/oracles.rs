use std::f64::consts::{LN_2, PI};

use twcore::baes::{newton_solve, seed_roots, BaeSystem, SeedStrategy, DEFAULT_MAX_ITER, DEFAULT_TOL};
use twcore::chainops::{hamiltonian, r_matrix, ChainSpec};
use twcore::densecore::{hermitian_eigs, permutation, DenseOperator};
use twcore::spectra::{ground_state, ground_state_data, spectrum};
use twcore::thermo::{bulk_energy_per_site, gamma_lanczos, gs_energy_closed, log_gamma, log_lambda_site};
use twcore::c64;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn two_site_ring_singlet() {
    let spec = ChainSpec::periodic(2).unwrap();
    let s = spectrum(&spec).unwrap();
    assert!(close(s[0], -6.0, 1e-12), "{s:?}");
    assert!(s[1..].iter().all(|&e| close(e, 2.0, 1e-12)), "{s:?}");
}

#[test]
fn four_site_ring_ground_energy() {
    let g = ground_state(&ChainSpec::periodic(4).unwrap()).unwrap();
    assert!(close(g.energy, -8.0, 1e-12), "{}", g.energy);
}

#[test]
fn six_site_ring_ground_energy() {
    let g = ground_state(&ChainSpec::periodic(6).unwrap()).unwrap();
    let exact = -4.0 - 2.0 * 13f64.sqrt();
    assert!(close(g.energy, exact, 1e-11), "{} vs {exact}", g.energy);
}

#[test]
fn r_matrix_at_zero_is_permutation() {
    let eta = c64(0.0, 1.0);
    let r = r_matrix(c64(0.0, 0.0), eta);
    assert!(r.rel_diff(&permutation().scale(eta)).unwrap() < 1e-15);
}

#[test]
fn eigs_of_pauli_sum() {
    let m = DenseOperator::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
    let e = hermitian_eigs(&m).unwrap();
    assert!(close(e.values[0], 1.0, 1e-15) && close(e.values[1], 3.0, 1e-15));
}

#[test]
fn gamma_values() {
    assert!(log_gamma(c64(1.0, 0.0)).unwrap().norm() < 1e-15);
    assert!(log_gamma(c64(2.0, 0.0)).unwrap().norm() < 1e-15);
    assert!((log_gamma(c64(0.5, 0.0)).unwrap() - c64(0.5 * PI.ln(), 0.0)).norm() < 1e-14);
    assert!((log_gamma(c64(5.0, 0.0)).unwrap() - c64(24f64.ln(), 0.0)).norm() < 1e-14);
    assert!((gamma_lanczos(c64(5.0, 0.0)) - c64(24.0, 0.0)).norm() < 1e-12);
    // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
    let y = 0.7;
    let g = log_gamma(c64(0.5, y)).unwrap();
    assert!(close(2.0 * g.re, (PI / (PI * y).cosh()).ln(), 1e-13));
}

#[test]
fn bulk_constants() {
    assert!(close(bulk_energy_per_site(), 1.0 - 4.0 * LN_2, 1e-15));
    let t = gs_energy_closed(&ChainSpec::periodic(8).unwrap()).unwrap();
    assert_eq!((t.c_w0, t.c_w1), (2.0, 3.0));
    assert!(close(t.total_energy, 8.0 * (1.0 - 4.0 * LN_2), 1e-15));
    let o = gs_energy_closed(&ChainSpec::open_from_qbar(6, c64(0.0, -1.2), c64(0.0, 0.8), c64(1.0, 0.0)).unwrap()).unwrap();
    assert_eq!((o.c_w0, o.c_w1), (2.0, 0.25));
    assert!(o.surface_energy.unwrap().is_finite());
}

#[test]
fn per_site_factor_at_zero() {
    // 2 G(1) G(3/2) / (G(1/2) G(1)) = 1
    assert!(log_lambda_site(c64(0.0, 0.0)).unwrap().norm() < 1e-14);
}

#[test]
fn hamiltonian_is_hermitian_for_physical_boundaries() {
    let spec = ChainSpec::open_from_qbar(4, c64(0.0, -0.7), c64(0.0, 1.3), c64(0.4, 0.0)).unwrap();
    assert!(spec.is_physical());
    assert!(hamiltonian(&spec).unwrap().hermiticity_defect() < 1e-15);
}

#[test]
fn periodic_round_trip() {
    for n in [4usize, 6, 8] {
        let spec = ChainSpec::periodic(n).unwrap();
        let ed = ground_state_data(&spec).unwrap();
        let sys = BaeSystem::new(&spec).unwrap();
        let x = sys.unknowns_from_roots(&ed.root_set().unwrap()).unwrap();
        let r = sys.residuals(&x).unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(r < 1e-9, "N={n}: {r:e}");
        let rep = newton_solve(&sys, &seed_roots(&spec, SeedStrategy::DensityQuantile).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER)
            .unwrap();
        assert!(rep.converged);
        assert!((rep.energy - ed.ground.energy).abs() < 1e-9, "N={n}");
    }
}

#[test]
fn open_round_trip() {
    let spec = ChainSpec::open_from_qbar(6, c64(0.0, -1.2), c64(0.0, 0.8), c64(1.0, 0.0)).unwrap();
    let ed = ground_state_data(&spec).unwrap();
    let sys = BaeSystem::new(&spec).unwrap();
    let rep =
        newton_solve(&sys, &seed_roots(&spec, SeedStrategy::DensityQuantile).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    assert!(rep.converged);
    assert!((rep.energy - ed.ground.energy).abs() < 1e-8);
}
