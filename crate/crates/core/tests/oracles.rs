//! Closed forms against independently constructed references.

use jcarray::bloch::{cos_kl_from_abcd, cos_kl_from_t};
use jcarray::site::{find_transmission_minima, oracle_solve, t_r_general};
use jcarray::transfer::{array_spectrum, block_matrix, cascade, extract_t_r, LatticeSpec};
use jcarray::{CqedParams, Detuning, Grid, PointFlag, Regime};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_params(rng: &mut ChaCha8Rng, lossless: bool) -> CqedParams {
    let mut p = CqedParams::new(
        rng.random_range(0.0..5.0),
        rng.random_range(0.0..5.0),
        rng.random_range(0.0..5.0),
        rng.random_range(0.0..5.0),
        rng.random_range(-5.0..5.0),
    );
    if lossless {
        p = p.without_losses();
    }
    p
}

#[test]
fn closed_form_matches_linear_solve_over_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let p = random_params(&mut rng, false);
        let d = Detuning(rng.random_range(-10.0..10.0));
        let closed = t_r_general(&p, d).unwrap();
        let oracle = oracle_solve(&p, d).unwrap().amplitudes();
        worst = worst
            .max((closed.t - oracle.t).norm())
            .max((closed.r - oracle.r).norm());
    }
    assert!(worst < 1e-10, "worst deviation {worst:e}");
}

#[test]
fn lossless_sites_are_unitary_over_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let p = random_params(&mut rng, true);
        let d = Detuning(rng.random_range(-10.0..10.0));
        let a = t_r_general(&p, d).unwrap();
        assert!(
            (a.transmission + a.reflection - 1.0).abs() < 1e-12,
            "{p:?} at {d:?}"
        );
    }
}

#[test]
fn decoupled_emitter_stays_unexcited() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let mut p = random_params(&mut rng, false);
        p.g = 0.0;
        let d = Detuning(rng.random_range(-10.0..10.0));
        let sol = oracle_solve(&p, d).unwrap();
        assert!(sol.e_q.norm() < 1e-14);
        assert!(sol.residual(&p, d) < 1e-14);
    }
}

#[test]
fn two_block_chain_matches_fabry_perot_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..2000 {
        let p = random_params(&mut rng, true);
        let d = Detuning(rng.random_range(-10.0..10.0));
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let site = t_r_general(&p, d).unwrap();
        let Ok(block) = block_matrix(&site, phi) else {
            continue;
        };
        let got = extract_t_r(&cascade(&[block, block]).unwrap()).unwrap();
        let e = Complex64::from_polar(1.0, phi);
        let expected = site.t * site.t * e * e / (1.0 - site.r * site.r * e * e);
        assert!((got.t - expected).norm() < 1e-10, "{p:?} {d:?} φ = {phi}");
    }
}

#[test]
fn both_dispersion_formulas_agree_over_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut evaluated = 0;
    for _ in 0..10_000 {
        let p = random_params(&mut rng, true);
        let spec = LatticeSpec::new(1, rng.random_range(0.01..1.0));
        let w = 1.0 + rng.random_range(-0.01..0.01);
        let (Ok(a), Ok(b)) = (cos_kl_from_t(&p, &spec, w), cos_kl_from_abcd(&p, &spec, w)) else {
            continue;
        };
        worst = worst.max((a - b).abs());
        evaluated += 1;
    }
    assert!(evaluated > 9_990);
    assert!(worst < 1e-9, "worst deviation {worst:e}");
}

#[test]
fn lossless_arrays_conserve_flux() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = Grid::inclusive(-10.0, 10.0, 401).unwrap();
    for _ in 0..20 {
        let p = random_params(&mut rng, true);
        let l = rng.random_range(0.01..1.0);
        for n in 1..=10 {
            for pt in array_spectrum(&p, &LatticeSpec::new(n, l), &grid).unwrap() {
                assert_ne!(pt.flag, PointFlag::Singular);
                assert!(
                    (pt.transmission + pt.reflection - 1.0).abs() < 1e-10,
                    "{p:?} N = {n}: {pt:?}"
                );
            }
        }
    }
}

/// True if T_N has a local minimum within `radius` of `at`.
fn has_minimum_near(p: &CqedParams, spec: &LatticeSpec, at: f64, radius: f64) -> bool {
    let grid = Grid::inclusive(at - radius, at + radius, 401).unwrap();
    let t: Vec<f64> = array_spectrum(p, spec, &grid)
        .unwrap()
        .iter()
        .map(|pt| pt.transmission)
        .collect();
    let (argmin, _) = t
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    argmin != 0 && argmin != t.len() - 1 || t.iter().all(|&v| v == t[argmin])
}

#[test]
fn single_site_dips_survive_in_ten_site_arrays() {
    let spec = LatticeSpec::new(10, 0.25);
    for regime in Regime::ALL {
        let p = regime.params();
        let dips = find_transmission_minima(&p, (-10.0, 10.0), 4001).unwrap();
        for dip in dips.iter().map(|d| d.0).filter(|d| d.abs() < 9.5) {
            assert!(
                has_minimum_near(&p, &spec, dip, 0.1),
                "{} dip at {dip}",
                regime.name()
            );
        }
    }
}
