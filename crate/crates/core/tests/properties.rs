use jcarray::site::{
    t_r_coupled_no_backscatter, t_r_decoupled_lossless, t_r_decoupled_lossy, t_r_general,
};
use jcarray::transfer::{block_matrix, cascade, cascade_sequential, TransferMatrix};
use jcarray::{CqedParams, Detuning};
use proptest::prelude::*;

fn rate() -> impl Strategy<Value = f64> {
    0.0..5.0f64
}

fn params() -> impl Strategy<Value = CqedParams> {
    (rate(), rate(), rate(), rate(), -5.0..5.0f64)
        .prop_map(|(g, k, gm, eta, delta)| CqedParams::new(g, k, gm, eta, delta))
}

fn detuning() -> impl Strategy<Value = Detuning> {
    (-10.0..10.0f64).prop_map(Detuning)
}

fn scale(m: &TransferMatrix) -> f64 {
    m.entries()
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(1.0, f64::max)
}

fn blocks(p: &CqedParams, d: Detuning, phases: &[f64]) -> Option<Vec<TransferMatrix>> {
    let site = t_r_general(p, d).ok()?;
    phases
        .iter()
        .map(|&phi| block_matrix(&site, phi).ok())
        .collect()
}

proptest! {
    #[test]
    fn cascade_is_associative(
        p in params(),
        d in detuning(),
        phases in prop::collection::vec(0.0..6.3f64, 2..12),
        split in 1usize..11,
    ) {
        let Some(bs) = blocks(&p, d, &phases) else { return Ok(()) };
        let split = split.min(bs.len() - 1);
        let whole = cascade(&bs).unwrap();
        let parts = cascade(&[cascade(&bs[..split]).unwrap(), cascade(&bs[split..]).unwrap()]).unwrap();
        prop_assert!(whole.max_abs_diff(&parts) <= 1e-12 * scale(&whole));
    }

    #[test]
    fn squaring_matches_sequential_product(
        p in params(),
        d in detuning(),
        phi in 0.0..6.3f64,
        n in 1usize..=64,
    ) {
        let Some(bs) = blocks(&p, d, &vec![phi; n]) else { return Ok(()) };
        let fast = cascade(&bs).unwrap();
        let slow = cascade_sequential(&bs).unwrap();
        prop_assert!(fast.max_abs_diff(&slow) <= 1e-12 * scale(&slow));
    }

    #[test]
    fn decoupled_lossless_form_agrees(mut p in params(), d in detuning()) {
        p.g = 0.0;
        p.delta_ac = 0.0;
        let p = p.without_losses();
        let a = t_r_decoupled_lossless(&p, d).unwrap();
        let b = t_r_general(&p, d).unwrap();
        prop_assert!((a.t - b.t).norm() < 1e-12 && (a.r - b.r).norm() < 1e-12);
    }

    #[test]
    fn decoupled_equal_loss_form_agrees(mut p in params(), d in detuning()) {
        p.g = 0.0;
        p.delta_ac = 0.0;
        p.gamma = p.kappa;
        let a = t_r_decoupled_lossy(&p, d).unwrap();
        let b = t_r_general(&p, d).unwrap();
        prop_assert!((a.t - b.t).norm() < 1e-12 && (a.r - b.r).norm() < 1e-12);
    }

    #[test]
    fn no_backscatter_form_agrees(mut p in params(), d in detuning()) {
        p.eta = 0.0;
        p.delta_ac = 0.0;
        let a = t_r_coupled_no_backscatter(&p, d).unwrap();
        let b = t_r_general(&p, d).unwrap();
        prop_assert!((a.t - b.t).norm() < 1e-12 && (a.r - b.r).norm() < 1e-12);
    }

    #[test]
    fn spectra_are_even_without_backscatter(mut p in params(), d in 0.0..10.0f64) {
        p.eta = 0.0;
        p.delta_ac = 0.0;
        let plus = t_r_general(&p, Detuning(d)).unwrap();
        let minus = t_r_general(&p, Detuning(-d)).unwrap();
        prop_assert!((plus.transmission - minus.transmission).abs() < 1e-12);
        prop_assert!((plus.reflection - minus.reflection).abs() < 1e-12);
    }

    #[test]
    fn lossless_decoupled_transmission_is_even(mut p in params(), d in 0.0..10.0f64) {
        p.g = 0.0;
        p.delta_ac = 0.0;
        let p = p.without_losses();
        let plus = t_r_general(&p, Detuning(d)).unwrap();
        let minus = t_r_general(&p, Detuning(-d)).unwrap();
        prop_assert!((plus.transmission - minus.transmission).abs() < 1e-12);
    }

    #[test]
    fn validate_is_idempotent(p in params()) {
        let once = p.validate().unwrap();
        prop_assert_eq!(once.validate().unwrap(), once);
    }
}
