use std::f64::consts::PI;
use std::time::Instant;

use kamforge::counterexample::*;
use kamforge::degree::VectorField;
use proptest::prelude::*;

#[test]
fn plateau_map_values() {
    for sigma in 1..=4 {
        assert_eq!(plateau_gradient(0.0, sigma), 0.0);
        assert_eq!(plateau_gradient(1.5, sigma), 0.5f64.powi(sigma as i32));
        assert_eq!(plateau_gradient(-1.5, sigma), -0.5f64.powi(sigma as i32));
        assert_eq!(plateau_gradient(1.0, sigma), 0.0);
        assert_eq!(plateau_gradient(-1.0, sigma), 0.0);
    }
}

#[test]
fn amplitude_vanishes_at_inverse_multiples_of_pi() {
    assert_eq!(perturbation_amplitude(0.0, 2), 0.0);
    for k in 1..200 {
        let eps = 1.0 / (k as f64 * PI);
        assert!(perturbation_amplitude(eps, 1).abs() <= 1e-13 * eps);
    }
}

#[test]
fn equilibrium_alternates_at_odd_half_periods() {
    for ell in 1..=3 {
        for k in 0..50 {
            let eps = 2.0 / ((2 * k + 1) as f64 * PI);
            let expected = if k % 2 == 0 { -eps.powi(ell) } else { eps.powi(ell) };
            assert!((equilibrium(eps, ell as u32) - expected).abs() <= 1e-12 * eps.powi(ell));
        }
    }
}

#[test]
fn split_report_has_nonzero_degree_and_exact_witness() {
    let cfg = CounterexampleConfig::default();
    let rep = verify_a0_split(&cfg).unwrap();
    assert_eq!(rep.degree, 1);
    assert_eq!((rep.degree_coarse, rep.degree_fine), (1, 1));
    assert!(rep.odd_on_box);
    assert_eq!(rep.witness.gradient_gap, 0.0);
    assert!(rep.witness.distance > 0.0);
    assert!(!rep.convexity.pass);
    let (a, b) = rep.convexity.witness.clone().unwrap();
    assert!(a != b);
    assert!(rep.linear_component.pass);
}

#[test]
fn degree_is_odd_for_every_plateau_power() {
    for sigma in 1..=3 {
        let cfg = CounterexampleConfig {
            sigma_exp: sigma,
            ..CounterexampleConfig::default()
        };
        assert_eq!(verify_a0_split(&cfg).unwrap().degree.rem_euclid(2), 1);
    }
}

#[test]
fn dense_grid_has_many_sign_changes_quickly() {
    let start = Instant::now();
    let cfg = CounterexampleConfig::default();
    let rep = equilibrium_oscillation(&cfg).unwrap();
    verify_a0_split(&cfg).unwrap();
    assert!(start.elapsed().as_secs_f64() <= 5.0);
    assert!(rep.sign_changes >= 10, "{}", rep.sign_changes);
    // 1/eps sweeps (10, 1000): one sign change per crossing of a multiple of pi
    let crossings = ((1000.0 / PI).floor() - (10.0 / PI).floor()) as usize;
    assert!(rep.sign_changes.abs_diff(crossings) <= 1, "{} vs {crossings}", rep.sign_changes);
    assert!(rep.identity_error < 1e-12);
    assert!(rep.tail_spread > 1.9);
    assert!(rep.preimages_above > 0 && rep.preimages_below > 0);
}

#[test]
fn equilibrium_vanishes_where_amplitude_vanishes() {
    let cfg = CounterexampleConfig {
        sigma_exp: 2,
        ell_exp: 1,
        eps_grid: vec![1.0 / (3.0 * PI), 0.9 / (3.0 * PI) + 0.1 / (3.5 * PI)],
    };
    let rep = equilibrium_oscillation(&cfg).unwrap();
    let near_zero = &rep.rows[0];
    assert!(near_zero.equilibrium.abs() < 1e-16);
    assert!(rep.rows[1].equilibrium.abs() > 1e-3);
}

#[test]
fn preimage_lands_outside_plateau_on_alternating_sides() {
    assert_eq!(plateau_preimage(0.0, 1), (-1.0, 1.0));
    let (a, _) = plateau_preimage(-0.25, 2);
    assert!((a - 1.5).abs() < 1e-15);
    let (b, _) = plateau_preimage(0.25, 2);
    assert!((b + 1.5).abs() < 1e-15);
    assert_eq!(plateau_gradient(a, 2), 0.25);
}

#[test]
fn csv_layout() {
    let cfg = CounterexampleConfig {
        eps_grid: vec![0.1, 0.05],
        ..CounterexampleConfig::default()
    };
    let csv = equilibrium_oscillation(&cfg).unwrap().to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epsilon,equilibrium,sign");
    assert_eq!(lines.len(), 3);
}

#[test]
fn invalid_configs_rejected() {
    let bad = [
        CounterexampleConfig { sigma_exp: 0, ..CounterexampleConfig::default() },
        CounterexampleConfig { ell_exp: 0, ..CounterexampleConfig::default() },
        CounterexampleConfig { eps_grid: vec![0.6], ..CounterexampleConfig::default() },
        CounterexampleConfig { eps_grid: vec![0.01, 0.02], ..CounterexampleConfig::default() },
    ];
    for c in bad {
        assert!(equilibrium_oscillation(&c).is_err());
    }
}

proptest! {
    #[test]
    fn field_is_odd(w in -2.0f64..2.0, wb in -2.0f64..2.0, sigma in 1u32..5) {
        let f = PlateauField { sigma };
        let a = f.eval(&[w, wb]);
        let b = f.eval(&[-w, -wb]);
        prop_assert_eq!(a[0], -b[0]);
        prop_assert_eq!(a[1], -b[1]);
    }

    #[test]
    fn plateau_pairs_are_exact_witnesses(a in -1.0f64..=1.0, b in -1.0f64..=1.0, wb in -2.0f64..2.0) {
        let f = PlateauField { sigma: 1 };
        prop_assert_eq!(f.eval(&[a, wb]), f.eval(&[b, wb]));
    }

    #[test]
    fn scaled_equilibrium_is_minus_sine(eps in 1e-3f64..0.4, ell in 1u32..4) {
        let v = equilibrium(eps, ell) / eps.powi(ell as i32);
        prop_assert!((v + (1.0 / eps).sin()).abs() < 1e-12);
    }
}
