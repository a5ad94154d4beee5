mod common;

use common::*;
use kamforge::homological::*;
use kamforge::normal_form::NormalForm;
use kamforge::series::*;
use kamforge::KamError;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn dims() -> Dims {
    Dims::new(2, 1, 1).unwrap()
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn mono(k: [i32; 2], y: [u32; 2], z: [u32; 2], w: u32, wb: u32) -> MultiIndex {
    MultiIndex::from_parts(&k, &y, &z, &[w], &[wb])
}

fn dio(gamma: f64) -> DiophantineParams {
    DiophantineParams { gamma, tau: 1.0, d: 1.0, delta: -0.5 }
}

fn plain_normal_form() -> NormalForm {
    let d = dims();
    NormalForm::new(d, 0.0, vec![1.0, SQRT2], vec![5.3], TFSeries::zero(d), TFSeries::zero(d), 5).unwrap()
}

/// Quartic degenerate part plus mixed coupling terms.
fn coupled_normal_form() -> NormalForm {
    let d = dims();
    let mut g = TFSeries::zero(d);
    g.add_term(mono([0, 0], [0, 0], [4, 0], 0, 0), c(0.5));
    g.add_term(mono([0, 0], [0, 0], [0, 4], 0, 0), c(0.5));
    g.add_term(mono([0, 0], [0, 0], [2, 2], 0, 0), c(0.1));
    let mut f = TFSeries::zero(d);
    f.add_term(mono([0, 0], [1, 0], [1, 0], 0, 0), c(0.3));
    f.add_term(mono([0, 0], [0, 1], [0, 1], 0, 0), c(-0.2));
    f.add_term(mono([0, 0], [2, 0], [0, 0], 0, 0), c(0.25));
    f.add_term(mono([0, 0], [0, 0], [1, 0], 1, 1), c(0.15));
    NormalForm::new(d, 0.7, vec![1.0, SQRT2], vec![5.3], g, f, 5).unwrap()
}

fn sites() -> (ModeSites, WeightedNorm) {
    (
        ModeSites { z: vec![1], w: vec![2] },
        WeightedNorm { a_wt: 0.0, p: 1.0, p_bar: 1.0, r: 0.5, s: 0.5, a_exp: 2.0 },
    )
}

fn random_rhs(seed: u64, caps: &GradingCaps) -> TFSeries {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let raw = random_series(&mut g, dims(), 40, 5, 3);
    truncate(&raw, caps.k_max, caps.m_max).0
}

#[test]
fn bracket_weight_cases() {
    assert_eq!(bracket_weight(&[0], &[5], 2.0), 1.0);
    assert_eq!(bracket_weight(&[1, 0], &[5, 3], 2.0), 25.0);
    assert_eq!(bracket_weight(&[0, 0], &[5, 3], 2.0), 1.0);
    assert_eq!(bracket_weight(&[1, -1], &[3, 3], 2.0), 1.0);
}

#[test]
fn divisor_cases() {
    let chk = small_divisor_ok(&[1, -1], &[], &[1.0, SQRT2], &[], &[], &dio(0.1)).unwrap();
    // |k| is the l1 norm, so (1 + |k|)^tau = 3.
    assert!((chk.divisor.abs() - (SQRT2 - 1.0)).abs() < 1e-15);
    assert!((chk.threshold - 0.1 / 3.0).abs() < 1e-15);
    assert!(chk.ok);
    for j in 1..6u32 {
        let chk = small_divisor_ok(&[0, 0], &[1], &[1.0, SQRT2], &[j as f64], &[j], &dio(1.0)).unwrap();
        assert!(chk.ok && chk.divisor == j as f64);
    }
    let chk = small_divisor_ok(&[1, -1], &[], &[1.0, 1.0], &[], &[], &dio(1e-12)).unwrap();
    assert!(!chk.ok && chk.divisor == 0.0);
    assert!(small_divisor_ok(&[0, 0], &[0], &[1.0, 1.0], &[2.0], &[1], &dio(0.1)).is_err());
}

#[test]
fn single_harmonic_is_a_scalar_division() {
    let nf = plain_normal_form();
    let d = nf.dims;
    let caps = GradingCaps::new(3, 5);
    let k = [2, -1];
    let p = Complex64::new(0.4, -0.3);
    let r = TFSeries::monomial(d, mono(k, [0, 0], [0, 0], 0, 0), p);
    let sys = assemble(&nf, &r, &caps, &[2], &dio(0.01)).unwrap();
    assert_eq!(sys.classes.len(), 1);
    let (ms, nrm) = sites();
    let sol = solve(&sys, &nrm, &ms).unwrap();
    let kw = 2.0 - SQRT2;
    assert_eq!(sol.generator.len(), 1);
    let got = sol.generator.get(&mono(k, [0, 0], [0, 0], 0, 0));
    assert!((got - p / (I * kw)).norm() < 1e-14);
    assert!(sol.correction.is_empty());
}

#[test]
fn mode_difference_class_has_normal_frequency_diagonal() {
    let nf = plain_normal_form();
    let d = nf.dims;
    let caps = GradingCaps::new(3, 5);
    let idx = mono([0, 0], [0, 0], [0, 0], 1, 0);
    let r = TFSeries::monomial(d, idx, c(1.0));
    let sys = assemble(&nf, &r, &caps, &[2], &dio(0.01)).unwrap();
    let cls = &sys.classes[0];
    for i in 0..cls.unknowns.len() {
        assert!((cls.matrix[(i, i)].norm() - 5.3).abs() < 1e-14);
    }
    let (ms, nrm) = sites();
    let sol = solve(&sys, &nrm, &ms).unwrap();
    assert!((sol.generator.get(&idx) - c(1.0) / (I * 5.3)).norm() < 1e-14);
}

#[test]
fn averaged_rhs_needs_no_generator() {
    let nf = coupled_normal_form();
    let d = nf.dims;
    let caps = GradingCaps::new(3, 5);
    let mut r = TFSeries::zero(d);
    r.add_term(mono([0, 0], [1, 0], [0, 0], 0, 0), c(0.1));
    r.add_term(mono([0, 0], [0, 0], [1, 1], 1, 1), c(0.2));
    let sys = assemble(&nf, &r, &caps, &[2], &dio(0.01)).unwrap();
    let (ms, nrm) = sites();
    let sol = solve(&sys, &nrm, &ms).unwrap();
    assert!(sol.generator.is_empty());
    assert!(sol.correction.is_empty());
    assert_eq!(sol.resonant, r);
}

/// Residual checked with the independent bracket, including the coupling blocks.
#[test]
fn coupled_residual_vanishes_under_naive_bracket() {
    let nf = coupled_normal_form();
    let d = nf.dims;
    let l = Layout::of(&d);
    let caps = GradingCaps::new(3, 5);
    let (ms, nrm) = sites();
    for seed in 0..6 {
        let r = random_rhs(seed, &caps);
        let sys = assemble(&nf, &r, &caps, &[2], &dio(1e-3)).unwrap();
        let sol = solve(&sys, &nrm, &ms).unwrap();
        let image = from_naive(d, &naive_bracket(&l, &to_naive(&nf.to_series()), &to_naive(&sol.generator)));
        let (inside, _) = image.partition(|i| caps.contains(i));
        let res = inside.add(&r).unwrap().sub(&sol.resonant).unwrap();
        let rn = majorant_vf_norm(&r, &nrm, &ms);
        assert!(majorant_vf_norm(&res, &nrm, &ms) <= 1e-9 * rn, "seed {seed}");
        assert!(sol.residual_norm <= 1e-9 * sol.rhs_norm);
        assert!(sol.det_bound_holds());
    }
}

#[test]
fn coupling_blocks_are_present() {
    let nf = coupled_normal_form();
    let d = nf.dims;
    let caps = GradingCaps::new(3, 5);
    let r = TFSeries::monomial(d, mono([1, 0], [0, 0], [1, 0], 0, 0), c(1.0));
    let sys = assemble(&nf, &r, &caps, &[2], &dio(1e-3)).unwrap();
    let m = &sys.classes[0].matrix;
    let off: f64 = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].norm())
        .sum();
    assert!(off > 0.0);
}

#[test]
fn correction_matches_z_block_definition() {
    let nf = coupled_normal_form();
    let d = nf.dims;
    let l = Layout::of(&d);
    let caps = GradingCaps::new(3, 5);
    let r = random_rhs(42, &caps);
    let sys = assemble(&nf, &r, &caps, &[2], &dio(1e-3)).unwrap();
    let (ms, nrm) = sites();
    let sol = solve(&sys, &nrm, &ms).unwrap();
    let a = to_naive(&nf.z_dependent());
    let f = to_naive(&sol.generator);
    let term = naive_add(
        &naive_mul(&naive_dslot(&a, l.z(0)), &naive_dslot(&f, l.z(1))),
        &naive_scale(&naive_mul(&naive_dslot(&a, l.z(1)), &naive_dslot(&f, l.z(0))), c(-1.0)),
    );
    let want: Vec<_> = term
        .into_iter()
        .filter(|(e, _)| 2 * (e[l.y(0)] + e[l.y(1)]) + e[l.z(0)] + e[l.z(1)] > 5 || e[l.w(0)] + e[l.wb(0)] > 2)
        .collect();
    assert!(!want.is_empty());
    assert!(naive_max_diff(&to_naive(&sol.correction), &want) < 1e-12);
}

#[test]
fn resonant_class_is_rejected() {
    let d = dims();
    let nf = NormalForm::new(d, 0.0, vec![1.0, 1.0], vec![3.0], TFSeries::zero(d), TFSeries::zero(d), 5).unwrap();
    let r = TFSeries::monomial(d, mono([1, -1], [0, 0], [0, 0], 0, 0), c(1.0));
    let err = assemble(&nf, &r, &GradingCaps::new(3, 5), &[2], &dio(0.01)).unwrap_err();
    assert!(matches!(err, KamError::Resonance { .. }));
}

#[test]
fn out_of_grading_rhs_is_rejected() {
    let nf = plain_normal_form();
    let r = TFSeries::monomial(nf.dims, mono([1, 0], [3, 0], [0, 0], 0, 0), c(1.0));
    assert!(assemble(&nf, &r, &GradingCaps::new(3, 5), &[2], &dio(0.01)).is_err());
}

#[test]
fn a_rho_cases() {
    assert_eq!(log_a_rho(1, 0, 0.1, 1.0, 1, 0, 1.0, &[]), f64::NEG_INFINITY);
    for tau in [0.0, 1.0, 2.5] {
        let rho: f64 = 0.3;
        let want = (2.0 * (2f64.powf(1.0 + tau)).powi(2) * (-2.0 * rho).exp()).sqrt();
        let got = log_a_rho(1, 1, rho, tau, 1, 0, 1.0, &[]).exp();
        assert!((got - want).abs() < 1e-12 * want);
    }
    let mut last = f64::INFINITY;
    for i in 1..20 {
        let v = log_a_rho(2, 3, 0.05 * i as f64, 1.0, 1, 5, 1.0, &[2]);
        assert!(v < last);
        last = v;
    }
}

/// Direct enumeration with the mode sum written out by hand.
#[test]
fn a_rho_matches_enumeration() {
    let (n, kmax, rho, tau, b, m, d) = (2usize, 2u32, 0.4, 1.0, 1usize, 3u32, 1.0);
    let sites = [3u32];
    let mut sum = 0.0;
    for k1 in -2i32..=2 {
        for k2 in -2i32..=2 {
            let kn = (k1.abs() + k2.abs()) as u32;
            if kn == 0 || kn > kmax {
                continue;
            }
            for i1 in 0..=1u32 {
                for i2 in 0..=1u32 {
                    for j1 in 0..=3u32 {
                        for j2 in 0..=3u32 {
                            if 2 * (i1 + i2) + j1 + j2 > m {
                                continue;
                            }
                            for (l1, l2) in [(0u32, 0u32), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                                let lw = ((l1 as f64 - l2 as f64) * 3f64.powf(d)).abs().max(1.0);
                                let e = ((2 * b) as f64).powi((i1 + i2 + j1 + j2 + l1 + l2) as i32);
                                let t = (1.0 + kn as f64).powf(1.0 + e * tau) / lw.powf(e);
                                sum += t * t * (-2.0 * kn as f64 * rho).exp();
                            }
                        }
                    }
                }
            }
        }
    }
    let got = log_a_rho(n, kmax, rho, tau, b, m, d, &sites);
    assert!((got - 0.5 * sum.ln()).abs() < 1e-12);
}

#[test]
fn diagnostics_csv_has_one_row_per_class() {
    let nf = coupled_normal_form();
    let caps = GradingCaps::new(3, 5);
    let r = random_rhs(5, &caps);
    let sys = assemble(&nf, &r, &caps, &[2], &dio(1e-3)).unwrap();
    let (ms, nrm) = sites();
    let sol = solve(&sys, &nrm, &ms).unwrap();
    let csv = sol.diagnostics_csv();
    assert!(csv.starts_with("k,class,divisor,threshold,cond,residual\n"));
    assert_eq!(csv.lines().count(), 1 + sys.classes.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solve_is_linear(s1 in 0u64..1000, s2 in 1000u64..2000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let nf = coupled_normal_form();
        let caps = GradingCaps::new(2, 5);
        let r1 = random_rhs(s1, &caps);
        let r2 = random_rhs(s2, &caps);
        let (ms, nrm) = sites();
        let run = |r: &TFSeries| {
            let sys = assemble(&nf, r, &caps, &[2], &dio(1e-3)).unwrap();
            solve(&sys, &nrm, &ms).unwrap().generator
        };
        let combo = r1.scale(c(a)).add(&r2.scale(c(b))).unwrap();
        let lhs = run(&combo);
        let rhs = run(&r1).scale(c(a)).add(&run(&r2).scale(c(b))).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn determinant_bound_on_samples(seed in any::<u64>()) {
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let d = dims();
        let freq = vec![g.gen_range(0.5..1.5), g.gen_range(1.5..2.5)];
        let normal = vec![g.gen_range(4.0..6.0)];
        let nf = NormalForm::new(d, 0.0, freq, normal, coupled_normal_form().degenerate, coupled_normal_form().coupling, 5).unwrap();
        let caps = GradingCaps::new(2, 5);
        let r = random_rhs(seed, &caps);
        match assemble(&nf, &r, &caps, &[2], &dio(1e-3)) {
            Ok(sys) => {
                let (ms, nrm) = sites();
                let sol = solve(&sys, &nrm, &ms).unwrap();
                prop_assert!(sol.det_bound_holds());
            }
            Err(KamError::Resonance { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
