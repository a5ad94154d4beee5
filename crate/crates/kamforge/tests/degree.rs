use kamforge::degree::*;
use kamforge::KamError;
use proptest::prelude::*;

fn field<F: Fn(&[f64]) -> Vec<f64> + Sync>(dim: usize, f: F) -> FnField<F> {
    FnField { dim, f }
}

fn problem<'a>(map: &'a dyn VectorField, region: BoxRegion) -> DegreeProblem<'a> {
    let n = region.dim();
    DegreeProblem {
        map,
        region,
        target: vec![0.0; n],
        boundary_margin: 1e-6,
    }
}

/// Plateau gradient: zero on `[-1,1]`, `±(|w|-1)^s` outside.
fn plateau(w: f64, s: i32) -> f64 {
    if w > 1.0 {
        (w - 1.0).powi(s)
    } else if w < -1.0 {
        -(-w - 1.0).powi(s)
    } else {
        0.0
    }
}

fn appendix_gradient(s: i32) -> FnField<impl Fn(&[f64]) -> Vec<f64> + Sync> {
    field(2, move |z: &[f64]| vec![plateau(z[0], s), z[1]])
}

#[test]
fn identity_has_degree_one() {
    for n in 1..=4 {
        let id = field(n, |x: &[f64]| x.to_vec());
        let region = BoxRegion {
            lo: (0..n).map(|i| -1.0 - 0.1 * i as f64).collect(),
            hi: (0..n).map(|i| 2.0 - 0.3 * i as f64).collect(),
        };
        assert_eq!(brouwer_degree(&problem(&id, region), 2).unwrap(), 1, "dim {n}");
    }
}

#[test]
fn negation_has_degree_of_its_determinant() {
    for n in 1..=4 {
        let neg = field(n, |x: &[f64]| x.iter().map(|v| -v).collect());
        let want = if n % 2 == 0 { 1 } else { -1 };
        assert_eq!(brouwer_degree(&problem(&neg, BoxRegion::symmetric(1.0, n)), 2).unwrap(), want);
    }
}

/// Complex powers `z^p` seen as planar maps: p preimages, all orientation preserving.
#[test]
fn complex_powers_count_preimages() {
    for p in 1..=4i32 {
        let f = field(2, move |x: &[f64]| {
            let z = num_complex::Complex64::new(x[0], x[1]).powi(p) - num_complex::Complex64::new(0.1, 0.05);
            vec![z.re, z.im]
        });
        assert_eq!(brouwer_degree(&problem(&f, BoxRegion::symmetric(1.5, 2)), 4).unwrap(), p);
    }
}

#[test]
fn fold_has_degree_zero() {
    let f = field(2, |x: &[f64]| vec![x[0] * x[0] - 0.25, x[1]]);
    assert_eq!(brouwer_degree(&problem(&f, BoxRegion::symmetric(1.0, 2)), 3).unwrap(), 0);
}

#[test]
fn appendix_plateau_map_has_nonzero_degree() {
    for s in 1..=3 {
        let g = appendix_gradient(s);
        let d = brouwer_degree(&problem(&g, BoxRegion::symmetric(2.0, 2)), 4).unwrap();
        assert_eq!(d, 1);
    }
}

#[test]
fn boundary_zero_is_ill_posed() {
    let id = field(2, |x: &[f64]| x.to_vec());
    let region = BoxRegion { lo: vec![0.0, -1.0], hi: vec![1.0, 1.0] };
    assert!(matches!(degree_at(&problem(&id, region), 4), Err(KamError::IllPosedBoundary { .. })));
}

#[test]
fn five_dimensions_are_unsupported() {
    let id = field(5, |x: &[f64]| x.to_vec());
    assert!(matches!(
        degree_at(&problem(&id, BoxRegion::symmetric(1.0, 5)), 2),
        Err(KamError::UnsupportedDimension(5))
    ));
}

fn quartic_gradient() -> FnField<impl Fn(&[f64]) -> Vec<f64> + Sync> {
    field(2, |z: &[f64]| vec![2.0 * z[0].powi(3), 2.0 * z[1].powi(3)])
}

#[test]
fn homotopy_keeps_degree() {
    let g = quartic_gradient();
    let c = [0.05, -0.02];
    for t in [0.0, 0.25, 0.5, 1.0] {
        let h = field(2, move |z: &[f64]| vec![2.0 * z[0].powi(3) + t * c[0], 2.0 * z[1].powi(3) + t * c[1]]);
        for res in [2, 4, 8] {
            let d = degree_at(&problem(&h, BoxRegion::symmetric(1.0, 2)), res).unwrap();
            assert_eq!(d, degree_at(&problem(&g, BoxRegion::symmetric(1.0, 2)), res).unwrap());
        }
    }
}

#[test]
fn excision_to_a_small_box() {
    let f = field(2, |x: &[f64]| {
        let z = num_complex::Complex64::new(x[0] - 0.3, x[1] + 0.2).powi(3);
        vec![z.re, z.im]
    });
    let big = brouwer_degree(&problem(&f, BoxRegion::symmetric(2.0, 2)), 4).unwrap();
    let small = BoxRegion { lo: vec![0.1, -0.4], hi: vec![0.5, 0.0] };
    assert_eq!(big, brouwer_degree(&problem(&f, small), 4).unwrap());
}

#[test]
fn zero_perturbation_returns_center() {
    let g = quartic_gradient();
    let zero = field(2, |_: &[f64]| vec![0.0, 0.0]);
    let eq = find_equilibrium(&g, &zero, &[0.4, -0.1], 0.5, &EquilibriumOptions::default()).unwrap();
    assert_eq!(eq.point, vec![0.4, -0.1]);
    assert_eq!(eq.residual, 0.0);
}

/// Cubic oracle: `2u^3 + c = 0` has the real root `cbrt(-c/2)`.
#[test]
fn quartic_with_linear_perturbation_matches_cubic_root() {
    let g = quartic_gradient();
    for c in [1e-3, -0.04, 0.2, 1e-9] {
        let pert = field(2, move |_: &[f64]| vec![c, 0.0]);
        let eq = find_equilibrium(&g, &pert, &[0.0, 0.0], 1.0, &EquilibriumOptions::default()).unwrap();
        let want = (-c / 2.0f64).cbrt();
        assert!((eq.point[0] - want).abs() < 1e-6 * want.abs().max(1e-3), "c={c}: {:?}", eq.point);
        assert!(eq.point[1].abs() < 1e-4);
        let chk = [2.0 * eq.point[0].powi(3) + c, 2.0 * eq.point[1].powi(3)];
        assert!((chk[0] * chk[0] + chk[1] * chk[1]).sqrt() <= 1e-10);
    }
}

#[test]
fn plateau_root_lands_outside_the_flat_region() {
    let g = appendix_gradient(1);
    for c in [1e-3, -1e-3, 0.05] {
        let pert = field(2, move |_: &[f64]| vec![c, c]);
        let eq = find_equilibrium(&g, &pert, &[0.0, 0.0], 2.0, &EquilibriumOptions::default()).unwrap();
        assert!(eq.point[0].abs() > 1.0);
        assert!((eq.point[0] + c.signum() * (1.0 + c.abs())).abs() < 1e-8);
        assert!((eq.point[1] + c).abs() < 1e-10);
    }
}

#[test]
fn tiny_ball_reports_missing_equilibrium() {
    let g = quartic_gradient();
    let pert = field(2, |_: &[f64]| vec![0.5, 0.0]);
    let err = find_equilibrium(&g, &pert, &[0.0, 0.0], 1e-3, &EquilibriumOptions::default()).unwrap_err();
    assert!(matches!(err, KamError::EquilibriumNotFound { .. }));
}

fn convexity(l: f64, sigma: f64, exclusion: f64) -> ConvexityOptions {
    ConvexityOptions {
        l_exp: l,
        sigma,
        samples: 6000,
        seed: 11,
        exclusion,
        weight_p: vec![],
        weight_pbar: vec![],
    }
}

/// Grid oracle for the convexity constant of the quartic.
fn grid_min_ratio(l: f64, exclusion: f64) -> f64 {
    let pts: Vec<f64> = (0..=24).map(|i| -1.0 + i as f64 / 12.0).collect();
    let grad = |a: f64, b: f64| [2.0 * a.powi(3), 2.0 * b.powi(3)];
    let mut best = f64::INFINITY;
    for &a in &pts {
        for &b in &pts {
            for &c in &pts {
                for &d in &pts {
                    let dist = ((a - c).powi(2) + (b - d).powi(2)).sqrt();
                    if dist == 0.0 || dist < exclusion {
                        continue;
                    }
                    let (g1, g2) = (grad(a, b), grad(c, d));
                    let dg = ((g1[0] - g2[0]).powi(2) + (g1[1] - g2[1]).powi(2)).sqrt();
                    best = best.min(dg / dist.powf(l));
                }
            }
        }
    }
    best
}

#[test]
fn quartic_is_weakly_convex_with_cubic_exponent() {
    let g = quartic_gradient();
    let region = BoxRegion::symmetric(1.0, 2);
    let sigma = 0.5 * grid_min_ratio(3.0, 0.0);
    assert!(sigma > 0.1);
    let rep = weak_convexity_check(&g, &region, &convexity(3.0, sigma, 0.0));
    assert!(rep.pass, "{rep:?}");
    assert!(rep.witness.is_none());
}

#[test]
fn quadratic_exponent_needs_the_restricted_domain() {
    let g = quartic_gradient();
    let region = BoxRegion::symmetric(1.0, 2);
    let full = weak_convexity_check(&g, &region, &convexity(2.0, 0.05, 0.0));
    assert!(!full.pass);
    let delta = 0.2;
    let sigma = 0.5 * grid_min_ratio(2.0, delta);
    let restricted = weak_convexity_check(&g, &region, &convexity(2.0, sigma, delta));
    assert!(restricted.pass, "{restricted:?}");
}

#[test]
fn plateau_violates_weak_convexity() {
    let g = appendix_gradient(1);
    let rep = weak_convexity_check(&g, &BoxRegion::symmetric(2.0, 2), &convexity(2.0, 1e-6, 0.0));
    assert!(!rep.pass);
    assert_eq!(rep.min_ratio, 0.0);
    let (z, zs) = rep.witness.unwrap();
    assert!(z[0].abs() <= 1.0 && zs[0].abs() <= 1.0 && z[1] == zs[1] && z[0] != zs[0]);
}

#[test]
fn linear_gradient_fails_large_sigma() {
    let g = field(2, |z: &[f64]| z.to_vec());
    let rep = weak_convexity_check(&g, &BoxRegion::symmetric(1.0, 2), &convexity(2.0, 10.0, 0.0));
    assert!(!rep.pass && rep.witness.is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Borsuk: odd maps non-vanishing on the boundary of a symmetric box have odd degree.
    #[test]
    fn odd_maps_have_odd_degree(a in prop::array::uniform4(-2.0f64..2.0), c in prop::array::uniform2(-1.0f64..1.0)) {
        let f = field(2, move |z: &[f64]| vec![
            a[0] * z[0] + a[1] * z[1] + c[0] * z[0].powi(3),
            a[2] * z[0] + a[3] * z[1] + c[1] * z[1].powi(3) + z[0] * z[0] * z[1],
        ]);
        let prob = DegreeProblem { map: &f, region: BoxRegion::symmetric(1.0, 2), target: vec![0.0, 0.0], boundary_margin: 1e-3 };
        match brouwer_degree(&prob, 8) {
            Ok(d) => prop_assert!(d % 2 != 0, "degree {d}"),
            Err(KamError::IllPosedBoundary { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
