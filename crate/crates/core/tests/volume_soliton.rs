use proptest::prelude::*;
use spectral_lab::geometry::{make_soliton, sphere_area, SolitonModel, SolitonStructure, WarpedModel};
use spectral_lab::volume::{
    check_lemma3, check_soliton_volume_identities, check_subexp_growth, soliton_area, soliton_chi, soliton_volume,
    GrowthVerdict,
};

fn builtins() -> Vec<SolitonModel> {
    vec![
        make_soliton(SolitonStructure::Gaussian, 3, 0).unwrap(),
        make_soliton(SolitonStructure::Cylinder, 4, 2).unwrap(),
        make_soliton(SolitonStructure::Cylinder, 5, 3).unwrap(),
    ]
}

/// Volume of `{2 sqrt(|x|²/4 + k/2) < r}` in `S²(√2) × R²` by a midpoint sum over the plane.
fn cylinder_volume_oracle(r: f64) -> f64 {
    let s_max = (r * r - 4.0).sqrt();
    let m = 2000;
    let h = 2.0 * s_max / m as f64;
    let mut area = 0.0;
    for i in 0..m {
        let x = -s_max + (i as f64 + 0.5) * h;
        for j in 0..m {
            let y = -s_max + (j as f64 + 0.5) * h;
            let f = (x * x + y * y) / 4.0 + 1.0;
            if 2.0 * f.sqrt() < r {
                area += h * h;
            }
        }
    }
    area * 4.0 * std::f64::consts::PI * 2.0
}

#[test]
fn cylinder_volume_matches_planar_quadrature() {
    let m = make_soliton(SolitonStructure::Cylinder, 4, 2).unwrap();
    for r in [2.5, 5.0, 9.0] {
        let oracle = cylinder_volume_oracle(r);
        let v = soliton_volume(&m, r);
        assert!((v - oracle).abs() <= 2e-3 * oracle, "r = {r}: {v} vs {oracle}");
        // R = k/2 is constant, so χ = R V.
        assert!((soliton_chi(&m, r) - m.scalar_curvature() * v).abs() <= 1e-12 * v);
    }
}

#[test]
fn gaussian_volume_is_euclidean_ball() {
    let m = make_soliton(SolitonStructure::Gaussian, 3, 0).unwrap();
    for r in [0.5, 3.0, 40.0] {
        let ball = 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
        assert!((soliton_volume(&m, r) - ball).abs() <= 1e-12 * ball);
        assert!((soliton_area(&m, r) - sphere_area(2) * r * r).abs() <= 1e-12 * ball);
    }
}

#[test]
fn soliton_identities_hold() {
    for m in builtins() {
        for i in 0..=400 {
            let s = 1e-3 * 10f64.powf(i as f64 * 6.0 / 400.0);
            assert!(m.normalization_residual(s).abs() < 1e-12 * m.potential(s).max(1.0));
            assert!((m.grad_rho_sq(s) - m.grad_rho_sq_identity(s)).abs() < 1e-12);
            let (lhs, rhs) = m.hamilton_identity(s);
            assert_eq!((lhs, rhs), (0.0, 0.0));
        }
        let lo = m.rho_min() + 0.1;
        let grid: Vec<f64> = (0..=300).map(|i| lo * (1e3f64 / lo).powf(i as f64 / 300.0)).collect();
        let rep = check_soliton_volume_identities(&m, &grid);
        assert!(rep.max_relative_residual <= 1e-10, "{rep:?}");
        assert!(rep.nonnegative && rep.chi_bound_holds);
        let mut prev = 0.0;
        for &r in &grid {
            let v = soliton_volume(&m, r);
            assert!(v >= prev && soliton_area(&m, r) >= 0.0);
            assert!(soliton_chi(&m, r) <= 0.5 * m.n() as f64 * v * (1.0 + 1e-15));
            prev = v;
        }
    }
}

#[test]
fn growth_classification() {
    let distances = [0.0, 10.0, 100.0, 1000.0];
    let radii: Vec<f64> = (0..40).map(|i| 2500f64.powf(i as f64 / 39.0)).collect();
    let e = WarpedModel::euclidean(3, 4000.0).unwrap();
    assert_eq!(check_subexp_growth(&e, 0.1, &distances, &radii).unwrap().verdict, GrowthVerdict::SatisfiedOnSurrogate);
    let h = WarpedModel::hyperbolic(3, 120.0).unwrap();
    let radii: Vec<f64> = (0..30).map(|i| 1.0 + 2.5 * i as f64).collect();
    assert_eq!(check_subexp_growth(&h, 0.1, &[0.0, 5.0, 10.0, 30.0], &radii).unwrap().verdict, GrowthVerdict::Violated);
    let c = WarpedModel::cusp(120.0).unwrap();
    let radii: Vec<f64> = (0..30).map(|i| 1.0 + 2.5 * i as f64).collect();
    assert_eq!(check_subexp_growth(&c, 0.1, &[1.0, 10.0, 20.0, 40.0], &radii).unwrap().verdict, GrowthVerdict::Violated);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lemma3_bounds(which in 0usize..3, u in 0.0f64..1.0, w in 0.0f64..1.0) {
        let m = &builtins()[which];
        let r = m.rho_min() + 1.0 + u * (100.0 - m.rho_min() - 1.0);
        let x = r + (1e3 - r) * w.max(1e-9);
        let rep = check_lemma3(m, r, x).unwrap();
        prop_assert!(rep.pass, "r = {}, x = {}: {:?}", r, x, rep);
    }
}
