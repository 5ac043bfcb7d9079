use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_lab::geometry::WarpedModel;
use spectral_lab::oracle::{
    assemble_radial_operator, assemble_weighted, eig_tridiagonal, estimate_essential_spectrum, smallest_eigenvalues,
    BoundaryCondition, TridiagonalOperator,
};

fn dense_eigenvalues(op: &TridiagonalOperator) -> Vec<f64> {
    let n = op.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = op.diag[i];
        if i + 1 < n {
            a[(i, i + 1)] = op.off[i];
            a[(i + 1, i)] = op.off[i];
        }
    }
    let mut ev: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn unit_interval_matches_closed_form_and_dense_solve() {
    let op = assemble_weighted(|_| 1.0, 0.0, 1.0, 1000, BoundaryCondition::Dirichlet, false).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    let ev = smallest_eigenvalues(&op, 2);
    assert!((ev[0] - pi2).abs() < 1e-3 * pi2);
    assert!((ev[1] - 4.0 * pi2).abs() < 1e-3 * 4.0 * pi2);

    let small = assemble_weighted(|_| 1.0, 0.0, 1.0, 51, BoundaryCondition::Dirichlet, false).unwrap();
    let dense = dense_eigenvalues(&small);
    let ours = eig_tridiagonal(&small, f64::NEG_INFINITY, f64::INFINITY).eigenvalues;
    assert_eq!(ours.len(), dense.len());
    for (a, b) in ours.iter().zip(&dense) {
        assert!((a - b).abs() < 1e-8 * b.abs().max(1.0));
    }
}

#[test]
fn inertia_counts_match_dense_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let d: Vec<f64> = (0..50).map(|_| rng.gen_range(-5.0..10.0)).collect();
        let e: Vec<f64> = (0..49).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let op = TridiagonalOperator::from_entries(d, e).unwrap();
        let dense = dense_eigenvalues(&op);
        for x in [-2.0, 0.0, 1.5, 5.0, 8.0] {
            let expected = dense.iter().filter(|&&l| l < x).count();
            assert_eq!(op.count_below(x), expected, "x = {x}");
        }
    }
}

fn observed_order(m: &WarpedModel, l: f64, k: usize) -> f64 {
    let ev: Vec<f64> = [400usize, 800, 1600]
        .iter()
        .map(|&n| assemble_radial_operator(m, l, n, BoundaryCondition::Dirichlet).unwrap().eigenvalue(k, 1e-13).unwrap())
        .collect();
    ((ev[0] - ev[1]) / (ev[1] - ev[2])).abs().log2()
}

#[test]
fn second_order_grid_convergence() {
    let e = WarpedModel::euclidean(3, 100.0).unwrap();
    let h = WarpedModel::hyperbolic(3, 40.0).unwrap();
    for k in [0, 3] {
        assert!(observed_order(&e, 20.0, k) >= 1.8);
        assert!(observed_order(&h, 20.0, k) >= 1.8);
    }
}

#[test]
fn fill_in_and_spectral_bottoms() {
    let e = WarpedModel::euclidean(3, 300.0).unwrap();
    let rep = estimate_essential_spectrum(&e, 4.0, &[50.0, 100.0, 200.0], 4000).unwrap();
    assert!(rep.fills && rep.bracketing_holds, "{:?}", rep.gap_ratios);

    let h = WarpedModel::hyperbolic(3, 120.0).unwrap();
    let bottom = assemble_radial_operator(&h, 100.0, 4000, BoundaryCondition::Dirichlet).unwrap().eigenvalue(0, 1e-10).unwrap();
    assert!((bottom - 1.0).abs() < 0.05);

    let c = WarpedModel::cusp(200.0).unwrap();
    let bottom = assemble_radial_operator(&c, 100.0, 4000, BoundaryCondition::Dirichlet).unwrap().eigenvalue(0, 1e-10).unwrap();
    assert!((bottom - 1.0 / 16.0).abs() < 0.1 / 16.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dirichlet_neumann_bracketing(which in 0usize..3, l in 10.0f64..60.0, n in 32usize..400, lo in 0.0f64..3.0, width in 0.01f64..3.0) {
        let m = match which {
            0 => WarpedModel::euclidean(3, 100.0).unwrap(),
            1 => WarpedModel::hyperbolic(3, 100.0).unwrap(),
            _ => WarpedModel::cusp(100.0).unwrap(),
        };
        let d = assemble_radial_operator(&m, l, n, BoundaryCondition::Dirichlet).unwrap();
        let nm = assemble_radial_operator(&m, l, n, BoundaryCondition::Neumann).unwrap();
        let count = |op: &TridiagonalOperator| op.count_below(lo + width) - op.count_below(lo);
        prop_assert!(count(&d) <= count(&nm) + d.removed_rows());
        // Cumulative counts interlace as well.
        prop_assert!(d.count_below(lo) <= nm.count_below(lo));
        let spec = eig_tridiagonal(&d, lo, lo + width);
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(spec.eigenvalues.len(), count(&d));
    }
}
