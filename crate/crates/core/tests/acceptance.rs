//! Acceptance suite: one line per criterion, non-zero exit when any fails.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_lab::comparison::{
    envelope_from_model, solve_comparison_ode, solve_comparison_ode_with, DeltaProfile, OdeOptions,
};
use spectral_lab::geometry::{make_soliton, Manifold, SolitonStructure, WarpedModel};
use spectral_lab::oracle::{
    assemble_radial_operator, assemble_weighted, estimate_essential_spectrum, max_gap, smallest_eigenvalues,
    BoundaryCondition, TridiagonalOperator,
};
use spectral_lab::smoothing::{distance_envelope, mollify_distance, MollifierKernel, SmoothOptions};
use spectral_lab::volume::{
    check_lemma3, check_soliton_volume_identities, check_subexp_growth, GrowthVerdict,
};
use spectral_lab::weyl::{
    build_weyl_noncompact, certify_spectrum_point, eval_defect_with, select_annulus_infinite, sweep_spectrum,
    Certification, CertifyOptions, WeylContext, WeylParamsNonCompact,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    num / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

const FLAT_LAMBDAS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];

fn flat_context() -> Result<WeylContext, String> {
    ok(WeylContext::new(Manifold::Warped(ok(WarpedModel::euclidean(3, 4000.0))?)))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let ctx = flat_context()?;
    let opts = CertifyOptions { rel_tol: 1e-6, ..CertifyOptions::default() };
    let certs = sweep_spectrum(&ctx, &FLAT_LAMBDAS, 0.05, 10.0, 1, &opts);
    let elapsed = start.elapsed().as_secs_f64();
    for c in &certs {
        ensure(c.certified, || format!("λ = {} not certified: {:?}", c.lambda, c.failure))?;
    }
    ensure(elapsed < 10.0, || format!("runtime {elapsed:.2} s ≥ 10 s"))?;

    let (Manifold::Warped(model), Some(smoothed)) = (ctx.manifold(), ctx.smoothed()) else {
        return Err("flat context lacks smoothing".into());
    };
    let pts = [13.0, 26.0, 52.0, 104.0]
        .iter()
        .map(|&r| {
            let params = WeylParamsNonCompact { scale_r: r, x: 2.0 * r + 1.0, y: 5.0 * r, mu: 10.0, lambda: 1.0, p: 1 };
            let phi = ok(build_weyl_noncompact(model, smoothed, &params))?;
            Ok((r, ok(eval_defect_with(&phi, 1, 1e-6))?.quotient))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let slope = loglog_slope(&pts);
    ensure(slope <= -0.8, || format!("log-log slope {slope:.3} > -0.8"))?;
    let worst = certs.iter().map(|c| c.best_quotient).fold(0.0, f64::max);
    Ok(format!("5/5 certified, worst quotient {worst:.4}, {elapsed:.2} s, scaling slope {slope:.3}"))
}

fn no_violations(c: &Certification) -> Result<(), String> {
    ensure(c.certified, || format!("λ = {} (p = {}) not certified: {:?}", c.lambda, c.p, c.failure))?;
    let bad = c.attempts.iter().filter(|a| !a.bound.dominated).count();
    ensure(bad == 0 && c.dominance_violations == 0, || format!("λ = {}: {bad} dominance violations", c.lambda))
}

fn criterion_2() -> Outcome {
    let gaussian = ok(WeylContext::new(Manifold::Soliton(ok(make_soliton(SolitonStructure::Gaussian, 3, 0))?)))?;
    let opts = CertifyOptions::default();
    let certs = sweep_spectrum(&gaussian, &[0.0, 1.0, 2.0], 0.05, 10.0, 1, &opts);
    for c in &certs {
        no_violations(c)?;
    }
    let cylinder = ok(WeylContext::new(Manifold::Soliton(ok(make_soliton(SolitonStructure::Cylinder, 4, 2))?)))?;
    let c = ok(certify_spectrum_point(&cylinder, 1.0, 0.1, 10.0, 2, &opts))?;
    no_violations(&c)?;
    let attempts: usize = certs.iter().map(|c| c.attempts.len()).sum::<usize>() + c.attempts.len();
    Ok(format!(
        "gaussian quotients {:?}, cylinder quotient {:.4}, {attempts} test functions, 0 dominance violations",
        certs.iter().map(|c| (c.best_quotient * 1e4).round() / 1e4).collect::<Vec<_>>(),
        c.best_quotient
    ))
}

fn criterion_3() -> Outcome {
    let solitons = [
        ok(make_soliton(SolitonStructure::Gaussian, 3, 0))?,
        ok(make_soliton(SolitonStructure::Cylinder, 4, 2))?,
    ];
    let (mut norm, mut grad, mut ident) = (0.0f64, 0.0f64, 0.0f64);
    for m in &solitons {
        for i in 0..=600 {
            let s = 1e-3 * 10f64.powf(i as f64 / 100.0);
            norm = norm.max(m.normalization_residual(s).abs());
            grad = grad.max((m.grad_rho_sq(s) - m.grad_rho_sq_identity(s)).abs());
        }
        let lo = m.rho_min() + 0.1;
        let grid: Vec<f64> = (0..=400).map(|i| lo * (1e3 / lo).powf(i as f64 / 400.0)).collect();
        ident = ident.max(check_soliton_volume_identities(m, &grid).max_relative_residual);
    }
    ensure(norm < 1e-12, || format!("normalization residual {norm:e}"))?;
    ensure(grad < 1e-12, || format!("gradient identity residual {grad:e}"))?;
    ensure(ident <= 1e-10, || format!("volume identity residual {ident:e}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    for i in 0..100 {
        let m = &solitons[i % 2];
        let r = rng.gen_range(m.rho_min() + 1.0..100.0);
        let x = rng.gen_range(r..1e3);
        if !ok(check_lemma3(m, r, x))?.pass {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} sublevel-volume bound violations"))?;
    Ok(format!("residuals {norm:.1e} / {grad:.1e} / {ident:.1e}; 100 randomized pairs, 0 violations"))
}

fn criterion_4() -> Outcome {
    let hyp = ok(WarpedModel::hyperbolic(3, 120.0))?;
    let ctx = ok(WeylContext::new(Manifold::Warped(hyp.clone())))?;
    let c = ok(certify_spectrum_point(&ctx, 0.5, 0.05, 10.0, 2, &CertifyOptions::default()))?;
    ensure(!c.certified, || "hyperbolic λ = 0.5 certified".into())?;
    ensure(c.best_quotient >= 0.1, || format!("best quotient {} < 0.1", c.best_quotient))?;
    let op = ok(assemble_radial_operator(&hyp, 100.0, 4000, BoundaryCondition::Dirichlet))?;
    let bottom = op.eigenvalue(0, 1e-10).ok_or("no eigenvalue")?;
    ensure((bottom - 1.0).abs() <= 0.05, || format!("hyperbolic bottom {bottom}"))?;

    let cusp = ok(WarpedModel::cusp(120.0))?;
    let radii: Vec<f64> = (0..30).map(|i| 1.0 + 2.5 * i as f64).collect();
    let growth = ok(check_subexp_growth(&cusp, 0.1, &[1.0, 10.0, 20.0, 40.0], &radii))?;
    ensure(growth.verdict == GrowthVerdict::Violated, || format!("cusp growth verdict {:?}", growth.verdict))?;
    let cusp_ctx = ok(WeylContext::new(Manifold::Warped(cusp)))?;
    let cc = ok(certify_spectrum_point(&cusp_ctx, 0.5, 0.1, 0.0, 2, &CertifyOptions::default()))?;
    ensure(!cc.attempts.is_empty() && !cc.selection_found, || "cusp finite-volume selection found an annulus".into())?;
    Ok(format!(
        "hyperbolic best quotient {:.3}, oracle bottom {bottom:.4}; cusp growth violated, annulus not found ({} attempts)",
        c.best_quotient,
        cc.attempts.len()
    ))
}

fn dense_count(op: &TridiagonalOperator, x: f64) -> usize {
    let n = op.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = op.diag[i];
        if i + 1 < n {
            a[(i, i + 1)] = op.off[i];
            a[(i + 1, i)] = op.off[i];
        }
    }
    a.symmetric_eigen().eigenvalues.iter().filter(|&&l| l < x).count()
}

fn criterion_5() -> Outcome {
    let op = ok(assemble_weighted(|_| 1.0, 0.0, 1.0, 1000, BoundaryCondition::Dirichlet, false))?;
    let ev = smallest_eigenvalues(&op, 2);
    let pi2 = std::f64::consts::PI.powi(2);
    let (e1, e2) = ((ev[0] / pi2 - 1.0).abs(), (ev[1] / (4.0 * pi2) - 1.0).abs());
    ensure(e1 < 1e-3 && e2 < 1e-3, || format!("relative errors {e1:e}, {e2:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..50 {
        let d: Vec<f64> = (0..50).map(|_| rng.gen_range(-5.0..10.0)).collect();
        let e: Vec<f64> = (0..49).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let op = ok(TridiagonalOperator::from_entries(d, e))?;
        for x in [0.0, 5.0] {
            let (ours, dense) = (op.count_below(x), dense_count(&op, x));
            ensure(ours == dense, || format!("trial {trial}: count below {x} is {ours}, dense {dense}"))?;
        }
    }

    let mut orders = vec![];
    for m in [ok(WarpedModel::euclidean(3, 100.0))?, ok(WarpedModel::hyperbolic(3, 40.0))?] {
        let ev: Vec<f64> = [400usize, 800, 1600]
            .iter()
            .map(|&n| {
                let op = ok(assemble_radial_operator(&m, 20.0, n, BoundaryCondition::Dirichlet))?;
                op.eigenvalue(1, 1e-13).ok_or_else(|| "missing eigenvalue".to_string())
            })
            .collect::<Result<_, _>>()?;
        orders.push(((ev[0] - ev[1]) / (ev[1] - ev[2])).abs().log2());
    }
    ensure(orders.iter().all(|&o| o >= 1.8), || format!("orders {orders:?}"))?;
    Ok(format!("π² rel. errors {e1:.1e}, {e2:.1e}; 50 inertia checks agree; orders {:.2}, {:.2}", orders[0], orders[1]))
}

fn criterion_6() -> Outcome {
    let m = ok(WarpedModel::euclidean(3, 4000.0))?;
    let rep = ok(estimate_essential_spectrum(&m, 4.0, &[50.0, 100.0, 200.0], 4000))?;
    ensure(rep.fills, || format!("gap ratios {:?}", rep.gap_ratios))?;
    let ctx = flat_context()?;
    let certs = sweep_spectrum(&ctx, &FLAT_LAMBDAS, 0.05, 10.0, 2, &CertifyOptions::default());
    let last = rep
        .rows
        .iter()
        .find(|r| r.l == 200.0 && r.bc == BoundaryCondition::Dirichlet)
        .ok_or("missing L = 200 row")?;
    let gap = max_gap(&last.eigenvalues, 4.0);
    let mut certified = 0;
    for c in certs.iter().filter(|c| c.certified) {
        certified += 1;
        let dist = last.eigenvalues.iter().map(|e| (e - c.lambda).abs()).fold(f64::INFINITY, f64::min);
        ensure(dist <= gap, || format!("λ = {} is {dist} from the oracle spectrum (gap {gap})", c.lambda))?;
    }
    ensure(certified > 0, || "no λ certified at p = 2".into())?;
    Ok(format!("gap ratios {:.3?}; {certified}/5 p=2 certifications within max-gap {gap:.4}", rep.gap_ratios))
}

fn criterion_7() -> Outcome {
    let sol = ok(solve_comparison_ode(&DeltaProfile::constant(1.0), 10.0))?;
    let coth = (0..=900)
        .map(|i| {
            let r = 1.0 + i as f64 * 0.01;
            (sol.u(r) - 1.0 / r.tanh()).abs()
        })
        .fold(0.0, f64::max);
    ensure(coth <= 1e-8, || format!("coth error {coth:e}"))?;
    let delta = DeltaProfile::inverse_power(1.0, 1.0, 2.0);
    let a = ok(solve_comparison_ode(&delta, 1e3))?;
    let b = ok(solve_comparison_ode_with(
        &delta,
        1e3,
        &OdeOptions { rel_tol: 1e-13, abs_tol: 1e-15, max_log_step: 0.02, ..OdeOptions::default() },
    ))?;
    let u_end = a.u(1e3);
    let agree = (0..=100)
        .map(|i| {
            let r = 10f64.powf(-2.0 + 5.0 * i as f64 / 100.0);
            (a.u(r) - b.u(r)).abs() / b.u(r).max(1.0)
        })
        .fold(0.0, f64::max);
    ensure(u_end <= 0.01, || format!("u(1000) = {u_end}"))?;
    ensure(agree <= 1e-9, || format!("two-resolution disagreement {agree:e}"))?;
    let flag = |m: WarpedModel| envelope_from_model(&m, 1e-3).map(|e| e.asymptotically_nonnegative);
    let flags = (
        ok(flag(ok(WarpedModel::euclidean(3, 200.0))?))?,
        ok(flag(ok(WarpedModel::hyperbolic(3, 60.0))?))?,
        ok(flag(ok(WarpedModel::cusp(60.0))?))?,
    );
    ensure(flags == (true, false, false), || format!("flags {flags:?}"))?;
    Ok(format!("coth error {coth:.1e}; u(1000) = {u_end:.5}, resolutions agree to {agree:.1e}; flags ok"))
}

fn criterion_8() -> Outcome {
    let models = [
        ok(WarpedModel::euclidean(3, 1000.0))?,
        ok(WarpedModel::cusp(120.0))?,
        ok(WarpedModel::glued_cone(3, 10.0, 0.5, 200.0, 0.25))?,
    ];
    let mut cells = 0;
    let mut repro = 0.0f64;
    for m in &models {
        let (delta, _) = ok(distance_envelope(m))?;
        let s = ok(mollify_distance(m, &delta, &MollifierKernel::default(), &SmoothOptions::default()))?;
        for p in s.samples() {
            ensure(p.r > 2.0 && p.bound_a_margin >= 0.0 && p.bound_b_margin >= 0.0, || {
                format!("{:?}: bound fails at r = {}", m.kind(), p.r)
            })?;
            if m.kind() != spectral_lab::geometry::ModelKind::Custom {
                repro = repro.max((p.rho_tilde - p.r).abs() / p.r.max(1.0));
            }
        }
        cells += s.samples().len();
    }
    ensure(repro <= 1e-12, || format!("ρ̃ differs from ρ by {repro:e}"))?;
    Ok(format!("bounds (a), (b) hold at {cells} grid points; smooth-model reproduction {repro:.1e}"))
}

fn criterion_9() -> Outcome {
    let grid: Vec<f64> = (1..=1000).map(f64::from).collect();
    let selected = ok(select_annulus_infinite(|r| r.powi(3), 10.0, &grid))?;
    let mut brute = None;
    for &y in &grid {
        if (y + 10.0f64).powi(3) <= 2.0 * y.powi(3) {
            brute = Some(y);
            break;
        }
    }
    ensure(selected == brute && brute.is_some(), || format!("selected {selected:?}, brute force {brute:?}"))?;
    let exp = ok(select_annulus_infinite(f64::exp, 10.0, &grid))?;
    ensure(exp.is_none(), || format!("e^r selected {exp:?}"))?;
    Ok(format!("r³: y = {} (brute force agrees); e^r: not found", selected.unwrap()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("flat Weyl certification", criterion_1),
        ("soliton certification", criterion_2),
        ("soliton identities", criterion_3),
        ("negative controls", criterion_4),
        ("oracle correctness", criterion_5),
        ("fill-in cross-check", criterion_6),
        ("comparison ODE", criterion_7),
        ("mollification", criterion_8),
        ("annulus selection", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} PASS [{name}] ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL [{name}] ({secs:.2} s): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
