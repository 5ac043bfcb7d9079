//! Approximate eigenfunctions `φ = ψ(σ) e^{i√λ ρ̃}` and their defect quotients
//! `‖Δφ + λφ‖_p / ‖φ‖_p`.
//!
//! With `κ = √λ`, `S` the cutoff scale and `σ = (ρ̃ - c)/S`,
//!
//! ```text
//! (Δφ + λφ) e^{-iκρ̃} = A + iB,
//! A = ψ''/S² |∇ρ̃|² + (ψ'/S) Δρ̃ + λψ (1 - |∇ρ̃|²),
//! B = κ (2ψ'/S |∇ρ̃|² + ψ Δρ̃),
//! ```
//!
//! so the modulus never needs the oscillating phase.

mod annulus;
mod certify;
mod cutoff;

pub use annulus::{select_annulus_finite, select_annulus_infinite};
pub use certify::{
    certify_spectrum_point, sweep_spectrum, Attempt, Certification, CertifyOptions, Selection, WeylContext,
};
pub use cutoff::{build_cutoff, CutoffProfile};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{soliton_delta_rho, SolitonModel, WarpedModel};
use crate::profile::RadialProfile;
use crate::quadrature::{integrate_partition, QuadOptions};
use crate::smoothing::SmoothedDistance;
use crate::volume::{soliton_area, soliton_chi, soliton_volume, warped_volume};

/// Relative quadrature tolerance for defect norms.
pub const DEFECT_TOLERANCE: f64 = 1e-6;

fn check_p(p: u32) -> Result<()> {
    if p == 1 || p == 2 {
        Ok(())
    } else {
        Err(invalid(format!("p must be 1 or 2, got {p}")))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("λ must be finite and nonnegative, got {lambda}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeylParamsNonCompact {
    pub scale_r: f64,
    pub x: f64,
    pub y: f64,
    pub mu: f64,
    pub lambda: f64,
    pub p: u32,
}

impl WeylParamsNonCompact {
    /// `y > x + 2R`, `x > 2R > 2μ + 4`, `λ ≥ 0`, `p ∈ {1, 2}`.
    pub fn validate(&self) -> Result<()> {
        let Self { scale_r: r, x, y, mu, lambda, p } = *self;
        if !(y > x + 2.0 * r && x > 2.0 * r && 2.0 * r > 2.0 * mu + 4.0) {
            return Err(invalid(format!("need y > x + 2R and x > 2R > 2μ + 4 (R = {r}, x = {x}, y = {y}, μ = {mu})")));
        }
        check_lambda(lambda)?;
        check_p(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolitonWeylParams {
    pub a: f64,
    pub b: f64,
    pub l: f64,
    pub mu: f64,
    pub lambda: f64,
    pub p: u32,
}

impl SolitonWeylParams {
    /// `a ≥ 2`, `b ≥ 2 + μ`, `l ≥ 2`, `λ ≥ 0`, `p ∈ {1, 2}`.
    pub fn validate(&self) -> Result<()> {
        let Self { a, b, l, mu, lambda, p } = *self;
        if !(a >= 2.0 && b >= 2.0 + mu && l >= 2.0) {
            return Err(invalid(format!("need a ≥ 2, b ≥ 2 + μ, l ≥ 2 (a = {a}, b = {b}, l = {l}, μ = {mu})")));
        }
        check_lambda(lambda)?;
        check_p(p)
    }
}

/// Parameters of an evaluated test function in a model-independent shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ParamRecord {
    NonCompact { scale_r: f64, x: f64, y: f64 },
    Soliton { l: f64, b: f64, a: f64 },
}

impl ParamRecord {
    /// `(R or l, x or b, y or a)`, the CSV column triple.
    pub fn columns(&self) -> (f64, f64, f64) {
        match *self {
            Self::NonCompact { scale_r, x, y } => (scale_r, x, y),
            Self::Soliton { l, b, a } => (l, b, a),
        }
    }
}

#[derive(Clone, Debug)]
enum Frame {
    Warped { model: WarpedModel, smoothed: SmoothedDistance },
    Soliton { model: SolitonModel, laplacian: RadialProfile },
}

/// Local geometry along the radial variable `t` (`r` or `ρ`).
#[derive(Clone, Copy, Debug)]
struct Local {
    rho: f64,
    grad_sq: f64,
    laplacian: f64,
    weight: f64,
}

#[derive(Clone, Debug)]
pub struct WeylTestFunction {
    frame: Frame,
    cutoff: CutoffProfile,
    scale: f64,
    shift: f64,
    lambda: f64,
    /// Integration window in the radial variable.
    window: (f64, f64),
    /// Support of `ψ` in terms of `ρ̃`.
    support: (f64, f64),
    breaks: Vec<f64>,
    params: ParamRecord,
}

/// `φ = ψ(ρ̃/R) e^{i√λ ρ̃}` on a warped model.
pub fn build_weyl_noncompact(
    model: &WarpedModel,
    smoothed: &SmoothedDistance,
    params: &WeylParamsNonCompact,
) -> Result<WeylTestFunction> {
    params.validate()?;
    let r = params.scale_r;
    let cutoff = build_cutoff(params.x / r, params.y / r)?;
    let (lo, hi) = (params.x - r, params.y + r);
    // ρ̃ differs from r by at most δ ≤ 1 there, so a unit margin covers supp φ.
    let window = ((lo - 1.0).max(model.r_lo()), hi + 1.0);
    let (span_lo, span_hi) = smoothed.span();
    if window.1 > model.r_max() || window.1 > span_hi || window.0 < span_lo {
        return Err(Error::Domain(format!(
            "support [{lo}, {hi}] leaves the smoothed range [{span_lo}, {span_hi}] (r_max = {})",
            model.r_max()
        )));
    }
    let breaks = vec![window.0, lo, params.x, params.y, hi, window.1];
    Ok(WeylTestFunction {
        frame: Frame::Warped { model: model.clone(), smoothed: smoothed.clone() },
        cutoff,
        scale: r,
        shift: 0.0,
        lambda: params.lambda,
        window,
        support: (lo, hi),
        breaks,
        params: ParamRecord::NonCompact { scale_r: r, x: params.x, y: params.y },
    })
}

/// Largest `ρ` a soliton test function may reach.
pub const SOLITON_RANGE: f64 = 1_048_576.0;

/// `φ = ψ((ρ - b)/l) e^{i√λ ρ}` with plateau `[1, a+1]`, integrated in `ρ`
/// against the co-area weight `V'(ρ)`.
pub fn build_weyl_soliton(model: &SolitonModel, params: &SolitonWeylParams) -> Result<WeylTestFunction> {
    params.validate()?;
    let SolitonWeylParams { a, b, l, .. } = *params;
    let hi = b + (a + 2.0) * l;
    if hi > SOLITON_RANGE {
        return Err(Error::Domain(format!("support end {hi} exceeds the tabulated range {SOLITON_RANGE}")));
    }
    if b < model.rho_min() {
        return Err(Error::Domain(format!("b = {b} below ρ_min = {}", model.rho_min())));
    }
    let cutoff = build_cutoff(1.0, a + 1.0)?;
    Ok(WeylTestFunction {
        frame: Frame::Soliton { model: model.clone(), laplacian: soliton_delta_rho(model) },
        cutoff,
        scale: l,
        shift: b,
        lambda: params.lambda,
        window: (b, hi),
        support: (b, hi),
        breaks: vec![b, b + l, b + (a + 1.0) * l, hi],
        params: ParamRecord::Soliton { l, b, a },
    })
}

impl WeylTestFunction {
    fn local(&self, t: f64) -> Local {
        match &self.frame {
            Frame::Warped { model, smoothed } => {
                let (j, laplacian) = smoothed.geometry_at(t);
                Local { rho: j.value, grad_sq: j.d1 * j.d1, laplacian, weight: model.weight(t) }
            }
            Frame::Soliton { model, laplacian } => Local {
                rho: t,
                grad_sq: model.grad_rho_sq_at(t),
                laplacian: laplacian.value(t),
                weight: soliton_area(model, t),
            },
        }
    }

    /// `(ψ, A + iB)` at the radial variable `t`; see the module docs.
    fn envelope(&self, l: &Local) -> (f64, Complex64) {
        let s = self.scale;
        let psi = self.cutoff.jet((l.rho - self.shift) / s);
        if psi.value == 0.0 && psi.d1 == 0.0 && psi.d2 == 0.0 {
            return (0.0, Complex64::new(0.0, 0.0));
        }
        let kappa = self.lambda.sqrt();
        let a = psi.d2 / (s * s) * l.grad_sq + psi.d1 / s * l.laplacian + self.lambda * psi.value * (1.0 - l.grad_sq);
        let b = kappa * (2.0 * psi.d1 / s * l.grad_sq + psi.value * l.laplacian);
        (psi.value, Complex64::new(a, b))
    }

    /// `φ` at the radial variable `t`.
    pub fn phi(&self, t: f64) -> Complex64 {
        let l = self.local(t);
        let (psi, _) = self.envelope(&l);
        psi * Complex64::cis(self.lambda.sqrt() * l.rho)
    }

    /// `Δφ + λφ` at the radial variable `t`.
    pub fn defect(&self, t: f64) -> Complex64 {
        let l = self.local(t);
        let (_, ab) = self.envelope(&l);
        ab * Complex64::cis(self.lambda.sqrt() * l.rho)
    }

    pub fn params(&self) -> ParamRecord {
        self.params
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn cutoff(&self) -> &CutoffProfile {
        &self.cutoff
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectReport {
    pub lambda: f64,
    pub p: u32,
    /// `‖Δφ + λφ‖_p`
    pub defect_norm: f64,
    /// `‖φ‖_p`
    pub phi_norm: f64,
    pub quotient: f64,
    pub params: ParamRecord,
    /// Support of `ψ` in the distance variable.
    pub support: (f64, f64),
    /// A-posteriori relative error of the quotient.
    pub quad_error: f64,
}

pub fn eval_defect(phi: &WeylTestFunction, p: u32) -> Result<DefectReport> {
    eval_defect_with(phi, p, DEFECT_TOLERANCE)
}

pub fn eval_defect_with(phi: &WeylTestFunction, p: u32, rel_tol: f64) -> Result<DefectReport> {
    check_p(p)?;
    let opts = QuadOptions { rel_tol: rel_tol * 0.1, abs_tol: 0.0, max_intervals: 20_000 };
    let pw = |v: f64| if p == 1 { v } else { v * v };
    let defect = integrate_partition(
        |t| {
            let l = phi.local(t);
            pw(phi.envelope(&l).1.norm()) * l.weight
        },
        &phi.breaks,
        &opts,
    )?;
    let mass = integrate_partition(
        |t| {
            let l = phi.local(t);
            pw(phi.envelope(&l).0) * l.weight
        },
        &phi.breaks,
        &opts,
    )?;
    if !(mass.value > 0.0) {
        return Err(Error::Degenerate("test function has zero norm".into()));
    }
    let quad_error = defect.rel_error() + mass.rel_error();
    if quad_error > rel_tol {
        return Err(Error::Convergence(format!("defect quadrature error {quad_error:.2e} above {rel_tol:.1e}")));
    }
    let root = |v: f64| if p == 1 { v } else { v.sqrt() };
    let (defect_norm, phi_norm) = (root(defect.value), root(mass.value));
    Ok(DefectReport {
        lambda: phi.lambda,
        p,
        defect_norm,
        phi_norm,
        quotient: defect_norm / phi_norm,
        params: phi.params,
        support: phi.support,
        quad_error,
    })
}

/// A fully instantiated right-hand side compared against a measured norm
/// (`‖·‖₁` for `p = 1`, `‖·‖₂²` for `p = 2`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub terms: Vec<(String, f64)>,
    pub dominated: bool,
}

impl BoundCheck {
    fn new(lhs: f64, constant: f64, terms: Vec<(String, f64)>) -> Self {
        let rhs = terms.iter().map(|t| t.1).sum();
        Self { lhs, rhs, constant, terms, dominated: lhs <= rhs }
    }

    /// Largest term of the right-hand side.
    pub fn binding_term(&self) -> &str {
        self.terms
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map_or("", |t| t.0.as_str())
    }
}

/// The λ-dependent constant for warped models: with `δ* = δ` at the inner end
/// of the window, `|∇ρ̃| ≤ 1 + δ*` and
/// `|Δφ + λφ| ≤ C/R + C|Δρ̃| + Cδ(ρ)` for
/// `C = max(max(1, 2κ)(1+δ*)² B, κ + B, λ(2 + δ*))`.
pub fn noncompact_constant(lambda: f64, budget: f64, delta_star: f64) -> f64 {
    let kappa = lambda.sqrt();
    (1f64.max(2.0 * kappa) * (1.0 + delta_star).powi(2) * budget)
        .max(kappa + budget)
        .max(lambda * (2.0 + delta_star))
}

/// The L¹ constant for solitons, where `|∇ρ| ≤ 1`:
/// `|Δφ + λφ| ≤ C/l + C|Δρ| + λR/f` with `C = max(max(1, 2κ) B, κ + B)`.
pub fn soliton_constant(lambda: f64, budget: f64) -> f64 {
    let kappa = lambda.sqrt();
    (1f64.max(2.0 * kappa) * budget).max(kappa + budget)
}

/// The measured defect against the volume-form bound for warped models:
/// `(C/R + Cδ*)(V(hi) - V(lo)) + C ∫|Δρ̃|` for `p = 1`, and
/// `3C² [(1/R² + δ*²)(V(hi) - V(lo)) + ∫|Δρ̃|²]` for `p = 2`.
pub fn noncompact_bound(phi: &WeylTestFunction, report: &DefectReport) -> Result<BoundCheck> {
    let Frame::Warped { model, smoothed } = &phi.frame else {
        return Err(Error::NotApplicable("noncompact bound needs a warped test function".into()));
    };
    let (lo, hi) = phi.window;
    let delta_star = smoothed.delta().value(lo);
    let c = noncompact_constant(phi.lambda, phi.cutoff.budget, delta_star);
    let shell = warped_volume(model, hi) - warped_volume(model, lo);
    let opts = QuadOptions::relative(1e-8);
    let r = phi.scale;
    let check = if report.p == 1 {
        let lap = integrate_partition(|t| smoothed.geometry_at(t).1.abs() * model.weight(t), &phi.breaks, &opts)?.value;
        BoundCheck::new(
            report.defect_norm,
            c,
            vec![
                ("C/R volume".into(), c / r * shell),
                ("C delta volume".into(), c * delta_star * shell),
                ("C |laplacian|".into(), c * lap),
            ],
        )
    } else {
        let lap2 = integrate_partition(|t| smoothed.geometry_at(t).1.powi(2) * model.weight(t), &phi.breaks, &opts)?.value;
        let c2 = 3.0 * c * c;
        BoundCheck::new(
            report.defect_norm.powi(2),
            c2,
            vec![
                ("C/R^2 volume".into(), c2 / (r * r) * shell),
                ("C delta^2 volume".into(), c2 * delta_star * delta_star * shell),
                ("C |laplacian|^2".into(), c2 * lap2),
            ],
        )
    };
    Ok(check)
}

/// The measured defect against the closed-form soliton bounds:
/// `(C/l + 2nC/b)[V(x) - V(b)] + C V'(b) + (4λ/b²) χ(x)` for `p = 1`, and
/// `C₂ (1/l² + n²/b² + 2n R/b²) V(x) + (4C₂/b²) χ(x)` with `C₂ = 3 max(C², λ²)`
/// for `p = 2`, where `x = b + (a+2)l`.
pub fn soliton_bound(phi: &WeylTestFunction, report: &DefectReport) -> Result<BoundCheck> {
    let Frame::Soliton { model, .. } = &phi.frame else {
        return Err(Error::NotApplicable("soliton bound needs a soliton test function".into()));
    };
    let ParamRecord::Soliton { l, b, .. } = phi.params else { unreachable!("soliton frame carries soliton params") };
    let x = phi.window.1;
    let n = model.n() as f64;
    let lambda = phi.lambda;
    let c = soliton_constant(lambda, phi.cutoff.budget);
    let (vx, vb) = (soliton_volume(model, x), soliton_volume(model, b));
    let chi = soliton_chi(model, x);
    let check = if report.p == 1 {
        BoundCheck::new(
            report.defect_norm,
            c,
            vec![
                ("C/l volume".into(), c / l * (vx - vb)),
                ("2nC/b volume".into(), 2.0 * n * c / b * (vx - vb)),
                ("C V'(b)".into(), c * soliton_area(model, b)),
                ("4 lambda chi / b^2".into(), 4.0 * lambda / (b * b) * chi),
            ],
        )
    } else {
        let c2 = 3.0 * (c * c).max(lambda * lambda);
        let max_curv = model.scalar_curvature() / (b * b);
        BoundCheck::new(
            report.defect_norm.powi(2),
            c2,
            vec![
                ("C/l^2 volume".into(), c2 / (l * l) * vx),
                ("C n^2/b^2 volume".into(), c2 * n * n / (b * b) * vx),
                ("2nC max R/rho^2 volume".into(), c2 * 2.0 * n * max_curv * vx),
                ("4C chi / b^2".into(), 4.0 * c2 / (b * b) * chi),
            ],
        )
    };
    Ok(check)
}

/// Whichever bound matches the test function's model.
pub fn instantiated_bound(phi: &WeylTestFunction, report: &DefectReport) -> Result<BoundCheck> {
    match phi.frame {
        Frame::Warped { .. } => noncompact_bound(phi, report),
        Frame::Soliton { .. } => soliton_bound(phi, report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_soliton, SolitonStructure};
    use crate::smoothing::{distance_envelope, mollify_distance, MollifierKernel, SmoothOptions};

    fn euclid(r_max: f64) -> (WarpedModel, SmoothedDistance) {
        let m = WarpedModel::euclidean(3, r_max).unwrap();
        let (delta, _) = distance_envelope(&m).unwrap();
        let s = mollify_distance(&m, &delta, &MollifierKernel::default(), &SmoothOptions::default()).unwrap();
        (m, s)
    }

    #[test]
    fn params_validation() {
        let ok = WeylParamsNonCompact { scale_r: 10.0, x: 21.0, y: 50.0, mu: 5.0, lambda: 1.0, p: 1 };
        assert!(ok.validate().is_ok());
        assert!(WeylParamsNonCompact { y: 40.0, ..ok }.validate().is_err());
        assert!(WeylParamsNonCompact { mu: 8.0, ..ok }.validate().is_err());
        assert!(WeylParamsNonCompact { p: 3, ..ok }.validate().is_err());
        let s = SolitonWeylParams { a: 2.0, b: 2.0, l: 2.0, mu: 0.0, lambda: 0.0, p: 2 };
        assert!(s.validate().is_ok());
        assert!(SolitonWeylParams { b: 2.5, mu: 1.0, ..s }.validate().is_err());
    }

    #[test]
    fn modulus_and_plateau_identity() {
        let (m, s) = euclid(500.0);
        let params = WeylParamsNonCompact { scale_r: 10.0, x: 30.0, y: 100.0, mu: 1.0, lambda: 2.0, p: 1 };
        let phi = build_weyl_noncompact(&m, &s, &params).unwrap();
        for t in [25.0, 28.0, 50.0, 105.0] {
            let psi = phi.cutoff.jet(t / 10.0).value;
            assert!((phi.phi(t).norm() - psi).abs() < 1e-12);
        }
        // Plateau: Δφ + λφ = i√λ (n-1)/r φ.
        let t = 60.0;
        let want = Complex64::i() * 2f64.sqrt() * 2.0 / t * phi.phi(t);
        assert!((phi.defect(t) - want).norm() < 1e-10);
    }

    #[test]
    fn zero_lambda_is_real() {
        let (m, s) = euclid(500.0);
        let params = WeylParamsNonCompact { scale_r: 10.0, x: 30.0, y: 100.0, mu: 1.0, lambda: 0.0, p: 1 };
        let phi = build_weyl_noncompact(&m, &s, &params).unwrap();
        for t in [22.0, 27.0, 105.0] {
            assert_eq!(phi.phi(t).im, 0.0);
            assert_eq!(phi.defect(t).im, 0.0);
        }
    }

    #[test]
    fn support_leaving_range_is_domain_error() {
        let (m, s) = euclid(200.0);
        let params = WeylParamsNonCompact { scale_r: 10.0, x: 30.0, y: 195.0, mu: 1.0, lambda: 0.0, p: 1 };
        assert!(matches!(build_weyl_noncompact(&m, &s, &params), Err(Error::Domain(_))));
    }

    #[test]
    fn flat_quotient_small_and_dominated() {
        let (m, s) = euclid(4000.0);
        let params = WeylParamsNonCompact { scale_r: 100.0, x: 300.0, y: 3000.0, mu: 10.0, lambda: 1.0, p: 1 };
        let phi = build_weyl_noncompact(&m, &s, &params).unwrap();
        let rep = eval_defect(&phi, 1).unwrap();
        assert!(rep.quotient < 0.05, "{}", rep.quotient);
        assert!(rep.quad_error <= DEFECT_TOLERANCE);
        assert!(noncompact_bound(&phi, &rep).unwrap().dominated);
    }

    #[test]
    fn soliton_extra_term() {
        let g = make_soliton(SolitonStructure::Gaussian, 3, 0).unwrap();
        let params = SolitonWeylParams { a: 4.0, b: 100.0, l: 100.0, mu: 0.0, lambda: 1.0, p: 2 };
        let phi = build_weyl_soliton(&g, &params).unwrap();
        // Gaussian: |∇ρ| = 1, so on the plateau only the Δρ terms remain.
        let t = 300.0;
        let want = Complex64::i() * 2.0 / t * phi.phi(t);
        assert!((phi.defect(t) - want).norm() < 1e-14);
        let rep = eval_defect(&phi, 2).unwrap();
        assert!(soliton_bound(&phi, &rep).unwrap().dominated);

        let c = make_soliton(SolitonStructure::Cylinder, 4, 2).unwrap();
        let params = SolitonWeylParams { a: 2.0, b: 10.0, l: 10.0, mu: 0.0, lambda: 1.0, p: 2 };
        let phi = build_weyl_soliton(&c, &params).unwrap();
        let t: f64 = 30.0;
        // Δρ = 1/ρ + 4/ρ³ and 1 - |∇ρ|² = 4/ρ².
        let lap = 1.0 / t + 4.0 / t.powi(3);
        let want = (4.0 / (t * t) + Complex64::i() * lap) * phi.phi(t);
        assert!((phi.defect(t) - want).norm() < 1e-14);
        assert_eq!(phi.phi(10.0).norm(), 0.0);
        assert_eq!(phi.phi(50.0).norm(), 0.0);
    }
}
