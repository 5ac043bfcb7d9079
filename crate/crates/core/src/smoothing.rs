//! Mollified distance `ρ̃ = ξ_ε * ρ` in the radial chart, with a per-cell width
//! schedule chosen so that
//!
//! * (a) `|ρ̃ - ρ| + |ρ̃' - ρ'| ≤ δ(r)`,
//! * (b) `Δρ̃ ≤ 2 δ(r - 1)`
//!
//! hold at every grid radius `r > 2`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::comparison::{envelope_from_model, normalize_envelope, solve_comparison_ode, ComparisonSolution, DeltaProfile};
use crate::error::{invalid, Error, Result};
use crate::geometry::WarpedModel;
use crate::profile::{ClosedForm, Jet, RadialProfile};
use crate::quadrature::GaussLegendre;

/// The polynomial bump `ξ(t) = (315/256)(1 - t²)⁴` on `[-1, 1]`, integrated by a
/// composite Gauss–Legendre rule.
#[derive(Clone, Debug)]
pub struct MollifierKernel {
    rule: GaussLegendre,
    panels: usize,
}

const KERNEL_NORM: f64 = 315.0 / 256.0;

impl Default for MollifierKernel {
    fn default() -> Self {
        Self::new(8, 8)
    }
}

impl MollifierKernel {
    pub fn new(nodes: usize, panels: usize) -> Self {
        Self { rule: GaussLegendre::new(nodes), panels: panels.max(1) }
    }

    pub fn xi(&self, t: f64) -> f64 {
        if t.abs() >= 1.0 {
            return 0.0;
        }
        KERNEL_NORM * (1.0 - t * t).powi(4)
    }

    pub fn dxi(&self, t: f64) -> f64 {
        if t.abs() >= 1.0 {
            return 0.0;
        }
        -8.0 * KERNEL_NORM * t * (1.0 - t * t).powi(3)
    }

    /// `∫_{-1}^{1} f`, split at the interior points of `breaks`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
        let mut pts = vec![-1.0];
        pts.extend(breaks.iter().copied().filter(|t| t.abs() < 1.0));
        pts.push(1.0);
        pts.sort_by(f64::total_cmp);
        pts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let panels = ((self.panels as f64 * (w[1] - w[0]) / 2.0).ceil() as usize).max(1);
                self.rule.integrate_composite(&f, w[0], w[1], panels)
            })
            .sum()
    }

    /// Numerical `∫ ξ`; equals one up to rounding.
    pub fn mass(&self) -> f64 {
        self.integrate(|t| self.xi(t), &[])
    }

    /// Convolve `f` at `r` with width `eps`: returns `(ξ_ε * f)` with its first two derivatives.
    /// `kinks` are radii where `f'` may jump; the integrals are split there.
    pub fn convolve(&self, f: &RadialProfile, kinks: &[f64], r: f64, eps: f64) -> Jet {
        let breaks: Vec<f64> = kinks.iter().map(|k| (r - k) / eps).collect();
        let value = self.integrate(|t| self.xi(t) * f.value(r - eps * t), &breaks);
        let d1 = self.integrate(|t| self.xi(t) * f.d1(r - eps * t), &breaks);
        // ρ̃'' = (1/ε) ∫ ξ'(t) ρ'(r - εt) dt, valid for Lipschitz ρ.
        let d2 = self.integrate(|t| self.dxi(t) * f.d1(r - eps * t), &breaks) / eps;
        Jet::new(value, d1, d2)
    }
}

/// A radial function to be mollified, with the radii where its derivative jumps.
#[derive(Clone, Debug)]
pub struct RadialFunction {
    pub profile: RadialProfile,
    pub kinks: Vec<f64>,
}

impl RadialFunction {
    /// The radial distance `ρ(r) = r` of a model.
    pub fn distance() -> Self {
        Self { profile: RadialProfile::closed(ClosedForm::Polynomial(vec![0.0, 1.0]), 0.0, f64::INFINITY), kinks: vec![] }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SmoothOptions {
    /// Bounds are enforced at grid radii strictly above this.
    pub r_start: f64,
    /// Last grid radius; defaults to `r_max - 1.5`.
    pub r_end: Option<f64>,
    pub points: usize,
    /// Dyadic halvings of a cell's width before giving up.
    pub max_refinements: usize,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        Self { r_start: 2.0, r_end: None, points: 2000, max_refinements: 40 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmoothedSample {
    pub r: f64,
    pub rho_tilde: f64,
    pub d_rho_tilde: f64,
    pub laplacian_rho_tilde: f64,
    pub epsilon: f64,
    /// `δ(r) - (|ρ̃ - ρ| + |ρ̃' - ρ'|)`
    pub bound_a_margin: f64,
    /// `2δ(r - 1) - Δρ̃`
    pub bound_b_margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    /// `sup (|ρ̃ - ρ| + |ρ̃' - ρ'|)` over the grid.
    pub sup_error: f64,
    /// `sup Δρ̃` over the grid.
    pub sup_laplacian: f64,
    pub min_margin_a: f64,
    pub min_margin_b: f64,
    pub worst_radius_a: f64,
    pub worst_radius_b: f64,
    pub refinements: usize,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.min_margin_a >= 0.0 && self.min_margin_b >= 0.0
    }
}

struct Inner {
    model: WarpedModel,
    source: RadialFunction,
    delta: DeltaProfile,
    kernel: MollifierKernel,
    r0: f64,
    h: f64,
    samples: Vec<SmoothedSample>,
    report: BoundReport,
}

/// Mollified distance with its width schedule and the measured bounds.
#[derive(Clone)]
pub struct SmoothedDistance(Arc<Inner>);

impl std::fmt::Debug for SmoothedDistance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothedDistance")
            .field("cells", &self.0.samples.len())
            .field("report", &self.0.report)
            .finish()
    }
}

/// Slack absorbing rounding in margins that are exactly zero in exact arithmetic.
fn rounding_slack(r: f64) -> f64 {
    1e-13 * r.abs().max(1.0)
}

/// Envelope suited to the smoothing bounds: the model's Ricci envelope,
/// raised to `(n-1) u` of its comparison solution so that `Δρ ≤ δ`.
pub fn distance_envelope(model: &WarpedModel) -> Result<(DeltaProfile, ComparisonSolution)> {
    let env = envelope_from_model(model, 1e-3)?;
    let sol = solve_comparison_ode(&env.delta, model.r_max())?;
    let delta = normalize_envelope(&env.delta, &sol, model.n(), 0.5)?;
    Ok((delta, sol))
}

pub fn mollify_distance(
    model: &WarpedModel,
    delta: &DeltaProfile,
    kernel: &MollifierKernel,
    opts: &SmoothOptions,
) -> Result<SmoothedDistance> {
    mollify_radial(model, &RadialFunction::distance(), delta, kernel, opts)
}

pub fn mollify_radial(
    model: &WarpedModel,
    source: &RadialFunction,
    delta: &DeltaProfile,
    kernel: &MollifierKernel,
    opts: &SmoothOptions,
) -> Result<SmoothedDistance> {
    let r0 = opts.r_start.max(model.r_lo() + 1.0);
    let r1 = opts.r_end.unwrap_or(model.r_max() - 1.5);
    if !(r1 > r0) || opts.points == 0 {
        return Err(invalid(format!("no grid radii in ({r0}, {r1}]")));
    }
    let h = (r1 - r0) / opts.points as f64;
    let n1 = model.n() as f64 - 1.0;
    let log_deriv = |r: f64| {
        let g = model.warp().jet(r);
        g.d1 / g.value
    };

    let cells: Vec<(SmoothedSample, usize)> = (0..opts.points)
        .into_par_iter()
        .map(|i| {
            let r = r0 + h * (i as f64 + 0.5);
            let curvature = (0..=32)
                .map(|j| source.profile.d2(r - 1.0 + 2.0 * j as f64 / 32.0).abs())
                .fold(0.0, f64::max);
            let d_r = delta.value(r);
            let d_b = delta.value(r - 1.0);
            let f = source.profile.jet(r);
            let mut eps = (d_r / (4.0 * (1.0 + curvature))).min(1.0);
            let mut refinements = 0;
            loop {
                let j = kernel.convolve(&source.profile, &source.kinks, r, eps);
                let lap = j.d2 + n1 * log_deriv(r) * j.d1;
                let err = (j.value - f.value).abs() + (j.d1 - f.d1).abs();
                let sample = SmoothedSample {
                    r,
                    rho_tilde: j.value,
                    d_rho_tilde: j.d1,
                    laplacian_rho_tilde: lap,
                    epsilon: eps,
                    bound_a_margin: d_r - err + rounding_slack(r),
                    bound_b_margin: 2.0 * d_b - lap + rounding_slack(r),
                };
                let ok = sample.bound_a_margin >= 0.0 && sample.bound_b_margin >= 0.0;
                if ok || refinements >= opts.max_refinements {
                    return (sample, refinements);
                }
                eps *= 0.5;
                refinements += 1;
            }
        })
        .collect();

    let mut report = BoundReport {
        sup_error: 0.0,
        sup_laplacian: f64::NEG_INFINITY,
        min_margin_a: f64::INFINITY,
        min_margin_b: f64::INFINITY,
        worst_radius_a: r0,
        worst_radius_b: r0,
        refinements: 0,
    };
    for (s, refinements) in &cells {
        report.refinements += refinements;
        report.sup_error = report.sup_error.max(delta.value(s.r) + rounding_slack(s.r) - s.bound_a_margin);
        report.sup_laplacian = report.sup_laplacian.max(s.laplacian_rho_tilde);
        if s.bound_a_margin < report.min_margin_a {
            report.min_margin_a = s.bound_a_margin;
            report.worst_radius_a = s.r;
        }
        if s.bound_b_margin < report.min_margin_b {
            report.min_margin_b = s.bound_b_margin;
            report.worst_radius_b = s.r;
        }
    }
    if report.min_margin_a < 0.0 {
        return Err(Error::Convergence(format!(
            "bound (a) violated after refinement at r = {} (margin {:.3e})",
            report.worst_radius_a, report.min_margin_a
        )));
    }
    if report.min_margin_b < 0.0 {
        return Err(Error::Convergence(format!(
            "bound (b) violated after refinement at r = {} (margin {:.3e})",
            report.worst_radius_b, report.min_margin_b
        )));
    }
    let samples = cells.into_iter().map(|(s, _)| s).collect();
    Ok(SmoothedDistance(Arc::new(Inner {
        model: model.clone(),
        source: source.clone(),
        delta: delta.clone(),
        kernel: kernel.clone(),
        r0,
        h,
        samples,
        report,
    })))
}

impl SmoothedDistance {
    pub fn samples(&self) -> &[SmoothedSample] {
        &self.0.samples
    }

    pub fn report(&self) -> BoundReport {
        self.0.report
    }

    pub fn delta(&self) -> &DeltaProfile {
        &self.0.delta
    }

    pub fn model(&self) -> &WarpedModel {
        &self.0.model
    }

    /// Radii covered by the width schedule.
    pub fn span(&self) -> (f64, f64) {
        (self.0.r0, self.0.r0 + self.0.h * self.0.samples.len() as f64)
    }

    /// Width used for radius `r`: that of the grid cell containing it.
    pub fn epsilon_at(&self, r: f64) -> f64 {
        let i = ((r - self.0.r0) / self.0.h).floor();
        let i = (i.max(0.0) as usize).min(self.0.samples.len() - 1);
        self.0.samples[i].epsilon
    }

    /// `(ρ̃, ρ̃', ρ̃'')` at any radius, using the cell's width.
    pub fn jet(&self, r: f64) -> Jet {
        let inner = &self.0;
        inner.kernel.convolve(&inner.source.profile, &inner.source.kinks, r, self.epsilon_at(r))
    }

    /// `Δρ̃ = ρ̃'' + (n-1)(g'/g) ρ̃'` and `|∇ρ̃|² = ρ̃'²` together with the jet.
    pub fn geometry_at(&self, r: f64) -> (Jet, f64) {
        let j = self.jet(r);
        let g = self.0.model.warp().jet(r);
        let lap = j.d2 + (self.0.model.n() as f64 - 1.0) * g.d1 / g.value * j.d1;
        (j, lap)
    }

    pub fn rho_tilde_profile(&self) -> RadialProfile {
        let this = self.clone();
        let (lo, hi) = self.span();
        RadialProfile::from_jet_fn(lo, hi, move |r| this.jet(r))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonCheck {
    /// `Δρ̃ ≤ (n-1)u + 2δ(r-1)` at every grid radius.
    pub inequality_holds: bool,
    pub worst_radius: f64,
    pub worst_margin: f64,
    /// Largest `Δρ̃` over the last tenth of the grid.
    pub limsup_estimate: f64,
    /// `inequality_holds && limsup_estimate ≤ tol`.
    pub pass: bool,
}

/// Check the comparison inequality for `Δρ̃` and estimate `limsup Δρ̃`.
pub fn check_lemma_comp(
    model: &WarpedModel,
    smoothed: &SmoothedDistance,
    solution: &ComparisonSolution,
    tol: f64,
) -> ComparisonCheck {
    let n1 = model.n() as f64 - 1.0;
    let delta = smoothed.delta();
    let samples = smoothed.samples();
    let mut worst = (f64::INFINITY, samples[0].r);
    for s in samples {
        let margin = n1 * solution.u(s.r) + 2.0 * delta.value(s.r - 1.0) - s.laplacian_rho_tilde + rounding_slack(s.r);
        if margin < worst.0 {
            worst = (margin, s.r);
        }
    }
    let tail = samples.len() - samples.len() / 10 - 1;
    let limsup = samples[tail..].iter().map(|s| s.laplacian_rho_tilde).fold(f64::NEG_INFINITY, f64::max);
    let holds = worst.0 >= 0.0;
    ComparisonCheck {
        inequality_holds: holds,
        worst_radius: worst.1,
        worst_margin: worst.0,
        limsup_estimate: limsup,
        pass: holds && limsup <= tol,
    }
}
