//! Parameter schedules that drive defect quotients below a target.

use rayon::prelude::*;
use serde::Serialize;

use super::{
    build_cutoff, build_weyl_noncompact, build_weyl_soliton, eval_defect_with, instantiated_bound, noncompact_constant,
    select_annulus_finite, select_annulus_infinite, BoundCheck, DefectReport, ParamRecord, SolitonWeylParams,
    WeylParamsNonCompact, DEFECT_TOLERANCE,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Manifold, SolitonModel, WarpedModel};
use crate::smoothing::{distance_envelope, mollify_distance, MollifierKernel, SmoothOptions, SmoothedDistance};
use crate::volume::{soliton_volume, warped_tail_volume, warped_volume};

/// A model together with what certification needs to evaluate test functions on it.
#[derive(Clone, Debug)]
pub struct WeylContext {
    manifold: Manifold,
    smoothed: Option<SmoothedDistance>,
}

impl WeylContext {
    /// Builds the mollified distance for warped models with the default schedule.
    pub fn new(manifold: Manifold) -> Result<Self> {
        let smoothed = match &manifold {
            Manifold::Warped(model) => {
                let (delta, _) = distance_envelope(model)?;
                Some(mollify_distance(model, &delta, &MollifierKernel::default(), &SmoothOptions::default())?)
            }
            Manifold::Soliton(_) => None,
        };
        Ok(Self { manifold, smoothed })
    }

    pub fn with_smoothing(model: WarpedModel, smoothed: SmoothedDistance) -> Self {
        Self { manifold: Manifold::Warped(model), smoothed: Some(smoothed) }
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn smoothed(&self) -> Option<&SmoothedDistance> {
        self.smoothed.as_ref()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions {
    /// Largest radius a test function may reach.
    pub budget: f64,
    pub rel_tol: f64,
    pub max_attempts: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { budget: 1_048_576.0, rel_tol: DEFECT_TOLERANCE, max_attempts: 40 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// The annulus rule picked the free parameter.
    Found,
    /// The rule found nothing; a fixed fallback was evaluated to record a quotient.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Attempt {
    pub report: DefectReport,
    pub selection: Selection,
    pub bound: BoundCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certification {
    pub lambda: f64,
    pub p: u32,
    pub eps: f64,
    pub mu: f64,
    pub certified: bool,
    /// The certifying report, or the best one when none certified.
    pub report: Option<DefectReport>,
    pub best_quotient: f64,
    /// Largest term of the bound at the best attempt.
    pub binding_term: Option<String>,
    pub dominance_violations: usize,
    /// Whether the annulus rule succeeded at least once.
    pub selection_found: bool,
    pub attempts: Vec<Attempt>,
    pub failure: Option<String>,
}

impl Certification {
    fn errored(lambda: f64, p: u32, eps: f64, mu: f64, err: &Error) -> Self {
        Self {
            lambda,
            p,
            eps,
            mu,
            certified: false,
            report: None,
            best_quotient: f64::INFINITY,
            binding_term: None,
            dominance_violations: 0,
            selection_found: false,
            attempts: vec![],
            failure: Some(err.to_string()),
        }
    }

    fn from_attempts(lambda: f64, p: u32, eps: f64, mu: f64, attempts: Vec<Attempt>, note: Option<String>) -> Self {
        let best = attempts.iter().min_by(|a, b| a.report.quotient.total_cmp(&b.report.quotient));
        let certified = best.is_some_and(|b| b.report.quotient < eps);
        let failure = if certified {
            None
        } else if attempts.is_empty() {
            Some(note.unwrap_or_else(|| "parameter budget admits no test function".into()))
        } else {
            let b = best.expect("nonempty");
            let mut msg = format!(
                "budget exhausted after {} attempts; best quotient {:.4e}, binding term {}",
                attempts.len(),
                b.report.quotient,
                b.bound.binding_term()
            );
            if let Some(n) = note {
                msg = format!("{n}; {msg}");
            }
            Some(msg)
        };
        Self {
            lambda,
            p,
            eps,
            mu,
            certified,
            report: best.map(|b| b.report.clone()),
            best_quotient: best.map_or(f64::INFINITY, |b| b.report.quotient),
            binding_term: best.map(|b| b.bound.binding_term().to_string()),
            dominance_violations: attempts.iter().filter(|a| !a.bound.dominated).count(),
            selection_found: attempts.iter().any(|a| a.selection == Selection::Found),
            attempts,
            failure,
        }
    }
}

/// Search for a test function supported outside `B(μ)` with quotient below `eps`.
///
/// Warped models: `R` starts at `μ + 3` and doubles, `x = 2R + 1`, and `y` comes from
/// the annulus rule on a grid of step `R/4` (finite volume: `x` from the tail rule,
/// `y = x + 3R`). Solitons: `b = 2 + μ`, `l` doubles from 2, and `a` is the
/// smallest integer `≥ 2` with `V(b + (a+2)l) ≤ 2 V(b + (a+1)l)`.
pub fn certify_spectrum_point(
    ctx: &WeylContext,
    lambda: f64,
    eps: f64,
    mu: f64,
    p: u32,
    opts: &CertifyOptions,
) -> Result<Certification> {
    if !(lambda >= 0.0) || !(eps > 0.0) || !(mu >= 0.0) {
        return Err(invalid(format!("need λ ≥ 0, ε > 0, μ ≥ 0 (λ = {lambda}, ε = {eps}, μ = {mu})")));
    }
    if p != 1 && p != 2 {
        return Err(invalid(format!("p must be 1 or 2, got {p}")));
    }
    match &ctx.manifold {
        Manifold::Warped(model) => {
            let smoothed = ctx.smoothed.as_ref().ok_or_else(|| invalid("warped context lacks a smoothed distance"))?;
            certify_warped(model, smoothed, lambda, eps, mu, p, opts)
        }
        Manifold::Soliton(model) => certify_soliton(model, lambda, eps, mu, p, opts),
    }
}

fn attempt(phi: super::WeylTestFunction, p: u32, selection: Selection, opts: &CertifyOptions) -> Result<Attempt> {
    let report = eval_defect_with(&phi, p, opts.rel_tol)?;
    let bound = instantiated_bound(&phi, &report)?;
    Ok(Attempt { report, selection, bound })
}

fn certify_warped(
    model: &WarpedModel,
    smoothed: &SmoothedDistance,
    lambda: f64,
    eps: f64,
    mu: f64,
    p: u32,
    opts: &CertifyOptions,
) -> Result<Certification> {
    let span_hi = smoothed.span().1.min(opts.budget);
    let budget = build_cutoff(0.0, 1.0)?.budget;
    let finite = model.has_finite_volume();
    let mut attempts = vec![];
    let mut scale = mu + 3.0;
    while attempts.len() < opts.max_attempts {
        let x0 = 2.0 * scale + 1.0;
        if x0 + 4.0 * scale + 1.0 > span_hi {
            break;
        }
        let grid_step = scale / 4.0;
        let (x, y, selection) = if finite {
            let c = noncompact_constant(lambda, budget, smoothed.delta().value(x0 - scale));
            let grid: Vec<f64> = (0..)
                .map(|j| x0 + j as f64 * grid_step)
                .take_while(|&x| x + 4.0 * scale + 1.0 <= span_hi)
                .collect();
            let tail = |r: f64| warped_tail_volume(model, r).unwrap_or(f64::NAN);
            match select_annulus_finite(tail, scale, eps, c, &grid)? {
                Some(x) => (x, x + 3.0 * scale, Selection::Found),
                None => (x0, x0 + 3.0 * scale, Selection::Fallback),
            }
        } else {
            let grid: Vec<f64> = (1..)
                .map(|j| x0 + 2.0 * scale + j as f64 * grid_step)
                .take_while(|&y| y + scale + 1.0 <= span_hi)
                .collect();
            match select_annulus_infinite(|r| warped_volume(model, r), scale, &grid)? {
                Some(y) => (x0, y, Selection::Found),
                None => (x0, x0 + 3.0 * scale, Selection::Fallback),
            }
        };
        let params = WeylParamsNonCompact { scale_r: scale, x, y, mu, lambda, p };
        let a = attempt(build_weyl_noncompact(model, smoothed, &params)?, p, selection, opts)?;
        let done = a.report.quotient < eps;
        attempts.push(a);
        if done {
            break;
        }
        scale *= 2.0;
    }
    let note = (finite && !attempts.iter().any(|a| a.selection == Selection::Found))
        .then(|| "finite-volume annulus selection found no admissible x".to_string());
    Ok(Certification::from_attempts(lambda, p, eps, mu, attempts, note))
}

/// Largest `a` tried by the soliton annulus rule before falling back to `a = 2`.
const MAX_A: usize = 4096;

fn certify_soliton(
    model: &SolitonModel,
    lambda: f64,
    eps: f64,
    mu: f64,
    p: u32,
    opts: &CertifyOptions,
) -> Result<Certification> {
    let b = (2.0 + mu).max(model.rho_min());
    let v = |r: f64| soliton_volume(model, r);
    let mut attempts = vec![];
    let mut l = 2.0;
    while attempts.len() < opts.max_attempts {
        let found = (2..=MAX_A).map(|a| a as f64).find(|&a| v(b + (a + 2.0) * l) <= 2.0 * v(b + (a + 1.0) * l));
        let (a, selection) = match found {
            Some(a) => (a, Selection::Found),
            None => (2.0, Selection::Fallback),
        };
        if b + (a + 2.0) * l > opts.budget.min(super::SOLITON_RANGE) {
            break;
        }
        let params = SolitonWeylParams { a, b, l, mu, lambda, p };
        let at = attempt(build_weyl_soliton(model, &params)?, p, selection, opts)?;
        let done = at.report.quotient < eps;
        attempts.push(at);
        if done {
            break;
        }
        l *= 2.0;
    }
    Ok(Certification::from_attempts(lambda, p, eps, mu, attempts, None))
}

/// Certify every λ independently; failures stay in their rows.
pub fn sweep_spectrum(
    ctx: &WeylContext,
    lambdas: &[f64],
    eps: f64,
    mu: f64,
    p: u32,
    opts: &CertifyOptions,
) -> Vec<Certification> {
    lambdas
        .par_iter()
        .map(|&lambda| {
            certify_spectrum_point(ctx, lambda, eps, mu, p, opts)
                .unwrap_or_else(|e| Certification::errored(lambda, p, eps, mu, &e))
        })
        .collect()
}

impl Certification {
    /// `(R or l, x or b, y or a)` of the reported test function.
    pub fn param_columns(&self) -> Option<(f64, f64, f64)> {
        self.report.as_ref().map(|r| r.params.columns())
    }

    pub fn params(&self) -> Option<ParamRecord> {
        self.report.as_ref().map(|r| r.params)
    }
}
