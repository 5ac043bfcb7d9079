//! Laplacian-comparison machinery: the Ricci envelope `δ(r)`, the model ODE
//! `g'' = δ g` with `g(0) = 0, g'(0) = 1`, and the decay of `u = g'/g`.
//!
//! The ODE is integrated in Riccati form. With `t = ln r` and `v = r u` the
//! system becomes
//!
//! ```text
//! dv/dt = v + r² δ(r) - v²,        d(log g)/dt = v,
//! ```
//!
//! which is regular at the origin (`v → 1`) and keeps `g` in log space.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::WarpedModel;
use crate::profile::{ClosedForm, RadialProfile};

/// Positivity floor applied when an envelope would otherwise vanish.
pub const DELTA_FLOOR: f64 = 1e-15;

/// Ricci decay envelope: positive, nonincreasing, tending to zero on good models.
///
/// Outside its sampled span a tabulated envelope is extended by constants.
#[derive(Clone, Debug)]
pub struct DeltaProfile {
    profile: RadialProfile,
    lo: f64,
    hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaCheck {
    pub positive: bool,
    pub nonincreasing: bool,
    pub decays: bool,
}

impl DeltaProfile {
    pub fn constant(c: f64) -> Self {
        Self::closed(ClosedForm::Polynomial(vec![c]))
    }

    /// `coef / (shift + r)^power`
    pub fn inverse_power(coef: f64, shift: f64, power: f64) -> Self {
        Self::closed(ClosedForm::InversePower { coef, shift, power })
    }

    pub fn closed(form: ClosedForm) -> Self {
        Self { profile: RadialProfile::closed(form, 0.0, f64::INFINITY), lo: 0.0, hi: f64::INFINITY }
    }

    /// Monotone interpolation of samples; constant extension beyond the ends.
    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let (lo, hi) = (xs.first().copied().unwrap_or(0.0), xs.last().copied().unwrap_or(0.0));
        Ok(Self { profile: RadialProfile::tabulated_monotone(xs, ys)?, lo, hi })
    }

    /// Parse `const:c`, `inv:coef,shift,power` (i.e. `coef/(shift+r)^power`).
    pub fn parse(spec: &str) -> Result<Self> {
        let (family, args) = spec
            .split_once(':')
            .ok_or_else(|| invalid(format!("delta spec {spec:?} must look like family:args")))?;
        let nums = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|e| invalid(format!("delta spec {spec:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        let delta = match (family, nums.as_slice()) {
            ("const", [c]) => Self::constant(*c),
            ("inv", [c, s, p]) => Self::inverse_power(*c, *s, *p),
            _ => return Err(invalid(format!("unknown delta spec {spec:?}"))),
        };
        Ok(delta)
    }

    fn clamp(&self, r: f64) -> f64 {
        r.clamp(self.lo, self.hi)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.profile.value(self.clamp(r))
    }

    pub fn d1(&self, r: f64) -> f64 {
        if r < self.lo || r > self.hi {
            0.0
        } else {
            self.profile.d1(r)
        }
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    /// Sample the invariants on `[0, r_max]`: `δ > 0`, nonincreasing, `δ(r_max) < tol`.
    pub fn check(&self, r_max: f64, tol: f64) -> DeltaCheck {
        let samples = 2000;
        let vals: Vec<f64> = (0..=samples).map(|i| self.value(r_max * i as f64 / samples as f64)).collect();
        DeltaCheck {
            positive: vals.iter().all(|&d| d > 0.0),
            nonincreasing: vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300),
            decays: self.value(r_max) < tol,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Series-seed radius.
    pub h0: f64,
    /// Maximal step in `t = ln r`, which also sets the output density.
    pub max_log_step: f64,
    /// Bound on the scaled Riccati residual `|u' - δ + u²| / max(1, u²)`.
    pub residual_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 1e-14, h0: 1e-3, max_log_step: 0.05, residual_tol: 1e-8, max_steps: 5_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub max_residual: f64,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    t: f64,
    v: f64,
    vt: f64,
    vtt: f64,
    log_g: f64,
}

/// Solution of `g'' = δ g`, stored as dense Hermite data in `t = ln r`.
#[derive(Clone, Debug)]
pub struct ComparisonSolution {
    nodes: Vec<Node>,
    delta: DeltaProfile,
    r_max: f64,
    stats: IntegratorStats,
}

fn rhs(delta: &DeltaProfile, t: f64, v: f64) -> f64 {
    let r = t.exp();
    v + r * r * delta.value(r) - v * v
}

fn second_derivative(delta: &DeltaProfile, t: f64, v: f64, vt: f64) -> f64 {
    let r = t.exp();
    vt + 2.0 * r * r * delta.value(r) + r * r * r * delta.d1(r) - 2.0 * v * vt
}

/// Quintic Hermite basis on `[0, 1]` for (value, derivative, second derivative) at both ends.
/// Returns interpolated value, first and second derivative with respect to `t`.
fn quintic_hermite(a: &[f64; 3], b: &[f64; 3], h: f64, s: f64) -> [f64; 3] {
    let (p0, m0, c0) = (a[0], a[1] * h, a[2] * h * h);
    let (p1, m1, c1) = (b[0], b[1] * h, b[2] * h * h);
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h3 = 0.5 * s3 - s4 + 0.5 * s5;
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    let d3 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
    let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let e0 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
    let e1 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
    let e2 = 1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3;
    let e3 = 3.0 * s - 12.0 * s2 + 10.0 * s3;
    let e4 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
    let e5 = 60.0 * s - 180.0 * s2 + 120.0 * s3;
    let value = h0 * p0 + h1 * m0 + h2 * c0 + h3 * c1 + h4 * m1 + h5 * p1;
    let d = (d0 * p0 + d1 * m0 + d2 * c0 + d3 * c1 + d4 * m1 + d5 * p1) / h;
    let dd = (e0 * p0 + e1 * m0 + e2 * c0 + e3 * c1 + e4 * m1 + e5 * p1) / (h * h);
    [value, d, dd]
}

fn residual_between(delta: &DeltaProfile, a: &Node, b: &Node, t: f64) -> f64 {
    let h = b.t - a.t;
    let [v, vt, _] = quintic_hermite(&[a.v, a.vt, a.vtt], &[b.v, b.vt, b.vtt], h, (t - a.t) / h);
    let r = t.exp();
    (vt - rhs(delta, t, v)).abs() / (r * r).max(v * v)
}

/// Scaled residual of the dense output at the midpoint of a step.
fn step_residual(delta: &DeltaProfile, a: &Node, b: &Node) -> f64 {
    residual_between(delta, a, b, 0.5 * (a.t + b.t))
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate the Riccati form from the series seed at `h0` out to `r_max`.
pub fn solve_comparison_ode(delta: &DeltaProfile, r_max: f64) -> Result<ComparisonSolution> {
    solve_comparison_ode_with(delta, r_max, &OdeOptions::default())
}

pub fn solve_comparison_ode_with(delta: &DeltaProfile, r_max: f64, opts: &OdeOptions) -> Result<ComparisonSolution> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(invalid(format!("r_max must be positive, got {r_max}")));
    }
    let check = delta.check(r_max, f64::INFINITY);
    if !check.positive {
        return Err(invalid("δ must be positive on [0, r_max]"));
    }
    let h0 = opts.h0.min(r_max / 10.0);
    let d0 = delta.value(0.0);
    // g = r + δ(0) r³/6 + ..., so u = 1/r + δ(0) r/3 and log g = ln r + δ(0) r²/6.
    let t0 = h0.ln();
    let t_end = r_max.ln();
    let v0 = 1.0 + d0 * h0 * h0 / 3.0;
    let l0 = h0.ln() + d0 * h0 * h0 / 6.0;

    let f = |t: f64, y: [f64; 2]| [rhs(delta, t, y[0]), y[0]];
    let mut stats = IntegratorStats::default();
    let mut y = [v0, l0];
    let mut t = t0;
    let mut k1 = f(t, y);
    stats.evaluations += 1;
    let node = |t: f64, y: [f64; 2], vt: f64| Node { t, v: y[0], vt, vtt: second_derivative(delta, t, y[0], vt), log_g: y[1] };
    let mut nodes = vec![node(t, y, k1[0])];
    let mut h = 1e-3_f64.min(opts.max_log_step);

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Convergence(format!("step budget exhausted at r = {}", t.exp())));
        }
        h = h.min(t_end - t).min(opts.max_log_step);
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    ys[0] += h * a * kj[0];
                    ys[1] += h * a * kj[1];
                }
            }
            k[s] = f(t + C[s] * h, ys);
        }
        stats.evaluations += 6;
        let mut ynew = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            ynew[0] += h * A[6][j] * kj[0];
            ynew[1] += h * A[6][j] * kj[1];
        }
        let mut err = 0.0;
        for comp in 0..2 {
            let e: f64 = h * (0..7).map(|j| E[j] * k[j][comp]).sum::<f64>();
            let sc = opts.abs_tol + opts.rel_tol * y[comp].abs().max(ynew[comp].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / 2.0).sqrt();
        if !err.is_finite() {
            h *= 0.1;
            stats.rejected += 1;
            continue;
        }
        if err <= 1.0 {
            let candidate = node(t + h, ynew, k[6][0]);
            // The error estimate does not see the interpolant; where δ bends
            // sharply the dense output can drift from the ODE, so check it too.
            let prev = nodes.last().expect("seed node");
            if step_residual(delta, prev, &candidate) > 0.5 * opts.residual_tol && h > 1e-10 {
                stats.rejected += 1;
                h *= 0.5;
                continue;
            }
            t += h;
            y = ynew;
            k1 = k[6];
            stats.accepted += 1;
            nodes.push(candidate);
        } else {
            stats.rejected += 1;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= if err <= 1.0 { fac } else { fac.min(1.0) };
        if h < 1e-14 {
            return Err(Error::Convergence(format!("step size underflow at r = {}", t.exp())));
        }
    }

    let mut sol = ComparisonSolution { nodes, delta: delta.clone(), r_max, stats };
    sol.stats.max_residual = sol.max_residual();
    if sol.stats.max_residual > opts.residual_tol {
        return Err(Error::Convergence(format!(
            "Riccati residual {:.3e} exceeds {:.1e}",
            sol.stats.max_residual, opts.residual_tol
        )));
    }
    Ok(sol)
}

impl ComparisonSolution {
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Smallest radius covered by the integration (the series-seed radius).
    pub fn r_min(&self) -> f64 {
        self.nodes[0].t.exp()
    }

    pub fn stats(&self) -> IntegratorStats {
        self.stats
    }

    pub fn delta(&self) -> &DeltaProfile {
        &self.delta
    }

    fn locate(&self, t: f64) -> usize {
        let k = self.nodes.partition_point(|n| n.t <= t);
        k.saturating_sub(1).min(self.nodes.len().saturating_sub(2))
    }

    /// `(v, v_t, v_tt, log g)` at `t = ln r`.
    fn interp(&self, r: f64) -> ([f64; 3], f64) {
        let t = r.ln();
        if self.nodes.len() == 1 {
            let n = self.nodes[0];
            return ([n.v, n.vt, n.vtt], n.log_g);
        }
        let i = self.locate(t);
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let v = quintic_hermite(&[a.v, a.vt, a.vtt], &[b.v, b.vt, b.vtt], h, s);
        // log g has derivatives (v, v_t) in t.
        let l = quintic_hermite(&[a.log_g, a.v, a.vt], &[b.log_g, b.v, b.vt], h, s);
        (v, l[0])
    }

    /// `u = g'/g` at radius `r`. Below the seed radius the two-term series is used.
    pub fn u(&self, r: f64) -> f64 {
        if r < self.r_min() {
            return 1.0 / r + self.delta.value(0.0) * r / 3.0;
        }
        self.interp(r).0[0] / r
    }

    pub fn u_jet(&self, r: f64) -> crate::profile::Jet {
        let d0 = self.delta.value(0.0);
        if r < self.r_min() {
            return crate::profile::Jet::new(1.0 / r + d0 * r / 3.0, -1.0 / (r * r) + d0 / 3.0, 2.0 / (r * r * r));
        }
        let ([v, vt, vtt], _) = self.interp(r);
        crate::profile::Jet::new(v / r, (vt - v) / (r * r), (vtt - 3.0 * vt + 2.0 * v) / (r * r * r))
    }

    pub fn log_g(&self, r: f64) -> f64 {
        if r < self.r_min() {
            return r.ln() + self.delta.value(0.0) * r * r / 6.0;
        }
        self.interp(r).1
    }

    /// `g` itself; overflows to infinity for large arguments under positive `δ`.
    pub fn g(&self, r: f64) -> f64 {
        self.log_g(r).exp()
    }

    pub fn u_profile(&self) -> RadialProfile {
        let sol = self.clone();
        RadialProfile::from_jet_fn(0.0, self.r_max, move |r| sol.u_jet(r))
    }

    pub fn g_profile(&self) -> RadialProfile {
        let sol = self.clone();
        RadialProfile::from_jet_fn(0.0, self.r_max, move |r| {
            let g = sol.g(r);
            let u = sol.u_jet(r);
            // g' = u g, g'' = (u' + u²) g = δ g.
            crate::profile::Jet::new(g, u.value * g, (u.d1 + u.value * u.value) * g)
        })
    }

    /// Integrator nodes as `(r, u, log g)`.
    pub fn samples(&self) -> Vec<(f64, f64, f64)> {
        self.nodes.iter().map(|n| (n.t.exp(), n.v / n.t.exp(), n.log_g)).collect()
    }

    /// Scaled Riccati residual `|u' - (δ - u²)| / max(1, u²)` at `r`, with `u'`
    /// taken from the Hermite interpolant rather than from the ODE.
    pub fn residual_at(&self, r: f64) -> f64 {
        let t = r.ln();
        if self.nodes.len() < 2 {
            return 0.0;
        }
        let i = self.locate(t);
        residual_between(&self.delta, &self.nodes[i], &self.nodes[i + 1], t)
    }

    /// Maximum residual over the midpoints of all integrator steps.
    pub fn max_residual(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| self.residual_at((0.5 * (w[0].t + w[1].t)).exp()))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayStatus {
    Pass,
    Fail,
    /// `r_max` too small to observe the tail.
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    /// `u(r_max)`
    pub limit_estimate: f64,
    /// `du/dr` at `r_max`
    pub tail_slope: f64,
    /// `u` nonincreasing on `[r_max/10, r_max]`
    pub eventually_nonincreasing: bool,
    pub status: DecayStatus,
}

/// Decide `lim g'/g = 0` from the tail of a solution.
///
/// Pass: `u(r_max) < tol` and `u` is nonincreasing over the last decade.
/// Inconclusive: `r_max < 10`, or `u` is still above `tol` while having dropped
/// by more than half over the last decade (the decay has not been resolved yet).
pub fn verify_decay(solution: &ComparisonSolution, tol: f64) -> DecayReport {
    let r_max = solution.r_max();
    let jet = solution.u_jet(r_max);
    let lo = r_max / 10.0;
    let samples: Vec<f64> = (0..=100).map(|i| solution.u(lo * 10f64.powf(i as f64 / 100.0))).collect();
    let nonincreasing = samples.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs());
    let u_end = jet.value;
    let status = if r_max < 10.0 {
        DecayStatus::Inconclusive
    } else if u_end < tol && nonincreasing {
        DecayStatus::Pass
    } else if u_end >= tol && (samples[0] - u_end) > 0.5 * u_end {
        DecayStatus::Inconclusive
    } else {
        DecayStatus::Fail
    };
    DecayReport { limit_estimate: u_end, tail_slope: jet.d1, eventually_nonincreasing: nonincreasing, status }
}

/// Envelope `δ(r) = max(floor, sup_{s ≥ r} -Ric(s)/(n-1))` read off a model.
#[derive(Clone, Debug)]
pub struct Envelope {
    pub delta: DeltaProfile,
    /// `δ(r_max) < tol`: Ricci curvature is asymptotically nonnegative.
    pub asymptotically_nonnegative: bool,
}

pub const ENVELOPE_SAMPLES: usize = 4000;
const ENVELOPE_SUBSAMPLES: usize = 8;

pub fn envelope_from_model(model: &WarpedModel, tol: f64) -> Result<Envelope> {
    let (lo, hi) = (model.r_lo(), model.r_max());
    let warp = model.warp();
    let requirement = |r: f64| {
        let g = warp.jet(r);
        (g.value > 0.0).then(|| g.d2 / g.value)
    };
    let xs: Vec<f64> = (0..=ENVELOPE_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / ENVELOPE_SAMPLES as f64)
        .filter(|&r| requirement(r).is_some())
        .collect();
    if xs.len() < 2 {
        return Err(invalid("model window too small for an envelope"));
    }
    // Sup of g''/g over each cell, sub-sampled so peaks between nodes are caught.
    let cell_max: Vec<f64> = xs
        .windows(2)
        .map(|w| {
            (0..=ENVELOPE_SUBSAMPLES)
                .filter_map(|k| requirement(w[0] + (w[1] - w[0]) * k as f64 / ENVELOPE_SUBSAMPLES as f64))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    // Node i takes the sup over cells i-1, i, ...: the monotone interpolant on
    // cell i-1 then stays above the requirement on [r, ∞) for every r in it.
    let mut ys = vec![0.0; xs.len()];
    let mut running = f64::NEG_INFINITY;
    for i in (0..xs.len()).rev() {
        if i < cell_max.len() {
            running = running.max(cell_max[i]);
        }
        let left = if i > 0 { cell_max[i - 1] } else { f64::NEG_INFINITY };
        ys[i] = running.max(left).max(DELTA_FLOOR);
    }
    let flag = ys[ys.len() - 1] < tol;
    Ok(Envelope { delta: DeltaProfile::tabulated(xs, ys)?, asymptotically_nonnegative: flag })
}

/// The normalization `(n-1) g'/g ≤ δ`: `δ ← sup_{s ≥ r} max(δ(s), (n-1) u(s))`,
/// tabulated on the solution's own nodes above `r_from`.
pub fn normalize_envelope(delta: &DeltaProfile, solution: &ComparisonSolution, n: usize, r_from: f64) -> Result<DeltaProfile> {
    let n1 = n as f64 - 1.0;
    let mut xs: Vec<f64> = solution.samples().into_iter().map(|s| s.0).filter(|&r| r >= r_from).collect();
    if xs.first().is_none_or(|&r| r > r_from) {
        xs.insert(0, r_from);
    }
    let raw: Vec<f64> = xs.iter().map(|&r| delta.value(r).max(n1 * solution.u(r))).collect();
    let mut ys = vec![0.0; xs.len()];
    let mut running = f64::NEG_INFINITY;
    for i in (0..xs.len()).rev() {
        running = running.max(raw[i]);
        ys[i] = running.max(DELTA_FLOOR);
    }
    DeltaProfile::tabulated(xs, ys)
}
