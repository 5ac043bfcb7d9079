//! Volumes of geodesic balls and soliton sublevel sets, growth checks, and the
//! integral inequalities for `|Δρ̃|` and `|Δρ|`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::{sphere_area, unit_ball_volume, Manifold, SolitonModel, WarpedModel};
use crate::quadrature::{integrate, integrate_partition, GaussLegendre, QuadOptions};
use crate::smoothing::SmoothedDistance;

fn tight() -> QuadOptions {
    QuadOptions { rel_tol: 1e-12, abs_tol: 0.0, max_intervals: 4000 }
}

/// `V(r) = ∫_{r_lo}^{r} ω g^{n-1}`.
pub fn warped_volume(model: &WarpedModel, r: f64) -> f64 {
    let hi = r.min(model.r_max());
    if hi <= model.r_lo() {
        return 0.0;
    }
    integrate(|s| model.weight(s), model.r_lo(), hi, &tight()).map(|q| q.value).unwrap_or(f64::NAN)
}

/// Exponential decay rate of the weight at `r_max`, `-(n-1) g'/g`, if positive.
fn tail_rate(model: &WarpedModel) -> Option<f64> {
    let g = model.warp().jet(model.r_max());
    let rate = -(model.n() as f64 - 1.0) * g.d1 / g.value;
    (rate > 0.0).then_some(rate)
}

/// `vol(M) - V(r)` for finite-volume models, integrated directly over the tail
/// with an exponential extrapolation past `r_max`.
pub fn warped_tail_volume(model: &WarpedModel, r: f64) -> Result<f64> {
    let rate = tail_rate(model)
        .filter(|_| model.has_finite_volume())
        .ok_or_else(|| invalid("model does not have finite volume"))?;
    let lo = r.max(model.r_lo());
    let body = if lo < model.r_max() {
        integrate(|s| model.weight(s), lo, model.r_max(), &tight())?.value
    } else {
        0.0
    };
    let beyond = if lo < model.r_max() {
        model.weight(model.r_max()) / rate
    } else {
        model.weight(model.r_max()) * (-(lo - model.r_max()) * rate).exp() / rate
    };
    Ok(body + beyond)
}

pub fn warped_total_volume(model: &WarpedModel) -> Option<f64> {
    warped_tail_volume(model, model.r_lo()).ok()
}

/// Soliton sublevel volume `V(r) = vol(D(r))`: sphere factor times the flat ball
/// of radius `sqrt(r² - 2k)`; zero below `ρ_min`.
pub fn soliton_volume(model: &SolitonModel, r: f64) -> f64 {
    let Ok(s) = model.s_of_rho(r) else { return 0.0 };
    let m = model.euclidean_dim();
    model.sphere_factor_volume() * unit_ball_volume(m) * s.powi(m as i32)
}

/// `V'(r) = ∫_{∂D(r)} |∇ρ|^{-1}`; by the product structure `F |S^{m-1}| s^{m-2} r`.
pub fn soliton_area(model: &SolitonModel, r: f64) -> f64 {
    let Ok(s) = model.s_of_rho(r) else { return 0.0 };
    let m = model.euclidean_dim();
    model.sphere_factor_volume() * sphere_area(m - 1) * s.powi(m as i32 - 2) * r
}

/// `χ(r) = ∫_{D(r)} R`; `R` is constant on the built-ins.
pub fn soliton_chi(model: &SolitonModel, r: f64) -> f64 {
    model.scalar_curvature() * soliton_volume(model, r)
}

pub fn soliton_chi_derivative(model: &SolitonModel, r: f64) -> f64 {
    model.scalar_curvature() * soliton_area(model, r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum TotalVolume {
    Finite(f64),
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeData {
    pub radii: Vec<f64>,
    pub volume: Vec<f64>,
    /// `V'`: sphere area for warped models, co-area density for solitons.
    pub area: Vec<f64>,
    pub chi: Option<Vec<f64>>,
    pub total_volume: TotalVolume,
}

/// Volumes on a sorted grid. Warped volumes are cumulative sums of per-cell quadratures.
pub fn compute_volume(manifold: &Manifold, r_grid: &[f64]) -> Result<VolumeData> {
    if r_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("radius grid must be sorted"));
    }
    match manifold {
        Manifold::Warped(model) => {
            if r_grid.iter().any(|&r| r > model.r_max() * (1.0 + 1e-12)) {
                return Err(invalid(format!("grid exceeds r_max = {}", model.r_max())));
            }
            let mut volume = Vec::with_capacity(r_grid.len());
            let mut acc = 0.0;
            let mut prev = model.r_lo();
            for &r in r_grid {
                let r = r.max(model.r_lo());
                if r > prev {
                    acc += integrate(|s| model.weight(s), prev, r, &tight())?.value;
                    prev = r;
                }
                volume.push(acc);
            }
            let area = r_grid.iter().map(|&r| if r < model.r_lo() { 0.0 } else { model.weight(r) }).collect();
            let total_volume = warped_total_volume(model).map_or(TotalVolume::Infinite, TotalVolume::Finite);
            Ok(VolumeData { radii: r_grid.to_vec(), volume, area, chi: None, total_volume })
        }
        Manifold::Soliton(model) => Ok(VolumeData {
            radii: r_grid.to_vec(),
            volume: r_grid.iter().map(|&r| soliton_volume(model, r)).collect(),
            area: r_grid.iter().map(|&r| soliton_area(model, r)).collect(),
            chi: Some(r_grid.iter().map(|&r| soliton_chi(model, r)).collect()),
            total_volume: TotalVolume::Infinite,
        }),
    }
}

/// Area of a geodesic cap of angular radius `theta` on the unit `S^{n-1}`.
pub fn cap_area(n: usize, theta: f64) -> f64 {
    let theta = theta.clamp(0.0, std::f64::consts::PI);
    match n {
        2 => 2.0 * theta,
        3 => 2.0 * std::f64::consts::PI * (1.0 - theta.cos()),
        _ => {
            let gl = GaussLegendre::new(24);
            sphere_area(n - 2) * gl.integrate_composite(|p| p.sin().powi(n as i32 - 2), 0.0, theta, 2)
        }
    }
}

/// Lower bound for `vol(B_p(r))`, `p` at radius `d`: the set reached by a radial
/// leg followed by a leg along the sphere at the target radius, plus the
/// full spheres reached through the pole.
pub fn inscribed_ball_volume(model: &WarpedModel, d: f64, r: f64) -> f64 {
    let n = model.n();
    let lo = (d - r).max(model.r_lo());
    let hi = (d + r).min(model.r_max());
    if hi <= lo {
        return 0.0;
    }
    let full = model.unit_sphere_area();
    let through_pole = if model.has_pole() { r - d } else { f64::NEG_INFINITY };
    let integrand = |s: f64| {
        let g = model.warp().value(s);
        let gn = g.powi(n as i32 - 1);
        if s <= through_pole {
            return full * gn;
        }
        let reach = r - (s - d).abs();
        if reach <= 0.0 || g <= 0.0 {
            return 0.0;
        }
        gn * cap_area(n, reach / g)
    };
    let mut breaks = vec![lo];
    for b in [d, through_pole] {
        if b > lo && b < hi {
            breaks.push(b);
        }
    }
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    integrate_partition(integrand, &breaks, &QuadOptions::relative(1e-8)).map(|q| q.value).unwrap_or(0.0)
}

/// Upper bound for `vol(B_p(r))`: the band `|s - d| ≤ r`, restricted to the cap of
/// angular radius `r / min g` over the band.
pub fn outer_ball_volume(model: &WarpedModel, d: f64, r: f64) -> f64 {
    let n = model.n();
    let lo = (d - r).max(model.r_lo());
    let hi = (d + r).min(model.r_max());
    if hi <= lo {
        return 0.0;
    }
    let g_min = (0..=64)
        .map(|i| model.warp().value(lo + (hi - lo) * i as f64 / 64.0))
        .fold(f64::INFINITY, f64::min);
    let cap = if g_min > 0.0 { cap_area(n, r / g_min) } else { model.unit_sphere_area() };
    let band = integrate(|s| model.warp().value(s).powi(n as i32 - 1), lo, hi, &QuadOptions::relative(1e-10))
        .map(|q| q.value)
        .unwrap_or(f64::NAN);
    cap * band
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    SatisfiedOnSurrogate,
    Violated,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthSample {
    pub d: f64,
    pub r: f64,
    /// Lower bound for `vol(B_p(r)) / (e^{εr} vol(B_p(1)))`.
    pub lower_ratio: f64,
    /// Upper bound for the same ratio.
    pub upper_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    pub eps: f64,
    /// Largest upper ratio: a valid `C(ε)` for the tested pairs when satisfied.
    pub best_constant: f64,
    /// Largest lower ratio: no constant below it works.
    pub lower_constant: f64,
    pub witnesses: Vec<GrowthSample>,
    pub samples: Vec<GrowthSample>,
    pub verdict: GrowthVerdict,
}

/// Growth factor of lower ratios that counts as a witness of unbounded `C(ε)`.
pub const VIOLATION_FACTOR: f64 = 1e3;

/// Test `vol(B_p(r)) ≤ C e^{εr} vol(B_p(1))` through surrogate bounds.
///
/// * violated: a lower ratio keeps increasing at the end of the radius grid
///   after growing by [`VIOLATION_FACTOR`], or the best lower ratio grows by
///   that factor across basepoints;
/// * satisfied-on-surrogate: every upper-ratio profile peaks inside the grid
///   and the peak at the farthest basepoint is within 1.5× the earlier peaks;
/// * inconclusive otherwise.
///
/// The radius grid has to extend well past `n/ε` for the flat case to peak.
pub fn check_subexp_growth(model: &WarpedModel, eps: f64, distances: &[f64], r_grid: &[f64]) -> Result<GrowthReport> {
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    if distances.is_empty() || r_grid.len() < 2 {
        return Err(invalid("need basepoints and at least two radii"));
    }
    let rows: Vec<Vec<GrowthSample>> = distances
        .iter()
        .map(|&d| {
            let d = d.max(model.r_lo());
            let inner1 = inscribed_ball_volume(model, d, 1.0);
            let outer1 = outer_ball_volume(model, d, 1.0);
            r_grid
                .iter()
                .filter(|&&r| d + r <= model.r_max())
                .map(|&r| {
                    let e = (eps * r).exp();
                    GrowthSample {
                        d,
                        r,
                        lower_ratio: inscribed_ball_volume(model, d, r) / (e * outer1),
                        upper_ratio: outer_ball_volume(model, d, r) / (e * inner1),
                    }
                })
                .collect()
        })
        .filter(|row: &Vec<GrowthSample>| row.len() >= 2)
        .collect();
    if rows.is_empty() {
        return Err(invalid("no (basepoint, radius) pair fits inside the model"));
    }
    let max_by = |row: &[GrowthSample], f: fn(&GrowthSample) -> f64| row.iter().map(f).fold(0.0, f64::max);
    let mut witnesses = vec![];
    for row in &rows {
        let (last, prev) = (row[row.len() - 1], row[row.len() - 2]);
        let floor = row.iter().map(|s| s.lower_ratio).fold(f64::INFINITY, f64::min);
        if last.lower_ratio > prev.lower_ratio && last.lower_ratio >= VIOLATION_FACTOR * floor {
            witnesses.push(last);
        }
    }
    let lower_peaks: Vec<f64> = rows.iter().map(|r| max_by(r, |s| s.lower_ratio)).collect();
    if lower_peaks[lower_peaks.len() - 1] >= VIOLATION_FACTOR * lower_peaks[0] {
        let row = &rows[rows.len() - 1];
        let best = row.iter().copied().max_by(|a, b| a.lower_ratio.total_cmp(&b.lower_ratio)).unwrap();
        witnesses.push(best);
    }
    let upper_peaks: Vec<f64> = rows.iter().map(|r| max_by(r, |s| s.upper_ratio)).collect();
    let peaks_inside = rows.iter().all(|row| {
        let last = row[row.len() - 1].upper_ratio;
        row[..row.len() - 1].iter().any(|s| s.upper_ratio > last)
    });
    let stable = upper_peaks.len() < 2 || {
        let earlier = upper_peaks[..upper_peaks.len() - 1].iter().copied().fold(0.0, f64::max);
        upper_peaks[upper_peaks.len() - 1] <= 1.5 * earlier
    };
    let verdict = if !witnesses.is_empty() {
        GrowthVerdict::Violated
    } else if peaks_inside && stable {
        GrowthVerdict::SatisfiedOnSurrogate
    } else {
        GrowthVerdict::Inconclusive
    };
    let samples: Vec<GrowthSample> = rows.into_iter().flatten().collect();
    Ok(GrowthReport {
        eps,
        best_constant: samples.iter().map(|s| s.upper_ratio).fold(0.0, f64::max),
        lower_constant: samples.iter().map(|s| s.lower_ratio).fold(0.0, f64::max),
        witnesses,
        samples,
        verdict,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Lemma1Case {
    /// Annulus `R₁ ≤ ρ ≤ r` of an infinite-volume model.
    Annulus,
    /// Tail `ρ ≥ r` of a finite-volume model.
    Tail,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl InequalityReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-9) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub case: Lemma1Case,
    /// `max(0, sup Δρ̃)` over the grid radii beyond the inner radius.
    pub eps: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `∫|Δρ̃|` over the annulus `[R₁, r]` (infinite volume) or the tail `ρ ≥ r`
/// (finite volume) against `2ε·vol + 2·vol(∂B)`.
pub fn check_lemma1(model: &WarpedModel, smoothed: &SmoothedDistance, r1: f64, r: f64) -> Result<Lemma1Report> {
    if r < r1 {
        return Err(invalid(format!("need r ≥ R₁, got r = {r}, R₁ = {r1}")));
    }
    let finite = model.has_finite_volume();
    let case = if finite { Lemma1Case::Tail } else { Lemma1Case::Annulus };
    let inner = if finite { r } else { r1 };
    let eps = smoothed
        .samples()
        .iter()
        .filter(|s| s.r >= inner)
        .map(|s| s.laplacian_rho_tilde)
        .fold(0.0, f64::max);
    let abs_lap = |s: f64| smoothed.geometry_at(s).1.abs() * model.weight(s);
    let opts = QuadOptions::relative(1e-10);
    let (lhs, rhs) = if finite {
        let body = if r < model.r_max() { integrate(abs_lap, r, model.r_max(), &opts)?.value } else { 0.0 };
        let rate = tail_rate(model).ok_or_else(|| invalid("finite-volume tail does not decay"))?;
        let lhs = body + abs_lap(model.r_max()) / rate;
        (lhs, 2.0 * eps * warped_tail_volume(model, r)? + 2.0 * model.weight(r))
    } else {
        let lhs = if r > r1 { integrate(abs_lap, r1, r, &opts)?.value } else { 0.0 };
        (lhs, 2.0 * eps * warped_volume(model, r) + 2.0 * model.weight(r1))
    };
    let rep = InequalityReport::new(lhs, rhs);
    Ok(Lemma1Report { case, eps, lhs, rhs, pass: rep.pass })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolitonIdentityReport {
    /// Largest `|nV - 2χ - (rV' - (4/r)χ')| / max(nV - 2χ, rV' - (4/r)χ')`.
    pub max_relative_residual: f64,
    /// `nV - 2χ ≥ 0` on the whole grid.
    pub nonnegative: bool,
    /// Least `C` with `V(r) ≤ C r^n` on the grid.
    pub growth_constant: f64,
    /// `χ ≤ (n/2) V` on the whole grid.
    pub chi_bound_holds: bool,
}

pub fn check_soliton_volume_identities(model: &SolitonModel, r_grid: &[f64]) -> SolitonIdentityReport {
    let n = model.n() as f64;
    let mut rep = SolitonIdentityReport {
        max_relative_residual: 0.0,
        nonnegative: true,
        growth_constant: 0.0,
        chi_bound_holds: true,
    };
    for &r in r_grid.iter().filter(|&&r| r > 0.0) {
        let v = soliton_volume(model, r);
        let chi = soliton_chi(model, r);
        let lhs = n * v - 2.0 * chi;
        let rhs = r * soliton_area(model, r) - 4.0 / r * soliton_chi_derivative(model, r);
        let scale = lhs.abs().max(rhs.abs());
        if scale > 0.0 {
            rep.max_relative_residual = rep.max_relative_residual.max((lhs - rhs).abs() / scale);
        }
        rep.nonnegative &= lhs >= -1e-12 * v;
        rep.growth_constant = rep.growth_constant.max(v / r.powf(n));
        rep.chi_bound_holds &= chi <= 0.5 * n * v * (1.0 + 1e-15);
    }
    rep
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma3Report {
    pub l1_lhs: f64,
    pub l1_rhs: f64,
    pub l2_lhs: f64,
    pub l2_rhs: f64,
    pub pass: bool,
}

/// `∫|Δρ|` and `∫|Δρ|²` over `D(x) \ D(r)` (co-area, weight `V'`) against
/// `(2n/r)[V(x) - V(r)] + V'(r)` and `(n²/r² + 2n max R/ρ²) V(x)`.
pub fn check_lemma3(model: &SolitonModel, r: f64, x: f64) -> Result<Lemma3Report> {
    if r < model.rho_min() || x < r {
        return Err(invalid(format!("need ρ_min ≤ r ≤ x, got r = {r}, x = {x}")));
    }
    let lap = crate::geometry::soliton_delta_rho(model);
    let n = model.n() as f64;
    let opts = QuadOptions::relative(1e-11);
    let (l1_lhs, l2_lhs) = if x > r {
        let l1 = integrate(|t| lap.value(t).abs() * soliton_area(model, t), r, x, &opts)?.value;
        let l2 = integrate(|t| lap.value(t).powi(2) * soliton_area(model, t), r, x, &opts)?.value;
        (l1, l2)
    } else {
        (0.0, 0.0)
    };
    let (vx, vr) = (soliton_volume(model, x), soliton_volume(model, r));
    let l1_rhs = 2.0 * n / r * (vx - vr) + soliton_area(model, r);
    // R is constant, so max over [r, x] of R/ρ² sits at ρ = r.
    let l2_rhs = (n * n / (r * r) + 2.0 * n * model.scalar_curvature() / (r * r)) * vx;
    let pass = InequalityReport::new(l1_lhs, l1_rhs).pass && InequalityReport::new(l2_lhs, l2_rhs).pass;
    Ok(Lemma3Report { l1_lhs, l1_rhs, l2_lhs, l2_rhs, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InfiniteVolumeReport {
    /// Log-log slope of `V` over `[r_max/10, r_max]`.
    pub growth_exponent: f64,
    pub infinite: bool,
}

/// Fit the growth exponent of `V` over the decade below `r_max`.
pub fn check_infinite_volume(manifold: &Manifold, r_max: f64) -> Result<InfiniteVolumeReport> {
    let model = manifold.as_soliton()?;
    let lo = r_max / 10.0;
    if lo <= model.rho_min() {
        return Err(invalid(format!("r_max = {r_max} too small for a growth fit")));
    }
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|i| {
            let r = lo * 10f64.powf(i as f64 / 20.0);
            (r.ln(), soliton_volume(model, r).ln())
        })
        .collect();
    let k = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / k, sy / k);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
    let slope = num / den;
    Ok(InfiniteVolumeReport { growth_exponent: slope, infinite: slope >= 1.0 })
}

/// Adapter used by annulus selection: `V` as a callable for either model kind.
pub fn volume_fn(manifold: &Manifold) -> impl Fn(f64) -> f64 + Sync + '_ {
    move |r| match manifold {
        Manifold::Warped(m) => warped_volume(m, r),
        Manifold::Soliton(s) => soliton_volume(s, r),
    }
}
