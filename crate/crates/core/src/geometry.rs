//! Rotationally symmetric model manifolds `dr² + g(r)² dσ²` and explicit
//! gradient shrinking solitons with their exact radial calculus.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::profile::{ClosedForm, Jet, RadialProfile};

/// Area of the unit round sphere `S^k` in `R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

/// Volume of the unit ball in `R^m`.
pub fn unit_ball_volume(m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        sphere_area(m - 1) / m as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Euclidean,
    Hyperbolic,
    /// `dr² + e^{-r} dθ²` on `[1, ∞)`: finite volume, unit balls shrink exponentially.
    Cusp,
    Custom,
}

/// A warped product `[r_lo, r_max] × S^{n-1}` with metric `dr² + g(r)² dσ²`.
#[derive(Clone, Debug)]
pub struct WarpedModel {
    n: usize,
    warp: RadialProfile,
    kind: ModelKind,
    r_lo: f64,
    r_max: f64,
    sphere_area: f64,
}

impl WarpedModel {
    fn build(n: usize, warp: RadialProfile, kind: ModelKind, r_lo: f64, r_max: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("dimension must be at least 2, got {n}")));
        }
        if !(r_max > r_lo) || !r_max.is_finite() {
            return Err(invalid(format!("r_max = {r_max} must exceed r_lo = {r_lo}")));
        }
        let model = Self { n, warp: warp.with_domain(r_lo, r_max), kind, r_lo, r_max, sphere_area: sphere_area(n - 1) };
        model.validate_warp()?;
        Ok(model)
    }

    /// Positivity of `g` on the open domain, sampled densely.
    fn validate_warp(&self) -> Result<()> {
        let samples = 4096;
        for i in 1..samples {
            let r = self.r_lo + (self.r_max - self.r_lo) * i as f64 / samples as f64;
            let g = self.warp.value(r);
            if !(g > 0.0) || !g.is_finite() {
                return Err(invalid(format!("warp must be positive on the interior, g({r}) = {g}")));
            }
        }
        let g0 = self.warp.value(self.r_lo);
        if g0 < 0.0 || !g0.is_finite() {
            return Err(invalid(format!("warp negative at r_lo: g({}) = {g0}", self.r_lo)));
        }
        Ok(())
    }

    pub fn euclidean(n: usize, r_max: f64) -> Result<Self> {
        let warp = RadialProfile::closed(ClosedForm::Polynomial(vec![0.0, 1.0]), 0.0, r_max);
        Self::build(n, warp, ModelKind::Euclidean, 0.0, r_max)
    }

    pub fn hyperbolic(n: usize, r_max: f64) -> Result<Self> {
        let warp = RadialProfile::closed(ClosedForm::Sinh { scale: 1.0 }, 0.0, r_max);
        Self::build(n, warp, ModelKind::Hyperbolic, 0.0, r_max)
    }

    /// The cusp end `dr² + e^{-r} dθ²` on `[1, r_max]`, i.e. `g = e^{-r/2}`, `n = 2`.
    pub fn cusp(r_max: f64) -> Result<Self> {
        let warp = RadialProfile::closed(ClosedForm::Exponential { amplitude: 1.0, rate: -0.5 }, 1.0, r_max);
        Self::build(2, warp, ModelKind::Cusp, 1.0, r_max)
    }

    /// Arbitrary warp; the domain starts at the warp's lower end.
    pub fn custom(n: usize, warp: RadialProfile, r_max: f64) -> Result<Self> {
        let (lo, _) = warp.domain();
        Self::build(n, warp, ModelKind::Custom, lo, r_max)
    }

    /// Two flat cones glued at `r_glue`: `g = r` inside, `g = r_glue + slope (r - r_glue)` outside,
    /// tabulated with spacing `h`.
    pub fn glued_cone(n: usize, r_glue: f64, slope: f64, r_max: f64, h: f64) -> Result<Self> {
        if !(slope > 0.0) || !(r_glue > 0.0) || !(h > 0.0) {
            return Err(invalid("glued cone needs positive glue radius, slope and spacing"));
        }
        let count = (r_max / h).ceil() as usize;
        let xs: Vec<f64> = (0..=count).map(|i| (i as f64 * h).min(r_max)).collect();
        let mut xs = xs;
        xs.dedup();
        let ys = xs
            .iter()
            .map(|&r| if r <= r_glue { r } else { r_glue + slope * (r - r_glue) })
            .collect();
        Self::custom(n, RadialProfile::tabulated(xs, ys)?, r_max)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn warp(&self) -> &RadialProfile {
        &self.warp
    }

    pub fn r_lo(&self) -> f64 {
        self.r_lo
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// `ω_{n-1}`, area of the unit `(n-1)`-sphere.
    pub fn unit_sphere_area(&self) -> f64 {
        self.sphere_area
    }

    /// True when the warp vanishes at the inner end (a pole, e.g. the origin of `R^n`).
    pub fn has_pole(&self) -> bool {
        self.warp.value(self.r_lo) == 0.0
    }

    /// Volume density `w(r) = ω_{n-1} g(r)^{n-1}`; also the area of the sphere of radius `r`.
    pub fn weight(&self, r: f64) -> f64 {
        self.sphere_area * self.warp.value(r).powi(self.n as i32 - 1)
    }

    /// `g'/g`, the mean curvature of the distance sphere divided by `n - 1`.
    pub fn log_derivative(&self, r: f64) -> Result<f64> {
        let j = self.warp.jet(r);
        if j.value <= 0.0 {
            return Err(domain(format!("warp vanishes at r = {r}")));
        }
        Ok(j.d1 / j.value)
    }

    /// Whether the total volume is finite. Built-ins are known; custom warps are
    /// judged by the weight having decayed by ten orders of magnitude at `r_max`.
    pub fn has_finite_volume(&self) -> bool {
        match self.kind {
            ModelKind::Cusp => true,
            ModelKind::Euclidean | ModelKind::Hyperbolic => false,
            ModelKind::Custom => {
                let peak = (0..=1000)
                    .map(|i| self.weight(self.r_lo + (self.r_max - self.r_lo) * i as f64 / 1000.0))
                    .fold(0.0, f64::max);
                let tail = self.warp.jet(self.r_max);
                self.weight(self.r_max) < 1e-10 * peak && tail.d1 < 0.0
            }
        }
    }
}

/// `Δu = u'' + (n-1)(g'/g) u'` for a radial function `u`.
/// The returned profile is NaN (a domain error under `try_jet`) where `g = 0`.
pub fn radial_laplacian(model: &WarpedModel, u: &RadialProfile) -> RadialProfile {
    let (lo, hi) = u.domain();
    let (lo, hi) = (lo.max(model.r_lo), hi.min(model.r_max));
    let warp = model.warp.clone();
    let u = u.clone();
    let n1 = model.n as f64 - 1.0;
    RadialProfile::from_value_fn(lo, hi, move |r| {
        let g = warp.jet(r);
        if g.value == 0.0 {
            return f64::NAN;
        }
        let uj = u.jet(r);
        uj.d2 + n1 * g.d1 / g.value * uj.d1
    })
}

/// Radial Ricci curvature `-(n-1) g''/g`.
pub fn ricci_radial(model: &WarpedModel) -> RadialProfile {
    let warp = model.warp.clone();
    let n1 = model.n as f64 - 1.0;
    RadialProfile::from_value_fn(model.r_lo, model.r_max, move |r| {
        let g = warp.jet(r);
        if g.value == 0.0 {
            return f64::NAN;
        }
        -n1 * g.d2 / g.value
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolitonStructure {
    /// Flat `R^n` with `f = |x|²/4`.
    Gaussian,
    /// Round `S^k` of radius `sqrt(2(k-1))` times flat `R^{n-k}`.
    Cylinder,
}

/// Normalized gradient shrinking soliton `Ric + Hess f = g/2`, `R + |∇f|² - f = 0`.
///
/// Everything is expressed through `s`, the radius in the Euclidean factor
/// `R^m`, `m = n - k`; the sphere factor carries no dependence.
#[derive(Clone, Debug, PartialEq)]
pub struct SolitonModel {
    n: usize,
    structure: SolitonStructure,
    k: usize,
    sphere_radius: f64,
    scalar_curvature: f64,
    normalization_constant: f64,
}

pub fn make_soliton(structure: SolitonStructure, n: usize, k: usize) -> Result<SolitonModel> {
    if n < 2 {
        return Err(invalid(format!("dimension must be at least 2, got {n}")));
    }
    match structure {
        SolitonStructure::Gaussian => {
            if k != 0 {
                return Err(invalid("gaussian soliton has no sphere factor (k must be 0)"));
            }
            Ok(SolitonModel {
                n,
                structure,
                k: 0,
                sphere_radius: 0.0,
                scalar_curvature: 0.0,
                normalization_constant: 0.0,
            })
        }
        SolitonStructure::Cylinder => {
            if k < 2 {
                return Err(invalid(format!("sphere factor S^{k} cannot be Einstein with constant 1/2 (need k >= 2)")));
            }
            if k >= n {
                return Err(invalid(format!("sphere dimension k = {k} must be below n = {n}")));
            }
            // Ric_{S^k(a)} = (k-1)/a² g = g/2 fixes a² = 2(k-1); then R = k/2 and
            // f = s²/4 + k/2 makes R + |∇f|² - f vanish.
            let kf = k as f64;
            Ok(SolitonModel {
                n,
                structure,
                k,
                sphere_radius: (2.0 * (kf - 1.0)).sqrt(),
                scalar_curvature: kf / 2.0,
                normalization_constant: 0.0,
            })
        }
    }
}

impl SolitonModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn structure(&self) -> SolitonStructure {
        self.structure
    }

    pub fn sphere_dim(&self) -> usize {
        self.k
    }

    pub fn euclidean_dim(&self) -> usize {
        self.n - self.k
    }

    pub fn sphere_radius(&self) -> f64 {
        self.sphere_radius
    }

    pub fn scalar_curvature(&self) -> f64 {
        self.scalar_curvature
    }

    pub fn normalization_constant(&self) -> f64 {
        self.normalization_constant
    }

    fn shift(&self) -> f64 {
        self.k as f64 / 2.0
    }

    /// Potential `f(s) = s²/4 + k/2`.
    pub fn potential(&self, s: f64) -> f64 {
        0.25 * s * s + self.shift()
    }

    /// `|∇f|² = s²/4`; `∇f = (s/2) ∂_s` lies in the flat factor.
    pub fn grad_potential_sq(&self, s: f64) -> f64 {
        0.25 * s * s
    }

    /// `ρ = 2 sqrt(f)`.
    pub fn rho(&self, s: f64) -> f64 {
        2.0 * self.potential(s).sqrt()
    }

    /// Inverse of [`rho`](Self::rho) on `[ρ_min, ∞)`.
    pub fn s_of_rho(&self, rho: f64) -> Result<f64> {
        let s2 = rho * rho - 2.0 * self.k as f64;
        if s2 < 0.0 {
            return Err(domain(format!("ρ = {rho} below the minimum {}", self.rho_min())));
        }
        Ok(s2.sqrt())
    }

    /// `min ρ = sqrt(2k)`, attained on the sphere factor at `s = 0`.
    pub fn rho_min(&self) -> f64 {
        (2.0 * self.k as f64).sqrt()
    }

    /// `R + |∇f|² - f`, identically zero after normalization.
    pub fn normalization_residual(&self, s: f64) -> f64 {
        self.scalar_curvature + self.grad_potential_sq(s) - self.potential(s)
    }

    /// `|∇ρ|² = |∇f|²/f`.
    pub fn grad_rho_sq(&self, s: f64) -> f64 {
        self.grad_potential_sq(s) / self.potential(s)
    }

    /// `1 - R/f`, the closed form that `|∇ρ|²` must equal.
    pub fn grad_rho_sq_identity(&self, s: f64) -> f64 {
        1.0 - self.scalar_curvature / self.potential(s)
    }

    /// `|∇ρ|²` as a function of `ρ`: `1 - 4R/ρ²`.
    pub fn grad_rho_sq_at(&self, rho: f64) -> f64 {
        1.0 - 4.0 * self.scalar_curvature / (rho * rho)
    }

    /// Both sides of Hamilton's identity `∇R = 2 Ric(∇f)`, as the flat-direction
    /// components. `R` is constant and `∇f` is tangent to the Ricci-flat factor.
    pub fn hamilton_identity(&self, s: f64) -> (f64, f64) {
        let grad_r = 0.0;
        let ric_flat = 0.0;
        (grad_r, 2.0 * ric_flat * (0.5 * s))
    }

    /// Radial Ricci curvature of the sphere factor, `(k-1)/a²`, and of the flat factor.
    pub fn ricci_eigenvalues(&self) -> (f64, f64) {
        if self.k == 0 {
            (0.0, 0.0)
        } else {
            ((self.k as f64 - 1.0) / (self.sphere_radius * self.sphere_radius), 0.0)
        }
    }

    /// `Δρ` evaluated by differentiating `ρ(s) = sqrt(s² + 2k)` in the flat factor:
    /// `ρ'' + (m-1) ρ'/s`.
    pub fn delta_rho_flat_factor(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Err(domain("flat-factor Laplacian needs s > 0"));
        }
        let rho = self.rho(s);
        let m = self.euclidean_dim() as f64;
        let d1 = s / rho;
        let d2 = 2.0 * self.k as f64 / (rho * rho * rho);
        Ok(d2 + (m - 1.0) * d1 / s)
    }

    /// Volume of the sphere factor, 1 for the Gaussian soliton.
    pub fn sphere_factor_volume(&self) -> f64 {
        if self.k == 0 {
            1.0
        } else {
            sphere_area(self.k) * self.sphere_radius.powi(self.k as i32)
        }
    }
}

/// `Δρ` as a function of `ρ`: `(n-1)/ρ - 2R/ρ + 4R/ρ³`.
pub fn soliton_delta_rho(model: &SolitonModel) -> RadialProfile {
    let n1 = model.n as f64 - 1.0;
    let r = model.scalar_curvature;
    RadialProfile::from_jet_fn(model.rho_min(), f64::INFINITY, move |rho| {
        if rho == 0.0 {
            return Jet::new(f64::NAN, f64::NAN, f64::NAN);
        }
        let (p2, p3) = (rho * rho, rho * rho * rho);
        let value = (n1 - 2.0 * r) / rho + 4.0 * r / p3;
        let d1 = -(n1 - 2.0 * r) / p2 - 12.0 * r / (p3 * rho);
        let d2 = 2.0 * (n1 - 2.0 * r) / p3 + 48.0 * r / (p3 * p2);
        Jet::new(value, d1, d2)
    })
}

impl TryFrom<&str> for SolitonStructure {
    type Error = Error;

    fn try_from(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "cylinder" => Ok(Self::Cylinder),
            other => Err(invalid(format!("unknown soliton structure {other:?}"))),
        }
    }
}

/// Either kind of model the toolkit understands.
#[derive(Clone, Debug)]
pub enum Manifold {
    Warped(WarpedModel),
    Soliton(SolitonModel),
}

impl Manifold {
    pub fn n(&self) -> usize {
        match self {
            Self::Warped(m) => m.n(),
            Self::Soliton(s) => s.n(),
        }
    }

    pub fn as_warped(&self) -> Result<&WarpedModel> {
        match self {
            Self::Warped(m) => Ok(m),
            Self::Soliton(_) => Err(Error::NotApplicable("operation needs a warped model".into())),
        }
    }

    pub fn as_soliton(&self) -> Result<&SolitonModel> {
        match self {
            Self::Soliton(s) => Ok(s),
            Self::Warped(_) => Err(Error::NotApplicable("not a soliton".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[f64], hi: f64) -> RadialProfile {
        RadialProfile::closed(ClosedForm::Polynomial(c.to_vec()), 0.0, hi)
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
    }

    #[test]
    fn laplacian_examples() {
        let e3 = WarpedModel::euclidean(3, 100.0).unwrap();
        let lap = radial_laplacian(&e3, &poly(&[0.0, 0.0, 1.0], 100.0));
        for r in [0.5, 3.0, 40.0] {
            assert!((lap.value(r) - 6.0).abs() < 1e-12);
        }
        let h3 = WarpedModel::hyperbolic(3, 20.0).unwrap();
        let lap = radial_laplacian(&h3, &poly(&[0.0, 1.0], 20.0));
        for r in [0.3, 1.0, 5.0] {
            assert!((lap.value(r) - 2.0 / r.tanh()).abs() < 1e-12);
        }
        let cusp = WarpedModel::cusp(50.0).unwrap();
        let lap = radial_laplacian(&cusp, &poly(&[0.0, 1.0], 50.0));
        assert!((lap.value(3.0) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn laplacian_at_pole_is_domain_error() {
        let e3 = WarpedModel::euclidean(3, 10.0).unwrap();
        let lap = radial_laplacian(&e3, &poly(&[0.0, 1.0], 10.0));
        assert!(matches!(lap.try_jet(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ricci_examples() {
        let e = WarpedModel::euclidean(4, 10.0).unwrap();
        assert_eq!(ricci_radial(&e).value(2.0), 0.0);
        let h = WarpedModel::hyperbolic(3, 10.0).unwrap();
        assert!((ricci_radial(&h).value(2.0) + 2.0).abs() < 1e-14);
        let c = WarpedModel::cusp(10.0).unwrap();
        assert!((ricci_radial(&c).value(2.0) + 0.25).abs() < 1e-14);
        assert!(ricci_radial(&e).try_value(0.0).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(WarpedModel::euclidean(1, 10.0).is_err());
        assert!(WarpedModel::euclidean(3, -1.0).is_err());
        let neg = RadialProfile::closed(ClosedForm::Polynomial(vec![1.0, -1.0]), 0.0, 5.0);
        assert!(WarpedModel::custom(2, neg, 5.0).is_err());
        assert!(WarpedModel::cusp(20.0).unwrap().has_finite_volume());
        assert!(!WarpedModel::hyperbolic(3, 20.0).unwrap().has_finite_volume());
        assert!(WarpedModel::euclidean(3, 20.0).unwrap().has_pole());
        assert!(!WarpedModel::cusp(20.0).unwrap().has_pole());
    }

    #[test]
    fn glued_cone_warp() {
        let m = WarpedModel::glued_cone(3, 5.0, 0.5, 60.0, 0.1).unwrap();
        assert!((m.warp().value(2.0) - 2.0).abs() < 1e-9);
        assert!((m.warp().value(25.0) - 15.0).abs() < 1e-9);
        assert!(!m.has_finite_volume());
    }

    #[test]
    fn soliton_construction() {
        let g = make_soliton(SolitonStructure::Gaussian, 3, 0).unwrap();
        assert_eq!(g.scalar_curvature(), 0.0);
        assert_eq!(g.rho(7.0), 7.0);
        let c = make_soliton(SolitonStructure::Cylinder, 4, 2).unwrap();
        assert!((c.sphere_radius() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.scalar_curvature(), 1.0);
        assert!((c.rho(3.0) - 13f64.sqrt()).abs() < 1e-15);
        assert!((c.ricci_eigenvalues().0 - 0.5).abs() < 1e-15);
        assert!(make_soliton(SolitonStructure::Cylinder, 4, 1).is_err());
        assert!(make_soliton(SolitonStructure::Cylinder, 4, 4).is_err());
        assert!(make_soliton(SolitonStructure::Gaussian, 3, 1).is_err());
    }

    #[test]
    fn soliton_delta_rho_routes_agree() {
        let g = make_soliton(SolitonStructure::Gaussian, 3, 0).unwrap();
        let dg = soliton_delta_rho(&g);
        assert!((dg.value(4.0) - 0.5).abs() < 1e-15);
        assert!(dg.try_value(0.0).is_err());

        let c = make_soliton(SolitonStructure::Cylinder, 4, 2).unwrap();
        let dc = soliton_delta_rho(&c);
        // At ρ = 2 (s = 0): 3/2 - 1 + 4/8.
        assert!((dc.value(2.0) - 1.0).abs() < 1e-15);
        for i in 1..200 {
            let s = 0.05 * i as f64;
            let rho = c.rho(s);
            let closed = dc.value(rho);
            let direct = c.delta_rho_flat_factor(s).unwrap();
            assert!((closed - direct).abs() < 1e-13 * closed.abs().max(1.0), "s={s}");
            assert!(closed >= -2.0 * c.scalar_curvature() / rho);
        }
    }
}
