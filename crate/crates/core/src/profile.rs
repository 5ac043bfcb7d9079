//! One-dimensional radial functions with first and second derivatives.
//!
//! A [`RadialProfile`] is either a named closed-form family, a tabulated
//! interpolant, or a derived function assembled from other profiles. Every
//! representation answers [`RadialProfile::jet`] with value, first and second
//! derivative at a radius.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, invalid, Result};

/// Value and first two derivatives of a radial function at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }
}

/// Closed-form families used for warps, envelopes and test inputs.
#[derive(Clone, Debug, PartialEq)]
pub enum ClosedForm {
    /// `sum_k c[k] r^k`
    Polynomial(Vec<f64>),
    /// `scale * sinh(r)`
    Sinh { scale: f64 },
    /// `amplitude * exp(rate * r)`
    Exponential { amplitude: f64, rate: f64 },
    /// `coef / (shift + r)^power`
    InversePower { coef: f64, shift: f64, power: f64 },
}

impl ClosedForm {
    pub fn jet(&self, r: f64) -> Jet {
        match self {
            ClosedForm::Polynomial(c) => {
                // Horner for p, p', p'' simultaneously.
                let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
                for &ck in c.iter().rev() {
                    ddp = ddp * r + 2.0 * dp;
                    dp = dp * r + p;
                    p = p * r + ck;
                }
                Jet::new(p, dp, ddp)
            }
            ClosedForm::Sinh { scale } => {
                let (s, c) = (r.sinh(), r.cosh());
                Jet::new(scale * s, scale * c, scale * s)
            }
            ClosedForm::Exponential { amplitude, rate } => {
                let v = amplitude * (rate * r).exp();
                Jet::new(v, rate * v, rate * rate * v)
            }
            ClosedForm::InversePower { coef, shift, power } => {
                let b = shift + r;
                let v = coef * b.powf(-power);
                Jet::new(v, -power * v / b, power * (power + 1.0) * v / (b * b))
            }
        }
    }
}

/// Natural cubic spline through `(x_i, y_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

fn check_knots(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(invalid("knot and value arrays differ in length"));
    }
    if xs.len() < 2 {
        return Err(invalid("at least two knots are required"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(invalid("non-finite knot or value"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("knots must be strictly increasing"));
    }
    Ok(())
}

/// Index `i` with `xs[i] <= x < xs[i+1]`, clamped to the first/last cell.
fn cell(xs: &[f64], x: f64) -> usize {
    let k = xs.partition_point(|&v| v <= x);
    k.saturating_sub(1).min(xs.len() - 2)
}

impl CubicSpline {
    pub fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_knots(&xs, &ys)?;
        let n = xs.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second-derivative system.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut sup = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                sup[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for i in 1..k {
                let sub = xs[i + 1] - xs[i];
                let w = sub / diag[i - 1];
                diag[i] -= w * sup[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - sup[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { xs, ys, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn jet(&self, x: f64) -> Jet {
        let i = cell(&self.xs, x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        Jet::new(value, d1, d2)
    }
}

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch–Carlson).
/// Monotone data stays monotone, which tabulated envelopes rely on.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_knots(&xs, &ys)?;
        let n = xs.len();
        let secant: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secant[0];
        slopes[n - 1] = secant[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secant[i - 1], secant[i]);
            if a * b <= 0.0 {
                slopes[i] = 0.0;
            } else {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn jet(&self, x: f64) -> Jet {
        let i = cell(&self.xs, x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let (t2, t3) = (t * t, t * t * t);
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let d1 = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1;
        let d2 = (12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * m1;
        Jet::new(value, d1 / h, d2 / (h * h))
    }
}

type JetFn = dyn Fn(f64) -> Jet + Send + Sync;

#[derive(Clone)]
enum Repr {
    Closed(ClosedForm),
    Spline(CubicSpline),
    Monotone(MonotoneCubic),
    Derived(Arc<JetFn>),
}

/// A radial function on a closed interval `[lo, hi]`.
#[derive(Clone)]
pub struct RadialProfile {
    repr: Repr,
    lo: f64,
    hi: f64,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Closed(c) => format!("{c:?}"),
            Repr::Spline(s) => format!("Spline({} knots)", s.xs.len()),
            Repr::Monotone(s) => format!("Monotone({} knots)", s.xs.len()),
            Repr::Derived(_) => "Derived".to_string(),
        };
        f.debug_struct("RadialProfile")
            .field("repr", &kind)
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish()
    }
}

impl RadialProfile {
    pub fn closed(form: ClosedForm, lo: f64, hi: f64) -> Self {
        Self { repr: Repr::Closed(form), lo, hi }
    }

    /// Natural cubic spline through the samples; domain is the knot span.
    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let (lo, hi) = (xs.first().copied().unwrap_or(0.0), xs.last().copied().unwrap_or(0.0));
        Ok(Self { repr: Repr::Spline(CubicSpline::natural(xs, ys)?), lo, hi })
    }

    /// Monotonicity-preserving tabulation.
    pub fn tabulated_monotone(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let (lo, hi) = (xs.first().copied().unwrap_or(0.0), xs.last().copied().unwrap_or(0.0));
        Ok(Self { repr: Repr::Monotone(MonotoneCubic::new(xs, ys)?), lo, hi })
    }

    pub fn from_jet_fn(lo: f64, hi: f64, f: impl Fn(f64) -> Jet + Send + Sync + 'static) -> Self {
        Self { repr: Repr::Derived(Arc::new(f)), lo, hi }
    }

    /// Profile known only through its values; derivatives by central differences.
    pub fn from_value_fn(lo: f64, hi: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_jet_fn(lo, hi, move |r| {
            let h = 1e-4 * r.abs().max(1.0);
            let (fm, f0, fp) = (f(r - h), f(r), f(r + h));
            Jet::new(f0, (fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
        })
    }

    pub fn constant(c: f64, lo: f64, hi: f64) -> Self {
        Self::closed(ClosedForm::Polynomial(vec![c]), lo, hi)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        match &self.repr {
            Repr::Closed(c) => Some(c),
            _ => None,
        }
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.lo = lo;
        self.hi = hi;
        self
    }

    /// Unchecked evaluation; tabulated profiles extrapolate with their end cells.
    pub fn jet(&self, r: f64) -> Jet {
        match &self.repr {
            Repr::Closed(c) => c.jet(r),
            Repr::Spline(s) => s.jet(r),
            Repr::Monotone(s) => s.jet(r),
            Repr::Derived(f) => f(r),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).value
    }

    pub fn d1(&self, r: f64) -> f64 {
        self.jet(r).d1
    }

    pub fn d2(&self, r: f64) -> f64 {
        self.jet(r).d2
    }

    pub fn contains(&self, r: f64) -> bool {
        let slack = 1e-12 * r.abs().max(1.0);
        r >= self.lo - slack && r <= self.hi + slack
    }

    /// Checked evaluation: `r` must lie in the domain and the jet must be finite.
    pub fn try_jet(&self, r: f64) -> Result<Jet> {
        if !self.contains(r) {
            return Err(domain(format!("r = {r} outside [{}, {}]", self.lo, self.hi)));
        }
        let j = self.jet(r);
        if !j.is_finite() {
            return Err(domain(format!("profile not finite at r = {r}")));
        }
        Ok(j)
    }

    pub fn try_value(&self, r: f64) -> Result<f64> {
        self.try_jet(r).map(|j| j.value)
    }
}
