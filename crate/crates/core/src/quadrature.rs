//! Adaptive Gauss–Kronrod (7/15) integration on a partition, plus fixed
//! Gauss–Legendre rules for small smooth convolutions.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::error::{invalid, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 0.0, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            if self.abs_error == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            self.abs_error / self.value.abs()
        }
    }
}

/// One 15-point Kronrod panel: (integral, error estimate).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration over `[breaks[0], breaks[last]]`, starting
/// from the panels given by `breaks` (which must be nondecreasing).
pub fn integrate_partition(f: impl Fn(f64) -> f64, breaks: &[f64], opts: &QuadOptions) -> Result<QuadResult> {
    if breaks.len() < 2 {
        return Err(invalid("integration needs at least two break points"));
    }
    if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("break points must be finite and nondecreasing"));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let (mut total, mut err) = (0.0, 0.0);
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e) = gk15(&f, w[0], w[1]);
        evaluations += 15;
        total += v;
        err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    let target = |total: f64| opts.abs_tol.max(opts.rel_tol * total.abs());
    while err > target(total) && heap.len() < opts.max_intervals {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Recompute sums to shed accumulated cancellation in the running totals.
    let (value, abs_error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Ok(QuadResult { value, abs_error, evaluations, converged: abs_error <= target(value) })
}

pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    integrate_partition(f, &[a, b], opts)
}

/// Fixed Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule; nodes by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            if n == 1 {
                dp = 1.0;
                x = 0.0;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n == 1 {
            weights[0] = 2.0;
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        h * self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(c + h * x)).sum::<f64>()
    }

    /// Composite rule with `panels` equal panels.
    pub fn integrate_composite(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels).map(|k| self.integrate(&f, a + k as f64 * h, a + (k + 1) as f64 * h)).sum()
    }
}
