//! Plateau cutoffs built from the quintic smoothstep `6t⁵ - 15t⁴ + 10t³`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::profile::Jet;

fn smoothstep(t: f64) -> Jet {
    if t <= 0.0 {
        return Jet::new(0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return Jet::new(1.0, 0.0, 0.0);
    }
    let t2 = t * t;
    Jet::new(
        t2 * t * (10.0 - 15.0 * t + 6.0 * t2),
        30.0 * t2 * (1.0 - t) * (1.0 - t),
        60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
    )
}

/// `ψ ≡ 1` on `[s0, s1]`, unit-width ramps on both sides, `ψ = 0` outside `[s0 - 1, s1 + 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffProfile {
    pub s0: f64,
    pub s1: f64,
    /// `sup |ψ'| + |ψ''|`.
    pub budget: f64,
    /// `sup |ψ''|`.
    pub max_d2: f64,
}

pub const BUDGET_GRID: usize = 100_000;

pub fn build_cutoff(s0: f64, s1: f64) -> Result<CutoffProfile> {
    if !(s1 >= s0) || !s0.is_finite() || !s1.is_finite() {
        return Err(invalid(format!("cutoff plateau [{s0}, {s1}] is empty or not finite")));
    }
    // Both ramps are the same curve, so the sup over one ramp is the sup over ψ.
    let (mut budget, mut max_d2) = (0.0f64, 0.0f64);
    for i in 0..=BUDGET_GRID {
        let j = smoothstep(i as f64 / BUDGET_GRID as f64);
        budget = budget.max(j.d1.abs() + j.d2.abs());
        max_d2 = max_d2.max(j.d2.abs());
    }
    Ok(CutoffProfile { s0, s1, budget, max_d2 })
}

impl CutoffProfile {
    pub fn jet(&self, s: f64) -> Jet {
        if s < self.s0 {
            smoothstep(s - (self.s0 - 1.0))
        } else if s <= self.s1 {
            Jet::new(1.0, 0.0, 0.0)
        } else {
            let j = smoothstep(self.s1 + 1.0 - s);
            Jet::new(j.value, -j.d1, j.d2)
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.s0 - 1.0, self.s1 + 1.0)
    }

    /// Points where `ψ` changes formula: support ends and plateau ends.
    pub fn breaks(&self) -> [f64; 4] {
        [self.s0 - 1.0, self.s0, self.s1, self.s1 + 1.0]
    }
}
