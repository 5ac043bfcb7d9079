//! Choosing the outer radius (infinite volume) or inner radius (finite volume)
//! of the annulus carrying a test function.

use crate::error::{invalid, Result};

fn sorted(grid: &[f64]) -> Result<()> {
    if grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(invalid("annulus grid must be sorted"));
    }
    Ok(())
}

/// Smallest grid `y` with `V(y + R) ≤ 2 V(y)`; `None` when the grid is exhausted.
pub fn select_annulus_infinite(v: impl Fn(f64) -> f64, scale_r: f64, y_grid: &[f64]) -> Result<Option<f64>> {
    sorted(y_grid)?;
    // Past overflow the doubling test is meaningless, so the scan stops there.
    for &y in y_grid {
        let (inner, outer) = (v(y), v(y + scale_r));
        if !inner.is_finite() || !outer.is_finite() {
            return Ok(None);
        }
        if 0.5 * outer <= inner {
            return Ok(Some(y));
        }
    }
    Ok(None)
}

/// Smallest grid `x` with `2ε f(x-R) - C f'(x-R) ≤ 4ε f(x)` for the tail
/// volume `f = vol(M) - V`; `f'` by centered differences.
pub fn select_annulus_finite(
    f: impl Fn(f64) -> f64,
    scale_r: f64,
    eps: f64,
    c: f64,
    x_grid: &[f64],
) -> Result<Option<f64>> {
    sorted(x_grid)?;
    for &x in x_grid {
        let fx = f(x);
        if !(fx > 0.0) {
            return Err(invalid(format!("tail volume must be positive, f({x}) = {fx}")));
        }
        let s = x - scale_r;
        let h = 1e-5 * s.abs().max(1.0);
        let df = (f(s + h) - f(s - h)) / (2.0 * h);
        if 2.0 * eps * f(s) - c * df <= 4.0 * eps * fx {
            return Ok(Some(x));
        }
    }
    Ok(None)
}
