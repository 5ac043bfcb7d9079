//! Finite-difference radial Laplacian `u ↦ -(w u')'/w` on a truncated domain,
//! symmetrized to a tridiagonal matrix and solved by Sturm-sequence bisection.
//!
//! Nodes are `r_i = a + i h`. Away from a pole both ends carry the boundary
//! condition; at a pole (`g(a) = 0`) the first node is `a + h`, the face flux
//! at the pole vanishes, and only the outer end carries a condition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::WarpedModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub h: f64,
    pub domain: (f64, f64),
    pub bc: BoundaryCondition,
    /// Whether the inner end is a pole of the warp (no boundary condition there).
    pub pole: bool,
}

impl TridiagonalOperator {
    /// Build directly from entries (mostly for tests).
    pub fn from_entries(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(invalid("off-diagonal must have one entry fewer than the diagonal"));
        }
        Ok(Self { diag, off, h: 1.0, domain: (0.0, 1.0), bc: BoundaryCondition::Dirichlet, pole: false })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Rows removed from the Neumann matrix to obtain the Dirichlet one.
    pub fn removed_rows(&self) -> usize {
        if self.pole { 1 } else { 2 }
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let rad = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - rad);
            hi = hi.max(self.diag[i] + rad);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sylvester inertia of `A - x`).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        let tiny = f64::MIN_POSITIVE.sqrt();
        for i in 0..self.len() {
            let e2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th eigenvalue (0-based, ascending) by bisection to `tol`.
    pub fn eigenvalue(&self, k: usize, tol: f64) -> Option<f64> {
        if k >= self.len() {
            return None;
        }
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        lo -= pad;
        hi += pad;
        while hi - lo > tol && hi - lo > 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

fn check_weight(w: f64, r: f64) -> Result<f64> {
    if w > 0.0 && w.is_finite() {
        Ok(w)
    } else {
        Err(invalid(format!("weight must be positive and finite in the window, w({r}) = {w}")))
    }
}

/// Discretize `-(w u')'/w` on `[a, b]` with `n` intervals.
pub fn assemble_weighted(
    w: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    n: usize,
    bc: BoundaryCondition,
    pole: bool,
) -> Result<TridiagonalOperator> {
    if n < 2 || !(b > a) {
        return Err(invalid(format!("need b > a and at least two intervals (a = {a}, b = {b}, n = {n})")));
    }
    let h = (b - a) / n as f64;
    let node = |i: usize| a + i as f64 * h;
    let first = if pole || bc == BoundaryCondition::Dirichlet { 1 } else { 0 };
    let last = if bc == BoundaryCondition::Dirichlet { n - 1 } else { n };
    if last < first {
        return Err(invalid("no unknowns left after boundary conditions"));
    }
    let mut mass = Vec::with_capacity(last - first + 1);
    for i in first..=last {
        let half = bc == BoundaryCondition::Neumann && (i == n || (i == 0 && !pole));
        mass.push(check_weight(w(node(i)), node(i))? * h * if half { 0.5 } else { 1.0 });
    }
    // Face weights w_{i+1/2} for the faces adjacent to unknowns.
    let face = |i: usize| -> Result<f64> {
        let r = a + (i as f64 + 0.5) * h;
        check_weight(w(r), r)
    };
    let count = last - first + 1;
    let mut diag = vec![0.0; count];
    let mut off = vec![0.0; count - 1];
    for (k, i) in (first..=last).enumerate() {
        let left = if i == 0 || (pole && i == 1) { 0.0 } else { face(i - 1)? };
        let right = if i == n { 0.0 } else { face(i)? };
        diag[k] = (left + right) / (h * mass[k]);
        if k + 1 < count {
            off[k] = -right / (h * mass[k].sqrt() * mass[k + 1].sqrt());
        }
    }
    Ok(TridiagonalOperator { diag, off, h, domain: (a, b), bc, pole })
}

/// The model's radial operator on `[r_lo, big_l]` with `n` intervals.
pub fn assemble_radial_operator(
    model: &WarpedModel,
    big_l: f64,
    n: usize,
    bc: BoundaryCondition,
) -> Result<TridiagonalOperator> {
    if n < 16 {
        return Err(invalid(format!("need N ≥ 16, got {n}")));
    }
    if big_l > model.r_max() {
        return Err(invalid(format!("L = {big_l} exceeds r_max = {}", model.r_max())));
    }
    assemble_weighted(|r| model.weight(r), model.r_lo(), big_l, n, bc, model.has_pole())
}

pub const EIGEN_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumApprox {
    pub eigenvalues: Vec<f64>,
    pub interval: (f64, f64),
    pub l: f64,
    pub n: usize,
    pub bc: BoundaryCondition,
}

impl SpectrumApprox {
    /// Number of eigenvalues in `[lo, hi)`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        self.eigenvalues.iter().filter(|&&e| e >= lo && e < hi).count()
    }

    /// Counts over `parts` equal subintervals of the query interval (finite intervals only).
    pub fn counts(&self, parts: usize) -> Vec<usize> {
        let (lo, hi) = self.interval;
        let step = (hi - lo) / parts as f64;
        (0..parts).map(|j| self.count_in(lo + j as f64 * step, lo + (j + 1) as f64 * step)).collect()
    }
}

/// All eigenvalues in `[lo, hi)`; empty when the interval misses the Gershgorin hull.
pub fn eig_tridiagonal(op: &TridiagonalOperator, lo: f64, hi: f64) -> SpectrumApprox {
    let (k0, k1) = (op.count_below(lo), op.count_below(hi));
    let eigenvalues = (k0..k1)
        .into_par_iter()
        .map(|k| op.eigenvalue(k, EIGEN_TOLERANCE).expect("index below count"))
        .collect();
    SpectrumApprox { eigenvalues, interval: (lo, hi), l: op.domain.1, n: op.len(), bc: op.bc }
}

/// The `count` smallest eigenvalues.
pub fn smallest_eigenvalues(op: &TridiagonalOperator, count: usize) -> Vec<f64> {
    (0..count.min(op.len()))
        .into_par_iter()
        .map(|k| op.eigenvalue(k, EIGEN_TOLERANCE).expect("index below size"))
        .collect()
}

/// Largest gap in `{0} ∪ eigenvalues ∪ {cap}` (eigenvalues below `cap`).
pub fn max_gap(eigenvalues: &[f64], cap: f64) -> f64 {
    let mut pts = vec![0.0];
    pts.extend(eigenvalues.iter().copied().filter(|&e| e < cap));
    pts.push(cap);
    pts.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationRow {
    pub l: f64,
    pub bc: BoundaryCondition,
    pub eigenvalues: Vec<f64>,
    pub max_gap: f64,
    pub bottom: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FillInReport {
    pub cap: f64,
    pub rows: Vec<TruncationRow>,
    /// `gap(L_{i+1}) / gap(L_i)` for the Dirichlet rows.
    pub gap_ratios: Vec<f64>,
    /// Every ratio within 25% of `L_i / L_{i+1}`.
    pub fills: bool,
    /// Dirichlet bottoms, one per `L`.
    pub bottoms: Vec<f64>,
    /// `count_D ≤ count_N + removed rows` on every unit subinterval of `[0, cap]`.
    pub bracketing_holds: bool,
}

pub fn estimate_essential_spectrum(
    model: &WarpedModel,
    cap: f64,
    l_list: &[f64],
    n_per_l: usize,
) -> Result<FillInReport> {
    if l_list.is_empty() || l_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("L list must be nonempty and increasing"));
    }
    if !(cap > 0.0) {
        return Err(invalid("cap must be positive"));
    }
    let jobs: Vec<(f64, BoundaryCondition)> = l_list
        .iter()
        .flat_map(|&l| [(l, BoundaryCondition::Dirichlet), (l, BoundaryCondition::Neumann)])
        .collect();
    let ops: Vec<TridiagonalOperator> = jobs
        .par_iter()
        .map(|&(l, bc)| assemble_radial_operator(model, l, n_per_l, bc))
        .collect::<Result<_>>()?;
    let rows: Vec<TruncationRow> = ops
        .par_iter()
        .map(|op| {
            let spec = eig_tridiagonal(op, f64::NEG_INFINITY, cap);
            TruncationRow {
                l: op.domain.1,
                bc: op.bc,
                max_gap: max_gap(&spec.eigenvalues, cap),
                bottom: op.eigenvalue(0, EIGEN_TOLERANCE),
                eigenvalues: spec.eigenvalues,
            }
        })
        .collect();

    let mut bracketing_holds = true;
    for pair in ops.chunks(2) {
        let (d, n) = (&pair[0], &pair[1]);
        let k = d.removed_rows();
        let steps = cap.ceil().max(1.0) as usize;
        for j in 0..steps {
            let (lo, hi) = (j as f64 * cap / steps as f64, (j + 1) as f64 * cap / steps as f64);
            let cd = d.count_below(hi) - d.count_below(lo);
            let cn = n.count_below(hi) - n.count_below(lo);
            bracketing_holds &= cd <= cn + k;
        }
    }

    let dirichlet: Vec<&TruncationRow> = rows.iter().filter(|r| r.bc == BoundaryCondition::Dirichlet).collect();
    let gap_ratios: Vec<f64> = dirichlet.windows(2).map(|w| w[1].max_gap / w[0].max_gap).collect();
    let fills = !gap_ratios.is_empty()
        && dirichlet.windows(2).zip(&gap_ratios).all(|(w, &ratio)| {
            let expected = w[0].l / w[1].l;
            (ratio - expected).abs() <= 0.25 * expected
        });
    let bottoms = dirichlet.iter().map(|r| r.bottom.unwrap_or(f64::NAN)).collect();
    Ok(FillInReport { cap, rows, gap_ratios, fills, bottoms, bracketing_holds })
}
