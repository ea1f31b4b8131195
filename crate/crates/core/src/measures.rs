//! Discrete weighted volume and Crofton-stencil perimeters.
//!
//! A boundary crossing is an ordered pair `(p, p + d_k)` with `p` in the set
//! and `p + d_k` outside it (or off the grid). Every perimeter in this module
//! is a sum of [`Anisotropy::crossing_weight`] over a class of crossings, so
//! a crossing is enumerated exactly once whichever decomposition is asked for.

use crate::anisotropy::{Anisotropy, Stencil};
use crate::error::{CheegerError, Result};
use crate::grid::{CellSet, ScalarField};
use crate::scalar::Scalar;

/// `Σ_{p ∈ E} f(p) h²`.
pub fn weighted_volume<T: Scalar>(set: &CellSet<T>, f: &ScalarField<T>) -> Result<T> {
    if set.grid() != f.grid() {
        return Err(CheegerError::GridMismatch("set and volume weight"));
    }
    let area = set.grid().cell_area();
    Ok(set.cells().map(|c| f.value(c)).sum::<T>() * area)
}

/// Crofton estimate of `∫_{∂*E} g(x, ν_E) dH¹`.
pub fn weighted_perimeter<T: Scalar>(set: &CellSet<T>, g: &Anisotropy<T>) -> Result<T> {
    if set.grid() != g.grid() {
        return Err(CheegerError::GridMismatch("set and surface weight"));
    }
    let grid = set.grid();
    let mut total = T::zero();
    for p in set.cells() {
        for (k, &d) in g.stencil().directions().iter().enumerate() {
            let q = grid.offset(p, d);
            if q.map_or(true, |q| !set.contains(q)) {
                total = total + g.crossing_weight(p, q, k);
            }
        }
    }
    Ok(total)
}

/// Perimeter with the unit weight on the given stencil.
pub fn euclidean_perimeter<T: Scalar>(set: &CellSet<T>, stencil: Stencil) -> T {
    let g = Anisotropy::euclidean(*set.grid(), stencil);
    weighted_perimeter(set, &g).expect("grid taken from the set")
}

/// One stencil crossing out of a set: source cell, target cell (None when it
/// leaves the grid) and direction index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Crossing {
    pub from: usize,
    pub to: Option<usize>,
    pub direction: usize,
}

/// Every crossing out of `set`, in enumeration order.
pub fn crossings<T: Scalar>(set: &CellSet<T>, stencil: Stencil) -> Vec<Crossing> {
    let grid = set.grid();
    let mut out = Vec::new();
    for p in set.cells() {
        for (k, &d) in stencil.directions().iter().enumerate() {
            let q = grid.offset(p, d);
            if q.map_or(true, |q| !set.contains(q)) {
                out.push(Crossing { from: p, to: q, direction: k });
            }
        }
    }
    out
}

/// `P_g(E)` split into the part inside the parent `A` and the part on `∂A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerimeterDecomposition<T> {
    /// `P_g(E; A)`: crossings from `E` into `A \ E`.
    pub interior: T,
    /// `P_g(E; ∂A)`: crossings from `E` out of `A`.
    pub boundary: T,
    /// `interior + boundary`.
    pub total: T,
}

pub fn relative_perimeters<T: Scalar>(
    set: &CellSet<T>,
    parent: &CellSet<T>,
    g: &Anisotropy<T>,
) -> Result<PerimeterDecomposition<T>> {
    if set.grid() != g.grid() {
        return Err(CheegerError::GridMismatch("set and surface weight"));
    }
    if !set.is_subset_of(parent)? {
        return Err(CheegerError::NotSubset);
    }
    let grid = set.grid();
    let mut interior = T::zero();
    let mut boundary = T::zero();
    for p in set.cells() {
        for (k, &d) in g.stencil().directions().iter().enumerate() {
            let q = grid.offset(p, d);
            match q {
                Some(q) if set.contains(q) => {}
                Some(q) if parent.contains(q) => interior = interior + g.crossing_weight(p, Some(q), k),
                _ => boundary = boundary + g.crossing_weight(p, q, k),
            }
        }
    }
    Ok(PerimeterDecomposition { interior, boundary, total: interior + boundary })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparabilityReport<T> {
    pub weighted: T,
    pub euclidean: T,
    pub comparability: T,
    /// `P̂_g / P̂`.
    pub ratio: T,
    /// `P̂_g / (P̂ / C)`, at least 1 when the lower bound holds.
    pub lower_margin: T,
    /// `C P̂ / P̂_g`, at least 1 when the upper bound holds.
    pub upper_margin: T,
}

/// Checks `(1/C) P̂(E) <= P̂_g(E) <= C P̂(E)` crossing by crossing, then in total.
///
/// For the empty set both perimeters vanish and the ratios are reported as 1.
pub fn comparability_check<T: Scalar>(set: &CellSet<T>, g: &Anisotropy<T>) -> Result<ComparabilityReport<T>> {
    if set.grid() != g.grid() {
        return Err(CheegerError::GridMismatch("set and surface weight"));
    }
    let c = g.comparability();
    let slack = T::one() + T::lit(1e-12);
    let unit = Anisotropy::euclidean(*g.grid(), g.stencil());
    let mut weighted = T::zero();
    let mut euclidean = T::zero();
    for x in crossings(set, g.stencil()) {
        let w = g.crossing_weight(x.from, x.to, x.direction);
        let e = unit.crossing_weight(x.from, x.to, x.direction);
        let r = w / e;
        if r > c * slack || r * c * slack < T::one() {
            return Err(CheegerError::Comparability {
                cell: x.from,
                direction: x.direction,
                ratio: r.to_f64_lossy(),
                bound: c.to_f64_lossy(),
            });
        }
        weighted = weighted + w;
        euclidean = euclidean + e;
    }
    if euclidean == T::zero() {
        return Ok(ComparabilityReport {
            weighted,
            euclidean,
            comparability: c,
            ratio: T::one(),
            lower_margin: T::one(),
            upper_margin: T::one(),
        });
    }
    let report = ComparabilityReport {
        weighted,
        euclidean,
        comparability: c,
        ratio: weighted / euclidean,
        lower_margin: weighted * c / euclidean,
        upper_margin: c * euclidean / weighted,
    };
    if report.lower_margin * slack < T::one() || report.upper_margin * slack < T::one() {
        return Err(CheegerError::Comparability {
            cell: usize::MAX,
            direction: usize::MAX,
            ratio: report.ratio.to_f64_lossy(),
            bound: c.to_f64_lossy(),
        });
    }
    Ok(report)
}

/// Volume `ω_n` of the unit ball in `R^n`.
pub fn unit_ball_volume<T: Scalar>(n: usize) -> T {
    // ω_0 = 1, ω_1 = 2, ω_n = (2π / n) ω_{n-2}
    let two_pi = T::PI() + T::PI();
    let mut w = if n % 2 == 0 { T::one() } else { T::lit(2.0) };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        w = w * two_pi / T::from_usize_lossy(k);
        k += 2;
    }
    w
}

/// Upper end `1* = n / (n - 1)` of the admissible exponent range.
pub fn alpha_upper<T: Scalar>(n: usize) -> T {
    T::from_usize_lossy(n) / T::from_usize_lossy(n - 1)
}

pub fn check_alpha<T: Scalar>(n: usize, alpha: T) -> Result<()> {
    let upper = alpha_upper::<T>(n);
    if !(alpha >= T::one() && alpha < upper) {
        return Err(CheegerError::AlphaOutOfRange { alpha: alpha.to_f64_lossy(), upper: upper.to_f64_lossy() });
    }
    Ok(())
}

/// `P(B_r) / |B_r|^{1/α} = n ω_n^{1 - 1/α} r^{n - 1 - n/α}`.
pub fn ball_ratio<T: Scalar>(n: usize, r: T, alpha: T) -> Result<T> {
    if n < 2 {
        return Err(CheegerError::InvalidInput(format!("dimension must be at least 2, got {n}")));
    }
    if !(r > T::zero()) {
        return Err(CheegerError::InvalidInput(format!("radius must be positive, got {r}")));
    }
    check_alpha(n, alpha)?;
    let nf = T::from_usize_lossy(n);
    let inv = T::one() / alpha;
    Ok(nf * unit_ball_volume::<T>(n).powf(T::one() - inv) * r.powf(nf - T::one() - nf * inv))
}

/// Constant of `|E|_f^{n-1} <= c P_g(E)^n`, obtained from `|E|_f <= ‖f‖_∞ |E|`,
/// the Euclidean isoperimetric inequality and `P <= C P_g`:
/// `c = ‖f‖_∞^{n-1} C^n / (n^n ω_n)`.
pub fn isoperimetric_constant<T: Scalar>(n: usize, f_sup: T, comparability: T) -> T {
    let nf = T::from_usize_lossy(n);
    f_sup.powi(n as i32 - 1) * comparability.powi(n as i32) / (nf.powi(n as i32) * unit_ball_volume::<T>(n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoperimetricReport<T> {
    pub weighted_volume: T,
    pub weighted_perimeter: T,
    /// `c^{1/(n-1)} P̂_g^{n/(n-1)}`.
    pub bound: T,
    /// `bound / volume`; the check passes when this is at least `1 / (1 + slack)`.
    pub margin: T,
    pub passed: bool,
}

/// Planar form of the weighted isoperimetric inequality with discretization slack.
pub fn isoperimetric_check<T: Scalar>(
    set: &CellSet<T>,
    f: &ScalarField<T>,
    g: &Anisotropy<T>,
    slack: T,
) -> Result<IsoperimetricReport<T>> {
    let n = crate::grid::DIM;
    let vol = weighted_volume(set, f)?;
    let per = weighted_perimeter(set, g)?;
    let c = isoperimetric_constant(n, f.sup_norm(), g.comparability());
    let e = T::one() / T::from_usize_lossy(n - 1);
    let bound = c.powf(e) * per.powf(T::from_usize_lossy(n) * e);
    let margin = if vol > T::zero() { bound / vol } else { T::infinity() };
    Ok(IsoperimetricReport {
        weighted_volume: vol,
        weighted_perimeter: per,
        bound,
        margin,
        passed: vol <= (T::one() + slack) * bound,
    })
}
