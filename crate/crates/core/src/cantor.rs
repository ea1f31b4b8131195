//! The unit disk minus a thin neighbourhood of a fat Cantor set.
//!
//! Start from `C_0 = [−ε, ε] × {0}`. Step `i` removes from the middle of each
//! of the `2^{i−1}` closed segments of `C_{i−1}` an open segment of
//! half-length `δ_i = 2^{−2i} H¹(C_{i−1})`, so that
//! `H¹(C_i) = (1 − 2^{−i}) H¹(C_{i−1})` and the limit has length
//! `2ε ∏ (1 − 2^{−i}) > 0`. Over each removed segment sits a lens-shaped bump
//! `{|x − m| <= δ, |y| <= f_δ(x − m)}`; the domain is the disk minus the
//! closure of the bumps. The interval bookkeeping is exact; the raster only
//! resolves the levels whose gaps are at least one cell wide.

use crate::anisotropy::{Anisotropy, Stencil};
use crate::error::{CheegerError, Result};
use crate::grid::{CellSet, Grid, ScalarField};
use crate::measures::weighted_perimeter;
use crate::scalar::Scalar;
use crate::solver::{dinkelbach_solve, CheegerProblem, DinkelbachOptions};

/// Half-width of the square window holding the unit disk.
pub const WINDOW: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorSpec<T> {
    pub epsilon: T,
    pub depth: usize,
    /// Cells per side of the raster; rounded up to an odd count so that a
    /// row of cell centers lies on the segment. `None` for bookkeeping only.
    pub resolution: Option<usize>,
}

impl<T: Scalar> CantorSpec<T> {
    pub fn new(epsilon: T, depth: usize, resolution: Option<usize>) -> Result<Self> {
        if !(epsilon > T::zero() && epsilon < T::one()) {
            return Err(CheegerError::InvalidInput(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if resolution == Some(0) {
            return Err(CheegerError::InvalidInput("resolution must be positive".into()));
        }
        Ok(CantorSpec { epsilon, depth, resolution })
    }

    pub fn grid(&self) -> Result<Grid<T>> {
        let n = self.resolution.ok_or_else(|| CheegerError::InvalidInput("no raster resolution given".into()))?;
        let n = n | 1;
        let w = T::lit(WINDOW);
        Grid::new(n, n, (w + w) / T::from_usize_lossy(n), [-w, -w])
    }
}

/// A segment `[mid − half, mid + half] × {0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub level: usize,
    pub mid: T,
    pub half: T,
}

impl<T: Scalar> Segment<T> {
    pub fn lo(&self) -> T {
        self.mid - self.half
    }

    pub fn hi(&self) -> T {
        self.mid + self.half
    }
}

#[derive(Debug, Clone)]
pub struct CantorSet<T> {
    pub epsilon: T,
    /// `δ_i` for `i = 1..=depth`.
    pub deltas: Vec<T>,
    /// `H¹(C_i)` from the recurrence, `i = 0..=depth`.
    pub lengths: Vec<T>,
    /// `H¹(C_i)` summed over the surviving intervals, `i = 0..=depth`.
    pub measured_lengths: Vec<T>,
    /// Removed open segments, level by level.
    pub removed: Vec<Segment<T>>,
    /// Closed intervals of `C_depth`, left to right.
    pub surviving: Vec<(T, T)>,
}

impl<T: Scalar> CantorSet<T> {
    pub fn depth(&self) -> usize {
        self.deltas.len()
    }

    /// `H¹(C_depth)`.
    pub fn measure(&self) -> T {
        *self.lengths.last().expect("level 0 always present")
    }

    pub fn removed_at(&self, level: usize) -> impl Iterator<Item = &Segment<T>> {
        self.removed.iter().filter(move |s| s.level == level)
    }

    /// Checks that no two removed segments overlap and that all lie in `[−ε, ε]`.
    pub fn check_disjoint(&self) -> Result<()> {
        let mut segs: Vec<&Segment<T>> = self.removed.iter().collect();
        segs.sort_by(|a, b| a.mid.partial_cmp(&b.mid).expect("finite midpoints"));
        for s in &segs {
            if s.lo() < -self.epsilon || s.hi() > self.epsilon {
                return Err(CheegerError::InvalidInput(format!("segment at {} leaves [-ε, ε]", s.mid)));
            }
        }
        for w in segs.windows(2) {
            if !(w[0].hi() < w[1].lo()) {
                return Err(CheegerError::InvalidInput(format!("segments at {} and {} overlap", w[0].mid, w[1].mid)));
            }
        }
        Ok(())
    }
}

/// Exact segment bookkeeping of `C_0 ⊃ C_1 ⊃ … ⊃ C_depth`.
pub fn build_cantor_set<T: Scalar>(spec: &CantorSpec<T>) -> CantorSet<T> {
    let eps = spec.epsilon;
    let mut surviving = vec![(-eps, eps)];
    // Per-survivor lengths, carried separately: endpoint differences lose
    // digits once the intervals are far smaller than their coordinates.
    let mut widths = vec![eps + eps];
    let mut lengths = vec![eps + eps];
    let mut measured_lengths = vec![eps + eps];
    let mut deltas = Vec::with_capacity(spec.depth);
    let mut removed = Vec::new();
    for i in 1..=spec.depth {
        let prev = lengths[i - 1];
        let delta = prev / T::lit(4.0).powi(i as i32);
        let mut next = Vec::with_capacity(surviving.len() * 2);
        let mut next_widths = Vec::with_capacity(surviving.len() * 2);
        for (&(a, b), &w) in surviving.iter().zip(&widths) {
            let mid = (a + b) / T::lit(2.0);
            removed.push(Segment { level: i, mid, half: delta });
            next.push((a, mid - delta));
            next.push((mid + delta, b));
            let half = (w - delta - delta) / T::lit(2.0);
            next_widths.push(half);
            next_widths.push(half);
        }
        surviving = next;
        widths = next_widths;
        deltas.push(delta);
        lengths.push((T::one() - T::lit(0.5).powi(i as i32)) * prev);
        measured_lengths.push(pairwise_sum(&widths));
    }
    CantorSet { epsilon: eps, deltas, lengths, measured_lengths, removed, surviving }
}

fn pairwise_sum<T: Scalar>(v: &[T]) -> T {
    match v.len() {
        0 => T::zero(),
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// `f_δ(x) = 1 − √(1 − (|x| − δ)²)` on `(−δ, δ)`, zero elsewhere.
pub fn bump_profile<T: Scalar>(x: T, delta: T) -> T {
    if x.abs() < delta {
        let u = x.abs() - delta;
        T::one() - (T::one() - u * u).sqrt()
    } else {
        T::zero()
    }
}

/// Area of `{|x| <= δ, |y| <= f_δ(x)}`: `4δ − 2δ√(1 − δ²) − 2 asin δ`.
pub fn bump_area<T: Scalar>(delta: T) -> T {
    let two = T::lit(2.0);
    two * two * delta - two * delta * (T::one() - delta * delta).sqrt() - two * delta.asin()
}

/// `2ε ∏_{i>=1} (1 − 2^{−i})`, the length of the limit set.
pub fn limit_measure<T: Scalar>(epsilon: T) -> T {
    let mut p = T::one();
    let mut t = T::one();
    for _ in 0..64 {
        t = t * T::lit(0.5);
        p = p * (T::one() - t);
    }
    (epsilon + epsilon) * p
}

#[derive(Debug, Clone)]
pub struct CantorDomain<T> {
    pub spec: CantorSpec<T>,
    pub set: CantorSet<T>,
    /// Deepest level whose gaps are resolved by the raster.
    pub resolved_depth: usize,
    pub omega: CellSet<T>,
}

impl<T: Scalar> CantorDomain<T> {
    pub fn removed_segments(&self) -> impl Iterator<Item = &Segment<T>> {
        self.set.removed.iter().filter(move |s| s.level <= self.resolved_depth)
    }

    pub fn cantor_measure_exact(&self) -> T {
        self.set.lengths[self.resolved_depth]
    }

    /// Exact area of the disk minus the resolved bumps.
    pub fn exact_area(&self) -> T {
        let bumps: T = self.removed_segments().map(|s| bump_area(s.half)).sum();
        T::PI() - bumps
    }
}

fn resolvable_depth<T: Scalar>(set: &CantorSet<T>, h: T) -> usize {
    set.deltas.iter().take_while(|&&d| d + d >= h).count()
}

fn rasterize<T: Scalar>(grid: Grid<T>, segs: &[Segment<T>]) -> CellSet<T> {
    CellSet::from_predicate(grid, |p| {
        if p[0] * p[0] + p[1] * p[1] >= T::one() {
            return false;
        }
        // the closed bump keeps its two endpoints, where the profile is zero
        !segs.iter().any(|s| (p[0] - s.mid).abs() <= s.half && p[1].abs() <= bump_profile(p[0] - s.mid, s.half))
    })
}

/// Rasterizes the domain, truncating at the deepest resolvable level (with a
/// warning) when the requested depth is too fine for the grid.
pub fn build_domain<T: Scalar>(spec: &CantorSpec<T>) -> Result<CantorDomain<T>> {
    let grid = spec.grid()?;
    let set = build_cantor_set(spec);
    let resolved = resolvable_depth(&set, grid.h());
    if resolved < spec.depth {
        log::warn!(
            "gap half-width {} at level {} is below the cell size {}; raster truncated at level {}",
            set.deltas[resolved],
            resolved + 1,
            grid.h(),
            resolved
        );
    }
    let segs: Vec<Segment<T>> = set.removed.iter().filter(|s| s.level <= resolved).copied().collect();
    let omega = rasterize(grid, &segs);
    if omega.is_empty() {
        return Err(CheegerError::DegenerateRasterization { radius: 1.0 });
    }
    Ok(CantorDomain { spec: *spec, set, resolved_depth: resolved, omega })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow<T> {
    pub depth: usize,
    /// `H¹(C_depth)`.
    pub cantor_measure: T,
    /// `P̂` of the domain truncated at this depth, when rasterized.
    pub raster_perimeter: Option<T>,
    /// `raster_perimeter + 2 H¹(C_depth)`: the residual segments counted on both sides.
    pub proxy: Option<T>,
    pub gap: T,
}

#[derive(Debug, Clone)]
pub struct GapReport<T> {
    pub rows: Vec<GapRow<T>>,
    /// `4ε ∏_{i>=1} (1 − 2^{−i})`.
    pub limit: T,
}

impl<T: Scalar> GapReport<T> {
    pub fn is_decreasing(&self) -> bool {
        self.rows.windows(2).skip(1).all(|w| w[1].gap < w[0].gap)
    }
}

/// Gap between the topological boundary proxy and the perimeter, bookkeeping
/// only, for depths `0..=depth`. By convention there is no residue at depth 0.
pub fn gap_bookkeeping<T: Scalar>(set: &CantorSet<T>) -> GapReport<T> {
    let rows = (0..=set.depth())
        .map(|d| {
            let m = set.lengths[d];
            GapRow {
                depth: d,
                cantor_measure: m,
                raster_perimeter: None,
                proxy: None,
                gap: if d == 0 { T::zero() } else { m + m },
            }
        })
        .collect();
    GapReport { rows, limit: T::lit(2.0) * limit_measure(set.epsilon) }
}

/// Gap report with raster perimeters (Euclidean, sixteen-direction stencil)
/// of the domain truncated at every resolved depth.
pub fn boundary_gap_report<T: Scalar>(d: &CantorDomain<T>) -> Result<GapReport<T>> {
    let grid = *d.omega.grid();
    let g = Anisotropy::euclidean(grid, Stencil::Crofton16);
    let mut report = gap_bookkeeping(&d.set);
    report.rows.truncate(d.resolved_depth + 1);
    for row in report.rows.iter_mut() {
        let segs: Vec<Segment<T>> = d.set.removed.iter().filter(|s| s.level <= row.depth).copied().collect();
        let per = weighted_perimeter(&rasterize(grid, &segs), &g)?;
        row.raster_perimeter = Some(per);
        row.proxy = Some(per + row.gap);
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct ProbeReport<T> {
    pub resolution: usize,
    pub domain_ratio: T,
    pub minimizer_ratio: T,
    pub minimizer: CellSet<T>,
    pub slack: T,
    /// No tested subset beats the whole domain by more than the slack.
    pub passed: bool,
    pub converged: bool,
}

/// Solves the uniform Euclidean problem with `α = 1` on the domain and
/// compares the minimizer's ratio with the domain's own.
pub fn self_cheeger_probe<T: Scalar>(d: &CantorDomain<T>, slack: T, opts: DinkelbachOptions<T>) -> Result<ProbeReport<T>> {
    let grid = *d.omega.grid();
    let p = CheegerProblem::new(
        d.omega.clone(),
        ScalarField::uniform(grid, T::one())?,
        Anisotropy::euclidean(grid, Stencil::Crofton16),
        T::one(),
    )?;
    let r = dinkelbach_solve(&p, opts)?;
    let domain_ratio = p.ratio(&d.omega)?;
    Ok(ProbeReport {
        resolution: grid.nx(),
        domain_ratio,
        minimizer_ratio: r.ratio,
        passed: r.ratio >= (T::one() - slack) * domain_ratio,
        minimizer: r.minimizer,
        slack,
        converged: r.converged,
    })
}

/// Reruns the probe at `2n + 1` cells per side while it fails, up to `ceiling`.
pub fn self_cheeger_probe_adaptive<T: Scalar>(
    spec: &CantorSpec<T>,
    slack: T,
    ceiling: usize,
    opts: DinkelbachOptions<T>,
) -> Result<Vec<ProbeReport<T>>> {
    let mut spec = *spec;
    let mut out = Vec::new();
    loop {
        let report = self_cheeger_probe(&build_domain(&spec)?, slack, opts)?;
        let n = report.resolution;
        let passed = report.passed;
        out.push(report);
        if passed || 2 * n + 1 > ceiling {
            return Ok(out);
        }
        spec.resolution = Some(2 * n + 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step() {
        let s = build_cantor_set(&CantorSpec::new(0.5, 1, None).unwrap());
        assert_eq!(s.removed.len(), 1);
        assert_eq!(s.removed[0].mid, 0.0);
        assert_eq!(2.0 * s.removed[0].half, 0.5);
        assert_eq!(s.measure(), 0.5);
        assert_eq!(s.measured_lengths[1], 0.5);
    }

    #[test]
    fn recurrence_and_disjointness() {
        let s = build_cantor_set(&CantorSpec::new(0.25, 12, None).unwrap());
        for i in 1..=12 {
            assert_eq!(s.removed_at(i).count(), 1 << (i - 1));
            let expect = (1.0 - 0.5f64.powi(i as i32)) * s.lengths[i - 1];
            assert!((s.measured_lengths[i] - expect).abs() <= 1e-12 * expect);
            assert!(s.deltas.get(i).map_or(true, |&d| d < s.deltas[i - 1]));
        }
        s.check_disjoint().unwrap();
    }

    #[test]
    fn limit_product() {
        let mut p = 1.0;
        for i in 1..200 {
            p *= 1.0 - 0.5f64.powi(i);
        }
        assert!((p - 0.288_788_095_086_602_4).abs() < 1e-15);
        assert!((limit_measure(0.5) - p).abs() < 1e-15);
    }

    #[test]
    fn bump_values() {
        let d = 0.3;
        assert_eq!(bump_profile(d, d), 0.0);
        assert_eq!(bump_profile(-d, d), 0.0);
        assert_eq!(bump_profile(0.0, d), 1.0 - (1.0f64 - d * d).sqrt());
        for k in 0..=100 {
            let x = -d + 2.0 * d * k as f64 / 100.0;
            assert_eq!(bump_profile(x, d), bump_profile(-x, d));
            assert!(bump_profile(x, d) <= d * d);
        }
    }

    #[test]
    fn bump_area_matches_quadrature() {
        for d in [0.01, 0.1, 0.3, 0.7] {
            // composite Simpson over [-δ, δ] of 2 f_δ
            let n = 20_000;
            let step = 2.0 * d / n as f64;
            let mut s = 0.0;
            for k in 0..=n {
                let x = -d + k as f64 * step;
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * 2.0 * bump_profile(x, d);
            }
            let quad = s * step / 3.0;
            assert!((quad - bump_area(d)).abs() <= 1e-9 * bump_area(d).max(1e-12), "{d}: {quad} vs {}", bump_area(d));
        }
    }

    #[test]
    fn depth_zero_is_disk() {
        let d = build_domain(&CantorSpec::new(0.1, 0, Some(65)).unwrap()).unwrap();
        let disk = crate::grid::make_disk(d.omega.grid().to_owned(), [0.0, 0.0], 1.0).unwrap();
        assert_eq!(d.omega.cardinality(), CellSet::from_predicate(*disk.grid(), |p| p[0] * p[0] + p[1] * p[1] < 1.0).cardinality());
        let r = boundary_gap_report(&d).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].gap, 0.0);
    }

    #[test]
    fn depth_one_notches_the_disk() {
        let d0 = build_domain(&CantorSpec::new(0.5, 0, Some(33)).unwrap()).unwrap();
        let d1 = build_domain(&CantorSpec::new(0.5, 1, Some(33)).unwrap()).unwrap();
        assert!(d1.omega.is_subset_of(&d0.omega).unwrap());
        assert!(d1.omega.cardinality() < d0.omega.cardinality());
    }

    #[test]
    fn truncation_at_resolution() {
        let d = build_domain(&CantorSpec::new(0.1, 6, Some(257)).unwrap()).unwrap();
        assert_eq!(d.resolved_depth, 2);
        assert_eq!(d.removed_segments().count(), 3);
    }

    #[test]
    fn gap_report_small() {
        let s = build_cantor_set(&CantorSpec::new(0.25, 5, None).unwrap());
        let r = gap_bookkeeping(&s);
        let mut prod = 1.0;
        for i in 1..=5 {
            prod *= 1.0 - 0.5f64.powi(i);
        }
        assert!((r.rows[5].gap - 2.0 * 0.5 * prod).abs() < 1e-15);
        assert!(r.is_decreasing());
        assert!(r.rows[5].gap > r.limit);
    }

    #[test]
    fn odd_grid_puts_centers_on_the_axis() {
        let g = CantorSpec::<f64>::new(0.1, 1, Some(64)).unwrap().grid().unwrap();
        assert_eq!(g.nx(), 65);
        assert!(g.center(g.index(32, 32))[1].abs() < 1e-15);
    }
}
