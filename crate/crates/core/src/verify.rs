//! Empirical estimates of the isoperimetric-type constants of a set `A`.
//!
//! Every estimator takes a supremum of a ratio over subsets `E` of `A` (or of
//! `A ∩ B_ρ(x)`). Small sets are enumerated exhaustively; larger ones are
//! probed with a deterministic family (half-plane cuts, boundary singletons)
//! plus random connected sets grown from random seeds. Sample `i` draws from
//! its own ChaCha stream, so a report depends only on the seed, never on the
//! thread count, and its witness can be regenerated from the sample index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::anisotropy::{Anisotropy, Stencil};
use crate::error::{CheegerError, Result};
use crate::grid::{subset_from_bits, CellSet, DEFAULT_ORACLE_CAP, DIM, FACE_OFFSETS};
use crate::measures::{relative_perimeters, unit_ball_volume};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions<T> {
    /// Maximum number of subsets examined per estimate.
    pub budget: usize,
    pub seed: u64,
    /// Relative slack allowed on the asserted inequalities.
    pub slack: T,
    /// Sets with at most this many cells are enumerated exhaustively when the
    /// budget allows it.
    pub exhaustive_cap: usize,
    /// Stencil of the unweighted perimeter.
    pub stencil: Stencil,
}

impl<T: Scalar> Default for VerifyOptions<T> {
    fn default() -> Self {
        VerifyOptions {
            budget: 1000,
            seed: 0,
            slack: T::lit(0.05),
            exhaustive_cap: DEFAULT_ORACLE_CAP,
            stencil: Stencil::Crofton16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Exhaustive,
    Sampled,
}

impl SampleMode {
    pub fn name(self) -> &'static str {
        match self {
            SampleMode::Exhaustive => "exhaustive",
            SampleMode::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone)]
pub struct InequalityReport<T> {
    /// Supremum of the ratio over the examined sets; 0 for an empty family.
    pub constant_estimate: T,
    /// A set attaining the supremum (empty when the family is empty).
    pub witness: CellSet<T>,
    pub samples: usize,
    pub mode: SampleMode,
    /// A set whose denominator vanished while its numerator did not.
    pub unbounded_witness: Option<CellSet<T>>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Split<T> {
    count: usize,
    /// `P(E; A)`.
    interior: T,
    /// `P(E; ∂A)`.
    boundary: T,
    /// `P(A \ E; ∂A)`.
    rest_boundary: T,
}

struct Evaluator<'a, T> {
    a: &'a CellSet<T>,
    g: &'a Anisotropy<T>,
    /// Cells of `A` with crossings leaving `A`, and the weight of those crossings.
    exits: Vec<(usize, T)>,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    fn new(a: &'a CellSet<T>, g: &'a Anisotropy<T>) -> Result<Self> {
        if a.grid() != g.grid() {
            return Err(CheegerError::GridMismatch("set and surface weight"));
        }
        let grid = a.grid();
        let mut exits = Vec::new();
        for p in a.cells() {
            let mut w = T::zero();
            for (k, &d) in g.stencil().directions().iter().enumerate() {
                let q = grid.offset(p, d);
                if q.map_or(true, |q| !a.contains(q)) {
                    w = w + g.crossing_weight(p, q, k);
                }
            }
            if w > T::zero() {
                exits.push((p, w));
            }
        }
        Ok(Evaluator { a, g, exits })
    }

    fn split(&self, cells: &[usize], in_e: &[bool]) -> Split<T> {
        let grid = self.a.grid();
        let mut interior = T::zero();
        let mut boundary = T::zero();
        for &p in cells {
            for (k, &d) in self.g.stencil().directions().iter().enumerate() {
                let q = grid.offset(p, d);
                match q {
                    Some(q) if in_e[q] => {}
                    Some(q) if self.a.contains(q) => interior = interior + self.g.crossing_weight(p, Some(q), k),
                    _ => boundary = boundary + self.g.crossing_weight(p, q, k),
                }
            }
        }
        let rest_boundary = self.exits.iter().filter(|(c, _)| !in_e[*c]).map(|&(_, w)| w).sum();
        Split { count: cells.len(), interior, boundary, rest_boundary }
    }
}

const HALF_PLANE_DIRECTIONS: usize = 16;

/// Candidate subsets of a region `R ⊆ A`, addressed by index.
struct Family<T> {
    grid: crate::grid::Grid<T>,
    cells: Vec<usize>,
    region: CellSet<T>,
    /// Whether `R` itself is a candidate.
    include_full: bool,
    mode: SampleMode,
    len: usize,
    /// `(direction, threshold)` of each half-plane cut `{⟨x, u⟩ <= t}`.
    cuts: Vec<(usize, T)>,
    singletons: Vec<usize>,
    seed: u64,
}

impl<T: Scalar> Family<T> {
    fn new(region: &CellSet<T>, parent: &CellSet<T>, include_full: bool, opts: &VerifyOptions<T>) -> Self {
        let grid = *region.grid();
        let cells = region.cell_list();
        let n = cells.len();
        let proper = if include_full { 0 } else { 1 };
        let mut fam = Family {
            grid,
            cells,
            region: region.clone(),
            include_full,
            mode: SampleMode::Sampled,
            len: 0,
            cuts: Vec::new(),
            singletons: Vec::new(),
            seed: opts.seed,
        };
        if n == 0 || (n == 1 && !include_full) {
            fam.mode = SampleMode::Exhaustive;
            return fam;
        }
        if n <= opts.exhaustive_cap.min(40) {
            let total = (1u64 << n) - 1 - proper;
            if opts.budget as u64 >= total {
                fam.mode = SampleMode::Exhaustive;
                fam.len = total as usize;
                return fam;
            }
        }

        let budget = opts.budget.max(1);
        let mut fixed = 0;
        if include_full {
            fixed += 1;
        }
        // half of the budget goes to half-plane cuts
        let per_dir = budget / 2 / HALF_PLANE_DIRECTIONS;
        for dir in 0..HALF_PLANE_DIRECTIONS {
            let u = half_plane_normal::<T>(dir);
            let mut proj: Vec<T> = fam.cells.iter().map(|&c| dot(grid.center(c), u)).collect();
            proj.sort_by(|a, b| a.partial_cmp(b).expect("finite projections"));
            proj.dedup();
            // the largest value would select all of R
            let usable = proj.len() - 1;
            if usable == 0 {
                continue;
            }
            let take = per_dir.min(usable);
            for t in 0..take {
                let rank = (t * usable) / take + usable / (2 * take);
                fam.cuts.push((dir, proj[rank.min(usable - 1)]));
            }
        }
        fixed += fam.cuts.len();
        // a quarter to singletons of cells on the boundary of A
        let bd: Vec<usize> = parent.boundary_cells().into_iter().filter(|&c| region.contains(c)).collect();
        let take = (budget / 4).min(bd.len());
        if take > 0 {
            fam.singletons = (0..take).map(|t| bd[t * bd.len() / take]).collect();
        }
        fixed += fam.singletons.len();
        fam.len = fixed.max(budget);
        fam
    }

    fn max_random_size(&self) -> usize {
        if self.include_full {
            self.cells.len()
        } else {
            self.cells.len() - 1
        }
    }

    /// Writes sample `i` into `out` (cleared first).
    fn generate(&self, i: usize, out: &mut Vec<usize>, mark: &mut [u8], boundary_hint: &[usize]) {
        out.clear();
        if self.mode == SampleMode::Exhaustive {
            let bits = i as u64 + 1;
            out.extend((0..self.cells.len()).filter(|&b| bits >> b & 1 == 1).map(|b| self.cells[b]));
            return;
        }
        let mut i = i;
        if self.include_full {
            if i == 0 {
                out.extend_from_slice(&self.cells);
                return;
            }
            i -= 1;
        }
        if i < self.cuts.len() {
            let (dir, t) = self.cuts[i];
            let u = half_plane_normal::<T>(dir);
            out.extend(self.cells.iter().copied().filter(|&c| dot(self.grid.center(c), u) <= t));
            return;
        }
        i -= self.cuts.len();
        if i < self.singletons.len() {
            out.push(self.singletons[i]);
            return;
        }
        self.grow_random(i + self.cuts.len() + usize::from(self.include_full), out, mark, boundary_hint);
    }

    fn grow_random(&self, index: usize, out: &mut Vec<usize>, mark: &mut [u8], boundary_hint: &[usize]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let max = self.max_random_size();
        let size = {
            let u: f64 = rng.gen();
            ((u * ((max + 1) as f64).ln()).exp().floor() as usize).clamp(1, max)
        };
        let start = if !boundary_hint.is_empty() && rng.gen_bool(0.5) {
            boundary_hint[rng.gen_range(0..boundary_hint.len())]
        } else {
            self.cells[rng.gen_range(0..self.cells.len())]
        };
        // 1 = frontier, 2 = taken
        let mut frontier = vec![start];
        let mut touched = vec![start];
        mark[start] = 1;
        while out.len() < size && !frontier.is_empty() {
            let c = frontier.swap_remove(rng.gen_range(0..frontier.len()));
            mark[c] = 2;
            out.push(c);
            for &d in &FACE_OFFSETS {
                if let Some(q) = self.grid.offset(c, d) {
                    if mark[q] == 0 && self.region.contains(q) {
                        mark[q] = 1;
                        frontier.push(q);
                        touched.push(q);
                    }
                }
            }
        }
        for c in touched {
            mark[c] = 0;
        }
    }

    fn witness(&self, i: usize, boundary_hint: &[usize]) -> CellSet<T> {
        if self.mode == SampleMode::Exhaustive {
            return subset_from_bits(self.grid, &self.cells, i as u64 + 1);
        }
        let mut out = Vec::new();
        let mut mark = vec![0u8; self.grid.len()];
        self.generate(i, &mut out, &mut mark, boundary_hint);
        CellSet::from_cells(self.grid, out)
    }
}

fn half_plane_normal<T: Scalar>(dir: usize) -> [T; 2] {
    let theta = T::PI() * T::from_usize_lossy(2 * dir) / T::from_usize_lossy(HALF_PLANE_DIRECTIONS);
    [theta.cos(), theta.sin()]
}

fn dot<T: Scalar>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

/// Splits of every sample of the family, in index order.
fn evaluate<T: Scalar>(fam: &Family<T>, ev: &Evaluator<T>, hint: &[usize]) -> Vec<Split<T>> {
    let glen = fam.grid.len();
    (0..fam.len)
        .into_par_iter()
        .map_init(
            || (Vec::new(), vec![0u8; glen], vec![false; glen]),
            |(cells, mark, in_e), i| {
                fam.generate(i, cells, mark, hint);
                for &c in cells.iter() {
                    in_e[c] = true;
                }
                let s = ev.split(cells, in_e);
                for &c in cells.iter() {
                    in_e[c] = false;
                }
                s
            },
        )
        .collect()
}

/// Largest finite score (lowest index on ties), and the first index whose
/// score is infinite.
fn arg_sup<T: Scalar>(scores: &[Option<T>]) -> (Option<(usize, T)>, Option<usize>) {
    let mut best: Option<(usize, T)> = None;
    let mut unbounded = None;
    for (i, s) in scores.iter().enumerate() {
        match s {
            Some(v) if v.is_infinite() => {
                if unbounded.is_none() {
                    unbounded = Some(i);
                }
            }
            Some(v) => {
                if best.map_or(true, |(_, b)| *v > b) {
                    best = Some((i, *v));
                }
            }
            None => {}
        }
    }
    (best, unbounded)
}

fn report<T: Scalar>(fam: &Family<T>, scores: &[Option<T>], hint: &[usize]) -> InequalityReport<T> {
    let (best, unbounded) = arg_sup(scores);
    InequalityReport {
        constant_estimate: best.map_or(T::zero(), |(_, v)| v),
        witness: best.map_or_else(|| CellSet::empty(fam.grid), |(i, _)| fam.witness(i, hint)),
        samples: scores.len(),
        mode: fam.mode,
        unbounded_witness: unbounded.map(|i| fam.witness(i, hint)),
    }
}

fn require_connected<T: Scalar>(a: &CellSet<T>) -> Result<()> {
    if a.is_empty() {
        return Err(CheegerError::EmptyDomain);
    }
    let comps = crate::grid::connected_components(a).len();
    if comps > 1 {
        return Err(CheegerError::Disconnected { components: comps });
    }
    Ok(())
}

fn trace_ratio<T: Scalar>(s: &Split<T>) -> Option<T> {
    let num = s.boundary.min(s.rest_boundary);
    if s.interior > T::zero() {
        Some(num / s.interior)
    } else if num > T::zero() {
        Some(T::infinity())
    } else {
        None
    }
}

fn iso_ratio<T: Scalar>(s: &Split<T>, total: usize, area: T) -> Option<T> {
    let small = s.count.min(total - s.count);
    if s.interior > T::zero() {
        let e = T::from_usize_lossy(DIM - 1) / T::from_usize_lossy(DIM);
        Some((T::from_usize_lossy(small) * area).powf(e) / s.interior)
    } else {
        None
    }
}

/// Estimate of the smallest `k` with
/// `min{P_g(E; ∂A), P_g(A \ E; ∂A)} <= k P_g(E; A)` for nonempty `E ⊊ A`.
pub fn trace_constant<T: Scalar>(a: &CellSet<T>, g: &Anisotropy<T>, opts: &VerifyOptions<T>) -> Result<InequalityReport<T>> {
    require_connected(a)?;
    let ev = Evaluator::new(a, g)?;
    let fam = Family::new(a, a, false, opts);
    let hint = a.boundary_cells();
    let splits = evaluate(&fam, &ev, &hint);
    let scores: Vec<_> = splits.iter().map(trace_ratio).collect();
    Ok(report(&fam, &scores, &hint))
}

/// Estimate of the smallest `K` with
/// `min{|E|, |A \ E|}^{(n-1)/n} <= K P(E; A)` for nonempty `E ⊊ A`, using the
/// unweighted perimeter on `opts.stencil`.
pub fn relative_isoperimetric_constant<T: Scalar>(a: &CellSet<T>, opts: &VerifyOptions<T>) -> Result<InequalityReport<T>> {
    require_connected(a)?;
    let g = Anisotropy::euclidean(*a.grid(), opts.stencil);
    let ev = Evaluator::new(a, &g)?;
    let fam = Family::new(a, a, false, opts);
    let hint = a.boundary_cells();
    let splits = evaluate(&fam, &ev, &hint);
    let total = a.cardinality();
    let area = a.grid().cell_area();
    let scores: Vec<_> = splits.iter().map(|s| iso_ratio(s, total, area)).collect();
    Ok(report(&fam, &scores, &hint))
}

#[derive(Debug, Clone)]
pub struct LemmaReport<T> {
    /// Trace constant of `A` on the sampled family.
    pub trace: InequalityReport<T>,
    /// `C (k + 1) / (n ω_n^{1/n})`.
    pub constant: T,
    /// Smallest `(1 + slack) K P_g(E; A) / min{|E|, |A \ E|}^{(n-1)/n}` over the family.
    pub worst_margin: T,
    pub worst: CellSet<T>,
    pub violations: usize,
}

/// Checks that the trace inequality with constant `k` yields the relative
/// isoperimetric inequality with `K = C (k + 1) / (n ω_n^{1/n})` on the same
/// sample (`C` is the comparability constant of `g`, 1 when `g` is Euclidean).
pub fn check_lemma_relperimeter<T: Scalar>(
    a: &CellSet<T>,
    g: &Anisotropy<T>,
    opts: &VerifyOptions<T>,
) -> Result<LemmaReport<T>> {
    require_connected(a)?;
    let ev = Evaluator::new(a, g)?;
    let fam = Family::new(a, a, false, opts);
    let hint = a.boundary_cells();
    let splits = evaluate(&fam, &ev, &hint);
    let trace_scores: Vec<_> = splits.iter().map(trace_ratio).collect();
    let trace = report(&fam, &trace_scores, &hint);
    let k = trace.constant_estimate;
    let n = T::from_usize_lossy(DIM);
    let big_k = g.comparability() * (k + T::one()) / (n * unit_ball_volume::<T>(DIM).powf(T::one() / n));
    let allowed = (T::one() + opts.slack) * big_k;

    let total = a.cardinality();
    let area = a.grid().cell_area();
    let mut worst: Option<(usize, T)> = None;
    let mut violations = 0;
    for (i, s) in splits.iter().enumerate() {
        if let Some(r) = iso_ratio(s, total, area) {
            let margin = allowed / r;
            if margin < T::one() {
                violations += 1;
            }
            if worst.map_or(true, |(_, m)| margin < m) {
                worst = Some((i, margin));
            }
        }
    }
    let (worst_margin, worst_set) = match worst {
        Some((i, m)) => (m, fam.witness(i, &hint)),
        None => (T::infinity(), CellSet::empty(*a.grid())),
    };
    if violations > 0 {
        return Err(CheegerError::InequalityViolation {
            check: "lemma_relperimeter",
            ratio: (allowed / worst_margin).to_f64_lossy(),
            threshold: allowed.to_f64_lossy(),
            witness: worst_set.cell_list(),
        });
    }
    Ok(LemmaReport { trace, constant: big_k, worst_margin, worst: worst_set, violations })
}

/// Sup of `P_g(E; ∂A) / P_g(E; A)` over `E ⊆ A ∩ B_ρ(x)`, with `x` near `∂A`.
pub fn localized_sup<T: Scalar>(
    a: &CellSet<T>,
    g: &Anisotropy<T>,
    x: [T; 2],
    rho: T,
    opts: &VerifyOptions<T>,
) -> Result<InequalityReport<T>> {
    let grid = *a.grid();
    let near = T::lit(1.5) * grid.h();
    let bd = a.boundary_cells();
    let dist = |c: usize| {
        let p = grid.center(c);
        ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt()
    };
    if !bd.iter().any(|&c| dist(c) <= near) {
        return Err(CheegerError::InvalidInput(format!("point ({}, {}) is not within 1.5h of the boundary", x[0], x[1])));
    }
    let region = CellSet::from_cells(grid, a.cells().filter(|&c| dist(c) <= rho));
    if region.is_empty() {
        return Err(CheegerError::InvalidInput(format!("A ∩ B_ρ(x) is empty for ρ = {rho}")));
    }
    let ev = Evaluator::new(a, g)?;
    let include_full = region.cardinality() < a.cardinality();
    let fam = Family::new(&region, a, include_full, opts);
    let hint: Vec<usize> = bd.into_iter().filter(|&c| region.contains(c)).collect();
    let splits = evaluate(&fam, &ev, &hint);
    let scores: Vec<_> = splits
        .iter()
        .map(|s| {
            if s.interior > T::zero() {
                Some(s.boundary / s.interior)
            } else if s.boundary > T::zero() {
                Some(T::infinity())
            } else {
                None
            }
        })
        .collect();
    Ok(report(&fam, &scores, &hint))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow<T> {
    pub rho: T,
    /// `m(2ρ)`.
    pub mass: T,
    /// `(1 - slack) c² ρ² / 4`, the planar form of `(c / 2n)^n (2ρ)^n`.
    pub bound: T,
    /// `mass / bound`.
    pub margin: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeRow<T> {
    pub r: T,
    /// Central difference of `m` with step `step`.
    pub finite_difference: T,
    /// `P(A ∩ B_r; A)`.
    pub perimeter: T,
    pub relative_error: T,
}

#[derive(Debug, Clone)]
pub struct VolumeGrowthReport<T> {
    pub c: T,
    pub rows: Vec<GrowthRow<T>>,
    pub derivative: Vec<DerivativeRow<T>>,
    pub min_margin: T,
    pub max_derivative_error: T,
    pub step: T,
}

/// Tabulates `m(r) = |A ∩ B_r(x0)|` on a geometric ladder of `ladder` radii in
/// `[r_min, r_max]` and asserts `m(2ρ) >= (1 - slack) c² ρ² / 4` whenever
/// `2ρ <= r_max`. Also compares `m'(r)` (central differences with step 3h)
/// with the unweighted relative perimeter of `A ∩ B_r` on `opts.stencil`, at
/// the ladder radii of at least four steps: below that the difference
/// quotient averages over a band comparable to the radius itself.
pub fn volume_growth_check<T: Scalar>(
    a: &CellSet<T>,
    x0: [T; 2],
    r_min: T,
    r_max: T,
    ladder: usize,
    c: T,
    opts: &VerifyOptions<T>,
) -> Result<VolumeGrowthReport<T>> {
    let grid = *a.grid();
    let h = grid.h();
    if !(r_min > T::zero() && r_max > r_min) || ladder < 2 {
        return Err(CheegerError::InvalidInput(format!("bad radius ladder [{r_min}, {r_max}] x {ladder}")));
    }
    if !(c > T::zero()) {
        return Err(CheegerError::InvalidInput(format!("isoperimetric constant must be positive, got {c}")));
    }
    let dist = |cell: usize| {
        let p = grid.center(cell);
        ((p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2)).sqrt()
    };
    if !a.cells().any(|cell| dist(cell) <= h) {
        return Err(CheegerError::InvalidInput(format!("x0 = ({}, {}) is not within h of A", x0[0], x0[1])));
    }
    let mut d: Vec<T> = a.cells().map(dist).collect();
    d.sort_by(|p, q| p.partial_cmp(q).expect("finite distances"));
    let area = grid.cell_area();
    let m = |r: T| T::from_usize_lossy(d.partition_point(|&x| x <= r)) * area;

    let ratio = (r_max / r_min).powf(T::one() / T::from_usize_lossy(ladder - 1));
    let radii: Vec<T> = (0..ladder).map(|i| r_min * ratio.powi(i as i32)).collect();
    let two = T::lit(2.0);
    let mut rows = Vec::new();
    for &rho in &radii {
        if two * rho > r_max * (T::one() + T::lit(1e-12)) {
            continue;
        }
        let mass = m(two * rho);
        let bound = (T::one() - opts.slack) * c * c * rho * rho / T::lit(4.0);
        rows.push(GrowthRow { rho, mass, bound, margin: mass / bound });
    }

    let step = T::lit(3.0) * h;
    let unit = Anisotropy::euclidean(grid, opts.stencil);
    let derivative = radii
        .iter()
        .filter(|&&r| r >= T::lit(4.0) * step)
        .map(|&r| {
            let fd = (m(r + step) - m(r - step)) / (two * step);
            let ball = CellSet::from_cells(grid, a.cells().filter(|&cell| dist(cell) <= r));
            let perimeter = relative_perimeters(&ball, a, &unit)?.interior;
            let relative_error = if perimeter > T::zero() { (fd - perimeter).abs() / perimeter } else { T::infinity() };
            Ok(DerivativeRow { r, finite_difference: fd, perimeter, relative_error })
        })
        .collect::<Result<Vec<_>>>()?;

    let min_margin = rows.iter().map(|r| r.margin).fold(T::infinity(), T::min);
    let max_derivative_error = derivative.iter().map(|r| r.relative_error).fold(T::zero(), T::max);
    if let Some(bad) = rows.iter().find(|r| r.margin < T::one()) {
        return Err(CheegerError::InequalityViolation {
            check: "volume_growth",
            ratio: bad.mass.to_f64_lossy(),
            threshold: bad.bound.to_f64_lossy(),
            witness: Vec::new(),
        });
    }
    Ok(VolumeGrowthReport { c, rows, derivative, min_margin, max_derivative_error, step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_rectangle, Grid};

    fn unit(n: usize) -> Grid<f64> {
        Grid::new(n, n, 1.0, [0.0, 0.0]).unwrap()
    }

    fn axis() -> VerifyOptions<f64> {
        VerifyOptions { stencil: Stencil::Axis4, ..Default::default() }
    }

    #[test]
    fn trace_constant_domino() {
        let g = unit(4);
        let a = make_rectangle(g, [1.0, 1.0], [3.0, 2.0]);
        let r = trace_constant(&a, &Anisotropy::euclidean(g, Stencil::Axis4), &axis()).unwrap();
        assert_eq!(r.mode, SampleMode::Exhaustive);
        assert_eq!(r.samples, 2);
        assert_eq!(r.constant_estimate, 3.0);
        assert!(r.unbounded_witness.is_none());
    }

    #[test]
    fn single_cell_conventions() {
        let g = unit(3);
        let a = CellSet::from_cells(g, [4]);
        let eu = Anisotropy::euclidean(g, Stencil::Axis4);
        assert_eq!(trace_constant(&a, &eu, &axis()).unwrap().constant_estimate, 0.0);
        let r = relative_isoperimetric_constant(&a, &axis()).unwrap();
        assert_eq!(r.constant_estimate, 0.0);
        assert!(r.witness.is_empty());
    }

    #[test]
    fn relative_constant_two_by_two() {
        let g = unit(4);
        let a = make_rectangle(g, [1.0, 1.0], [3.0, 3.0]);
        let r = relative_isoperimetric_constant(&a, &axis()).unwrap();
        assert_eq!(r.samples, 14);
        assert!((r.constant_estimate - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
        assert_eq!(r.witness.cardinality(), 2);
    }

    #[test]
    fn lemma_domino() {
        let g = unit(4);
        let a = make_rectangle(g, [1.0, 1.0], [3.0, 2.0]);
        let r = check_lemma_relperimeter(&a, &Anisotropy::euclidean(g, Stencil::Axis4), &axis()).unwrap();
        assert_eq!(r.trace.constant_estimate, 3.0);
        let expect = 4.0 / (2.0 * std::f64::consts::PI.sqrt());
        assert!((r.constant - expect).abs() < 1e-14);
        assert!((r.worst_margin - 1.05 * expect).abs() < 1e-14);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn disconnected_rejected() {
        let g = unit(4);
        let a = CellSet::from_cells(g, [0, 15]);
        let eu = Anisotropy::euclidean(g, Stencil::Axis4);
        assert!(matches!(trace_constant(&a, &eu, &axis()), Err(CheegerError::Disconnected { components: 2 })));
    }

    #[test]
    fn sampled_is_deterministic_and_thread_independent() {
        let g = Grid::square(32, 1.0).unwrap();
        let a = crate::grid::make_disk(g, [0.5, 0.5], 0.4).unwrap();
        let eu = Anisotropy::euclidean(g, Stencil::Crofton16);
        let opts = VerifyOptions { budget: 300, seed: 11, ..Default::default() };
        let r1 = trace_constant(&a, &eu, &opts).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let r2 = pool.install(|| trace_constant(&a, &eu, &opts).unwrap());
        assert_eq!(r1.mode, SampleMode::Sampled);
        assert_eq!(r1.constant_estimate, r2.constant_estimate);
        assert_eq!(r1.witness, r2.witness);
        assert_eq!(r1.samples, 300);
    }

    #[test]
    fn localized_single_cell_radius() {
        let g = unit(6);
        let a = make_rectangle(g, [0.0, 0.0], [6.0, 6.0]);
        let eu = Anisotropy::euclidean(g, Stencil::Axis4);
        let r = localized_sup(&a, &eu, [0.5, 0.5], 0.5, &axis()).unwrap();
        // the corner cell alone: two faces on the boundary, two inside
        assert_eq!(r.samples, 1);
        assert_eq!(r.constant_estimate, 1.0);
    }

    #[test]
    fn localized_rejects_interior_point() {
        let g = unit(9);
        let a = CellSet::full(g);
        let eu = Anisotropy::euclidean(g, Stencil::Axis4);
        assert!(localized_sup(&a, &eu, [4.5, 4.5], 2.0, &axis()).is_err());
    }

    #[test]
    fn growth_interior_point() {
        let g = Grid::square(128, 1.0).unwrap();
        let a = CellSet::full(g);
        let r = volume_growth_check(&a, [0.5, 0.5], 0.05, 0.4, 6, 1.0, &VerifyOptions::default()).unwrap();
        assert!(r.min_margin > 1.0);
        for row in &r.rows {
            let disk = std::f64::consts::PI * 4.0 * row.rho * row.rho;
            assert!((row.mass - disk).abs() / disk < 0.05);
        }
    }
}
