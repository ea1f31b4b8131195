//! Minimization of `P̂_g(E) / Ŵ_f(E)^{1/α}` over nonempty `E ⊆ domain`.
//!
//! Two routes: exhaustive enumeration for domains of at most a few dozen
//! cells, and a Dinkelbach iteration whose linear subproblems
//! `min_E P̂_g(E) − λ c Ŵ_f(E)` are solved exactly as minimum cuts. For
//! `α = 1` the iteration reaches the global discrete optimum; for `α > 1` the
//! concave power of the volume is replaced by its tangent at the current
//! iterate, a step is accepted only if it lowers the true ratio, and the
//! fixed point is a local solution.

use crate::anisotropy::Anisotropy;
use crate::error::{CheegerError, Result};
use crate::grid::{connected_components, subset_from_bits, CellSet, ScalarField, DEFAULT_ORACLE_CAP, DIM};
use crate::maxflow::{max_flow, FlowGraph};
use crate::measures::{check_alpha, weighted_perimeter, weighted_volume};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct CheegerProblem<T> {
    domain: CellSet<T>,
    f: ScalarField<T>,
    g: Anisotropy<T>,
    alpha: T,
}

impl<T: Scalar> CheegerProblem<T> {
    pub fn new(domain: CellSet<T>, f: ScalarField<T>, g: Anisotropy<T>, alpha: T) -> Result<Self> {
        if domain.is_empty() {
            return Err(CheegerError::EmptyDomain);
        }
        if domain.grid() != f.grid() {
            return Err(CheegerError::GridMismatch("domain and volume weight"));
        }
        if domain.grid() != g.grid() {
            return Err(CheegerError::GridMismatch("domain and surface weight"));
        }
        check_alpha(DIM, alpha)?;
        Ok(CheegerProblem { domain, f, g, alpha })
    }

    /// Uniform `f ≡ 1`, Euclidean `g` on the given stencil.
    pub fn uniform(domain: CellSet<T>, stencil: crate::anisotropy::Stencil, alpha: T) -> Result<Self> {
        let grid = *domain.grid();
        Self::new(domain, ScalarField::uniform(grid, T::one())?, Anisotropy::euclidean(grid, stencil), alpha)
    }

    pub fn domain(&self) -> &CellSet<T> {
        &self.domain
    }

    pub fn f(&self) -> &ScalarField<T> {
        &self.f
    }

    pub fn g(&self) -> &Anisotropy<T> {
        &self.g
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn with_f(&self, f: ScalarField<T>) -> Result<Self> {
        Self::new(self.domain.clone(), f, self.g.clone(), self.alpha)
    }

    pub fn with_g(&self, g: Anisotropy<T>) -> Result<Self> {
        Self::new(self.domain.clone(), self.f.clone(), g, self.alpha)
    }

    pub fn with_domain(&self, domain: CellSet<T>) -> Result<Self> {
        Self::new(domain, self.f.clone(), self.g.clone(), self.alpha)
    }

    pub fn perimeter(&self, set: &CellSet<T>) -> Result<T> {
        weighted_perimeter(set, &self.g)
    }

    pub fn volume(&self, set: &CellSet<T>) -> Result<T> {
        weighted_volume(set, &self.f)
    }

    /// `P̂_g(E) / Ŵ_f(E)^{1/α}`; infinite for the empty set.
    pub fn ratio(&self, set: &CellSet<T>) -> Result<T> {
        let w = self.volume(set)?;
        if w <= T::zero() {
            return Ok(T::infinity());
        }
        Ok(self.perimeter(set)? / w.powf(T::one() / self.alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Oracle,
    Dinkelbach,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::Dinkelbach => "dinkelbach",
        }
    }
}

/// One accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<T> {
    pub iter: usize,
    pub lambda: T,
    pub volume: T,
    pub perimeter: T,
}

#[derive(Debug, Clone)]
pub struct CheegerResult<T> {
    pub minimizer: CellSet<T>,
    pub ratio: T,
    /// Ratio of every accepted iterate, starting from the whole domain.
    pub lambda_trace: Vec<T>,
    pub trace: Vec<TraceRow<T>>,
    pub subproblem_count: usize,
    pub method: Method,
    pub converged: bool,
}

/// Graph whose minimum cut plus [`CutGraph::offset`] equals
/// `min_{E ⊆ domain} P̂_g(E) − λ c Ŵ_f(E)`, with `E` the source side.
#[derive(Debug, Clone)]
pub struct CutGraph<T> {
    graph: FlowGraph<T>,
    cells: Vec<usize>,
    offset: T,
    grid: crate::grid::Grid<T>,
}

impl<T: Scalar> CutGraph<T> {
    pub fn node_count(&self) -> usize {
        self.cells.len()
    }

    /// Constant added to the cut value: the sum of the negative unary terms.
    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn flow_graph(&self) -> &FlowGraph<T> {
        &self.graph
    }

    /// Minimum surrogate energy and the smallest set attaining it.
    pub fn solve(mut self) -> (T, CellSet<T>) {
        let r = max_flow(&mut self.graph);
        let set = CellSet::from_cells(
            self.grid,
            r.source_side.iter().zip(&self.cells).filter_map(|(&s, &c)| s.then_some(c)),
        );
        (r.value + self.offset, set)
    }
}

/// Encodes `P̂_g(E) − λ c Ŵ_f(E)` over subsets of the domain.
///
/// Crossings between two domain cells become a pair of opposite arcs (equal
/// capacities, by evenness of `g`); crossings to cells outside the domain
/// and the volume reward become terminal arcs.
pub fn build_cut_graph<T: Scalar>(p: &CheegerProblem<T>, lambda: T, volume_coeff: T) -> CutGraph<T> {
    let grid = *p.domain.grid();
    let g = &p.g;
    let stencil = g.stencil();
    let half = stencil.len() / 2;
    let cells = p.domain.cell_list();
    let mut node = vec![u32::MAX; grid.len()];
    for (n, &c) in cells.iter().enumerate() {
        node[c] = n as u32;
    }
    let mut graph = FlowGraph::with_capacity(cells.len(), cells.len() * half);
    let mut offset = T::zero();
    let reward = lambda * volume_coeff * grid.cell_area();
    for (n, &c) in cells.iter().enumerate() {
        let mut unary = T::zero();
        for (k, &d) in stencil.directions().iter().enumerate() {
            let q = grid.offset(c, d);
            let w = g.crossing_weight(c, q, k);
            match q {
                Some(q) if p.domain.contains(q) => {
                    if k < half {
                        graph.add_edge(n, node[q] as usize, w, w);
                    }
                }
                _ => unary = unary + w,
            }
        }
        unary = unary - reward * p.f.value(c);
        if unary > T::zero() {
            graph.add_tweights(n, T::zero(), unary);
        } else if unary < T::zero() {
            graph.add_tweights(n, -unary, T::zero());
            offset = offset + unary;
        }
    }
    CutGraph { graph, cells, offset, grid }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DinkelbachOptions<T> {
    /// Relative tolerance on the subproblem energy (α = 1) or on the ratio
    /// decrease (α > 1).
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for DinkelbachOptions<T> {
    fn default() -> Self {
        DinkelbachOptions { tol: T::lit(1e-12), max_iter: 100 }
    }
}

struct Iterate<T> {
    set: CellSet<T>,
    perimeter: T,
    volume: T,
    ratio: T,
}

impl<T: Scalar> Iterate<T> {
    fn of(p: &CheegerProblem<T>, set: CellSet<T>) -> Result<Self> {
        let perimeter = p.perimeter(&set)?;
        let volume = p.volume(&set)?;
        let ratio = if volume > T::zero() { perimeter / volume.powf(T::one() / p.alpha) } else { T::infinity() };
        Ok(Iterate { set, perimeter, volume, ratio })
    }
}

pub fn dinkelbach_solve<T: Scalar>(p: &CheegerProblem<T>, opts: DinkelbachOptions<T>) -> Result<CheegerResult<T>> {
    if !(opts.tol >= T::zero()) {
        return Err(CheegerError::InvalidInput(format!("tolerance must be nonnegative, got {}", opts.tol)));
    }
    let linear = p.alpha == T::one();
    let inv_alpha = T::one() / p.alpha;
    let mut cur = Iterate::of(p, p.domain.clone())?;
    let mut trace = vec![TraceRow { iter: 0, lambda: cur.ratio, volume: cur.volume, perimeter: cur.perimeter }];
    let mut subproblems = 0;
    let mut converged = false;

    for iter in 1..=opts.max_iter {
        let coeff = if linear { T::one() } else { inv_alpha * cur.volume.powf(inv_alpha - T::one()) };
        let (_, set) = build_cut_graph(p, cur.ratio, coeff).solve();
        subproblems += 1;

        let mut next = if set.is_empty() { None } else { Some(Iterate::of(p, set)?) };

        if linear {
            // stop once no set has energy P - λW below -tol * P(E_k)
            let improves = next.as_ref().is_some_and(|n| {
                let energy = n.perimeter - cur.ratio * n.volume;
                energy < -opts.tol * cur.perimeter && n.ratio < cur.ratio
            });
            if !improves {
                converged = true;
                break;
            }
        } else {
            if next.as_ref().map_or(true, |n| n.ratio >= cur.ratio) {
                // the tangent step overshot; probe nearby slopes before giving up
                let base = cur.ratio * coeff;
                for s in [0.5, 0.7, 0.85, 0.95, 1.05, 1.2, 1.5, 2.0] {
                    let (_, set) = build_cut_graph(p, base * T::lit(s), T::one()).solve();
                    subproblems += 1;
                    if set.is_empty() {
                        continue;
                    }
                    let cand = Iterate::of(p, set)?;
                    if cand.ratio < cur.ratio && next.as_ref().map_or(true, |n| cand.ratio < n.ratio) {
                        next = Some(cand);
                    }
                }
            }
            match &next {
                Some(n) if n.ratio < cur.ratio => {}
                _ => {
                    converged = true;
                    break;
                }
            }
        }

        let n = next.expect("checked above");
        let decrease = (cur.ratio - n.ratio) / cur.ratio;
        cur = n;
        trace.push(TraceRow { iter, lambda: cur.ratio, volume: cur.volume, perimeter: cur.perimeter });
        if !linear && decrease <= opts.tol {
            converged = true;
            break;
        }
    }

    Ok(CheegerResult {
        ratio: cur.ratio,
        lambda_trace: trace.iter().map(|r| r.lambda).collect(),
        trace,
        minimizer: cur.set,
        subproblem_count: subproblems,
        method: Method::Dinkelbach,
        converged,
    })
}

/// Exhaustive minimization over all nonempty subsets (optionally only the
/// 4-connected ones). Ties go to the smallest cell count, then to the
/// lexicographically smallest mask.
pub fn oracle_solve<T: Scalar>(p: &CheegerProblem<T>, connected_only: bool, cap: usize) -> Result<CheegerResult<T>> {
    let cells = p.domain.cell_list();
    let n = cells.len();
    if n > cap || n > 40 {
        return Err(CheegerError::OracleCap { cells: n, cap });
    }
    let grid = *p.domain.grid();
    let g = &p.g;
    let stencil = g.stencil();
    let mut local = vec![usize::MAX; grid.len()];
    for (i, &c) in cells.iter().enumerate() {
        local[c] = i;
    }
    // P(E) = Σ_{p∈E} (outer_p + deg_p) − 2 Σ_{p<q∈E} w_pq
    let mut w = vec![T::zero(); n * n];
    let mut solo = vec![T::zero(); n];
    let mut vol = vec![T::zero(); n];
    for (i, &c) in cells.iter().enumerate() {
        for (k, &d) in stencil.directions().iter().enumerate() {
            let q = grid.offset(c, d);
            let wt = g.crossing_weight(c, q, k);
            solo[i] = solo[i] + wt;
            if let Some(q) = q {
                if local[q] != usize::MAX {
                    w[i * n + local[q]] = wt;
                }
            }
        }
        vol[i] = p.f.value(c) * grid.cell_area();
    }
    let inv_alpha = T::one() / p.alpha;
    let loose = T::lit(1e-9);

    let mut bits: u64 = 0;
    let mut per = T::zero();
    let mut volume = T::zero();
    let mut best = T::infinity();
    let mut candidates: Vec<u64> = Vec::new();
    let total: u64 = 1u64 << n;
    for step in 1..total {
        let i = step.trailing_zeros() as usize;
        let bit = 1u64 << i;
        let mut shared = T::zero();
        let mut rest = bits & !bit;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            shared = shared + w[i * n + j];
            rest &= rest - 1;
        }
        let delta = solo[i] - (shared + shared);
        if bits & bit == 0 {
            bits |= bit;
            per = per + delta;
            volume = volume + vol[i];
        } else {
            bits &= !bit;
            per = per - delta;
            volume = volume - vol[i];
        }
        if bits == 0 {
            continue;
        }
        let r = per / volume.powf(inv_alpha);
        if r > best * (T::one() + loose) {
            continue;
        }
        if connected_only && !subset_from_bits(grid, &cells, bits).is_connected() {
            continue;
        }
        if r < best {
            best = r;
            let cutoff = best * (T::one() + loose);
            candidates = candidates
                .into_iter()
                .filter(|&b| {
                    let s = subset_from_bits(grid, &cells, b);
                    p.ratio(&s).map(|x| x <= cutoff).unwrap_or(false)
                })
                .collect();
        }
        candidates.push(bits);
    }

    let mut scored: Vec<(T, CellSet<T>)> = candidates
        .into_iter()
        .map(|b| {
            let s = subset_from_bits(grid, &cells, b);
            p.ratio(&s).map(|r| (r, s))
        })
        .collect::<Result<_>>()?;
    let min_ratio = scored.iter().map(|(r, _)| *r).fold(T::infinity(), T::min);
    let tie = min_ratio * (T::one() + T::lit(1e-12));
    scored.retain(|(r, _)| *r <= tie);
    scored.sort_by(|(_, a), (_, b)| a.cardinality().cmp(&b.cardinality()).then_with(|| a.mask().cmp(b.mask())));
    let (ratio, minimizer) = scored.into_iter().next().ok_or(CheegerError::EmptyDomain)?;
    let it = Iterate::of(p, minimizer)?;
    Ok(CheegerResult {
        trace: vec![TraceRow { iter: 0, lambda: ratio, volume: it.volume, perimeter: it.perimeter }],
        lambda_trace: vec![ratio],
        ratio,
        minimizer: it.set,
        subproblem_count: 0,
        method: Method::Oracle,
        converged: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    /// Oracle when the domain fits under the cap, Dinkelbach otherwise.
    Auto,
    Oracle,
    Dinkelbach,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    pub method: MethodChoice,
    pub dinkelbach: DinkelbachOptions<T>,
    pub oracle_cap: usize,
    /// Also run the oracle when the domain is small enough, to report the gap.
    pub compare_oracle: bool,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            method: MethodChoice::Auto,
            dinkelbach: DinkelbachOptions::default(),
            oracle_cap: DEFAULT_ORACLE_CAP,
            compare_oracle: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComponentReport<T> {
    pub set: CellSet<T>,
    pub cells: usize,
    pub ratio: T,
}

#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    pub result: CheegerResult<T>,
    /// Ratio of the minimizer recomputed from the measures.
    pub recomputed_ratio: T,
    pub domain_ratio: T,
    pub components: Vec<ComponentReport<T>>,
    /// `ratio − oracle ratio`, when the oracle was also run.
    pub oracle_gap: Option<T>,
}

pub fn solve<T: Scalar>(p: &CheegerProblem<T>, opts: SolveOptions<T>) -> Result<SolveReport<T>> {
    let small = p.domain.cardinality() <= opts.oracle_cap;
    let result = match opts.method {
        MethodChoice::Oracle => oracle_solve(p, false, opts.oracle_cap)?,
        MethodChoice::Dinkelbach => dinkelbach_solve(p, opts.dinkelbach)?,
        MethodChoice::Auto if small => oracle_solve(p, false, opts.oracle_cap)?,
        MethodChoice::Auto => dinkelbach_solve(p, opts.dinkelbach)?,
    };
    let recomputed = p.ratio(&result.minimizer)?;
    let tol = T::lit(1e-9) * recomputed.abs().max(T::one());
    if !((recomputed - result.ratio).abs() <= tol) {
        return Err(CheegerError::InvalidInput(format!(
            "ratio cross-check failed: solver reported {}, measures give {}",
            result.ratio, recomputed
        )));
    }
    let components = connected_components(&result.minimizer)
        .into_iter()
        .map(|c| {
            let ratio = p.ratio(&c)?;
            Ok(ComponentReport { cells: c.cardinality(), set: c, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    let oracle_gap = if opts.compare_oracle && small && result.method == Method::Dinkelbach {
        Some(result.ratio - oracle_solve(p, false, opts.oracle_cap)?.ratio)
    } else {
        None
    };
    Ok(SolveReport { domain_ratio: p.ratio(&p.domain)?, recomputed_ratio: recomputed, components, oracle_gap, result })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::Stencil;
    use crate::grid::{make_rectangle, subsets_of, Grid};

    fn unit(n: usize) -> Grid<f64> {
        Grid::new(n, n, 1.0, [0.0, 0.0]).unwrap()
    }

    fn block(g: Grid<f64>, w: f64, h: f64) -> CellSet<f64> {
        make_rectangle(g, [1.0, 1.0], [1.0 + w, 1.0 + h])
    }

    #[test]
    fn problem_validation() {
        let g = unit(4);
        assert!(matches!(
            CheegerProblem::uniform(CellSet::empty(g), Stencil::Axis4, 1.0),
            Err(CheegerError::EmptyDomain)
        ));
        assert!(matches!(
            CheegerProblem::uniform(CellSet::full(g), Stencil::Axis4, 2.5),
            Err(CheegerError::AlphaOutOfRange { .. })
        ));
        assert!(CheegerProblem::uniform(CellSet::full(g), Stencil::Axis4, 1.99).is_ok());
    }

    #[test]
    fn oracle_single_cell() {
        let g = unit(3);
        let p = CheegerProblem::uniform(CellSet::from_cells(g, [4]), Stencil::Axis4, 1.0).unwrap();
        let r = oracle_solve(&p, false, 20).unwrap();
        assert_eq!(r.ratio, 4.0);
        assert_eq!(r.minimizer.cell_list(), vec![4]);
    }

    #[test]
    fn oracle_domino() {
        let g = unit(4);
        let p = CheegerProblem::uniform(block(g, 2.0, 1.0), Stencil::Axis4, 1.0).unwrap();
        let r = oracle_solve(&p, false, 20).unwrap();
        assert_eq!(r.ratio, 3.0);
        assert_eq!(r.minimizer, *p.domain());
    }

    #[test]
    fn oracle_three_by_three() {
        let g = unit(5);
        let p = CheegerProblem::uniform(block(g, 3.0, 3.0), Stencil::Axis4, 1.0).unwrap();
        let r = oracle_solve(&p, false, 20).unwrap();
        assert!((r.ratio - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.minimizer.cardinality(), 9);
        // independent enumeration in the opposite order finds the same value
        let mut best = f64::INFINITY;
        let subs: Vec<_> = subsets_of(p.domain(), 20).unwrap().collect();
        for s in subs.iter().rev() {
            best = best.min(p.ratio(s).unwrap());
        }
        assert_eq!(best, r.ratio);
    }

    #[test]
    fn oracle_tie_break_prefers_smallest_then_lexicographic() {
        // two separated single cells: both singletons and the pair have ratio 4
        let g = unit(4);
        let d = CellSet::from_cells(g, [g.index(0, 0), g.index(2, 2)]);
        let p = CheegerProblem::uniform(d, Stencil::Axis4, 1.0).unwrap();
        let r = oracle_solve(&p, false, 20).unwrap();
        assert_eq!(r.ratio, 4.0);
        assert_eq!(r.minimizer.cell_list(), vec![g.index(2, 2)]);
    }

    #[test]
    fn oracle_cap() {
        let p = CheegerProblem::uniform(CellSet::full(unit(5)), Stencil::Axis4, 1.0).unwrap();
        assert!(matches!(oracle_solve(&p, false, 20), Err(CheegerError::OracleCap { .. })));
    }

    #[test]
    fn cut_graph_extremes() {
        let g = unit(6);
        let p = CheegerProblem::uniform(block(g, 4.0, 4.0), Stencil::Crofton16, 1.0).unwrap();
        let (e, set) = build_cut_graph(&p, 0.0, 1.0).solve();
        assert_eq!(e, 0.0);
        assert!(set.is_empty());
        let (_, set) = build_cut_graph(&p, 1e6, 1.0).solve();
        assert_eq!(set, *p.domain());
    }

    #[test]
    fn dinkelbach_domino() {
        let g = unit(4);
        let p = CheegerProblem::uniform(block(g, 2.0, 1.0), Stencil::Axis4, 1.0).unwrap();
        let r = dinkelbach_solve(&p, DinkelbachOptions::default()).unwrap();
        assert_eq!(r.ratio, 3.0);
        assert!(r.converged);
        assert_eq!(r.lambda_trace, vec![3.0]);
    }

    #[test]
    fn dinkelbach_trace_strictly_decreasing() {
        let g = unit(12);
        // an L-shape forces at least one improving step
        let mut d = make_rectangle(g, [1.0, 1.0], [11.0, 3.0]);
        d = d.union(&make_rectangle(g, [1.0, 1.0], [5.0, 11.0])).unwrap();
        let p = CheegerProblem::uniform(d, Stencil::Crofton16, 1.0).unwrap();
        let r = dinkelbach_solve(&p, DinkelbachOptions { tol: 0.0, max_iter: 50 }).unwrap();
        assert!(r.converged);
        assert!(r.lambda_trace.windows(2).all(|w| w[1] < w[0]), "{:?}", r.lambda_trace);
        assert_eq!(r.trace.len(), r.lambda_trace.len());
    }

    #[test]
    fn solve_reports_components() {
        let g = unit(10);
        // two far-apart squares: the minimizer is the pair or one of them
        let d = make_rectangle(g, [0.0, 0.0], [4.0, 4.0]).union(&make_rectangle(g, [6.0, 6.0], [10.0, 10.0])).unwrap();
        let p = CheegerProblem::uniform(d, Stencil::Axis4, 1.0).unwrap();
        let rep = solve(&p, SolveOptions::default()).unwrap();
        assert_eq!(rep.result.method, Method::Dinkelbach);
        assert!((rep.result.ratio - 1.0).abs() < 1e-12);
        assert!(!rep.components.is_empty());
        for c in &rep.components {
            assert!((c.ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_above_one_never_exceeds_domain_ratio() {
        let g = unit(4);
        let p = CheegerProblem::uniform(CellSet::full(g), Stencil::Axis4, 1.2).unwrap();
        let opts = SolveOptions { method: MethodChoice::Dinkelbach, compare_oracle: true, ..Default::default() };
        let rep = solve(&p, opts).unwrap();
        assert!(rep.result.ratio <= rep.domain_ratio);
        let gap = rep.oracle_gap.unwrap();
        assert!(gap >= -1e-12, "{gap}");
    }
}
