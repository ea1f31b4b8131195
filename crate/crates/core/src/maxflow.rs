//! Max-flow / min-cut on graphs with terminal capacities.
//!
//! The solver is the search-tree augmenting-path algorithm of Boykov and
//! Kolmogorov: two trees grow from the terminals, augment along the first
//! path that joins them, and re-adopt the orphaned subtrees. It is the usual
//! choice for grid graphs with short paths.
//!
//! Capacities are any [`Scalar`]. Saturation is detected by comparing the
//! residual against zero; since the bottleneck is subtracted from the very
//! value it was read from, saturated arcs hit zero exactly.

use std::collections::VecDeque;

use crate::scalar::Scalar;

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;
const INFINITE_DIST: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Arc<T> {
    head: u32,
    next: u32,
    r_cap: T,
}

/// Directed graph on `n` nonterminal nodes plus implicit source and sink.
#[derive(Debug, Clone)]
pub struct FlowGraph<T> {
    first: Vec<u32>,
    tr_cap: Vec<T>,
    arcs: Vec<Arc<T>>,
    flow: T,

    parent: Vec<u32>,
    is_sink: Vec<bool>,
    ts: Vec<u64>,
    dist: Vec<u32>,
    active: Vec<bool>,
    queue: VecDeque<u32>,
    orphans: VecDeque<u32>,
    time: u64,
    solved: bool,
}

/// Outcome of [`max_flow`]: the flow value and the source side of a minimum cut.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlow<T> {
    pub value: T,
    /// Nodes reachable from the source in the residual graph: the smallest
    /// source side among all minimum cuts.
    pub source_side: Vec<bool>,
}

impl<T: Scalar> FlowGraph<T> {
    pub fn new(n: usize) -> Self {
        assert!(n < TERMINAL as usize - 1, "too many nodes");
        FlowGraph {
            first: vec![NONE; n],
            tr_cap: vec![T::zero(); n],
            arcs: Vec::new(),
            flow: T::zero(),
            parent: vec![NONE; n],
            is_sink: vec![false; n],
            ts: vec![0; n],
            dist: vec![0; n],
            active: vec![false; n],
            queue: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
            solved: false,
        }
    }

    pub fn with_capacity(n: usize, arc_pairs: usize) -> Self {
        let mut g = Self::new(n);
        g.arcs.reserve(2 * arc_pairs);
        g
    }

    pub fn node_count(&self) -> usize {
        self.first.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// Adds `u -> v` with capacity `cap` and `v -> u` with `rev_cap`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: T, rev_cap: T) {
        assert!(u != v, "self loop");
        assert!(cap >= T::zero() && rev_cap >= T::zero(), "negative capacity");
        let a = self.arcs.len() as u32;
        self.arcs.push(Arc { head: v as u32, next: self.first[u], r_cap: cap });
        self.first[u] = a;
        self.arcs.push(Arc { head: u as u32, next: self.first[v], r_cap: rev_cap });
        self.first[v] = a + 1;
    }

    /// Adds capacity `source -> u` and `u -> sink`. The common part of the two
    /// is routed immediately and only the difference is kept.
    pub fn add_tweights(&mut self, u: usize, cap_source: T, cap_sink: T) {
        assert!(cap_source >= T::zero() && cap_sink >= T::zero(), "negative capacity");
        let (mut s, mut t) = (cap_source, cap_sink);
        let delta = self.tr_cap[u];
        if delta > T::zero() {
            s = s + delta;
        } else {
            t = t - delta;
        }
        self.flow = self.flow + s.min(t);
        self.tr_cap[u] = s - t;
    }

    /// Adds a constant `source -> sink` capacity (a direct terminal arc).
    pub fn add_terminal_flow(&mut self, cap: T) {
        self.flow = self.flow + cap;
    }

    #[inline]
    fn sister(a: u32) -> u32 {
        a ^ 1
    }

    fn set_active(&mut self, i: u32) {
        if !self.active[i as usize] {
            self.active[i as usize] = true;
            self.queue.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<u32> {
        while let Some(i) = self.queue.pop_front() {
            self.active[i as usize] = false;
            if self.parent[i as usize] != NONE {
                return Some(i);
            }
        }
        None
    }

    fn init(&mut self) {
        for i in 0..self.node_count() {
            let c = self.tr_cap[i];
            if c > T::zero() {
                self.is_sink[i] = false;
                self.parent[i] = TERMINAL;
                self.ts[i] = 0;
                self.dist[i] = 1;
                self.set_active(i as u32);
            } else if c < T::zero() {
                self.is_sink[i] = true;
                self.parent[i] = TERMINAL;
                self.ts[i] = 0;
                self.dist[i] = 1;
                self.set_active(i as u32);
            } else {
                self.parent[i] = NONE;
            }
        }
    }

    /// Grows the tree containing `i` by one layer; returns the arc joining the
    /// trees, oriented from the source tree to the sink tree, if one is met.
    fn grow(&mut self, i: u32) -> Option<u32> {
        let iu = i as usize;
        let mut a = self.first[iu];
        if !self.is_sink[iu] {
            while a != NONE {
                let next = self.arcs[a as usize].next;
                if self.arcs[a as usize].r_cap > T::zero() {
                    let j = self.arcs[a as usize].head as usize;
                    if self.parent[j] == NONE {
                        self.is_sink[j] = false;
                        self.parent[j] = Self::sister(a);
                        self.ts[j] = self.ts[iu];
                        self.dist[j] = self.dist[iu] + 1;
                        self.set_active(j as u32);
                    } else if self.is_sink[j] {
                        return Some(a);
                    } else if self.ts[j] <= self.ts[iu] && self.dist[j] > self.dist[iu] {
                        self.parent[j] = Self::sister(a);
                        self.ts[j] = self.ts[iu];
                        self.dist[j] = self.dist[iu] + 1;
                    }
                }
                a = next;
            }
        } else {
            while a != NONE {
                let next = self.arcs[a as usize].next;
                if self.arcs[Self::sister(a) as usize].r_cap > T::zero() {
                    let j = self.arcs[a as usize].head as usize;
                    if self.parent[j] == NONE {
                        self.is_sink[j] = true;
                        self.parent[j] = Self::sister(a);
                        self.ts[j] = self.ts[iu];
                        self.dist[j] = self.dist[iu] + 1;
                        self.set_active(j as u32);
                    } else if !self.is_sink[j] {
                        return Some(Self::sister(a));
                    } else if self.ts[j] <= self.ts[iu] && self.dist[j] > self.dist[iu] {
                        self.parent[j] = Self::sister(a);
                        self.ts[j] = self.ts[iu];
                        self.dist[j] = self.dist[iu] + 1;
                    }
                }
                a = next;
            }
        }
        None
    }

    fn set_orphan_front(&mut self, i: u32) {
        self.parent[i as usize] = ORPHAN;
        self.orphans.push_front(i);
    }

    fn set_orphan_rear(&mut self, i: u32) {
        self.parent[i as usize] = ORPHAN;
        self.orphans.push_back(i);
    }

    fn augment(&mut self, middle: u32) {
        let sis = Self::sister(middle);
        let mut bottleneck = self.arcs[middle as usize].r_cap;

        let mut i = self.arcs[sis as usize].head as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.arcs[Self::sister(a) as usize].r_cap);
            i = self.arcs[a as usize].head as usize;
        }
        bottleneck = bottleneck.min(self.tr_cap[i]);

        let mut i = self.arcs[middle as usize].head as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.arcs[a as usize].r_cap);
            i = self.arcs[a as usize].head as usize;
        }
        bottleneck = bottleneck.min(-self.tr_cap[i]);

        self.arcs[sis as usize].r_cap = self.arcs[sis as usize].r_cap + bottleneck;
        self.arcs[middle as usize].r_cap = self.arcs[middle as usize].r_cap - bottleneck;

        let mut i = self.arcs[sis as usize].head as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                self.tr_cap[i] = self.tr_cap[i] - bottleneck;
                if self.tr_cap[i] <= T::zero() {
                    self.set_orphan_front(i as u32);
                }
                break;
            }
            let s = Self::sister(a) as usize;
            self.arcs[a as usize].r_cap = self.arcs[a as usize].r_cap + bottleneck;
            self.arcs[s].r_cap = self.arcs[s].r_cap - bottleneck;
            let next = self.arcs[a as usize].head as usize;
            if self.arcs[s].r_cap <= T::zero() {
                self.set_orphan_front(i as u32);
            }
            i = next;
        }

        let mut i = self.arcs[middle as usize].head as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                self.tr_cap[i] = self.tr_cap[i] + bottleneck;
                if self.tr_cap[i] >= T::zero() {
                    self.set_orphan_front(i as u32);
                }
                break;
            }
            let s = Self::sister(a) as usize;
            self.arcs[s].r_cap = self.arcs[s].r_cap + bottleneck;
            self.arcs[a as usize].r_cap = self.arcs[a as usize].r_cap - bottleneck;
            let next = self.arcs[a as usize].head as usize;
            if self.arcs[a as usize].r_cap <= T::zero() {
                self.set_orphan_front(i as u32);
            }
            i = next;
        }

        self.flow = self.flow + bottleneck;
    }

    /// Distance from `j` to its tree's terminal, or `INFINITE_DIST` if the walk
    /// meets an orphan. Marks the visited path with the current timestamp.
    fn origin_distance(&mut self, start: usize) -> u32 {
        let mut j = start;
        let mut d: u32 = 0;
        loop {
            if self.ts[j] == self.time {
                d += self.dist[j];
                break;
            }
            let a = self.parent[j];
            d += 1;
            if a == TERMINAL {
                self.ts[j] = self.time;
                self.dist[j] = 1;
                break;
            }
            if a == ORPHAN {
                return INFINITE_DIST;
            }
            j = self.arcs[a as usize].head as usize;
        }
        let mut j = start;
        let mut dd = d;
        while self.ts[j] != self.time {
            self.ts[j] = self.time;
            self.dist[j] = dd;
            dd -= 1;
            j = self.arcs[self.parent[j] as usize].head as usize;
        }
        d
    }

    fn process_orphan(&mut self, i: usize) {
        let sink = self.is_sink[i];
        let mut best = NONE;
        let mut best_d = INFINITE_DIST;
        let mut a0 = self.first[i];
        while a0 != NONE {
            let cap = if sink {
                self.arcs[a0 as usize].r_cap
            } else {
                self.arcs[Self::sister(a0) as usize].r_cap
            };
            if cap > T::zero() {
                let j = self.arcs[a0 as usize].head as usize;
                if self.is_sink[j] == sink && self.parent[j] != NONE {
                    let d = self.origin_distance(j);
                    if d < best_d {
                        best = a0;
                        best_d = d;
                    }
                }
            }
            a0 = self.arcs[a0 as usize].next;
        }

        if best != NONE {
            self.parent[i] = best;
            self.ts[i] = self.time;
            self.dist[i] = best_d + 1;
            return;
        }

        self.parent[i] = NONE;
        let mut a0 = self.first[i];
        while a0 != NONE {
            let j = self.arcs[a0 as usize].head as usize;
            let pj = self.parent[j];
            if self.is_sink[j] == sink && pj != NONE {
                let cap = if sink {
                    self.arcs[a0 as usize].r_cap
                } else {
                    self.arcs[Self::sister(a0) as usize].r_cap
                };
                if cap > T::zero() {
                    self.set_active(j as u32);
                }
                if pj != TERMINAL && pj != ORPHAN && self.arcs[pj as usize].head as usize == i {
                    self.set_orphan_rear(j as u32);
                }
            }
            a0 = self.arcs[a0 as usize].next;
        }
    }

    /// Runs the algorithm to completion and returns the flow value.
    pub fn solve(&mut self) -> T {
        if self.solved {
            return self.flow;
        }
        self.init();
        let mut current: Option<u32> = None;
        loop {
            if let Some(i) = current {
                if self.parent[i as usize] == NONE {
                    current = None;
                }
            }
            let i = match current {
                Some(i) => i,
                None => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };
            let joint = self.grow(i);
            self.time += 1;
            match joint {
                Some(a) => {
                    current = Some(i);
                    self.augment(a);
                    while let Some(o) = self.orphans.pop_front() {
                        self.process_orphan(o as usize);
                    }
                }
                None => current = None,
            }
        }
        self.solved = true;
        self.flow
    }

    /// Residual reachability from the source after [`FlowGraph::solve`].
    pub fn source_side(&self) -> Vec<bool> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for i in 0..n {
            if self.tr_cap[i] > T::zero() {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let mut a = self.first[i];
            while a != NONE {
                let arc = &self.arcs[a as usize];
                let j = arc.head as usize;
                if !seen[j] && arc.r_cap > T::zero() {
                    seen[j] = true;
                    queue.push_back(j);
                }
                a = arc.next;
            }
        }
        seen
    }
}

/// Solves the graph and returns the flow value with the minimal source side.
pub fn max_flow<T: Scalar>(graph: &mut FlowGraph<T>) -> MaxFlow<T> {
    let value = graph.solve();
    MaxFlow { value, source_side: graph.source_side() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_chain() {
        // s -> a (3), a -> b (5), b -> t (5)
        let mut g = FlowGraph::<f64>::new(2);
        g.add_tweights(0, 3.0, 0.0);
        g.add_edge(0, 1, 5.0, 0.0);
        g.add_tweights(1, 0.0, 5.0);
        let r = max_flow(&mut g);
        assert_eq!(r.value, 3.0);
        assert_eq!(r.source_side, vec![false, false]);
    }

    #[test]
    fn single_node_chain() {
        let mut g = FlowGraph::<f64>::new(1);
        g.add_tweights(0, 3.0, 5.0);
        assert_eq!(max_flow(&mut g).value, 3.0);
    }

    #[test]
    fn parallel_arcs() {
        let mut g = FlowGraph::<f64>::new(2);
        g.add_tweights(0, 10.0, 0.0);
        g.add_edge(0, 1, 2.0, 0.0);
        g.add_edge(0, 1, 2.0, 0.0);
        g.add_tweights(1, 0.0, 10.0);
        let r = max_flow(&mut g);
        assert_eq!(r.value, 4.0);
        assert_eq!(r.source_side, vec![true, false]);
    }

    #[test]
    fn classic_example() {
        // CLRS network with s = 0, t = 5 collapsed into terminal weights
        let mut g = FlowGraph::<f64>::new(4);
        g.add_tweights(0, 16.0, 0.0);
        g.add_tweights(1, 13.0, 0.0);
        g.add_edge(0, 1, 10.0, 4.0);
        g.add_edge(0, 2, 12.0, 0.0);
        g.add_edge(2, 1, 9.0, 0.0);
        g.add_edge(1, 3, 14.0, 0.0);
        g.add_edge(3, 2, 7.0, 0.0);
        g.add_tweights(2, 0.0, 20.0);
        g.add_tweights(3, 0.0, 4.0);
        assert_eq!(max_flow(&mut g).value, 23.0);
    }

    #[test]
    fn works_in_f32() {
        let mut g = FlowGraph::<f32>::new(2);
        g.add_tweights(0, 1.5, 0.0);
        g.add_edge(0, 1, 0.25, 0.25);
        g.add_tweights(1, 0.0, 1.0);
        assert_eq!(max_flow(&mut g).value, 0.25);
    }
}
