use std::collections::VecDeque;

use cheeger::maxflow::{max_flow, FlowGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Edmonds–Karp on a dense capacity matrix; node `n` is the source, `n + 1` the sink.
fn edmonds_karp(mut cap: Vec<Vec<f64>>, s: usize, t: usize) -> f64 {
    let n = cap.len();
    let mut flow = 0.0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > 0.0 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return flow;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = t;
        while v != s {
            bottleneck = bottleneck.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            cap[prev[v]][v] -= bottleneck;
            cap[v][prev[v]] += bottleneck;
            v = prev[v];
        }
        flow += bottleneck;
    }
}

#[test]
fn random_graphs_match_augmenting_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let n = 30;
        let mut g = FlowGraph::<f64>::new(n);
        let mut dense = vec![vec![0.0; n + 2]; n + 2];
        let (s, t) = (n, n + 1);
        for u in 0..n {
            let a: u32 = rng.gen_range(0..4);
            let b: u32 = rng.gen_range(0..4);
            let (cs, ct) = (a as f64, b as f64);
            g.add_tweights(u, cs, ct);
            dense[s][u] += cs;
            dense[u][t] += ct;
        }
        for _ in 0..90 {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u == v {
                continue;
            }
            let c = rng.gen_range(0..6) as f64;
            let r = rng.gen_range(0..6) as f64;
            g.add_edge(u, v, c, r);
            dense[u][v] += c;
            dense[v][u] += r;
        }
        let expect = edmonds_karp(dense.clone(), s, t);
        let got = max_flow(&mut g);
        assert_eq!(got.value, expect);

        // the returned source side is a cut of the same capacity
        let side = |x: usize| x == s || (x < n && got.source_side[x]);
        let mut cut = 0.0;
        for u in 0..n + 2 {
            for v in 0..n + 2 {
                if side(u) && !side(v) {
                    cut += dense[u][v];
                }
            }
        }
        assert_eq!(cut, expect);
    }
}

#[test]
fn fractional_capacities() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n = 30;
        let mut g = FlowGraph::<f64>::new(n);
        let mut dense = vec![vec![0.0; n + 2]; n + 2];
        for u in 0..n {
            let (cs, ct) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
            g.add_tweights(u, cs, ct);
            dense[n][u] += cs;
            dense[u][n + 1] += ct;
        }
        for _ in 0..120 {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u != v {
                let c = rng.gen_range(0.0..3.0);
                g.add_edge(u, v, c, c);
                dense[u][v] += c;
                dense[v][u] += c;
            }
        }
        let expect = edmonds_karp(dense, n, n + 1);
        let got = max_flow(&mut g).value;
        assert!((got - expect).abs() <= 1e-9 * expect.max(1.0), "{got} vs {expect}");
    }
}
