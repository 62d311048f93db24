//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use dtncap::contacts::ContactStream;

/// Relaxes every contact until nothing changes.
pub fn fixed_point(stream: &ContactStream, n: usize, source: usize, t0: f64, theta: f64) -> Vec<f64> {
    let mut t = vec![f64::INFINITY; n];
    t[source] = t0;
    loop {
        let mut changed = false;
        for c in stream.iter() {
            for (u, w) in [(c.node_a, c.node_b), (c.node_b, c.node_a)] {
                if t[u].is_finite() {
                    let recv = c.t_begin.max(t[u]) + theta;
                    if recv <= c.t_end && recv <= stream.horizon && recv < t[w] {
                        t[w] = recv;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return t;
        }
    }
}

/// Enumerates every contact sequence leaving the source.
pub fn exhaustive(stream: &ContactStream, n: usize, source: usize, t0: f64, theta: f64) -> Vec<f64> {
    fn walk(stream: &ContactStream, node: usize, t: f64, theta: f64, depth: usize, best: &mut Vec<f64>) {
        if t < best[node] {
            best[node] = t;
        }
        if depth == 0 {
            return;
        }
        for c in stream.iter().filter(|c| c.involves(node)) {
            let recv = c.t_begin.max(t) + theta;
            if recv <= c.t_end && recv <= stream.horizon {
                walk(stream, c.other(node), recv, theta, depth - 1, best);
            }
        }
    }
    let mut best = vec![f64::INFINITY; n];
    walk(stream, source, t0, theta, stream.len().min(n), &mut best);
    best
}

/// Time-respecting reachability with instantaneous hops.
pub fn reachable(stream: &ContactStream, n: usize, source: usize, t0: f64) -> Vec<bool> {
    fixed_point(stream, n, source, t0, 0.0).iter().map(|t| t.is_finite()).collect()
}
