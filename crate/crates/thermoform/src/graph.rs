//! Mean-cycle computations on the transition graph of a shift space.
//!
//! Edges `a -> b` carry the weight of their source vertex, matching the
//! first-symbol convention for Birkhoff sums.  Extreme mean cycles are found
//! with Karp's dynamic program; the witness cycle is then extracted from the
//! tight subgraph of the shifted weights, which certifies its own mean.

use crate::scalar::Scalar;
use crate::shift::ShiftSpace;

/// A cycle together with its exact mean weight.
#[derive(Debug, Clone)]
pub(crate) struct MeanCycle<S> {
    /// Vertex sequence, no repeats; the edge closing the cycle is implicit.
    pub cycle: Vec<usize>,
    /// Mean of the vertex weights along the cycle.
    pub mean: S,
    /// The dynamic-programming value, kept for cross-checking the witness.
    pub karp_value: S,
}

fn karp_value<S: Scalar>(space: &ShiftSpace, weight: &[S]) -> S {
    let n = space.symbol_count();
    let inf = S::infinity();
    // d[k][v] = least weight of a k-edge walk from vertex 0 to v.
    let mut d = vec![inf; (n + 1) * n];
    d[0] = S::zero();
    for k in 1..=n {
        for u in 0..n {
            let du = d[(k - 1) * n + u];
            if du < inf {
                let cand = du + weight[u];
                for v in 0..n {
                    if space.allowed(u, v) && cand < d[k * n + v] {
                        d[k * n + v] = cand;
                    }
                }
            }
        }
    }
    let mut best = inf;
    for v in 0..n {
        if d[n * n + v] >= inf {
            continue;
        }
        let mut worst = S::neg_infinity();
        for k in 0..n {
            if d[k * n + v] < inf {
                let r = (d[n * n + v] - d[k * n + v]) / S::of((n - k) as f64);
                if r > worst {
                    worst = r;
                }
            }
        }
        if worst < best {
            best = worst;
        }
    }
    best
}

/// Extract a cycle whose mean equals `value` from the subgraph of edges that
/// are tight for the Bellman potentials of the shifted weights.
fn witness_cycle<S: Scalar>(space: &ShiftSpace, weight: &[S], value: S) -> Option<Vec<usize>> {
    let n = space.symbol_count();
    let shifted: Vec<S> = weight.iter().map(|&w| w - value).collect();
    // Bellman iterations from a virtual source attached to every vertex.
    let mut d = vec![S::zero(); n];
    for _ in 0..=n {
        let prev = d.clone();
        for u in 0..n {
            let cand = prev[u] + shifted[u];
            for v in 0..n {
                if space.allowed(u, v) && cand < d[v] {
                    d[v] = cand;
                }
            }
        }
    }
    let scale = shifted
        .iter()
        .map(|w| w.abs())
        .fold(S::one(), |a, b| a.max(b));
    let mut slack = scale * S::of(1e-9) * S::of(n as f64);
    for _ in 0..6 {
        if let Some(c) = tight_cycle(space, &shifted, &d, slack) {
            return Some(c);
        }
        slack = slack * S::of(10.0);
    }
    None
}

fn tight_cycle<S: Scalar>(
    space: &ShiftSpace,
    shifted: &[S],
    d: &[S],
    slack: S,
) -> Option<Vec<usize>> {
    let n = space.symbol_count();
    // Iterative DFS over tight edges looking for a back edge.
    let mut color = vec![0u8; n]; // 0 white, 1 on path, 2 done
    let mut next_edge = vec![0usize; n];
    let mut path: Vec<usize> = Vec::new();
    for start in 0..n {
        if color[start] != 0 {
            continue;
        }
        color[start] = 1;
        path.push(start);
        while let Some(&u) = path.last() {
            let mut pushed = false;
            while next_edge[u] < n {
                let v = next_edge[u];
                next_edge[u] += 1;
                if !space.allowed(u, v) {
                    continue;
                }
                if (d[u] + shifted[u] - d[v]).abs() > slack {
                    continue;
                }
                if color[v] == 1 {
                    let pos = path.iter().position(|&w| w == v).unwrap();
                    return Some(path[pos..].to_vec());
                }
                if color[v] == 0 {
                    color[v] = 1;
                    path.push(v);
                    pushed = true;
                    break;
                }
            }
            if !pushed {
                path.pop();
                color[u] = 2;
            }
        }
    }
    None
}

fn exact_mean<S: Scalar>(weight: &[S], cycle: &[usize]) -> S {
    let s: S = cycle.iter().map(|&v| weight[v]).sum();
    s / S::of(cycle.len() as f64)
}

/// Minimum mean cycle with a certified witness.
pub(crate) fn min_mean_cycle<S: Scalar>(space: &ShiftSpace, weight: &[S]) -> MeanCycle<S> {
    let value = karp_value(space, weight);
    match witness_cycle(space, weight, value) {
        Some(cycle) => {
            let mean = exact_mean(weight, &cycle);
            MeanCycle {
                cycle,
                mean,
                karp_value: value,
            }
        }
        None => MeanCycle {
            cycle: Vec::new(),
            mean: value,
            karp_value: value,
        },
    }
}

/// Maximum mean cycle with a certified witness.
pub(crate) fn max_mean_cycle<S: Scalar>(space: &ShiftSpace, weight: &[S]) -> MeanCycle<S> {
    let negated: Vec<S> = weight.iter().map(|&w| -w).collect();
    let mc = min_mean_cycle(space, &negated);
    MeanCycle {
        mean: -mc.mean,
        cycle: mc.cycle,
        karp_value: -mc.karp_value,
    }
}

/// Value-only variants used inside root finding loops.
pub(crate) fn min_mean_value<S: Scalar>(space: &ShiftSpace, weight: &[S]) -> S {
    karp_value(space, weight)
}

pub(crate) fn max_mean_value<S: Scalar>(space: &ShiftSpace, weight: &[S]) -> S {
    let negated: Vec<S> = weight.iter().map(|&w| -w).collect();
    -karp_value(space, &negated)
}

/// All simple cycles of length at most `max_len`, visited in lexicographic
/// order of (smallest vertex, path).  `visit` returns `false` to abort when a
/// guard trips.
pub(crate) fn for_each_simple_cycle<F>(space: &ShiftSpace, max_len: usize, mut visit: F) -> bool
where
    F: FnMut(&[usize]) -> bool,
{
    let n = space.symbol_count();
    let mut path = Vec::with_capacity(max_len);
    let mut on_path = vec![false; n];
    for root in 0..n {
        path.push(root);
        on_path[root] = true;
        if !extend(space, root, max_len, &mut path, &mut on_path, &mut visit) {
            return false;
        }
        on_path[root] = false;
        path.pop();
    }
    true
}

fn extend<F>(
    space: &ShiftSpace,
    root: usize,
    max_len: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    visit: &mut F,
) -> bool
where
    F: FnMut(&[usize]) -> bool,
{
    let u = *path.last().unwrap();
    if space.allowed(u, root) && !visit(path) {
        return false;
    }
    if path.len() == max_len {
        return true;
    }
    for v in root + 1..space.symbol_count() {
        if space.allowed(u, v) && !on_path[v] {
            path.push(v);
            on_path[v] = true;
            if !extend(space, root, max_len, path, on_path, visit) {
                return false;
            }
            on_path[v] = false;
            path.pop();
        }
    }
    true
}
