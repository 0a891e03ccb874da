//! Reference solvers: exhaustive enumeration and Held-Karp for ground
//! truth, greedy-edge and 2-opt descent as comparison baselines.

use crate::error::{Error, Result};
use crate::heuristic::{prefix_sums, reverse_delta_with};
use crate::instance::CostMatrix;
use crate::tour::Tour;

pub const BRUTE_FORCE_CAP: usize = 11;
pub const HELD_KARP_CAP: usize = 20;

/// Enumerates all `(n-1)!` tours that start at node 0, in lexicographic
/// order, and keeps the first one of minimum cost.
pub fn brute_force(m: &CostMatrix) -> Result<Tour> {
    let n = m.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::SizeCap {
            algorithm: "brute_force",
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }

    struct Search<'a> {
        m: &'a CostMatrix,
        path: Vec<usize>,
        used: Vec<bool>,
        best: Option<(i64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn extend(&mut self, partial: i64) {
            let n = self.m.n();
            let last = *self.path.last().expect("path starts at 0");
            if self.path.len() == n {
                let total = partial + self.m.get(last, 0);
                if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
                    self.best = Some((total, self.path.clone()));
                }
                return;
            }
            for v in 1..n {
                if !self.used[v] {
                    self.used[v] = true;
                    self.path.push(v);
                    self.extend(partial + self.m.get(last, v));
                    self.path.pop();
                    self.used[v] = false;
                }
            }
        }
    }

    let mut search = Search {
        m,
        path: vec![0],
        used: vec![false; n],
        best: None,
    };
    search.used[0] = true;
    search.extend(0);
    let (cost, order) = search.best.expect("n >= 2 has a tour");
    Ok(Tour { order, cost })
}

/// Subset dynamic program over (visited set, last node), anchored at 0.
pub fn held_karp(m: &CostMatrix) -> Result<Tour> {
    let n = m.n();
    if n > HELD_KARP_CAP {
        return Err(Error::SizeCap {
            algorithm: "held_karp",
            n,
            cap: HELD_KARP_CAP,
        });
    }
    // Bit k of a subset stands for node k + 1.
    let others = n - 1;
    let full = (1usize << others) - 1;
    const UNSET: i64 = i64::MAX;
    let mut cost = vec![UNSET; (full + 1) * n];
    let mut parent = vec![u8::MAX; (full + 1) * n];
    for v in 1..n {
        cost[(1 << (v - 1)) * n + v] = m.get(0, v);
        parent[(1 << (v - 1)) * n + v] = 0;
    }
    for subset in 1..=full {
        for last in 1..n {
            let bit = 1 << (last - 1);
            if subset & bit == 0 {
                continue;
            }
            let here = cost[subset * n + last];
            if here == UNSET {
                continue;
            }
            for next in 1..n {
                let nbit = 1 << (next - 1);
                if subset & nbit != 0 {
                    continue;
                }
                let slot = (subset | nbit) * n + next;
                let candidate = here + m.get(last, next);
                if candidate < cost[slot] {
                    cost[slot] = candidate;
                    parent[slot] = last as u8;
                }
            }
        }
    }

    let (mut last, mut best) = (0usize, UNSET);
    for v in 1..n {
        let total = cost[full * n + v] + m.get(v, 0);
        if total < best {
            best = total;
            last = v;
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut subset = full;
    while last != 0 {
        order.push(last);
        let prev = parent[subset * n + last] as usize;
        subset &= !(1 << (last - 1));
        last = prev;
    }
    order.push(0);
    order.reverse();
    debug_assert_eq!(crate::tour::cycle_cost(m, &order), best);
    Ok(Tour { order, cost: best })
}

/// Greedy edge: scan arcs by ascending cost (then source, then target) and
/// keep an arc when both endpoints still have the needed free degree and it
/// does not close a premature cycle.
pub fn greedy_edge(m: &CostMatrix) -> Tour {
    let n = m.n();
    let mut arcs: Vec<(i64, usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| (m.get(i, j), i, j))
        .collect();
    arcs.sort_unstable();

    let mut succ = vec![usize::MAX; n];
    let mut has_pred = vec![false; n];
    // For a path tail, the head of its path; for a head, its tail.
    let mut head_of = (0..n).collect::<Vec<_>>();
    let mut tail_of = (0..n).collect::<Vec<_>>();
    let mut added = 0;
    for &(_, i, j) in &arcs {
        if added == n - 1 {
            break;
        }
        if succ[i] != usize::MAX || has_pred[j] || head_of[i] == j {
            continue;
        }
        let head = head_of[i];
        let tail = tail_of[j];
        succ[i] = j;
        has_pred[j] = true;
        tail_of[head] = tail;
        head_of[tail] = head;
        added += 1;
    }
    let tail = (0..n)
        .find(|&v| succ[v] == usize::MAX)
        .expect("one open path");
    succ[tail] = head_of[tail];

    let mut order = Vec::with_capacity(n);
    let mut v = 0;
    for _ in 0..n {
        order.push(v);
        v = succ[v];
    }
    let cost = crate::tour::cycle_cost(m, &order);
    Tour { order, cost }
}

/// First-improvement descent with segment reversal, priced in both arc
/// directions, until no reversal lowers the cost.
pub fn two_opt_descent(m: &CostMatrix, t: &Tour) -> Tour {
    let n = t.len();
    let mut order = t.order.clone();
    let mut cost = t.cost;
    let (mut fwd, mut bwd) = (Vec::with_capacity(n), Vec::with_capacity(n));
    'outer: loop {
        prefix_sums(m, &order, &mut fwd, &mut bwd);
        for i in 0..n {
            for j in i + 1..n {
                let delta = reverse_delta_with(m, &order, &fwd, &bwd, i, j);
                if delta < 0 {
                    order[i..=j].reverse();
                    cost += delta;
                    continue 'outer;
                }
            }
        }
        break;
    }
    Tour { order, cost }
}
