use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::moves::{apply_or_opt, or_opt_delta, prefix_sums, reverse_delta_with, swap_delta};
use crate::instance::CostMatrix;
use crate::tour::Tour;

/// Longest segment relocated by the or-opt neighborhood.
const MAX_SEGMENT: usize = 3;
/// Largest tour whose every priced move is checked against the reference
/// delta functions in debug builds.
const CROSS_CHECK_MAX_N: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabuParams {
    /// Iterations a removed arc stays forbidden from re-entering the tour.
    pub tenure: usize,
    /// Consecutive non-improving iterations before the search stops.
    pub max_stall: usize,
    /// Wall-clock cap in milliseconds, 0 for none. Hitting it makes the
    /// result depend on machine speed.
    pub time_limit_ms: u64,
    pub enable_reversal: bool,
    /// Not consulted by the current neighborhood: the scan order fixes
    /// every tie, so the search is deterministic without it.
    pub seed: u64,
}

impl TabuParams {
    pub fn for_size(n: usize) -> Self {
        Self {
            tenure: (n / 10).max(10),
            max_stall: (20 * n).max(100),
            time_limit_ms: 0,
            enable_reversal: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabuOutcome {
    pub tour: Tour,
    pub iterations: u64,
    pub timed_out: bool,
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Swap(usize, usize),
    OrOpt {
        start: usize,
        len: usize,
        after: usize,
    },
    Reverse(usize, usize),
}

/// Per-iteration view of the current tour: `ext` is `order` with its first
/// node appended, `arc[k]` the cost of the arc leaving position `k`.
struct View<'a> {
    n: usize,
    costs: &'a [i64],
    ext: Vec<usize>,
    arc: Vec<i64>,
}

impl View<'_> {
    #[inline]
    fn c(&self, a: usize, b: usize) -> i64 {
        self.costs[a * self.n + b]
    }

    fn load(&mut self, order: &[usize]) {
        self.ext.clear();
        self.ext.extend_from_slice(order);
        self.ext.push(order[0]);
        self.arc.clear();
        for k in 0..self.n {
            let (a, b) = (self.ext[k], self.ext[k + 1]);
            self.arc.push(self.costs[a * self.n + b]);
        }
    }

    /// Arcs a swap of positions `i < j` puts into the tour, with its delta.
    fn swap(&self, i: usize, j: usize, out: &mut Vec<(usize, usize)>) -> i64 {
        let n = self.n;
        let (o, a, b) = (&self.ext, self.ext[i], self.ext[j]);
        out.clear();
        if j == i + 1 {
            let p = o[(i + n - 1) % n];
            let q = o[j + 1];
            out.extend_from_slice(&[(p, b), (b, a), (a, q)]);
            return self.c(p, b) + self.c(b, a) + self.c(a, q)
                - self.arc[(i + n - 1) % n]
                - self.arc[i]
                - self.arc[j];
        }
        if i == 0 && j == n - 1 {
            let p = o[j - 1];
            let q = o[1];
            out.extend_from_slice(&[(p, a), (a, b), (b, q)]);
            return self.c(p, a) + self.c(a, b) + self.c(b, q)
                - self.arc[j - 1]
                - self.arc[j]
                - self.arc[0];
        }
        let pi = o[(i + n - 1) % n];
        let (ni, pj, nj) = (o[i + 1], o[j - 1], o[j + 1]);
        out.extend_from_slice(&[(pi, b), (b, ni), (pj, a), (a, nj)]);
        self.c(pi, b) + self.c(b, ni) + self.c(pj, a) + self.c(a, nj)
            - self.arc[(i + n - 1) % n]
            - self.arc[i]
            - self.arc[j - 1]
            - self.arc[j]
    }

    /// Arcs reversing positions `i..=j` puts into the tour.
    fn reversal_arcs(&self, i: usize, j: usize, out: &mut Vec<(usize, usize)>) {
        let n = self.n;
        let o = &self.ext;
        out.clear();
        for k in i..j {
            out.push((o[k + 1], o[k]));
        }
        if i == 0 && j == n - 1 {
            out.push((o[0], o[n - 1]));
        } else {
            out.push((o[(i + n - 1) % n], o[j]));
            out.push((o[i], o[j + 1]));
        }
    }
}

/// Tabu search over swap, or-opt (segments of 1 to 3 nodes, direction
/// preserved) and optional segment reversal.
///
/// Each iteration applies the best admissible move, scanning swap, then
/// or-opt, then reversal, each in lexicographic index order; the first move
/// found wins a tie. A move is tabu when it would put back an arc removed
/// within the last `tenure` iterations, unless it yields a new incumbent.
/// Returns the incumbent, which is never worse than `initial`.
pub fn tabu_search(m: &CostMatrix, initial: &Tour, params: &TabuParams) -> TabuOutcome {
    tabu_search_to_bound(m, initial, params, i64::MIN)
}

/// [`tabu_search`] that also stops once the incumbent reaches `bound`.
/// With a valid lower bound the returned tour is the one the unbounded
/// search would return, since the incumbent only changes on strict
/// improvement.
pub fn tabu_search_to_bound(
    m: &CostMatrix,
    initial: &Tour,
    params: &TabuParams,
    bound: i64,
) -> TabuOutcome {
    let n = initial.order.len();
    let started = Instant::now();
    let deadline = (params.time_limit_ms > 0).then(|| Duration::from_millis(params.time_limit_ms));

    let mut best = initial.clone();
    if n < 3 {
        return TabuOutcome {
            tour: best,
            iterations: 0,
            timed_out: false,
        };
    }

    let costs = m.as_row_major();
    // Row `b` of `into` holds the costs of arcs entering `b`.
    let mut into = vec![0; n * n];
    for a in 0..n {
        for b in 0..n {
            into[b * n + a] = costs[a * n + b];
        }
    }
    let mut view = View {
        n,
        costs,
        ext: Vec::with_capacity(n + 1),
        arc: Vec::with_capacity(n),
    };
    // Iteration until which each arc may not re-enter the tour.
    let mut tabu_until = vec![0u64; n * n];
    let mut order = initial.order.clone();
    let mut cost = initial.cost;
    let (mut fwd, mut bwd) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut scratch = Vec::with_capacity(n + 1);
    let mut successor = vec![0usize; n];

    let check = cfg!(debug_assertions) && n <= CROSS_CHECK_MAX_N;
    let mut iteration: u64 = 0;
    let mut stall = 0usize;
    let mut timed_out = false;

    while stall < params.max_stall && best.cost > bound {
        if let Some(limit) = deadline {
            if started.elapsed() >= limit {
                timed_out = true;
                break;
            }
        }
        iteration += 1;
        view.load(&order);

        let admissible = |delta: i64, added: &[(usize, usize)]| {
            cost + delta < best.cost
                || added
                    .iter()
                    .all(|&(a, b)| tabu_until[a * n + b] <= iteration)
        };
        let mut best_delta = i64::MAX;
        let mut chosen: Option<Move> = None;
        let o = &view.ext;
        let arc = &view.arc;

        for i in 0..n {
            let (a, pi, ni) = (o[i], o[(i + n - 1) % n], o[i + 1]);
            let leaving_pi = &costs[pi * n..(pi + 1) * n];
            let leaving_a = &costs[a * n..(a + 1) * n];
            let entering_ni = &into[ni * n..(ni + 1) * n];
            let entering_a = &into[a * n..(a + 1) * n];
            let base = -arc[(i + n - 1) % n] - arc[i];
            let mut consider = |j: usize, delta: i64| {
                if check {
                    assert_eq!(delta, swap_delta(m, &order, i, j));
                }
                if delta < best_delta {
                    view.swap(i, j, &mut scratch);
                    if admissible(delta, &scratch) {
                        best_delta = delta;
                        chosen = Some(Move::Swap(i, j));
                    }
                }
            };
            if i + 1 < n {
                consider(i + 1, swap_delta(m, &order, i, i + 1));
            }
            let last = if i == 0 { n - 1 } else { n };
            if i + 2 < last {
                let windows = o[i + 1..=last].windows(3).zip(arc[i + 1..last].windows(2));
                for (k, (w, c)) in windows.enumerate() {
                    let (before, b, after) = (w[0], w[1], w[2]);
                    let delta = base
                        + leaving_pi[b]
                        + entering_ni[b]
                        + entering_a[before]
                        + leaving_a[after]
                        - c[0]
                        - c[1];
                    consider(i + 2 + k, delta);
                }
            }
            if i == 0 {
                consider(n - 1, swap_delta(m, &order, 0, n - 1));
            }
        }

        for start in 0..n {
            let prev_pos = (start + n - 1) % n;
            let prev = o[prev_pos];
            let head = o[start];
            let entering_head = &into[head * n..(head + 1) * n];
            for len in 1..=MAX_SEGMENT.min(n - start) {
                if len + 2 > n {
                    break;
                }
                let tail = o[start + len - 1];
                let next = o[start + len];
                let leaving_tail = &costs[tail * n..(tail + 1) * n];
                let removal = view.c(prev, next) - arc[prev_pos] - arc[start + len - 1];
                let (first, second) = if start == 0 {
                    (len..n - 1, 0..0)
                } else {
                    (0..start - 1, start + len..n)
                };
                let scan = |r: std::ops::Range<usize>| {
                    let pairs = o[r.start..r.end + 1].windows(2).zip(&arc[r.clone()]);
                    r.zip(pairs)
                };
                for (after, (w, &c)) in scan(first).chain(scan(second)) {
                    let (y, z) = (w[0], w[1]);
                    let delta = removal + entering_head[y] + leaving_tail[z] - c;
                    if check {
                        assert_eq!(delta, or_opt_delta(m, &order, start, len, after));
                    }
                    if delta < best_delta
                        && admissible(delta, &[(prev, next), (y, head), (tail, z)])
                    {
                        best_delta = delta;
                        chosen = Some(Move::OrOpt { start, len, after });
                    }
                }
            }
        }

        if params.enable_reversal {
            prefix_sums(m, &order, &mut fwd, &mut bwd);
            // Reversing i..=j changes the inner arcs by (bwd - fwd)[j] - (bwd - fwd)[i].
            for i in 0..n {
                let (a, p) = (o[i], o[(i + n - 1) % n]);
                let leaving_p = &costs[p * n..(p + 1) * n];
                let leaving_a = &costs[a * n..(a + 1) * n];
                let base = fwd[i] - bwd[i] - arc[(i + n - 1) % n];
                let last = if i == 0 { n - 1 } else { n };
                let spans = o[i + 1..=last]
                    .windows(2)
                    .zip(&arc[i + 1..last])
                    .zip(bwd[i + 1..last].iter().zip(&fwd[i + 1..last]));
                let inner = spans.enumerate().map(|(k, ((w, &c), (&b, &f)))| {
                    (
                        i + 1 + k,
                        base + b - f + leaving_p[w[0]] + leaving_a[w[1]] - c,
                    )
                });
                let whole =
                    (i == 0).then(|| (n - 1, reverse_delta_with(m, &order, &fwd, &bwd, 0, n - 1)));
                for (j, delta) in inner.chain(whole) {
                    if check {
                        assert_eq!(delta, reverse_delta_with(m, &order, &fwd, &bwd, i, j));
                    }
                    if delta < best_delta {
                        view.reversal_arcs(i, j, &mut scratch);
                        if admissible(delta, &scratch) {
                            best_delta = delta;
                            chosen = Some(Move::Reverse(i, j));
                        }
                    }
                }
            }
        }

        let Some(mv) = chosen else {
            stall += 1;
            continue;
        };

        match mv {
            Move::Swap(i, j) => order.swap(i, j),
            Move::Reverse(i, j) => order[i..=j].reverse(),
            Move::OrOpt { start, len, after } => order = apply_or_opt(&order, start, len, after),
        }
        cost += best_delta;
        debug_assert_eq!(cost, crate::tour::cycle_cost(m, &order));

        for k in 0..n {
            successor[order[k]] = order[(k + 1) % n];
        }
        let expires = iteration + params.tenure as u64;
        for k in 0..n {
            let (a, b) = (view.ext[k], view.ext[k + 1]);
            if successor[a] != b {
                tabu_until[a * n + b] = expires;
            }
        }

        if cost < best.cost {
            best = Tour {
                order: order.clone(),
                cost,
            };
            stall = 0;
        } else {
            stall += 1;
        }
    }

    TabuOutcome {
        tour: best,
        iterations: iteration,
        timed_out,
    }
}
