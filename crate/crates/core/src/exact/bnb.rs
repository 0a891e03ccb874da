use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use log::{debug, info};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::assignment::{cycles, ApState, ArcMask, Workspace};
use crate::error::{Error, Result};
use crate::heuristic::{nearest_neighbor, warm_start, TabuParams};
use crate::instance::CostMatrix;
use crate::tour::Tour;

pub type Arc = (usize, usize);

/// Subproblem of the branch-and-bound tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BnbNode {
    pub excluded_arcs: Vec<Arc>,
    pub included_arcs: Vec<Arc>,
    pub lower_bound: i64,
    pub depth: usize,
}

impl BnbNode {
    pub fn root() -> Self {
        Self {
            excluded_arcs: Vec::new(),
            included_arcs: Vec::new(),
            lower_bound: 0,
            depth: 0,
        }
    }

    pub(crate) fn mask(&self, n: usize) -> ArcMask {
        ArcMask::new(n, &self.excluded_arcs, &self.included_arcs)
    }
}

/// Subtour branching. For the subtour arcs `a1..ak`, child `t` excludes
/// `a_t` and forces `a1..a(t-1)`. Arcs already forced at the parent get no
/// child of their own, since excluding them would be infeasible. The
/// children's feasible sets partition the parent's tours: any tour misses
/// at least one subtour arc, and the first such arc picks its child.
pub fn branch(node: &BnbNode, subtour: &[usize]) -> Vec<BnbNode> {
    let k = subtour.len();
    let arcs: Vec<Arc> = (0..k).map(|t| (subtour[t], subtour[(t + 1) % k])).collect();
    let mut children = Vec::with_capacity(k);
    let mut forced = node.included_arcs.clone();
    for &arc in &arcs {
        if node.included_arcs.contains(&arc) {
            continue;
        }
        let mut excluded = node.excluded_arcs.clone();
        excluded.push(arc);
        children.push(BnbNode {
            excluded_arcs: excluded,
            included_arcs: forced.clone(),
            lower_bound: node.lower_bound,
            depth: node.depth + 1,
        });
        forced.push(arc);
    }
    children
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolveLimits {
    /// 0 disables the limit.
    pub time_limit_ms: u64,
    /// Maximum explored nodes, 0 disables the limit.
    pub node_limit: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    NodeLimit,
}

/// Evidence of one exact solve. Serializes with a fixed field order; the
/// hash covers every field except the two timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub tour: Tour,
    pub optimal_cost: i64,
    pub lower_bound_at_end: i64,
    /// Solver gap `100 * (ub - lb) / ub`.
    pub gap_percent: f64,
    pub optimal: bool,
    pub status: SolveStatus,
    pub bnb_nodes_explored: u64,
    pub ap_resolves: u64,
    pub warm_start_cost: i64,
    pub warm_start_ms: u64,
    pub wall_time_ms: u64,
    pub deterministic_fields_hash: String,
}

#[derive(Serialize)]
struct DeterministicFields<'a> {
    tour: &'a Tour,
    optimal_cost: i64,
    lower_bound_at_end: i64,
    gap_percent: f64,
    optimal: bool,
    status: SolveStatus,
    bnb_nodes_explored: u64,
    ap_resolves: u64,
    warm_start_cost: i64,
}

impl SolveReport {
    /// SHA-256 (hex) of the canonical JSON of the non-timing fields.
    pub fn compute_hash(&self) -> String {
        let fields = DeterministicFields {
            tour: &self.tour,
            optimal_cost: self.optimal_cost,
            lower_bound_at_end: self.lower_bound_at_end,
            gap_percent: self.gap_percent,
            optimal: self.optimal,
            status: self.status,
            bnb_nodes_explored: self.bnb_nodes_explored,
            ap_resolves: self.ap_resolves,
            warm_start_cost: self.warm_start_cost,
        };
        let json = serde_json::to_vec(&fields).expect("report fields serialize");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Solver gap `100 * (ub - lb) / ub`.
pub fn gap_percent(upper: i64, lower: i64) -> Result<f64> {
    if upper == 0 {
        return Err(Error::UndefinedGap(upper));
    }
    Ok(100.0 * (upper - lower) as f64 / upper as f64)
}

/// Heuristic quality `100 * (heuristic - optimum) / optimum`.
pub fn heuristic_gap_percent(heuristic: i64, optimum: i64) -> Result<f64> {
    if optimum == 0 {
        return Err(Error::UndefinedGap(optimum));
    }
    Ok(100.0 * (heuristic - optimum) as f64 / optimum as f64)
}

struct Open {
    node: BnbNode,
    state: ApState,
}

/// Min-queue on (bound, creation id); payloads live in a side table.
#[derive(Default)]
struct Queue {
    heap: BinaryHeap<Reverse<(i64, u64)>>,
    store: Vec<Option<Open>>,
}

impl Queue {
    fn push(&mut self, open: Open) {
        let id = self.store.len() as u64;
        self.heap.push(Reverse((open.node.lower_bound, id)));
        self.store.push(Some(open));
    }

    fn peek(&self) -> Option<(i64, u64)> {
        self.heap.peek().map(|Reverse(key)| *key)
    }

    fn pop(&mut self, id: u64) -> Open {
        self.heap.pop();
        self.store[id as usize]
            .take()
            .expect("queued node is stored")
    }
}

/// Best-first branch-and-bound on the assignment relaxation.
///
/// The queue is ordered by lower bound, then creation order. Children are
/// solved when created, re-using the parent's duals so each needs a single
/// augmenting path, and are dropped when their bound reaches the incumbent.
/// An assignment that forms one Hamiltonian cycle is a candidate incumbent;
/// otherwise its shortest subtour (lowest first node on ties) is branched on.
pub fn solve_exact(
    m: &CostMatrix,
    warm: Option<&Tour>,
    limits: SolveLimits,
) -> Result<SolveReport> {
    let started = Instant::now();
    let n = m.n();
    let mut incumbent = match warm {
        Some(t) => {
            t.validate(m)?;
            t.clone()
        }
        None => nearest_neighbor(m, 0)?,
    };
    let warm_start_cost = incumbent.cost;
    let deadline = (limits.time_limit_ms > 0).then(|| Duration::from_millis(limits.time_limit_ms));

    let mut ws = Workspace::default();
    let mut root = BnbNode::root();
    let root_state = ApState::solve(m, &root.mask(n), &mut ws)?;
    root.lower_bound = root_state.bound(m);
    let mut ap_resolves = 1u64;
    let mut explored = 0u64;
    info!(
        "root bound {} incumbent {} (n = {n})",
        root.lower_bound, incumbent.cost
    );

    let mut queue = Queue::default();
    queue.push(Open {
        node: root,
        state: root_state,
    });

    let mut status = SolveStatus::Optimal;
    let mut best_bound_logged = i64::MIN;
    while let Some((bound, id)) = queue.peek() {
        // The root is always examined, even when the warm start meets its bound.
        if bound >= incumbent.cost && explored > 0 {
            break;
        }
        if limits.node_limit > 0 && explored >= limits.node_limit {
            status = SolveStatus::NodeLimit;
            break;
        }
        if deadline.is_some_and(|d| started.elapsed() >= d) {
            status = SolveStatus::TimeLimit;
            break;
        }
        let Open { node, state } = queue.pop(id);
        explored += 1;
        if bound > best_bound_logged {
            best_bound_logged = bound;
            debug!(
                "bound {bound} incumbent {} nodes {explored}",
                incumbent.cost
            );
        }

        let successors = state.successors();
        let subtours = cycles(&successors)?;
        if subtours.len() == 1 {
            if bound >= incumbent.cost {
                continue;
            }
            let order = subtours.into_iter().next().expect("one cycle");
            incumbent = Tour { order, cost: bound };
            info!(
                "incumbent {} bound {bound} nodes {explored}",
                incumbent.cost
            );
            continue;
        }

        let shortest = subtours
            .iter()
            .min_by_key(|c| c.len())
            .expect("at least two cycles");
        let parent_mask = node.mask(n);
        for child in branch(&node, shortest) {
            let excluded = *child.excluded_arcs.last().expect("child excludes an arc");
            let mut mask = parent_mask.clone();
            mask.exclude(excluded);
            for &arc in &child.included_arcs[node.included_arcs.len()..] {
                mask.force(arc);
            }
            let mut child_state = state.clone();
            child_state.unassign(excluded.0);
            ap_resolves += 1;
            if child_state.augment(m, &mask, excluded.0, &mut ws).is_err() {
                continue;
            }
            let child_bound = child_state.bound(m);
            if child_bound >= incumbent.cost {
                continue;
            }
            queue.push(Open {
                node: BnbNode {
                    lower_bound: child_bound,
                    ..child
                },
                state: child_state,
            });
        }
    }

    let lower = match status {
        SolveStatus::Optimal => incumbent.cost,
        _ => queue
            .peek()
            .map_or(incumbent.cost, |(b, _)| b.min(incumbent.cost)),
    };
    let gap = gap_percent(incumbent.cost, lower)?;
    let optimal = lower == incumbent.cost;
    let status = if optimal {
        SolveStatus::Optimal
    } else {
        status
    };
    info!(
        "done: cost {} bound {lower} gap {gap:.4}% nodes {explored}",
        incumbent.cost
    );

    let mut report = SolveReport {
        optimal_cost: incumbent.cost,
        tour: incumbent,
        lower_bound_at_end: lower,
        gap_percent: gap,
        optimal,
        status,
        bnb_nodes_explored: explored,
        ap_resolves,
        warm_start_cost,
        warm_start_ms: 0,
        wall_time_ms: started.elapsed().as_millis() as u64,
        deterministic_fields_hash: String::new(),
    };
    report.deterministic_fields_hash = report.compute_hash();
    Ok(report)
}

/// Tabu warm start followed by [`solve_exact`].
pub fn solve_with_warm_start(
    m: &CostMatrix,
    params: &TabuParams,
    limits: SolveLimits,
) -> Result<SolveReport> {
    let started = Instant::now();
    let warm = warm_start(m, params)?;
    let warm_ms = started.elapsed().as_millis() as u64;
    info!(
        "warm start cost {} after {} tabu iterations",
        warm.tour.cost, warm.iterations
    );
    let remaining = SolveLimits {
        time_limit_ms: match limits.time_limit_ms {
            0 => 0,
            t => t.saturating_sub(warm_ms).max(1),
        },
        ..limits
    };
    let mut report = solve_exact(m, Some(&warm.tour), remaining)?;
    report.warm_start_ms = warm_ms;
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(report)
}
