//! Linear assignment relaxation with dual potentials.
//!
//! Shortest augmenting paths over reduced costs `c[i][j] - u[i] - v[j]`,
//! with forbidden arcs (self-arcs, excluded arcs, and arcs that conflict
//! with a forced arc) removed from the graph instead of priced.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::CostMatrix;

const FREE: u32 = u32::MAX;

/// Optimal assignment plus the dual potentials that certify it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApSolution {
    /// `successor[i]` is the column matched to row `i`.
    pub successor: Vec<usize>,
    pub row_potentials: Vec<i64>,
    pub col_potentials: Vec<i64>,
    pub bound: i64,
}

/// Permitted-arc table for one subproblem. `true` marks a forbidden arc.
#[derive(Debug, Clone)]
pub(crate) struct ArcMask {
    n: usize,
    forbidden: Vec<bool>,
}

impl ArcMask {
    pub(crate) fn new(n: usize, excluded: &[(usize, usize)], included: &[(usize, usize)]) -> Self {
        let mut mask = Self {
            n,
            forbidden: vec![false; n * n],
        };
        for i in 0..n {
            mask.forbidden[i * n + i] = true;
        }
        for &(i, j) in excluded {
            mask.forbidden[i * n + j] = true;
        }
        for &arc in included {
            mask.force(arc);
        }
        mask
    }

    pub(crate) fn exclude(&mut self, (i, j): (usize, usize)) {
        self.forbidden[i * self.n + j] = true;
    }

    /// Forbids every other arc leaving `i` or entering `j`.
    pub(crate) fn force(&mut self, (i, j): (usize, usize)) {
        let n = self.n;
        for k in 0..n {
            if k != j {
                self.forbidden[i * n + k] = true;
            }
            if k != i {
                self.forbidden[k * n + j] = true;
            }
        }
    }

    #[inline]
    pub(crate) fn permits(&self, i: usize, j: usize) -> bool {
        !self.forbidden[i * self.n + j]
    }

    #[inline]
    fn row(&self, i: usize) -> &[bool] {
        &self.forbidden[i * self.n..(i + 1) * self.n]
    }
}

/// Working state of the solver; kept per open branch-and-bound node so a
/// child can be re-solved with one augmentation from its parent's duals.
#[derive(Debug, Clone)]
pub(crate) struct ApState {
    row_to_col: Vec<u32>,
    col_to_row: Vec<u32>,
    u: Vec<i64>,
    v: Vec<i64>,
}

/// Scratch buffers reused across augmentations.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    dist: Vec<i64>,
    pred: Vec<u32>,
    done: Vec<bool>,
    scanned: Vec<usize>,
}

impl ApState {
    /// Solves from scratch: column then row reduction, a greedy matching on
    /// zero reduced costs, then one augmentation per free row.
    pub(crate) fn solve(m: &CostMatrix, mask: &ArcMask, ws: &mut Workspace) -> Result<Self> {
        let n = m.n();
        let mut v = vec![i64::MAX; n];
        for i in 0..n {
            let row = m.row(i);
            for j in 0..n {
                if mask.permits(i, j) && row[j] < v[j] {
                    v[j] = row[j];
                }
            }
        }
        if let Some(j) = v.iter().position(|&x| x == i64::MAX) {
            return Err(Error::Infeasible(format!(
                "column {j} has no permitted arc"
            )));
        }
        let mut state = Self {
            row_to_col: vec![FREE; n],
            col_to_row: vec![FREE; n],
            u: vec![0; n],
            v,
        };
        for i in 0..n {
            let row = m.row(i);
            let mut best = i64::MAX;
            let mut best_col = FREE;
            for (j, &c) in row.iter().enumerate() {
                if mask.permits(i, j) {
                    let rc = c - state.v[j];
                    if rc < best {
                        best = rc;
                        best_col = j as u32;
                    }
                }
            }
            if best_col == FREE {
                return Err(Error::Infeasible(format!("row {i} has no permitted arc")));
            }
            state.u[i] = best;
            // Greedy pass: take the first tight free column.
            for (j, &c) in row.iter().enumerate() {
                if state.col_to_row[j] == FREE
                    && mask.permits(i, j)
                    && c - state.u[i] - state.v[j] == 0
                {
                    state.row_to_col[i] = j as u32;
                    state.col_to_row[j] = i as u32;
                    break;
                }
            }
        }
        for i in 0..n {
            if state.row_to_col[i] == FREE {
                state.augment(m, mask, i, ws)?;
            }
        }
        Ok(state)
    }

    /// Drops the assignment of `row`; duals stay feasible.
    pub(crate) fn unassign(&mut self, row: usize) {
        let col = self.row_to_col[row];
        if col != FREE {
            self.col_to_row[col as usize] = FREE;
            self.row_to_col[row] = FREE;
        }
    }

    #[cfg(test)]
    pub(crate) fn column_of(&self, row: usize) -> usize {
        self.row_to_col[row] as usize
    }

    /// Dijkstra over reduced costs from the free row `root` to the nearest
    /// free column, then dual update and path flip. Lowest index wins ties.
    pub(crate) fn augment(
        &mut self,
        m: &CostMatrix,
        mask: &ArcMask,
        root: usize,
        ws: &mut Workspace,
    ) -> Result<()> {
        let n = m.n();
        ws.dist.clear();
        ws.dist.resize(n, i64::MAX);
        ws.pred.clear();
        ws.pred.resize(n, FREE);
        ws.done.clear();
        ws.done.resize(n, false);
        ws.scanned.clear();

        let mut row = root;
        let mut row_dist = 0i64;
        let (sink, delta) = loop {
            let costs = m.row(row);
            let forbidden = mask.row(row);
            let ui = self.u[row];
            for j in 0..n {
                if !ws.done[j] && !forbidden[j] {
                    let d = row_dist + costs[j] - ui - self.v[j];
                    if d < ws.dist[j] {
                        ws.dist[j] = d;
                        ws.pred[j] = row as u32;
                    }
                }
            }
            let mut best = i64::MAX;
            let mut col = usize::MAX;
            for j in 0..n {
                if !ws.done[j] && ws.dist[j] < best {
                    best = ws.dist[j];
                    col = j;
                }
            }
            if col == usize::MAX {
                return Err(Error::Infeasible(format!(
                    "no augmenting path from row {root}"
                )));
            }
            ws.done[col] = true;
            ws.scanned.push(col);
            match self.col_to_row[col] {
                FREE => break (col, best),
                next => {
                    row = next as usize;
                    row_dist = best;
                }
            }
        };

        for &j in &ws.scanned {
            let shift = delta - ws.dist[j];
            if shift != 0 {
                self.v[j] -= shift;
                self.u[self.col_to_row[j] as usize] += shift;
            }
        }
        self.u[root] += delta;

        let mut col = sink;
        loop {
            let i = ws.pred[col] as usize;
            let previous = self.row_to_col[i];
            self.row_to_col[i] = col as u32;
            self.col_to_row[col] = i as u32;
            if i == root {
                break;
            }
            col = previous as usize;
        }
        Ok(())
    }

    pub(crate) fn bound(&self, m: &CostMatrix) -> i64 {
        self.row_to_col
            .iter()
            .enumerate()
            .map(|(i, &j)| m.get(i, j as usize))
            .sum()
    }

    pub(crate) fn successors(&self) -> Vec<usize> {
        self.row_to_col.iter().map(|&j| j as usize).collect()
    }

    pub(crate) fn to_solution(&self, m: &CostMatrix) -> ApSolution {
        ApSolution {
            successor: self.successors(),
            row_potentials: self.u.clone(),
            col_potentials: self.v.clone(),
            bound: self.bound(m),
        }
    }
}

/// Minimum-cost assignment with no self-arcs, none of `excluded`, and every
/// arc of `included`. `Error::Infeasible` means no such assignment exists.
pub fn hungarian(
    m: &CostMatrix,
    excluded: &[(usize, usize)],
    included: &[(usize, usize)],
) -> Result<ApSolution> {
    let mask = ArcMask::new(m.n(), excluded, included);
    let state = ApState::solve(m, &mask, &mut Workspace::default())?;
    Ok(state.to_solution(m))
}

/// Orbit decomposition of a successor map: each cycle starts at its
/// smallest node, and cycles are ordered by that node.
pub fn cycles(successor: &[usize]) -> Result<Vec<Vec<usize>>> {
    let n = successor.len();
    if !crate::tour::is_permutation(successor, n) {
        return Err(Error::NotAPermutation(n));
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut v = start;
        while !seen[v] {
            seen[v] = true;
            cycle.push(v);
            v = successor[v];
        }
        out.push(cycle);
    }
    Ok(out)
}
