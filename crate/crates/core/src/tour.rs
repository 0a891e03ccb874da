use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::CostMatrix;

/// A directed Hamiltonian cycle: `order` is visited left to right and the
/// last node returns to the first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    pub cost: i64,
}

impl Tour {
    pub fn new(m: &CostMatrix, order: Vec<usize>) -> Result<Self> {
        let cost = tour_cost(m, &order)?;
        Ok(Self { order, cost })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Same cycle rotated so that node 0 comes first.
    pub fn canonical(&self) -> Tour {
        let start = self.order.iter().position(|&v| v == 0).unwrap_or(0);
        let mut order = self.order.clone();
        order.rotate_left(start);
        Tour {
            order,
            cost: self.cost,
        }
    }

    /// Successor of every node.
    pub fn successors(&self) -> Vec<usize> {
        let n = self.order.len();
        let mut succ = vec![0; n];
        for (k, &v) in self.order.iter().enumerate() {
            succ[v] = self.order[(k + 1) % n];
        }
        succ
    }

    /// Space-separated node list on one line.
    pub fn to_line(&self) -> String {
        self.order
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_line(m: &CostMatrix, line: &str) -> Result<Self> {
        let order = line
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::NotAPermutation(m.n()))
            })
            .collect::<Result<Vec<_>>>()?;
        Tour::new(m, order)
    }

    /// Checks the permutation invariant and the cached cost.
    pub fn validate(&self, m: &CostMatrix) -> Result<()> {
        let cost = tour_cost(m, &self.order)?;
        if cost != self.cost {
            return Err(Error::InvalidMove(format!(
                "cached cost {} differs from recomputed {cost}",
                self.cost
            )));
        }
        Ok(())
    }
}

pub fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}

/// Cyclic sum of arc costs along `order`.
pub fn tour_cost(m: &CostMatrix, order: &[usize]) -> Result<i64> {
    let n = m.n();
    if !is_permutation(order, n) {
        return Err(Error::NotAPermutation(n));
    }
    Ok(cycle_cost(m, order))
}

/// Unchecked variant of [`tour_cost`].
pub(crate) fn cycle_cost(m: &CostMatrix, order: &[usize]) -> i64 {
    let n = order.len();
    (0..n).map(|k| m.get(order[k], order[(k + 1) % n])).sum()
}
