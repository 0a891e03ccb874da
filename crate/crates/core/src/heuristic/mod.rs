//! Fast feasible tours: nearest-neighbor construction, move operators and
//! the tabu search that supplies the exact engine's first incumbent.

mod moves;
mod tabu;

pub use moves::{
    or_opt_delta, or_opt_move, or_opt_valid, reverse_delta, reverse_segment, swap_delta, swap_move,
};
pub(crate) use moves::{prefix_sums, reverse_delta_with};
pub use tabu::{tabu_search, tabu_search_to_bound, TabuOutcome, TabuParams};

use crate::error::Result;
use crate::instance::CostMatrix;
use crate::tour::Tour;

/// Greedy chain from `start`: always step to the cheapest unvisited node,
/// lowest index on ties, then close the cycle.
pub fn nearest_neighbor(m: &CostMatrix, start: usize) -> Result<Tour> {
    let n = m.n();
    if start >= n {
        return Err(crate::Error::IndexOutOfRange {
            index: start,
            len: n,
        });
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut current = start;
    visited[start] = true;
    order.push(start);
    for _ in 1..n {
        let row = m.row(current);
        let mut next = usize::MAX;
        for (j, &c) in row.iter().enumerate() {
            if !visited[j] && (next == usize::MAX || c < row[next]) {
                next = j;
            }
        }
        visited[next] = true;
        order.push(next);
        current = next;
    }
    Tour::new(m, order)
}

/// Nearest neighbor from node 0 improved by [`tabu_search`].
pub fn warm_start(m: &CostMatrix, params: &TabuParams) -> Result<TabuOutcome> {
    let initial = nearest_neighbor(m, 0)?;
    Ok(tabu_search(m, &initial, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tour::fixtures::*;

    #[test]
    fn nearest_neighbor_on_chain() {
        let t = nearest_neighbor(&chain4(), 0).unwrap();
        assert_eq!(t.order, vec![0, 1, 2, 3]);
        assert_eq!(t.cost, 10);
    }

    #[test]
    fn nearest_neighbor_ties_take_lowest_index() {
        let t = nearest_neighbor(&uniform(6, 7), 0).unwrap();
        assert_eq!(t.order, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(t.cost, 42);
        let t = nearest_neighbor(&uniform(4, 7), 2).unwrap();
        assert_eq!(t.order, vec![2, 0, 1, 3]);
    }

    #[test]
    fn nearest_neighbor_two_nodes() {
        let m = CostMatrix::from_rows(&[vec![0, 3], vec![4, 0]]).unwrap();
        let t = nearest_neighbor(&m, 0).unwrap();
        assert_eq!(t.order, vec![0, 1]);
        assert_eq!(t.cost, 7);
        assert!(nearest_neighbor(&m, 2).is_err());
    }

    #[test]
    fn warm_start_small_cases() {
        let m = chain4();
        let out = warm_start(&m, &TabuParams::for_size(4)).unwrap();
        assert_eq!(out.tour.cost, 10);

        let m = CostMatrix::from_rows(&[vec![0, 3], vec![4, 0]]).unwrap();
        let out = warm_start(&m, &TabuParams::for_size(2)).unwrap();
        assert_eq!(out.tour.order, vec![0, 1]);
        assert_eq!(out.tour.cost, 7);
    }
}
