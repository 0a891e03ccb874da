//! Tour move operators with exact integer cost deltas.
//!
//! Positions index into `Tour::order` and are read cyclically. Every delta
//! function is O(1) (reversal takes prefix sums) so the tabu scan can price
//! the whole neighborhood without building candidate tours.

use crate::error::{Error, Result};
use crate::instance::CostMatrix;
use crate::tour::Tour;

fn check_index(index: usize, len: usize) -> Result<()> {
    if index >= len {
        return Err(Error::IndexOutOfRange { index, len });
    }
    Ok(())
}

/// Cost change of exchanging the nodes at positions `i` and `j`.
pub fn swap_delta(m: &CostMatrix, order: &[usize], i: usize, j: usize) -> i64 {
    let n = order.len();
    if i == j {
        return 0;
    }
    let at = |k: usize| {
        if k == i {
            order[j]
        } else if k == j {
            order[i]
        } else {
            order[k]
        }
    };
    let mut starts = [(i + n - 1) % n, i, (j + n - 1) % n, j];
    starts.sort_unstable();
    let mut delta = 0;
    for (idx, &p) in starts.iter().enumerate() {
        if idx > 0 && starts[idx - 1] == p {
            continue;
        }
        let q = (p + 1) % n;
        delta += m.get(at(p), at(q)) - m.get(order[p], order[q]);
    }
    delta
}

pub fn swap_move(m: &CostMatrix, t: &Tour, i: usize, j: usize) -> Result<Tour> {
    let n = t.len();
    check_index(i, n)?;
    check_index(j, n)?;
    if i == j || n == 2 {
        return Ok(t.clone());
    }
    let delta = swap_delta(m, &t.order, i, j);
    let mut order = t.order.clone();
    order.swap(i, j);
    Ok(Tour {
        order,
        cost: t.cost + delta,
    })
}

/// Whether relocating `order[s..s + len]` after position `q` is a real move.
pub fn or_opt_valid(n: usize, s: usize, len: usize, q: usize) -> bool {
    len >= 1 && s + len <= n && q < n && !(s..s + len).contains(&q) && q != (s + n - 1) % n
}

/// Cost change of relocating the segment `order[s..s + len]` (direction
/// preserved) so it follows the node at position `q`.
pub fn or_opt_delta(m: &CostMatrix, order: &[usize], s: usize, len: usize, q: usize) -> i64 {
    let n = order.len();
    let p = order[(s + n - 1) % n];
    let f = order[s];
    let l = order[s + len - 1];
    let x = order[(s + len) % n];
    let y = order[q];
    let z = order[(q + 1) % n];
    m.get(p, x) + m.get(y, f) + m.get(l, z) - m.get(p, f) - m.get(l, x) - m.get(y, z)
}

/// Position the segment head lands on after an or-opt move.
#[cfg(test)]
fn or_opt_head_position(s: usize, len: usize, q: usize) -> usize {
    if q > s {
        q + 1 - len
    } else {
        q + 1
    }
}

pub fn or_opt_move(
    m: &CostMatrix,
    t: &Tour,
    seg_start: usize,
    seg_len: usize,
    insert_after: usize,
) -> Result<Tour> {
    let n = t.len();
    check_index(seg_start, n)?;
    check_index(insert_after, n)?;
    if !(1..=3).contains(&seg_len) || seg_start + seg_len > n {
        return Err(Error::InvalidMove(format!(
            "segment of length {seg_len} at {seg_start} does not fit a tour of {n}"
        )));
    }
    if (seg_start..seg_start + seg_len).contains(&insert_after) {
        return Err(Error::InvalidMove(
            "insertion point lies inside the segment".into(),
        ));
    }
    if !or_opt_valid(n, seg_start, seg_len, insert_after) {
        return Ok(t.clone());
    }
    let delta = or_opt_delta(m, &t.order, seg_start, seg_len, insert_after);
    Ok(Tour {
        order: apply_or_opt(&t.order, seg_start, seg_len, insert_after),
        cost: t.cost + delta,
    })
}

pub(crate) fn apply_or_opt(order: &[usize], s: usize, len: usize, q: usize) -> Vec<usize> {
    let segment = &order[s..s + len];
    let mut out = Vec::with_capacity(order.len());
    for (k, &v) in order.iter().enumerate() {
        if (s..s + len).contains(&k) {
            continue;
        }
        out.push(v);
        if k == q {
            out.extend_from_slice(segment);
        }
    }
    out
}

/// Prefix sums of forward and backward arc costs along `order`:
/// `fwd[k] = sum c(o[t], o[t+1])` and `bwd[k] = sum c(o[t+1], o[t])` for `t < k`.
pub(crate) fn prefix_sums(m: &CostMatrix, order: &[usize], fwd: &mut Vec<i64>, bwd: &mut Vec<i64>) {
    let n = order.len();
    fwd.clear();
    bwd.clear();
    fwd.push(0);
    bwd.push(0);
    for k in 0..n - 1 {
        let (a, b) = (order[k], order[k + 1]);
        fwd.push(fwd[k] + m.get(a, b));
        bwd.push(bwd[k] + m.get(b, a));
    }
}

/// Cost change of reversing `order[i..=j]`, given prefix sums from
/// [`prefix_sums`].
pub(crate) fn reverse_delta_with(
    m: &CostMatrix,
    order: &[usize],
    fwd: &[i64],
    bwd: &[i64],
    i: usize,
    j: usize,
) -> i64 {
    let n = order.len();
    let inner = (bwd[j] - bwd[i]) - (fwd[j] - fwd[i]);
    if j - i + 1 == n {
        let (first, last) = (order[0], order[n - 1]);
        return inner + m.get(first, last) - m.get(last, first);
    }
    let p = order[(i + n - 1) % n];
    let x = order[(j + 1) % n];
    let (a, b) = (order[i], order[j]);
    inner + m.get(p, b) + m.get(a, x) - m.get(p, a) - m.get(b, x)
}

pub fn reverse_delta(m: &CostMatrix, order: &[usize], i: usize, j: usize) -> i64 {
    let (mut fwd, mut bwd) = (Vec::new(), Vec::new());
    prefix_sums(m, order, &mut fwd, &mut bwd);
    reverse_delta_with(m, order, &fwd, &bwd, i, j)
}

/// Reverses the tour span between positions `i` and `j` inclusive. Arc
/// directions inside the span flip, so the cost changes even when the
/// endpoints' arcs stay put.
pub fn reverse_segment(m: &CostMatrix, t: &Tour, i: usize, j: usize) -> Result<Tour> {
    let n = t.len();
    check_index(i, n)?;
    check_index(j, n)?;
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    if i == j {
        return Ok(t.clone());
    }
    let delta = reverse_delta(m, &t.order, i, j);
    let mut order = t.order.clone();
    order[i..=j].reverse();
    Ok(Tour {
        order,
        cost: t.cost + delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, CostRange, GenSpec};
    use crate::tour::fixtures::*;
    use crate::tour::tour_cost;
    use proptest::prelude::*;

    #[test]
    fn swap_on_two_nodes_is_identity() {
        let m = CostMatrix::from_rows(&[vec![0, 3], vec![4, 0]]).unwrap();
        let t = Tour::new(&m, vec![0, 1]).unwrap();
        let s = swap_move(&m, &t, 0, 1).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn full_reversal_on_symmetric_matrix_keeps_cost() {
        let m = CostMatrix::from_rows(&[
            vec![0, 2, 9, 4],
            vec![2, 0, 6, 3],
            vec![9, 6, 0, 5],
            vec![4, 3, 5, 0],
        ])
        .unwrap();
        let t = Tour::new(&m, vec![0, 2, 1, 3]).unwrap();
        let r = reverse_segment(&m, &t, 0, 3).unwrap();
        assert_eq!(r.order, vec![3, 1, 2, 0]);
        assert_eq!(r.cost, t.cost);
    }

    #[test]
    fn full_reversal_on_asymmetric_matrix_changes_cost() {
        let m = chain4();
        let t = Tour::new(&m, vec![0, 1, 2, 3]).unwrap();
        let r = reverse_segment(&m, &t, 0, 3).unwrap();
        assert_eq!(r.cost, 32);
        assert_eq!(r.cost, tour_cost(&m, &r.order).unwrap());
    }

    #[test]
    fn or_opt_relocates_node_three() {
        let m = chain4();
        let t = Tour::new(&m, vec![0, 1, 3, 2]).unwrap();
        assert_eq!(t.cost, 22);
        let moved = or_opt_move(&m, &t, 2, 1, 3).unwrap();
        assert_eq!(moved.order, vec![0, 1, 2, 3]);
        assert_eq!(moved.cost, 10);
    }

    #[test]
    fn or_opt_errors_and_degenerate_cases() {
        let m = chain4();
        let t = Tour::new(&m, vec![0, 1, 2, 3]).unwrap();
        assert!(matches!(
            or_opt_move(&m, &t, 4, 1, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            or_opt_move(&m, &t, 0, 4, 3),
            Err(Error::InvalidMove(_))
        ));
        assert!(matches!(
            or_opt_move(&m, &t, 1, 2, 2),
            Err(Error::InvalidMove(_))
        ));
        // Inserting right after the predecessor leaves the tour as it was.
        assert_eq!(or_opt_move(&m, &t, 2, 1, 1).unwrap(), t);
        assert!(matches!(
            swap_move(&m, &t, 0, 9),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    fn instance(n: usize, seed: u64) -> CostMatrix {
        generate(&GenSpec::uniform(n, seed, CostRange::new(1, 50)))
            .unwrap()
            .matrix
    }

    fn shuffled(n: usize, seed: u64) -> Vec<usize> {
        let mut rng = crate::rng::SplitMix64::new(seed);
        let mut order: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            order.swap(k, (rng.next_u64() % (k as u64 + 1)) as usize);
        }
        order
    }

    proptest! {
        #[test]
        fn move_deltas_match_recomputation(
            n in 2usize..12,
            seed in 0u64..10_000,
            a in 0usize..12,
            b in 0usize..12,
            len in 1usize..4,
        ) {
            let m = instance(n, seed);
            let t = Tour::new(&m, shuffled(n, seed ^ 0xabc)).unwrap();
            let (i, j) = (a % n, b % n);

            let s = swap_move(&m, &t, i, j).unwrap();
            prop_assert_eq!(s.cost, tour_cost(&m, &s.order).unwrap());

            let r = reverse_segment(&m, &t, i, j).unwrap();
            prop_assert_eq!(r.cost, tour_cost(&m, &r.order).unwrap());

            if i + len <= n && !(i..i + len).contains(&j) {
                let o = or_opt_move(&m, &t, i, len, j).unwrap();
                prop_assert_eq!(o.cost, tour_cost(&m, &o.order).unwrap());
                let mut sorted = o.order.clone();
                sorted.sort_unstable();
                prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
                if or_opt_valid(n, i, len, j) {
                    let head = or_opt_head_position(i, len, j);
                    prop_assert_eq!(o.order[head], t.order[i]);
                }
            }
        }
    }
}
