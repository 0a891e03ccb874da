//! MIP formulations of the ATSP as LP-format text, and a file-exchange cut
//! loop that drives any external MIP solver.
//!
//! Both formulations use binary arc variables `x_i_j` (i != j) with
//! out-degree and in-degree equal to one. MTZ adds continuous order
//! variables `u_1..u_(n-1)` with `u_i - u_j + n x_i_j <= n - 1`. DFJ adds
//! subtour cuts `sum_{i,j in S} x_i_j <= |S| - 1` only as the cut loop
//! discovers violated subsets.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{cycles, Arc};
use crate::instance::CostMatrix;
use crate::tour::Tour;

/// Terms per line in long LP expressions.
const TERMS_PER_LINE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Mtz,
    Dfj,
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mtz" => Ok(Self::Mtz),
            "dfj" => Ok(Self::Dfj),
            other => Err(Error::Solution(format!("unknown formulation {other:?}"))),
        }
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Mtz => "mtz",
            Self::Dfj => "dfj",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelCounts {
    pub binaries: u64,
    pub continuous: u64,
    pub constraints: u64,
}

/// Closed-form model size. DFJ counts the base model without cuts.
pub fn count_model(n: usize, formulation: Formulation) -> ModelCounts {
    let n = n as u64;
    let binaries = n * (n - 1);
    let degree = 2 * n;
    match formulation {
        Formulation::Mtz => ModelCounts {
            binaries,
            continuous: n - 1,
            constraints: degree + (n - 1) * (n.saturating_sub(2)),
        },
        Formulation::Dfj => ModelCounts {
            binaries,
            continuous: 0,
            constraints: degree,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

/// `sum coef * var (sense) rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(i64, String)>,
    pub sense: Sense,
    pub rhs: i64,
}

/// Fully materialized formulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MipModel {
    pub formulation: Formulation,
    pub n: usize,
    pub objective: Vec<(i64, String)>,
    pub constraints: Vec<Constraint>,
    pub binaries: Vec<String>,
    /// Continuous variables with inclusive bounds.
    pub continuous: Vec<(String, i64, i64)>,
}

impl MipModel {
    pub fn counts(&self) -> ModelCounts {
        ModelCounts {
            binaries: self.binaries.len() as u64,
            continuous: self.continuous.len() as u64,
            constraints: self.constraints.len() as u64,
        }
    }
}

fn x(i: usize, j: usize) -> String {
    format!("x_{i}_{j}")
}

/// Builds the model. Cuts are ignored for MTZ.
pub fn build_model(m: &CostMatrix, formulation: Formulation, cuts: &[Vec<usize>]) -> MipModel {
    let n = m.n();
    let arcs = || (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)));
    let objective = arcs().map(|(i, j)| (m.get(i, j), x(i, j))).collect();
    let binaries = arcs().map(|(i, j)| x(i, j)).collect();

    let mut constraints = Vec::new();
    for i in 0..n {
        constraints.push(Constraint {
            name: format!("out_{i}"),
            terms: (0..n).filter(|&j| j != i).map(|j| (1, x(i, j))).collect(),
            sense: Sense::Eq,
            rhs: 1,
        });
    }
    for j in 0..n {
        constraints.push(Constraint {
            name: format!("in_{j}"),
            terms: (0..n).filter(|&i| i != j).map(|i| (1, x(i, j))).collect(),
            sense: Sense::Eq,
            rhs: 1,
        });
    }

    let mut continuous = Vec::new();
    match formulation {
        Formulation::Mtz => {
            let big_m = n as i64;
            for i in 1..n {
                for j in 1..n {
                    if i != j {
                        constraints.push(Constraint {
                            name: format!("mtz_{i}_{j}"),
                            terms: vec![
                                (1, format!("u_{i}")),
                                (-1, format!("u_{j}")),
                                (big_m, x(i, j)),
                            ],
                            sense: Sense::Le,
                            rhs: big_m - 1,
                        });
                    }
                }
            }
            continuous = (1..n)
                .map(|i| (format!("u_{i}"), 1, n as i64 - 1))
                .collect();
        }
        Formulation::Dfj => {
            for (k, cut) in cuts.iter().enumerate() {
                let terms = cut
                    .iter()
                    .flat_map(|&i| {
                        cut.iter()
                            .filter(move |&&j| j != i)
                            .map(move |&j| (1, x(i, j)))
                    })
                    .collect();
                constraints.push(Constraint {
                    name: format!("cut_{k}"),
                    terms,
                    sense: Sense::Le,
                    rhs: cut.len() as i64 - 1,
                });
            }
        }
    }

    MipModel {
        formulation,
        n,
        objective,
        constraints,
        binaries,
        continuous,
    }
}

fn write_expression(out: &mut String, terms: &[(i64, String)]) {
    for (k, (coef, var)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let sign = if *coef < 0 { "-" } else { "+" };
        let magnitude = coef.unsigned_abs();
        match (k, magnitude) {
            (0, 1) if *coef > 0 => {
                let _ = write!(out, " {var}");
            }
            (0, _) if *coef >= 0 => {
                let _ = write!(out, " {magnitude} {var}");
            }
            (_, 1) => {
                let _ = write!(out, " {sign} {var}");
            }
            _ => {
                let _ = write!(out, " {sign} {magnitude} {var}");
            }
        }
    }
}

/// Renders a model in LP file format.
pub fn render_lp(model: &MipModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ ATSP {} formulation, n = {}",
        model.formulation, model.n
    );
    out.push_str("Minimize\n obj:");
    write_expression(&mut out, &model.objective);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        write_expression(&mut out, &c.terms);
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", c.rhs);
    }
    if !model.continuous.is_empty() {
        out.push_str("Bounds\n");
        for (name, lo, hi) in &model.continuous {
            let _ = writeln!(out, " {lo} <= {name} <= {hi}");
        }
    }
    out.push_str("Binaries\n");
    for chunk in model.binaries.chunks(TERMS_PER_LINE) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    out
}

pub fn emit_lp(m: &CostMatrix, formulation: Formulation, cuts: &[Vec<usize>]) -> String {
    render_lp(&build_model(m, formulation, cuts))
}

fn parse_arc_name(token: &str, n: usize) -> Result<Option<Arc>> {
    let Some(rest) = token.strip_prefix("x_") else {
        return Ok(None);
    };
    let Some((a, b)) = rest.split_once('_') else {
        return Ok(None);
    };
    let (Ok(i), Ok(j)) = (a.parse::<usize>(), b.parse::<usize>()) else {
        return Ok(None);
    };
    if i >= n || j >= n || i == j {
        return Err(Error::Solution(format!(
            "variable {token} is not an arc of n = {n}"
        )));
    }
    Ok(Some((i, j)))
}

/// Reads `<name> <value>` solution lines. Comment lines (`#`), other
/// variables and extra columns (a leading index, a trailing objective
/// coefficient) are skipped. Returns arcs valued 1, sorted.
pub fn parse_solution(text: &str, n: usize) -> Result<Vec<Arc>> {
    const TOLERANCE: f64 = 1e-6;
    let mut arcs = BTreeSet::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().filter(|&t| t != "=").collect();
        let Some(pos) = tokens.iter().position(|t| t.starts_with("x_")) else {
            continue;
        };
        let Some(arc) = parse_arc_name(tokens[pos], n)? else {
            continue;
        };
        let value: f64 = tokens
            .get(pos + 1)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Solution(format!("no value for {}", tokens[pos])))?;
        let rounded = value.round();
        if (value - rounded).abs() > TOLERANCE || !(rounded == 0.0 || rounded == 1.0) {
            return Err(Error::Solution(format!(
                "non-integral value {value} for {}",
                tokens[pos]
            )));
        }
        if rounded == 1.0 {
            arcs.insert(arc);
        }
    }

    let mut out_deg = vec![0usize; n];
    let mut in_deg = vec![0usize; n];
    for &(i, j) in &arcs {
        out_deg[i] += 1;
        in_deg[j] += 1;
    }
    for v in 0..n {
        if out_deg[v] != 1 || in_deg[v] != 1 {
            return Err(Error::Solution(format!(
                "degree violation at node {v}: out {}, in {}",
                out_deg[v], in_deg[v]
            )));
        }
    }
    Ok(arcs.into_iter().collect())
}

/// Solution lines for a set of arcs, in the grammar [`parse_solution`] reads.
pub fn write_solution(arcs: &[Arc]) -> String {
    arcs.iter()
        .map(|&(i, j)| format!("x_{i}_{j} 1\n"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutLoopStatus {
    NeedsSolve,
    IntegralWithSubtours,
    TourFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutLoopState {
    pub round: u32,
    /// Node subsets, each sorted ascending, in discovery order.
    pub cuts: Vec<Vec<usize>>,
    pub last_solution: Vec<Arc>,
    pub status: CutLoopStatus,
}

impl Default for CutLoopState {
    fn default() -> Self {
        Self {
            round: 0,
            cuts: Vec::new(),
            last_solution: Vec::new(),
            status: CutLoopStatus::NeedsSolve,
        }
    }
}

impl CutLoopState {
    /// The tour once the loop has found one.
    pub fn tour(&self, m: &CostMatrix) -> Option<Tour> {
        if self.status != CutLoopStatus::TourFound {
            return None;
        }
        let succ = successors(m.n(), &self.last_solution).ok()?;
        let order = cycles(&succ).ok()?.pop()?;
        Tour::new(m, order).ok()
    }
}

fn successors(n: usize, arcs: &[Arc]) -> Result<Vec<usize>> {
    let mut succ = vec![usize::MAX; n];
    for &(i, j) in arcs {
        if i >= n || j >= n || succ[i] != usize::MAX {
            return Err(Error::CutLoop(format!(
                "arc ({i}, {j}) breaks out-degree 1"
            )));
        }
        succ[i] = j;
    }
    Ok(succ)
}

/// Cycle structure of an integral solution: `TourFound` with the single
/// tour, or `IntegralWithSubtours` with every subtour's node set.
pub fn classify(n: usize, solution: &[Arc]) -> Result<(CutLoopStatus, Vec<Vec<usize>>)> {
    let succ = successors(n, solution)?;
    let mut found = cycles(&succ).map_err(|e| Error::CutLoop(e.to_string()))?;
    if found.len() == 1 {
        return Ok((CutLoopStatus::TourFound, found));
    }
    for c in &mut found {
        c.sort_unstable();
    }
    Ok((CutLoopStatus::IntegralWithSubtours, found))
}

/// Advances the loop with the external solver's answer. A single n-cycle
/// ends the loop; otherwise each subtour's node set becomes a new cut and
/// another round is needed. A subtour that is already cut means the solver
/// ignored the model, and is an error.
pub fn cut_loop_step(state: &CutLoopState, n: usize, solution: &[Arc]) -> Result<CutLoopState> {
    let (status, found) = classify(n, solution)?;
    let mut next = state.clone();
    next.last_solution = solution.to_vec();
    if status == CutLoopStatus::TourFound {
        next.status = CutLoopStatus::TourFound;
        return Ok(next);
    }
    for subset in found {
        if next.cuts.contains(&subset) {
            return Err(Error::CutLoop(format!(
                "solver returned subtour {subset:?}, which an earlier cut forbids"
            )));
        }
        next.cuts.push(subset);
    }
    next.round += 1;
    next.status = CutLoopStatus::NeedsSolve;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tour::fixtures::*;

    #[test]
    fn closed_form_counts() {
        assert_eq!(
            count_model(10, Formulation::Mtz),
            ModelCounts {
                binaries: 90,
                continuous: 9,
                constraints: 92
            }
        );
        assert_eq!(
            count_model(5000, Formulation::Dfj),
            ModelCounts {
                binaries: 24_995_000,
                continuous: 0,
                constraints: 10_000
            }
        );
        assert_eq!(
            count_model(2, Formulation::Dfj),
            ModelCounts {
                binaries: 2,
                continuous: 0,
                constraints: 4
            }
        );
    }

    #[test]
    fn materialized_counts_agree() {
        for n in [2, 3, 7, 12] {
            let m = uniform(n, 1);
            for f in [Formulation::Mtz, Formulation::Dfj] {
                assert_eq!(
                    build_model(&m, f, &[]).counts(),
                    count_model(n, f),
                    "n {n} {f}"
                );
            }
        }
    }

    #[test]
    fn dfj_cut_row() {
        let m = uniform(3, 4);
        let lp = emit_lp(&m, Formulation::Dfj, &[vec![0, 1]]);
        assert!(lp.contains(" cut_0: x_0_1 + x_1_0 <= 1\n"), "{lp}");
        assert!(!lp.contains("Bounds"));
    }

    #[test]
    fn small_mtz_text() {
        let m = CostMatrix::from_rows(&[vec![0, 2, 3], vec![4, 0, 5], vec![6, 7, 0]]).unwrap();
        let lp = emit_lp(&m, Formulation::Mtz, &[]);
        let expected = "\\ ATSP mtz formulation, n = 3
Minimize
 obj: 2 x_0_1 + 3 x_0_2 + 4 x_1_0 + 5 x_1_2 + 6 x_2_0 + 7 x_2_1
Subject To
 out_0: x_0_1 + x_0_2 = 1
 out_1: x_1_0 + x_1_2 = 1
 out_2: x_2_0 + x_2_1 = 1
 in_0: x_1_0 + x_2_0 = 1
 in_1: x_0_1 + x_2_1 = 1
 in_2: x_0_2 + x_1_2 = 1
 mtz_1_2: u_1 - u_2 + 3 x_1_2 <= 2
 mtz_2_1: u_2 - u_1 + 3 x_2_1 <= 2
Bounds
 1 <= u_1 <= 2
 1 <= u_2 <= 2
Binaries
 x_0_1 x_0_2 x_1_0 x_1_2 x_2_0 x_2_1
End
";
        assert_eq!(lp, expected);
    }

    #[test]
    fn long_rows_wrap() {
        let lp = emit_lp(&uniform(12, 1), Formulation::Dfj, &[]);
        assert!(lp.lines().all(|l| l.len() < 255));
        assert!(lp.lines().any(|l| l.starts_with("   + ")));
    }

    #[test]
    fn parse_solution_cases() {
        assert_eq!(
            parse_solution("x_0_1 1\nx_1_0 1\n", 2).unwrap(),
            vec![(0, 1), (1, 0)]
        );
        let gurobi = "# Objective value = 7\nx_0_1 1\nx_1_0 0.9999999\nx_0_2 0\n";
        assert!(parse_solution(gurobi, 2).is_err()); // x_0_2 is not an arc of n = 2
        let cbc = "Optimal - objective value 7\n      0 x_0_1  1  3\n      1 x_1_0  1  4\n";
        assert_eq!(parse_solution(cbc, 2).unwrap(), vec![(0, 1), (1, 0)]);
        assert!(matches!(
            parse_solution("x_0_1 0.5\nx_1_0 1\n", 2),
            Err(Error::Solution(s)) if s.contains("non-integral")
        ));
        let e = parse_solution("x_0_1 1\nx_1_0 1\nx_3_2 1\nx_2_3 0\n", 4).unwrap_err();
        assert!(
            matches!(e, Error::Solution(ref s) if s.contains("node 2")),
            "{e}"
        );
    }

    #[test]
    fn cut_loop_transitions() {
        let start = CutLoopState::default();
        let tour = vec![(0, 1), (1, 2), (2, 3), (3, 0)];
        let done = cut_loop_step(&start, 4, &tour).unwrap();
        assert_eq!(done.status, CutLoopStatus::TourFound);
        assert!(done.cuts.is_empty());
        assert_eq!(done.tour(&two_cluster4()).unwrap().cost, 18);

        let split = vec![(0, 1), (1, 0), (2, 3), (3, 2)];
        let next = cut_loop_step(&start, 4, &split).unwrap();
        assert_eq!(next.status, CutLoopStatus::NeedsSolve);
        assert_eq!(next.round, 1);
        assert_eq!(next.cuts, vec![vec![0, 1], vec![2, 3]]);
        assert!(next.tour(&two_cluster4()).is_none());

        let again = cut_loop_step(&next, 4, &split);
        assert!(matches!(again, Err(Error::CutLoop(_))));
    }

    #[test]
    fn state_json_round_trip() {
        let state = cut_loop_step(
            &CutLoopState::default(),
            4,
            &[(0, 1), (1, 0), (2, 3), (3, 2)],
        )
        .unwrap();
        let json = serde_json::to_string(&state).unwrap();
        assert!(json.contains("\"status\":\"needs_solve\""));
        assert_eq!(serde_json::from_str::<CutLoopState>(&json).unwrap(), state);
    }
}
