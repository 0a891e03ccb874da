//! ATSP cost matrices: seeded generation, scaling, and the TSPLIB / CSV
//! text formats.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Cost placed on every self-arc. Exceeds `n * high` for every supported
/// instance, so no optimal structure ever uses a diagonal entry.
pub const DIAGONAL_SENTINEL: i64 = 1_000_000;

/// Dense row-major `n x n` arc cost table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostMatrix {
    n: usize,
    costs: Vec<i64>,
    sentinel: i64,
}

impl CostMatrix {
    /// Builds a matrix from row-major entries. The diagonal is overwritten
    /// with [`DIAGONAL_SENTINEL`].
    pub fn from_row_major(n: usize, mut costs: Vec<i64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewNodes(n));
        }
        if costs.len() != n * n {
            return Err(Error::NotSquare {
                expected: n * n,
                found: costs.len(),
            });
        }
        for i in 0..n {
            costs[i * n + i] = DIAGONAL_SENTINEL;
        }
        Ok(Self {
            n,
            costs,
            sentinel: DIAGONAL_SENTINEL,
        })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        let mut flat = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::NotSquare {
                    expected: n * n,
                    found: rows.iter().map(Vec::len).sum(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_major(n, flat)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> i64 {
        self.costs[from * self.n + to]
    }

    #[inline]
    pub fn row(&self, from: usize) -> &[i64] {
        &self.costs[from * self.n..(from + 1) * self.n]
    }

    pub fn sentinel(&self) -> i64 {
        self.sentinel
    }

    pub fn as_row_major(&self) -> &[i64] {
        &self.costs
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Largest off-diagonal entry.
    pub fn max_arc(&self) -> i64 {
        self.off_diagonal().max().unwrap_or(0)
    }

    pub fn off_diagonal(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.n)
                .filter(move |&j| j != i)
                .map(move |j| self.get(i, j))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenMode {
    #[default]
    UniformMatrix,
    EuclideanAsymmetric,
}

/// Inclusive integer interval for generated arc costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CostRange {
    pub low: i64,
    pub high: i64,
}

impl CostRange {
    pub const fn new(low: i64, high: i64) -> Self {
        Self { low, high }
    }

    pub fn validate(&self) -> Result<()> {
        if self.low < 1 || self.high < self.low {
            return Err(Error::InvalidRange {
                low: self.low,
                high: self.high,
            });
        }
        Ok(())
    }

    pub fn contains(&self, value: i64) -> bool {
        (self.low..=self.high).contains(&value)
    }
}

impl std::fmt::Display for CostRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.low, self.high)
    }
}

impl std::str::FromStr for CostRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRange { low: 0, high: 0 };
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let range = CostRange::new(
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        );
        range.validate()?;
        Ok(range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub seed: u64,
    pub cost_range: CostRange,
    #[serde(default)]
    pub mode: GenMode,
}

impl GenSpec {
    pub fn uniform(n: usize, seed: u64, cost_range: CostRange) -> Self {
        Self {
            n,
            seed,
            cost_range,
            mode: GenMode::UniformMatrix,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewNodes(self.n));
        }
        self.cost_range.validate()
    }
}

/// Planar node positions in the unit square, used only for drawing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLayout {
    pub coords: Vec<(f64, f64)>,
}

impl NodeLayout {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub matrix: CostMatrix,
    pub layout: Option<NodeLayout>,
}

/// Generates the instance described by `spec`.
///
/// Off-diagonal entries are drawn in row-major order with the diagonal
/// skipped, one SplitMix64 draw per entry: `low + next % (high - low + 1)`.
/// The euclidean-asymmetric mode first draws `n` coordinate pairs, sets the
/// base cost to `round(100 * distance)`, adds a per-arc perturbation in
/// `{0, 1, 2, 3}` and clamps into the declared range.
pub fn generate(spec: &GenSpec) -> Result<Instance> {
    spec.validate()?;
    let n = spec.n;
    let CostRange { low, high } = spec.cost_range;
    let mut rng = SplitMix64::new(spec.seed);
    let mut costs = vec![0i64; n * n];

    let layout = match spec.mode {
        GenMode::UniformMatrix => {
            let width = (high - low + 1) as u64;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        costs[i * n + j] = low + (rng.next_u64() % width) as i64;
                    }
                }
            }
            None
        }
        GenMode::EuclideanAsymmetric => {
            let coords: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    let x = rng.next_unit();
                    let y = rng.next_unit();
                    (x, y)
                })
                .collect();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
                        let base = (100.0 * (dx * dx + dy * dy).sqrt()).round() as i64;
                        let perturbation = (rng.next_u64() % 4) as i64;
                        costs[i * n + j] = (base + perturbation).clamp(low, high);
                    }
                }
            }
            Some(NodeLayout { coords })
        }
    };

    Ok(Instance {
        matrix: CostMatrix::from_row_major(n, costs)?,
        layout,
    })
}

/// Multiplies every off-diagonal entry by `k`.
pub fn scale(m: &CostMatrix, k: i64) -> Result<CostMatrix> {
    if k < 1 {
        return Err(Error::InvalidScale(k));
    }
    let n = m.n();
    let mut costs = m.costs.clone();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let entry = &mut costs[i * n + j];
                *entry = entry
                    .checked_mul(k)
                    .ok_or(Error::Overflow { row: i, col: j })?;
            }
        }
    }
    CostMatrix::from_row_major(n, costs)
}

/// Parses a TSPLIB `EXPLICIT` / `FULL_MATRIX` instance of type ATSP or TSP.
pub fn parse_tsplib(text: &str) -> Result<CostMatrix> {
    let err = |msg: String| Error::Tsplib(msg);
    let mut dimension: Option<usize> = None;
    let mut weights: Vec<i64> = Vec::new();
    let mut in_section = false;

    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == "EOF" {
            break;
        }
        let head = trimmed.split([':', ' ', '\t']).next().unwrap_or("");
        let is_keyword = head.chars().next().is_some_and(|c| c.is_ascii_alphabetic());

        if in_section && !is_keyword {
            for token in trimmed.split_whitespace() {
                let value = token
                    .parse::<i64>()
                    .map_err(|_| err(format!("non-integer weight {token:?}")))?;
                weights.push(value);
            }
            continue;
        }
        in_section = false;

        let (key, value) = match trimmed.split_once(':') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (trimmed, ""),
        };
        match key {
            "NAME" | "COMMENT" => {}
            "TYPE" => {
                if value != "ATSP" && value != "TSP" {
                    return Err(err(format!("unsupported TYPE {value}")));
                }
            }
            "DIMENSION" => {
                dimension = Some(
                    value
                        .parse()
                        .map_err(|_| err(format!("bad DIMENSION {value:?}")))?,
                );
            }
            "EDGE_WEIGHT_TYPE" => {
                if value != "EXPLICIT" {
                    return Err(err(format!("unsupported EDGE_WEIGHT_TYPE {value}")));
                }
            }
            "EDGE_WEIGHT_FORMAT" => {
                if value != "FULL_MATRIX" {
                    return Err(err(format!("unsupported EDGE_WEIGHT_FORMAT {value}")));
                }
            }
            "EDGE_WEIGHT_SECTION" => in_section = true,
            "DISPLAY_DATA_TYPE" => {}
            other => return Err(err(format!("unsupported keyword {other}"))),
        }
    }

    let n = dimension.ok_or_else(|| err("missing DIMENSION".into()))?;
    if weights.len() != n * n {
        return Err(err(format!(
            "dimension mismatch: DIMENSION {n} needs {} weights, found {}",
            n * n,
            weights.len()
        )));
    }
    CostMatrix::from_row_major(n, weights)
}

pub fn write_tsplib(m: &CostMatrix) -> String {
    let n = m.n();
    let mut out = String::new();
    let _ = writeln!(out, "NAME: atsp{n}");
    let _ = writeln!(out, "TYPE: ATSP");
    let _ = writeln!(out, "DIMENSION: {n}");
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE: EXPLICIT");
    let _ = writeln!(out, "EDGE_WEIGHT_FORMAT: FULL_MATRIX");
    let _ = writeln!(out, "EDGE_WEIGHT_SECTION");
    for i in 0..n {
        let row: Vec<String> = m.row(i).iter().map(i64::to_string).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out.push_str("EOF\n");
    out
}

/// One line per source node, `n` comma-separated integers.
pub fn write_csv(m: &CostMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.n() {
        let row: Vec<String> = m.row(i).iter().map(i64::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<CostMatrix> {
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            line.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::Csv(format!("non-integer entry {t:?}")))
                })
                .collect::<Result<Vec<i64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(Error::Csv(format!(
            "expected {0} rows of {0} entries",
            rows.len()
        )));
    }
    CostMatrix::from_rows(&rows)
}

/// Parses either format, picking CSV when the first line has a comma.
pub fn parse_any(text: &str) -> Result<CostMatrix> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.contains(',') {
        parse_csv(text)
    } else {
        parse_tsplib(text)
    }
}
