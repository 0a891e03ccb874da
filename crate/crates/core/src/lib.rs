//! Asymmetric traveling salesman toolkit: seeded instances, a tabu-search
//! warm start, an exact branch-and-bound solver, reference oracles, MIP
//! model export, a benchmark harness and SVG reports.

pub mod bench;
pub mod error;
pub mod exact;
pub mod heuristic;
pub mod instance;
pub mod model_export;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod tour;

pub use error::{Error, Result};
pub use instance::{CostMatrix, CostRange, GenMode, GenSpec, NodeLayout};
pub use tour::{tour_cost, Tour};
