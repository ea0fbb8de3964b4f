//! Stepwise feature selection with early dropping.
//!
//! The crate implements forward-backward selection (`fbs`) and its
//! early-dropping family (`fbed` with a run budget `K`), driven by pluggable
//! criteria: a logistic/Gaussian likelihood-ratio test, AIC/BIC/EBIC, or an
//! exact d-separation oracle over a DAG. A simulation harness reproduces the
//! null-data multiple-testing behavior of the algorithms and verifies the
//! blanket-recovery guarantees of the oracle variants.
//!
//! Candidate sweeps and simulation replicates are data-parallel; the
//! `parallel` feature (on by default) executes them on rayon, and every
//! reduction is ordered so results do not depend on thread count.

pub mod criteria;
pub mod dataset;
pub mod experiments;
pub mod graphs;
pub mod regression;
pub mod selection;

mod error;
mod linalg;
mod parallel;

pub use dataset::{Dataset, TargetKind};
pub use error::{Error, Result};
pub use selection::{fbed, fbs, Runs, SelectionResult};
