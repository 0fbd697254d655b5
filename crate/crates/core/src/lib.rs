//! Rao's score tests for covariance-structure hypotheses in large dimension.
//!
//! The crate provides the classical score statistic `(n/2) tr[(Σ₀⁻¹Σ̂ − I)²]`
//! with its χ² reference, the random-matrix corrected version with a standard
//! normal reference, independent numerical oracles for every closed-form
//! correction term, and a reproducible Monte Carlo engine for size and power
//! studies.

pub mod cli;
pub mod contour;
pub mod distributions;
pub mod error;
pub mod mp_law;
pub mod quadrature;
pub mod rmt_clt;
pub mod rng;
pub mod simulation;
pub mod stats;

pub use error::{CovTestError, Result};
pub use mp_law::MpIndex;
pub use rmt_clt::{Kappa, RmtParams};
pub use score_test::{
    crst_statistic, rst_statistic, BetaMode, CorrectedRaoScore, CrstDetail, NullSpec, RaoScore,
    Reference, Sidedness, TestResult, TestStatistic,
};
pub use simulation::{Family, Hypothesis, ScenarioSpec, SimulationReport};
pub use stats::{CovMatrix, DataMatrix, Divisor};
