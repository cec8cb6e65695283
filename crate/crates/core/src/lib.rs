//! Quality scoring, gap analysis and exact modification selection for
//! software product lines.
//!
//! The pipeline runs: [`QualityModel`] weights, a [`ScoreMatrix`] of
//! per-product compliance values resolved into a [`ResolvedAssessment`],
//! a [`GapReport`] of weak features, and finally an [`Optimizer`] choosing
//! which [`Modification`]s of a [`Catalog`] to apply.

pub mod assessment;
pub mod catalog;
pub mod error;
pub mod gap_analysis;
pub mod io;
pub mod number;
pub mod optimizer;
pub mod quality_model;
#[cfg(feature = "testkit")]
pub mod testkit;
pub mod validation;

pub use assessment::{CellValue, IrrelevancePolicy, Product, ResolvedAssessment, ScoreMatrix};
pub use catalog::{
    apply, subset_gain, Applied, Catalog, ConflictGraph, GainEvaluator, GainSpec, Modification,
};
pub use error::{Error, Result};
pub use gap_analysis::{build_gap_report, CellLevel, GapReport, StddevForm};
pub use number::Rational;
pub use optimizer::{Objective, Optimizer, OptimizerConfig, ParetoRow, Plan, RatioQuality};
pub use quality_model::{Characteristic, Feature, QualityModel};
pub use validation::{Severity, ValidationReport, Violation};
