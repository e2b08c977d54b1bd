//! Two-period product-line design where the monopolist learns about buyers
//! from their period-1 quality choice and cannot commit to its period-2 price.
//!
//! Types are uniform on `[0, 1]`; type `theta` values the period-2 good at
//! `v_H` with probability `theta` and at `v_L` otherwise. Period-1 quality
//! costs `c q^2 / 2`.
//!
//! The crate provides closed-form schedules for full information, full
//! commitment and limited commitment, a linear-programming oracle over
//! distributions of posterior means, and verifiers for incentive
//! compatibility, Bayes plausibility and sequential rationality.

pub mod commitment;
pub mod envelope;
pub mod error;
pub mod limited_commitment;
pub mod model;
pub mod oracle;
pub mod plot;
pub mod pricing;
pub mod roots;
pub mod surplus;
pub mod sweep;
pub mod verifier;

pub use error::{Error, Result};
pub use limited_commitment::{PoolingInterval, Regime};
pub use model::{
    Atom, DualCertificate, MeanDistribution, ModelParams, Prior, QualityRule, Schedule, ScheduleRegime,
    Segment, SegmentKind, TransferRule,
};
pub use pricing::TieBreak;
pub use surplus::RFunction;
