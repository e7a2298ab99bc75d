//! Evaluation contracts graded by exact-match checks and five-judge juries,
//! with auditable traces and pool-comparison analytics.

pub mod analytics;
pub mod cli;
pub mod contract;
pub mod gateway;
pub mod grading;
pub mod runner;
pub mod trace;
