//! Independent oracles, shipped example scenarios, and the acceptance
//! checks run by `beds verify`.

pub mod acceptance;
pub mod oracles;
pub mod scenarios;

pub use acceptance::{run_all, CheckResult, VerifyReport};
