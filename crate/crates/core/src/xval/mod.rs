//! Cross-validation harness: brute-force oracles (uniformized birth-death
//! chains, the truncated Dirichlet problem) and Monte Carlo comparators for
//! the closed forms in [`crate::analytics`].

mod ctmc;
mod dirichlet;
mod mc;
mod report;
mod suite;

pub use ctmc::{oracle_survival, queue_survival_uniformized, SurvivalOracle, MAX_ORACLE_ERROR};
pub use dirichlet::{dirichlet_grid, oracle_dirichlet, DirichletGrid, DirichletValue};
pub use mc::{ks_normal, mc_compare, Quantity};
pub use report::{ComparisonReport, PassRule, SuiteReport};
pub use suite::{
    coverage, criterion, run_suite, uncovered, SuiteConfig, SuiteScale, ANALYTICS_OPERATIONS, CRITERIA,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Largest queue size represented by the oracles (default 400).
    pub queue_truncation: usize,
    /// Most uniformization steps one survival curve may use.
    pub time_step_budget: usize,
    pub mc_paths: u64,
    pub mc_seed: u64,
    /// Absolute tolerance for deterministic comparisons.
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            queue_truncation: 400,
            time_step_budget: 1 << 22,
            mc_paths: 100_000,
            mc_seed: 20_240_601,
            tolerance: 1e-6,
        }
    }
}

impl OracleConfig {
    /// The truncation must exceed ten times the largest initial queue.
    pub fn check_truncation(&self, max_queue: u32) -> Result<()> {
        if self.queue_truncation <= 10 * max_queue as usize {
            return Err(Error::Config(format!(
                "queue_truncation {} must exceed 10 x the largest queue under test ({max_queue})",
                self.queue_truncation
            )));
        }
        if self.mc_paths == 0 || self.time_step_budget == 0 {
            return Err(Error::Config("mc_paths and time_step_budget must be positive".into()));
        }
        Ok(())
    }
}
