//! Numeric tolerances shared by every module.

use serde::{Deserialize, Serialize};

/// Default RNG seed used whenever a caller does not supply one.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

/// Distance threshold used by every mixing-time definition.
pub const MIXING_EPS: f64 = 0.25;

/// Stationary mass threshold in the definition of `t_H`.
pub const LARGE_SET_MASS: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute slack on each row sum.
    pub row_sum: f64,
    /// Lazy chains must have `p(x,x) >= 1/2 - lazy_diag`.
    pub lazy_diag: f64,
    /// `||pi P - pi||_1` bound.
    pub stationary_residual: f64,
    pub detailed_balance: f64,
    /// Entries at or below this are treated as structural zeros.
    pub structural_zero: f64,
    pub power_iteration_l1: f64,
    pub power_iteration_max_iters: u64,
    /// Return-probability horizon used by the transitivity heuristic.
    pub transitive_horizon: usize,
    pub transitive_match: f64,
    /// Slack added to the 1/4 threshold of mixing criteria so that values
    /// landing exactly on the boundary are not lost to rounding.
    pub mixing_slack: f64,
    pub unit_eigenvalue: f64,
    pub dual_formula_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            row_sum: 1e-12,
            lazy_diag: 1e-12,
            stationary_residual: 1e-10,
            detailed_balance: 1e-10,
            structural_zero: 1e-300,
            power_iteration_l1: 1e-12,
            power_iteration_max_iters: 1_000_000,
            transitive_horizon: 20,
            transitive_match: 1e-10,
            mixing_slack: 1e-12,
            unit_eigenvalue: 1e-9,
            dual_formula_rel: 1e-8,
        }
    }
}
