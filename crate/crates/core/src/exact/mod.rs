//! Exact (non-sampled) mixing, hitting and intersection quantities.

mod hitting;
mod intersection;
mod linalg;
mod mixing;

pub use hitting::{
    hitting_times, hitting_times_to, max_hitting_time, t_h_bruteforce, t_h_large_sets_heuristic,
    HittingTable, LargeSetHitting, T_H_BRUTEFORCE_MAX_N,
};
pub use intersection::{
    exact_intersection_expectation, exact_intersection_probability, intersection_cdf, ExactBudget,
    ProductRangeState,
};
pub use mixing::{cesaro_mixing_time, tv_mixing_time, CESARO_WORK_BUDGET};
