//! Monte Carlo estimation of intersection times and intersection counts.
//!
//! Estimates are deterministic functions of `(seed, samples)`: each
//! replicate draws from its own counter-based stream and results are reduced
//! in replicate order, so the worker count never changes a reported value.

pub mod alias;
mod estimators;
pub mod rng;
mod walk;

pub use estimators::{
    count_intersections, default_cap, estimate_pair, estimate_pi_pi_expectation, estimate_ti,
    estimate_ti_star, intersection_moments, s_t_diagnostic, sample_tau_i, CoverageMode,
    EstimateWithCI, IntersectionMoments, McConfig, Pilot, SDiagnostic, StarEstimate, StartLaw,
    TiEstimate,
};
pub use walk::{RangeSet, TauSample, TrajectoryPair};
