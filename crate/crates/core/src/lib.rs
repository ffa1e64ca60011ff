//! Intersection times of independent Markov chains, together with the
//! mixing, hitting and spectral quantities they are compared against.
//!
//! Modules, bottom up:
//!
//! * [`chain`]: sparse chains, laziness, stationary distributions.
//! * [`families`]: lazy walks on cycles, tori, cliques, trees, ...
//! * [`spectral`]: eigenvalues, `Q`, `Q_t`, Green tables, `t_unif`.
//! * [`exact`]: mixing and hitting times, exact intersection oracles.
//! * [`mc`]: Monte Carlo estimators of intersection quantities.
//! * [`harness`]: inequality checks, calibration, scaling fits, reports.

pub mod chain;
pub mod chain_io;
pub mod config;
mod dense;
pub mod error;
pub mod exact;
pub mod families;
pub mod harness;
pub mod mc;
pub mod spectral;

pub use chain::{ChainMatrix, DistVector, Flags};
pub use error::{Error, Result};
pub use families::{Family, FamilySpec};
