//! Checks of intersection-time inequalities on concrete chains.
//!
//! Each instance gets a [`TheoremReport`]: the quantities computed for it
//! and one record per check. Checks whose constants are only known up to
//! order of magnitude are compared against windows measured on a disjoint
//! calibration set ([`windows`]); checks with explicit constants are
//! asserted directly. A check whose structural hypotheses fail on an
//! instance is recorded as skipped together with the reason.

mod checks;
mod context;
mod report;
mod scaling;
mod suites;
mod windows;

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::Result;
use crate::exact::ExactBudget;
use crate::families::FamilySpec;
use crate::mc::McConfig;

pub use checks::{check_spec, CheckSpec, Constant, Hypotheses, Term, CATALOGUE};
pub use context::{InstanceContext, LargeSetValue};
pub use report::{
    emit_report, exit_status, reports_to_csv, reports_to_json, CheckRecord, CheckStatus,
    Provenance, ReportFormat, TheoremReport, REPORT_SCHEMA_VERSION,
};
pub use scaling::{
    complete_sweep, cycle_sweep, default_torus_plan, relative_spread, torus_scaling,
    two_cliques_sweep, CompleteRow, CompleteSweep, CycleRow, CycleSweep, SlopeFit, TorusPlan,
    TorusPoint, TorusScaling, TwoCliquesRow, TwoCliquesSweep, MIN_FIT_POINTS,
};
pub use suites::{
    calibration_instances, exact_transitive_instances, instances, sqrt_q_assertion_instances,
    tree_assertion_instances, two_cliques_sizes, Suite,
};
pub use windows::{
    windows_from_reports, CalibratedWindow, Window, WindowTable, INFLATION,
    MIN_CALIBRATION_INSTANCES, WINDOWS_SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarnessMode {
    /// Compare ratios with frozen windows.
    Assert,
    /// Record ratios for window calibration.
    Calibrate,
}

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub mc: McConfig,
    /// Replicates per `I_t` moment estimate.
    pub moment_samples: u64,
    /// Moment estimates with `samples * (t + 1)` above this are not run.
    pub moment_work_budget: u64,
    pub s_t_samples: u64,
    /// Largest instance accepted.
    pub nmax: usize,
    /// Largest chain given a dense eigensolve.
    pub dense_max_n: usize,
    pub th_bruteforce_max_n: usize,
    pub exact_budget: ExactBudget,
    /// Horizon of the exact `P_{pi,pi}(I_t > 0)` table.
    pub sandwich_horizon: u64,
    /// Restricts evaluation to these check ids.
    pub checks: Option<BTreeSet<String>>,
    pub windows: WindowTable,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            mc: McConfig::default(),
            moment_samples: 100_000,
            moment_work_budget: 200_000_000,
            s_t_samples: 10_000,
            nmax: 4096,
            dense_max_n: 2048,
            th_bruteforce_max_n: 18,
            exact_budget: ExactBudget::default(),
            sandwich_horizon: 20,
            checks: None,
            windows: WindowTable::frozen(),
        }
    }
}

impl HarnessConfig {
    pub fn only(mut self, ids: &[&str]) -> Self {
        self.checks = Some(ids.iter().map(|s| s.to_string()).collect());
        self
    }

    fn selected(&self, id: &str) -> bool {
        self.checks.as_ref().is_none_or(|c| c.contains(id))
    }
}

fn provenance(ctx: &InstanceContext) -> Provenance {
    Provenance {
        seed: ctx.cfg.mc.seed,
        samples: ctx.cfg.mc.samples,
        moment_samples: ctx.cfg.moment_samples,
        estimates: ctx.estimates(),
        notes: ctx.notes(),
    }
}

/// Report for one prepared instance.
pub fn run_instance(ctx: &InstanceContext, mode: HarnessMode) -> TheoremReport {
    let mut records = Vec::new();
    for spec in CATALOGUE.iter().filter(|c| ctx.cfg.selected(c.id)) {
        records.extend(checks::evaluate_check(spec, ctx, mode));
    }
    TheoremReport {
        schema_version: REPORT_SCHEMA_VERSION,
        instance: ctx.id.clone(),
        quantities: ctx.quantities(),
        checks: records,
        provenance: provenance(ctx),
    }
}

fn unavailable(spec: &FamilySpec, cfg: &HarnessConfig, why: String) -> TheoremReport {
    let records = CATALOGUE
        .iter()
        .filter(|c| cfg.selected(c.id))
        .map(|c| CheckRecord {
            id: c.id.to_string(),
            at: None,
            lhs: 0.0,
            rhs: 0.0,
            ratio: 0.0,
            ratio_lo: 0.0,
            ratio_hi: 0.0,
            two_sided: c.two_sided,
            window: None,
            status: CheckStatus::NotEvaluated,
            inputs: Vec::new(),
            reason: Some(why.clone()),
        })
        .collect();
    TheoremReport {
        schema_version: REPORT_SCHEMA_VERSION,
        instance: spec.to_string(),
        quantities: Default::default(),
        checks: records,
        provenance: Provenance {
            seed: cfg.mc.seed,
            samples: cfg.mc.samples,
            moment_samples: cfg.moment_samples,
            estimates: Default::default(),
            notes: Default::default(),
        },
    }
}

/// One report per instance, in input order.
pub fn run_check_suite(
    instances: &[FamilySpec],
    cfg: &HarnessConfig,
    mode: HarnessMode,
) -> Vec<TheoremReport> {
    let one = |spec: &FamilySpec| {
        log::info!("instance {spec}");
        match InstanceContext::from_spec(spec, cfg) {
            Ok(ctx) => run_instance(&ctx, mode),
            Err(e) => unavailable(spec, cfg, e.to_string()),
        }
    };
    if cfg.mc.threads == 1 {
        instances.iter().map(one).collect()
    } else {
        instances.par_iter().map(one).collect()
    }
}

/// Runs the calibration set and derives a window table from it.
pub fn calibrate_windows(instances: &[FamilySpec], cfg: &HarnessConfig) -> Result<WindowTable> {
    let calibrated: Vec<&str> = CATALOGUE
        .iter()
        .filter(|c| c.constant == Constant::Calibrated)
        .map(|c| c.id)
        .collect();
    let cfg = cfg.clone().only(&calibrated);
    let reports = run_check_suite(instances, &cfg, HarnessMode::Calibrate);
    windows_from_reports(&reports, cfg.mc.seed, cfg.mc.samples)
}
