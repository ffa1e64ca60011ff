//! Ratio windows for checks whose constants are not known in closed form.
//!
//! Windows are measured on a calibration set, inflated by a factor of two
//! and frozen into `data/windows.json`, which is compiled into the crate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::report::{CheckStatus, TheoremReport};

pub const WINDOWS_SCHEMA_VERSION: u32 = 1;
pub const INFLATION: f64 = 2.0;
pub const MIN_CALIBRATION_INSTANCES: usize = 4;

const FROZEN: &str = include_str!("../../data/windows.json");

/// Closed interval; a missing end is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Window {
    pub const fn upper(max: f64) -> Self {
        Self {
            min: None,
            max: Some(max),
        }
    }

    pub const fn lower(min: f64) -> Self {
        Self {
            min: Some(min),
            max: None,
        }
    }

    pub const fn between(min: f64, max: f64) -> Self {
        Self {
            min: Some(min),
            max: Some(max),
        }
    }

    /// True when `[lo, hi]` meets the window.
    pub fn admits(&self, lo: f64, hi: f64) -> bool {
        self.min.is_none_or(|m| hi >= m) && self.max.is_none_or(|m| lo <= m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedWindow {
    pub window: Window,
    /// Ratio range actually observed before inflation.
    pub observed_min: f64,
    pub observed_max: f64,
    pub instances: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTable {
    pub schema_version: u32,
    pub inflation: f64,
    pub seed: u64,
    pub samples: u64,
    pub windows: BTreeMap<String, CalibratedWindow>,
}

impl WindowTable {
    pub fn empty() -> Self {
        Self {
            schema_version: WINDOWS_SCHEMA_VERSION,
            inflation: INFLATION,
            seed: 0,
            samples: 0,
            windows: BTreeMap::new(),
        }
    }

    /// The table compiled into the crate.
    pub fn frozen() -> Self {
        Self::from_json(FROZEN).expect("embedded windows.json is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text)?;
        if t.schema_version != WINDOWS_SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "windows schema version {} is not {WINDOWS_SCHEMA_VERSION}",
                t.schema_version
            )));
        }
        Ok(t)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn get(&self, check: &str) -> Option<Window> {
        self.windows.get(check).map(|w| w.window)
    }
}

/// Builds windows from calibration-mode reports. One-sided checks get
/// `[-, 2 max]`, two-sided checks `[min / 2, 2 max]`.
pub fn windows_from_reports(
    reports: &[TheoremReport],
    seed: u64,
    samples: u64,
) -> Result<WindowTable> {
    let mut seen: BTreeMap<String, (bool, Vec<(String, f64)>)> = BTreeMap::new();
    for r in reports {
        for c in &r.checks {
            if c.status != CheckStatus::Calibration {
                continue;
            }
            let entry = seen
                .entry(c.id.clone())
                .or_insert((c.two_sided, Vec::new()));
            entry.1.push((r.instance.clone(), c.ratio));
        }
    }
    let mut table = WindowTable {
        seed,
        samples,
        ..WindowTable::empty()
    };
    for (id, (two_sided, obs)) in seen {
        let mut instances: Vec<String> = obs.iter().map(|(i, _)| i.clone()).collect();
        instances.sort();
        instances.dedup();
        if instances.len() < MIN_CALIBRATION_INSTANCES {
            return Err(Error::Validation(format!(
                "check {id} has {} calibration instances, need at least {MIN_CALIBRATION_INSTANCES}",
                instances.len()
            )));
        }
        let lo = obs.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
        let hi = obs.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Validation(format!(
                "check {id} produced a non-finite calibration ratio"
            )));
        }
        let window = if two_sided {
            Window::between(lo / INFLATION, hi * INFLATION)
        } else {
            Window::upper(hi * INFLATION)
        };
        table.windows.insert(
            id,
            CalibratedWindow {
                window,
                observed_min: lo,
                observed_max: hi,
                instances,
            },
        );
    }
    Ok(table)
}
