//! Log-log slope fits and size sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{Family, FamilySpec};

use super::context::InstanceContext;
use super::HarnessConfig;

/// Fewest sizes a slope is fitted over.
pub const MIN_FIT_POINTS: usize = 3;

/// Ordinary least squares of `ln y` on `ln x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl SlopeFit {
    pub fn fit(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() || x.len() < MIN_FIT_POINTS {
            return Err(Error::Validation(format!(
                "slope fit needs at least {MIN_FIT_POINTS} paired points, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.iter().chain(y).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Validation(
                "slope fit needs positive finite values".into(),
            ));
        }
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let m = lx.len() as f64;
        let mx = lx.iter().sum::<f64>() / m;
        let my = ly.iter().sum::<f64>() / m;
        let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
        let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
        let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::Validation(
                "slope fit needs at least two distinct sizes".into(),
            ));
        }
        let slope = sxy / sxx;
        let r_squared = if syy == 0.0 {
            1.0
        } else {
            sxy * sxy / (sxx * syy)
        };
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            slope,
            intercept: my - slope * mx,
            r_squared,
        })
    }
}

/// Sizes to run in one dimension and the slope expected, if asserted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPlan {
    pub d: usize,
    pub sizes: Vec<usize>,
    /// `(slope, tolerance)`; `None` for dimensions reported only.
    pub expected: Option<(f64, f64)>,
}

/// `d = 1, 2, 3` asserted with slope 2; higher dimensions informational.
pub fn default_torus_plan(dmax: usize) -> Vec<TorusPlan> {
    let all = [
        TorusPlan {
            d: 1,
            sizes: vec![16, 32, 64, 128],
            expected: Some((2.0, 0.2)),
        },
        TorusPlan {
            d: 2,
            sizes: vec![8, 16, 32],
            expected: Some((2.0, 0.3)),
        },
        TorusPlan {
            d: 3,
            sizes: vec![4, 6, 8],
            expected: Some((2.0, 0.4)),
        },
        TorusPlan {
            d: 4,
            sizes: vec![3, 4, 5],
            expected: None,
        },
        TorusPlan {
            d: 5,
            sizes: vec![3, 4, 5],
            expected: None,
        },
    ];
    all.into_iter().filter(|p| p.d <= dmax).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub l: usize,
    pub n: usize,
    pub ti: f64,
    pub ti_se: f64,
    /// `t_I / sqrt(n)`.
    pub per_sqrt_n: f64,
    /// `t_I / (sqrt(n) ln n)`.
    pub per_sqrt_n_log_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusScaling {
    pub d: usize,
    pub points: Vec<TorusPoint>,
    pub skipped: Vec<(usize, String)>,
    pub fit: Option<SlopeFit>,
    pub expected: Option<(f64, f64)>,
    /// `Some` only for asserted dimensions with a fit.
    pub pass: Option<bool>,
    /// Largest relative deviation of `t_I / sqrt(n)` from its mean.
    pub sqrt_n_spread: f64,
}

pub fn torus_scaling(plan: &[TorusPlan], cfg: &HarnessConfig) -> Vec<TorusScaling> {
    plan.iter()
        .map(|p| {
            let mut points = Vec::new();
            let mut skipped = Vec::new();
            for &l in &p.sizes {
                let spec = FamilySpec::new(Family::Torus { d: p.d, l });
                let ctx = match InstanceContext::from_spec(&spec, cfg) {
                    Ok(c) => c,
                    Err(e) => {
                        skipped.push((l, e.to_string()));
                        continue;
                    }
                };
                match ctx.ti() {
                    Ok(est) => {
                        let n = ctx.n() as f64;
                        let ti = est.estimate.mean;
                        points.push(TorusPoint {
                            l,
                            n: ctx.n(),
                            ti,
                            ti_se: est.estimate.std_error,
                            per_sqrt_n: ti / n.sqrt(),
                            per_sqrt_n_log_n: ti / (n.sqrt() * n.ln()),
                        });
                    }
                    Err(why) => skipped.push((l, why)),
                }
            }
            let x: Vec<f64> = points.iter().map(|q| q.l as f64).collect();
            let y: Vec<f64> = points.iter().map(|q| q.ti).collect();
            let fit = SlopeFit::fit(&x, &y).ok();
            let pass = match (&fit, p.expected) {
                (Some(f), Some((s, tol))) => Some((f.slope - s).abs() <= tol),
                _ => None,
            };
            let ratios: Vec<f64> = points.iter().map(|q| q.per_sqrt_n).collect();
            TorusScaling {
                d: p.d,
                points,
                skipped,
                fit,
                expected: p.expected,
                pass,
                sqrt_n_spread: relative_spread(&ratios),
            }
        })
        .collect()
}

/// `max |v / mean - 1|`.
pub fn relative_spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values
        .iter()
        .map(|v| (v / mean - 1.0).abs())
        .fold(0.0, f64::max)
}

fn max_over_min(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi / lo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteRow {
    pub n: usize,
    pub ti: f64,
    pub ti_se: f64,
    pub ti_per_sqrt_n: f64,
    pub t_hit: f64,
}

/// Complete graphs: `t_I / sqrt(n)` flat to within 25% of its mean across
/// sizes, and `t_hit = 2 (n - 1)` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteSweep {
    pub rows: Vec<CompleteRow>,
    pub spread: f64,
    pub t_hit_max_abs_error: f64,
    pub pass: bool,
}

pub fn complete_sweep(sizes: &[usize], cfg: &HarnessConfig) -> Result<CompleteSweep> {
    let mut rows = Vec::new();
    for &n in sizes {
        let ctx = InstanceContext::from_spec(&FamilySpec::new(Family::Complete { n }), cfg)?;
        let est = ctx.ti().map_err(Error::Budget)?.estimate;
        let t_hit = ctx.t_hit().map_err(Error::Budget)?;
        rows.push(CompleteRow {
            n,
            ti: est.mean,
            ti_se: est.std_error,
            ti_per_sqrt_n: est.mean / (n as f64).sqrt(),
            t_hit,
        });
    }
    let spread = relative_spread(&rows.iter().map(|r| r.ti_per_sqrt_n).collect::<Vec<_>>());
    let err = rows
        .iter()
        .map(|r| (r.t_hit - 2.0 * (r.n as f64 - 1.0)).abs())
        .fold(0.0, f64::max);
    let tol = rows.iter().map(|r| 1e-6 * r.n as f64).fold(0.0, f64::max);
    Ok(CompleteSweep {
        rows,
        spread,
        t_hit_max_abs_error: err,
        pass: spread <= 0.25 && err <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRow {
    pub n: usize,
    pub t_hit: f64,
    pub t_unif: u64,
}

/// Cycles: `t_hit / n^2` and `t_unif / n^2` each vary by at most a factor 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSweep {
    pub rows: Vec<CycleRow>,
    pub t_hit_ratio_spread: f64,
    pub t_unif_ratio_spread: f64,
    pub pass: bool,
}

pub fn cycle_sweep(sizes: &[usize], cfg: &HarnessConfig) -> Result<CycleSweep> {
    let mut rows = Vec::new();
    for &n in sizes {
        let ctx = InstanceContext::from_spec(&FamilySpec::new(Family::Cycle { n }), cfg)?;
        rows.push(CycleRow {
            n,
            t_hit: ctx.t_hit().map_err(Error::Budget)?,
            t_unif: ctx.t_unif().map_err(Error::Budget)?,
        });
    }
    let sq = |r: &CycleRow| (r.n * r.n) as f64;
    let hit = max_over_min(&rows.iter().map(|r| r.t_hit / sq(r)).collect::<Vec<_>>());
    let unif = max_over_min(
        &rows
            .iter()
            .map(|r| r.t_unif as f64 / sq(r))
            .collect::<Vec<_>>(),
    );
    Ok(CycleSweep {
        rows,
        t_hit_ratio_spread: hit,
        t_unif_ratio_spread: unif,
        pass: hit <= 2.0 && unif <= 2.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoCliquesRow {
    pub large: usize,
    pub small: usize,
    pub t_unif: u64,
    pub ti: f64,
    pub ti_se: f64,
    pub ratio: f64,
}

/// Two cliques: `t_unif / t_I` strictly increasing in the clique size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoCliquesSweep {
    pub rows: Vec<TwoCliquesRow>,
    pub increasing: bool,
}

pub fn two_cliques_sweep(sizes: &[usize], cfg: &HarnessConfig) -> Result<TwoCliquesSweep> {
    let mut rows = Vec::new();
    for &m in sizes {
        let spec = FamilySpec::new(Family::TwoCliques {
            small: None,
            large: m,
        });
        let ctx = InstanceContext::from_spec(&spec, cfg)?;
        let t_unif = ctx.t_unif().map_err(Error::Budget)?;
        let est = ctx.ti().map_err(Error::Budget)?.estimate;
        rows.push(TwoCliquesRow {
            large: m,
            small: ctx.n() - m,
            t_unif,
            ti: est.mean,
            ti_se: est.std_error,
            ratio: t_unif as f64 / est.mean,
        });
    }
    let increasing = rows.len() >= 3 && rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    Ok(TwoCliquesSweep { rows, increasing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let x = [2.0, 4.0, 8.0, 16.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        let f = SlopeFit::fit(&x, &y).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(SlopeFit::fit(&[1.0, 2.0], &[1.0, 4.0]).is_err());
        assert!(SlopeFit::fit(&[1.0, 2.0, 3.0], &[1.0, -4.0, 9.0]).is_err());
    }

    #[test]
    fn spread_measures_worst_deviation() {
        assert_eq!(relative_spread(&[1.0, 1.0]), 0.0);
        assert!((relative_spread(&[1.0, 3.0]) - 0.5).abs() < 1e-12);
    }
}
