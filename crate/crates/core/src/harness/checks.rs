//! The check catalogue and its evaluation on one instance.

use crate::mc::EstimateWithCI;

use super::context::{InstanceContext, Q};
use super::report::{CheckRecord, CheckStatus};
use super::windows::Window;
use super::HarnessMode;

/// Structural requirements of a check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Hypotheses {
    pub reversible: bool,
    pub transitive: bool,
    pub regular: bool,
    pub tree: bool,
    pub max_n: Option<usize>,
}

const ANY: Hypotheses = Hypotheses {
    reversible: false,
    transitive: false,
    regular: false,
    tree: false,
    max_n: None,
};
const REVERSIBLE: Hypotheses = Hypotheses {
    reversible: true,
    ..ANY
};
const TRANSITIVE: Hypotheses = Hypotheses {
    reversible: true,
    transitive: true,
    ..ANY
};
const REGULAR: Hypotheses = Hypotheses {
    regular: true,
    ..ANY
};
const TREE: Hypotheses = Hypotheses {
    reversible: true,
    tree: true,
    ..ANY
};

/// Where a check's window comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constant {
    /// Measured by calibration and frozen.
    Calibrated,
    /// Known exactly; no calibration.
    Exact(Window),
    /// Exact, with a window that depends on the Monte Carlo error.
    ExactMc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckSpec {
    pub id: &'static str,
    pub two_sided: bool,
    pub constant: Constant,
    pub hypotheses: Hypotheses,
    pub summary: &'static str,
}

const fn calibrated(
    id: &'static str,
    two_sided: bool,
    hypotheses: Hypotheses,
    summary: &'static str,
) -> CheckSpec {
    CheckSpec {
        id,
        two_sided,
        constant: Constant::Calibrated,
        hypotheses,
        summary,
    }
}

pub const CATALOGUE: &[CheckSpec] = &[
    calibrated(
        "large_set_hitting_vs_ti",
        false,
        ANY,
        "t_H <= C t_I (t_ces stands in for t_H beyond enumeration)",
    ),
    calibrated("tmix_vs_ti", false, REVERSIBLE, "t_mix <= C t_I"),
    calibrated(
        "tces_vs_large_set_hitting",
        true,
        Hypotheses {
            max_n: Some(18),
            ..ANY
        },
        "t_ces ~ t_H",
    ),
    calibrated("tree_tmix_vs_ti", true, TREE, "t_mix ~ t_I on trees"),
    calibrated(
        "tree_ti_vs_central_hitting",
        true,
        TREE,
        "t_I ~ max_x E_x tau_v, v central",
    ),
    calibrated("ti_vs_sqrt_q", true, TRANSITIVE, "t_I ~ sqrt(Q)"),
    calibrated("q_vs_n_qtunif", true, TRANSITIVE, "Q ~ n Q_{t_unif}"),
    calibrated("thit_vs_ti_squared", false, REGULAR, "t_hit <= C t_I^2"),
    calibrated(
        "ti_vs_sqrt_n_tunif",
        false,
        REGULAR,
        "t_I <= C sqrt(n) t_unif^(3/4)",
    ),
    calibrated("ti_vs_ti_star", true, ANY, "t_I ~ t_I*"),
    calibrated("pi_pi_vs_ti", true, TRANSITIVE, "E_{pi,pi} tau_I ~ t_I"),
    CheckSpec {
        id: "ti_le_2thit",
        two_sided: false,
        constant: Constant::Exact(Window::upper(1.0)),
        hypotheses: ANY,
        summary: "t_I <= 2 t_hit",
    },
    CheckSpec {
        id: "th_le_2thit",
        two_sided: false,
        constant: Constant::Exact(Window::upper(1.0)),
        hypotheses: Hypotheses {
            max_n: Some(12),
            ..ANY
        },
        summary: "t_H <= 2 t_hit",
    },
    CheckSpec {
        id: "tunif_le_2sqrt_q",
        two_sided: false,
        constant: Constant::Exact(Window::upper(1.0)),
        hypotheses: TRANSITIVE,
        summary: "t_unif <= 2 sqrt(Q)",
    },
    CheckSpec {
        id: "qt_dual_formula",
        two_sided: true,
        constant: Constant::Exact(Window::between(1.0 - 1e-8, 1.0 + 1e-8)),
        hypotheses: Hypotheses {
            max_n: Some(512),
            ..TRANSITIVE
        },
        summary: "sum_z g_t^2 = sum_{i,j} p_{i+j}(x,x) = spectral form",
    },
    CheckSpec {
        id: "pi_pi_intersection_lower",
        two_sided: false,
        constant: Constant::Exact(Window::lower(1.0)),
        hypotheses: Hypotheses {
            max_n: Some(5),
            ..TRANSITIVE
        },
        summary: "P_{pi,pi}(I_t > 0) >= (t+1)^2 / (4 n Q_t)",
    },
    CheckSpec {
        id: "pi_pi_intersection_upper",
        two_sided: false,
        constant: Constant::Exact(Window::upper(1.0)),
        hypotheses: Hypotheses {
            max_n: Some(5),
            ..TRANSITIVE
        },
        summary: "P_{pi,pi}(I_t > 0) <= min(1, 2^7 (t+1)^2 / (n Q_t))",
    },
    CheckSpec {
        id: "intersection_mean_identity",
        two_sided: true,
        constant: Constant::ExactMc,
        hypotheses: TRANSITIVE,
        summary: "E_{x,x} I_t = Q_t",
    },
    CheckSpec {
        id: "intersection_second_moment",
        two_sided: false,
        constant: Constant::ExactMc,
        hypotheses: TRANSITIVE,
        summary: "E_{x,x} I_t^2 <= 4 Q_t^2",
    },
    CheckSpec {
        id: "s_t_diagnostic",
        two_sided: false,
        constant: Constant::ExactMc,
        hypotheses: TRANSITIVE,
        summary: "P_x(S_t >= Q_t / 2) >= 1/16",
    },
];

pub fn check_spec(id: &str) -> Option<&'static CheckSpec> {
    CATALOGUE.iter().find(|c| c.id == id)
}

/// A value with its 3-standard-error range; exact values have `lo = hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Term {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            lo: value,
            hi: value,
        }
    }

    pub fn mc(e: &EstimateWithCI) -> Self {
        Self {
            value: e.mean,
            lo: e.lower(3.0).max(0.0),
            hi: e.upper(3.0),
        }
    }

    /// Applies a nondecreasing map to all three values.
    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            value: f(self.value),
            lo: f(self.lo),
            hi: f(self.hi),
        }
    }

    pub fn scale(self, c: f64) -> Self {
        self.map(|v| v * c)
    }
}

struct Evaluation {
    at: Option<String>,
    lhs: Term,
    rhs: Term,
    inputs: Vec<String>,
    window: Option<Window>,
}

fn eval(lhs: Term, rhs: Term, inputs: &[&str]) -> Evaluation {
    Evaluation {
        at: None,
        lhs,
        rhs,
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        window: None,
    }
}

fn hypothesis_failure(spec: &CheckSpec, ctx: &InstanceContext) -> Option<String> {
    let flags = ctx.chain.flags();
    let h = spec.hypotheses;
    if !flags.lazy {
        return Some("laziness hypothesis fails".into());
    }
    if h.reversible && !flags.reversible {
        return Some("reversibility hypothesis fails".into());
    }
    if h.transitive && !flags.transitive {
        return Some("transitivity hypothesis fails".into());
    }
    if h.regular && !flags.regular {
        return Some("regularity hypothesis fails".into());
    }
    if h.tree && !ctx.is_tree() {
        return Some("tree hypothesis fails".into());
    }
    if let Some(m) = h.max_n {
        if ctx.n() > m {
            return Some(format!("exact computation limited to n <= {m}"));
        }
    }
    if ctx.n() < 2 {
        return Some("one-state chain: every ratio is 0/0".into());
    }
    None
}

fn ceil_u64(x: f64) -> u64 {
    x.ceil().max(0.0) as u64
}

fn ti_term(ctx: &InstanceContext) -> Q<Term> {
    Ok(Term::mc(&ctx.ti()?.estimate))
}

fn evaluations(spec: &CheckSpec, ctx: &InstanceContext) -> Q<Vec<Evaluation>> {
    let one = |e: Evaluation| Ok(vec![e]);
    match spec.id {
        "large_set_hitting_vs_ti" => {
            let h = ctx.t_h()?;
            let key = if h.proxy { "t_H_proxy" } else { "t_H" };
            one(eval(Term::exact(h.value), ti_term(ctx)?, &[key, "t_I_hat"]))
        }
        "tmix_vs_ti" | "tree_tmix_vs_ti" => one(eval(
            Term::exact(ctx.t_mix()? as f64),
            ti_term(ctx)?,
            &["t_mix", "t_I_hat"],
        )),
        "tces_vs_large_set_hitting" => {
            let h = ctx.t_h()?;
            if h.proxy {
                return Err("t_H enumeration out of budget".into());
            }
            one(eval(
                Term::exact(ctx.t_ces()? as f64),
                Term::exact(h.value),
                &["t_ces", "t_H"],
            ))
        }
        "tree_ti_vs_central_hitting" => {
            let (_, h) = ctx.central_hitting()?;
            one(eval(
                ti_term(ctx)?,
                Term::exact(h),
                &["t_I_hat", "central_hitting"],
            ))
        }
        "ti_vs_sqrt_q" => one(eval(
            ti_term(ctx)?,
            Term::exact(ctx.q()?.q.sqrt()),
            &["t_I_hat", "Q"],
        )),
        "q_vs_n_qtunif" => {
            let q = ctx.q()?.q;
            let tu = ctx.t_unif()?;
            let qt = ctx.qt(tu);
            one(eval(
                Term::exact(q),
                Term::exact(ctx.n() as f64 * qt),
                &["Q", "n", "t_unif", "E_I"],
            ))
        }
        "thit_vs_ti_squared" => one(eval(
            Term::exact(ctx.t_hit()?),
            ti_term(ctx)?.map(|v| v * v),
            &["t_hit", "t_I_hat"],
        )),
        "ti_vs_sqrt_n_tunif" => {
            let rhs = (ctx.n() as f64).sqrt() * (ctx.t_unif()? as f64).powf(0.75);
            one(eval(
                ti_term(ctx)?,
                Term::exact(rhs),
                &["t_I_hat", "n", "t_unif"],
            ))
        }
        "ti_vs_ti_star" => one(eval(
            ti_term(ctx)?,
            Term::mc(&ctx.ti_star()?.estimate),
            &["t_I_hat", "t_I_star_hat"],
        )),
        "pi_pi_vs_ti" => one(eval(
            Term::mc(&ctx.pi_pi()?),
            ti_term(ctx)?,
            &["E_pi_pi_hat", "t_I_hat"],
        )),
        "ti_le_2thit" => one(eval(
            ti_term(ctx)?,
            Term::exact(2.0 * ctx.t_hit()?),
            &["t_I_hat", "t_hit"],
        )),
        "th_le_2thit" => {
            let h = ctx.t_h()?;
            one(eval(
                Term::exact(h.value),
                Term::exact(2.0 * ctx.t_hit()?),
                &["t_H", "t_hit"],
            ))
        }
        "tunif_le_2sqrt_q" => one(eval(
            Term::exact(ctx.t_unif()? as f64),
            Term::exact(2.0 * ctx.q()?.q.sqrt()),
            &["t_unif", "Q"],
        )),
        "qt_dual_formula" => {
            let q = ctx.q()?;
            let mut grid = vec![0, 1, ceil_u64(q.t_rel), ceil_u64(2.0 * q.q.sqrt())];
            grid.sort_unstable();
            grid.dedup();
            let mut out = Vec::new();
            for t in grid {
                let qt = ctx.qt(t);
                for (form, value) in [
                    ("return_sum", ctx.return_sum(t)),
                    ("spectral", ctx.spectral_qt(t)?),
                ] {
                    let mut e = eval(Term::exact(value), Term::exact(qt), &["Q", "t_rel"]);
                    e.inputs.push(format!("Q_t[{t}]"));
                    e.at = Some(format!("t={t};{form}"));
                    out.push(e);
                }
            }
            Ok(out)
        }
        "pi_pi_intersection_lower" | "pi_pi_intersection_upper" => {
            let cdf = ctx.pi_pi_cdf()?.clone();
            let n = ctx.n() as f64;
            let mut out = Vec::new();
            for t in 1..cdf.len() as u64 {
                let qt = ctx.qt(t);
                let base = ((t + 1) as f64).powi(2) / (n * qt);
                let bound = if spec.id.ends_with("lower") {
                    base / 4.0
                } else {
                    (128.0 * base).min(1.0)
                };
                let mut e = eval(Term::exact(cdf[t as usize]), Term::exact(bound), &[]);
                e.inputs.push(format!("Q_t[{t}]"));
                e.at = Some(format!("t={t}"));
                out.push(e);
            }
            Ok(out)
        }
        "intersection_mean_identity" | "intersection_second_moment" => {
            let q = ctx.q()?;
            let mut grid = vec![1, ceil_u64(q.t_rel), ceil_u64(q.q.sqrt())];
            grid.sort_unstable();
            grid.dedup();
            let mut out = Vec::new();
            for t in grid {
                let work = ctx.cfg.moment_samples.saturating_mul(t + 1);
                if work > ctx.cfg.moment_work_budget {
                    return Err(format!(
                        "intersection moments at t={t} exceed the work budget"
                    ));
                }
                let m = ctx.moments(t)?;
                let qt = ctx.qt(t);
                let mut e = if spec.id == "intersection_mean_identity" {
                    let tol = (3.0 * m.first.std_error / qt).max(0.02);
                    let mut e = eval(Term::exact(m.first.mean), Term::exact(qt), &[]);
                    e.window = Some(Window::between(1.0 - tol, 1.0 + tol));
                    e.inputs.push(format!("mean_I_t[{t}]"));
                    e
                } else {
                    let rel = 3.0 * m.second.std_error / m.second.mean.max(f64::MIN_POSITIVE);
                    let mut e = eval(Term::exact(m.second.mean), Term::exact(4.0 * qt * qt), &[]);
                    e.window = Some(Window::upper(1.0 + rel));
                    e.inputs.push(format!("mean_I_t_sq[{t}]"));
                    e
                };
                e.inputs.push(format!("Q_t[{t}]"));
                e.at = Some(format!("t={t}"));
                out.push(e);
            }
            Ok(out)
        }
        "s_t_diagnostic" => {
            let q = ctx.q()?;
            let mut grid = vec![ceil_u64(q.t_rel), ceil_u64(q.q.sqrt())];
            grid.sort_unstable();
            grid.dedup();
            let mut out = Vec::new();
            for t in grid {
                let d = ctx.s_diagnostic(t)?;
                let mut e = eval(Term::exact(d.frequency), Term::exact(1.0 / 16.0), &[]);
                e.window = Some(Window::lower(1.0 - 3.0 * d.std_error * 16.0));
                e.inputs.push(format!("s_t_frequency[{t}]"));
                e.at = Some(format!("t={t}"));
                out.push(e);
            }
            Ok(out)
        }
        other => Err(format!("unknown check {other}")),
    }
}

fn record(
    spec: &CheckSpec,
    at: Option<String>,
    status: CheckStatus,
    reason: Option<String>,
) -> CheckRecord {
    CheckRecord {
        id: spec.id.to_string(),
        at,
        lhs: 0.0,
        rhs: 0.0,
        ratio: 0.0,
        ratio_lo: 0.0,
        ratio_hi: 0.0,
        two_sided: spec.two_sided,
        window: None,
        status,
        inputs: Vec::new(),
        reason,
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        f64::MAX
    }
}

pub(crate) fn evaluate_check(
    spec: &CheckSpec,
    ctx: &InstanceContext,
    mode: HarnessMode,
) -> Vec<CheckRecord> {
    if let Some(why) = hypothesis_failure(spec, ctx) {
        return vec![record(spec, None, CheckStatus::Skipped, Some(why))];
    }
    let evals = match evaluations(spec, ctx) {
        Ok(e) => e,
        Err(why) => return vec![record(spec, None, CheckStatus::NotEvaluated, Some(why))],
    };
    evals
        .into_iter()
        .map(|e| {
            let mut r = record(spec, e.at, CheckStatus::NotEvaluated, None);
            r.lhs = e.lhs.value;
            r.rhs = e.rhs.value;
            r.inputs = e.inputs;
            if e.rhs.value <= 0.0 {
                r.reason = Some("zero denominator".into());
                return r;
            }
            r.ratio = e.lhs.value / e.rhs.value;
            r.ratio_lo = ratio(e.lhs.lo, e.rhs.hi);
            r.ratio_hi = ratio(e.lhs.hi, e.rhs.lo);
            let window = match spec.constant {
                Constant::Exact(w) => Some(w),
                Constant::ExactMc => e.window,
                Constant::Calibrated => match mode {
                    HarnessMode::Calibrate => {
                        r.status = CheckStatus::Calibration;
                        return r;
                    }
                    HarnessMode::Assert => ctx.cfg.windows.get(spec.id),
                },
            };
            match window {
                Some(w) => {
                    r.window = Some(w);
                    r.status = if w.admits(r.ratio_lo, r.ratio_hi) {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    };
                }
                None => r.reason = Some("no calibrated window".into()),
            }
            r
        })
        .collect()
}
