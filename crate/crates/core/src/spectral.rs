//! Eigenvalues of reversible chains and the quantities built from them.
//!
//! The central objects are
//!
//! ```text
//! Q        = sum_{j>=2} (1 - lambda_j)^-2
//! g_t(x,z) = sum_{j<=t} p_j(x,z)
//! Q_t      = sum_z g_t(x,z)^2
//! ```
//!
//! For transitive chains `Q_t` has two further expressions, the return-sum
//! `sum_{i,j<=t} p_{i+j}(x,x)` and the spectral sum
//! `(t+1)^2/n + (1/n) sum_{k>=2} (1 - lambda_k^{t+1})^2 / (1 - lambda_k)^2`;
//! all three are exposed so they can be cross-checked.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::chain::ChainMatrix;
use crate::config::{Tolerances, MIXING_EPS};
use crate::dense::{
    first_time_below_monotone, first_time_row_scan, max_over_rows, mixing_cap, uniform_row,
};
use crate::error::{Error, Result};
use crate::families::{Family, FamilySpec};

/// Largest chain handed to the dense symmetric eigensolver.
pub const DENSE_EIGEN_MAX_N: usize = 4096;

/// Largest transitive chain on which the return-probability shortcut for
/// `t_unif` is also checked against the definition.
pub const UNIF_SHORTCUT_CHECK_MAX_N: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumSource {
    DenseEigensolve,
    ClosedFormCirculant,
    ClosedFormProduct,
}

/// Real eigenvalues sorted in decreasing order, `lambda_1 = 1` first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub source: SpectrumSource,
}

impl Spectrum {
    fn new(mut eigenvalues: Vec<f64>, source: SpectrumSource, lazy: bool) -> Result<Self> {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let tol = Tolerances::default().unit_eigenvalue;
        if (eigenvalues[0] - 1.0).abs() > tol {
            return Err(Error::Structural(format!(
                "top eigenvalue is {}, not 1",
                eigenvalues[0]
            )));
        }
        if lazy {
            if let Some(bad) = eigenvalues.iter().find(|&&l| l < -tol || l > 1.0 + tol) {
                return Err(Error::Structural(format!(
                    "lazy chain has eigenvalue {bad} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            eigenvalues,
            source,
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda2(&self) -> Option<f64> {
        self.eigenvalues.get(1).copied()
    }
}

/// Eigenvalues of a reversible chain from the symmetrisation
/// `D^{1/2} P D^{-1/2}`, `D = diag(pi)`.
pub fn spectrum(p: &ChainMatrix) -> Result<Spectrum> {
    if !p.flags().reversible {
        return Err(Error::Unsupported(
            "spectrum requires a reversible chain".into(),
        ));
    }
    let n = p.n();
    if n > DENSE_EIGEN_MAX_N {
        return Err(Error::Budget(format!(
            "dense eigensolve needs n <= {DENSE_EIGEN_MAX_N}, got {n}"
        )));
    }
    let sqrt_pi: Vec<f64> = p.pi().iter().map(|v| v.sqrt()).collect();
    let mut s = DMatrix::zeros(n, n);
    for x in 0..n {
        for (y, q) in p.row(x) {
            s[(x, y)] = sqrt_pi[x] * q / sqrt_pi[y];
        }
    }
    // Average with the transpose to remove rounding asymmetry.
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    Spectrum::new(
        eig.eigenvalues.iter().copied().collect(),
        SpectrumSource::DenseEigensolve,
        p.flags().lazy,
    )
}

/// Closed-form spectrum of the lazy walk on a cycle, torus, hypercube or
/// complete graph. Returns `None` for other families.
pub fn closed_form_spectrum(spec: &FamilySpec) -> Result<Option<Spectrum>> {
    spec.validate()?;
    let (eigs, source) = match spec.family {
        Family::Cycle { n } => (torus_eigenvalues(1, n), SpectrumSource::ClosedFormCirculant),
        Family::Torus { d, l } => (torus_eigenvalues(d, l), SpectrumSource::ClosedFormProduct),
        Family::Hypercube { d } => (torus_eigenvalues(d, 2), SpectrumSource::ClosedFormProduct),
        Family::Complete { n } => {
            let mut e = vec![1.0];
            if n > 1 {
                e.extend(std::iter::repeat_n(
                    (n as f64 - 2.0) / (2.0 * (n as f64 - 1.0)),
                    n - 1,
                ));
            }
            (e, SpectrumSource::ClosedFormCirculant)
        }
        _ => return Ok(None),
    };
    Spectrum::new(eigs, source, true).map(Some)
}

/// `1/2 + (1/2d) sum_i cos(2 pi k_i / l)` over all `k in [0, l)^d`.
fn torus_eigenvalues(d: usize, l: usize) -> Vec<f64> {
    let cosines: Vec<f64> = (0..l)
        .map(|k| (2.0 * PI * k as f64 / l as f64).cos())
        .collect();
    let count = l.pow(d as u32);
    let mut out = Vec::with_capacity(count);
    let mut index = vec![0usize; d];
    for _ in 0..count {
        let s: f64 = index.iter().map(|&k| cosines[k]).sum();
        out.push(0.5 + 0.5 * s / d as f64);
        for slot in index.iter_mut() {
            *slot += 1;
            if *slot < l {
                break;
            }
            *slot = 0;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QSummary {
    pub q: f64,
    /// `(1 - lambda_2)^-1`; zero for a one-state chain.
    pub t_rel: f64,
}

pub fn compute_q(spec: &Spectrum) -> Result<QSummary> {
    let tol = Tolerances::default().unit_eigenvalue;
    let rest = &spec.eigenvalues[1..];
    if let Some(&l2) = rest.first() {
        if l2 >= 1.0 - tol {
            return Err(Error::Structural(format!(
                "second eigenvalue {l2} is within {tol:e} of 1: chain is reducible"
            )));
        }
    }
    let q = rest.iter().map(|l| (1.0 - l).powi(-2)).sum();
    let t_rel = rest.first().map_or(0.0, |l2| 1.0 / (1.0 - l2));
    Ok(QSummary { q, t_rel })
}

/// `g_t(x, .)` for a fixed base state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenTable {
    pub x: usize,
    pub t: u64,
    pub g: Vec<f64>,
}

pub fn green_table(p: &ChainMatrix, x: usize, t: u64) -> GreenTable {
    let n = p.n();
    let mut cur = vec![0.0; n];
    cur[x] = 1.0;
    let mut next = vec![0.0; n];
    let mut g = cur.clone();
    for _ in 0..t {
        p.apply_left(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        for (gz, c) in g.iter_mut().zip(&cur) {
            *gz += c;
        }
    }
    GreenTable { x, t, g }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QtValue {
    /// `sum_z g_t(x,z)^2`.
    pub qt: f64,
    /// `sum_{i,j<=t} p_{i+j}(x,x)`, computed only for transitive chains.
    pub return_sum: Option<f64>,
}

/// `Q_t` from the Green table. On transitive-flagged chains the return-sum
/// form is evaluated too and must agree to relative 1e-8; a mismatch means
/// the transitivity claim is wrong.
pub fn compute_qt(p: &ChainMatrix, x: usize, t: u64) -> Result<QtValue> {
    let g = green_table(p, x, t);
    let qt: f64 = g.g.iter().map(|v| v * v).sum();
    let return_sum = if p.flags().transitive {
        let rs = return_sum_qt(p, x, t);
        let rel = (rs - qt).abs() / qt;
        if rel > Tolerances::default().dual_formula_rel {
            return Err(Error::Validation(format!(
                "Q_t = {qt} but the return sum is {rs} (relative gap {rel:.3e}); chain is likely not transitive"
            )));
        }
        Some(rs)
    } else {
        None
    };
    Ok(QtValue { qt, return_sum })
}

/// `sum_{i,j<=t} p_{i+j}(x,x) = sum_{s<=2t} (min(s, 2t-s) + 1) p_s(x,x)`.
pub fn return_sum_qt(p: &ChainMatrix, x: usize, t: u64) -> f64 {
    let returns = return_probabilities(p, x, 2 * t);
    returns
        .iter()
        .enumerate()
        .map(|(s, r)| {
            let s = s as u64;
            (s.min(2 * t - s) + 1) as f64 * r
        })
        .sum()
}

/// `p_s(x, x)` for `s = 0..=horizon`.
pub fn return_probabilities(p: &ChainMatrix, x: usize, horizon: u64) -> Vec<f64> {
    let n = p.n();
    let mut cur = vec![0.0; n];
    cur[x] = 1.0;
    let mut next = vec![0.0; n];
    let mut out = Vec::with_capacity(horizon as usize + 1);
    out.push(1.0);
    for _ in 0..horizon {
        p.apply_left(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        out.push(cur[x]);
    }
    out
}

/// Spectral expression for `Q_t` on a transitive chain.
pub fn spectral_qt(spec: &Spectrum, t: u64) -> f64 {
    let n = spec.n() as f64;
    let head = ((t + 1) as f64).powi(2) / n;
    let tail: f64 = spec.eigenvalues[1..]
        .iter()
        .map(|&l| {
            let gap = 1.0 - l;
            if gap <= 0.0 {
                ((t + 1) as f64).powi(2)
            } else {
                let num = 1.0 - l.powi((t + 1) as i32);
                (num / gap).powi(2)
            }
        })
        .sum();
    head + tail / n
}

/// `t_unif`: first `t` with `max_{x,y} |p_t(x,y)/pi(y) - 1| <= 1/4`.
///
/// Transitive-flagged chains use the single-state criterion
/// `n p_t(x,x) - 1 <= 1/4`; on chains with at most 64 states the result
/// is checked against the definition and a mismatch is an error.
pub fn uniform_mixing_time(p: &ChainMatrix) -> Result<u64> {
    if !p.flags().lazy {
        return Err(Error::Unsupported(
            "uniform mixing time requires a lazy chain".into(),
        ));
    }
    let n = p.n();
    if n == 1 {
        return Ok(0);
    }
    let eps = MIXING_EPS + Tolerances::default().mixing_slack;
    let cap = mixing_cap(n);
    if p.flags().transitive {
        let shortcut = first_time_row_scan(p, 0, eps, cap, "uniform mixing time", |row| {
            n as f64 * row[0] - 1.0
        })?;
        if n <= UNIF_SHORTCUT_CHECK_MAX_N {
            let general = uniform_mixing_time_definition(p)?;
            if general != shortcut {
                return Err(Error::Validation(format!(
                    "return-probability criterion gives t_unif = {shortcut}, definition gives {general}"
                )));
            }
        }
        return Ok(shortcut);
    }
    uniform_mixing_time_definition(p)
}

/// `t_unif` straight from the definition, over all state pairs.
pub fn uniform_mixing_time_definition(p: &ChainMatrix) -> Result<u64> {
    let eps = MIXING_EPS + Tolerances::default().mixing_slack;
    let pi = p.pi().to_vec();
    first_time_below_monotone(p, eps, mixing_cap(p.n()), "uniform mixing time", |m| {
        max_over_rows(m, &pi, uniform_row)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainMatrix;
    use crate::families::generate;
    use approx::assert_relative_eq;

    fn fam(f: Family) -> (FamilySpec, ChainMatrix) {
        let s = FamilySpec::new(f);
        (s, generate(&s).unwrap())
    }

    fn lazy_flip() -> ChainMatrix {
        fam(Family::Complete { n: 2 }).1
    }

    #[test]
    fn cycle4_spectrum_both_routes() {
        let (s, c) = fam(Family::Cycle { n: 4 });
        let closed = closed_form_spectrum(&s).unwrap().unwrap();
        let dense = spectrum(&c).unwrap();
        for (a, b) in closed.eigenvalues.iter().zip(&dense.eigenvalues) {
            assert!((a - b).abs() < 1e-12);
        }
        let want = [1.0, 0.5, 0.5, 0.0];
        for (a, b) in dense.eigenvalues.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let q = compute_q(&closed).unwrap();
        assert_relative_eq!(q.q, 9.0, max_relative = 1e-12);
        assert_relative_eq!(q.t_rel, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn complete4_spectrum_and_q() {
        let (s, c) = fam(Family::Complete { n: 4 });
        let dense = spectrum(&c).unwrap();
        for (i, l) in dense.eigenvalues.iter().enumerate() {
            let want = if i == 0 { 1.0 } else { 1.0 / 3.0 };
            assert!((l - want).abs() < 1e-12);
        }
        let q = compute_q(&closed_form_spectrum(&s).unwrap().unwrap()).unwrap();
        assert_relative_eq!(q.q, 6.75, max_relative = 1e-12);
    }

    #[test]
    fn single_state_chain() {
        let (s, c) = fam(Family::Complete { n: 1 });
        let sp = spectrum(&c).unwrap();
        assert_eq!(sp.eigenvalues, vec![1.0]);
        assert_eq!(compute_q(&sp).unwrap().q, 0.0);
        assert_eq!(
            closed_form_spectrum(&s).unwrap().unwrap().eigenvalues,
            vec![1.0]
        );
        assert_eq!(uniform_mixing_time(&c).unwrap(), 0);
    }

    #[test]
    fn non_reversible_spectrum_unsupported() {
        let rot =
            ChainMatrix::from_rows(vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]]).unwrap();
        let lazy = crate::chain::make_lazy(&rot).unwrap();
        assert!(matches!(spectrum(&lazy), Err(Error::Unsupported(_))));
    }

    #[test]
    fn repeated_unit_eigenvalue_is_structural_error() {
        let sp = Spectrum {
            eigenvalues: vec![1.0, 1.0 - 1e-12, 0.5],
            source: SpectrumSource::DenseEigensolve,
        };
        assert!(matches!(compute_q(&sp), Err(Error::Structural(_))));
    }

    #[test]
    fn green_table_examples() {
        let c = lazy_flip();
        assert_eq!(green_table(&c, 0, 0).g, vec![1.0, 0.0]);
        assert_eq!(green_table(&c, 0, 1).g, vec![1.5, 0.5]);
        let (_, cyc) = fam(Family::Cycle { n: 7 });
        let g = green_table(&cyc, 3, 9);
        assert!((g.g.iter().sum::<f64>() - 10.0).abs() < 1e-9);
        assert!(g.g[3] >= 1.0);
    }

    #[test]
    fn qt_examples() {
        let c = lazy_flip();
        assert_eq!(compute_qt(&c, 0, 0).unwrap().qt, 1.0);
        assert_eq!(compute_qt(&c, 0, 1).unwrap().qt, 2.5);
        let (s, cyc) = fam(Family::Cycle { n: 4 });
        let sp = closed_form_spectrum(&s).unwrap().unwrap();
        assert_relative_eq!(spectral_qt(&sp, 0), 1.0, max_relative = 1e-14);
        let qt1 = compute_qt(&cyc, 0, 1).unwrap();
        // g_1 = (3/2, 1/4, 0, 1/4)
        assert_relative_eq!(qt1.qt, 2.375, max_relative = 1e-14);
        assert_relative_eq!(spectral_qt(&sp, 1), qt1.qt, max_relative = 1e-12);
        assert_relative_eq!(qt1.return_sum.unwrap(), qt1.qt, max_relative = 1e-12);
        // Flip chain spectrum {1, 0}: (2^2)/2 + (1/2)(1)^2 = 2.5.
        let flip_sp = closed_form_spectrum(&FamilySpec::new(Family::Complete { n: 2 }))
            .unwrap()
            .unwrap();
        assert_relative_eq!(spectral_qt(&flip_sp, 1), 2.5, max_relative = 1e-14);
    }

    #[test]
    fn qt_lower_bound_past_relaxation() {
        let (s, cyc) = fam(Family::Cycle { n: 4 });
        let q = compute_q(&closed_form_spectrum(&s).unwrap().unwrap()).unwrap();
        for t in (q.t_rel.ceil() as u64)..40 {
            let qt = compute_qt(&cyc, 0, t).unwrap().qt;
            let bound =
                ((t + 1) as f64).powi(2) / 4.0 + (1.0 - 2.0 / std::f64::consts::E) * q.q / 4.0;
            assert!(qt / bound >= 1.0, "t={t}: {qt} < {bound}");
        }
    }

    #[test]
    fn complete64_dual_formula() {
        let (s, c) = fam(Family::Complete { n: 64 });
        let sp = closed_form_spectrum(&s).unwrap().unwrap();
        let qt = compute_qt(&c, 0, 100).unwrap();
        assert_relative_eq!(spectral_qt(&sp, 100), qt.qt, max_relative = 1e-8);
    }

    #[test]
    fn uniform_mixing_small_cases() {
        assert_eq!(uniform_mixing_time(&lazy_flip()).unwrap(), 1);
        let (s, c) = fam(Family::Cycle { n: 16 });
        let q = compute_q(&closed_form_spectrum(&s).unwrap().unwrap()).unwrap();
        let t = uniform_mixing_time(&c).unwrap();
        assert!((t as f64) <= 2.0 * q.q.sqrt());
    }

    #[test]
    fn uniform_mixing_rejects_non_lazy() {
        let flip = ChainMatrix::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)]]).unwrap();
        assert!(matches!(
            uniform_mixing_time(&flip),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn trace_matches_eigenvalue_sum() {
        let spec = FamilySpec::seeded(Family::WeightedTree { n: 25 }, 5);
        let c = generate(&spec).unwrap();
        let sp = spectrum(&c).unwrap();
        let trace: f64 = (0..c.n()).map(|x| c.prob(x, x)).sum();
        assert!((sp.eigenvalues.iter().sum::<f64>() - trace).abs() < 1e-8);
    }
}
