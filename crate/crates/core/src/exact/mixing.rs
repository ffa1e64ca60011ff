use crate::chain::ChainMatrix;
use crate::config::{Tolerances, MIXING_EPS};
use crate::dense::{
    first_time_below_monotone, first_time_row_scan, max_over_rows, mixing_cap, tv_row,
    DENSE_POWER_MAX_N,
};
use crate::error::{Error, Result};

/// Sparse operations allowed for one Cesàro scan over all rows.
pub const CESARO_WORK_BUDGET: u64 = 3_000_000_000;

/// `t_mix(eps)`: first `t` with `max_x ||p_t(x,.) - pi||_TV <= eps`.
///
/// The worst-case distance is nonincreasing in `t`, so general chains are
/// bracketed with dense powers; transitive-flagged chains scan one row.
pub fn tv_mixing_time(p: &ChainMatrix, eps: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Validation(format!(
            "eps must be in [0, 1), got {eps}"
        )));
    }
    if !p.is_irreducible() {
        return Err(Error::Structural("chain is reducible".into()));
    }
    let eps = eps + Tolerances::default().mixing_slack;
    let pi = p.pi().to_vec();
    let cap = mixing_cap(p.n());
    if p.n() == 1 {
        return Ok(0);
    }
    if p.flags().transitive {
        return first_time_row_scan(p, 0, eps, cap, "total variation mixing time", |row| {
            tv_row(row, &pi)
        });
    }
    if p.n() <= DENSE_POWER_MAX_N {
        return first_time_below_monotone(p, eps, cap, "total variation mixing time", |m| {
            max_over_rows(m, &pi, tv_row)
        });
    }
    all_rows_scan(p, cap, |rows, _| {
        rows.iter().map(|r| tv_row(r, &pi)).fold(0.0, f64::max) <= eps
    })
}

/// Cesàro mixing time: first `t >= 1` with
/// `max_x ||(1/t) sum_{s<t} p_s(x,.) - pi||_TV <= 1/4`.
pub fn cesaro_mixing_time(p: &ChainMatrix) -> Result<u64> {
    if !p.is_irreducible() {
        return Err(Error::Structural("chain is reducible".into()));
    }
    let n = p.n();
    let eps = MIXING_EPS + Tolerances::default().mixing_slack;
    let pi = p.pi().to_vec();
    let cap = mixing_cap(n);
    let starts: Vec<usize> = if p.flags().transitive {
        vec![0]
    } else {
        (0..n).collect()
    };
    let per_step = (starts.len() * p.nnz()) as u64;

    let mut cur: Vec<Vec<f64>> = starts
        .iter()
        .map(|&x| {
            let mut v = vec![0.0; n];
            v[x] = 1.0;
            v
        })
        .collect();
    let mut sums = vec![vec![0.0; n]; starts.len()];
    let mut next = vec![0.0; n];
    let mut avg = vec![0.0; n];
    for t in 1..=cap {
        if per_step.saturating_mul(t) > CESARO_WORK_BUDGET {
            return Err(Error::Budget(format!(
                "Cesàro scan exceeded {CESARO_WORK_BUDGET} operations at t = {t}"
            )));
        }
        let mut worst: f64 = 0.0;
        for (row, sum) in cur.iter_mut().zip(sums.iter_mut()) {
            for (s, r) in sum.iter_mut().zip(row.iter()) {
                *s += r;
            }
            for (a, s) in avg.iter_mut().zip(sum.iter()) {
                *a = s / t as f64;
            }
            worst = worst.max(tv_row(&avg, &pi));
            p.apply_left(row, &mut next);
            std::mem::swap(row, &mut next);
        }
        if worst <= eps {
            return Ok(t);
        }
    }
    Err(Error::Divergence {
        what: "Cesàro mixing time".into(),
        cap,
    })
}

fn all_rows_scan(
    p: &ChainMatrix,
    cap: u64,
    done: impl Fn(&[Vec<f64>], u64) -> bool,
) -> Result<u64> {
    let n = p.n();
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let mut v = vec![0.0; n];
            v[x] = 1.0;
            v
        })
        .collect();
    let mut next = vec![0.0; n];
    for t in 0..=cap {
        if done(&rows, t) {
            return Ok(t);
        }
        for row in rows.iter_mut() {
            p.apply_left(row, &mut next);
            std::mem::swap(row, &mut next);
        }
    }
    Err(Error::Divergence {
        what: "total variation mixing time".into(),
        cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{generate, Family, FamilySpec};

    fn fam(f: Family) -> ChainMatrix {
        generate(&FamilySpec::new(f)).unwrap()
    }

    #[test]
    fn tv_small_cases() {
        assert_eq!(
            tv_mixing_time(&fam(Family::Complete { n: 2 }), 0.25).unwrap(),
            1
        );
        assert_eq!(
            tv_mixing_time(&fam(Family::Complete { n: 1 }), 0.25).unwrap(),
            0
        );
    }

    #[test]
    fn cesaro_small_cases() {
        assert_eq!(
            cesaro_mixing_time(&fam(Family::Complete { n: 1 })).unwrap(),
            1
        );
        assert_eq!(
            cesaro_mixing_time(&fam(Family::Complete { n: 2 })).unwrap(),
            2
        );
    }

    #[test]
    fn transitive_shortcut_matches_dense_route() {
        for f in [
            Family::Cycle { n: 9 },
            Family::Torus { d: 2, l: 4 },
            Family::Hypercube { d: 4 },
        ] {
            let c = fam(f);
            let all = c.clone().with_transitive_claim(false);
            assert_eq!(
                tv_mixing_time(&c, 0.25).unwrap(),
                tv_mixing_time(&all, 0.25).unwrap(),
                "{f:?}"
            );
            assert_eq!(
                cesaro_mixing_time(&c).unwrap(),
                cesaro_mixing_time(&all).unwrap(),
                "{f:?}"
            );
        }
    }

    #[test]
    fn dense_bracketing_matches_linear_scan() {
        let spec = FamilySpec::seeded(Family::WeightedTree { n: 15 }, 3);
        let c = generate(&spec).unwrap();
        let pi = c.pi().to_vec();
        let eps = 0.25 + 1e-12;
        let scanned = all_rows_scan(&c, 1_000_000, |rows, _| {
            rows.iter().map(|r| tv_row(r, &pi)).fold(0.0, f64::max) <= eps
        })
        .unwrap();
        assert_eq!(tv_mixing_time(&c, 0.25).unwrap(), scanned);
    }

    #[test]
    fn bad_eps_rejected() {
        assert!(tv_mixing_time(&fam(Family::Complete { n: 3 }), 1.5).is_err());
    }
}
