//! Dense-matrix helpers shared by the mixing-time scans.

use nalgebra::DMatrix;

use crate::chain::ChainMatrix;
use crate::error::{Error, Result};

/// Largest chain for which dense `n x n` powers are formed.
pub const DENSE_POWER_MAX_N: usize = 2048;

/// First `t` with `distance(P^t) <= eps`, for a distance that is
/// nonincreasing in `t`. Uses repeated squaring to bracket the answer and
/// then bisects with products of the stored powers, so only
/// `O(log t)` dense products are formed.
pub(crate) fn first_time_below_monotone(
    p: &ChainMatrix,
    eps: f64,
    cap: u64,
    what: &str,
    distance: impl Fn(&DMatrix<f64>) -> f64,
) -> Result<u64> {
    let n = p.n();
    if n > DENSE_POWER_MAX_N {
        return Err(Error::Budget(format!(
            "{what}: dense powers need n <= {DENSE_POWER_MAX_N}, got {n}"
        )));
    }
    if distance(&DMatrix::identity(n, n)) <= eps {
        return Ok(0);
    }
    let mut powers = vec![p.to_dense()];
    while distance(powers.last().unwrap()) > eps {
        let k = powers.len();
        if 1u64 << k > cap {
            return Err(Error::Divergence {
                what: what.into(),
                cap,
            });
        }
        let last = powers.last().unwrap();
        powers.push(last * last);
    }
    let k = powers.len() - 1;
    if k == 0 {
        return Ok(1);
    }
    // distance(P^lo) > eps and distance(P^(2 lo)) <= eps.
    let mut lo = 1u64 << (k - 1);
    let mut current = powers[k - 1].clone();
    for j in (0..k - 1).rev() {
        let candidate = &current * &powers[j];
        if distance(&candidate) > eps {
            current = candidate;
            lo += 1 << j;
        }
    }
    Ok(lo + 1)
}

/// First `t` with `distance(p_t(x, .)) <= eps` scanning one row forward.
pub(crate) fn first_time_row_scan(
    p: &ChainMatrix,
    x: usize,
    eps: f64,
    cap: u64,
    what: &str,
    distance: impl Fn(&[f64]) -> f64,
) -> Result<u64> {
    let n = p.n();
    let mut cur = vec![0.0; n];
    cur[x] = 1.0;
    let mut next = vec![0.0; n];
    let mut t = 0;
    loop {
        if distance(&cur) <= eps {
            return Ok(t);
        }
        if t >= cap {
            return Err(Error::Divergence {
                what: what.into(),
                cap,
            });
        }
        p.apply_left(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        t += 1;
    }
}

/// Step cap shared by every mixing scan.
pub(crate) fn mixing_cap(n: usize) -> u64 {
    let n = n as u64;
    (10 * n * n * n).max(16)
}

pub(crate) fn tv_row(row: &[f64], pi: &[f64]) -> f64 {
    0.5 * row.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub(crate) fn uniform_row(row: &[f64], pi: &[f64]) -> f64 {
    row.iter()
        .zip(pi)
        .map(|(a, b)| (a / b - 1.0).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn max_over_rows(m: &DMatrix<f64>, pi: &[f64], f: fn(&[f64], &[f64]) -> f64) -> f64 {
    let n = m.nrows();
    let mut row = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for (y, r) in row.iter_mut().enumerate() {
            *r = m[(x, y)];
        }
        worst = worst.max(f(&row, pi));
    }
    worst
}
