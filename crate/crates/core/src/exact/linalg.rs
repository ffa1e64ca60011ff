use nalgebra::{DMatrix, DVector};

use crate::chain::ChainMatrix;
use crate::error::{Error, Result};

/// Restricted systems up to this size use a dense LU factorisation.
pub(crate) const DENSE_SOLVE_MAX_N: usize = 1024;

/// Expected hitting times of the set marked in `target`: solves
/// `(I - P_SS) h = 1` on the complement `S` and returns `h` on every state
/// (zero on the target).
pub(crate) fn expected_hitting(p: &ChainMatrix, target: &[bool]) -> Result<Vec<f64>> {
    let n = p.n();
    let free: Vec<usize> = (0..n).filter(|&x| !target[x]).collect();
    let mut h = vec![0.0; n];
    if free.is_empty() {
        return Ok(h);
    }
    if free.len() == n {
        return Err(Error::Validation("target set is empty".into()));
    }
    let mut index = vec![usize::MAX; n];
    for (i, &x) in free.iter().enumerate() {
        index[x] = i;
    }
    let sol = if free.len() <= DENSE_SOLVE_MAX_N {
        dense_solve(p, &free, &index)?
    } else if p.flags().reversible {
        cg_solve(p, &free, &index)?
    } else {
        return Err(Error::Budget(format!(
            "non-reversible restricted system of size {} exceeds dense limit {DENSE_SOLVE_MAX_N}",
            free.len()
        )));
    };
    for (i, &x) in free.iter().enumerate() {
        h[x] = sol[i];
    }
    Ok(h)
}

fn dense_solve(p: &ChainMatrix, free: &[usize], index: &[usize]) -> Result<Vec<f64>> {
    let m = free.len();
    let mut a = DMatrix::identity(m, m);
    for (i, &x) in free.iter().enumerate() {
        for (y, q) in p.row(x) {
            if index[y] != usize::MAX {
                a[(i, index[y])] -= q;
            }
        }
    }
    let b = DVector::from_element(m, 1.0);
    let sol = a.lu().solve(&b).ok_or_else(|| {
        Error::Structural("restricted hitting system is singular (chain reducible?)".into())
    })?;
    if sol.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Structural(
            "restricted hitting system has no nonnegative solution".into(),
        ));
    }
    Ok(sol.iter().copied().collect())
}

/// Conjugate gradients on `D^{1/2} (I - P_SS) D^{-1/2}`, which is symmetric
/// positive definite for reversible chains.
fn cg_solve(p: &ChainMatrix, free: &[usize], index: &[usize]) -> Result<Vec<f64>> {
    let m = free.len();
    let pi = p.pi();
    let sq: Vec<f64> = free.iter().map(|&x| pi[x].sqrt()).collect();
    let apply = |v: &[f64], out: &mut [f64]| {
        for (i, &x) in free.iter().enumerate() {
            let mut acc = v[i];
            for (y, q) in p.row(x) {
                let j = index[y];
                if j != usize::MAX {
                    acc -= sq[i] * q / sq[j] * v[j];
                }
            }
            out[i] = acc;
        }
    };
    let b: Vec<f64> = sq.clone();
    let mut u = vec![0.0; m];
    let mut r = b.clone();
    let mut dir = r.clone();
    let mut ad = vec![0.0; m];
    let b_norm = dot(&b, &b).sqrt();
    let mut rr = dot(&r, &r);
    let max_iter = 20 * m + 1000;
    for _ in 0..max_iter {
        if rr.sqrt() <= 1e-14 * b_norm {
            break;
        }
        apply(&dir, &mut ad);
        let alpha = rr / dot(&dir, &ad);
        for i in 0..m {
            u[i] += alpha * dir[i];
            r[i] -= alpha * ad[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..m {
            dir[i] = r[i] + beta * dir[i];
        }
    }
    // Final residual on the original (unsymmetrised) system.
    let h: Vec<f64> = u.iter().zip(&sq).map(|(v, s)| v / s).collect();
    let mut worst: f64 = 0.0;
    let scale = h.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
    for (i, &x) in free.iter().enumerate() {
        let mut acc = h[i] - 1.0;
        for (y, q) in p.row(x) {
            if index[y] != usize::MAX {
                acc -= q * h[index[y]];
            }
        }
        worst = worst.max(acc.abs());
    }
    if worst > 1e-8 * scale {
        return Err(Error::Divergence {
            what: format!("conjugate gradients (residual {worst:.3e})"),
            cap: max_iter as u64,
        });
    }
    Ok(h)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
