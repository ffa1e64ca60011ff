//! Exact law of the intersection time on tiny chains.
//!
//! The pair of walks together with their visited ranges is itself a Markov
//! chain on [`ProductRangeState`]s, absorbed once the ranges meet. Ranges
//! only grow, so states group into classes `(R_X, R_Y)` that are visited in
//! increasing order; within a class only the positions move. The expected
//! absorption time is therefore solved class by class with small dense
//! systems, each class depending only on strictly larger ones.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainMatrix, DistVector};
use crate::error::{Error, Result};

/// Limits for the product-range exploration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactBudget {
    pub max_n: usize,
    pub max_states: usize,
    pub max_horizon: u64,
}

impl Default for ExactBudget {
    fn default() -> Self {
        Self {
            max_n: 5,
            max_states: 5_000_000,
            max_horizon: 64,
        }
    }
}

impl ExactBudget {
    fn check_n(&self, n: usize) -> Result<()> {
        if n > self.max_n || n > 63 {
            return Err(Error::Budget(format!(
                "exact intersection needs n <= {}, got {n}",
                self.max_n.min(63)
            )));
        }
        Ok(())
    }
}

/// Positions of both walks and the sets of states each has visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProductRangeState {
    pub x: u8,
    pub y: u8,
    pub range_x: u64,
    pub range_y: u64,
}

impl ProductRangeState {
    pub fn start(x: usize, y: usize) -> Self {
        Self {
            x: x as u8,
            y: y as u8,
            range_x: 1 << x,
            range_y: 1 << y,
        }
    }

    pub fn absorbed(&self) -> bool {
        self.range_x & self.range_y != 0
    }

    pub fn step(&self, x: usize, y: usize) -> Self {
        Self {
            x: x as u8,
            y: y as u8,
            range_x: self.range_x | 1 << x,
            range_y: self.range_y | 1 << y,
        }
    }
}

fn members(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

struct ClassSolver<'a> {
    p: &'a ChainMatrix,
    memo: HashMap<(u64, u64), Vec<f64>>,
    states: usize,
    budget: ExactBudget,
}

impl ClassSolver<'_> {
    /// Expected remaining time for every position pair of class `(rx, ry)`,
    /// indexed `i * |ry| + j` over the sorted members.
    fn solve(&mut self, rx: u64, ry: u64) -> Result<()> {
        if self.memo.contains_key(&(rx, ry)) {
            return Ok(());
        }
        let xs = members(rx);
        let ys = members(ry);
        let m = xs.len() * ys.len();
        self.states += m;
        if self.states > self.budget.max_states {
            return Err(Error::Budget(format!(
                "more than {} product-range states",
                self.budget.max_states
            )));
        }
        let pos_x = |s: usize| xs.binary_search(&s).ok();
        let pos_y = |s: usize| ys.binary_search(&s).ok();
        let mut a = DMatrix::<f64>::identity(m, m);
        let mut b = DVector::<f64>::from_element(m, 1.0);
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                let k = i * ys.len() + j;
                for (nx, px) in self.p.row(x) {
                    for (ny, py) in self.p.row(y) {
                        let nrx = rx | 1 << nx;
                        let nry = ry | 1 << ny;
                        if nrx & nry != 0 {
                            continue;
                        }
                        let w = px * py;
                        if nrx == rx && nry == ry {
                            let kk = pos_x(nx).unwrap() * ys.len() + pos_y(ny).unwrap();
                            a[(k, kk)] -= w;
                        } else {
                            self.solve(nrx, nry)?;
                            let child = &self.memo[&(nrx, nry)];
                            let cy = members(nry);
                            let ci = members(nrx).binary_search(&nx).unwrap();
                            let cj = cy.binary_search(&ny).unwrap();
                            b[k] += w * child[ci * cy.len() + cj];
                        }
                    }
                }
            }
        }
        let sol = a.lu().solve(&b).ok_or_else(|| {
            Error::Structural("intersection system is singular (chain reducible?)".into())
        })?;
        self.memo.insert((rx, ry), sol.iter().copied().collect());
        Ok(())
    }
}

/// `E_{x0,y0}[tau_I]`, exactly, for chains within `budget`.
pub fn exact_intersection_expectation(
    p: &ChainMatrix,
    x0: usize,
    y0: usize,
    budget: ExactBudget,
) -> Result<f64> {
    budget.check_n(p.n())?;
    if x0 >= p.n() || y0 >= p.n() {
        return Err(Error::Validation("start state out of range".into()));
    }
    if x0 == y0 {
        return Ok(0.0);
    }
    let mut solver = ClassSolver {
        p,
        memo: HashMap::new(),
        states: 0,
        budget,
    };
    let (rx, ry) = (1u64 << x0, 1u64 << y0);
    solver.solve(rx, ry)?;
    Ok(solver.memo[&(rx, ry)][0])
}

/// `P(tau_I <= s)` for `s = 0..=t` with independent starts `X_0 ~ mu`,
/// `Y_0 ~ nu`, by forward propagation of product-range mass.
pub fn intersection_cdf(
    p: &ChainMatrix,
    mu: &DistVector,
    nu: &DistVector,
    t: u64,
    budget: ExactBudget,
) -> Result<Vec<f64>> {
    let n = p.n();
    budget.check_n(n)?;
    if t > budget.max_horizon {
        return Err(Error::Budget(format!(
            "horizon {t} exceeds {}",
            budget.max_horizon
        )));
    }
    if mu.len() != n || nu.len() != n {
        return Err(Error::Validation(
            "initial laws must have one entry per state".into(),
        ));
    }
    let mut absorbed = 0.0;
    let mut live: HashMap<ProductRangeState, f64> = HashMap::new();
    for x in 0..n {
        for y in 0..n {
            let w = mu[x] * nu[y];
            if w == 0.0 {
                continue;
            }
            let s = ProductRangeState::start(x, y);
            if s.absorbed() {
                absorbed += w;
            } else {
                *live.entry(s).or_default() += w;
            }
        }
    }
    let mut cdf = Vec::with_capacity(t as usize + 1);
    cdf.push(absorbed.min(1.0));
    for _ in 0..t {
        let mut next: HashMap<ProductRangeState, f64> = HashMap::with_capacity(live.len() * 2);
        for (s, w) in &live {
            for (nx, px) in p.row(s.x as usize) {
                for (ny, py) in p.row(s.y as usize) {
                    let ns = s.step(nx, ny);
                    let mass = w * px * py;
                    if ns.absorbed() {
                        absorbed += mass;
                    } else {
                        *next.entry(ns).or_default() += mass;
                    }
                }
            }
        }
        if next.len() > budget.max_states {
            return Err(Error::Budget(format!(
                "more than {} live product-range states",
                budget.max_states
            )));
        }
        live = next;
        cdf.push(absorbed.min(1.0));
    }
    Ok(cdf)
}

/// `P(I_t > 0) = P(tau_I <= t)`.
pub fn exact_intersection_probability(
    p: &ChainMatrix,
    mu: &DistVector,
    nu: &DistVector,
    t: u64,
    budget: ExactBudget,
) -> Result<f64> {
    Ok(*intersection_cdf(p, mu, nu, t, budget)?.last().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{generate, Family, FamilySpec};

    fn fam(f: Family) -> ChainMatrix {
        generate(&FamilySpec::new(f)).unwrap()
    }

    #[test]
    fn same_start_is_zero() {
        let c = fam(Family::Cycle { n: 5 });
        assert_eq!(
            exact_intersection_expectation(&c, 2, 2, ExactBudget::default()).unwrap(),
            0.0
        );
        let d = DistVector::point_mass(5, 2);
        assert_eq!(
            exact_intersection_probability(&c, &d, &d, 0, ExactBudget::default()).unwrap(),
            1.0
        );
    }

    #[test]
    fn lazy_flip_values() {
        let c = fam(Family::Complete { n: 2 });
        let e = exact_intersection_expectation(&c, 0, 1, ExactBudget::default()).unwrap();
        assert!((e - 4.0 / 3.0).abs() < 1e-14);
        let p = exact_intersection_probability(
            &c,
            &DistVector::point_mass(2, 0),
            &DistVector::point_mass(2, 1),
            1,
            ExactBudget::default(),
        )
        .unwrap();
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn expectation_matches_tail_sum_of_cdf() {
        // E[tau] = sum_{s>=0} P(tau > s), truncated once the tail is negligible.
        let c = fam(Family::Cycle { n: 4 });
        let e = exact_intersection_expectation(&c, 0, 2, ExactBudget::default()).unwrap();
        let budget = ExactBudget {
            max_horizon: 400,
            ..Default::default()
        };
        let cdf = intersection_cdf(
            &c,
            &DistVector::point_mass(4, 0),
            &DistVector::point_mass(4, 2),
            400,
            budget,
        )
        .unwrap();
        let tail: f64 = cdf.iter().map(|f| 1.0 - f).sum();
        assert!((e - tail).abs() < 1e-9, "{e} vs {tail}");
    }

    #[test]
    fn budget_is_enforced() {
        let c = fam(Family::Cycle { n: 6 });
        assert!(matches!(
            exact_intersection_expectation(&c, 0, 3, ExactBudget::default()),
            Err(Error::Budget(_))
        ));
        let c4 = fam(Family::Cycle { n: 4 });
        let d = DistVector::uniform(4);
        assert!(matches!(
            intersection_cdf(&c4, &d, &d, 65, ExactBudget::default()),
            Err(Error::Budget(_))
        ));
    }
}
