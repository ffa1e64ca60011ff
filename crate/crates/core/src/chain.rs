//! Finite Markov chains stored as sparse row-stochastic operators.
//!
//! A [`ChainMatrix`] is immutable once built. Rows are kept in canonical
//! form (sorted by target, duplicates merged, exact zeros dropped) so two
//! chains with the same transition probabilities compare equal entry by
//! entry. Every constructor validates the row sums and the stationary
//! distribution before handing the chain out.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Structural flags carried alongside the transition probabilities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub lazy: bool,
    pub reversible: bool,
    /// Asserted by the caller (or a generator); only ever validated by
    /// [`check_transitive_heuristic`].
    pub transitive: bool,
    pub regular: bool,
}

/// A probability vector over the states of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DistVector {
    probs: Vec<f64>,
}

impl DistVector {
    /// Validates that `probs` sums to one within 1e-10. Entries down to
    /// -1e-15 are treated as rounding noise and clamped to zero.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Validation("distribution over zero states".into()));
        }
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -1e-15 {
                return Err(Error::Validation(format!("entry {i} is {p}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!("distribution sums to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn point_mass(n: usize, x: usize) -> Self {
        assert!(x < n, "state {x} out of range for {n} states");
        let mut probs = vec![0.0; n];
        probs[x] = 1.0;
        Self { probs }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Total variation distance, i.e. half the l1 distance.
    pub fn tv_distance(&self, other: &[f64]) -> f64 {
        0.5 * l1_distance(&self.probs, other)
    }
}

impl std::ops::Index<usize> for DistVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

pub(crate) fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Row-stochastic transition operator in compressed sparse row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMatrix {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
    pi: Vec<f64>,
    flags: Flags,
}

impl ChainMatrix {
    /// Builds a chain from per-state `(target, probability)` lists and
    /// computes its stationary distribution. Laziness and reversibility
    /// are detected; `regular` is set when `P` is symmetric.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let tol = Tolerances::default();
        let mut chain = Self::canonical(rows, &tol)?;
        let pi = compute_stationary(&chain, &tol)?;
        chain.pi = pi.into_vec();
        chain.flags.lazy = chain.detect_lazy(&tol);
        chain.flags.reversible = check_reversible(&chain).0;
        chain.flags.regular = chain.flags.reversible && chain.is_symmetric(&tol);
        Ok(chain)
    }

    /// Builds a chain whose stationary distribution is already known (for
    /// example from edge weights). `pi` is validated against the residual
    /// bound, and the reversible flag against detailed balance.
    pub fn with_stationary(
        rows: Vec<Vec<(usize, f64)>>,
        pi: Vec<f64>,
        flags: Flags,
    ) -> Result<Self> {
        let tol = Tolerances::default();
        let mut chain = Self::canonical(rows, &tol)?;
        if pi.len() != chain.n {
            return Err(Error::Validation(format!(
                "stationary vector has {} entries for {} states",
                pi.len(),
                chain.n
            )));
        }
        chain.pi = DistVector::new(pi)?.into_vec();
        let residual = chain.stationary_residual(&chain.pi);
        if residual > tol.stationary_residual {
            return Err(Error::Validation(format!(
                "supplied stationary distribution has residual {residual:.3e}"
            )));
        }
        if flags.lazy && !chain.detect_lazy(&tol) {
            return Err(Error::Validation(
                "lazy flag set but a diagonal entry is below 1/2".into(),
            ));
        }
        chain.flags = flags;
        if flags.reversible {
            let (ok, violation) = check_reversible(&chain);
            if !ok {
                return Err(Error::Validation(format!(
                    "reversible flag set but detailed balance is violated by {violation:.3e}"
                )));
            }
        }
        Ok(chain)
    }

    fn canonical(rows: Vec<Vec<(usize, f64)>>, tol: &Tolerances) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Validation(
                "chain must have at least one state".into(),
            ));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        offsets.push(0);
        for (x, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(y, _)| y);
            let start = targets.len();
            for (y, p) in row {
                if y >= n {
                    return Err(Error::Validation(format!(
                        "row {x} targets state {y} >= n = {n}"
                    )));
                }
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(Error::Validation(format!(
                        "p({x},{y}) = {p} is not a probability"
                    )));
                }
                if p == 0.0 {
                    continue;
                }
                if targets.len() > start && targets[targets.len() - 1] == y {
                    *probs.last_mut().unwrap() += p;
                } else {
                    targets.push(y);
                    probs.push(p);
                }
            }
            let sum: f64 = probs[start..].iter().sum();
            if (sum - 1.0).abs() > tol.row_sum {
                return Err(Error::NonStochasticRow { row: x, sum });
            }
            if probs[start..].iter().any(|&p| p > 1.0 + tol.row_sum) {
                return Err(Error::Validation(format!(
                    "row {x} has a merged entry above 1"
                )));
            }
            offsets.push(targets.len());
        }
        Ok(Self {
            n,
            offsets,
            targets,
            probs,
            pi: Vec::new(),
            flags: Flags::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Number of stored nonzero transitions.
    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    pub fn row(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[x]..self.offsets[x + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.probs[range].iter().copied())
    }

    pub fn row_targets(&self, x: usize) -> &[usize] {
        &self.targets[self.offsets[x]..self.offsets[x + 1]]
    }

    pub fn row_probs(&self, x: usize) -> &[f64] {
        &self.probs[self.offsets[x]..self.offsets[x + 1]]
    }

    /// `p(x, y)`, zero when the entry is not stored.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        let targets = self.row_targets(x);
        match targets.binary_search(&y) {
            Ok(i) => self.row_probs(x)[i],
            Err(_) => 0.0,
        }
    }

    /// Replaces the user-assertable transitivity flag.
    pub fn with_transitive_claim(mut self, transitive: bool) -> Self {
        self.flags.transitive = transitive;
        self
    }

    pub fn with_regular_claim(mut self, regular: bool) -> Self {
        self.flags.regular = regular;
        self
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for x in 0..self.n {
            for (y, p) in self.row(x) {
                m[(x, y)] = p;
            }
        }
        m
    }

    /// `mu P` for a row vector `mu`.
    pub fn apply_left(&self, mu: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..self.n {
            let m = mu[x];
            if m == 0.0 {
                continue;
            }
            for (y, p) in self.row(x) {
                out[y] += m * p;
            }
        }
    }

    /// `P f` for a column vector `f`.
    pub fn apply_right(&self, f: &[f64], out: &mut [f64]) {
        for (x, o) in out.iter_mut().enumerate() {
            *o = self.row(x).map(|(y, p)| p * f[y]).sum();
        }
    }

    pub(crate) fn stationary_residual(&self, pi: &[f64]) -> f64 {
        let mut next = vec![0.0; self.n];
        self.apply_left(pi, &mut next);
        l1_distance(&next, pi)
    }

    fn detect_lazy(&self, tol: &Tolerances) -> bool {
        (0..self.n).all(|x| self.prob(x, x) >= 0.5 - tol.lazy_diag)
    }

    fn is_symmetric(&self, tol: &Tolerances) -> bool {
        (0..self.n).all(|x| {
            self.row(x)
                .all(|(y, p)| (p - self.prob(y, x)).abs() <= tol.detailed_balance)
        })
    }

    /// True when every state reaches every other through entries above the
    /// structural-zero threshold.
    pub fn is_irreducible(&self) -> bool {
        let zero = Tolerances::default().structural_zero;
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for x in 0..self.n {
            for (y, p) in self.row(x) {
                if p > zero {
                    reverse[y].push(x);
                }
            }
        }
        let forward = reachable(self.n, |x, push| {
            for (y, p) in self.row(x) {
                if p > zero {
                    push(y);
                }
            }
        });
        let backward = reachable(self.n, |x, push| reverse[x].iter().for_each(|&y| push(y)));
        forward == self.n && backward == self.n
    }
}

fn reachable(n: usize, mut neighbors: impl FnMut(usize, &mut dyn FnMut(usize))) -> usize {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(x) = queue.pop_front() {
        neighbors(x, &mut |y| {
            if !seen[y] {
                seen[y] = true;
                count += 1;
                queue.push_back(y);
            }
        });
    }
    count
}

/// `(P + I) / 2`. The stationary distribution and structural flags carry
/// over; the lazy flag is set.
pub fn make_lazy(p: &ChainMatrix) -> Result<ChainMatrix> {
    let rows = (0..p.n)
        .map(|x| {
            let mut row: Vec<(usize, f64)> = p.row(x).map(|(y, q)| (y, 0.5 * q)).collect();
            row.push((x, 0.5));
            row
        })
        .collect();
    let mut lazy = ChainMatrix::canonical(rows, &Tolerances::default())?;
    lazy.pi = p.pi.clone();
    lazy.flags = Flags {
        lazy: true,
        ..p.flags
    };
    Ok(lazy)
}

/// Recomputes the stationary distribution of `p` from its rows.
pub fn stationary(p: &ChainMatrix) -> Result<DistVector> {
    compute_stationary(p, &Tolerances::default())
}

fn compute_stationary(p: &ChainMatrix, tol: &Tolerances) -> Result<DistVector> {
    if !p.is_irreducible() {
        return Err(Error::Structural("chain is reducible".into()));
    }
    let n = p.n;
    if is_doubly_stochastic(p, tol) {
        return Ok(DistVector::uniform(n));
    }
    // Power iteration on the lazy version, which shares pi and is aperiodic.
    // The work cap keeps slow, dense chains from spinning; they go straight
    // to the dense solve.
    let work_cap = (2_000_000_000 / p.nnz().max(1)) as u64;
    let iters = tol.power_iteration_max_iters.min(work_cap.max(1000));
    let mut mu = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..iters {
        p.apply_left(&mu, &mut next);
        for (nx, m) in next.iter_mut().zip(&mu) {
            *nx = 0.5 * (*nx + m);
        }
        let delta = l1_distance(&next, &mu);
        std::mem::swap(&mut mu, &mut next);
        if delta <= tol.power_iteration_l1 {
            let s: f64 = mu.iter().sum();
            mu.iter_mut().for_each(|v| *v /= s);
            if p.stationary_residual(&mu) <= tol.stationary_residual {
                return DistVector::new(mu);
            }
            break;
        }
    }
    dense_stationary(p, tol)
}

fn is_doubly_stochastic(p: &ChainMatrix, tol: &Tolerances) -> bool {
    let mut col = vec![0.0; p.n];
    for x in 0..p.n {
        for (y, q) in p.row(x) {
            col[y] += q;
        }
    }
    col.iter()
        .all(|c| (c - 1.0).abs() <= tol.row_sum * p.n as f64)
}

fn dense_stationary(p: &ChainMatrix, tol: &Tolerances) -> Result<DistVector> {
    let n = p.n;
    if n > 4096 {
        return Err(Error::Budget(format!(
            "dense stationary solve needs n <= 4096, got {n}"
        )));
    }
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = p.to_dense().transpose();
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Structural("singular stationary system".into()))?;
    let mut pi: Vec<f64> = sol.iter().map(|&v| v.max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    let residual = p.stationary_residual(&pi);
    if residual > tol.stationary_residual {
        return Err(Error::Structural(format!(
            "stationary residual {residual:.3e} after dense solve"
        )));
    }
    DistVector::new(pi)
}

/// `mu P^t` by repeated sparse vector-operator products.
pub fn evolve(p: &ChainMatrix, mu: &DistVector, t: u64) -> DistVector {
    let mut cur = mu.probs.clone();
    let mut next = vec![0.0; p.n];
    for _ in 0..t {
        p.apply_left(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    for v in &mut cur {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    DistVector { probs: cur }
}

/// Returns whether detailed balance holds within 1e-10 and the largest
/// violation `|pi(x)p(x,y) - pi(y)p(y,x)|` over stored entries.
pub fn check_reversible(p: &ChainMatrix) -> (bool, f64) {
    let mut worst: f64 = 0.0;
    for x in 0..p.n {
        for (y, q) in p.row(x) {
            let v = (p.pi[x] * q - p.pi[y] * p.prob(y, x)).abs();
            worst = worst.max(v);
        }
    }
    (worst <= Tolerances::default().detailed_balance, worst)
}

/// Necessary condition for vertex transitivity: every state has the same
/// sorted multiset of row entries and the same return probabilities
/// `p_t(x,x)` for `t <= 20`. Passing is not a certificate.
pub fn check_transitive_heuristic(p: &ChainMatrix) -> bool {
    let tol = Tolerances::default();
    let sorted_row = |x: usize| {
        let mut r = p.row_probs(x).to_vec();
        r.sort_by(f64::total_cmp);
        r
    };
    let reference = sorted_row(0);
    for x in 1..p.n {
        let r = sorted_row(x);
        if r.len() != reference.len()
            || r.iter()
                .zip(&reference)
                .any(|(a, b)| (a - b).abs() > tol.transitive_match)
        {
            return false;
        }
    }
    let returns = |x: usize| {
        let mut cur = DistVector::point_mass(p.n, x).probs;
        let mut next = vec![0.0; p.n];
        let mut seq = Vec::with_capacity(tol.transitive_horizon);
        for _ in 0..tol.transitive_horizon {
            p.apply_left(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            seq.push(cur[x]);
        }
        seq
    };
    let reference = returns(0);
    (1..p.n).all(|x| {
        returns(x)
            .iter()
            .zip(&reference)
            .all(|(a, b)| (a - b).abs() <= tol.transitive_match)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flip() -> ChainMatrix {
        ChainMatrix::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)]]).unwrap()
    }

    fn cycle(n: usize) -> ChainMatrix {
        let rows = (0..n)
            .map(|x| vec![((x + 1) % n, 0.5), ((x + n - 1) % n, 0.5)])
            .collect();
        ChainMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn lazify_identity_chain() {
        let id = ChainMatrix::from_rows(vec![vec![(0, 1.0)]]).unwrap();
        let lazy = make_lazy(&id).unwrap();
        assert_eq!(lazy.prob(0, 0), 1.0);
        assert!(lazy.flags().lazy);
    }

    #[test]
    fn lazify_flip_chain() {
        let lazy = make_lazy(&flip()).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(lazy.prob(x, y), 0.5);
            }
        }
        assert_eq!(lazy.pi(), flip().pi());
    }

    #[test]
    fn lazify_cycle4() {
        let lazy = make_lazy(&cycle(4)).unwrap();
        for x in 0..4 {
            assert_eq!(lazy.prob(x, x), 0.5);
            assert_eq!(lazy.prob(x, (x + 1) % 4), 0.25);
            assert_eq!(lazy.prob(x, (x + 3) % 4), 0.25);
            assert_eq!(lazy.prob(x, (x + 2) % 4), 0.0);
        }
    }

    #[test]
    fn non_stochastic_row_is_named() {
        let err =
            ChainMatrix::from_rows(vec![vec![(0, 1.0)], vec![(0, 0.3), (1, 0.3)]]).unwrap_err();
        match err {
            Error::NonStochasticRow { row, .. } => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_targets_merge() {
        let c = ChainMatrix::from_rows(vec![
            vec![(1, 0.25), (0, 0.5), (1, 0.25)],
            vec![(0, 0.5), (1, 0.5)],
        ])
        .unwrap();
        assert_eq!(c.row_targets(0), &[0, 1]);
        assert_eq!(c.prob(0, 1), 0.5);
    }

    #[test]
    fn reducible_chain_rejected() {
        let err = ChainMatrix::from_rows(vec![vec![(0, 1.0)], vec![(1, 1.0)]]).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn stationary_of_cycle_is_uniform() {
        let c = make_lazy(&cycle(8)).unwrap();
        let pi = stationary(&c).unwrap();
        assert!(pi.as_slice().iter().all(|&v| v == 1.0 / 8.0));
    }

    #[test]
    fn stationary_of_nonuniform_chain() {
        // Birth-death chain: pi proportional to (1, 2, 4).
        let rows = vec![
            vec![(0, 0.5), (1, 0.5)],
            vec![(0, 0.25), (1, 0.25), (2, 0.5)],
            vec![(1, 0.25), (2, 0.75)],
        ];
        let c = ChainMatrix::from_rows(rows).unwrap();
        let pi = stationary(&c).unwrap();
        for (got, want) in pi.as_slice().iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
        assert!(c.flags().reversible);
        assert!(!c.flags().regular);
    }

    #[test]
    fn evolve_examples() {
        let c = make_lazy(&cycle(4)).unwrap();
        let d0 = DistVector::point_mass(4, 0);
        assert_eq!(evolve(&c, &d0, 0), d0);
        let two = evolve(&c, &d0, 2);
        assert_eq!(two.as_slice(), &[3.0 / 8.0, 0.25, 1.0 / 8.0, 0.25]);
        let f = make_lazy(&flip()).unwrap();
        assert_eq!(
            evolve(&f, &DistVector::point_mass(2, 0), 1).as_slice(),
            &[0.5, 0.5]
        );
    }

    #[test]
    fn rotation_chain_is_not_reversible() {
        let rot =
            ChainMatrix::from_rows(vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]]).unwrap();
        let lazy = make_lazy(&rot).unwrap();
        let (ok, violation) = check_reversible(&lazy);
        assert!(!ok);
        // pi(0) p(0,1) - pi(1) p(1,0) = 1/3 * 1/2 - 0
        assert_abs_diff_eq!(violation, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_chain_is_reversible() {
        let (ok, violation) = check_reversible(&make_lazy(&cycle(5)).unwrap());
        assert!(ok);
        assert_eq!(violation, 0.0);
    }

    #[test]
    fn transitive_heuristic_on_cycle_and_path() {
        assert!(check_transitive_heuristic(&make_lazy(&cycle(6)).unwrap()));
        let path = ChainMatrix::from_rows(vec![
            vec![(0, 0.5), (1, 0.5)],
            vec![(0, 0.25), (1, 0.5), (2, 0.25)],
            vec![(1, 0.5), (2, 0.5)],
        ])
        .unwrap();
        assert!(!check_transitive_heuristic(&path));
    }

    #[test]
    fn dist_vector_rejects_bad_mass() {
        assert!(DistVector::new(vec![0.5, 0.4]).is_err());
        assert!(DistVector::new(vec![1.0, -1e-3]).is_err());
        let d = DistVector::new(vec![1.0, -1e-16]).unwrap();
        assert_eq!(d[1], 0.0);
    }
}
