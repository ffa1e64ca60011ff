use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alias::AliasTables;
use super::rng::replicate_rng;
use super::walk::{run_until_intersection, Tally, TauSample, TrajectoryPair};
use crate::chain::ChainMatrix;
use crate::error::{Error, Result};
use crate::spectral::green_table;

// Purpose keys; each estimator owns a disjoint family of streams.
const KEY_PAIR: u64 = 1;
const KEY_PILOT: u64 = 2;
const KEY_MOMENTS: u64 = 3;
const KEY_S_T: u64 = 4;
const KEY_CANDIDATES: u64 = 5;

fn stream_key(purpose: u64, x: u64, y: u64) -> u64 {
    (purpose << 56) ^ (x << 28) ^ y
}

/// Initial law of one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartLaw {
    State(usize),
    Stationary,
}

/// Coarse pass used to shortlist candidates before full-size runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pilot {
    pub samples: u64,
    pub finalists: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Per-replicate step cap; `None` selects [`default_cap`].
    pub cap: Option<u64>,
    /// Worker count; 0 uses the global rayon pool.
    pub threads: usize,
    /// Farthest-by-graph-distance candidates in lower-bound mode.
    pub top_k: usize,
    /// Uniformly random candidates in lower-bound mode.
    pub random_pairs: usize,
    /// Largest chain on which every start is a candidate.
    pub exhaustive_max_n: usize,
    /// Applied only when there are more candidates than finalists.
    pub pilot: Option<Pilot>,
    /// Relaxation time used by [`default_cap`], when known.
    pub t_rel_hint: Option<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: crate::config::DEFAULT_SEED,
            cap: None,
            threads: 0,
            top_k: 32,
            random_pairs: 32,
            exhaustive_max_n: 64,
            pilot: Some(Pilot {
                samples: 500,
                finalists: 8,
            }),
            t_rel_hint: None,
        }
    }
}

impl McConfig {
    pub fn with_samples(mut self, samples: u64) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 samples, got {}",
                self.samples
            )));
        }
        if self.cap == Some(0) {
            return Err(Error::Validation(
                "truncation cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `100 (n + t_rel)`; without a hint `t_rel` is bounded by `n^2`.
pub fn default_cap(n: usize, t_rel_hint: Option<f64>) -> u64 {
    let n = n as f64;
    let t_rel = t_rel_hint.unwrap_or(n * n);
    (100.0 * (n + t_rel)).ceil().max(1.0) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(samples)`.
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub truncation_cap: u64,
    pub truncated_fraction: f64,
    /// Set whenever some replicate hit the cap.
    pub lower_bound: bool,
}

impl EstimateWithCI {
    fn from_values(values: &[f64], truncated: usize, seed: u64, cap: u64) -> Self {
        let m = values.len();
        let mean = values.iter().sum::<f64>() / m as f64;
        let var = if m > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64
        } else {
            0.0
        };
        let truncated_fraction = truncated as f64 / m as f64;
        Self {
            mean,
            std_error: (var / m as f64).sqrt(),
            samples: m as u64,
            seed,
            truncation_cap: cap,
            truncated_fraction,
            lower_bound: truncated > 0,
        }
    }

    fn from_taus(taus: &[TauSample], seed: u64, cap: u64) -> Self {
        let values: Vec<f64> = taus.iter().map(|s| s.steps as f64).collect();
        Self::from_values(
            &values,
            taus.iter().filter(|s| s.truncated).count(),
            seed,
            cap,
        )
    }

    fn exact_zero(seed: u64, samples: u64) -> Self {
        Self {
            mean: 0.0,
            std_error: 0.0,
            samples,
            seed,
            truncation_cap: 0,
            truncated_fraction: 0.0,
            lower_bound: false,
        }
    }

    /// `mean + k SE`, the upper end of the `k`-SE interval.
    pub fn upper(&self, k: f64) -> f64 {
        self.mean + k * self.std_error
    }

    pub fn lower(&self, k: f64) -> f64 {
        self.mean - k * self.std_error
    }
}

/// How much of the start space an estimator covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMode {
    /// Every start (up to transitivity or exchangeability) was a candidate.
    Exhaustive,
    /// Only a heuristic candidate set was covered; the maximum is a lower bound.
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiEstimate {
    pub estimate: EstimateWithCI,
    pub argmax: (usize, usize),
    pub mode: CoverageMode,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarEstimate {
    pub estimate: EstimateWithCI,
    pub argmax: usize,
    pub mode: CoverageMode,
    pub candidates: usize,
}

/// Worker pool wrapper that maps replicate indices in order.
struct Workers(Option<rayon::ThreadPool>);

impl Workers {
    fn new(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Ok(Self(None));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map(|pool| Self(Some(pool)))
            .map_err(|e| Error::Validation(format!("cannot start {threads} workers: {e}")))
    }

    fn map<S, T>(
        &self,
        count: u64,
        init: impl Fn() -> S + Sync + Send,
        f: impl Fn(&mut S, u64) -> T + Sync + Send,
    ) -> Vec<T>
    where
        T: Send,
    {
        let run = || {
            (0..count)
                .into_par_iter()
                .map_init(&init, |s, i| f(s, i))
                .collect()
        };
        match &self.0 {
            Some(pool) if pool.current_num_threads() == 1 => {
                let mut state = init();
                (0..count).map(|i| f(&mut state, i)).collect()
            }
            Some(pool) => pool.install(run),
            None => run(),
        }
    }
}

/// Shared read-only simulation state for one chain.
struct Simulator<'a> {
    chain: &'a ChainMatrix,
    steps: AliasTables,
    pi: AliasTables,
}

impl<'a> Simulator<'a> {
    fn new(chain: &'a ChainMatrix) -> Self {
        Self {
            chain,
            steps: AliasTables::for_chain(chain),
            pi: AliasTables::for_distribution(chain.pi()),
        }
    }

    fn draw_start(&self, law: StartLaw, rng: &mut ChaCha8Rng) -> usize {
        match law {
            StartLaw::State(x) => x,
            StartLaw::Stationary => self.pi.sample(0, rng),
        }
    }

    fn taus(
        &self,
        workers: &Workers,
        x: StartLaw,
        y: StartLaw,
        samples: u64,
        cap: u64,
        seed: u64,
        key: u64,
    ) -> Vec<TauSample> {
        let n = self.chain.n();
        workers.map(
            samples,
            || TrajectoryPair::new(n),
            |pair, i| {
                let mut rng = replicate_rng(seed, key, i);
                let x0 = self.draw_start(x, &mut rng);
                let y0 = self.draw_start(y, &mut rng);
                run_until_intersection(pair, &self.steps, x0, y0, cap, &mut rng)
            },
        )
    }

    fn estimate(
        &self,
        workers: &Workers,
        x: StartLaw,
        y: StartLaw,
        samples: u64,
        cap: u64,
        seed: u64,
        key: u64,
    ) -> EstimateWithCI {
        EstimateWithCI::from_taus(
            &self.taus(workers, x, y, samples, cap, seed, key),
            seed,
            cap,
        )
    }
}

fn check_start(n: usize, law: StartLaw) -> Result<()> {
    match law {
        StartLaw::State(x) if x >= n => Err(Error::Validation(format!(
            "start state {x} out of range for n = {n}"
        ))),
        _ => Ok(()),
    }
}

fn law_code(law: StartLaw) -> u64 {
    match law {
        StartLaw::State(x) => x as u64,
        StartLaw::Stationary => (1 << 28) - 1,
    }
}

/// One draw of `tau_I` from the supplied stream.
pub fn sample_tau_i<R: Rng + ?Sized>(
    chain: &ChainMatrix,
    tables: &AliasTables,
    x0: usize,
    y0: usize,
    cap: u64,
    rng: &mut R,
) -> TauSample {
    let mut pair = TrajectoryPair::new(chain.n());
    run_until_intersection(&mut pair, tables, x0, y0, cap, rng)
}

/// Mean `tau_I` for the given pair of initial laws.
pub fn estimate_pair(
    p: &ChainMatrix,
    x: StartLaw,
    y: StartLaw,
    cfg: &McConfig,
) -> Result<EstimateWithCI> {
    cfg.validate()?;
    check_start(p.n(), x)?;
    check_start(p.n(), y)?;
    let cap = cfg
        .cap
        .unwrap_or_else(|| default_cap(p.n(), cfg.t_rel_hint));
    let workers = Workers::new(cfg.threads)?;
    let key = stream_key(KEY_PAIR, law_code(x), law_code(y));
    Ok(Simulator::new(p).estimate(&workers, x, y, cfg.samples, cap, cfg.seed, key))
}

/// Both chains started from `pi`.
pub fn estimate_pi_pi_expectation(p: &ChainMatrix, cfg: &McConfig) -> Result<EstimateWithCI> {
    if p.n() == 1 {
        return Ok(EstimateWithCI::exact_zero(cfg.seed, cfg.samples));
    }
    estimate_pair(p, StartLaw::Stationary, StartLaw::Stationary, cfg)
}

fn bfs_distances(p: &ChainMatrix, source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; p.n()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in p.row_targets(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// States sorted by decreasing BFS distance from `source`, ties by index.
fn farthest_from(p: &ChainMatrix, source: usize, k: usize) -> Vec<usize> {
    let dist = bfs_distances(p, source);
    let mut order: Vec<usize> = (0..p.n()).filter(|&v| v != source).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(dist[v]), v));
    order.truncate(k);
    order
}

/// A peripheral state: the farthest point from 0, then farthest from that.
fn peripheral(p: &ChainMatrix) -> usize {
    farthest_from(p, 0, 1).first().copied().unwrap_or(0)
}

/// Runs `score` on every candidate, optionally shortlisting with a pilot,
/// and returns the candidate with the largest full-size mean.
fn maximize<C: Copy + Ord>(
    candidates: &[C],
    cfg: &McConfig,
    mut score: impl FnMut(C, u64, u64) -> EstimateWithCI,
) -> (C, EstimateWithCI) {
    let finalists: Vec<C> = match cfg.pilot {
        Some(pilot) if candidates.len() > pilot.finalists.max(1) && pilot.samples < cfg.samples => {
            let mut scored: Vec<(f64, C)> = candidates
                .iter()
                .map(|&c| (score(c, pilot.samples.max(2), KEY_PILOT).mean, c))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            scored
                .into_iter()
                .take(pilot.finalists.max(1))
                .map(|(_, c)| c)
                .collect()
        }
        _ => candidates.to_vec(),
    };
    let mut best: Option<(C, EstimateWithCI)> = None;
    for c in finalists {
        let est = score(c, cfg.samples, KEY_PAIR);
        if best
            .as_ref()
            .is_none_or(|(bc, b)| est.mean > b.mean || (est.mean == b.mean && c < *bc))
        {
            best = Some((c, est));
        }
    }
    best.expect("candidate set is nonempty")
}

fn random_states(n: usize, count: usize, seed: u64, salt: u64) -> Vec<usize> {
    let mut rng = replicate_rng(seed, stream_key(KEY_CANDIDATES, salt, 0), 0);
    (0..count).map(|_| rng.random_range(0..n)).collect()
}

/// `t_I = max_{x,y} E_{x,y} tau_I`.
///
/// Candidates: on transitive chains `x = 0` and `y` ranges over all states
/// (up to `exhaustive_max_n`) or over the farthest and some random states;
/// otherwise all unordered pairs up to `exhaustive_max_n`, and beyond that
/// pairs anchored at a peripheral state plus random pairs.
pub fn estimate_ti(p: &ChainMatrix, cfg: &McConfig) -> Result<TiEstimate> {
    cfg.validate()?;
    let n = p.n();
    if n == 1 {
        return Ok(TiEstimate {
            estimate: EstimateWithCI::exact_zero(cfg.seed, cfg.samples),
            argmax: (0, 0),
            mode: CoverageMode::Exhaustive,
            candidates: 1,
        });
    }
    let exhaustive = n <= cfg.exhaustive_max_n;
    let mut pairs: Vec<(usize, usize)> = if p.flags().transitive {
        if exhaustive {
            (1..n).map(|y| (0, y)).collect()
        } else {
            let mut ys = farthest_from(p, 0, cfg.top_k);
            ys.extend(
                random_states(n, cfg.random_pairs, cfg.seed, 0)
                    .into_iter()
                    .filter(|&y| y != 0),
            );
            ys.into_iter().map(|y| (0, y)).collect()
        }
    } else if exhaustive {
        (0..n)
            .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
            .collect()
    } else {
        let a = peripheral(p);
        let mut pairs: Vec<(usize, usize)> = farthest_from(p, a, cfg.top_k)
            .into_iter()
            .map(|b| (a.min(b), a.max(b)))
            .collect();
        let xs = random_states(n, cfg.random_pairs, cfg.seed, 1);
        let ys = random_states(n, cfg.random_pairs, cfg.seed, 2);
        pairs.extend(
            xs.into_iter()
                .zip(ys)
                .filter(|(x, y)| x != y)
                .map(|(x, y)| (x.min(y), x.max(y))),
        );
        pairs
    };
    pairs.sort_unstable();
    pairs.dedup();
    let cap = cfg.cap.unwrap_or_else(|| default_cap(n, cfg.t_rel_hint));
    let workers = Workers::new(cfg.threads)?;
    let sim = Simulator::new(p);
    let (argmax, estimate) = maximize(&pairs, cfg, |(x, y), samples, purpose| {
        let key = stream_key(purpose, x as u64, y as u64);
        sim.estimate(
            &workers,
            StartLaw::State(x),
            StartLaw::State(y),
            samples,
            cap,
            cfg.seed,
            key,
        )
    });
    Ok(TiEstimate {
        estimate,
        argmax,
        mode: if exhaustive {
            CoverageMode::Exhaustive
        } else {
            CoverageMode::LowerBound
        },
        candidates: pairs.len(),
    })
}

/// `t_I* = max_x E_{x,pi} tau_I`; transitive chains use `x = 0` alone.
pub fn estimate_ti_star(p: &ChainMatrix, cfg: &McConfig) -> Result<StarEstimate> {
    cfg.validate()?;
    let n = p.n();
    if n == 1 {
        return Ok(StarEstimate {
            estimate: EstimateWithCI::exact_zero(cfg.seed, cfg.samples),
            argmax: 0,
            mode: CoverageMode::Exhaustive,
            candidates: 1,
        });
    }
    let exhaustive = p.flags().transitive || n <= cfg.exhaustive_max_n;
    let mut xs: Vec<usize> = if p.flags().transitive {
        vec![0]
    } else if exhaustive {
        (0..n).collect()
    } else {
        let a = peripheral(p);
        let mut xs = vec![a];
        xs.extend(farthest_from(p, a, cfg.top_k));
        xs.extend(random_states(n, cfg.random_pairs, cfg.seed, 3));
        xs
    };
    xs.sort_unstable();
    xs.dedup();
    let cap = cfg.cap.unwrap_or_else(|| default_cap(n, cfg.t_rel_hint));
    let workers = Workers::new(cfg.threads)?;
    let sim = Simulator::new(p);
    let (argmax, estimate) = maximize(&xs, cfg, |x, samples, purpose| {
        let key = stream_key(purpose, x as u64, law_code(StartLaw::Stationary));
        sim.estimate(
            &workers,
            StartLaw::State(x),
            StartLaw::Stationary,
            samples,
            cap,
            cfg.seed,
            key,
        )
    });
    Ok(StarEstimate {
        estimate,
        argmax,
        mode: if exhaustive {
            CoverageMode::Exhaustive
        } else {
            CoverageMode::LowerBound
        },
        candidates: xs.len(),
    })
}

/// `I_t = sum_{i,j<=t} 1(X_i = Y_j)` for one pair of simulated paths.
pub fn count_intersections<R: Rng + ?Sized>(
    p: &ChainMatrix,
    x0: usize,
    y0: usize,
    t: u64,
    rng: &mut R,
) -> u64 {
    let tables = AliasTables::for_chain(p);
    let mut tx = Tally::new(p.n());
    let mut ty = Tally::new(p.n());
    intersections_with(&tables, &mut tx, &mut ty, x0, y0, t, rng)
}

fn intersections_with<R: Rng + ?Sized>(
    tables: &AliasTables,
    tx: &mut Tally,
    ty: &mut Tally,
    x0: usize,
    y0: usize,
    t: u64,
    rng: &mut R,
) -> u64 {
    tx.clear();
    ty.clear();
    let (mut x, mut y) = (x0, y0);
    tx.add(x);
    ty.add(y);
    for _ in 0..t {
        x = tables.sample(x, rng);
        y = tables.sample(y, rng);
        tx.add(x);
        ty.add(y);
    }
    tx.dot(ty)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionMoments {
    pub t: u64,
    /// Estimate of `E I_t`.
    pub first: EstimateWithCI,
    /// Estimate of `E I_t^2`.
    pub second: EstimateWithCI,
}

pub fn intersection_moments(
    p: &ChainMatrix,
    x: StartLaw,
    y: StartLaw,
    t: u64,
    cfg: &McConfig,
) -> Result<IntersectionMoments> {
    cfg.validate()?;
    check_start(p.n(), x)?;
    check_start(p.n(), y)?;
    let workers = Workers::new(cfg.threads)?;
    let sim = Simulator::new(p);
    let n = p.n();
    let key = stream_key(KEY_MOMENTS, law_code(x), law_code(y)) ^ t.rotate_left(40);
    let counts: Vec<u64> = workers.map(
        cfg.samples,
        || (Tally::new(n), Tally::new(n)),
        |(tx, ty), i| {
            let mut rng = replicate_rng(cfg.seed, key, i);
            let x0 = sim.draw_start(x, &mut rng);
            let y0 = sim.draw_start(y, &mut rng);
            intersections_with(&sim.steps, tx, ty, x0, y0, t, &mut rng)
        },
    );
    let first: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let second: Vec<f64> = first.iter().map(|c| c * c).collect();
    Ok(IntersectionMoments {
        t,
        first: EstimateWithCI::from_values(&first, 0, cfg.seed, t),
        second: EstimateWithCI::from_values(&second, 0, cfg.seed, t),
    })
}

/// Empirical `P_x(S_t(x) >= Q_t / 2)` with `S_t(x) = sum_{j<=t} g_t(x, X_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SDiagnostic {
    pub x: usize,
    pub t: u64,
    pub qt: f64,
    pub frequency: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    /// `frequency >= 1/16 - 3 SE`.
    pub pass: bool,
}

pub fn s_t_diagnostic(p: &ChainMatrix, x: usize, t: u64, cfg: &McConfig) -> Result<SDiagnostic> {
    cfg.validate()?;
    check_start(p.n(), StartLaw::State(x))?;
    let g = green_table(p, x, t).g;
    let qt: f64 = g.iter().map(|v| v * v).sum();
    let workers = Workers::new(cfg.threads)?;
    let tables = AliasTables::for_chain(p);
    let key = stream_key(KEY_S_T, x as u64, t);
    let hits: Vec<f64> = workers.map(
        cfg.samples,
        || (),
        |_, i| {
            let mut rng = replicate_rng(cfg.seed, key, i);
            let mut z = x;
            let mut s = g[z];
            for _ in 0..t {
                z = tables.sample(z, &mut rng);
                s += g[z];
            }
            if s >= qt / 2.0 {
                1.0
            } else {
                0.0
            }
        },
    );
    let est = EstimateWithCI::from_values(&hits, 0, cfg.seed, t);
    Ok(SDiagnostic {
        x,
        t,
        qt,
        frequency: est.mean,
        std_error: est.std_error,
        samples: est.samples,
        seed: cfg.seed,
        pass: est.mean >= 1.0 / 16.0 - 3.0 * est.std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::make_lazy;
    use crate::exact::{exact_intersection_expectation, ExactBudget};
    use crate::families::{generate, Family, FamilySpec};

    fn lazy_flip() -> ChainMatrix {
        make_lazy(&ChainMatrix::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)]]).unwrap()).unwrap()
    }

    fn cfg(samples: u64) -> McConfig {
        McConfig::default().with_samples(samples).with_seed(11)
    }

    #[test]
    fn equal_starts_give_zero() {
        let c = generate(&FamilySpec::new(Family::Cycle { n: 6 })).unwrap();
        let tables = AliasTables::for_chain(&c);
        let mut rng = replicate_rng(0, 0, 0);
        assert_eq!(
            sample_tau_i(&c, &tables, 3, 3, 10, &mut rng),
            TauSample {
                steps: 0,
                truncated: false
            }
        );
    }

    #[test]
    fn flip_chain_matches_four_thirds() {
        let est = estimate_pair(
            &lazy_flip(),
            StartLaw::State(0),
            StartLaw::State(1),
            &cfg(100_000),
        )
        .unwrap();
        assert!(
            (est.mean - 4.0 / 3.0).abs() <= 3.0 * est.std_error,
            "{est:?}"
        );
        assert_eq!(est.truncated_fraction, 0.0);
    }

    #[test]
    fn cycle4_antipodal_matches_oracle() {
        let c = generate(&FamilySpec::new(Family::Cycle { n: 4 })).unwrap();
        let exact = exact_intersection_expectation(&c, 0, 2, ExactBudget::default()).unwrap();
        let est = estimate_pair(&c, StartLaw::State(0), StartLaw::State(2), &cfg(100_000)).unwrap();
        assert!(
            (est.mean - exact).abs() <= 3.0 * est.std_error,
            "{} vs {exact}",
            est.mean
        );
    }

    #[test]
    fn cycle4_ti_matches_oracle_max() {
        let c = generate(&FamilySpec::new(Family::Cycle { n: 4 })).unwrap();
        let exact = (0..4)
            .flat_map(|x| (0..4).map(move |y| (x, y)))
            .map(|(x, y)| exact_intersection_expectation(&c, x, y, ExactBudget::default()).unwrap())
            .fold(0.0, f64::max);
        let est = estimate_ti(&c, &cfg(20_000)).unwrap();
        assert_eq!(est.mode, CoverageMode::Exhaustive);
        assert!((est.estimate.mean - exact).abs() <= 3.0 * est.estimate.std_error);
    }

    #[test]
    fn one_state_chain_is_zero() {
        let c = generate(&FamilySpec::new(Family::Complete { n: 1 })).unwrap();
        assert_eq!(estimate_ti(&c, &cfg(10)).unwrap().estimate.mean, 0.0);
        assert_eq!(estimate_ti_star(&c, &cfg(10)).unwrap().estimate.mean, 0.0);
        assert_eq!(estimate_pi_pi_expectation(&c, &cfg(10)).unwrap().mean, 0.0);
    }

    #[test]
    fn worker_count_does_not_change_estimates() {
        let c = generate(&FamilySpec::new(Family::Cycle { n: 10 })).unwrap();
        let base = cfg(2_000);
        let one = estimate_ti(
            &c,
            &McConfig {
                threads: 1,
                ..base.clone()
            },
        )
        .unwrap();
        let three = estimate_ti(
            &c,
            &McConfig {
                threads: 3,
                ..base.clone()
            },
        )
        .unwrap();
        let global = estimate_ti(&c, &base).unwrap();
        assert_eq!(one, three);
        assert_eq!(one, global);
    }

    #[test]
    fn truncation_is_flagged() {
        let c = generate(&FamilySpec::new(Family::Cycle { n: 32 })).unwrap();
        let est = estimate_pair(
            &c,
            StartLaw::State(0),
            StartLaw::State(16),
            &McConfig {
                cap: Some(5),
                ..cfg(200)
            },
        )
        .unwrap();
        assert!(est.lower_bound);
        assert_eq!(est.truncated_fraction, 1.0);
        assert_eq!(est.mean, 5.0);
    }

    #[test]
    fn self_loop_counts_all_pairs() {
        let c = ChainMatrix::from_rows(vec![vec![(0, 1.0)]]).unwrap();
        let mut rng = replicate_rng(0, 0, 0);
        assert_eq!(count_intersections(&c, 0, 0, 7, &mut rng), 64);
    }

    #[test]
    fn flip_chain_intersection_moments() {
        let m = intersection_moments(
            &lazy_flip(),
            StartLaw::State(0),
            StartLaw::State(0),
            1,
            &cfg(100_000),
        )
        .unwrap();
        assert!((m.first.mean - 2.5).abs() <= 3.0 * m.first.std_error);
        assert!(m.second.mean <= 4.0 * 2.5 * 2.5 + 3.0 * m.second.std_error);
    }

    #[test]
    fn s_t_trivial_and_complete() {
        let c = generate(&FamilySpec::new(Family::Complete { n: 16 })).unwrap();
        let d0 = s_t_diagnostic(&c, 0, 0, &cfg(100)).unwrap();
        assert_eq!(d0.frequency, 1.0);
        assert_eq!(d0.qt, 1.0);
        let d4 = s_t_diagnostic(&c, 0, 4, &cfg(10_000)).unwrap();
        assert!(d4.pass, "{d4:?}");
    }

    #[test]
    fn star_and_pi_pi_ordering_on_transitive_chain() {
        let c = generate(&FamilySpec::new(Family::Cycle { n: 16 })).unwrap();
        let ti = estimate_ti(&c, &cfg(5_000)).unwrap().estimate;
        let star = estimate_ti_star(&c, &cfg(5_000)).unwrap().estimate;
        let pipi = estimate_pi_pi_expectation(&c, &cfg(5_000)).unwrap();
        assert!(pipi.lower(3.0) <= star.upper(3.0));
        assert!(star.lower(3.0) <= ti.upper(3.0));
    }

    #[test]
    fn lower_bound_mode_on_large_chains() {
        let c = generate(&FamilySpec::new(Family::Path { n: 80 })).unwrap();
        let est = estimate_ti(
            &c,
            &McConfig {
                pilot: Some(Pilot {
                    samples: 20,
                    finalists: 2,
                }),
                ..cfg(100)
            },
        )
        .unwrap();
        assert_eq!(est.mode, CoverageMode::LowerBound);
        assert!(est.argmax.0 < est.argmax.1);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let c = lazy_flip();
        assert!(estimate_pair(&c, StartLaw::State(2), StartLaw::State(0), &cfg(10)).is_err());
        assert!(estimate_pair(&c, StartLaw::State(0), StartLaw::State(1), &cfg(1)).is_err());
        assert!(estimate_pair(
            &c,
            StartLaw::State(0),
            StartLaw::State(1),
            &McConfig {
                cap: Some(0),
                ..cfg(10)
            }
        )
        .is_err());
    }
}
