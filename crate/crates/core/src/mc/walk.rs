//! Simulated trajectories with visited-range bookkeeping.

use rand::Rng;

use super::alias::AliasTables;

/// Set of states with O(1) insert, lookup and clear, backed by an epoch
/// stamp per state.
#[derive(Debug, Clone)]
pub struct RangeSet {
    stamp: Vec<u32>,
    epoch: u32,
    len: usize,
}

impl RangeSet {
    pub fn new(n: usize) -> Self {
        Self {
            stamp: vec![0; n],
            epoch: 1,
            len: 0,
        }
    }

    pub fn clear(&mut self) {
        self.len = 0;
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    #[inline]
    pub fn insert(&mut self, x: usize) -> bool {
        if self.stamp[x] == self.epoch {
            return false;
        }
        self.stamp[x] = self.epoch;
        self.len += 1;
        true
    }

    #[inline]
    pub fn contains(&self, x: usize) -> bool {
        self.stamp[x] == self.epoch
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Two independent walks advanced in lockstep. After each tick the
/// `intersected` flag equals `R_X ∩ R_Y ≠ ∅`.
#[derive(Debug, Clone)]
pub struct TrajectoryPair {
    pub x: usize,
    pub y: usize,
    pub t: u64,
    pub intersected: bool,
    range_x: RangeSet,
    range_y: RangeSet,
}

impl TrajectoryPair {
    pub fn new(n: usize) -> Self {
        Self {
            x: 0,
            y: 0,
            t: 0,
            intersected: false,
            range_x: RangeSet::new(n),
            range_y: RangeSet::new(n),
        }
    }

    pub fn reset(&mut self, x0: usize, y0: usize) {
        self.range_x.clear();
        self.range_y.clear();
        self.x = x0;
        self.y = y0;
        self.t = 0;
        self.range_x.insert(x0);
        self.range_y.insert(y0);
        self.intersected = x0 == y0;
    }

    /// Moves X, then Y, one step each; the tick's verdict is taken after
    /// both insertions.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, tables: &AliasTables, rng: &mut R) {
        self.x = tables.sample(self.x, rng);
        self.range_x.insert(self.x);
        let hit_x = self.range_y.contains(self.x);
        self.y = tables.sample(self.y, rng);
        self.range_y.insert(self.y);
        let hit_y = self.range_x.contains(self.y);
        self.t += 1;
        self.intersected |= hit_x || hit_y;
    }

    pub fn range_x(&self) -> &RangeSet {
        &self.range_x
    }

    pub fn range_y(&self) -> &RangeSet {
        &self.range_y
    }
}

/// One draw of `tau_I`, capped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TauSample {
    pub steps: u64,
    pub truncated: bool,
}

pub(crate) fn run_until_intersection<R: Rng + ?Sized>(
    pair: &mut TrajectoryPair,
    tables: &AliasTables,
    x0: usize,
    y0: usize,
    cap: u64,
    rng: &mut R,
) -> TauSample {
    pair.reset(x0, y0);
    while !pair.intersected {
        if pair.t >= cap {
            return TauSample {
                steps: cap,
                truncated: true,
            };
        }
        pair.step(tables, rng);
    }
    TauSample {
        steps: pair.t,
        truncated: false,
    }
}

/// Per-state visit tallies of a path, cleared in time proportional to the
/// number of distinct states touched.
#[derive(Debug, Clone)]
pub(crate) struct Tally {
    counts: Vec<u64>,
    touched: Vec<usize>,
}

impl Tally {
    pub fn new(n: usize) -> Self {
        Self {
            counts: vec![0; n],
            touched: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        for &x in &self.touched {
            self.counts[x] = 0;
        }
        self.touched.clear();
    }

    #[inline]
    pub fn add(&mut self, x: usize) {
        if self.counts[x] == 0 {
            self.touched.push(x);
        }
        self.counts[x] += 1;
    }

    pub fn dot(&self, other: &Tally) -> u64 {
        let (small, large) = if self.touched.len() <= other.touched.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .touched
            .iter()
            .map(|&x| small.counts[x] * large.counts[x])
            .sum()
    }
}
