//! Lazy random walks on the graph families used throughout the crate.
//!
//! Every generator builds a symmetric weight table `w(x, y)` and returns the
//! walk `p(x, y) = 1/2 [x = y] + w(x, y) / (2 w(x))` whose stationary
//! distribution is `w(x) / sum w`. Parallel edges (torus with side 2) are
//! merged into a single entry of doubled weight.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainMatrix, Flags};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Cycle {
        n: usize,
    },
    Path {
        n: usize,
    },
    Complete {
        n: usize,
    },
    Hypercube {
        d: usize,
    },
    Torus {
        d: usize,
        l: usize,
    },
    /// Rooted tree in which every internal node has `branching` children.
    BalancedTree {
        branching: usize,
        height: usize,
    },
    /// Uniform labelled tree drawn from a random Prüfer sequence.
    RandomTree {
        n: usize,
    },
    /// Random Prüfer tree with log-uniform edge weights on [1, 100].
    WeightedTree {
        n: usize,
    },
    /// Cliques of sizes `small` and `large` joined by one edge between
    /// their first vertices; `small` defaults to `round(sqrt(large))`.
    TwoCliques {
        small: Option<usize>,
        large: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(family: Family) -> Self {
        Self { family, seed: 0 }
    }

    pub fn seeded(family: Family, seed: u64) -> Self {
        Self { family, seed }
    }

    /// Number of states of the generated chain.
    pub fn state_count(&self) -> Result<usize> {
        self.validate()?;
        Ok(match self.family {
            Family::Cycle { n } | Family::Path { n } | Family::Complete { n } => n,
            Family::RandomTree { n } | Family::WeightedTree { n } => n,
            Family::Hypercube { d } => 1 << d,
            Family::Torus { d, l } => l.pow(d as u32),
            Family::BalancedTree { branching, height } => balanced_tree_size(branching, height),
            Family::TwoCliques { small, large } => {
                small.unwrap_or_else(|| default_small(large)) + large
            }
        })
    }

    pub fn is_transitive(&self) -> bool {
        matches!(
            self.family,
            Family::Cycle { .. }
                | Family::Complete { .. }
                | Family::Hypercube { .. }
                | Family::Torus { .. }
        )
    }

    pub fn is_tree(&self) -> bool {
        matches!(
            self.family,
            Family::Path { .. }
                | Family::BalancedTree { .. }
                | Family::RandomTree { .. }
                | Family::WeightedTree { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        match self.family {
            Family::Cycle { n } if n < 3 => bad(format!("cycle needs n >= 3, got {n}")),
            Family::Path { n }
            | Family::Complete { n }
            | Family::RandomTree { n }
            | Family::WeightedTree { n }
                if n == 0 =>
            {
                bad(format!("{self} needs at least one state"))
            }
            Family::Hypercube { d } if d == 0 || d > 20 => {
                bad(format!("hypercube dimension must be in 1..=20, got {d}"))
            }
            Family::Torus { d, l } if d == 0 || l < 2 => {
                bad(format!("torus needs d >= 1 and l >= 2, got d={d}, l={l}"))
            }
            Family::Torus { d, l } if (l as f64).powi(d as i32) > 1e7 => {
                bad(format!("torus l^d = {l}^{d} is too large"))
            }
            Family::BalancedTree { branching: 0, .. } => {
                bad("balanced tree needs branching >= 1".into())
            }
            Family::BalancedTree { branching, height }
                if (branching as f64).powi(height as i32) > 1e7 =>
            {
                bad("balanced tree is too large".into())
            }
            Family::TwoCliques { small, large } => {
                let s = small.unwrap_or_else(|| default_small(large));
                if s == 0 || large == 0 {
                    bad(format!(
                        "two cliques need positive sizes, got ({s}, {large})"
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Edge list of the underlying tree, for tree families.
    pub fn tree(&self) -> Result<Option<Tree>> {
        self.validate()?;
        if !self.is_tree() {
            return Ok(None);
        }
        let n = self.state_count()?;
        let edges = match self.family {
            Family::Path { n } => (1..n).map(|i| (i - 1, i, 1.0)).collect(),
            Family::BalancedTree { branching, height } => {
                let size = balanced_tree_size(branching, height);
                (1..size).map(|i| ((i - 1) / branching, i, 1.0)).collect()
            }
            Family::RandomTree { n } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                random_tree_edges(n, &mut rng)
                    .into_iter()
                    .map(|(a, b)| (a, b, 1.0))
                    .collect()
            }
            Family::WeightedTree { n } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let edges = random_tree_edges(n, &mut rng);
                edges
                    .into_iter()
                    .map(|(a, b)| {
                        let u: f64 = rng.random();
                        (a, b, (u * 100f64.ln()).exp())
                    })
                    .collect()
            }
            _ => unreachable!(),
        };
        Ok(Some(Tree { n, edges }))
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Cycle { n } => write!(f, "cycle(n={n})"),
            Family::Path { n } => write!(f, "path(n={n})"),
            Family::Complete { n } => write!(f, "complete(n={n})"),
            Family::Hypercube { d } => write!(f, "hypercube(d={d})"),
            Family::Torus { d, l } => write!(f, "torus(d={d};l={l})"),
            Family::BalancedTree { branching, height } => {
                write!(f, "balanced_tree(r={branching};h={height})")
            }
            Family::RandomTree { n } => write!(f, "random_tree(n={n};seed={})", self.seed),
            Family::WeightedTree { n } => write!(f, "weighted_tree(n={n};seed={})", self.seed),
            Family::TwoCliques { small, large } => {
                write!(
                    f,
                    "two_cliques(s={};m={large})",
                    small.unwrap_or_else(|| default_small(large))
                )
            }
        }
    }
}

fn default_small(large: usize) -> usize {
    ((large as f64).sqrt().round() as usize).max(1)
}

fn balanced_tree_size(branching: usize, height: usize) -> usize {
    (0..=height).map(|k| branching.pow(k as u32)).sum()
}

/// Decodes a uniformly random Prüfer sequence.
fn random_tree_edges(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => return Vec::new(),
        2 => return vec![(0, 1)],
        _ => {}
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &s in &seq {
        let leaf = leaves
            .pop_first()
            .expect("Prüfer decoding always has a leaf");
        edges.push((leaf.min(s), leaf.max(s)));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.insert(s);
        }
    }
    let a = leaves.pop_first().unwrap();
    let b = leaves.pop_first().unwrap();
    edges.push((a, b));
    edges
}

/// Symmetric weight lists `w(x, .)`, self-loops excluded.
fn weights(spec: &FamilySpec) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = spec.state_count()?;
    let mut w: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut add_edge = |a: usize, b: usize, weight: f64| {
        w[a].push((b, weight));
        w[b].push((a, weight));
    };
    match spec.family {
        Family::Cycle { n } => (0..n).for_each(|i| add_edge(i, (i + 1) % n, 1.0)),
        Family::Complete { n } => {
            for a in 0..n {
                for b in a + 1..n {
                    add_edge(a, b, 1.0);
                }
            }
        }
        Family::Hypercube { d } => {
            for x in 0..n {
                for k in 0..d {
                    let y = x ^ (1 << k);
                    if x < y {
                        add_edge(x, y, 1.0);
                    }
                }
            }
        }
        Family::Torus { d, l } => {
            // One arc per coordinate direction (+1 and -1); with l = 2 both
            // arcs land on the same neighbour and merge into weight 2.
            for x in 0..n {
                let mut stride = 1;
                for _ in 0..d {
                    let coord = (x / stride) % l;
                    let up = x - coord * stride + ((coord + 1) % l) * stride;
                    add_edge(x, up, 1.0);
                    stride *= l;
                }
            }
        }
        Family::TwoCliques { large, .. } => {
            let s = n - large;
            for a in 0..s {
                for b in a + 1..s {
                    add_edge(a, b, 1.0);
                }
            }
            for a in s..n {
                for b in a + 1..n {
                    add_edge(a, b, 1.0);
                }
            }
            add_edge(0, s, 1.0);
        }
        _ => {
            let tree = spec.tree()?.expect("tree family");
            for (a, b, weight) in tree.edges {
                add_edge(a, b, weight);
            }
        }
    }
    Ok(w)
}

/// Lazy (weighted) simple random walk on the family member described by
/// `spec`.
pub fn generate(spec: &FamilySpec) -> Result<ChainMatrix> {
    spec.validate()?;
    let w = weights(spec)?;
    let n = w.len();
    let degree: Vec<f64> = w
        .iter()
        .map(|row| row.iter().map(|&(_, x)| x).sum())
        .collect();
    if n == 1 {
        return ChainMatrix::with_stationary(
            vec![vec![(0, 1.0)]],
            vec![1.0],
            Flags {
                lazy: true,
                reversible: true,
                transitive: true,
                regular: true,
            },
        );
    }
    if degree.iter().any(|&d| d <= 0.0) {
        return Err(Error::Structural(format!("{spec} has an isolated vertex")));
    }
    let total: f64 = degree.iter().sum();
    let rows = w
        .into_iter()
        .enumerate()
        .map(|(x, row)| {
            let mut r: Vec<(usize, f64)> = row
                .into_iter()
                .map(|(y, wt)| (y, 0.5 * wt / degree[x]))
                .collect();
            r.push((x, 0.5));
            r
        })
        .collect();
    let pi: Vec<f64> = degree.iter().map(|d| d / total).collect();
    let regular = degree
        .iter()
        .all(|&d| (d - degree[0]).abs() <= 1e-12 * degree[0]);
    let flags = Flags {
        lazy: true,
        reversible: true,
        transitive: spec.is_transitive(),
        regular,
    };
    ChainMatrix::with_stationary(rows, pi, flags)
}

/// Weighted tree as an undirected edge list `(a, b, weight)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl Tree {
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b, _) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Structural("empty tree".into()));
        }
        if self.edges.len() != self.n - 1 {
            return Err(Error::Structural(format!(
                "{} edges on {} vertices cannot form a tree",
                self.edges.len(),
                self.n
            )));
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        if count != self.n {
            // n - 1 edges and disconnected means a cycle somewhere.
            return Err(Error::Structural(
                "edge list is disconnected or contains a cycle".into(),
            ));
        }
        Ok(())
    }
}

/// Smallest-index vertex `v` such that every component of `T - v` has
/// stationary mass at most 1/2.
pub fn central_node(chain: &ChainMatrix, tree: &Tree) -> Result<usize> {
    tree.validate()?;
    if chain.n() != tree.n {
        return Err(Error::Validation(format!(
            "chain has {} states, tree has {}",
            chain.n(),
            tree.n
        )));
    }
    let pi = chain.pi();
    let adj = tree.adjacency();
    // Root at 0; subtree masses in reverse BFS order.
    let mut parent = vec![usize::MAX; tree.n];
    let mut order = Vec::with_capacity(tree.n);
    let mut queue = VecDeque::from([0]);
    parent[0] = 0;
    while let Some(x) = queue.pop_front() {
        order.push(x);
        for &y in &adj[x] {
            if parent[y] == usize::MAX {
                parent[y] = x;
                queue.push_back(y);
            }
        }
    }
    let mut subtree = pi.to_vec();
    for &x in order.iter().rev().filter(|&&x| x != 0) {
        subtree[parent[x]] += subtree[x];
    }
    let total: f64 = pi.iter().sum();
    let limit = 0.5 + 1e-12;
    (0..tree.n)
        .find(|&v| {
            let children_ok = adj[v]
                .iter()
                .filter(|&&c| c != v && parent[c] == v)
                .all(|&c| subtree[c] <= limit);
            let parent_side_ok = v == 0 || total - subtree[v] <= limit;
            children_ok && parent_side_ok
        })
        .ok_or_else(|| Error::Structural("no central node found".into()))
}
