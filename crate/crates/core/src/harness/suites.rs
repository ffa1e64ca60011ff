//! Named instance sets. Calibration and assertion sets share no instance.

use serde::{Deserialize, Serialize};

use crate::families::{Family, FamilySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    Transitive,
    Regular,
    Trees,
    Torus,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "all" => Ok(Self::All),
            "transitive" => Ok(Self::Transitive),
            "regular" => Ok(Self::Regular),
            "trees" => Ok(Self::Trees),
            "torus" => Ok(Self::Torus),
            other => Err(format!(
                "unknown suite `{other}` (expected all|transitive|regular|trees|torus)"
            )),
        }
    }
}

fn fam(f: Family) -> FamilySpec {
    FamilySpec::new(f)
}

fn cycle(n: usize) -> FamilySpec {
    fam(Family::Cycle { n })
}

fn complete(n: usize) -> FamilySpec {
    fam(Family::Complete { n })
}

fn torus(d: usize, l: usize) -> FamilySpec {
    fam(Family::Torus { d, l })
}

fn hypercube(d: usize) -> FamilySpec {
    fam(Family::Hypercube { d })
}

fn path(n: usize) -> FamilySpec {
    fam(Family::Path { n })
}

fn two_cliques(large: usize) -> FamilySpec {
    fam(Family::TwoCliques { small: None, large })
}

fn weighted_tree(n: usize, seed: u64) -> FamilySpec {
    FamilySpec::seeded(Family::WeightedTree { n }, seed)
}

/// Small transitive chains on which the exact intersection oracle runs.
pub fn exact_transitive_instances() -> Vec<FamilySpec> {
    vec![cycle(4), cycle(5), complete(4), complete(5)]
}

/// The ratio-check assertion set for the `t_I ~ sqrt(Q)` family of checks.
pub fn sqrt_q_assertion_instances() -> Vec<FamilySpec> {
    vec![cycle(128), torus(2, 16), complete(1024), hypercube(10)]
}

/// Ten random weighted trees with 20 to 200 states.
pub fn tree_assertion_instances() -> Vec<FamilySpec> {
    (1..=10)
        .map(|k| weighted_tree(20 * k as usize, k))
        .collect()
}

pub fn two_cliques_sizes() -> Vec<usize> {
    vec![16, 64, 256]
}

pub fn transitive_instances() -> Vec<FamilySpec> {
    let mut v = exact_transitive_instances();
    v.extend([
        cycle(12),
        complete(12),
        torus(2, 4),
        hypercube(4),
        cycle(16),
        complete(16),
        torus(2, 6),
    ]);
    v.extend([cycle(64), complete(64), torus(3, 6), hypercube(5)]);
    v.extend(sqrt_q_assertion_instances());
    v
}

pub fn regular_instances() -> Vec<FamilySpec> {
    vec![
        cycle(16),
        cycle(64),
        cycle(128),
        complete(16),
        complete(64),
        complete(1024),
        torus(2, 16),
        hypercube(5),
        hypercube(10),
    ]
}

pub fn tree_instances() -> Vec<FamilySpec> {
    let mut v = vec![
        path(8),
        path(50),
        fam(Family::BalancedTree {
            branching: 3,
            height: 3,
        }),
    ];
    v.extend(tree_assertion_instances());
    v
}

pub fn torus_instances() -> Vec<FamilySpec> {
    vec![torus(2, 6), torus(2, 16), torus(3, 6)]
}

pub fn instances(suite: Suite) -> Vec<FamilySpec> {
    match suite {
        Suite::Transitive => transitive_instances(),
        Suite::Regular => regular_instances(),
        Suite::Trees => tree_instances(),
        Suite::Torus => torus_instances(),
        Suite::All => {
            let mut v = transitive_instances();
            v.extend(tree_instances());
            v.extend(two_cliques_sizes().into_iter().map(two_cliques));
            let mut seen = std::collections::BTreeSet::new();
            v.retain(|s| seen.insert(s.to_string()));
            v
        }
    }
}

/// Instances the frozen windows are measured on.
pub fn calibration_instances() -> Vec<FamilySpec> {
    let mut v = vec![
        cycle(3),
        cycle(6),
        cycle(24),
        cycle(32),
        complete(3),
        complete(8),
        complete(32),
        complete(256),
    ];
    v.extend([
        torus(2, 3),
        torus(2, 8),
        torus(3, 4),
        hypercube(3),
        hypercube(6),
        hypercube(8),
    ]);
    v.extend([
        path(6),
        path(10),
        path(40),
        fam(Family::BalancedTree {
            branching: 2,
            height: 4,
        }),
    ]);
    v.extend(
        [
            (24, 1001),
            (60, 1002),
            (110, 1003),
            (170, 1004),
            (200, 1005),
        ]
        .map(|(n, s)| weighted_tree(n, s)),
    );
    v.push(FamilySpec::seeded(Family::RandomTree { n: 50 }, 1006));
    v.extend([9, 36, 144].map(two_cliques));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn calibration_and_assertion_sets_are_disjoint() {
        let cal: BTreeSet<String> = calibration_instances()
            .iter()
            .map(|s| s.to_string())
            .collect();
        for suite in [
            Suite::All,
            Suite::Transitive,
            Suite::Regular,
            Suite::Trees,
            Suite::Torus,
        ] {
            for s in instances(suite) {
                assert!(!cal.contains(&s.to_string()), "{s} is in both sets");
            }
        }
    }

    #[test]
    fn suites_parse() {
        assert_eq!("trees".parse::<Suite>().unwrap(), Suite::Trees);
        assert!("bogus".parse::<Suite>().is_err());
    }
}
