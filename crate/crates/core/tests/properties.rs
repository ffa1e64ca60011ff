use std::collections::VecDeque;

use proptest::prelude::*;

use intersect_core::chain::{evolve, make_lazy, stationary, ChainMatrix, DistVector};
use intersect_core::exact::{exact_intersection_expectation, intersection_cdf, ExactBudget};
use intersect_core::families::{central_node, generate, Family, FamilySpec};
use intersect_core::spectral::{compute_qt, green_table};

/// Lazy version of a random irreducible chain: a cycle backbone plus extra
/// random weights.
fn random_lazy_chain(n: usize, extra: &[f64]) -> ChainMatrix {
    let rows = (0..n)
        .map(|x| {
            let mut w: Vec<(usize, f64)> = vec![((x + 1) % n, 1.0)];
            for y in 0..n {
                let v = extra[(x * n + y) % extra.len()];
                if v > 0.5 {
                    w.push((y, v));
                }
            }
            let total: f64 = w.iter().map(|e| e.1).sum();
            w.into_iter().map(|(y, v)| (y, v / total)).collect()
        })
        .collect();
    make_lazy(&ChainMatrix::from_rows(rows).unwrap()).unwrap()
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolve_is_a_semigroup(n in 2usize..7, extra in prop::collection::vec(0.0f64..1.0, 49), s in 0u64..6, t in 0u64..6, x in 0usize..7) {
        let p = random_lazy_chain(n, &extra);
        let mu = DistVector::point_mass(n, x % n);
        let direct = evolve(&p, &mu, s + t);
        let split = evolve(&p, &evolve(&p, &mu, s), t);
        prop_assert!(l1(direct.as_slice(), split.as_slice()) < 1e-12);
    }

    #[test]
    fn stationary_is_a_fixed_point(n in 2usize..9, extra in prop::collection::vec(0.0f64..1.0, 81)) {
        let p = random_lazy_chain(n, &extra);
        let pi = stationary(&p).unwrap();
        let mut next = vec![0.0; n];
        p.apply_left(pi.as_slice(), &mut next);
        prop_assert!(l1(pi.as_slice(), &next) <= 1e-10);
        prop_assert!((pi.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn reversible_chains_keep_detailed_balance(n in 3usize..40, seed in 0u64..1000, t in 1u64..20) {
        let p = generate(&FamilySpec::seeded(Family::WeightedTree { n }, seed)).unwrap();
        let pi = p.pi();
        let rows: Vec<Vec<f64>> = (0..n).map(|x| evolve(&p, &DistVector::point_mass(n, x), t).into_vec()).collect();
        for x in 0..n {
            for y in 0..n {
                prop_assert!((pi[x] * rows[x][y] - pi[y] * rows[y][x]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn green_table_and_qt_are_monotone(l in 3usize..30, t in 0u64..40) {
        let p = generate(&FamilySpec::new(Family::Cycle { n: l })).unwrap();
        let a = green_table(&p, 0, t);
        let b = green_table(&p, 0, t + 1);
        prop_assert!(a.g.iter().zip(&b.g).all(|(u, v)| u <= v));
        prop_assert!(compute_qt(&p, 0, t).unwrap().qt <= compute_qt(&p, 0, t + 1).unwrap().qt);
    }

    #[test]
    fn exact_intersection_is_symmetric(n in 2usize..5, extra in prop::collection::vec(0.0f64..1.0, 16), x in 0usize..4, y in 0usize..4) {
        let p = random_lazy_chain(n, &extra);
        let (x, y) = (x % n, y % n);
        let a = exact_intersection_expectation(&p, x, y, ExactBudget::default()).unwrap();
        let b = exact_intersection_expectation(&p, y, x, ExactBudget::default()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn intersection_cdf_is_monotone(n in 2usize..6, extra in prop::collection::vec(0.0f64..1.0, 25)) {
        let p = random_lazy_chain(n, &extra);
        let pi = DistVector::new(p.pi().to_vec()).unwrap();
        let cdf = intersection_cdf(&p, &pi, &pi, 30, ExactBudget::default()).unwrap();
        prop_assert!(cdf.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        prop_assert!(cdf.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}

/// Stationary mass of each component of `T - v`.
fn component_masses(n: usize, edges: &[(usize, usize, f64)], pi: &[f64], v: usize) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b, _) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    seen[v] = true;
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut mass = 0.0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            mass += pi[u];
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        out.push(mass);
    }
    out
}

#[test]
fn central_node_on_200_random_trees() {
    for seed in 0..200u64 {
        let n = 2 + (seed as usize * 7) % 120;
        let family = if seed % 2 == 0 {
            Family::WeightedTree { n }
        } else {
            Family::RandomTree { n }
        };
        let spec = FamilySpec::seeded(family, seed);
        let chain = generate(&spec).unwrap();
        let tree = spec.tree().unwrap().unwrap();
        let v = central_node(&chain, &tree).unwrap();
        let masses = component_masses(n, &tree.edges, chain.pi(), v);
        assert!(
            masses.iter().all(|&m| m <= 0.5 + 1e-12),
            "seed {seed}: {masses:?}"
        );
    }
}

#[test]
fn weighted_tree_seed_7_stationary_residual() {
    let p = generate(&FamilySpec::seeded(Family::WeightedTree { n: 40 }, 7)).unwrap();
    let pi = stationary(&p).unwrap();
    let mut next = vec![0.0; p.n()];
    p.apply_left(pi.as_slice(), &mut next);
    assert!(l1(pi.as_slice(), &next) <= 1e-10);
    let tree = FamilySpec::seeded(Family::WeightedTree { n: 40 }, 7)
        .tree()
        .unwrap()
        .unwrap();
    let mut incident = vec![0.0; 40];
    for (a, b, w) in tree.edges {
        incident[a] += w;
        incident[b] += w;
    }
    let total: f64 = incident.iter().sum();
    for x in 0..40 {
        assert!(
            (pi[x] - incident[x] / total).abs() <= 1e-8,
            "{x}: {} vs {}",
            pi[x],
            incident[x] / total
        );
    }
}
