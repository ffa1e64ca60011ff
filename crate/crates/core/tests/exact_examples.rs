use intersect_core::chain::{make_lazy, ChainMatrix, DistVector};
use intersect_core::exact::{
    cesaro_mixing_time, exact_intersection_probability, hitting_times, max_hitting_time,
    t_h_bruteforce, t_h_large_sets_heuristic, tv_mixing_time, ExactBudget,
};
use intersect_core::families::{generate, Family, FamilySpec};
use intersect_core::spectral::{closed_form_spectrum, compute_q, compute_qt};

fn gen(f: Family) -> ChainMatrix {
    generate(&FamilySpec::new(f)).unwrap()
}

#[test]
fn complete64_partition_candidates() {
    let p = gen(Family::Complete { n: 64 });
    let singletons: Vec<Vec<usize>> = (0..64).map(|x| vec![x]).collect();
    assert!(t_h_large_sets_heuristic(&p, &singletons).is_err());
    let blocks: Vec<Vec<usize>> = (0..8).map(|b| (8 * b..8 * b + 8).collect()).collect();
    let r = t_h_large_sets_heuristic(&p, &blocks).unwrap();
    assert!(r.lower_bound);
    assert!(r.value > 0.0);
}

#[test]
fn cycle64_arc_is_slow_to_hit() {
    let p = gen(Family::Cycle { n: 64 });
    let r = t_h_large_sets_heuristic(&p, &[(0..8).collect()]).unwrap();
    // A lazy walk from the far side needs order n^2 steps.
    assert!(r.value >= 0.1 * 64.0 * 64.0);
    let t_mix = tv_mixing_time(&p, 0.25).unwrap() as f64;
    assert!(r.value / t_mix > 0.1 && r.value / t_mix < 10.0);
}

#[test]
fn two_cliques_candidates() {
    let p = gen(Family::TwoCliques {
        small: Some(8),
        large: 64,
    });
    let large: Vec<usize> = (8..72).collect();
    let small: Vec<usize> = (0..8).collect();
    assert!(t_h_large_sets_heuristic(&p, &[small]).is_err());
    let r = t_h_large_sets_heuristic(&p, &[large]).unwrap();
    assert!(r.value < max_hitting_time(&p).unwrap());
}

#[test]
fn th_bounded_by_twice_thit_on_small_chains() {
    let specs = [
        Family::Cycle { n: 7 },
        Family::Path { n: 9 },
        Family::Complete { n: 6 },
        Family::Hypercube { d: 3 },
        Family::TwoCliques {
            small: Some(3),
            large: 9,
        },
        Family::BalancedTree {
            branching: 2,
            height: 2,
        },
    ];
    for f in specs {
        let p = gen(f);
        let th = t_h_bruteforce(&p).unwrap().value;
        assert!(th <= 2.0 * max_hitting_time(&p).unwrap() + 1e-9, "{f:?}");
    }
}

#[test]
fn hitting_residuals_small_up_to_512() {
    for f in [
        Family::Path { n: 100 },
        Family::Torus { d: 2, l: 12 },
        Family::Complete { n: 512 },
    ] {
        let p = gen(f);
        let h = hitting_times(&p).unwrap();
        assert!(h.max_residual <= 1e-8, "{f:?}: {}", h.max_residual);
        assert!((0..p.n()).all(|x| h.h[x][x] == 0.0));
    }
}

#[test]
fn cesaro_and_tv_on_flip_chain() {
    let p =
        make_lazy(&ChainMatrix::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)]]).unwrap()).unwrap();
    assert_eq!(tv_mixing_time(&p, 0.25).unwrap(), 1);
    assert_eq!(cesaro_mixing_time(&p).unwrap(), 2);
}

#[test]
fn cycle5_pi_pi_sandwich() {
    let spec = FamilySpec::new(Family::Cycle { n: 5 });
    let p = generate(&spec).unwrap();
    let pi = DistVector::uniform(5);
    for t in 1..=20u64 {
        let prob = exact_intersection_probability(&p, &pi, &pi, t, ExactBudget::default()).unwrap();
        let qt = compute_qt(&p, 0, t).unwrap().qt;
        let base = ((t + 1) as f64).powi(2) / (5.0 * qt);
        assert!(
            prob >= base / 4.0 && prob <= (128.0 * base).min(1.0),
            "t={t}"
        );
    }
    assert!(
        compute_q(&closed_form_spectrum(&spec).unwrap().unwrap())
            .unwrap()
            .q
            > 0.0
    );
}

#[test]
fn point_mass_same_start_has_probability_one() {
    let p = gen(Family::Cycle { n: 4 });
    let d = DistVector::point_mass(4, 2);
    assert_eq!(
        exact_intersection_probability(&p, &d, &d, 0, ExactBudget::default()).unwrap(),
        1.0
    );
}
