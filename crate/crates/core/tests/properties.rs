use proptest::prelude::*;

use spectral_augment::augment::{
    apply_plan, initialize_plan, pgd_optimize, project_budget, Mode, PerturbationPlan, PgdConfig,
};
use spectral_augment::community::{community_change_ratio, normalized_cut, spectral_clustering, CommunityAssignment};
use spectral_augment::graph::{generate_er, generate_rpg, RpgParams};

/// Squared distance to the best point on a 0.01 lattice of the feasible set.
fn lattice_best(v: &[f64], b: f64) -> f64 {
    let steps = 100;
    let mut best = f64::INFINITY;
    for a in 0..=steps {
        for c in 0..=steps {
            let (x, y) = (a as f64 / steps as f64, c as f64 / steps as f64);
            if x + y <= b + 1e-12 {
                best = best.min((x - v[0]).powi(2) + (y - v[1]).powi(2));
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_beats_lattice_search(a in -1.0f64..2.0, c in -1.0f64..2.0, b in 0.0f64..2.0) {
        let v = [a, c];
        let p = project_budget(&v, b);
        let d = (p[0] - a).powi(2) + (p[1] - c).powi(2);
        prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        prop_assert!(p[0] + p[1] <= b + 1e-9);
        prop_assert!(d <= lattice_best(&v, b) + 1e-12);
    }

    #[test]
    fn change_ratio_is_relabel_invariant(labels in proptest::collection::vec(0usize..4, 1..40), shift in 1usize..4) {
        let a = CommunityAssignment::new(labels.clone(), 4).unwrap();
        let b = CommunityAssignment::new(labels.iter().map(|l| (l + shift) % 4).collect(), 4).unwrap();
        prop_assert_eq!(community_change_ratio(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn change_ratio_is_symmetric_and_bounded(
        x in proptest::collection::vec(0usize..3, 20),
        y in proptest::collection::vec(0usize..3, 20),
    ) {
        let a = CommunityAssignment::new(x, 3).unwrap();
        let b = CommunityAssignment::new(y, 3).unwrap();
        let r = community_change_ratio(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!((r - community_change_ratio(&b, &a).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn clustering_follows_node_permutation() {
    let params = RpgParams {
        num_class: 3,
        nodes_per_class: 20,
        homophily: 0.95,
        avg_degree: 6.0,
        seed: 9,
    };
    let (g, _) = generate_rpg(&params).unwrap();
    let n = g.n();
    let perm: Vec<usize> = (0..n).map(|v| (v * 7 + 3) % n).collect();
    let h = g.permuted(&perm).unwrap();
    let a = spectral_clustering(&g, 3, 1).unwrap();
    let b = spectral_clustering(&h, 3, 1).unwrap();
    let pulled = CommunityAssignment::new((0..n).map(|v| b.labels[perm[v]]).collect(), 3).unwrap();
    assert!(community_change_ratio(&a, &pulled).unwrap() < 0.05);
}

#[test]
fn planted_partition_has_lower_cut_than_random() {
    let params = RpgParams {
        num_class: 4,
        nodes_per_class: 25,
        homophily: 0.95,
        avg_degree: 6.0,
        seed: 4,
    };
    let (g, planted) = generate_rpg(&params).unwrap();
    let planted = CommunityAssignment::new(planted, 4).unwrap();
    let scrambled = CommunityAssignment::new((0..g.n()).map(|v| (v * 13) % 4).collect(), 4).unwrap();
    assert!(normalized_cut(&g, &planted).unwrap() < normalized_cut(&g, &scrambled).unwrap());
}

#[test]
fn optimized_plans_stay_feasible_and_apply_cleanly() {
    let g = generate_er(30, 0.2, 12).unwrap();
    for mode in [Mode::EdgeDrop, Mode::EdgeAdd, Mode::NodeDrop] {
        let budget = 0.2 * mode.budget_base(&g) as f64;
        let start = initialize_plan(&g, mode, budget, 4, 0.2, 3).unwrap();
        let cfg = PgdConfig { k: 4, iters: 8, ..Default::default() };
        let out = pgd_optimize(&g, &start, &cfg).unwrap();
        assert!(out.plan.is_feasible());
        let mask: Vec<bool> = out.plan.values.iter().map(|v| *v > 0.5).collect();
        let view = apply_plan(&g, &out.plan, &mask).unwrap();
        match mode {
            Mode::EdgeDrop => assert_eq!(view.graph.num_edges(), g.num_edges() - view.flips()),
            Mode::EdgeAdd => assert_eq!(view.graph.num_edges(), g.num_edges() + view.flips()),
            _ => assert!(view.graph.num_edges() <= g.num_edges()),
        }
    }
}

#[test]
fn misaligned_mask_is_rejected() {
    let g = generate_er(10, 0.4, 1).unwrap();
    let plan = PerturbationPlan::uniform(&g, Mode::EdgeDrop, 1.0).unwrap();
    assert!(apply_plan(&g, &plan, &[true]).is_err());
}
