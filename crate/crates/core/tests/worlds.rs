use epistemic_core::epistemic::bayes_optimal_memory_policy;
use epistemic_core::mdp::{optimal_deterministic_policy, policy_return};
use epistemic_core::worlds::{
    binary_tree_reference, classification_ordering_return, guess_policy_return, make_binary_tree,
    make_classification_env, make_contextual_maze, maze_mdp, parse_grid, shortest_path_length, GuessPolicy,
    LabelDataset, TreeSpec, MAZE_DISCOUNT,
};
use epistemic_core::{epistemic_return, MemorylessPolicy};
use proptest::prelude::*;

#[test]
fn maze_optimum_is_discounted_shortest_path() {
    let suite = make_contextual_maze(12, 6, 5, 4, 3).unwrap();
    assert_eq!((suite.train.len(), suite.test.len()), (6, 6));
    for m in &suite.mazes {
        let len = shortest_path_length(m).unwrap();
        let mdp = maze_mdp(m, MAZE_DISCOUNT).unwrap();
        let v = policy_return(&mdp, &optimal_deterministic_policy(&mdp).policy).unwrap();
        assert!((v - MAZE_DISCOUNT.powi(len as i32)).abs() < 1e-9);
        assert_eq!(&parse_grid(&m.to_grid(), m.id).unwrap(), m);
    }
}

#[test]
fn maze_generation_is_seeded() {
    let a = make_contextual_maze(5, 3, 6, 6, 11).unwrap();
    let b = make_contextual_maze(5, 3, 6, 6, 11).unwrap();
    let c = make_contextual_maze(5, 3, 6, 6, 12).unwrap();
    assert_eq!(a.mazes, b.mazes);
    assert_ne!(a.mazes, c.mazes);
}

#[test]
fn tree_reference_holds_for_several_depths() {
    for depth in 1..=5 {
        let spec = TreeSpec::new(depth, 0.95);
        let r = binary_tree_reference(&spec, 0.1).unwrap();
        let p = make_binary_tree(&spec).unwrap();
        let (n, na) = (p.num_states(), p.num_actions());
        let unif = epistemic_return(&p, &MemorylessPolicy::uniform(n, na)).unwrap();
        assert!((unif - r.j_unif).abs() < 1e-9, "depth {depth}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn guess_values_match_the_belief_tree(seed in 0u64..1000, labels in 2usize..5, gamma in 0.3f64..0.95) {
        let ds = LabelDataset::synthetic(1, labels, 0.7, gamma, labels, seed).unwrap();
        let env = make_classification_env(&ds).unwrap();
        let item = &env.items[0];
        let (ordering, _) = classification_ordering_return(&item.label_dist, gamma).unwrap();
        let tree = bayes_optimal_memory_policy(&item.posterior, labels + 1, 1_000_000).unwrap();
        prop_assert!((tree.value - ordering).abs() < 1e-9);
        let adaptive = guess_policy_return(&item.label_dist, &GuessPolicy::Adaptive, gamma, Some(labels)).unwrap();
        prop_assert!((adaptive - ordering).abs() < 1e-9);
    }
}

#[test]
fn dataset_text_round_trips() {
    let ds = LabelDataset::synthetic(6, 3, 0.4, 0.9, 3, 5).unwrap();
    let back = LabelDataset::parse(&ds.to_text(), 0.9, 3).unwrap();
    assert_eq!(back.items.len(), 6);
    for ((a, p), (b, q)) in ds.items.iter().zip(&back.items) {
        assert_eq!(a, b);
        for (x, y) in p.iter().zip(q) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
