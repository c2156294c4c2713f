//! Environments with known answers: sequential classification, the small
//! posteriors on which memoryless and memory-based optima separate, and a
//! procedural maze family for generalization experiments.

mod classification;
mod constructions;
mod maze;

pub use classification::{
    classification_memoryless_return, classification_optimal_memoryless,
    classification_ordering_return, deterministic_guess_return, guess_policy_return,
    make_classification_env, make_classification_env_unbounded, ordering_return, ClassificationEnv,
    ClassificationItem, GuessPolicy, LabelDataset,
};
pub use constructions::{
    binary_tree_reference, make_binary_tree, make_disjoint_support, make_maxent_bandit,
    make_stay_switch, make_tree_mdp, softmax, tree_reference_policy, GoalSide, TreeReference,
    TreeSpec, MAX_TREE_DEPTH,
};
pub use maze::{
    make_contextual_maze, maze_mdp, parse_grid, shortest_path_length, Direction, MazeContext,
    MazeSuite, MAZE_DISCOUNT,
};
