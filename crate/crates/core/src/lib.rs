//! Exact tabular tools for epistemic POMDPs: MDP evaluation, posteriors over
//! MDPs and their Bayes-optimal policies, analytic constructions, linked
//! ensemble training on contextual mazes, and numerical checks of the
//! bounds relating them.

pub mod analysis;
pub mod epistemic;
pub mod error;
pub mod format;
pub mod leep;
mod linalg;
pub mod mdp;
pub mod random;
pub mod worlds;

pub use epistemic::{epistemic_return, EpistemicPomdp, Posterior};
pub use error::{Error, Result};
pub use mdp::{MemorylessPolicy, TabularMdp};
