//! Hierarchical counterfactual regret minimization for two-player zero-sum
//! poker-style games: exact tabular solving, sampled training with learned
//! baselines, evaluation, and skill transfer between game variants.

pub mod baseline;
pub mod error;
pub mod eval;
pub mod game;
pub mod persist;
pub mod regression;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod skills;
pub mod strategy;
pub mod tabular;
pub mod trainer;

pub use error::{HcfrError, Result};
pub use game::{Game, GameConfig, GameKind, InfoKey, LowKey};
pub use scalar::Scalar;

/// Double-precision aliases for the generic core.
pub type Profile = strategy::StrategyProfile<f64>;
pub type Solver = tabular::TabularHcfr<f64>;
pub type SampledTrainer = trainer::Trainer<f64>;
pub type Evaluator = eval::Evaluator<f64>;
pub type Skills = skills::SkillSet<f64>;
