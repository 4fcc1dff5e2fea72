//! Evaluation: flattening to the base game, best response, exploitability,
//! overall regret and its bounds, head-to-head matches, option switching.

mod best_response;
mod flatten;
mod head_to_head;
mod regret;
mod switching;

use std::marker::PhantomData;

use serde::Serialize;

pub use best_response::{best_response_value, best_response_weighted, response_leaves};
pub use flatten::{flatten, FlatStrategy};
pub use head_to_head::{head_to_head, play_hand, Agent, HandRecord, HeadToHead, MatchRecord};
pub use regret::{average_overall_regret, rate_bound, regret_sum_bound, OverallRegret};
pub use switching::{switch_frequency, switch_frequency_mc, SwitchEstimate, SwitchWeighting};

pub(crate) use crate::rng::mix_seed;

use crate::error::Result;
use crate::game::{GameConfig, GameTree, TreeMode};
use crate::scalar::Scalar;
use crate::strategy::Policy;
use crate::tabular::traverse_values;

/// Exploitability report. `chips` is `½(BR_1 + BR_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exploitability<S> {
    pub chips: S,
    pub mbbg: f64,
    pub best_response: [S; 2],
    /// `u_1` of the evaluated profile.
    pub value: S,
}

/// Exact evaluator over the expanded base tree of a game.
#[derive(Debug, Clone)]
pub struct Evaluator<S> {
    base: GameTree,
    num_options: usize,
    _scalar: PhantomData<S>,
}

impl<S: Scalar> Evaluator<S> {
    pub fn new(config: &GameConfig) -> Result<Self> {
        Self::with_budget(config, crate::game::DEFAULT_NODE_BUDGET)
    }

    pub fn with_budget(config: &GameConfig, budget: usize) -> Result<Self> {
        Ok(Evaluator {
            base: GameTree::build_with_budget(config, TreeMode::Base, budget)?,
            num_options: config.num_options,
            _scalar: PhantomData,
        })
    }

    pub fn base_tree(&self) -> &GameTree {
        &self.base
    }

    pub fn num_options(&self) -> usize {
        self.num_options
    }

    pub fn flatten(&self, policy: &impl Policy<S>) -> FlatStrategy<S> {
        flatten(&self.base, policy, self.num_options)
    }

    pub fn exploitability(&self, policy: &impl Policy<S>) -> Exploitability<S> {
        self.exploitability_flat(&self.flatten(policy))
    }

    pub fn exploitability_flat(&self, flat: &FlatStrategy<S>) -> Exploitability<S> {
        let br = [0, 1].map(|p| best_response_value(&self.base, &flat.profile, p).expect("base game has perfect recall"));
        let chips = (br[0] + br[1]) * S::lit(0.5);
        Exploitability {
            chips,
            mbbg: to_mbbg(chips.as_f64(), self.base.config().big_blind),
            best_response: br,
            value: traverse_values(&self.base, &flat.profile).high[0],
        }
    }

    /// `u_1` when both players follow `policy`.
    pub fn value(&self, policy: &impl Policy<S>) -> S {
        traverse_values(&self.base, &self.flatten(policy).profile).high[0]
    }

    pub fn switch_frequency(&self, policy: &impl Policy<S>, weighting: SwitchWeighting) -> f64 {
        let flat = self.flatten(policy);
        switch_frequency(&self.base, policy, &flat, self.num_options, weighting)
    }
}

/// Chips per game to milli-big-blinds per game.
pub fn to_mbbg(chips: f64, big_blind: u32) -> f64 {
    chips / big_blind as f64 * 1000.0
}
