use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum HcfrError {
    #[error("invalid game config: {0}")]
    Config(#[from] ConfigError),

    #[error("illegal move at history {history}: {reason}")]
    IllegalMove { history: String, reason: String },

    #[error("game tree exceeds node budget of {budget} (built {built} nodes before aborting; {detail})")]
    TreeTooLarge {
        budget: usize,
        built: usize,
        detail: String,
    },

    #[error("best response requires perfect recall, violated at infoset {0}")]
    ImperfectRecall(String),

    #[error("invalid solver setting: {0}")]
    Solver(String),

    #[error("incompatible skills: {0}")]
    Skills(String),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A named validation failure for [`crate::game::GameConfig`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("num_options must be at least 1")]
    NoOptions,
    #[error("num_options = {0} exceeds the supported maximum of 32")]
    TooManyOptions(usize),
    #[error("ranks = {0} outside the supported range 2..=12")]
    Ranks(u8),
    #[error("suits must be at least 1")]
    Suits,
    #[error("deck of {deck} cards cannot deal {needed} cards")]
    DeckTooSmall { deck: usize, needed: usize },
    #[error("bet_sizes needs {expected} entries for {kind}, got {got}")]
    BetRounds {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("bet_sizes must be positive")]
    NonPositiveBet,
    #[error("ante must be positive")]
    NonPositiveAnte,
    #[error("stack = {stack} cannot cover the ante plus one opening bet ({needed})")]
    StackTooSmall { stack: u32, needed: u32 },
    #[error("big_blind must be positive")]
    NonPositiveBigBlind,
    #[error("raise_cap_per_round must be at least 1")]
    NoRaises,
}

pub type Result<T, E = HcfrError> = std::result::Result<T, E>;
