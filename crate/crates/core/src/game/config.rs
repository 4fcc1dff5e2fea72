use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;

/// Rank glyphs; a game with `n` ranks uses the last `n`.
pub(crate) const RANK_CHARS: &[u8; 12] = b"23456789TJQK";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    /// One betting round, no board card.
    Kuhn,
    /// Two betting rounds separated by one public board card.
    Leduc,
}

impl GameKind {
    pub fn rounds(self) -> usize {
        match self {
            GameKind::Kuhn => 1,
            GameKind::Leduc => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            GameKind::Kuhn => "kuhn",
            GameKind::Leduc => "leduc",
        }
    }
}

/// Rules of a Kuhn or Leduc style poker game plus the option count `|Z|`.
///
/// Raises that would exceed `stack` are converted into an all-in raise to the
/// stack, legal while the opponent still has chips behind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGameConfig", deny_unknown_fields)]
pub struct GameConfig {
    pub game_kind: GameKind,
    pub ranks: u8,
    pub suits: u8,
    pub raise_cap_per_round: u8,
    pub stack: u32,
    pub bet_sizes: Vec<u32>,
    pub ante: u32,
    pub num_options: usize,
    pub big_blind: u32,
}

/// Wire form of [`GameConfig`]: everything but the kind may be omitted and is
/// filled from the kind's standard rules.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGameConfig {
    game_kind: GameKind,
    ranks: Option<u8>,
    suits: Option<u8>,
    raise_cap_per_round: Option<u8>,
    stack: Option<u32>,
    bet_sizes: Option<Vec<u32>>,
    ante: Option<u32>,
    num_options: Option<usize>,
    big_blind: Option<u32>,
}

impl TryFrom<RawGameConfig> for GameConfig {
    type Error = ConfigError;

    fn try_from(raw: RawGameConfig) -> Result<Self, ConfigError> {
        let base = match raw.game_kind {
            GameKind::Kuhn => GameConfig::kuhn(DEFAULT_OPTIONS),
            GameKind::Leduc => GameConfig::leduc(DEFAULT_OPTIONS),
        };
        let bet_sizes = raw.bet_sizes.unwrap_or(base.bet_sizes);
        let big_blind = raw
            .big_blind
            .unwrap_or_else(|| bet_sizes.first().copied().unwrap_or(0));
        let cfg = GameConfig {
            game_kind: raw.game_kind,
            ranks: raw.ranks.unwrap_or(base.ranks),
            suits: raw.suits.unwrap_or(base.suits),
            raise_cap_per_round: raw.raise_cap_per_round.unwrap_or(base.raise_cap_per_round),
            stack: raw.stack.unwrap_or(base.stack),
            bet_sizes,
            ante: raw.ante.unwrap_or(base.ante),
            num_options: raw.num_options.unwrap_or(base.num_options),
            big_blind,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub const DEFAULT_OPTIONS: usize = 3;

impl GameConfig {
    /// Three-card Kuhn poker: ante 1, a single 1-chip bet.
    pub fn kuhn(num_options: usize) -> Self {
        GameConfig {
            game_kind: GameKind::Kuhn,
            ranks: 3,
            suits: 1,
            raise_cap_per_round: 1,
            stack: 2,
            bet_sizes: vec![1],
            ante: 1,
            num_options,
            big_blind: 1,
        }
    }

    /// Standard Leduc hold'em: six cards, two raises per round, bets 2 and 4,
    /// stack 13.
    pub fn leduc(num_options: usize) -> Self {
        GameConfig {
            game_kind: GameKind::Leduc,
            ranks: 3,
            suits: 2,
            raise_cap_per_round: 2,
            stack: 13,
            bet_sizes: vec![2, 4],
            ante: 1,
            num_options,
            big_blind: 2,
        }
    }

    /// Long-horizon Leduc family on a 24-card deck. `raise_cap` 10, 15 and 20
    /// pair with stacks 60, 80 and 100.
    pub fn leduc_scaled(raise_cap: u8, stack: u32, num_options: usize) -> Self {
        GameConfig {
            ranks: 12,
            raise_cap_per_round: raise_cap,
            stack,
            ..GameConfig::leduc(num_options)
        }
    }

    /// Named presets: `kuhn`, `leduc`, `leduc_10`, `leduc_15`, `leduc_20`.
    pub fn preset(name: &str, num_options: usize) -> Option<Self> {
        Some(match name {
            "kuhn" => GameConfig::kuhn(num_options),
            "leduc" => GameConfig::leduc(num_options),
            "leduc_10" => GameConfig::leduc_scaled(10, 60, num_options),
            "leduc_15" => GameConfig::leduc_scaled(15, 80, num_options),
            "leduc_20" => GameConfig::leduc_scaled(20, 100, num_options),
            _ => return None,
        })
    }

    pub fn with_options(mut self, num_options: usize) -> Self {
        self.num_options = num_options;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_options == 0 {
            return Err(ConfigError::NoOptions);
        }
        if self.num_options > 32 {
            return Err(ConfigError::TooManyOptions(self.num_options));
        }
        if !(2..=RANK_CHARS.len() as u8).contains(&self.ranks) {
            return Err(ConfigError::Ranks(self.ranks));
        }
        if self.suits == 0 {
            return Err(ConfigError::Suits);
        }
        let needed = 2 + self.game_kind.rounds() - 1;
        if self.deck_size() < needed {
            return Err(ConfigError::DeckTooSmall {
                deck: self.deck_size(),
                needed,
            });
        }
        let rounds = self.game_kind.rounds();
        if self.bet_sizes.len() != rounds {
            return Err(ConfigError::BetRounds {
                kind: self.game_kind.name(),
                expected: rounds,
                got: self.bet_sizes.len(),
            });
        }
        if self.bet_sizes.contains(&0) {
            return Err(ConfigError::NonPositiveBet);
        }
        if self.ante == 0 {
            return Err(ConfigError::NonPositiveAnte);
        }
        if self.raise_cap_per_round == 0 {
            return Err(ConfigError::NoRaises);
        }
        let needed = self.ante + self.bet_sizes[0];
        if self.stack < needed {
            return Err(ConfigError::StackTooSmall {
                stack: self.stack,
                needed,
            });
        }
        if self.big_blind == 0 {
            return Err(ConfigError::NonPositiveBigBlind);
        }
        Ok(())
    }

    pub fn deck_size(&self) -> usize {
        self.ranks as usize * self.suits as usize
    }

    pub fn rounds(&self) -> usize {
        self.game_kind.rounds()
    }

    pub fn rank_of(&self, card: u8) -> u8 {
        card / self.suits
    }

    pub fn rank_char(&self, rank: u8) -> char {
        RANK_CHARS[RANK_CHARS.len() - self.ranks as usize + rank as usize] as char
    }

    pub fn rank_from_char(&self, c: char) -> Option<u8> {
        let offset = RANK_CHARS.len() - self.ranks as usize;
        RANK_CHARS[offset..]
            .iter()
            .position(|&g| g as char == c)
            .map(|p| p as u8)
    }

    /// Stable digest of the rules, carried by every artifact.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        hex::encode(&digest[..8])
    }

    /// Same rules with a single option; the base game.
    pub fn base(&self) -> Self {
        self.clone().with_options(1)
    }
}
