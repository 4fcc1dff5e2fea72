//! Betting-round state machine shared by [`super::History`] and the public tree
//! counter.

use serde::{Deserialize, Serialize};

use super::GameConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Fold,
    /// Check when nothing is owed, call otherwise.
    Call,
    /// Bet or raise by the round's bet size, capped at the stack.
    Raise,
}

impl Action {
    pub fn to_char(self) -> char {
        match self {
            Action::Fold => 'f',
            Action::Call => 'c',
            Action::Raise => 'r',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'f' => Some(Action::Fold),
            'c' => Some(Action::Call),
            'r' => Some(Action::Raise),
            _ => None,
        }
    }
}

/// What an action did to the current round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Continue,
    RoundClosed,
    Folded,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Betting {
    pub round: u8,
    pub contrib: [u32; 2],
    pub raises: u8,
    pub to_act: u8,
    pub facing: bool,
    pub acted: bool,
}

impl Betting {
    pub fn new(cfg: &GameConfig) -> Self {
        Betting {
            round: 0,
            contrib: [cfg.ante; 2],
            raises: 0,
            to_act: 0,
            facing: false,
            acted: false,
        }
    }

    pub fn pot(&self) -> u32 {
        self.contrib[0] + self.contrib[1]
    }

    /// Target contribution of a raise by the player to act, or `None` when
    /// raising is not allowed.
    pub fn raise_to(&self, cfg: &GameConfig) -> Option<u32> {
        if self.raises >= cfg.raise_cap_per_round {
            return None;
        }
        let opp = self.contrib[1 - self.to_act as usize];
        let full = opp + cfg.bet_sizes[self.round as usize];
        if full <= cfg.stack {
            Some(full)
        } else if opp < cfg.stack {
            Some(cfg.stack)
        } else {
            None
        }
    }

    /// Legal actions in canonical order: fold (only when facing a bet), call,
    /// raise.
    pub fn legal_actions(&self, cfg: &GameConfig) -> Vec<Action> {
        let mut out = Vec::with_capacity(3);
        if self.facing {
            out.push(Action::Fold);
        }
        out.push(Action::Call);
        if self.raise_to(cfg).is_some() {
            out.push(Action::Raise);
        }
        out
    }

    /// Applies a legal action. Callers are responsible for legality.
    pub fn apply(&mut self, cfg: &GameConfig, action: Action) -> Outcome {
        let me = self.to_act as usize;
        match action {
            Action::Fold => Outcome::Folded,
            Action::Call => {
                let closes = self.facing || self.acted;
                self.contrib[me] = self.contrib[1 - me];
                if closes {
                    Outcome::RoundClosed
                } else {
                    self.acted = true;
                    self.facing = false;
                    self.to_act = 1 - self.to_act;
                    Outcome::Continue
                }
            }
            Action::Raise => {
                let target = self.raise_to(cfg).expect("raise legality checked by caller");
                self.contrib[me] = target;
                self.raises += 1;
                self.acted = true;
                self.facing = true;
                self.to_act = 1 - self.to_act;
                Outcome::Continue
            }
        }
    }

    /// Starts the next round with player 1 to act.
    pub fn next_round(&mut self) {
        self.round += 1;
        self.raises = 0;
        self.to_act = 0;
        self.facing = false;
        self.acted = false;
    }
}
