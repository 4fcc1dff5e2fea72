use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::rules::{Action, Betting, Outcome};
use super::GameConfig;
use crate::error::{ConfigError, HcfrError, Result};

/// Who moves at a history. Players are seat indices 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Actor {
    Chance,
    Player(usize),
    Terminal,
}

/// A hierarchical move `(z, a)`: option index and index into `A(h)`.
/// At chance nodes `z` is the dummy option 0 and `a` indexes the undealt cards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HierAction {
    pub z: usize,
    pub a: usize,
}

impl HierAction {
    pub fn new(z: usize, a: usize) -> Self {
        HierAction { z, a }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    Deal(u8),
    Move { player: u8, z: u8, action: Action },
}

impl Step {
    /// One byte per step: cards below 0x80, moves as `0x80 | z << 2 | action`.
    pub fn code(self) -> u8 {
        match self {
            Step::Deal(c) => c,
            Step::Move { z, action, .. } => 0x80 | (z << 2) | action as u8,
        }
    }
}

/// Legal hierarchical moves at a non-terminal history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LegalMoves {
    /// Dummy option only; deal one of these cards uniformly.
    Chance { cards: Vec<u8> },
    Decision { options: usize, actions: Vec<Action> },
}

impl LegalMoves {
    pub fn num_options(&self) -> usize {
        match self {
            LegalMoves::Chance { .. } => 1,
            LegalMoves::Decision { options, .. } => *options,
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            LegalMoves::Chance { cards } => cards.len(),
            LegalMoves::Decision { actions, .. } => actions.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Phase {
    DealHole(u8),
    Bet,
    DealBoard,
    Over,
}

const NO_CARD: u8 = u8::MAX;

/// A concrete node of the game tree. Immutable once built; [`Game::apply`]
/// returns a new value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct History {
    steps: Vec<Step>,
    hole: [u8; 2],
    board: u8,
    dealt: u64,
    betting: Betting,
    phase: Phase,
    folded: Option<u8>,
    public: String,
    last_option: [Option<u8>; 2],
}

impl History {
    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn contributions(&self) -> [u32; 2] {
        self.betting.contrib
    }

    pub fn pot(&self) -> u32 {
        self.betting.pot()
    }

    pub fn is_terminal(&self) -> bool {
        self.phase == Phase::Over
    }

    pub fn actor(&self) -> Actor {
        match self.phase {
            Phase::DealHole(_) | Phase::DealBoard => Actor::Chance,
            Phase::Bet => Actor::Player(self.betting.to_act as usize),
            Phase::Over => Actor::Terminal,
        }
    }

    pub fn hole_card(&self, player: usize) -> Option<u8> {
        (self.hole[player] != NO_CARD).then_some(self.hole[player])
    }

    pub fn board_card(&self) -> Option<u8> {
        (self.board != NO_CARD).then_some(self.board)
    }

    /// Public action string with `/` between rounds.
    pub fn public_actions(&self) -> &str {
        &self.public
    }

    /// Option chosen at `player`'s most recent decision.
    pub fn last_option(&self, player: usize) -> Option<u8> {
        self.last_option[player]
    }

    pub fn key(&self) -> HistoryKey {
        self.steps.iter().fold(HistoryKey::root(), |k, &s| k.child(s))
    }

    /// `self ⊑ other`.
    pub fn is_prefix_of(&self, other: &History) -> bool {
        other.steps.starts_with(&self.steps)
    }
}

/// Baseline key of a history: its cards and actions with options stripped,
/// followed by each player's most recent option (`0xff` before their first).
///
/// Infoset keys remember only the acting player's previous option, so play
/// after a history depends on its options only through these two bytes, and
/// histories sharing a key share every value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoryKey(pub Vec<u8>);

const NO_OPTION: u8 = 0xff;

impl HistoryKey {
    pub fn root() -> Self {
        HistoryKey(vec![NO_OPTION, NO_OPTION])
    }

    /// Cards and actions only, without the option suffix.
    pub fn base(&self) -> &[u8] {
        &self.0[..self.0.len().saturating_sub(2)]
    }

    pub fn child(&self, step: Step) -> HistoryKey {
        let n = self.0.len() - 2;
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0[..n]);
        let mut last = [self.0[n], self.0[n + 1]];
        match step {
            Step::Deal(c) => v.push(c),
            Step::Move { player, z, action } => {
                v.push(0x80 | action as u8);
                last[player as usize] = z;
            }
        }
        v.extend_from_slice(&last);
        HistoryKey(v)
    }
}

impl Default for HistoryKey {
    fn default() -> Self {
        Self::root()
    }
}

impl fmt::Display for HistoryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(&self.0))
    }
}

/// Conditioning on the player's previous option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prev {
    /// First decision of the hand.
    Initial,
    Option(u8),
    /// Base-game key: options are not part of the game.
    Unconditioned,
}

/// Canonical information-set key `p{player}|{private}|{board}|{actions}|z{prev}`.
/// Players render as 1 and 2, ranks as glyphs, the initial `z_prev` as `z-`.
/// Base-game keys drop the trailing `|z…` field.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfoKey(String);

impl InfoKey {
    pub fn new(player: usize, private: &str, board: &str, actions: &str, prev: Prev) -> Self {
        let mut s = format!("p{}|{}|{}|{}", player + 1, private, board, actions);
        match prev {
            Prev::Initial => s.push_str("|z-"),
            Prev::Option(z) => {
                s.push_str("|z");
                s.push_str(&z.to_string());
            }
            Prev::Unconditioned => {}
        }
        InfoKey(s)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn fields(&self) -> impl Iterator<Item = &str> {
        self.0.split('|')
    }

    /// Seat index 0 or 1.
    pub fn player(&self) -> usize {
        (self.0.as_bytes()[1] - b'1') as usize
    }

    pub fn private(&self) -> &str {
        self.fields().nth(1).unwrap_or("")
    }

    pub fn board(&self) -> &str {
        self.fields().nth(2).unwrap_or("")
    }

    pub fn actions(&self) -> &str {
        self.fields().nth(3).unwrap_or("")
    }

    pub fn prev(&self) -> Prev {
        match self.fields().nth(4) {
            None => Prev::Unconditioned,
            Some("z-") => Prev::Initial,
            Some(z) => Prev::Option(z[1..].parse().expect("validated on construction")),
        }
    }

    pub fn with_prev(&self, prev: Prev) -> InfoKey {
        InfoKey::new(self.player(), self.private(), self.board(), self.actions(), prev)
    }

    /// Key of the same decision point in the base game.
    pub fn base(&self) -> InfoKey {
        self.with_prev(Prev::Unconditioned)
    }
}

impl fmt::Display for InfoKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for InfoKey {
    type Err = HcfrError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || HcfrError::Artifact(format!("malformed info key {s:?}"));
        let fields: Vec<&str> = s.split('|').collect();
        if !(4..=5).contains(&fields.len()) {
            return Err(bad());
        }
        let player = match fields[0] {
            "p1" => 0,
            "p2" => 1,
            _ => return Err(bad()),
        };
        if !fields[3].chars().all(|c| matches!(c, 'f' | 'c' | 'r' | '/')) {
            return Err(bad());
        }
        let prev = match fields.get(4) {
            None => Prev::Unconditioned,
            Some(&"z-") => Prev::Initial,
            Some(z) => {
                let n = z.strip_prefix('z').and_then(|n| n.parse().ok()).ok_or_else(bad)?;
                Prev::Option(n)
            }
        };
        Ok(InfoKey::new(player, fields[1], fields[2], fields[3], prev))
    }
}

impl Serialize for InfoKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for InfoKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Key of a low-level table entry `(I, z)`, rendered `{info}#{z}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LowKey {
    pub info: InfoKey,
    pub z: u8,
}

impl LowKey {
    pub fn new(info: InfoKey, z: usize) -> Self {
        LowKey { info, z: z as u8 }
    }
}

impl fmt::Display for LowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.info, self.z)
    }
}

impl FromStr for LowKey {
    type Err = HcfrError;

    fn from_str(s: &str) -> Result<Self> {
        let (info, z) = s
            .rsplit_once('#')
            .ok_or_else(|| HcfrError::Artifact(format!("malformed low key {s:?}")))?;
        let z = z
            .parse()
            .map_err(|_| HcfrError::Artifact(format!("malformed option in {s:?}")))?;
        Ok(LowKey { info: info.parse()?, z })
    }
}

impl Serialize for LowKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LowKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Rules engine bound to one validated config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    config: GameConfig,
}

impl Game {
    pub fn new(config: GameConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Game { config })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn num_options(&self) -> usize {
        self.config.num_options
    }

    /// The pre-deal chance node with both antes posted.
    pub fn root(&self) -> History {
        History {
            steps: Vec::new(),
            hole: [NO_CARD; 2],
            board: NO_CARD,
            dealt: 0,
            betting: Betting::new(&self.config),
            phase: Phase::DealHole(0),
            folded: None,
            public: String::new(),
            last_option: [None; 2],
        }
    }

    /// `(Z(h), A(h))`. Panics on a terminal history.
    pub fn legal_moves(&self, h: &History) -> LegalMoves {
        match h.phase {
            Phase::DealHole(_) | Phase::DealBoard => LegalMoves::Chance {
                cards: (0..self.config.deck_size() as u8)
                    .filter(|&c| h.dealt & (1 << c) == 0)
                    .collect(),
            },
            Phase::Bet => LegalMoves::Decision {
                options: self.config.num_options,
                actions: h.betting.legal_actions(&self.config),
            },
            Phase::Over => panic!("legal_moves called on a terminal history"),
        }
    }

    pub fn apply(&self, h: &History, m: HierAction) -> Result<History> {
        let illegal = |reason: String| HcfrError::IllegalMove {
            history: h.key().to_string(),
            reason,
        };
        if h.is_terminal() {
            return Err(illegal("history is terminal".into()));
        }
        let legal = self.legal_moves(h);
        if m.z >= legal.num_options() {
            return Err(illegal(format!("option {} out of range", m.z)));
        }
        if m.a >= legal.num_actions() {
            return Err(illegal(format!("action {} out of range", m.a)));
        }
        let mut next = h.clone();
        match legal {
            LegalMoves::Chance { cards } => {
                let card = cards[m.a];
                next.dealt |= 1 << card;
                next.steps.push(Step::Deal(card));
                match h.phase {
                    Phase::DealHole(0) => {
                        next.hole[0] = card;
                        next.phase = Phase::DealHole(1);
                    }
                    Phase::DealHole(_) => {
                        next.hole[1] = card;
                        next.phase = Phase::Bet;
                    }
                    _ => {
                        next.board = card;
                        next.public.push('/');
                        next.phase = Phase::Bet;
                    }
                }
            }
            LegalMoves::Decision { actions, .. } => {
                let action = actions[m.a];
                let player = h.betting.to_act;
                next.steps.push(Step::Move {
                    player,
                    z: m.z as u8,
                    action,
                });
                next.public.push(action.to_char());
                next.last_option[player as usize] = Some(m.z as u8);
                match next.betting.apply(&self.config, action) {
                    Outcome::Continue => {}
                    Outcome::Folded => {
                        next.folded = Some(player);
                        next.phase = Phase::Over;
                    }
                    Outcome::RoundClosed => {
                        if (next.betting.round as usize) + 1 < self.config.rounds() {
                            next.betting.next_round();
                            next.phase = Phase::DealBoard;
                        } else {
                            next.phase = Phase::Over;
                        }
                    }
                }
            }
        }
        Ok(next)
    }

    /// Chips won by `player` at a terminal history; `u_1 = −u_2`.
    pub fn utility(&self, h: &History, player: usize) -> i32 {
        let u1 = self.u1(h);
        if player == 0 {
            u1
        } else {
            -u1
        }
    }

    fn u1(&self, h: &History) -> i32 {
        assert!(h.is_terminal(), "utility of a non-terminal history");
        let c = h.betting.contrib;
        if let Some(folder) = h.folded {
            return if folder == 0 { -(c[0] as i32) } else { c[1] as i32 };
        }
        let s0 = self.strength(h.hole[0], h.board);
        let s1 = self.strength(h.hole[1], h.board);
        match s0.cmp(&s1) {
            std::cmp::Ordering::Greater => c[1] as i32,
            std::cmp::Ordering::Less => -(c[0] as i32),
            std::cmp::Ordering::Equal => 0,
        }
    }

    fn strength(&self, hole: u8, board: u8) -> u32 {
        let r = self.config.rank_of(hole) as u32;
        if board != NO_CARD && self.config.rank_of(board) as u32 == r {
            100 + r
        } else {
            r
        }
    }

    /// Key of the acting player's information set, conditioned on its previous
    /// option.
    pub fn info_key(&self, h: &History) -> InfoKey {
        let p = match h.actor() {
            Actor::Player(p) => p,
            other => panic!("info_key at {other:?} node"),
        };
        let prev = match h.last_option[p] {
            None => Prev::Initial,
            Some(z) => Prev::Option(z),
        };
        self.key_with(h, p, prev)
    }

    /// Key of the acting player's base-game information set.
    pub fn base_info_key(&self, h: &History) -> InfoKey {
        let p = match h.actor() {
            Actor::Player(p) => p,
            other => panic!("info_key at {other:?} node"),
        };
        self.key_with(h, p, Prev::Unconditioned)
    }

    fn key_with(&self, h: &History, p: usize, prev: Prev) -> InfoKey {
        let glyph = |card: u8| self.config.rank_char(self.config.rank_of(card)).to_string();
        let private = h.hole_card(p).map(glyph).unwrap_or_default();
        let board = h.board_card().map(glyph).unwrap_or_default();
        InfoKey::new(p, &private, &board, &h.public, prev)
    }

    /// Replays a public action string through the betting rules and returns
    /// the legal actions at its end, or `None` if the string is not a legal
    /// in-progress sequence for this config.
    pub fn replay_public(&self, actions: &str) -> Option<Vec<Action>> {
        let mut b = Betting::new(&self.config);
        let mut awaiting_board = false;
        for ch in actions.chars() {
            if ch == '/' {
                if !awaiting_board {
                    return None;
                }
                awaiting_board = false;
                b.next_round();
                continue;
            }
            if awaiting_board {
                return None;
            }
            let action = Action::from_char(ch)?;
            if !b.legal_actions(&self.config).contains(&action) {
                return None;
            }
            match b.apply(&self.config, action) {
                Outcome::Continue => {}
                Outcome::Folded => return None,
                Outcome::RoundClosed => {
                    if (b.round as usize) + 1 < self.config.rounds() {
                        awaiting_board = true;
                    } else {
                        return None;
                    }
                }
            }
        }
        (!awaiting_board).then(|| b.legal_actions(&self.config))
    }
}
