//! Fully expanded game tree for exhaustive algorithms.
//!
//! Nodes are stored breadth first, so every node at depth `d + 1` has a larger
//! index than every node at depth `d`. Bottom-up passes iterate indices in
//! reverse; top-down passes iterate forward.

use std::collections::{HashMap, VecDeque};

use super::history::{Actor, Game, HierAction, History, HistoryKey, InfoKey, LegalMoves};
use super::rules::Action;
use super::GameConfig;
use crate::error::{HcfrError, Result};

pub const NO_PARENT: u32 = u32::MAX;

/// Default cap on nodes built by [`GameTree::build`].
pub const DEFAULT_NODE_BUDGET: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeMode {
    /// Decision nodes branch on every `(z, a)`; keys carry `z_prev`.
    Hierarchical,
    /// Decision nodes branch on actions only; base-game keys.
    Base,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Chance,
    Decision { player: u8, infoset: u32 },
    Terminal { u1: i32 },
}

#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: u32,
    /// [`super::Step::code`] of the edge from the parent.
    pub step: u8,
    pub first_child: u32,
    pub num_children: u32,
    pub depth: u16,
    /// Start of this node's per-option slots: `|Z|` for decisions, one for the
    /// chance dummy option, none for terminals.
    pub slot: u32,
}

impl Node {
    pub fn children(&self) -> std::ops::Range<usize> {
        let s = self.first_child as usize;
        s..s + self.num_children as usize
    }
}

#[derive(Debug, Clone)]
pub struct Infoset {
    pub key: InfoKey,
    pub player: usize,
    pub actions: Vec<Action>,
    pub num_options: usize,
    pub nodes: Vec<u32>,
    /// Number of the player's own moves before reaching this set.
    pub own_moves: usize,
    /// Offset of `σ^H(·|I)` in dense per-infoset arrays.
    pub high_offset: usize,
    /// Offset of `σ^L(·|I, ·)` in dense arrays, laid out `z * |A| + a`.
    pub low_offset: usize,
}

impl Infoset {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
}

#[derive(Debug, Clone)]
pub struct GameTree {
    game: Game,
    mode: TreeMode,
    pub nodes: Vec<Node>,
    pub infosets: Vec<Infoset>,
    index: HashMap<InfoKey, u32>,
    num_slots: usize,
    high_len: usize,
    low_len: usize,
}

impl GameTree {
    pub fn build(config: &GameConfig, mode: TreeMode) -> Result<Self> {
        Self::build_with_budget(config, mode, DEFAULT_NODE_BUDGET)
    }

    pub fn build_with_budget(config: &GameConfig, mode: TreeMode, budget: usize) -> Result<Self> {
        let config = match mode {
            TreeMode::Hierarchical => config.clone(),
            TreeMode::Base => config.base(),
        };
        let game = Game::new(config)?;
        let mut tree = GameTree {
            game,
            mode,
            nodes: Vec::new(),
            infosets: Vec::new(),
            index: HashMap::new(),
            num_slots: 0,
            high_len: 0,
            low_len: 0,
        };
        let mut frontier: VecDeque<History> = VecDeque::new();
        frontier.push_back(tree.game.root());
        tree.nodes.push(Node {
            kind: NodeKind::Chance,
            parent: NO_PARENT,
            step: 0,
            first_child: 0,
            num_children: 0,
            depth: 0,
            slot: 0,
        });
        let mut id = 0usize;
        while let Some(h) = frontier.pop_front() {
            if tree.nodes.len() > budget {
                return Err(HcfrError::TreeTooLarge {
                    budget,
                    built: tree.nodes.len(),
                    detail: format!(
                        "|Z| = {}, {} infosets so far, deepest level {}",
                        tree.game.num_options(),
                        tree.infosets.len(),
                        tree.nodes.last().map_or(0, |n| n.depth)
                    ),
                });
            }
            tree.expand(id, &h, &mut frontier);
            id += 1;
        }
        Ok(tree)
    }

    fn expand(&mut self, id: usize, h: &History, frontier: &mut VecDeque<History>) {
        if h.is_terminal() {
            self.nodes[id].kind = NodeKind::Terminal {
                u1: self.game.utility(h, 0),
            };
            return;
        }
        let legal = self.game.legal_moves(h);
        let (nz, na) = (legal.num_options(), legal.num_actions());
        self.nodes[id].slot = self.num_slots as u32;
        self.num_slots += nz;
        if let (Actor::Player(p), LegalMoves::Decision { actions, .. }) = (h.actor(), &legal) {
            let key = match self.mode {
                TreeMode::Hierarchical => self.game.info_key(h),
                TreeMode::Base => self.game.base_info_key(h),
            };
            let next = self.infosets.len() as u32;
            let iset = *self.index.entry(key.clone()).or_insert(next);
            if iset == next {
                let own_moves = h
                    .steps()
                    .iter()
                    .filter(|s| matches!(s, super::Step::Move { player, .. } if *player as usize == p))
                    .count();
                self.infosets.push(Infoset {
                    key,
                    player: p,
                    actions: actions.clone(),
                    num_options: nz,
                    nodes: Vec::new(),
                    own_moves,
                    high_offset: self.high_len,
                    low_offset: self.low_len,
                });
                self.high_len += nz;
                self.low_len += nz * na;
            }
            self.infosets[iset as usize].nodes.push(id as u32);
            self.nodes[id].kind = NodeKind::Decision {
                player: p as u8,
                infoset: iset,
            };
        }
        let first = self.nodes.len() as u32;
        self.nodes[id].first_child = first;
        self.nodes[id].num_children = (nz * na) as u32;
        let depth = self.nodes[id].depth + 1;
        for z in 0..nz {
            for a in 0..na {
                let child = self.game.apply(h, HierAction::new(z, a)).expect("enumerated move is legal");
                let step = child.steps().last().expect("child has a step").code();
                self.nodes.push(Node {
                    kind: NodeKind::Chance,
                    parent: id as u32,
                    step,
                    first_child: 0,
                    num_children: 0,
                    depth,
                    slot: 0,
                });
                frontier.push_back(child);
            }
        }
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn config(&self) -> &GameConfig {
        self.game.config()
    }

    pub fn mode(&self) -> TreeMode {
        self.mode
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    /// Length of dense high-level arrays (sum of `|Z(I)|`).
    pub fn high_len(&self) -> usize {
        self.high_len
    }

    /// Length of dense low-level arrays (sum of `|Z(I)|·|A(I)|`).
    pub fn low_len(&self) -> usize {
        self.low_len
    }

    pub fn infoset_id(&self, key: &InfoKey) -> Option<usize> {
        self.index.get(key).map(|&i| i as usize)
    }

    /// Number of options and actions at a non-terminal node.
    pub fn shape(&self, node: usize) -> (usize, usize) {
        match self.nodes[node].kind {
            NodeKind::Chance => (1, self.nodes[node].num_children as usize),
            NodeKind::Decision { infoset, .. } => {
                let i = &self.infosets[infoset as usize];
                (i.num_options, i.num_actions())
            }
            NodeKind::Terminal { .. } => (0, 0),
        }
    }

    /// Child reached by `(z, a)`.
    pub fn child(&self, node: usize, z: usize, a: usize) -> usize {
        let (_, na) = self.shape(node);
        self.nodes[node].first_child as usize + z * na + a
    }

    pub fn terminals(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n.kind, NodeKind::Terminal { .. }))
            .map(|(i, _)| i)
    }

    pub fn u1(&self, node: usize) -> i32 {
        match self.nodes[node].kind {
            NodeKind::Terminal { u1 } => u1,
            _ => panic!("u1 of non-terminal node {node}"),
        }
    }

    /// Choices from the root to `node`, one `(z, a)` pair per edge.
    pub fn path(&self, node: usize) -> Vec<HierAction> {
        let mut out = Vec::with_capacity(self.nodes[node].depth as usize);
        let mut n = node;
        while self.nodes[n].parent != NO_PARENT {
            let p = self.nodes[n].parent as usize;
            let (_, na) = self.shape(p);
            let off = n - self.nodes[p].first_child as usize;
            out.push(HierAction::new(off / na, off % na));
            n = p;
        }
        out.reverse();
        out
    }

    pub fn history_key(&self, node: usize) -> HistoryKey {
        self.history(node).key()
    }

    /// Rebuilds the [`History`] value of a node.
    pub fn history(&self, node: usize) -> History {
        self.path(node).into_iter().fold(self.game.root(), |h, m| {
            self.game.apply(&h, m).expect("tree path is legal")
        })
    }

    /// `max u_1 − min u_1` over terminals.
    pub fn utility_range(&self) -> i32 {
        let (lo, hi) = self
            .terminals()
            .map(|t| self.u1(t))
            .fold((i32::MAX, i32::MIN), |(lo, hi), u| (lo.min(u), hi.max(u)));
        hi - lo
    }

    pub fn infosets_of(&self, player: usize) -> impl Iterator<Item = (usize, &Infoset)> + '_ {
        self.infosets.iter().enumerate().filter(move |(_, i)| i.player == player)
    }
}
