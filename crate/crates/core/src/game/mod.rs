//! Hierarchical extensive-form poker games: Kuhn and the Leduc family.

mod config;
mod count;
mod history;
mod rules;
mod tree;

pub use config::{GameConfig, GameKind, DEFAULT_OPTIONS};
pub use count::count_base_tree;
pub use history::{Actor, Game, HierAction, History, HistoryKey, InfoKey, LegalMoves, LowKey, Prev, Step};
pub use rules::Action;
pub use tree::{GameTree, Infoset, Node, NodeKind, TreeMode, DEFAULT_NODE_BUDGET, NO_PARENT};
