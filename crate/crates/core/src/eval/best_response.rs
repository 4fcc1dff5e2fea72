use crate::error::{HcfrError, Result};
use crate::game::{GameTree, NodeKind};
use crate::scalar::Scalar;
use crate::tabular::{reach, TreeProfile};

/// `max_{σ′_r} Σ_z π_{σ′_r}(z)·leaf[z]` over pure responder strategies, where
/// `leaf` already carries the opponent and chance weights of each terminal.
///
/// Each responder infoset picks the action maximizing the summed child values
/// of all its members. Requires the responder to have perfect recall on
/// `tree`: members of an infoset must share the responder's move sequence.
pub fn best_response_weighted<S: Scalar>(tree: &GameTree, responder: usize, leaf: &[S]) -> Result<S> {
    let n = tree.nodes.len();
    let mut value = vec![S::zero(); n];
    let mut choice: Vec<Option<usize>> = vec![None; tree.infosets.len()];
    for id in (0..n).rev() {
        let node = tree.nodes[id];
        value[id] = match node.kind {
            NodeKind::Terminal { .. } => leaf[id],
            NodeKind::Decision { player, infoset } if player as usize == responder => {
                let iset = infoset as usize;
                let a = match choice[iset] {
                    Some(a) => a,
                    None => {
                        let a = best_action(tree, iset, &value)?;
                        choice[iset] = Some(a);
                        a
                    }
                };
                value[node.first_child as usize + a]
            }
            _ => node.children().map(|c| value[c]).sum(),
        };
    }
    Ok(value[0])
}

fn best_action<S: Scalar>(tree: &GameTree, iset: usize, value: &[S]) -> Result<usize> {
    let info = &tree.infosets[iset];
    let first = own_sequence(tree, info.nodes[0] as usize, info.player);
    if info.nodes[1..].iter().any(|&h| own_sequence(tree, h as usize, info.player) != first) {
        return Err(HcfrError::ImperfectRecall(info.key.to_string()));
    }
    let (nz, na) = (info.num_options, info.num_actions());
    let mut best = (0, S::neg_infinity());
    for k in 0..nz * na {
        let total: S = info
            .nodes
            .iter()
            .map(|&h| value[tree.nodes[h as usize].first_child as usize + k])
            .sum();
        if total > best.1 {
            best = (k, total);
        }
    }
    Ok(best.0)
}

/// The player's own (infoset, move) pairs on the path to `node`, leaf first.
fn own_sequence(tree: &GameTree, node: usize, player: usize) -> Vec<(u32, usize)> {
    let mut out = Vec::new();
    let mut n = node;
    while tree.nodes[n].parent != crate::game::NO_PARENT {
        let parent = tree.nodes[n].parent as usize;
        if let NodeKind::Decision { player: p, infoset } = tree.nodes[parent].kind {
            if p as usize == player {
                out.push((infoset, n - tree.nodes[parent].first_child as usize));
            }
        }
        n = parent;
    }
    out
}

/// Terminal weights `π_{−r}(z)·u_r(z)` of the responder against `profile`.
pub fn response_leaves<S: Scalar>(tree: &GameTree, profile: &TreeProfile<S>, responder: usize) -> Vec<S> {
    let r = reach(tree, profile);
    let sign = if responder == 0 { S::one() } else { -S::one() };
    let mut leaf = vec![S::zero(); tree.nodes.len()];
    for t in tree.terminals() {
        leaf[t] = r.others(responder, t) * sign * S::from_chips(tree.u1(t));
    }
    leaf
}

/// Responder's best-response value against `profile` on `tree`, in chips.
pub fn best_response_value<S: Scalar>(tree: &GameTree, profile: &TreeProfile<S>, responder: usize) -> Result<S> {
    best_response_weighted(tree, responder, &response_leaves(tree, profile, responder))
}
