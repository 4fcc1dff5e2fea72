use std::collections::HashMap;

use crate::game::{GameTree, InfoKey, LowKey, NodeKind, Prev, TreeMode};
use crate::scalar::Scalar;
use crate::strategy::{Policy, StrategyProfile};
use crate::tabular::TreeProfile;

/// Base-game behavioural strategy induced by a hierarchical profile.
///
/// `profile` is laid out on the base tree (one option per infoset).
/// `prev_belief[I]` is the distribution over the acting player's previous
/// option on arrival at base infoset `I`, `None` before the first decision.
#[derive(Debug, Clone)]
pub struct FlatStrategy<S> {
    pub profile: TreeProfile<S>,
    pub prev_belief: Vec<Option<Vec<S>>>,
}

impl<S: Scalar> FlatStrategy<S> {
    pub fn action_probs<'a>(&'a self, base: &GameTree, iset: usize) -> &'a [S] {
        self.profile.low_at(base, iset, 0)
    }

    /// Base key → action distribution.
    pub fn table(&self, base: &GameTree) -> HashMap<InfoKey, Vec<S>> {
        (0..base.infosets.len())
            .map(|i| (base.infosets[i].key.clone(), self.action_probs(base, i).to_vec()))
            .collect()
    }

    /// As a single-option hierarchical profile keyed by base keys.
    pub fn to_profile(&self, base: &GameTree) -> StrategyProfile<S> {
        let mut out = StrategyProfile::new();
        for (id, iset) in base.infosets.iter().enumerate() {
            out.high.insert(iset.key.clone(), vec![S::one()]);
            out.low.insert(LowKey::new(iset.key.clone(), 0), self.action_probs(base, id).to_vec());
        }
        out
    }
}

/// Marginalizes the options of `policy` out of every player's play.
///
/// Walks the base tree once, carrying for each player a belief over the
/// option in force after their last move. Beliefs depend only on the
/// player's own observations, so each base infoset is resolved on first
/// visit. Options are tracked jointly with the previous option because the
/// low-level table is keyed by the full hierarchical infoset.
pub fn flatten<S: Scalar>(base: &GameTree, policy: &impl Policy<S>, num_options: usize) -> FlatStrategy<S> {
    assert_eq!(base.mode(), TreeMode::Base, "flatten runs on the base tree");
    let mut out = FlatStrategy {
        profile: TreeProfile::uniform(base),
        prev_belief: vec![None; base.infosets.len()],
    };
    let mut next_belief: Vec<Option<Vec<Vec<S>>>> = vec![None; base.infosets.len()];
    let mut stack: Vec<(usize, [Option<Vec<S>>; 2])> = vec![(0, [None, None])];
    while let Some((id, beliefs)) = stack.pop() {
        let node = base.nodes[id];
        match node.kind {
            NodeKind::Terminal { .. } => {}
            NodeKind::Chance => {
                for c in node.children() {
                    stack.push((c, beliefs.clone()));
                }
            }
            NodeKind::Decision { player, infoset } => {
                let (p, iset) = (player as usize, infoset as usize);
                if next_belief[iset].is_none() {
                    let (dist, after) = resolve(base, policy, num_options, iset, beliefs[p].as_deref());
                    let o = base.infosets[iset].low_offset;
                    out.profile.low[o..o + dist.len()].copy_from_slice(&dist);
                    out.prev_belief[iset] = beliefs[p].clone();
                    next_belief[iset] = Some(after);
                }
                let after = next_belief[iset].as_ref().expect("resolved above");
                for (a, c) in node.children().enumerate() {
                    let mut b = beliefs.clone();
                    b[p] = Some(after[a].clone());
                    stack.push((c, b));
                }
            }
        }
    }
    out
}

/// Action distribution at a base infoset and the belief after each action.
fn resolve<S: Scalar>(
    base: &GameTree,
    policy: &impl Policy<S>,
    nz: usize,
    iset: usize,
    prev: Option<&[S]>,
) -> (Vec<S>, Vec<Vec<S>>) {
    let info = &base.infosets[iset];
    let na = info.num_actions();
    // (weight of z_prev, hierarchical key) pairs.
    let sources: Vec<(S, InfoKey)> = match prev {
        None => vec![(S::one(), info.key.with_prev(Prev::Initial))],
        Some(b) => b
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > S::zero())
            .map(|(z, &w)| (w, info.key.with_prev(Prev::Option(z as u8))))
            .collect(),
    };
    let mut dist = vec![S::zero(); na];
    // joint[a][z]: mass of choosing option z then action a.
    let mut joint = vec![vec![S::zero(); nz]; na];
    let mut option_mass = vec![S::zero(); nz];
    for (w, key) in &sources {
        let high = policy.high(key, nz);
        for z in 0..nz {
            let wz = *w * high[z];
            if wz == S::zero() {
                continue;
            }
            option_mass[z] += wz;
            let low = policy.low(key, z, na);
            for a in 0..na {
                joint[a][z] += wz * low[a];
                dist[a] += wz * low[a];
            }
        }
    }
    let after = joint
        .into_iter()
        .map(|row| {
            let total: S = row.iter().copied().sum();
            if total > S::zero() {
                row.into_iter().map(|x| x / total).collect()
            } else {
                option_mass.clone()
            }
        })
        .collect();
    (dist, after)
}
