use crate::error::{HcfrError, Result};
use crate::game::{GameTree, NodeKind, TreeMode};
use crate::scalar::Scalar;
use crate::tabular::{reach, traverse_values, Reach, TreeProfile, TreeRegrets};

use super::best_response::best_response_weighted;

/// Running average overall regret `R_full,i` of a sequence of hierarchical
/// profiles.
///
/// `Σ_t u_i(σ′, σ^t_{−i})` is linear in `σ′`, so the best deviation against
/// the whole sequence is a best response to the accumulated environment.
/// The environment lives on the base tree: a hierarchical terminal maps to
/// the base terminal with the same cards and actions, and since the
/// opponent's and chance's reach do not depend on the deviator's options,
/// fixing the deviator's options to 0 selects one representative per base
/// terminal.
#[derive(Debug, Clone)]
pub struct OverallRegret<S> {
    base_of: Vec<u32>,
    own_zero: [Vec<bool>; 2],
    env: [Vec<S>; 2],
    value_sum: S,
    iterations: usize,
}

impl<S: Scalar> OverallRegret<S> {
    /// Accumulated state `(environment reach per player, value sum, count)`.
    pub fn state(&self) -> ([Vec<f64>; 2], f64, usize) {
        let f = |v: &Vec<S>| v.iter().map(|x| x.as_f64()).collect();
        ([f(&self.env[0]), f(&self.env[1])], self.value_sum.as_f64(), self.iterations)
    }

    pub fn set_state(&mut self, env: &[Vec<f64>; 2], value_sum: f64, iterations: usize) -> Result<()> {
        for p in 0..2 {
            if env[p].len() != self.env[p].len() {
                return Err(HcfrError::Artifact("regret tracker size does not match the tree".into()));
            }
            self.env[p] = env[p].iter().map(|&x| S::lit(x)).collect();
        }
        self.value_sum = S::lit(value_sum);
        self.iterations = iterations;
        Ok(())
    }

    pub fn new(hier: &GameTree, base: &GameTree) -> Self {
        assert_eq!(base.mode(), TreeMode::Base);
        let n = hier.nodes.len();
        let mut base_of = vec![0u32; n];
        let mut own_zero = [vec![true; n], vec![true; n]];
        for id in 0..n {
            let node = hier.nodes[id];
            let b = base.nodes[base_of[id] as usize];
            let (nz, na) = hier.shape(id);
            for z in 0..nz {
                for a in 0..na {
                    let c = node.first_child as usize + z * na + a;
                    base_of[c] = b.first_child + a as u32;
                    for p in 0..2 {
                        let own = matches!(node.kind, NodeKind::Decision { player, .. } if player as usize == p);
                        own_zero[p][c] = own_zero[p][id] && (!own || z == 0);
                    }
                }
            }
        }
        OverallRegret {
            base_of,
            own_zero,
            env: [vec![S::zero(); base.nodes.len()], vec![S::zero(); base.nodes.len()]],
            value_sum: S::zero(),
            iterations: 0,
        }
    }

    /// Adds one iterate given its reach and its root value `u_1(σ^t)`.
    pub fn record(&mut self, hier: &GameTree, reach: &Reach<S>, root_value: S) {
        for t in hier.terminals() {
            let u1 = S::from_chips(hier.u1(t));
            let b = self.base_of[t] as usize;
            if self.own_zero[0][t] {
                self.env[0][b] += reach.others(0, t) * u1;
            }
            if self.own_zero[1][t] {
                self.env[1][b] -= reach.others(1, t) * u1;
            }
        }
        self.value_sum += root_value;
        self.iterations += 1;
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn value(&self, player: usize, base: &GameTree) -> S {
        if self.iterations == 0 {
            return S::zero();
        }
        let best = best_response_weighted(base, player, &self.env[player]).expect("base game has perfect recall");
        let own_sum = if player == 0 { self.value_sum } else { -self.value_sum };
        (best - own_sum) / S::from_count(self.iterations)
    }
}

/// `R_full,i^T` of an explicit sequence of hierarchical profiles.
pub fn average_overall_regret<S: Scalar>(
    hier: &GameTree,
    base: &GameTree,
    profiles: &[TreeProfile<S>],
    player: usize,
) -> Result<S> {
    let mut acc = OverallRegret::new(hier, base);
    for p in profiles {
        acc.record(hier, &reach(hier, p), traverse_values(hier, p).high[0]);
    }
    Ok(acc.value(player, base))
}

/// `Σ_{I ∈ I_i} [R^{T,H}_+(I) + Σ_z R^{T,L}_+(Iz)]` from averaged regrets,
/// with `R_+` the positive part of the largest entry.
pub fn regret_sum_bound<S: Scalar>(tree: &GameTree, regrets: &TreeRegrets<S>, player: usize) -> S {
    let pos_max = |xs: &[S]| xs.iter().copied().fold(S::zero(), S::max);
    tree.infosets_of(player)
        .map(|(id, iset)| {
            let low: S = (0..iset.num_options).map(|z| pos_max(regrets.low_at(tree, id, z))).sum();
            pos_max(regrets.high_at(tree, id)) + low
        })
        .sum()
}

/// `Δ_u·|I_i|·(√|Z_i| + |Z_i|·√|A_i|)/√T`.
pub fn rate_bound(tree: &GameTree, player: usize, iterations: usize) -> f64 {
    let delta = tree.utility_range() as f64;
    let (count, z, a) = tree
        .infosets_of(player)
        .fold((0usize, 0usize, 0usize), |(c, z, a), (_, i)| {
            (c + 1, z.max(i.num_options), a.max(i.num_actions()))
        });
    let (z, a) = (z as f64, a as f64);
    delta * count as f64 * (z.sqrt() + z * a.sqrt()) / (iterations as f64).sqrt()
}
