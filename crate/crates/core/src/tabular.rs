//! Exact full-traversal hierarchical CFR on an expanded [`GameTree`].
//!
//! Values are tracked for player 1; player 2 reads their negation. Regrets are
//! kept as running averages, which regret matching treats identically to sums.

use serde::{Deserialize, Serialize};

use crate::error::{HcfrError, Result};
use crate::eval::{self, Evaluator, OverallRegret};
use crate::game::{GameConfig, GameTree, InfoKey, LowKey, NodeKind, TreeMode};
use crate::scalar::{uniform, Scalar};
use crate::strategy::{regret_match_into, Policy, RegretMode, StrategyProfile};

/// Dense strategy over a tree's infosets, laid out by
/// [`crate::game::Infoset::high_offset`] and `low_offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeProfile<S> {
    pub high: Vec<S>,
    pub low: Vec<S>,
}

impl<S: Scalar> TreeProfile<S> {
    pub fn uniform(tree: &GameTree) -> Self {
        let mut p = TreeProfile {
            high: vec![S::zero(); tree.high_len()],
            low: vec![S::zero(); tree.low_len()],
        };
        for iset in &tree.infosets {
            let (nz, na) = (iset.num_options, iset.num_actions());
            p.high[iset.high_offset..iset.high_offset + nz].copy_from_slice(&uniform(nz));
            let u = uniform::<S>(na);
            for z in 0..nz {
                let o = iset.low_offset + z * na;
                p.low[o..o + na].copy_from_slice(&u);
            }
        }
        p
    }

    pub fn from_policy(tree: &GameTree, policy: &impl Policy<S>) -> Self {
        let mut p = Self::uniform(tree);
        for iset in &tree.infosets {
            let (nz, na) = (iset.num_options, iset.num_actions());
            p.high[iset.high_offset..iset.high_offset + nz].copy_from_slice(&policy.high(&iset.key, nz));
            for z in 0..nz {
                let o = iset.low_offset + z * na;
                p.low[o..o + na].copy_from_slice(&policy.low(&iset.key, z, na));
            }
        }
        p
    }

    pub fn high_at(&self, tree: &GameTree, iset: usize) -> &[S] {
        let i = &tree.infosets[iset];
        &self.high[i.high_offset..i.high_offset + i.num_options]
    }

    pub fn low_at(&self, tree: &GameTree, iset: usize, z: usize) -> &[S] {
        let i = &tree.infosets[iset];
        let na = i.num_actions();
        &self.low[i.low_offset + z * na..i.low_offset + (z + 1) * na]
    }

    pub fn to_profile(&self, tree: &GameTree) -> StrategyProfile<S> {
        let mut out = StrategyProfile::new();
        for (id, iset) in tree.infosets.iter().enumerate() {
            out.high.insert(iset.key.clone(), self.high_at(tree, id).to_vec());
            for z in 0..iset.num_options {
                out.low
                    .insert(LowKey::new(iset.key.clone(), z), self.low_at(tree, id, z).to_vec());
            }
        }
        out
    }

    /// [`Policy`] view; keys outside the tree read uniform.
    pub fn policy<'a>(&'a self, tree: &'a GameTree) -> TreePolicy<'a, S> {
        TreePolicy { tree, profile: self }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreePolicy<'a, S> {
    tree: &'a GameTree,
    profile: &'a TreeProfile<S>,
}

impl<S: Scalar> Policy<S> for TreePolicy<'_, S> {
    fn high(&self, key: &InfoKey, n: usize) -> Vec<S> {
        match self.tree.infoset_id(key) {
            Some(i) if self.tree.infosets[i].num_options == n => self.profile.high_at(self.tree, i).to_vec(),
            _ => uniform(n),
        }
    }

    fn low(&self, key: &InfoKey, z: usize, n: usize) -> Vec<S> {
        match self.tree.infoset_id(key) {
            Some(i) if self.tree.infosets[i].num_actions() == n && z < self.tree.infosets[i].num_options => {
                self.profile.low_at(self.tree, i, z).to_vec()
            }
            _ => uniform(n),
        }
    }
}

/// Per-node reach contributions of each player and of chance.
#[derive(Debug, Clone)]
pub struct Reach<S> {
    pub player: [Vec<S>; 2],
    pub chance: Vec<S>,
}

impl<S: Scalar> Reach<S> {
    /// `π_{−i}(h)`: opponent times chance.
    pub fn others(&self, player: usize, node: usize) -> S {
        self.player[1 - player][node] * self.chance[node]
    }

    pub fn total(&self, node: usize) -> S {
        self.player[0][node] * self.player[1][node] * self.chance[node]
    }
}

pub fn reach<S: Scalar>(tree: &GameTree, profile: &TreeProfile<S>) -> Reach<S> {
    let n = tree.nodes.len();
    let mut r = Reach {
        player: [vec![S::zero(); n], vec![S::zero(); n]],
        chance: vec![S::zero(); n],
    };
    r.player[0][0] = S::one();
    r.player[1][0] = S::one();
    r.chance[0] = S::one();
    for id in 0..n {
        let node = tree.nodes[id];
        let (p0, p1, c) = (r.player[0][id], r.player[1][id], r.chance[id]);
        match node.kind {
            NodeKind::Terminal { .. } => {}
            NodeKind::Chance => {
                let pc = S::one() / S::from_count(node.num_children as usize);
                for ch in node.children() {
                    r.player[0][ch] = p0;
                    r.player[1][ch] = p1;
                    r.chance[ch] = c * pc;
                }
            }
            NodeKind::Decision { player, infoset } => {
                let p = player as usize;
                let iset = infoset as usize;
                let na = tree.infosets[iset].num_actions();
                let high = profile.high_at(tree, iset);
                for (z, &pz) in high.iter().enumerate() {
                    let low = profile.low_at(tree, iset, z);
                    for (a, &pa) in low.iter().enumerate() {
                        let ch = node.first_child as usize + z * na + a;
                        r.player[p][ch] = r.player[p][id] * pz * pa;
                        r.player[1 - p][ch] = r.player[1 - p][id];
                        r.chance[ch] = c;
                    }
                }
            }
        }
    }
    r
}

/// Expected player-1 values: `high[node]` is `v^H(h)`, `low[slot + z]` is
/// `v^L(hz)`.
#[derive(Debug, Clone)]
pub struct ValueCache<S> {
    pub high: Vec<S>,
    pub low: Vec<S>,
}

impl<S: Scalar> ValueCache<S> {
    pub fn low_at(&self, tree: &GameTree, node: usize, z: usize) -> S {
        self.low[tree.nodes[node].slot as usize + z]
    }
}

/// Full bottom-up recursion of expected values under `profile`.
pub fn traverse_values<S: Scalar>(tree: &GameTree, profile: &TreeProfile<S>) -> ValueCache<S> {
    let mut v = ValueCache {
        high: vec![S::zero(); tree.nodes.len()],
        low: vec![S::zero(); tree.num_slots()],
    };
    for id in (0..tree.nodes.len()).rev() {
        let node = tree.nodes[id];
        let slot = node.slot as usize;
        match node.kind {
            NodeKind::Terminal { u1 } => v.high[id] = S::from_chips(u1),
            NodeKind::Chance => {
                let n = S::from_count(node.num_children as usize);
                let sum: S = node.children().map(|c| v.high[c]).sum();
                v.low[slot] = sum / n;
                v.high[id] = v.low[slot];
            }
            NodeKind::Decision { infoset, .. } => {
                let iset = infoset as usize;
                let na = tree.infosets[iset].num_actions();
                let mut total = S::zero();
                for (z, &pz) in profile.high_at(tree, iset).iter().enumerate() {
                    let low = profile.low_at(tree, iset, z);
                    let first = node.first_child as usize + z * na;
                    let vl: S = low.iter().enumerate().map(|(a, &pa)| pa * v.high[first + a]).sum();
                    v.low[slot + z] = vl;
                    total += pz * vl;
                }
                v.high[id] = total;
            }
        }
    }
    v
}

/// Dense per-infoset regrets in the owning player's utility, laid out like
/// [`TreeProfile`].
#[derive(Debug, Clone, PartialEq)]
pub struct TreeRegrets<S> {
    pub high: Vec<S>,
    pub low: Vec<S>,
}

impl<S: Scalar> TreeRegrets<S> {
    pub fn zeros(tree: &GameTree) -> Self {
        TreeRegrets {
            high: vec![S::zero(); tree.high_len()],
            low: vec![S::zero(); tree.low_len()],
        }
    }

    pub fn high_at(&self, tree: &GameTree, iset: usize) -> &[S] {
        let i = &tree.infosets[iset];
        &self.high[i.high_offset..i.high_offset + i.num_options]
    }

    pub fn low_at(&self, tree: &GameTree, iset: usize, z: usize) -> &[S] {
        let i = &tree.infosets[iset];
        let na = i.num_actions();
        &self.low[i.low_offset + z * na..i.low_offset + (z + 1) * na]
    }

    pub fn max_abs_diff(&self, other: &TreeRegrets<S>) -> f64 {
        self.high
            .iter()
            .zip(&other.high)
            .chain(self.low.iter().zip(&other.low))
            .map(|(a, b)| (*a - *b).abs().as_f64())
            .fold(0.0, f64::max)
    }
}

fn sign<S: Scalar>(player: usize) -> S {
    if player == 0 {
        S::one()
    } else {
        -S::one()
    }
}

/// Immediate counterfactual regrets `r^H(I, z)` and `r^L(Iz, a)` from the
/// recursive values, summed over `h ∈ I` with weight `π_{−i}(h)`.
pub fn immediate_regrets<S: Scalar>(tree: &GameTree, profile: &TreeProfile<S>) -> TreeRegrets<S> {
    let r = reach(tree, profile);
    let v = traverse_values(tree, profile);
    immediate_regrets_with(tree, &r, &v)
}

pub fn immediate_regrets_with<S: Scalar>(tree: &GameTree, reach: &Reach<S>, values: &ValueCache<S>) -> TreeRegrets<S> {
    let mut out = TreeRegrets::zeros(tree);
    for iset in &tree.infosets {
        let p = iset.player;
        let sg = sign::<S>(p);
        let (nz, na) = (iset.num_options, iset.num_actions());
        for &h in &iset.nodes {
            let h = h as usize;
            let w = reach.others(p, h) * sg;
            if w == S::zero() {
                continue;
            }
            let node = tree.nodes[h];
            let vh = values.high[h];
            for z in 0..nz {
                let vl = values.low[node.slot as usize + z];
                out.high[iset.high_offset + z] += w * (vl - vh);
                for a in 0..na {
                    let child = node.first_child as usize + z * na + a;
                    out.low[iset.low_offset + z * na + a] += w * (values.high[child] - vl);
                }
            }
        }
    }
    out
}

/// Regrets computed straight from the counterfactual-deviation definition: for
/// each `h ∈ I`, enumerate every terminal below it under `σ|_{I→z}` and
/// `σ|_{Iz→a}` and difference the payoffs. Exhaustive; for small trees only.
pub fn definitional_regret_oracle<S: Scalar>(tree: &GameTree, profile: &TreeProfile<S>) -> TreeRegrets<S> {
    let mut out = TreeRegrets::zeros(tree);
    for (id, iset) in tree.infosets.iter().enumerate() {
        let p = iset.player;
        let (nz, na) = (iset.num_options, iset.num_actions());
        for &h in &iset.nodes {
            let h = h as usize;
            let w = path_reach_excluding(tree, profile, h, p);
            if w == S::zero() {
                continue;
            }
            let base = sign::<S>(p) * subtree_payoff(tree, profile, h, None);
            for z in 0..nz {
                let force_z = Override { iset: id, z, a: None };
                let with_z = sign::<S>(p) * subtree_payoff(tree, profile, h, Some(force_z));
                out.high[iset.high_offset + z] += w * (with_z - base);
                for a in 0..na {
                    let force_za = Override { iset: id, z, a: Some(a) };
                    let with_za = sign::<S>(p) * subtree_payoff(tree, profile, h, Some(force_za));
                    out.low[iset.low_offset + z * na + a] += w * (with_za - with_z);
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy)]
struct Override {
    iset: usize,
    z: usize,
    a: Option<usize>,
}

/// Product of chance and opponent probabilities on the path to `node`.
fn path_reach_excluding<S: Scalar>(tree: &GameTree, profile: &TreeProfile<S>, node: usize, player: usize) -> S {
    let mut w = S::one();
    let mut n = node;
    while tree.nodes[n].parent != crate::game::NO_PARENT {
        let parent = tree.nodes[n].parent as usize;
        let pn = tree.nodes[parent];
        let off = n - pn.first_child as usize;
        match pn.kind {
            NodeKind::Chance => w /= S::from_count(pn.num_children as usize),
            NodeKind::Decision { player: q, infoset } if q as usize != player => {
                let iset = infoset as usize;
                let na = tree.infosets[iset].num_actions();
                let (z, a) = (off / na, off % na);
                w *= profile.high_at(tree, iset)[z] * profile.low_at(tree, iset, z)[a];
            }
            _ => {}
        }
        n = parent;
    }
    w
}

/// `Σ_{h′ ⊒ h} π(h, h′)·u_1(h′)` by explicit enumeration.
fn subtree_payoff<S: Scalar>(tree: &GameTree, profile: &TreeProfile<S>, node: usize, ov: Option<Override>) -> S {
    let n = tree.nodes[node];
    match n.kind {
        NodeKind::Terminal { u1 } => S::from_chips(u1),
        NodeKind::Chance => {
            let pc = S::one() / S::from_count(n.num_children as usize);
            n.children().map(|c| pc * subtree_payoff(tree, profile, c, ov)).sum()
        }
        NodeKind::Decision { infoset, .. } => {
            let iset = infoset as usize;
            let (nz, na) = tree.shape(node);
            let mut total = S::zero();
            for z in 0..nz {
                for a in 0..na {
                    let prob = match ov {
                        Some(o) if o.iset == iset => {
                            let pz = if z == o.z { S::one() } else { S::zero() };
                            let pa = match o.a {
                                Some(fa) if z == o.z => {
                                    if a == fa {
                                        S::one()
                                    } else {
                                        S::zero()
                                    }
                                }
                                _ => profile.low_at(tree, iset, z)[a],
                            };
                            pz * pa
                        }
                        _ => profile.high_at(tree, iset)[z] * profile.low_at(tree, iset, z)[a],
                    };
                    if prob != S::zero() {
                        total += prob * subtree_payoff(tree, profile, n.first_child as usize + z * na + a, ov);
                    }
                }
            }
            total
        }
    }
}

/// Settings for [`TabularHcfr`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcfrOptions {
    pub mode: RegretMode,
    /// Evaluate metrics every this many iterations; 0 disables.
    pub log_every: usize,
    /// Track average overall regret and the regret bounds (needs extra
    /// per-iteration work).
    pub track_regret: bool,
    pub node_budget: usize,
}

impl Default for HcfrOptions {
    fn default() -> Self {
        HcfrOptions {
            mode: RegretMode::Uniform,
            log_every: 1,
            track_regret: true,
            node_budget: crate::game::DEFAULT_NODE_BUDGET,
        }
    }
}

/// One metrics row. Regret-related fields are `None` when not tracked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub exploitability_chips: f64,
    pub exploitability_mbbg: f64,
    pub rfull: Option<[f64; 2]>,
    pub regret_sum_bound: Option<[f64; 2]>,
    pub rate_bound: Option<[f64; 2]>,
}

/// Tabular HCFR state: cumulative (averaged) regrets, average-strategy accumulators and
/// the current iterate.
pub struct TabularHcfr<S> {
    tree: GameTree,
    evaluator: Evaluator<S>,
    options: HcfrOptions,
    regrets: TreeRegrets<S>,
    current: TreeProfile<S>,
    avg_high_num: Vec<S>,
    avg_high_den: Vec<S>,
    avg_low_num: Vec<S>,
    avg_low_den: Vec<S>,
    overall: Option<OverallRegret<S>>,
    t: usize,
}

impl<S: Scalar> TabularHcfr<S> {
    pub fn new(config: &GameConfig, options: HcfrOptions) -> Result<Self> {
        let tree = GameTree::build_with_budget(config, TreeMode::Hierarchical, options.node_budget)?;
        let evaluator = Evaluator::new(config)?;
        let overall = options.track_regret.then(|| OverallRegret::new(&tree, evaluator.base_tree()));
        let slots = tree.infosets.iter().map(|i| i.num_options).sum::<usize>();
        Ok(TabularHcfr {
            regrets: TreeRegrets::zeros(&tree),
            current: TreeProfile::uniform(&tree),
            avg_high_num: vec![S::zero(); tree.high_len()],
            avg_high_den: vec![S::zero(); tree.infosets.len()],
            avg_low_num: vec![S::zero(); tree.low_len()],
            avg_low_den: vec![S::zero(); slots],
            overall,
            evaluator,
            options,
            tree,
            t: 0,
        })
    }

    pub fn tree(&self) -> &GameTree {
        &self.tree
    }

    pub fn evaluator(&self) -> &Evaluator<S> {
        &self.evaluator
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    /// `σ^{t+1}`, the strategy the next iteration will play.
    pub fn current(&self) -> &TreeProfile<S> {
        &self.current
    }

    /// Running-average regrets `R^T`.
    pub fn cumulative_regrets(&self) -> &TreeRegrets<S> {
        &self.regrets
    }

    /// One iteration; returns the immediate regrets `r^t` of the profile just
    /// played.
    pub fn iterate(&mut self) -> TreeRegrets<S> {
        self.t += 1;
        let sigma = &self.current;
        let reach = reach(&self.tree, sigma);
        let values = traverse_values(&self.tree, sigma);
        let r = immediate_regrets_with(&self.tree, &reach, &values);

        let inv_t = S::one() / S::from_count(self.t);
        for (acc, &x) in self.regrets.high.iter_mut().zip(&r.high) {
            *acc += (x - *acc) * inv_t;
        }
        for (acc, &x) in self.regrets.low.iter_mut().zip(&r.low) {
            *acc += (x - *acc) * inv_t;
        }

        let mut low_slot = 0;
        for (id, iset) in self.tree.infosets.iter().enumerate() {
            let w = own_reach(&self.tree, &reach, id);
            let na = iset.num_actions();
            let high = sigma.high_at(&self.tree, id);
            self.avg_high_den[id] += w;
            for (z, &pz) in high.iter().enumerate() {
                self.avg_high_num[iset.high_offset + z] += w * pz;
                let wz = w * pz;
                self.avg_low_den[low_slot + z] += wz;
                for (a, &pa) in sigma.low_at(&self.tree, id, z).iter().enumerate() {
                    self.avg_low_num[iset.low_offset + z * na + a] += wz * pa;
                }
            }
            low_slot += iset.num_options;
        }

        if let Some(o) = self.overall.as_mut() {
            o.record(&self.tree, &reach, values.high[0]);
        }

        self.current = self.next_profile();
        r
    }

    /// Normalized reach-weighted average; unreached sets are uniform.
    pub fn average(&self) -> TreeProfile<S> {
        let mut p = TreeProfile::uniform(&self.tree);
        let mut low_slot = 0;
        for (id, iset) in self.tree.infosets.iter().enumerate() {
            let (nz, na) = (iset.num_options, iset.num_actions());
            let den = self.avg_high_den[id];
            if den > S::zero() {
                for z in 0..nz {
                    p.high[iset.high_offset + z] = self.avg_high_num[iset.high_offset + z] / den;
                }
            }
            for z in 0..nz {
                let den = self.avg_low_den[low_slot + z];
                if den > S::zero() {
                    for a in 0..na {
                        let o = iset.low_offset + z * na + a;
                        p.low[o] = self.avg_low_num[o] / den;
                    }
                }
            }
            low_slot += nz;
        }
        p
    }

    /// `R_full,i` of the iterates so far, if tracked.
    pub fn overall_regret(&self, player: usize) -> Option<S> {
        self.overall.as_ref().map(|o| o.value(player, self.evaluator.base_tree()))
    }

    pub fn regret_sum_bound(&self, player: usize) -> S {
        eval::regret_sum_bound(&self.tree, &self.regrets, player)
    }

    pub fn rate_bound(&self, player: usize) -> f64 {
        eval::rate_bound(&self.tree, player, self.t.max(1))
    }

    pub fn metrics(&self) -> IterationMetrics {
        let avg = self.average();
        let ex = self.evaluator.exploitability(&avg.policy(&self.tree));
        let regret = self.overall.as_ref().map(|_| {
            [
                self.overall_regret(0).expect("tracked").as_f64(),
                self.overall_regret(1).expect("tracked").as_f64(),
            ]
        });
        IterationMetrics {
            iteration: self.t,
            exploitability_chips: ex.chips.as_f64(),
            exploitability_mbbg: ex.mbbg,
            rfull: regret,
            regret_sum_bound: regret.map(|_| [self.regret_sum_bound(0).as_f64(), self.regret_sum_bound(1).as_f64()]),
            rate_bound: regret.map(|_| [self.rate_bound(0), self.rate_bound(1)]),
        }
    }
}

impl<S: Scalar> TabularHcfr<S> {
    pub fn snapshot(&self) -> TabularSnapshot {
        let f = |v: &[S]| v.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
        let cfg = self.tree.config().clone();
        TabularSnapshot {
            game_hash: cfg.hash(),
            game: cfg,
            iteration: self.t,
            regrets_high: f(&self.regrets.high),
            regrets_low: f(&self.regrets.low),
            avg_high_num: f(&self.avg_high_num),
            avg_high_den: f(&self.avg_high_den),
            avg_low_num: f(&self.avg_low_num),
            avg_low_den: f(&self.avg_low_den),
            overall: self.overall.as_ref().map(|o| o.state()),
        }
    }

    /// Continues a saved run; later iterates match an uninterrupted one.
    pub fn restore(snapshot: &TabularSnapshot, options: HcfrOptions) -> Result<Self> {
        if snapshot.game.hash() != snapshot.game_hash {
            return Err(HcfrError::Artifact("checkpoint game hash does not match its config".into()));
        }
        let mut s = Self::new(&snapshot.game, options)?;
        let load = |dst: &mut Vec<S>, src: &[f64], what: &str| -> Result<()> {
            if dst.len() != src.len() {
                return Err(HcfrError::Artifact(format!("checkpoint {what} has {} entries, tree needs {}", src.len(), dst.len())));
            }
            *dst = src.iter().map(|&x| S::lit(x)).collect();
            Ok(())
        };
        load(&mut s.regrets.high, &snapshot.regrets_high, "high regrets")?;
        load(&mut s.regrets.low, &snapshot.regrets_low, "low regrets")?;
        load(&mut s.avg_high_num, &snapshot.avg_high_num, "high average")?;
        load(&mut s.avg_high_den, &snapshot.avg_high_den, "high average")?;
        load(&mut s.avg_low_num, &snapshot.avg_low_num, "low average")?;
        load(&mut s.avg_low_den, &snapshot.avg_low_den, "low average")?;
        if let (Some(o), Some((env, sum, n))) = (s.overall.as_mut(), &snapshot.overall) {
            o.set_state(env, *sum, *n)?;
        }
        s.t = snapshot.iteration;
        s.current = s.next_profile();
        Ok(s)
    }

    fn next_profile(&self) -> TreeProfile<S> {
        let mut next = TreeProfile::uniform(&self.tree);
        for iset in &self.tree.infosets {
            let (hs, nz) = (iset.high_offset, iset.num_options);
            regret_match_into(&self.regrets.high[hs..hs + nz], self.options.mode, &mut next.high[hs..hs + nz]);
            let na = iset.num_actions();
            for z in 0..nz {
                let o = iset.low_offset + z * na;
                regret_match_into(&self.regrets.low[o..o + na], self.options.mode, &mut next.low[o..o + na]);
            }
        }
        next
    }
}

/// Serializable [`TabularHcfr`] state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularSnapshot {
    pub game: GameConfig,
    pub game_hash: String,
    pub iteration: usize,
    pub regrets_high: Vec<f64>,
    pub regrets_low: Vec<f64>,
    pub avg_high_num: Vec<f64>,
    pub avg_high_den: Vec<f64>,
    pub avg_low_num: Vec<f64>,
    pub avg_low_den: Vec<f64>,
    #[allow(clippy::type_complexity)]
    pub overall: Option<([Vec<f64>; 2], f64, usize)>,
}

/// `π_i(I)`: the acting player's own probability of reaching `I`.
///
/// Keys remember only the previous option, so members of `I` may differ in
/// the player's earlier options. Every combination of those options appears
/// once per combination of everything else, so the total own mass equals the
/// member mean of `π_i(h)` times the number of such combinations. Under
/// perfect recall that factor is 1 and this is just `π_i(h)`.
pub fn own_reach<S: Scalar>(tree: &GameTree, reach: &Reach<S>, iset: usize) -> S {
    let i = &tree.infosets[iset];
    let sum: S = i.nodes.iter().map(|&n| reach.player[i.player][n as usize]).sum();
    let variants = i.num_options.pow(i.own_moves.saturating_sub(1) as u32);
    sum * S::from_count(variants) / S::from_count(i.nodes.len())
}

/// Runs `iterations` steps of tabular HCFR; returns the reach-weighted average profile
/// and the metrics rows logged every `options.log_every` iterations (plus the
/// last).
pub fn run_hcfr<S: Scalar>(
    config: &GameConfig,
    iterations: usize,
    options: HcfrOptions,
) -> Result<(StrategyProfile<S>, Vec<IterationMetrics>)> {
    let mut solver = TabularHcfr::<S>::new(config, options)?;
    let mut rows = Vec::new();
    for t in 1..=iterations {
        solver.iterate();
        let log = options.log_every > 0 && (t % options.log_every == 0 || t == iterations);
        if log {
            rows.push(solver.metrics());
        }
    }
    Ok((solver.average().to_profile(solver.tree()), rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_profile(tree: &GameTree, rng: &mut ChaCha8Rng) -> TreeProfile<f64> {
        let mut p = TreeProfile::uniform(tree);
        for iset in &tree.infosets {
            let nz = iset.num_options;
            let na = iset.num_actions();
            let h: Vec<f64> = (0..nz).map(|_| rng.random::<f64>() + 0.05).collect();
            let s: f64 = h.iter().sum();
            for z in 0..nz {
                p.high[iset.high_offset + z] = h[z] / s;
                let l: Vec<f64> = (0..na).map(|_| rng.random::<f64>() + 0.05).collect();
                let s: f64 = l.iter().sum();
                for a in 0..na {
                    p.low[iset.low_offset + z * na + a] = l[a] / s;
                }
            }
        }
        p
    }

    #[test]
    fn terminal_values_are_utilities() {
        let tree = GameTree::build(&GameConfig::kuhn(2), TreeMode::Hierarchical).unwrap();
        let v = traverse_values(&tree, &TreeProfile::<f64>::uniform(&tree));
        for t in tree.terminals() {
            assert_eq!(v.high[t], tree.u1(t) as f64);
        }
    }

    #[test]
    fn root_value_matches_terminal_enumeration() {
        let tree = GameTree::build(&GameConfig::kuhn(2), TreeMode::Hierarchical).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_profile(&tree, &mut rng);
        let r = reach(&tree, &p);
        let enumerated: f64 = tree.terminals().map(|t| r.total(t) * tree.u1(t) as f64).sum();
        let v = traverse_values(&tree, &p);
        assert!((v.high[0] - enumerated).abs() < 1e-12);
    }

    #[test]
    fn value_consistency_at_every_node() {
        let tree = GameTree::build(&GameConfig::kuhn(3), TreeMode::Hierarchical).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_profile(&tree, &mut rng);
        let v = traverse_values(&tree, &p);
        for (id, node) in tree.nodes.iter().enumerate() {
            if let NodeKind::Decision { infoset, .. } = node.kind {
                let mix: f64 = p
                    .high_at(&tree, infoset as usize)
                    .iter()
                    .enumerate()
                    .map(|(z, pz)| pz * v.low_at(&tree, id, z))
                    .sum();
                assert!((mix - v.high[id]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn best_response_has_no_positive_high_regret() {
        // Player 1 holding K facing a bet: calling is dominant.
        let tree = GameTree::build(&GameConfig::kuhn(2), TreeMode::Hierarchical).unwrap();
        let mut p = TreeProfile::<f64>::uniform(&tree);
        for iset in &tree.infosets {
            if iset.key.as_str().starts_with("p1|K||cr") {
                for z in 0..2 {
                    p.low[iset.low_offset + z * 2] = 0.0;
                    p.low[iset.low_offset + z * 2 + 1] = 1.0;
                }
            }
        }
        let r = immediate_regrets(&tree, &p);
        for (id, iset) in tree.infosets.iter().enumerate() {
            if iset.key.as_str().starts_with("p1|K||cr") {
                assert!(r.high_at(&tree, id).iter().all(|&x| x <= 1e-12));
                assert!(r.low_at(&tree, id, 0).iter().all(|&x| x <= 1e-12));
            }
        }
    }

    #[test]
    fn recursive_matches_definitional_on_kuhn() {
        let tree = GameTree::build(&GameConfig::kuhn(2), TreeMode::Hierarchical).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let p = random_profile(&tree, &mut rng);
            let a = immediate_regrets(&tree, &p);
            let b = definitional_regret_oracle(&tree, &p);
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn single_option_has_zero_high_regret() {
        let tree = GameTree::build(&GameConfig::kuhn(1), TreeMode::Hierarchical).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = definitional_regret_oracle(&tree, &random_profile(&tree, &mut rng));
        assert!(r.high.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn unreached_infoset_has_zero_regret() {
        // Player 1 never bets, so player 2's infosets after a bet are unreached.
        let tree = GameTree::build(&GameConfig::kuhn(2), TreeMode::Hierarchical).unwrap();
        let mut p = TreeProfile::<f64>::uniform(&tree);
        for iset in tree.infosets.iter().filter(|i| i.player == 0 && i.key.actions().is_empty()) {
            for z in 0..2 {
                p.low[iset.low_offset + z * 2] = 1.0;
                p.low[iset.low_offset + z * 2 + 1] = 0.0;
            }
        }
        let r = definitional_regret_oracle(&tree, &p);
        for (id, iset) in tree.infosets.iter().enumerate() {
            if iset.key.actions() == "r" {
                assert!(r.high_at(&tree, id).iter().all(|&x| x == 0.0));
                assert!(r.low_at(&tree, id, 1).iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn own_reach_is_member_reach_under_perfect_recall() {
        let tree = GameTree::build(&GameConfig::kuhn(2), TreeMode::Hierarchical).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_profile(&tree, &mut rng);
        let r = reach(&tree, &p);
        for (id, iset) in tree.infosets.iter().enumerate() {
            let first = r.player[iset.player][iset.nodes[0] as usize];
            assert!((own_reach(&tree, &r, id) - first).abs() < 1e-12);
        }
    }

    #[test]
    fn runs_in_single_precision() {
        let (avg, rows) = run_hcfr::<f32>(
            &GameConfig::kuhn(2),
            200,
            HcfrOptions {
                log_every: 200,
                ..HcfrOptions::default()
            },
        )
        .unwrap();
        assert!(avg.max_normalization_error() < 1e-5);
        assert!(rows.last().unwrap().exploitability_chips < 0.1);
    }

    #[test]
    fn snapshot_resume_is_exact() {
        let cfg = GameConfig::kuhn(2);
        let mut full = TabularHcfr::<f64>::new(&cfg, HcfrOptions::default()).unwrap();
        let mut half = TabularHcfr::<f64>::new(&cfg, HcfrOptions::default()).unwrap();
        for _ in 0..10 {
            full.iterate();
        }
        for _ in 0..5 {
            half.iterate();
        }
        let json = serde_json::to_string(&half.snapshot()).unwrap();
        let mut resumed = TabularHcfr::<f64>::restore(&serde_json::from_str(&json).unwrap(), HcfrOptions::default()).unwrap();
        for _ in 0..5 {
            resumed.iterate();
        }
        assert_eq!(full.snapshot(), resumed.snapshot());
        assert_eq!(full.metrics(), resumed.metrics());
    }
}
