//! History baselines `b(h, z, a)`, keyed by the child history `hza`.
//!
//! The option-level baseline `b(h, z) = Σ_a σ^L(a|I(h), z)·b(h, z, a)` is
//! never stored; rollouts derive it from the strategy they are sampling.

use std::collections::HashMap;

use crate::game::{GameTree, HistoryKey, LowKey};
use crate::sampler::Trajectory;
use crate::scalar::{dot, uniform, Scalar};
use crate::strategy::Policy;
use crate::tabular::ValueCache;

pub trait Baseline<S>: Sync {
    /// `b(h, z, a)` for the history `hza`.
    fn value(&self, child: &HistoryKey) -> S;
}

impl<S: Scalar, B: Baseline<S> + ?Sized> Baseline<S> for &B {
    fn value(&self, child: &HistoryKey) -> S {
        (**self).value(child)
    }
}

/// `b ≡ 0`, plain outcome sampling.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroBaseline;

impl<S: Scalar> Baseline<S> for ZeroBaseline {
    fn value(&self, _child: &HistoryKey) -> S {
        S::zero()
    }
}

/// Per-history mean of recorded targets.
///
/// With a nonzero `prior`, a history's mean is shrunk toward the pooled mean
/// of all histories sharing its cards and actions, as if `prior` extra
/// samples of that pooled mean had been seen. Sparse or unseen histories
/// then read a sensible value instead of 0. Unseen keys with no pooled data
/// read 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BaselineStore<S> {
    entries: HashMap<HistoryKey, (S, u64)>,
    pooled: HashMap<Vec<u8>, (S, u64)>,
    prior: u64,
}

impl<S: Scalar> BaselineStore<S> {
    pub fn new() -> Self {
        Self::with_prior(0)
    }

    pub fn with_prior(prior: u64) -> Self {
        BaselineStore {
            entries: HashMap::new(),
            pooled: HashMap::new(),
            prior,
        }
    }

    pub fn prior(&self) -> u64 {
        self.prior
    }

    fn pool(&mut self, child: &HistoryKey, sum: S, n: u64) {
        if self.prior > 0 {
            let e = self.pooled.entry(child.base().to_vec()).or_insert((S::zero(), 0));
            e.0 += sum;
            e.1 += n;
        }
    }

    fn repool(&mut self) {
        self.pooled.clear();
        // Sorted, so float sums do not depend on hash order.
        for (k, s, n) in self.to_sorted() {
            self.pool(&k, s, n);
        }
    }

    pub fn record(&mut self, child: HistoryKey, target: S) {
        self.pool(&child, target, 1);
        let e = self.entries.entry(child).or_insert((S::zero(), 0));
        e.0 += target;
        e.1 += 1;
    }

    /// Fixes `b(h, z, a)` to a value, replacing any recorded targets.
    pub fn set(&mut self, child: HistoryKey, value: S) {
        if let Some((s, n)) = self.entries.insert(child.clone(), (value, 1)) {
            if let Some(p) = self.pooled.get_mut(child.base()) {
                p.0 -= s;
                p.1 -= n;
            }
        }
        self.pool(&child, value, 1);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn visits(&self, child: &HistoryKey) -> u64 {
        self.entries.get(child).map_or(0, |e| e.1)
    }

    /// Raw per-history means, ignoring the prior.
    pub fn iter(&self) -> impl Iterator<Item = (&HistoryKey, S, u64)> {
        self.entries.iter().map(|(k, &(s, n))| (k, s / S::from_count(n as usize), n))
    }

    /// Entries as `(key, sum, count)` sorted by key, for checkpoints.
    pub fn to_sorted(&self) -> Vec<(HistoryKey, S, u64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(k, &(s, n))| (k.clone(), s, n)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    pub fn from_sorted(entries: Vec<(HistoryKey, S, u64)>, prior: u64) -> Self {
        let mut store = BaselineStore {
            entries: entries.into_iter().map(|(k, s, n)| (k, (s, n))).collect(),
            pooled: HashMap::new(),
            prior,
        };
        store.repool();
        store
    }

    /// Merges a fresh fit into this store. Each key keeps its old mean with
    /// the weight of at most `memory` samples, so stale targets fade once
    /// new ones arrive; `memory = 0` replaces seen keys outright.
    pub fn absorb(&mut self, fresh: BaselineStore<S>, memory: u64) {
        for (k, (sum, n)) in fresh.entries {
            let e = self.entries.entry(k).or_insert((S::zero(), 0));
            let kept = e.1.min(memory);
            let old = if e.1 == 0 { S::zero() } else { e.0 / S::from_count(e.1 as usize) * S::from_count(kept as usize) };
            *e = (old + sum, kept + n);
        }
        self.repool();
    }

    /// The oracle baseline `b(h, z, a) = v^H(hza)` from exact values.
    pub fn from_values(tree: &GameTree, values: &ValueCache<S>) -> Self {
        let mut store = Self::new();
        for n in 1..tree.nodes.len() {
            store.set(tree.history_key(n), values.high[n]);
        }
        store
    }
}

impl<S: Scalar> Baseline<S> for BaselineStore<S> {
    fn value(&self, child: &HistoryKey) -> S {
        let own = self.entries.get(child).copied();
        if self.prior == 0 {
            return own.map_or(S::zero(), |(s, n)| s / S::from_count(n as usize));
        }
        let pooled = match self.pooled.get(child.base()) {
            Some(&(s, n)) if n > 0 => s / S::from_count(n as usize),
            _ => S::zero(),
        };
        let (s, n) = own.unwrap_or((S::zero(), 0));
        let prior = S::from_count(self.prior as usize);
        (s + prior * pooled) / (S::from_count(n as usize) + prior)
    }
}

/// Sampled targets `b̂^{t+1}(hza | h′)` for every step of a trajectory,
/// root first.
///
/// Recurses backwards from `u_1(h′)`: sampled branches are importance
/// corrected toward the stored `b^t`, unsampled ones read `b^t`, and
/// options and actions are mixed with `next`, the strategy of the coming
/// iteration.
pub fn sampled_baseline_targets<S: Scalar>(traj: &Trajectory<S>, next: &(impl Policy<S> + ?Sized)) -> Vec<(HistoryKey, S)> {
    let mut out = Vec::with_capacity(traj.steps.len());
    let mut v = traj.terminal_u1;
    for step in traj.steps.iter().rev() {
        out.push((step.child.clone(), v));
        let (sigma_high, sigma_low) = match &step.info {
            None => (vec![S::one()], uniform(step.num_actions)),
            Some(info) => (
                next.high(info, step.baseline_high.len()),
                next.low(info, step.z, step.num_actions),
            ),
        };
        let low: Vec<S> = step
            .baseline_low
            .iter()
            .enumerate()
            .map(|(a, &b)| if a == step.a { b + (v - b) / step.q_action } else { b })
            .collect();
        let v_low = dot(&sigma_low, &low);
        let high: Vec<S> = step
            .baseline_high
            .iter()
            .enumerate()
            .map(|(z, &b)| if z == step.z { b + (v_low - b) / step.q_option } else { b })
            .collect();
        v = dot(&sigma_high, &high);
    }
    out.reverse();
    out
}

/// Fresh store for the next iteration: the per-key mean of all targets from
/// this iteration's trajectories.
pub fn fit_baseline<S: Scalar>(trajectories: &[Trajectory<S>], next: &(impl Policy<S> + ?Sized)) -> BaselineStore<S> {
    let mut store = BaselineStore::new();
    for traj in trajectories {
        for (k, target) in sampled_baseline_targets(traj, next) {
            store.record(k, target);
        }
    }
    store
}

/// `b(h, z) = Σ_a σ^L(a | I(h), z)·b(h, z, a)` given the children `hza`.
pub fn high_baseline<S: Scalar>(
    store: &(impl Baseline<S> + ?Sized),
    children: &[HistoryKey],
    sigma_low: &[S],
) -> S {
    children.iter().zip(sigma_low).map(|(k, &p)| p * store.value(k)).sum()
}

/// Convenience for callers holding an infoset: `b(h, z)` using `policy`.
pub fn high_baseline_at<S: Scalar>(
    store: &(impl Baseline<S> + ?Sized),
    policy: &(impl Policy<S> + ?Sized),
    key: &LowKey,
    children: &[HistoryKey],
) -> S {
    let sigma = policy.low(&key.info, key.z as usize, children.len());
    high_baseline(store, children, &sigma)
}
