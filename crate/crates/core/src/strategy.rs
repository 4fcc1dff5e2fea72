//! Regret matching, strategy tables and average-strategy accumulation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{HcfrError, Result};
use crate::game::{InfoKey, LowKey};
use crate::scalar::{uniform, Scalar};

/// Fallback when no regret is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegretMode {
    #[default]
    Uniform,
    /// One-hot on the largest regret, lowest index on ties.
    Greedy,
}

/// Regret matching into a caller-provided buffer of the same length.
pub fn regret_match_into<S: Scalar>(regrets: &[S], mode: RegretMode, out: &mut [S]) {
    debug_assert_eq!(regrets.len(), out.len());
    debug_assert!(!regrets.is_empty());
    let mut total = S::zero();
    for (o, &r) in out.iter_mut().zip(regrets) {
        *o = r.max(S::zero());
        total += *o;
    }
    if total > S::zero() {
        for o in out.iter_mut() {
            *o /= total;
        }
        return;
    }
    match mode {
        RegretMode::Uniform => {
            let u = S::one() / S::from_count(out.len());
            out.fill(u);
        }
        RegretMode::Greedy => {
            let mut best = 0;
            for (i, &r) in regrets.iter().enumerate() {
                if r > regrets[best] {
                    best = i;
                }
            }
            out.fill(S::zero());
            out[best] = S::one();
        }
    }
}

/// Next strategy from cumulative regrets: proportional to positive parts, else
/// the mode's fallback.
pub fn regret_match<S: Scalar>(regrets: &[S], mode: RegretMode) -> Result<Vec<S>> {
    if regrets.is_empty() {
        return Err(HcfrError::Solver("regret_match on an empty vector".into()));
    }
    let mut out = vec![S::zero(); regrets.len()];
    regret_match_into(regrets, mode, &mut out);
    Ok(out)
}

/// Read access to a hierarchical strategy. Unknown keys must resolve to a
/// valid distribution of the requested length.
pub trait Policy<S: Scalar>: Sync {
    /// `σ^H(·|I)` over `num_options` options.
    fn high(&self, key: &InfoKey, num_options: usize) -> Vec<S>;
    /// `σ^L(·|I, z)` over `num_actions` actions.
    fn low(&self, key: &InfoKey, z: usize, num_actions: usize) -> Vec<S>;
}

impl<S: Scalar, P: Policy<S> + ?Sized> Policy<S> for &P {
    fn high(&self, key: &InfoKey, num_options: usize) -> Vec<S> {
        (**self).high(key, num_options)
    }
    fn low(&self, key: &InfoKey, z: usize, num_actions: usize) -> Vec<S> {
        (**self).low(key, z, num_actions)
    }
}

/// Uniform over every legal set.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPolicy;

impl<S: Scalar> Policy<S> for UniformPolicy {
    fn high(&self, _: &InfoKey, n: usize) -> Vec<S> {
        uniform(n)
    }
    fn low(&self, _: &InfoKey, _: usize, n: usize) -> Vec<S> {
        uniform(n)
    }
}

/// Per-key high and low tables for both players; missing keys read uniform.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrategyProfile<S> {
    pub high: HashMap<InfoKey, Vec<S>>,
    pub low: HashMap<LowKey, Vec<S>>,
}

impl<S: Scalar> StrategyProfile<S> {
    pub fn new() -> Self {
        StrategyProfile {
            high: HashMap::new(),
            low: HashMap::new(),
        }
    }

    /// Largest deviation of any stored vector from being a distribution.
    pub fn max_normalization_error(&self) -> f64 {
        self.high
            .values()
            .chain(self.low.values())
            .map(|v| {
                let neg = v.iter().map(|x| (-x.as_f64()).max(0.0)).fold(0.0, f64::max);
                let sum: f64 = v.iter().map(|x| x.as_f64()).sum();
                neg.max((sum - 1.0).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Joint `σ(z, a|I) = σ^H(z|I)·σ^L(a|I, z)`.
    pub fn joint(&self, key: &InfoKey, num_options: usize, num_actions: usize) -> Vec<S> {
        let h = self.high(key, num_options);
        let mut out = Vec::with_capacity(num_options * num_actions);
        for (z, &pz) in h.iter().enumerate() {
            out.extend(self.low(key, z, num_actions).into_iter().map(|pa| pz * pa));
        }
        out
    }

    pub fn cast<T: Scalar>(&self) -> StrategyProfile<T> {
        let conv = |v: &Vec<S>| v.iter().map(|x| T::lit(x.as_f64())).collect();
        StrategyProfile {
            high: self.high.iter().map(|(k, v)| (k.clone(), conv(v))).collect(),
            low: self.low.iter().map(|(k, v)| (k.clone(), conv(v))).collect(),
        }
    }
}

impl<S: Scalar> Policy<S> for StrategyProfile<S> {
    fn high(&self, key: &InfoKey, n: usize) -> Vec<S> {
        match self.high.get(key) {
            Some(v) if v.len() == n => v.clone(),
            _ => uniform(n),
        }
    }

    fn low(&self, key: &InfoKey, z: usize, n: usize) -> Vec<S> {
        match self.low.get(&LowKey::new(key.clone(), z)) {
            Some(v) if v.len() == n => v.clone(),
            _ => uniform(n),
        }
    }
}

/// Cumulative regrets per key with the iteration counter `T`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretStore<S> {
    pub high: HashMap<InfoKey, Vec<S>>,
    pub low: HashMap<LowKey, Vec<S>>,
    pub iterations: u64,
}

impl<S: Scalar> RegretStore<S> {
    pub fn new() -> Self {
        RegretStore {
            high: HashMap::new(),
            low: HashMap::new(),
            iterations: 0,
        }
    }

    pub fn add_high(&mut self, key: &InfoKey, r: &[S]) {
        add_into(self.high.entry(key.clone()).or_insert_with(|| vec![S::zero(); r.len()]), r);
    }

    pub fn add_low(&mut self, key: &LowKey, r: &[S]) {
        add_into(self.low.entry(key.clone()).or_insert_with(|| vec![S::zero(); r.len()]), r);
    }

    /// Regret-matched view; keys are matched lazily on lookup.
    pub fn policy(&self, mode: RegretMode) -> RegretPolicy<'_, S> {
        RegretPolicy { store: self, mode }
    }
}

fn add_into<S: Scalar>(acc: &mut [S], r: &[S]) {
    assert_eq!(acc.len(), r.len(), "regret vector length changed for a key");
    for (a, &x) in acc.iter_mut().zip(r) {
        *a += x;
    }
}

/// [`Policy`] that applies regret matching to a [`RegretStore`] on demand.
#[derive(Debug, Clone, Copy)]
pub struct RegretPolicy<'a, S> {
    store: &'a RegretStore<S>,
    mode: RegretMode,
}

impl<S: Scalar> Policy<S> for RegretPolicy<'_, S> {
    fn high(&self, key: &InfoKey, n: usize) -> Vec<S> {
        match self.store.high.get(key) {
            Some(r) => regret_match(r, self.mode).expect("stored regrets are non-empty"),
            None => regret_match(&vec![S::zero(); n], self.mode).expect("n > 0"),
        }
    }

    fn low(&self, key: &InfoKey, z: usize, n: usize) -> Vec<S> {
        match self.store.low.get(&LowKey::new(key.clone(), z)) {
            Some(r) => regret_match(r, self.mode).expect("stored regrets are non-empty"),
            None => regret_match(&vec![S::zero(); n], self.mode).expect("n > 0"),
        }
    }
}

/// Materializes regret matching at every stored key.
pub fn strategy_from_regrets<S: Scalar>(store: &RegretStore<S>, mode: RegretMode) -> StrategyProfile<S> {
    let rm = |r: &Vec<S>| regret_match(r, mode).expect("stored regrets are non-empty");
    StrategyProfile {
        high: store.high.iter().map(|(k, r)| (k.clone(), rm(r))).collect(),
        low: store.low.iter().map(|(k, r)| (k.clone(), rm(r))).collect(),
    }
}

/// Reach-weighted numerators and denominators of the average strategy.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AvgStrategyAccumulator<S> {
    pub high: HashMap<InfoKey, (Vec<S>, S)>,
    pub low: HashMap<LowKey, (Vec<S>, S)>,
}

impl<S: Scalar> AvgStrategyAccumulator<S> {
    pub fn new() -> Self {
        AvgStrategyAccumulator {
            high: HashMap::new(),
            low: HashMap::new(),
        }
    }

    /// Adds `reach_i·σ^H(·|I)` and, for each option, `reach_i·σ^H(z|I)·σ^L(·|I, z)`.
    /// `low[z]` is the low-level distribution of option `z`.
    pub fn accumulate(&mut self, key: &InfoKey, reach_i: S, high: &[S], low: &[Vec<S>]) {
        debug_assert!(reach_i >= S::zero());
        accumulate_entry(self.high.entry(key.clone()), reach_i, high);
        for (z, (l, &pz)) in low.iter().zip(high).enumerate() {
            accumulate_entry(self.low.entry(LowKey::new(key.clone(), z)), reach_i * pz, l);
        }
    }

    /// Componentwise sum; order independent.
    pub fn merge(&mut self, other: &AvgStrategyAccumulator<S>) {
        fn merge_map<K: Clone + Eq + std::hash::Hash, S: Scalar>(
            into: &mut HashMap<K, (Vec<S>, S)>,
            from: &HashMap<K, (Vec<S>, S)>,
        ) {
            for (k, (num, den)) in from {
                let e = into
                    .entry(k.clone())
                    .or_insert_with(|| (vec![S::zero(); num.len()], S::zero()));
                add_into(&mut e.0, num);
                e.1 += *den;
            }
        }
        merge_map(&mut self.high, &other.high);
        merge_map(&mut self.low, &other.low);
    }

    /// Numerator over denominator per key; zero denominators give uniform.
    pub fn normalized_average(&self) -> StrategyProfile<S> {
        fn norm<S: Scalar>((num, den): &(Vec<S>, S)) -> Vec<S> {
            if *den > S::zero() {
                num.iter().map(|&x| x / *den).collect()
            } else {
                uniform(num.len())
            }
        }
        StrategyProfile {
            high: self.high.iter().map(|(k, e)| (k.clone(), norm(e))).collect(),
            low: self.low.iter().map(|(k, e)| (k.clone(), norm(e))).collect(),
        }
    }
}

fn accumulate_entry<K, S: Scalar>(entry: std::collections::hash_map::Entry<'_, K, (Vec<S>, S)>, w: S, sigma: &[S]) {
    let e = entry.or_insert_with(|| (vec![S::zero(); sigma.len()], S::zero()));
    for (n, &p) in e.0.iter_mut().zip(sigma) {
        *n += w * p;
    }
    e.1 += w;
}
