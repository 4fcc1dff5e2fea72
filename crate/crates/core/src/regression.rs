//! Replay buffers and their closed-form tabular fit.
//!
//! The squared-loss minimizer over a buffer is the per-key mean of its
//! targets, so the regressor keeps a running sum and count per key. Entries
//! are absorbed in insertion order, which makes an incremental refit
//! bit-identical to fitting the whole buffer from scratch.

use std::collections::HashMap;
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::{uniform, Scalar};

/// Dense ids for keys in first-seen order.
#[derive(Debug, Clone)]
pub struct Interner<K> {
    ids: HashMap<K, u32>,
    keys: Vec<K>,
}

impl<K: PartialEq> PartialEq for Interner<K> {
    fn eq(&self, other: &Self) -> bool {
        self.keys == other.keys
    }
}

impl<K: Hash + Eq + Clone> Default for Interner<K> {
    fn default() -> Self {
        Interner {
            ids: HashMap::new(),
            keys: Vec::new(),
        }
    }
}

impl<K: Hash + Eq + Clone> Interner<K> {
    pub fn intern(&mut self, key: &K) -> u32 {
        if let Some(&id) = self.ids.get(key) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.ids.insert(key.clone(), id);
        self.keys.push(key.clone());
        id
    }

    pub fn get(&self, key: &K) -> Option<u32> {
        self.ids.get(key).copied()
    }

    pub fn key(&self, id: u32) -> &K {
        &self.keys[id as usize]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub key: u32,
    pub iteration: u32,
    offset: u32,
    len: u32,
}

#[derive(Debug, Clone)]
struct Reservoir {
    capacity: usize,
    seen: u64,
    rng: ChaCha8Rng,
}

/// Append-only buffer of `(key, iteration, vector)` entries with values in a
/// flat arena. With a reservoir capacity, it keeps a uniform sample of
/// everything pushed.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<K, S> {
    keys: Interner<K>,
    entries: Vec<Entry>,
    arena: Vec<S>,
    reservoir: Option<Reservoir>,
}

impl<K: Hash + Eq + Clone, S: Scalar> ReplayBuffer<K, S> {
    pub fn new() -> Self {
        ReplayBuffer {
            keys: Interner::default(),
            entries: Vec::new(),
            arena: Vec::new(),
            reservoir: None,
        }
    }

    pub fn with_reservoir(capacity: usize, seed: u64) -> Self {
        let mut b = Self::new();
        b.reservoir = Some(Reservoir {
            capacity,
            seen: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        });
        b
    }

    pub fn has_reservoir(&self) -> bool {
        self.reservoir.is_some()
    }

    pub fn push(&mut self, key: &K, iteration: usize, values: &[S]) {
        let id = self.keys.intern(key);
        if let Some(r) = self.reservoir.as_mut() {
            r.seen += 1;
            if self.entries.len() >= r.capacity {
                let j = r.rng.random_range(0..r.seen) as usize;
                if j < r.capacity {
                    let offset = self.arena.len() as u32;
                    self.arena.extend_from_slice(values);
                    self.entries[j] = Entry {
                        key: id,
                        iteration: iteration as u32,
                        offset,
                        len: values.len() as u32,
                    };
                    if self.arena.len() > 4 * (self.entries.len() * values.len()).max(64) {
                        self.compact();
                    }
                }
                return;
            }
        }
        let offset = self.arena.len() as u32;
        self.arena.extend_from_slice(values);
        self.entries.push(Entry {
            key: id,
            iteration: iteration as u32,
            offset,
            len: values.len() as u32,
        });
    }

    fn compact(&mut self) {
        let mut arena = Vec::with_capacity(self.entries.iter().map(|e| e.len as usize).sum());
        for e in &mut self.entries {
            let o = e.offset as usize;
            let vals = &self.arena[o..o + e.len as usize];
            e.offset = arena.len() as u32;
            arena.extend_from_slice(vals);
        }
        self.arena = arena;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self, e: &Entry) -> &[S] {
        &self.arena[e.offset as usize..(e.offset + e.len) as usize]
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn keys(&self) -> &Interner<K> {
        &self.keys
    }

    /// Iterates `(key, iteration, values)`.
    pub fn iter(&self) -> impl Iterator<Item = (&K, usize, &[S])> {
        self.entries
            .iter()
            .map(|e| (self.keys.key(e.key), e.iteration as usize, self.values(e)))
    }

    /// Drops stored entries, keeping key ids.
    pub fn clear(&mut self) {
        self.entries.clear();
        self.arena.clear();
    }
}

impl<K: Hash + Eq + Clone, S: Scalar> Default for ReplayBuffer<K, S> {
    fn default() -> Self {
        Self::new()
    }
}

/// Per-key running sum and count.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularRegressor<K, S> {
    keys: Interner<K>,
    sums: Vec<Vec<S>>,
    counts: Vec<u64>,
}

impl<K: Hash + Eq + Clone, S: Scalar> Default for TabularRegressor<K, S> {
    fn default() -> Self {
        TabularRegressor {
            keys: Interner::default(),
            sums: Vec::new(),
            counts: Vec::new(),
        }
    }
}

impl<K: Hash + Eq + Clone, S: Scalar> TabularRegressor<K, S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fit over a whole buffer.
    pub fn fit(buffer: &ReplayBuffer<K, S>) -> Self {
        let mut r = Self::new();
        r.absorb(buffer, 0);
        r
    }

    /// Adds buffer entries from index `from` on.
    pub fn absorb(&mut self, buffer: &ReplayBuffer<K, S>, from: usize) {
        for e in &buffer.entries()[from..] {
            self.add(buffer.keys().key(e.key), buffer.values(e));
        }
    }

    pub fn add(&mut self, key: &K, values: &[S]) {
        let id = self.keys.intern(key) as usize;
        if id == self.sums.len() {
            self.sums.push(vec![S::zero(); values.len()]);
            self.counts.push(0);
        }
        let sum = &mut self.sums[id];
        if sum.len() != values.len() {
            // A key's legal set never changes; reshape defensively.
            sum.resize(values.len(), S::zero());
        }
        for (s, &v) in sum.iter_mut().zip(values) {
            *s += v;
        }
        self.counts[id] += 1;
    }

    /// Adds pre-aggregated statistics, for checkpoint restore.
    pub fn add_sum(&mut self, key: &K, sum: &[S], count: u64) {
        let id = self.keys.intern(key) as usize;
        if id == self.sums.len() {
            self.sums.push(sum.to_vec());
            self.counts.push(count);
        } else {
            for (s, &v) in self.sums[id].iter_mut().zip(sum) {
                *s += v;
            }
            self.counts[id] += count;
        }
    }

    pub fn mean(&self, key: &K) -> Option<Vec<S>> {
        let id = self.keys.get(key)? as usize;
        let n = S::from_count(self.counts[id] as usize);
        Some(self.sums[id].iter().map(|&s| s / n).collect())
    }

    pub fn count(&self, key: &K) -> u64 {
        self.keys.get(key).map_or(0, |id| self.counts[id as usize])
    }

    /// Mean, or zeros at unseen keys (regret targets).
    pub fn predict_regret(&self, key: &K, n: usize) -> Vec<S> {
        match self.mean(key) {
            Some(m) if m.len() == n => m,
            _ => vec![S::zero(); n],
        }
    }

    /// Renormalized mean, or uniform at unseen keys (strategy targets).
    pub fn predict_strategy(&self, key: &K, n: usize) -> Vec<S> {
        match self.mean(key) {
            Some(m) if m.len() == n => {
                let total: S = m.iter().copied().sum();
                if total > S::zero() {
                    m.into_iter().map(|x| x / total).collect()
                } else {
                    uniform(n)
                }
            }
            _ => uniform(n),
        }
    }

    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    /// `(key, sum, count)` in first-seen order.
    pub fn iter(&self) -> impl Iterator<Item = (&K, &[S], u64)> {
        (0..self.sums.len()).map(|i| (self.keys.key(i as u32), self.sums[i].as_slice(), self.counts[i]))
    }
}

/// Whether a [`Learner`] keeps its entries after absorbing them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Retention {
    /// Entries are folded into the regressor at refit and dropped.
    #[default]
    Streaming,
    /// Entries are kept; with a reservoir every refit starts from scratch.
    Buffer,
}

/// A buffer and its regressor. Pushes become visible only at [`Learner::refit`],
/// so predictions stay fixed while an iteration's traversals run.
#[derive(Debug, Clone)]
pub struct Learner<K, S> {
    pub buffer: ReplayBuffer<K, S>,
    pub model: TabularRegressor<K, S>,
    retention: Retention,
    absorbed: usize,
}

impl<K: Hash + Eq + Clone, S: Scalar> Learner<K, S> {
    pub fn new(retention: Retention, reservoir: Option<(usize, u64)>) -> Self {
        let buffer = match (retention, reservoir) {
            (Retention::Buffer, Some((cap, seed))) => ReplayBuffer::with_reservoir(cap, seed),
            _ => ReplayBuffer::new(),
        };
        Learner {
            buffer,
            model: TabularRegressor::new(),
            retention,
            absorbed: 0,
        }
    }

    pub fn push(&mut self, key: &K, iteration: usize, values: &[S]) {
        self.buffer.push(key, iteration, values);
    }

    pub fn refit(&mut self) {
        if self.buffer.has_reservoir() {
            self.model = TabularRegressor::fit(&self.buffer);
            return;
        }
        self.model.absorb(&self.buffer, self.absorbed);
        match self.retention {
            Retention::Streaming => {
                self.buffer.clear();
                self.absorbed = 0;
            }
            Retention::Buffer => self.absorbed = self.buffer.len(),
        }
    }
}

/// Regret regressor over a whole buffer.
pub fn fit_regret<K: Hash + Eq + Clone, S: Scalar>(buffer: &ReplayBuffer<K, S>) -> TabularRegressor<K, S> {
    TabularRegressor::fit(buffer)
}

/// Average-strategy regressor over a whole buffer; read it with
/// [`TabularRegressor::predict_strategy`].
pub fn fit_avg_strategy<K: Hash + Eq + Clone, S: Scalar>(buffer: &ReplayBuffer<K, S>) -> TabularRegressor<K, S> {
    TabularRegressor::fit(buffer)
}
