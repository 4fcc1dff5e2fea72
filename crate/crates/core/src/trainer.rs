//! The sampled training loop: traversals for both seats, regret refits,
//! baseline refits, and the final average-strategy fit.

use std::collections::BTreeMap;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::baseline::{fit_baseline, Baseline, BaselineStore, ZeroBaseline};
use crate::error::{HcfrError, Result};
use crate::eval::Evaluator;
use crate::game::{Game, GameConfig, HistoryKey, InfoKey, LowKey};
use crate::regression::{Learner, Retention};
use crate::sampler::{collect_traversals, RolloutOptions, SampleStrategy, StrategyRecording, TraversalBatch};
use crate::scalar::{uniform, Scalar};
use crate::skills::SkillSet;
use crate::strategy::{regret_match, Policy, RegretMode, StrategyProfile};
use crate::tabular::IterationMetrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    /// Learned history baseline refit every iteration.
    #[default]
    Learned,
    /// `b ≡ 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub iterations: usize,
    /// Traversals per player per iteration.
    pub traversals: usize,
    pub epsilon: f64,
    pub regret_mode: RegretMode,
    pub baseline: BaselineMode,
    /// Prior samples per history kept when the baseline is refit.
    pub baseline_memory: u64,
    /// Pseudo-samples of the pooled estimate mixed into each history's mean.
    pub baseline_prior: u64,
    pub retention: Retention,
    /// Reservoir capacities; only honoured with [`Retention::Buffer`].
    pub regret_reservoir: Option<usize>,
    pub strategy_reservoir: Option<usize>,
    pub strategy_recording: StrategyRecording,
    /// Exploitability every this many iterations; 0 only at the end.
    pub eval_every: usize,
    pub seed: u64,
    /// Largest base tree the evaluator may build.
    pub eval_node_budget: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            iterations: 100,
            traversals: 128,
            epsilon: 1.0,
            regret_mode: RegretMode::Uniform,
            baseline: BaselineMode::Learned,
            baseline_memory: 64,
            baseline_prior: 4,
            retention: Retention::Streaming,
            regret_reservoir: None,
            strategy_reservoir: None,
            strategy_recording: StrategyRecording::AllVisited,
            eval_every: 0,
            seed: 0,
            eval_node_budget: crate::game::DEFAULT_NODE_BUDGET,
        }
    }
}

/// Spread of the regret entries one iteration produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub regret_entries: usize,
    /// Variance over every component of every stored regret vector.
    pub regret_variance: f64,
}

#[derive(Debug, Clone)]
struct Tables<S> {
    high: [Learner<InfoKey, S>; 2],
    low: [Learner<LowKey, S>; 2],
}

impl<S: Scalar> Tables<S> {
    fn new(cfg: &TrainerConfig, reservoir: Option<usize>, salt: u64) -> Self {
        let res = |k: u64| reservoir.map(|cap| (cap, crate::rng::mix_seed(cfg.seed, &[salt, k])));
        Tables {
            high: [Learner::new(cfg.retention, res(0)), Learner::new(cfg.retention, res(1))],
            low: [Learner::new(cfg.retention, res(2)), Learner::new(cfg.retention, res(3))],
        }
    }

    fn refit(&mut self) {
        for p in 0..2 {
            self.high[p].refit();
            self.low[p].refit();
        }
    }
}

/// `σ^t` from the regret regressors, with optional frozen low level.
pub struct CurrentPolicy<'a, S> {
    regrets: &'a Tables<S>,
    mode: RegretMode,
    frozen: Option<&'a BTreeMap<LowKey, Vec<S>>>,
}

impl<S: Scalar> Policy<S> for CurrentPolicy<'_, S> {
    fn high(&self, key: &InfoKey, n: usize) -> Vec<S> {
        let r = self.regrets.high[key.player()].model.predict_regret(key, n);
        regret_match(&r, self.mode).unwrap_or_else(|_| uniform(n))
    }

    fn low(&self, key: &InfoKey, z: usize, n: usize) -> Vec<S> {
        let lk = LowKey::new(key.clone(), z);
        if let Some(skills) = self.frozen {
            return match skills.get(&lk) {
                Some(p) if p.len() == n => p.clone(),
                _ => uniform(n),
            };
        }
        let r = self.regrets.low[key.player()].model.predict_regret(&lk, n);
        regret_match(&r, self.mode).unwrap_or_else(|_| uniform(n))
    }
}

/// Average strategy read from the strategy regressors.
pub struct AveragePolicy<'a, S> {
    tables: &'a Tables<S>,
    frozen: Option<&'a BTreeMap<LowKey, Vec<S>>>,
}

impl<S: Scalar> Policy<S> for AveragePolicy<'_, S> {
    fn high(&self, key: &InfoKey, n: usize) -> Vec<S> {
        self.tables.high[key.player()].model.predict_strategy(key, n)
    }

    fn low(&self, key: &InfoKey, z: usize, n: usize) -> Vec<S> {
        let lk = LowKey::new(key.clone(), z);
        if let Some(p) = self.frozen.and_then(|s| s.get(&lk)).filter(|p| p.len() == n) {
            return p.clone();
        }
        self.tables.low[key.player()].model.predict_strategy(&lk, n)
    }
}

pub struct Trainer<S: Scalar> {
    game: Game,
    config: TrainerConfig,
    t: usize,
    regrets: Tables<S>,
    strategies: Tables<S>,
    baseline: BaselineStore<S>,
    skills: Option<SkillSet<S>>,
    frozen: bool,
    evaluator: Option<Evaluator<S>>,
    stats: Vec<IterationStats>,
}

impl<S: Scalar> Trainer<S> {
    pub fn new(game: &GameConfig, config: TrainerConfig) -> Result<Self> {
        if config.iterations == 0 || config.traversals == 0 {
            return Err(HcfrError::Solver("iterations and traversals must be positive".into()));
        }
        if !(0.0..=1.0).contains(&config.epsilon) {
            return Err(HcfrError::Solver(format!("epsilon {} outside [0, 1]", config.epsilon)));
        }
        let evaluator = match Evaluator::with_budget(game, config.eval_node_budget) {
            Ok(e) => Some(e),
            Err(HcfrError::TreeTooLarge { built, .. }) => {
                warn!("base tree exceeds the evaluation budget ({built} nodes); exploitability disabled");
                None
            }
            Err(e) => return Err(e),
        };
        Ok(Trainer {
            game: Game::new(game.clone())?,
            regrets: Tables::new(&config, config.regret_reservoir, 1),
            strategies: Tables::new(&config, config.strategy_reservoir, 2),
            baseline: BaselineStore::with_prior(config.baseline_prior),
            config,
            t: 0,
            skills: None,
            frozen: false,
            evaluator,
            stats: Vec::new(),
        })
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn baseline(&self) -> &BaselineStore<S> {
        &self.baseline
    }

    pub fn stats(&self) -> &[IterationStats] {
        &self.stats
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn evaluator(&self) -> Option<&Evaluator<S>> {
        self.evaluator.as_ref()
    }

    /// Installs low-level tables. Frozen tables pin `σ^L` for the rest of
    /// training and suppress low-level regret records; otherwise each table
    /// seeds its regret regressor with one pseudo-entry equal to the table,
    /// which regret-matches back to it.
    pub fn install_skills(&mut self, skills: SkillSet<S>, frozen: bool) -> Result<()> {
        skills.validate(self.game.config())?;
        if !frozen {
            for (k, p) in &skills.low {
                self.regrets.low[k.info.player()].push(k, self.t, p);
            }
            self.regrets.refit();
        }
        self.frozen = frozen;
        self.skills = Some(skills);
        Ok(())
    }

    fn frozen_table(&self) -> Option<&BTreeMap<LowKey, Vec<S>>> {
        self.skills.as_ref().filter(|_| self.frozen).map(|s| &s.low)
    }

    pub fn current_policy(&self) -> CurrentPolicy<'_, S> {
        CurrentPolicy {
            regrets: &self.regrets,
            mode: self.config.regret_mode,
            frozen: self.frozen_table(),
        }
    }

    pub fn average_policy(&self) -> AveragePolicy<'_, S> {
        AveragePolicy {
            tables: &self.strategies,
            frozen: self.frozen_table(),
        }
    }

    /// Average profile over every key the strategy buffers have seen, plus
    /// frozen tables.
    pub fn average_profile(&self) -> StrategyProfile<S> {
        let avg = self.average_policy();
        let mut out = StrategyProfile::new();
        for p in 0..2 {
            for (k, sum, _) in self.strategies.high[p].model.iter() {
                out.high.insert(k.clone(), avg.high(k, sum.len()));
            }
            for (k, sum, _) in self.strategies.low[p].model.iter() {
                out.low.insert(k.clone(), avg.low(&k.info, k.z as usize, sum.len()));
            }
        }
        if let Some(table) = self.frozen_table() {
            for (k, v) in table {
                out.low.insert(k.clone(), v.clone());
            }
        }
        out
    }

    fn traverse(&self, traverser: usize) -> TraversalBatch<S> {
        let q = SampleStrategy::new(traverser, self.config.epsilon);
        let options = RolloutOptions {
            strategy_recording: self.config.strategy_recording,
            low_regrets: !self.frozen,
            trace: false,
        };
        let policy = self.current_policy();
        let baseline: &dyn Baseline<S> = match self.config.baseline {
            BaselineMode::Learned => &self.baseline,
            BaselineMode::Zero => &ZeroBaseline,
        };
        collect_traversals(
            &self.game,
            &policy,
            baseline,
            q,
            self.config.traversals,
            self.config.seed,
            self.t,
            options,
        )
    }

    /// One iteration of traversals and refits.
    pub fn iterate(&mut self) -> IterationStats {
        self.t += 1;
        let t = self.t;
        let mut trajectories = Vec::new();
        let (mut n, mut sum, mut sq) = (0usize, 0.0f64, 0.0f64);
        for i in 0..2 {
            let batch = self.traverse(i);
            let rec = batch.records;
            for (k, v) in &rec.high_regrets {
                self.regrets.high[i].push(k, t, v);
            }
            for (k, v) in &rec.low_regrets {
                self.regrets.low[i].push(k, t, v);
            }
            for x in rec
                .high_regrets
                .iter()
                .map(|e| &e.1)
                .chain(rec.low_regrets.iter().map(|e| &e.1))
                .flatten()
            {
                let x = x.as_f64();
                n += 1;
                sum += x;
                sq += x * x;
            }
            for (k, v) in &rec.high_strategies {
                self.strategies.high[1 - i].push(k, t, v);
            }
            for (k, v) in &rec.low_strategies {
                self.strategies.low[1 - i].push(k, t, v);
            }
            trajectories.extend(batch.trajectories);
        }
        self.regrets.refit();
        self.strategies.refit();
        if self.config.baseline == BaselineMode::Learned {
            let fresh = fit_baseline(&trajectories, &self.current_policy());
            self.baseline.absorb(fresh, self.config.baseline_memory);
        }
        let mean = if n > 0 { sum / n as f64 } else { 0.0 };
        let stats = IterationStats {
            iteration: t,
            regret_entries: n,
            regret_variance: if n > 1 { (sq - n as f64 * mean * mean) / (n as f64 - 1.0) } else { 0.0 },
        };
        debug!("iteration {t}: {} regret components, variance {:.4}", n, stats.regret_variance);
        self.stats.push(stats);
        stats
    }

    /// Exploitability of the current average, when the base tree fits.
    pub fn metrics(&self) -> Option<IterationMetrics> {
        let ev = self.evaluator.as_ref()?;
        let e = ev.exploitability(&self.average_policy());
        Some(IterationMetrics {
            iteration: self.t,
            exploitability_chips: e.chips.as_f64(),
            exploitability_mbbg: e.mbbg,
            rfull: None,
            regret_sum_bound: None,
            rate_bound: None,
        })
    }

    /// Runs up to the configured iteration count, calling `on_metrics` at
    /// each evaluation point and at the end.
    pub fn run(&mut self, mut on_metrics: impl FnMut(&IterationMetrics)) -> Vec<IterationMetrics> {
        let mut rows = Vec::new();
        while self.t < self.config.iterations {
            self.iterate();
            let every = self.config.eval_every;
            if (every > 0 && self.t.is_multiple_of(every)) || self.t == self.config.iterations {
                if let Some(m) = self.metrics() {
                    on_metrics(&m);
                    rows.push(m);
                }
            }
        }
        rows
    }

    pub fn checkpoint(&self) -> TrainerSnapshot {
        fn dump<K: Clone + std::hash::Hash + Eq + ToString, S: Scalar>(l: &Learner<K, S>) -> Vec<Stat> {
            let mut v: Vec<Stat> = l
                .model
                .iter()
                .map(|(k, s, n)| Stat {
                    key: k.to_string(),
                    sum: s.iter().map(|x| x.as_f64()).collect(),
                    count: n,
                })
                .collect();
            v.sort_by(|a, b| a.key.cmp(&b.key));
            v
        }
        let tables = |t: &Tables<S>| TableSnapshot {
            high: [dump(&t.high[0]), dump(&t.high[1])],
            low: [dump(&t.low[0]), dump(&t.low[1])],
        };
        TrainerSnapshot {
            game: self.game.config().clone(),
            game_hash: self.game.config().hash(),
            seed: self.config.seed,
            iteration: self.t,
            regrets: tables(&self.regrets),
            strategies: tables(&self.strategies),
            baseline: self
                .baseline
                .to_sorted()
                .into_iter()
                .map(|(k, s, n)| Stat {
                    key: k.to_string(),
                    sum: vec![s.as_f64()],
                    count: n,
                })
                .collect(),
            skills: self.skills.as_ref().map(|s| {
                s.low
                    .iter()
                    .map(|(k, v)| (k.to_string(), v.iter().map(|x| x.as_f64()).collect()))
                    .collect()
            }),
            skills_source: self.skills.as_ref().map(|s| s.source.clone()),
            frozen: self.frozen,
            stats: self.stats.iter().map(|s| (s.iteration, s.regret_entries, s.regret_variance)).collect(),
        }
    }

    /// Rebuilds a trainer from a checkpoint. Regressor sums and counts are
    /// sufficient statistics for every later refit, so continuing matches an
    /// uninterrupted run unless a reservoir is in use.
    pub fn restore(snapshot: &TrainerSnapshot, config: TrainerConfig) -> Result<Self> {
        if snapshot.game.hash() != snapshot.game_hash {
            return Err(HcfrError::Artifact("checkpoint game hash does not match its config".into()));
        }
        let mut tr = Trainer::new(&snapshot.game, config)?;
        let s = |x: f64| S::lit(x);
        fn load<K, S: Scalar>(l: &mut Learner<K, S>, stats: &[Stat]) -> Result<()>
        where
            K: std::str::FromStr<Err = HcfrError> + Clone + std::hash::Hash + Eq,
        {
            for st in stats {
                let k: K = st.key.parse()?;
                let sum: Vec<S> = st.sum.iter().map(|&x| S::lit(x)).collect();
                l.model.add_sum(&k, &sum, st.count);
            }
            Ok(())
        }
        for (dst, src) in [(&mut tr.regrets, &snapshot.regrets), (&mut tr.strategies, &snapshot.strategies)] {
            for p in 0..2 {
                load(&mut dst.high[p], &src.high[p])?;
                load(&mut dst.low[p], &src.low[p])?;
            }
        }
        let mut entries = Vec::with_capacity(snapshot.baseline.len());
        for st in &snapshot.baseline {
            let bytes = hex::decode(&st.key).map_err(|e| HcfrError::Artifact(format!("baseline key: {e}")))?;
            entries.push((HistoryKey(bytes), s(st.sum[0]), st.count));
        }
        tr.baseline = BaselineStore::from_sorted(entries, tr.config.baseline_prior);
        if let (Some(table), Some(source)) = (&snapshot.skills, &snapshot.skills_source) {
            let mut low = BTreeMap::new();
            for (k, v) in table {
                low.insert(k.parse::<LowKey>()?, v.iter().map(|&x| s(x)).collect());
            }
            tr.skills = Some(SkillSet {
                source: source.clone(),
                low,
            });
            tr.frozen = snapshot.frozen;
        }
        tr.stats = snapshot
            .stats
            .iter()
            .map(|&(iteration, regret_entries, regret_variance)| IterationStats {
                iteration,
                regret_entries,
                regret_variance,
            })
            .collect();
        tr.t = snapshot.iteration;
        Ok(tr)
    }
}

/// Serializable trainer state without buffers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerSnapshot {
    pub game: GameConfig,
    pub game_hash: String,
    pub seed: u64,
    pub iteration: usize,
    pub regrets: TableSnapshot,
    pub strategies: TableSnapshot,
    pub baseline: Vec<Stat>,
    pub skills: Option<Vec<(String, Vec<f64>)>>,
    pub skills_source: Option<GameConfig>,
    pub frozen: bool,
    pub stats: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSnapshot {
    pub high: [Vec<Stat>; 2],
    pub low: [Vec<Stat>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub key: String,
    pub sum: Vec<f64>,
    pub count: u64,
}

/// Trains from scratch and returns the average profile with its metrics.
pub fn run_hdcfr<S: Scalar>(
    game: &GameConfig,
    config: TrainerConfig,
) -> Result<(StrategyProfile<S>, Vec<IterationMetrics>)> {
    let mut tr = Trainer::<S>::new(game, config)?;
    let rows = tr.run(|_| {});
    Ok((tr.average_profile(), rows))
}

/// Low-level tables of a trained profile.
pub fn freeze_skills<S: Scalar>(source: &StrategyProfile<S>, source_game: &GameConfig, trainer: &mut Trainer<S>) -> Result<()> {
    trainer.install_skills(SkillSet::from_profile(source, source_game), true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(iterations: usize) -> TrainerConfig {
        TrainerConfig {
            iterations,
            traversals: 16,
            seed: 5,
            ..TrainerConfig::default()
        }
    }

    #[test]
    fn rejects_empty_runs() {
        let cfg = TrainerConfig {
            traversals: 0,
            ..small(1)
        };
        assert!(Trainer::<f64>::new(&GameConfig::kuhn(2), cfg).is_err());
    }

    #[test]
    fn single_iteration_fills_all_tables() {
        let mut tr = Trainer::<f64>::new(
            &GameConfig::kuhn(2),
            TrainerConfig {
                traversals: 1,
                ..small(1)
            },
        )
        .unwrap();
        tr.iterate();
        for p in 0..2 {
            assert!(!tr.regrets.high[p].model.is_empty());
            assert!(!tr.regrets.low[p].model.is_empty());
            assert!(!tr.strategies.high[p].model.is_empty());
            assert!(!tr.strategies.low[p].model.is_empty());
        }
        // One trajectory of at most four steps.
        assert!(tr.baseline.len() <= 4 && !tr.baseline.is_empty());
    }

    #[test]
    fn provenance_of_entries() {
        let mut tr = Trainer::<f64>::new(&GameConfig::kuhn(2), small(3)).unwrap();
        tr.run(|_| {});
        for p in 0..2 {
            assert!(tr.regrets.high[p].model.iter().all(|(k, _, _)| k.player() == p));
            assert!(tr.strategies.high[p].model.iter().all(|(k, _, _)| k.player() == p));
            assert!(tr.strategies.low[p].model.iter().all(|(k, _, _)| k.info.player() == p));
        }
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let game = GameConfig::kuhn(2);
        let mut full = Trainer::<f64>::new(&game, small(6)).unwrap();
        full.run(|_| {});
        let mut half = Trainer::<f64>::new(&game, small(3)).unwrap();
        half.run(|_| {});
        let snap: TrainerSnapshot = serde_json::from_str(&serde_json::to_string(&half.checkpoint()).unwrap()).unwrap();
        let mut resumed = Trainer::<f64>::restore(&snap, small(6)).unwrap();
        resumed.run(|_| {});
        assert_eq!(full.checkpoint(), resumed.checkpoint());
    }

    #[test]
    fn frozen_skills_stay_put() {
        let game = GameConfig::kuhn(2);
        let (src, _) = run_hdcfr::<f64>(&game, small(4)).unwrap();
        let mut tr = Trainer::<f64>::new(&game, small(4)).unwrap();
        freeze_skills(&src, &game, &mut tr).unwrap();
        let before = tr.skills.clone();
        tr.run(|_| {});
        assert_eq!(before, tr.skills);
        assert!(tr.regrets.low.iter().all(|l| l.model.is_empty()));
        let avg = tr.average_profile();
        for (k, v) in &before.unwrap().low {
            assert_eq!(avg.low.get(k), Some(v));
        }
    }
}
