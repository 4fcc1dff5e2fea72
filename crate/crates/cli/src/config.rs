//! Experiment config: TOML, or JSON when the file ends in `.json`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hcfr_core::game::{GameConfig, DEFAULT_NODE_BUDGET};
use hcfr_core::regression::Retention;
use hcfr_core::sampler::StrategyRecording;
use hcfr_core::strategy::RegretMode;
use hcfr_core::tabular::HcfrOptions;
use hcfr_core::trainer::{BaselineMode, TrainerConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    /// Exact full-traversal solver.
    #[default]
    Tabular,
    /// Sampled training; fitted tables fold each iteration's samples in
    /// and the raw samples are dropped.
    Mc,
    /// Sampled training with retained replay buffers, optionally reservoir
    /// sampled.
    Hdcfr,
}

impl Tier {
    pub fn name(self) -> &'static str {
        match self {
            Tier::Tabular => "tabular",
            Tier::Mc => "mc",
            Tier::Hdcfr => "hdcfr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tier: Tier,
    pub iterations: usize,
    /// Traversals per player per iteration (sampled tiers).
    pub traversals: usize,
    pub epsilon: f64,
    pub regret_mode: RegretMode,
    pub baseline: BaselineMode,
    /// Prior samples per history kept across baseline refits.
    pub baseline_memory: u64,
    /// Shrinkage of sparse histories toward the pooled estimate.
    pub baseline_prior: u64,
    pub regret_reservoir: Option<usize>,
    pub strategy_reservoir: Option<usize>,
    /// Record one random non-traverser infoset per trajectory instead of all.
    pub record_one_infoset: bool,
    /// Exploitability every this many iterations; 0 only at the end.
    pub eval_every: usize,
    /// Track overall regret and its bounds (tabular tier).
    pub track_regret: bool,
    pub node_budget: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tier: Tier::Tabular,
            iterations: 1000,
            traversals: 128,
            epsilon: 1.0,
            regret_mode: RegretMode::Uniform,
            baseline: BaselineMode::Learned,
            baseline_memory: 64,
            baseline_prior: 4,
            regret_reservoir: None,
            strategy_reservoir: None,
            record_one_infoset: false,
            eval_every: 1,
            track_regret: true,
            node_budget: DEFAULT_NODE_BUDGET,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub checkpoint: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            checkpoint: true,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        let s = &self.solver;
        if s.iterations == 0 {
            bail!("solver.iterations must be positive");
        }
        if s.tier != Tier::Tabular && s.traversals == 0 {
            bail!("solver.traversals must be positive");
        }
        if !(0.0..=1.0).contains(&s.epsilon) {
            bail!("solver.epsilon must lie in [0, 1], got {}", s.epsilon);
        }
        if s.tier == Tier::Mc && (s.regret_reservoir.is_some() || s.strategy_reservoir.is_some()) {
            bail!("reservoir caps need tier = \"hdcfr\"");
        }
        Ok(())
    }

    pub fn hcfr_options(&self) -> HcfrOptions {
        HcfrOptions {
            mode: self.solver.regret_mode,
            log_every: self.solver.eval_every,
            track_regret: self.solver.track_regret,
            node_budget: self.solver.node_budget,
        }
    }

    pub fn trainer_config(&self) -> TrainerConfig {
        let s = &self.solver;
        TrainerConfig {
            iterations: s.iterations,
            traversals: s.traversals,
            epsilon: s.epsilon,
            regret_mode: s.regret_mode,
            baseline: s.baseline,
            baseline_memory: s.baseline_memory,
            baseline_prior: s.baseline_prior,
            retention: match s.tier {
                Tier::Hdcfr => Retention::Buffer,
                _ => Retention::Streaming,
            },
            regret_reservoir: s.regret_reservoir,
            strategy_reservoir: s.strategy_reservoir,
            strategy_recording: if s.record_one_infoset {
                StrategyRecording::OneRandom
            } else {
                StrategyRecording::AllVisited
            },
            eval_every: s.eval_every,
            seed: s.seed,
            eval_node_budget: s.node_budget,
        }
    }
}
