//! On-disk artifacts. Every file records the game config, its hash and the
//! producing seed; readers refuse files made for a different game.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HcfrError, Result};
use crate::eval::MatchRecord;
use crate::game::{GameConfig, InfoKey, LowKey};
use crate::scalar::Scalar;
use crate::skills::SkillSet;
use crate::strategy::StrategyProfile;
use crate::tabular::{IterationMetrics, TabularSnapshot};
use crate::trainer::TrainerSnapshot;

pub const STRATEGY_FORMAT: &str = "hcfr-strategy";
pub const SKILLS_FORMAT: &str = "hcfr-skills";
pub const FORMAT_VERSION: u32 = 1;
pub const CHECKPOINT_MAGIC: &[u8; 8] = b"HCFRCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const METRICS_HEADER: &str = "iteration,exploitability_mbbg,rfull_p1,rfull_p2,theorem2_bound,theorem3_bound";

/// Who produced an artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub game_hash: String,
    pub seed: u64,
    pub game: GameConfig,
}

impl Header {
    pub fn new(format: &str, game: &GameConfig, seed: u64) -> Self {
        Header {
            format: format.to_string(),
            version: FORMAT_VERSION,
            game_hash: game.hash(),
            seed,
            game: game.clone(),
        }
    }

    fn check_format(&self, format: &str) -> Result<()> {
        if self.format != format {
            return Err(HcfrError::Artifact(format!("expected a {format} file, found {:?}", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(HcfrError::Artifact(format!("unsupported {format} version {}", self.version)));
        }
        if self.game.hash() != self.game_hash {
            return Err(HcfrError::Artifact("game hash does not match the embedded config".into()));
        }
        Ok(())
    }

    /// Refuses files produced for another game.
    pub fn check_game(&self, game: &GameConfig) -> Result<()> {
        let want = game.hash();
        if self.game_hash != want {
            return Err(HcfrError::Artifact(format!(
                "file was produced for game {} but {want} was requested",
                self.game_hash
            )));
        }
        Ok(())
    }
}

/// A full hierarchical profile with keys in sorted order, so equal profiles
/// serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    #[serde(flatten)]
    pub header: Header,
    pub tier: String,
    pub iterations: usize,
    pub high: BTreeMap<String, Vec<f64>>,
    pub low: BTreeMap<String, Vec<f64>>,
}

impl StrategyFile {
    pub fn new<S: Scalar>(profile: &StrategyProfile<S>, game: &GameConfig, tier: &str, iterations: usize, seed: u64) -> Self {
        StrategyFile {
            header: Header::new(STRATEGY_FORMAT, game, seed),
            tier: tier.to_string(),
            iterations,
            high: profile.high.iter().map(|(k, v)| (k.to_string(), to_f64(v))).collect(),
            low: profile.low.iter().map(|(k, v)| (k.to_string(), to_f64(v))).collect(),
        }
    }

    pub fn profile<S: Scalar>(&self) -> Result<StrategyProfile<S>> {
        let mut p = StrategyProfile::new();
        for (k, v) in &self.high {
            p.high.insert(k.parse::<InfoKey>()?, from_f64(v));
        }
        for (k, v) in &self.low {
            p.low.insert(k.parse::<LowKey>()?, from_f64(v));
        }
        Ok(p)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f: StrategyFile = read_json(path)?;
        f.header.check_format(STRATEGY_FORMAT)?;
        Ok(f)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillsFile {
    #[serde(flatten)]
    pub header: Header,
    pub low: BTreeMap<String, Vec<f64>>,
}

impl SkillsFile {
    pub fn new<S: Scalar>(skills: &SkillSet<S>, seed: u64) -> Self {
        SkillsFile {
            header: Header::new(SKILLS_FORMAT, &skills.source, seed),
            low: skills.low.iter().map(|(k, v)| (k.to_string(), to_f64(v))).collect(),
        }
    }

    pub fn skills<S: Scalar>(&self) -> Result<SkillSet<S>> {
        let mut low = BTreeMap::new();
        for (k, v) in &self.low {
            low.insert(k.parse::<LowKey>()?, from_f64(v));
        }
        Ok(SkillSet {
            source: self.header.game.clone(),
            low,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f: SkillsFile = read_json(path)?;
        f.header.check_format(SKILLS_FORMAT)?;
        Ok(f)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Resumable solver state for either solver family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Checkpoint {
    Tabular(TabularSnapshot),
    Sampled(TrainerSnapshot),
}

impl Checkpoint {
    pub fn game(&self) -> &GameConfig {
        match self {
            Checkpoint::Tabular(s) => &s.game,
            Checkpoint::Sampled(s) => &s.game,
        }
    }

    pub fn iteration(&self) -> usize {
        match self {
            Checkpoint::Tabular(s) => s.iteration,
            Checkpoint::Sampled(s) => s.iteration,
        }
    }

    /// Magic, little-endian version, then JSON.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = CHECKPOINT_MAGIC.to_vec();
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        serde_json::to_writer(&mut out, self)?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(HcfrError::Artifact("not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("four bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(HcfrError::Artifact(format!("unsupported checkpoint version {version}")));
        }
        Ok(serde_json::from_slice(&bytes[12..])?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

/// Learning-curve rows. Bound columns hold the larger of the two players'
/// values and are empty when not tracked.
pub struct MetricsWriter<W: Write> {
    out: W,
}

impl MetricsWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        MetricsWriter::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{METRICS_HEADER}")?;
        Ok(MetricsWriter { out })
    }

    /// Continues an existing file without repeating the header.
    pub fn resume(out: W) -> Self {
        MetricsWriter { out }
    }

    pub fn row(&mut self, m: &IterationMetrics) -> Result<()> {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        let max = |x: Option<[f64; 2]>| x.map(|[a, b]| a.max(b));
        writeln!(
            self.out,
            "{},{},{},{},{},{}",
            m.iteration,
            m.exploitability_mbbg,
            opt(m.rfull.map(|r| r[0])),
            opt(m.rfull.map(|r| r[1])),
            opt(max(m.regret_sum_bound)),
            opt(max(m.rate_bound)),
        )?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// One JSON object per hand.
pub fn write_transcript(path: &Path, records: &[MatchRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn to_f64<S: Scalar>(v: &[S]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn from_f64<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|&x| S::lit(x)).collect()
}
