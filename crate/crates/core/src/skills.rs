//! Low-level strategy tables ("skills") extracted from one run and installed
//! into another, possibly on a different variant of the game.

use std::collections::BTreeMap;

use log::info;

use crate::error::{HcfrError, Result};
use crate::game::{Game, GameConfig, InfoKey, LowKey, Prev};
use crate::scalar::Scalar;
use crate::strategy::StrategyProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct SkillSet<S> {
    pub source: GameConfig,
    pub low: BTreeMap<LowKey, Vec<S>>,
}

/// Outcome of [`SkillSet::remap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RemapReport {
    pub mapped: usize,
    /// Source keys with no counterpart in the target game.
    pub unmappable: usize,
    /// Target keys fed by more than one source key (averaged).
    pub merged: usize,
}

impl<S: Scalar> SkillSet<S> {
    pub fn from_profile(profile: &StrategyProfile<S>, source: &GameConfig) -> Self {
        SkillSet {
            source: source.clone(),
            low: profile.low.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }

    /// Checks every table against the target's legal action sets and option
    /// count.
    pub fn validate(&self, target: &GameConfig) -> Result<()> {
        let game = Game::new(target.clone())?;
        for (key, probs) in &self.low {
            if let Err(reason) = check_key(&game, key, probs.len()) {
                return Err(HcfrError::Skills(format!("{key}: {reason}")));
            }
        }
        Ok(())
    }

    /// Re-encodes keys for `target`: ranks are rescaled proportionally onto
    /// the target's rank range, and keys whose action string, option or
    /// action count does not fit the target are dropped and counted.
    pub fn remap(&self, target: &GameConfig) -> Result<(SkillSet<S>, RemapReport)> {
        let game = Game::new(target.clone())?;
        let mut report = RemapReport::default();
        let mut pooled: BTreeMap<LowKey, Vec<Vec<S>>> = BTreeMap::new();
        for (key, probs) in &self.low {
            let mapped = self
                .map_key(&key.info, target)
                .map(|info| LowKey { info, z: key.z })
                .filter(|k| check_key(&game, k, probs.len()).is_ok());
            match mapped {
                Some(k) => {
                    report.mapped += 1;
                    pooled.entry(k).or_default().push(probs.clone());
                }
                None => report.unmappable += 1,
            }
        }
        let mut low = BTreeMap::new();
        for (k, vs) in pooled {
            if vs.len() > 1 {
                report.merged += 1;
            }
            let n = S::from_count(vs.len());
            let mean: Vec<S> = (0..vs[0].len()).map(|a| vs.iter().map(|v| v[a]).sum::<S>() / n).collect();
            low.insert(k, mean);
        }
        if report.unmappable > 0 {
            info!("skill import: {} of {} keys unmappable", report.unmappable, self.low.len());
        }
        Ok((
            SkillSet {
                source: self.source.clone(),
                low,
            },
            report,
        ))
    }

    fn map_key(&self, key: &InfoKey, target: &GameConfig) -> Option<InfoKey> {
        let rank = |glyphs: &str| -> Option<String> {
            let mut out = String::new();
            for c in glyphs.chars() {
                let r = self.source.rank_from_char(c)? as usize;
                let (ns, nt) = (self.source.ranks as usize, target.ranks as usize);
                let rt = if ns <= 1 {
                    0
                } else {
                    ((r * (nt - 1)) as f64 / (ns - 1) as f64).round() as u8
                };
                out.push(target.rank_char(rt));
            }
            Some(out)
        };
        let prev = match key.prev() {
            Prev::Option(z) if z as usize >= target.num_options => return None,
            p => p,
        };
        Some(InfoKey::new(
            key.player(),
            &rank(key.private())?,
            &rank(key.board())?,
            key.actions(),
            prev,
        ))
    }
}

fn check_key(game: &Game, key: &LowKey, len: usize) -> std::result::Result<(), String> {
    let cfg = game.config();
    if key.z as usize >= cfg.num_options {
        return Err(format!("option {} outside |Z| = {}", key.z, cfg.num_options));
    }
    if let Prev::Option(z) = key.info.prev() {
        if z as usize >= cfg.num_options {
            return Err(format!("previous option {z} outside |Z| = {}", cfg.num_options));
        }
    }
    let actions = game
        .replay_public(key.info.actions())
        .ok_or_else(|| format!("action string {:?} is not legal", key.info.actions()))?;
    if actions.len() != len {
        return Err(format!("{} actions legal, table has {len}", actions.len()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(s: &str) -> LowKey {
        s.parse().unwrap()
    }

    #[test]
    fn leduc_skills_spread_over_larger_deck() {
        let src = GameConfig::leduc(2);
        let mut low = BTreeMap::new();
        low.insert(key("p1|K|||z-#0"), vec![0.25, 0.75]);
        low.insert(key("p1|J|||z-#1"), vec![0.5, 0.5]);
        let set = SkillSet { source: src, low };
        let (out, report) = set.remap(&GameConfig::leduc_scaled(10, 60, 2)).unwrap();
        assert_eq!(report.mapped, 2);
        assert!(out.low.contains_key(&key("p1|K|||z-#0")));
        assert!(out.low.contains_key(&key("p1|2|||z-#1")));
    }

    #[test]
    fn capped_sequences_are_unmappable() {
        let src = GameConfig::leduc_scaled(10, 60, 2);
        let mut low = BTreeMap::new();
        // Three raises in a round exceed the cap of 2.
        low.insert(key("p2|K||rrr|z0#0"), vec![0.5, 0.5]);
        low.insert(key("p1|K|||z-#0"), vec![0.1, 0.9]);
        let set = SkillSet { source: src, low };
        let (out, report) = set.remap(&GameConfig::leduc(2)).unwrap();
        assert_eq!(report.unmappable, 1);
        assert_eq!(out.low.len(), 1);
    }

    #[test]
    fn validation_rejects_wrong_action_count() {
        let mut low = BTreeMap::new();
        low.insert(key("p1|K|||z-#0"), vec![0.2, 0.3, 0.5]);
        let set = SkillSet {
            source: GameConfig::kuhn(2),
            low,
        };
        assert!(matches!(set.validate(&GameConfig::kuhn(2)), Err(HcfrError::Skills(_))));
    }
}
