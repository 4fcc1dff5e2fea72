use std::fs::OpenOptions;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hcfr_core::eval::{head_to_head, Agent, Evaluator, HeadToHead, SwitchWeighting};
use hcfr_core::game::{count_base_tree, Game, GameConfig};
use hcfr_core::persist::{Checkpoint, MetricsWriter, SkillsFile, StrategyFile};
use hcfr_core::skills::SkillSet;
use hcfr_core::tabular::{IterationMetrics, TabularHcfr};
use hcfr_core::trainer::Trainer;
use hcfr_core::Profile;
use log::info;
use serde::Serialize;

use crate::config::{ExperimentConfig, Tier};
use crate::RunArgs;

fn load_run(run: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&run.config)?;
    if let Some(seed) = run.seed {
        cfg.solver.seed = seed;
    }
    if let Some(out) = &run.out {
        cfg.output.dir = out.clone();
    }
    if let Some(e) = run.eval_every {
        cfg.solver.eval_every = e;
    }
    std::fs::create_dir_all(&cfg.output.dir).with_context(|| format!("creating {}", cfg.output.dir.display()))?;
    Ok(cfg)
}

/// Metrics file; a resumed run appends to an existing one.
fn metrics_writer(dir: &Path, append: bool) -> Result<MetricsWriter<BufWriter<std::fs::File>>> {
    let path = dir.join("metrics.csv");
    if append && path.exists() {
        let f = OpenOptions::new().append(true).open(&path)?;
        return Ok(MetricsWriter::resume(BufWriter::new(f)));
    }
    Ok(MetricsWriter::create(&path)?)
}

fn summary(tier: Tier, iterations: usize, last: Option<&IterationMetrics>) {
    match last {
        Some(m) => println!(
            "{} iterations={} exploitability={:.4} mbb/g ({:.6} chips)",
            tier.name(),
            iterations,
            m.exploitability_mbbg,
            m.exploitability_chips
        ),
        None => println!("{} iterations={} exploitability=n/a", tier.name(), iterations),
    }
}

pub fn solve(run: &RunArgs, resume: Option<&Path>) -> Result<()> {
    let cfg = load_run(run)?;
    let checkpoint = resume.map(Checkpoint::read).transpose()?;
    if let Some(ck) = &checkpoint {
        if ck.game().hash() != cfg.game.hash() {
            bail!("checkpoint was produced for a different game");
        }
    }
    match cfg.solver.tier {
        Tier::Tabular => solve_tabular(&cfg, checkpoint),
        Tier::Mc | Tier::Hdcfr => {
            let trainer = match checkpoint {
                None => Trainer::new(&cfg.game, cfg.trainer_config())?,
                Some(Checkpoint::Sampled(s)) => Trainer::restore(&s, cfg.trainer_config())?,
                Some(Checkpoint::Tabular(_)) => bail!("checkpoint holds tabular state but tier is {}", cfg.solver.tier.name()),
            };
            let resumed = resume.is_some();
            train_sampled(&cfg, trainer, resumed)
        }
    }
}

fn solve_tabular(cfg: &ExperimentConfig, checkpoint: Option<Checkpoint>) -> Result<()> {
    let opts = cfg.hcfr_options();
    let resumed = checkpoint.is_some();
    let mut solver = match checkpoint {
        None => TabularHcfr::<f64>::new(&cfg.game, opts)?,
        Some(Checkpoint::Tabular(s)) => TabularHcfr::restore(&s, opts)?,
        Some(Checkpoint::Sampled(_)) => bail!("checkpoint holds sampled-trainer state but tier is tabular"),
    };
    let dir = &cfg.output.dir;
    let mut csv = metrics_writer(dir, resumed)?;
    let total = cfg.solver.iterations;
    let every = cfg.solver.eval_every;
    let mut last = None;
    while solver.iteration() < total {
        solver.iterate();
        let t = solver.iteration();
        if (every > 0 && t % every == 0) || t == total {
            let m = solver.metrics();
            csv.row(&m)?;
            info!("t={t} exploitability {:.3} mbb/g", m.exploitability_mbbg);
            last = Some(m);
        }
    }
    csv.flush()?;
    let profile = solver.average().to_profile(solver.tree());
    StrategyFile::new(&profile, &cfg.game, Tier::Tabular.name(), total, cfg.solver.seed).write(&dir.join("strategy.json"))?;
    if cfg.output.checkpoint {
        Checkpoint::Tabular(solver.snapshot()).write(&dir.join("checkpoint.bin"))?;
    }
    summary(Tier::Tabular, total, last.as_ref());
    Ok(())
}

fn train_sampled(cfg: &ExperimentConfig, mut trainer: Trainer<f64>, resumed: bool) -> Result<()> {
    let dir = &cfg.output.dir;
    let mut csv = metrics_writer(dir, resumed)?;
    let mut write_err = None;
    let rows = trainer.run(|m| {
        info!("t={} exploitability {:.3} mbb/g", m.iteration, m.exploitability_mbbg);
        if let Err(e) = csv.row(m) {
            write_err.get_or_insert(e);
        }
    });
    if let Some(e) = write_err {
        return Err(e.into());
    }
    csv.flush()?;
    let total = trainer.iteration();
    let profile = trainer.average_profile();
    StrategyFile::new(&profile, &cfg.game, cfg.solver.tier.name(), total, cfg.solver.seed).write(&dir.join("strategy.json"))?;
    if cfg.output.checkpoint {
        Checkpoint::Sampled(trainer.checkpoint()).write(&dir.join("checkpoint.bin"))?;
    }
    if trainer.is_frozen() {
        info!("low level was frozen to imported skills");
    }
    summary(cfg.solver.tier, total, rows.last());
    Ok(())
}

#[derive(Serialize)]
struct FileReport {
    path: PathBuf,
    tier: String,
    iterations: usize,
    exploitability_chips: f64,
    exploitability_mbbg: f64,
    value_p1: f64,
    switch_frequency: f64,
}

#[derive(Serialize)]
struct EvalReport {
    game_hash: String,
    files: Vec<FileReport>,
    head_to_head: Option<HeadToHead>,
}

fn read_strategies(files: &[PathBuf], expect: Option<&GameConfig>) -> Result<(GameConfig, Vec<(StrategyFile, Profile)>)> {
    let mut out = Vec::new();
    for path in files {
        let f = StrategyFile::read(path).with_context(|| format!("reading {}", path.display()))?;
        let game = expect.unwrap_or(&f.header.game);
        f.header.check_game(game).with_context(|| format!("refusing {}", path.display()))?;
        let p = f.profile::<f64>()?;
        out.push((f, p));
    }
    let game = out[0].0.header.game.clone();
    Ok((game, out))
}

fn match_agents(game: &GameConfig, a: &Profile, b: &Profile, deals: usize, seed: u64, transcript: bool) -> Result<HeadToHead> {
    let g = Game::new(game.clone())?;
    let n = game.num_options;
    Ok(head_to_head::<f64, _, _>(&g, &Agent::new(a, n), &Agent::new(b, n), deals, seed, transcript))
}

pub fn eval(files: &[PathBuf], config: Option<&Path>, deals: usize, seed: u64, out: Option<&Path>, json: bool) -> Result<()> {
    let expect = config.map(ExperimentConfig::load).transpose()?.map(|c| c.game);
    let (game, strategies) = read_strategies(files, expect.as_ref())?;
    let evaluator = Evaluator::<f64>::new(&game)?;
    let mut report = EvalReport {
        game_hash: game.hash(),
        files: Vec::new(),
        head_to_head: None,
    };
    for (path, (file, profile)) in files.iter().zip(&strategies) {
        let e = evaluator.exploitability(profile);
        report.files.push(FileReport {
            path: path.clone(),
            tier: file.tier.clone(),
            iterations: file.iterations,
            exploitability_chips: e.chips,
            exploitability_mbbg: e.mbbg,
            value_p1: e.value,
            switch_frequency: evaluator.switch_frequency(profile, SwitchWeighting::Reach),
        });
    }
    if let [(_, a), (_, b)] = strategies.as_slice() {
        report.head_to_head = Some(match_agents(&game, a, b, deals, seed, false)?);
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("eval.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    for f in &report.files {
        println!(
            "{}: exploitability {:.4} mbb/g ({:.6} chips), value {:+.6}, switch frequency {:.4}",
            f.path.display(),
            f.exploitability_mbbg,
            f.exploitability_chips,
            f.value_p1,
            f.switch_frequency
        );
    }
    if let Some(h) = &report.head_to_head {
        println!("head-to-head: {:+.2} ± {:.2} mbb/g over {} deals", h.mean_mbbg, h.ci95_mbbg, h.deals);
    }
    Ok(())
}

pub fn play_match(a: &Path, b: &Path, deals: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let (game, s) = read_strategies(&[a.to_path_buf(), b.to_path_buf()], None)?;
    let result = match_agents(&game, &s[0].1, &s[1].1, deals, seed, out.is_some())?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        hcfr_core::persist::write_transcript(&dir.join("transcript.ndjson"), &result.transcript)?;
    }
    println!(
        "{} vs {}: {:+.2} ± {:.2} mbb/g over {} deals",
        a.display(),
        b.display(),
        result.mean_mbbg,
        result.ci95_mbbg,
        result.deals
    );
    Ok(())
}

pub fn export_skills(strategy: &Path, out: &Path) -> Result<()> {
    let f = StrategyFile::read(strategy)?;
    let skills = SkillSet::from_profile(&f.profile::<f64>()?, &f.header.game);
    std::fs::create_dir_all(out)?;
    let path = out.join("skills.json");
    SkillsFile::new(&skills, f.header.seed).write(&path)?;
    println!("wrote {} low-level tables to {}", skills.low.len(), path.display());
    Ok(())
}

pub fn import_skills(skills: &Path, run: &RunArgs, frozen: bool) -> Result<()> {
    let cfg = load_run(run)?;
    if cfg.solver.tier == Tier::Tabular {
        bail!("skill import needs a sampled tier (mc or hdcfr)");
    }
    let mut set = SkillsFile::read(skills)?.skills::<f64>()?;
    if set.source.hash() != cfg.game.hash() {
        let (mapped, report) = set.remap(&cfg.game)?;
        info!(
            "remapped skills: {} mapped, {} unmappable, {} merged",
            report.mapped, report.unmappable, report.merged
        );
        set = mapped;
    }
    let mut trainer = Trainer::new(&cfg.game, cfg.trainer_config())?;
    trainer.install_skills(set, frozen)?;
    train_sampled(&cfg, trainer, false)
}

pub fn count_tree(config: Option<&Path>, game: Option<&str>) -> Result<()> {
    let games: Vec<(String, GameConfig)> = match (config, game) {
        (Some(path), _) => vec![(path.display().to_string(), ExperimentConfig::load(path)?.game)],
        (None, Some(name)) => match GameConfig::preset(name, 1) {
            Some(g) => vec![(name.to_string(), g)],
            None => bail!("unknown preset {name:?}"),
        },
        (None, None) => ["kuhn", "leduc", "leduc_10", "leduc_15", "leduc_20"]
            .iter()
            .map(|n| (n.to_string(), GameConfig::preset(n, 1).expect("preset")))
            .collect(),
    };
    for (name, g) in games {
        println!("{name}\t{}", count_base_tree(&g)?);
    }
    Ok(())
}
