mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "hcfr", version, about = "Hierarchical CFR solver and experiment runner")]
struct Cli {
    /// Worker threads for sampling and evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct RunArgs {
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `solver.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `solver.eval_every`.
    #[arg(long)]
    pub eval_every: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve from scratch with the configured tier.
    Solve(RunArgs),
    /// Like `solve`, optionally continuing from a checkpoint.
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Exploitability of one strategy file, or a duplicate match between two.
    Eval {
        #[arg(required = true, num_args = 1..=2)]
        files: Vec<PathBuf>,
        /// Refuse files not produced for this config's game.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        deals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write eval.json here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the JSON report instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Duplicate match between two strategy files, with a hand transcript.
    Match {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        deals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Writes transcript.ndjson here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract low-level tables from a strategy file into skills.json.
    ExportSkills {
        strategy: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Train a sampled tier with imported low-level tables.
    ImportSkills {
        skills: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Pin the low level instead of warm-starting it.
        #[arg(long)]
        frozen: bool,
    },
    /// Public-tree node counts.
    CountTree {
        #[arg(long, conflicts_with = "game")]
        config: Option<PathBuf>,
        /// A preset: kuhn, leduc, leduc_10, leduc_15, leduc_20.
        #[arg(long)]
        game: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Solve(run) => commands::solve(&run, None),
        Command::Train { run, resume } => commands::solve(&run, resume.as_deref()),
        Command::Eval {
            files,
            config,
            deals,
            seed,
            out,
            json,
        } => commands::eval(&files, config.as_deref(), deals, seed, out.as_deref(), json),
        Command::Match { a, b, deals, seed, out } => commands::play_match(&a, &b, deals, seed, out.as_deref()),
        Command::ExportSkills { strategy, out } => commands::export_skills(&strategy, &out),
        Command::ImportSkills { skills, run, frozen } => commands::import_skills(&skills, &run, frozen),
        Command::CountTree { config, game } => commands::count_tree(config.as_deref(), game.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
