//! Outcome-sampling rollouts with baseline-corrected value estimates.
//!
//! A rollout samples one trajectory from the root under `q`, then walks back
//! up computing `v̂` for every option and action at each visited node:
//! sampled branches get the importance-corrected child estimate, unsampled
//! ones read the baseline. Values are tracked for player 1; the traverser's
//! regrets carry the sign of its seat.
//!
//! Regrets are weighted by `π^σ_{−i}(h)/π^q(h)`. Chance and the opponent
//! sample from their own strategies, so their factors cancel and only the
//! traverser's own sampling probability `π^q_i(h)` remains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baseline::Baseline;
use crate::game::{Actor, Game, GameTree, HierAction, HistoryKey, InfoKey, LegalMoves, LowKey, Step};
use crate::rng::{mix_seed, sample_index};
use crate::scalar::{dot, uniform, Scalar};
use crate::strategy::Policy;
use crate::tabular::TreeRegrets;

/// Sampling strategy `q^{t,i}`: the traverser mixes `ε·uniform` into its
/// strategy over both options and actions; everyone else samples on-policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStrategy {
    pub traverser: usize,
    pub epsilon: f64,
}

impl SampleStrategy {
    pub fn new(traverser: usize, epsilon: f64) -> Self {
        SampleStrategy { traverser, epsilon }
    }

    pub fn q<S: Scalar>(&self, player: usize, sigma: &[S]) -> Vec<S> {
        if player != self.traverser {
            return sigma.to_vec();
        }
        let eps = S::lit(self.epsilon);
        let u = S::one() / S::from_count(sigma.len());
        sigma.iter().map(|&s| eps * u + (S::one() - eps) * s).collect()
    }
}

/// Source of the sampled option and action at each node.
pub trait Chooser {
    fn option<S: Scalar>(&mut self, q: &[S]) -> usize;
    fn action<S: Scalar>(&mut self, q: &[S]) -> usize;
    /// Uniform index below `n`, for record selection.
    fn pick(&mut self, n: usize) -> usize;
}

pub struct RngChooser<R>(pub R);

impl<R: Rng> Chooser for RngChooser<R> {
    fn option<S: Scalar>(&mut self, q: &[S]) -> usize {
        if q.len() == 1 {
            0
        } else {
            sample_index(q, &mut self.0)
        }
    }

    fn action<S: Scalar>(&mut self, q: &[S]) -> usize {
        sample_index(q, &mut self.0)
    }

    fn pick(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }
}

/// Replays a fixed path of `(z, a)` moves.
pub struct ForcedChooser<'a> {
    path: &'a [HierAction],
    pos: usize,
}

impl<'a> ForcedChooser<'a> {
    pub fn new(path: &'a [HierAction]) -> Self {
        ForcedChooser { path, pos: 0 }
    }
}

impl Chooser for ForcedChooser<'_> {
    fn option<S: Scalar>(&mut self, _q: &[S]) -> usize {
        self.path[self.pos].z
    }

    fn action<S: Scalar>(&mut self, _q: &[S]) -> usize {
        let a = self.path[self.pos].a;
        self.pos += 1;
        a
    }

    fn pick(&mut self, _n: usize) -> usize {
        0
    }
}

/// Which non-traverser infosets on a trajectory feed the strategy buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StrategyRecording {
    /// Every visited infoset.
    #[default]
    AllVisited,
    /// One visited infoset chosen uniformly per trajectory.
    OneRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RolloutOptions {
    pub strategy_recording: StrategyRecording,
    /// Emit low-level regrets (off when skills are frozen).
    pub low_regrets: bool,
    /// Keep the per-node `v̂` trace.
    pub trace: bool,
}

impl Default for RolloutOptions {
    fn default() -> Self {
        RolloutOptions {
            strategy_recording: StrategyRecording::AllVisited,
            low_regrets: true,
            trace: false,
        }
    }
}

/// Buffer additions from one or more rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutRecord<S> {
    pub high_regrets: Vec<(InfoKey, Vec<S>)>,
    pub low_regrets: Vec<(LowKey, Vec<S>)>,
    pub high_strategies: Vec<(InfoKey, Vec<S>)>,
    pub low_strategies: Vec<(LowKey, Vec<S>)>,
}

impl<S> Default for RolloutRecord<S> {
    fn default() -> Self {
        RolloutRecord {
            high_regrets: Vec::new(),
            low_regrets: Vec::new(),
            high_strategies: Vec::new(),
            low_strategies: Vec::new(),
        }
    }
}

impl<S> RolloutRecord<S> {
    pub fn extend(&mut self, other: RolloutRecord<S>) {
        self.high_regrets.extend(other.high_regrets);
        self.low_regrets.extend(other.low_regrets);
        self.high_strategies.extend(other.high_strategies);
        self.low_strategies.extend(other.low_strategies);
    }

    pub fn is_empty(&self) -> bool {
        self.high_regrets.is_empty()
            && self.low_regrets.is_empty()
            && self.high_strategies.is_empty()
            && self.low_strategies.is_empty()
    }
}

/// One step of a stored trajectory, carrying what baseline targets need
/// besides the next strategy: sampling probabilities and the baselines in
/// force when it was sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep<S> {
    /// Acting infoset; `None` at chance.
    pub info: Option<InfoKey>,
    /// History after this step, i.e. the `hza` key.
    pub child: HistoryKey,
    pub z: usize,
    pub a: usize,
    pub num_actions: usize,
    pub q_option: S,
    pub q_action: S,
    /// `b^t(h, z)` for every option.
    pub baseline_high: Vec<S>,
    /// `b^t(h, z*, a)` for every action under the sampled option.
    pub baseline_low: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub steps: Vec<TrajectoryStep<S>>,
    pub terminal_u1: S,
}

/// Sampled values at one node of the trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep<S> {
    pub history: HistoryKey,
    pub z: usize,
    /// `v̂(h, z)` for every option.
    pub high: Vec<S>,
    /// `v̂(hz*, a)` for every action.
    pub low: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout<S> {
    /// `v̂^H(root | h′)`.
    pub value: S,
    /// `π^q(h′)`.
    pub q_reach: S,
    pub path: Vec<HierAction>,
    pub records: RolloutRecord<S>,
    pub trajectory: Trajectory<S>,
    pub trace: Vec<TraceStep<S>>,
}

struct Frame<S> {
    history: HistoryKey,
    player: Option<usize>,
    info: Option<InfoKey>,
    child: HistoryKey,
    z: usize,
    a: usize,
    sigma_high: Vec<S>,
    sigma_low: Vec<S>,
    q_option: S,
    q_action: S,
    baseline_high: Vec<S>,
    baseline_low: Vec<S>,
    own_q_reach: S,
}

/// Samples one trajectory and computes its estimates and records.
pub fn rollout<S, P, B, C>(
    game: &Game,
    policy: &P,
    baseline: &B,
    q: SampleStrategy,
    chooser: &mut C,
    options: RolloutOptions,
) -> Rollout<S>
where
    S: Scalar,
    P: Policy<S> + ?Sized,
    B: Baseline<S> + ?Sized,
    C: Chooser,
{
    let mut h = game.root();
    let mut key = h.key();
    let mut frames: Vec<Frame<S>> = Vec::new();
    let mut own_q_reach = S::one();
    let mut q_reach = S::one();
    let mut path = Vec::new();
    let mut strategy_sites: Vec<(InfoKey, Vec<S>, usize, Vec<S>)> = Vec::new();

    while !h.is_terminal() {
        let legal = game.legal_moves(&h);
        let frame = match (h.actor(), legal) {
            (Actor::Chance, LegalMoves::Chance { cards }) => {
                let na = cards.len();
                let sigma = uniform::<S>(na);
                let children: Vec<HistoryKey> = cards.iter().map(|&c| key.child(Step::Deal(c))).collect();
                let b_low: Vec<S> = children.iter().map(|k| baseline.value(k)).collect();
                chooser.option(&[S::one()]);
                let a = chooser.action(&sigma);
                Frame {
                    history: key.clone(),
                    player: None,
                    info: None,
                    child: children[a].clone(),
                    z: 0,
                    a,
                    baseline_high: vec![dot(&sigma, &b_low)],
                    q_action: sigma[a],
                    sigma_low: sigma,
                    sigma_high: vec![S::one()],
                    q_option: S::one(),
                    baseline_low: b_low,
                    own_q_reach,
                }
            }
            (Actor::Player(p), LegalMoves::Decision { options: nz, actions }) => {
                let na = actions.len();
                let info = game.info_key(&h);
                let sigma_high = policy.high(&info, nz);
                let lows: Vec<Vec<S>> = (0..nz).map(|z| policy.low(&info, z, na)).collect();
                let child_key = |z: usize, a: usize| {
                    key.child(Step::Move {
                        player: p as u8,
                        z: z as u8,
                        action: actions[a],
                    })
                };
                let b_all: Vec<Vec<S>> = (0..nz)
                    .map(|z| (0..na).map(|a| baseline.value(&child_key(z, a))).collect())
                    .collect();
                let baseline_high: Vec<S> = (0..nz).map(|z| dot(&lows[z], &b_all[z])).collect();
                let qh = q.q(p, &sigma_high);
                let z = chooser.option(&qh);
                let ql = q.q(p, &lows[z]);
                let a = chooser.action(&ql);
                if p != q.traverser {
                    strategy_sites.push((info.clone(), sigma_high.clone(), z, lows[z].clone()));
                }
                let f = Frame {
                    history: key.clone(),
                    player: Some(p),
                    info: Some(info),
                    child: child_key(z, a),
                    z,
                    a,
                    sigma_high,
                    sigma_low: lows[z].clone(),
                    q_option: qh[z],
                    q_action: ql[a],
                    baseline_high,
                    baseline_low: b_all[z].clone(),
                    own_q_reach,
                };
                if p == q.traverser {
                    own_q_reach *= f.q_option * f.q_action;
                }
                f
            }
            _ => unreachable!("actor and legal moves agree"),
        };
        q_reach *= frame.q_option * frame.q_action;
        let m = HierAction::new(frame.z, frame.a);
        path.push(m);
        h = game.apply(&h, m).expect("sampled move is legal");
        key = frame.child.clone();
        frames.push(frame);
    }

    let u1 = S::from_chips(game.utility(&h, 0));
    let sign = if q.traverser == 0 { S::one() } else { -S::one() };
    let mut records = RolloutRecord::default();
    let mut trace = Vec::new();
    let mut v = u1;
    for f in frames.iter().rev() {
        let low: Vec<S> = f
            .baseline_low
            .iter()
            .enumerate()
            .map(|(a, &b)| if a == f.a { b + (v - b) / f.q_action } else { b })
            .collect();
        let v_low = dot(&f.sigma_low, &low);
        let high: Vec<S> = f
            .baseline_high
            .iter()
            .enumerate()
            .map(|(z, &b)| if z == f.z { b + (v_low - b) / f.q_option } else { b })
            .collect();
        let v_high = dot(&f.sigma_high, &high);
        if f.player == Some(q.traverser) {
            let info = f.info.as_ref().expect("decision frame has a key");
            let w = sign / f.own_q_reach;
            records.high_regrets.push((info.clone(), high.iter().map(|&x| w * (x - v_high)).collect()));
            if options.low_regrets {
                let wl = w / f.q_option;
                records
                    .low_regrets
                    .push((LowKey::new(info.clone(), f.z), low.iter().map(|&x| wl * (x - v_low)).collect()));
            }
        }
        if options.trace {
            trace.push(TraceStep {
                history: f.history.clone(),
                z: f.z,
                high,
                low,
            });
        }
        v = v_high;
    }
    records.high_regrets.reverse();
    records.low_regrets.reverse();
    trace.reverse();

    let sites: Vec<_> = match options.strategy_recording {
        StrategyRecording::AllVisited => strategy_sites,
        StrategyRecording::OneRandom if strategy_sites.is_empty() => strategy_sites,
        StrategyRecording::OneRandom => {
            let k = chooser.pick(strategy_sites.len());
            vec![strategy_sites.swap_remove(k)]
        }
    };
    for (info, high, z, low) in sites {
        records.low_strategies.push((LowKey::new(info.clone(), z), low));
        records.high_strategies.push((info, high));
    }

    let trajectory = Trajectory {
        steps: frames
            .into_iter()
            .map(|f| TrajectoryStep {
                info: f.info,
                child: f.child,
                z: f.z,
                a: f.a,
                num_actions: f.baseline_low.len(),
                q_option: f.q_option,
                q_action: f.q_action,
                baseline_high: f.baseline_high,
                baseline_low: f.baseline_low,
            })
            .collect(),
        terminal_u1: u1,
    };
    Rollout {
        value: v,
        q_reach,
        path,
        records,
        trajectory,
        trace,
    }
}

/// Output of one `(t, i)` block of traversals.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversalBatch<S> {
    pub records: RolloutRecord<S>,
    /// Trajectories for baseline training; only filled when player 1
    /// traverses.
    pub trajectories: Vec<Trajectory<S>>,
}

/// `K` independent rollouts. Traversal `k` draws from its own generator
/// seeded by `(seed, t, i, k)`, and results are concatenated in `k` order, so
/// the batch does not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn collect_traversals<S, P, B>(
    game: &Game,
    policy: &P,
    baseline: &B,
    q: SampleStrategy,
    traversals: usize,
    seed: u64,
    iteration: usize,
    options: RolloutOptions,
) -> TraversalBatch<S>
where
    S: Scalar,
    P: Policy<S> + ?Sized,
    B: Baseline<S> + ?Sized,
{
    let rollouts: Vec<Rollout<S>> = (0..traversals)
        .into_par_iter()
        .map(|k| {
            let s = mix_seed(seed, &[iteration as u64, q.traverser as u64, k as u64]);
            let mut chooser = RngChooser(ChaCha8Rng::seed_from_u64(s));
            rollout(game, policy, baseline, q, &mut chooser, options)
        })
        .collect();
    let mut batch = TraversalBatch {
        records: RolloutRecord::default(),
        trajectories: Vec::new(),
    };
    for r in rollouts {
        batch.records.extend(r.records);
        if q.traverser == 0 {
            batch.trajectories.push(r.trajectory);
        }
    }
    batch
}

/// `Σ_{h′} π^q(h′)·r̂(·|h′)` over every terminal of `tree`, laid out like
/// [`TreeRegrets`]. Keys missing from the tree are ignored.
pub fn exhaustive_expectation<S, P, B>(tree: &GameTree, policy: &P, baseline: &B, q: SampleStrategy) -> TreeRegrets<S>
where
    S: Scalar,
    P: Policy<S> + ?Sized,
    B: Baseline<S> + ?Sized,
{
    let mut out = TreeRegrets::zeros(tree);
    for t in tree.terminals() {
        let path = tree.path(t);
        let mut chooser = ForcedChooser::new(&path);
        let r = rollout(tree.game(), policy, baseline, q, &mut chooser, RolloutOptions::default());
        if r.q_reach == S::zero() {
            continue;
        }
        for (key, v) in &r.records.high_regrets {
            if let Some(id) = tree.infoset_id(key) {
                let o = tree.infosets[id].high_offset;
                for (k, &x) in v.iter().enumerate() {
                    out.high[o + k] += r.q_reach * x;
                }
            }
        }
        for (key, v) in &r.records.low_regrets {
            if let Some(id) = tree.infoset_id(&key.info) {
                let i = &tree.infosets[id];
                let o = i.low_offset + key.z as usize * i.num_actions();
                for (k, &x) in v.iter().enumerate() {
                    out.low[o + k] += r.q_reach * x;
                }
            }
        }
    }
    out
}
