use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::game::{Actor, Game, HierAction, InfoKey, LegalMoves, Prev};
use crate::rng::{mix_seed, sample_index};
use crate::scalar::Scalar;
use crate::strategy::Policy;

/// A hierarchical player: a policy and the option count it was trained with.
pub struct Agent<P> {
    pub policy: P,
    pub num_options: usize,
}

impl<P> Agent<P> {
    pub fn new(policy: P, num_options: usize) -> Self {
        Agent { policy, num_options }
    }
}

/// One hand as played, for transcripts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HandRecord {
    /// Cards in deal order.
    pub cards: Vec<u8>,
    /// Public action string.
    pub actions: String,
    /// `(seat, option)` per decision, in order.
    pub options: Vec<(usize, u8)>,
    pub payoff: [i32; 2],
}

/// Plays one hand of the base game. Cards come from a stream seeded by
/// `deal_seed`, so replays with the same seed see the same deal whatever the
/// players do; choices draw from `rng`.
pub fn play_hand<S: Scalar, P: Policy<S>, R: Rng>(
    game: &Game,
    agents: [&Agent<P>; 2],
    deal_seed: u64,
    rng: &mut R,
) -> HandRecord {
    let mut deal = ChaCha8Rng::seed_from_u64(deal_seed);
    let mut h = game.root();
    let mut cards = Vec::new();
    let mut options = Vec::new();
    let mut last: [Option<u8>; 2] = [None; 2];
    loop {
        match h.actor() {
            Actor::Terminal => break,
            Actor::Chance => {
                let LegalMoves::Chance { cards: deck } = game.legal_moves(&h) else {
                    unreachable!("chance node has a deck")
                };
                let a = deal.random_range(0..deck.len());
                cards.push(deck[a]);
                h = game.apply(&h, HierAction::new(0, a)).expect("dealt card is legal");
            }
            Actor::Player(p) => {
                let agent = agents[p];
                let prev = last[p].map_or(Prev::Initial, Prev::Option);
                let key: InfoKey = game.base_info_key(&h).with_prev(prev);
                let na = game.legal_moves(&h).num_actions();
                let z = sample_index(&agent.policy.high(&key, agent.num_options), rng);
                let a = sample_index(&agent.policy.low(&key, z, na), rng);
                options.push((p, z as u8));
                last[p] = Some(z as u8);
                h = game.apply(&h, HierAction::new(0, a)).expect("sampled action is legal");
            }
        }
    }
    HandRecord {
        cards,
        actions: h.public_actions().to_string(),
        options,
        payoff: [game.utility(&h, 0), game.utility(&h, 1)],
    }
}

/// One transcript line: a deal played with agent A in `seat_a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchRecord {
    pub hand: usize,
    pub seat_a: usize,
    #[serde(flatten)]
    pub record: HandRecord,
    pub payoff_a: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeadToHead {
    /// Mean payoff to A in milli-big-blinds per game.
    pub mean_mbbg: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci95_mbbg: f64,
    pub deals: usize,
    #[serde(skip)]
    pub transcript: Vec<MatchRecord>,
}

/// Duplicate match: every deal is played twice with seats swapped, and the
/// per-deal mean of A's payoffs is one sample.
pub fn head_to_head<S: Scalar, A: Policy<S>, B: Policy<S>>(
    game: &Game,
    a: &Agent<A>,
    b: &Agent<B>,
    deals: usize,
    seed: u64,
    keep_transcript: bool,
) -> HeadToHead {
    const SHARD: usize = 2048;
    let bb = game.config().big_blind as f64;
    let shards: Vec<(Vec<f64>, Vec<MatchRecord>)> = (0..deals.div_ceil(SHARD))
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[s as u64]));
            let lo = s * SHARD;
            let hi = deals.min(lo + SHARD);
            let mut samples = Vec::with_capacity(hi - lo);
            let mut lines = Vec::new();
            for hand in lo..hi {
                let deal_seed = rng.random::<u64>();
                let first = play_pair(game, a, b, 0, deal_seed, &mut rng);
                let second = play_pair(game, a, b, 1, deal_seed, &mut rng);
                let ua = [first.payoff[0], second.payoff[1]];
                samples.push(0.5 * (ua[0] + ua[1]) as f64);
                if keep_transcript {
                    for (seat_a, record) in [(0, first), (1, second)] {
                        let payoff_a = record.payoff[seat_a];
                        lines.push(MatchRecord {
                            hand,
                            seat_a,
                            record,
                            payoff_a,
                        });
                    }
                }
            }
            (samples, lines)
        })
        .collect();
    let mut samples = Vec::with_capacity(deals);
    let mut transcript = Vec::new();
    for (s, l) in shards {
        samples.extend(s);
        transcript.extend(l);
    }
    let n = samples.len().max(1) as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let to_mbb = 1000.0 / bb;
    HeadToHead {
        mean_mbbg: mean * to_mbb,
        ci95_mbbg: 1.96 * (var / n).sqrt() * to_mbb,
        deals: samples.len(),
        transcript,
    }
}

fn play_pair<S: Scalar, A: Policy<S>, B: Policy<S>>(
    game: &Game,
    a: &Agent<A>,
    b: &Agent<B>,
    seat_a: usize,
    deal_seed: u64,
    rng: &mut ChaCha8Rng,
) -> HandRecord {
    let a = Agent::new(Either::<&A, &B>::Left(&a.policy), a.num_options);
    let b = Agent::new(Either::<&A, &B>::Right(&b.policy), b.num_options);
    let seats = if seat_a == 0 { [&a, &b] } else { [&b, &a] };
    play_hand(game, seats, deal_seed, rng)
}

enum Either<L, R> {
    Left(L),
    Right(R),
}

impl<S: Scalar, L: Policy<S>, R: Policy<S>> Policy<S> for Either<L, R> {
    fn high(&self, key: &InfoKey, n: usize) -> Vec<S> {
        match self {
            Either::Left(p) => p.high(key, n),
            Either::Right(p) => p.high(key, n),
        }
    }

    fn low(&self, key: &InfoKey, z: usize, n: usize) -> Vec<S> {
        match self {
            Either::Left(p) => p.low(key, z, n),
            Either::Right(p) => p.low(key, z, n),
        }
    }
}
