use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::game::{GameTree, NodeKind, Prev};
use crate::scalar::Scalar;
use crate::strategy::Policy;
use crate::tabular::reach;

use super::flatten::FlatStrategy;
use super::head_to_head::{play_hand, Agent};
use super::mix_seed;

/// Node weighting for [`switch_frequency`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwitchWeighting {
    /// Weight each node by its reach probability under the profile.
    #[default]
    Reach,
    /// Every non-initial decision node counts once.
    Unweighted,
}

/// Expected fraction of non-initial decisions where the sampled option differs
/// from the acting player's previous one, over both players.
pub fn switch_frequency<S: Scalar>(
    base: &GameTree,
    policy: &impl Policy<S>,
    flat: &FlatStrategy<S>,
    num_options: usize,
    weighting: SwitchWeighting,
) -> f64 {
    let r = reach(base, &flat.profile);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut p_switch: Vec<Option<f64>> = vec![None; base.infosets.len()];
    for (id, node) in base.nodes.iter().enumerate() {
        let NodeKind::Decision { infoset, .. } = node.kind else {
            continue;
        };
        let iset = infoset as usize;
        let Some(belief) = flat.prev_belief[iset].as_ref() else {
            continue;
        };
        let p = *p_switch[iset].get_or_insert_with(|| {
            let key = &base.infosets[iset].key;
            belief
                .iter()
                .enumerate()
                .map(|(z, &b)| {
                    let stay = policy.high(&key.with_prev(Prev::Option(z as u8)), num_options)[z];
                    b.as_f64() * (1.0 - stay.as_f64())
                })
                .sum()
        });
        let w = match weighting {
            SwitchWeighting::Reach => r.total(id).as_f64(),
            SwitchWeighting::Unweighted => 1.0,
        };
        num += w * p;
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Monte Carlo estimate of the reach-weighted [`switch_frequency`] from
/// self-play hands, as a ratio estimator with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEstimate {
    pub frequency: f64,
    pub std_err: f64,
    pub hands: usize,
}

pub fn switch_frequency_mc<S: Scalar, P: Policy<S>>(
    base: &GameTree,
    policy: &P,
    num_options: usize,
    hands: usize,
    seed: u64,
) -> SwitchEstimate {
    const SHARD: usize = 4096;
    let shards = hands.div_ceil(SHARD);
    // Per hand: switches x_k and non-initial decisions y_k.
    let sums = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[s as u64, 0x5717]));
            let agent = Agent::new(policy, num_options);
            let n = SHARD.min(hands - s * SHARD);
            let mut acc = [0.0f64; 5];
            for _ in 0..n {
                let deal_seed = rand::Rng::random::<u64>(&mut rng);
                let rec = play_hand(base.game(), [&agent, &agent], deal_seed, &mut rng);
                let (mut x, mut y) = (0.0, 0.0);
                let mut last = [None::<u8>; 2];
                for &(p, z) in &rec.options {
                    if let Some(prev) = last[p] {
                        y += 1.0;
                        if prev != z {
                            x += 1.0;
                        }
                    }
                    last[p] = Some(z);
                }
                acc[0] += x;
                acc[1] += y;
                acc[2] += x * x;
                acc[3] += y * y;
                acc[4] += x * y;
            }
            acc
        })
        .reduce(|| [0.0; 5], |a, b| std::array::from_fn(|i| a[i] + b[i]));
    let n = hands as f64;
    let (mx, my) = (sums[0] / n, sums[1] / n);
    if my == 0.0 {
        return SwitchEstimate {
            frequency: 0.0,
            std_err: 0.0,
            hands,
        };
    }
    let ratio = mx / my;
    let vx = sums[2] / n - mx * mx;
    let vy = sums[3] / n - my * my;
    let cxy = sums[4] / n - mx * my;
    let var = (vx - 2.0 * ratio * cxy + ratio * ratio * vy) / (my * my * n);
    SwitchEstimate {
        frequency: ratio,
        std_err: var.max(0.0).sqrt(),
        hands,
    }
}
