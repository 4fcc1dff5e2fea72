use std::collections::HashMap;

use super::rules::{Betting, Outcome};
use super::GameConfig;
use crate::error::ConfigError;

/// Node count of the base game's public tree, excluding its root.
///
/// The public tree has no private deals: its root is the first decision, the
/// board deal branches over every card of the deck, and fold, showdown and
/// chance nodes each count once. Options play no part (`|Z|` is ignored).
pub fn count_base_tree(config: &GameConfig) -> Result<u64, ConfigError> {
    config.validate()?;
    let mut memo = HashMap::new();
    Ok(count_from(config, &Betting::new(config), &mut memo) - 1)
}

fn count_from(cfg: &GameConfig, b: &Betting, memo: &mut HashMap<Betting, u64>) -> u64 {
    if let Some(&n) = memo.get(b) {
        return n;
    }
    let mut n = 1;
    for action in b.legal_actions(cfg) {
        let mut next = b.clone();
        n += match next.apply(cfg, action) {
            Outcome::Folded => 1,
            Outcome::Continue => count_from(cfg, &next, memo),
            Outcome::RoundClosed if (next.round as usize) + 1 < cfg.rounds() => {
                next.next_round();
                1 + cfg.deck_size() as u64 * count_from(cfg, &next, memo)
            }
            Outcome::RoundClosed => 1,
        };
    }
    memo.insert(b.clone(), n);
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kuhn_public_tree() {
        // c→{c, r→{f, c}}, r→{f, c}: eight nodes below the root.
        assert_eq!(count_base_tree(&GameConfig::kuhn(3)).unwrap(), 8);
    }

    #[test]
    fn options_do_not_change_the_count() {
        let a = count_base_tree(&GameConfig::leduc(1)).unwrap();
        let b = count_base_tree(&GameConfig::leduc(5)).unwrap();
        assert_eq!(a, b);
    }
}
