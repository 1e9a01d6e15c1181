//! Enumeration and uniform sampling of fixed-size rule subsets.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::Rng;

use crate::grammar::{universe_size, SrfGrammar};
use crate::sizecode::{binomial, random_below, subset_unrank, SizeCodeError};

/// Number of SRF grammars with `k` nonterminals and `r` rules.
pub fn grammar_count(k: usize, r: usize) -> BigUint {
    binomial(universe_size(k), r)
}

/// Size-`r` subsets of `0..universe` in colex order.
#[derive(Clone, Debug)]
pub struct Combinations {
    universe: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(universe: usize, r: usize) -> Combinations {
        let current = (r <= universe).then(|| (0..r).collect());
        Combinations { universe, current }
    }

    /// Starts at the subset of colex rank `rank`.
    pub fn from_rank(universe: usize, r: usize, rank: &BigUint) -> Combinations {
        let current = subset_unrank(universe, r, rank).ok();
        Combinations { universe, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.current.as_mut()?;
        let out = cur.clone();
        let r = cur.len();
        // lowest position that can grow without colliding with its successor
        let pos = (0..r).find(|&i| {
            let cap = if i + 1 < r { cur[i + 1] } else { self.universe };
            cur[i] + 1 < cap
        });
        match pos {
            Some(i) => {
                cur[i] += 1;
                for (j, v) in cur[..i].iter_mut().enumerate() {
                    *v = j;
                }
            }
            None => self.current = None,
        }
        Some(out)
    }
}

/// Every grammar with `k` nonterminals and `r` rules, in colex rank order.
pub fn enumerate_exhaustive(k: usize, r: usize) -> impl Iterator<Item = SrfGrammar> {
    Combinations::new(universe_size(k), r)
        .map(move |s| SrfGrammar::from_universe_indices(k, &s).expect("universe subsets are valid grammars"))
}

/// A uniformly random grammar with `k` nonterminals and `r` rules, with its
/// colex rank.
pub fn random_grammar<R: Rng + ?Sized>(k: usize, r: usize, rng: &mut R) -> Result<(SrfGrammar, BigUint), SizeCodeError> {
    let u = universe_size(k);
    if r > u {
        return Err(SizeCodeError::RuleCountOutOfRange { k, r, universe: u });
    }
    let count = binomial(u, r);
    let rank = if count.is_zero() { BigUint::zero() } else { random_below(rng, &count) };
    let subset = subset_unrank(u, r, &rank)?;
    let g = SrfGrammar::from_universe_indices(k, &subset).expect("universe subsets are valid grammars");
    Ok((g, rank))
}
