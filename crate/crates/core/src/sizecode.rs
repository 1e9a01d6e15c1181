//! Self-description size of a grammar and the matching bit-level codec.
//!
//! A grammar with `k` nonterminals and `r` rules costs
//!
//! * `2⌊log2 k⌋ + 1` bits for `k` in Elias gamma,
//! * `⌈log2(U + 1)⌉` bits for `r` in fixed-width binary, `U = |rule_universe(k)|`,
//! * `⌈log2 C(U, r)⌉` bits for the colex rank of its rule set.
//!
//! Binomials are exact big integers.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::bits::{BitReader, Bitstream};
use crate::grammar::{universe_size, SrfGrammar};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SizeCodeError {
    #[error("rule count {r} not in 1..={universe} for {k} nonterminals")]
    RuleCountOutOfRange { k: usize, r: usize, universe: usize },
    #[error("rank is not below C({universe}, {r})")]
    RankOutOfRange { universe: usize, r: usize },
    #[error("malformed code: {0}")]
    MalformedCode(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GrammarSizeBreakdown {
    pub gamma_bits: u64,
    pub rulecount_bits: u64,
    pub subset_bits: u64,
    pub total: u64,
}

/// `C(n, r)` exactly.
pub fn binomial(n: usize, r: usize) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(n, r)` when it fits in a `u64`.
pub fn binomial_u64(n: usize, r: usize) -> Option<u64> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Smallest `b` with `2^b >= x`; zero for `x <= 1`.
pub fn ceil_log2(x: &BigUint) -> u64 {
    if *x <= BigUint::one() {
        0
    } else {
        (x - 1u32).bits()
    }
}

fn ceil_log2_usize(x: usize) -> u64 {
    ceil_log2(&BigUint::from(x))
}

pub fn grammar_size_bits(k: usize, r: usize) -> Result<GrammarSizeBreakdown, SizeCodeError> {
    let universe = universe_size(k);
    if k == 0 || r == 0 || r > universe {
        return Err(SizeCodeError::RuleCountOutOfRange { k, r, universe });
    }
    let gamma_bits = 2 * u64::from(k.ilog2()) + 1;
    let rulecount_bits = ceil_log2_usize(universe + 1);
    let subset_bits = ceil_log2(&binomial(universe, r));
    Ok(GrammarSizeBreakdown { gamma_bits, rulecount_bits, subset_bits, total: gamma_bits + rulecount_bits + subset_bits })
}

pub fn elias_gamma_encode(n: u64, out: &mut Bitstream) {
    assert!(n >= 1, "Elias gamma needs a positive integer");
    let width = 64 - n.leading_zeros() as usize;
    out.push_u64(0, width - 1);
    out.push_u64(n, width);
}

/// Decodes one gamma code, returning the value and the bits consumed.
pub fn elias_gamma_decode(reader: &mut BitReader<'_>) -> Result<(u64, usize), SizeCodeError> {
    let start = reader.position();
    let mut zeros = 0;
    loop {
        match reader.read() {
            Some(false) => zeros += 1,
            Some(true) => break,
            None => return Err(SizeCodeError::MalformedCode("gamma code runs past the end".into())),
        }
        if zeros >= 64 {
            return Err(SizeCodeError::MalformedCode("gamma prefix too long".into()));
        }
    }
    let mut n = 1u64;
    for _ in 0..zeros {
        let bit = reader.read().ok_or_else(|| SizeCodeError::MalformedCode("truncated gamma code".into()))?;
        n = n << 1 | bit as u64;
    }
    Ok((n, reader.position() - start))
}

/// Colex rank: `Σ C(s_i, i + 1)` over the sorted subset.
pub fn subset_rank(universe: usize, subset: &[usize]) -> Result<BigUint, SizeCodeError> {
    let mut rank = BigUint::zero();
    for (i, &s) in subset.iter().enumerate() {
        if s >= universe || (i > 0 && subset[i - 1] >= s) {
            return Err(SizeCodeError::MalformedCode(format!(
                "subset must be strictly increasing and below {universe}"
            )));
        }
        rank += binomial(s, i + 1);
    }
    Ok(rank)
}

/// Inverse of [`subset_rank`].
pub fn subset_unrank(universe: usize, r: usize, rank: &BigUint) -> Result<Vec<usize>, SizeCodeError> {
    if r > universe || *rank >= binomial(universe, r) {
        return Err(SizeCodeError::RankOutOfRange { universe, r });
    }
    let mut rest = rank.clone();
    let mut out = vec![0; r];
    let mut upper = universe; // exclusive bound for the current element
    for i in (1..=r).rev() {
        // Largest c < upper with C(c, i) <= rest; c >= i - 1 always qualifies.
        let (mut lo, mut hi) = (i - 1, upper - 1);
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if binomial(mid, i) <= rest {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        rest -= binomial(lo, i);
        out[i - 1] = lo;
        upper = lo;
    }
    Ok(out)
}

/// Writes `value` in exactly `width` bits.
fn push_biguint(out: &mut Bitstream, value: &BigUint, width: u64) {
    for i in (0..width).rev() {
        out.push(value.bit(i));
    }
}

pub fn serialize_grammar(g: &SrfGrammar) -> Bitstream {
    let (k, r) = (g.nts(), g.len());
    let size = grammar_size_bits(k, r).expect("valid grammars have 1..=U rules");
    let mut out = Bitstream::new();
    elias_gamma_encode(k as u64, &mut out);
    out.push_u64(r as u64, size.rulecount_bits as usize);
    let rank = subset_rank(universe_size(k), &g.universe_indices()).expect("grammar rules are a sorted subset");
    push_biguint(&mut out, &rank, size.subset_bits);
    debug_assert_eq!(out.len() as u64, size.total);
    out
}

pub fn deserialize_grammar(bits: &Bitstream) -> Result<SrfGrammar, SizeCodeError> {
    let mut reader = BitReader::new(bits);
    let g = read_grammar(&mut reader)?;
    if reader.remaining() != 0 {
        return Err(SizeCodeError::MalformedCode(format!("{} trailing bits", reader.remaining())));
    }
    Ok(g)
}

/// Decodes a grammar from whole bytes, as printed in hex; the padding after
/// the code must be zero bits.
pub fn deserialize_grammar_bytes(bytes: &[u8]) -> Result<SrfGrammar, SizeCodeError> {
    let bits = Bitstream::from_bytes(bytes.to_vec());
    let mut reader = BitReader::new(&bits);
    let g = read_grammar(&mut reader)?;
    if reader.remaining() >= 8 || std::iter::from_fn(|| reader.read()).any(|b| b) {
        return Err(SizeCodeError::MalformedCode("padding is not a partial byte of zeros".into()));
    }
    Ok(g)
}

/// Reads one grammar code from the front of `reader`.
pub fn read_grammar(reader: &mut BitReader<'_>) -> Result<SrfGrammar, SizeCodeError> {
    let (k, _) = elias_gamma_decode(reader)?;
    let k = usize::try_from(k).map_err(|_| SizeCodeError::MalformedCode("nonterminal count too large".into()))?;
    if k > 1 << 16 {
        return Err(SizeCodeError::MalformedCode(format!("implausible nonterminal count {k}")));
    }
    let universe = universe_size(k);
    let mut r = 0usize;
    for _ in 0..ceil_log2_usize(universe + 1) {
        let bit = reader.read().ok_or_else(|| SizeCodeError::MalformedCode("truncated rule count".into()))?;
        r = r << 1 | bit as usize;
    }
    let size = grammar_size_bits(k, r).map_err(|e| SizeCodeError::MalformedCode(e.to_string()))?;
    let mut rank = BigUint::zero();
    for _ in 0..size.subset_bits {
        let bit = reader.read().ok_or_else(|| SizeCodeError::MalformedCode("truncated subset rank".into()))?;
        rank = (rank << 1u8) + u32::from(bit);
    }
    let indices = subset_unrank(universe, r, &rank).map_err(|e| SizeCodeError::MalformedCode(e.to_string()))?;
    SrfGrammar::from_universe_indices(k, &indices).map_err(|e| SizeCodeError::MalformedCode(e.to_string()))
}

/// Colex rank as `u64`, when it fits.
pub fn subset_rank_u64(subset: &[usize]) -> Option<u64> {
    let mut rank: u64 = 0;
    for (i, &s) in subset.iter().enumerate() {
        rank = rank.checked_add(binomial_u64(s, i + 1)?)?;
    }
    Some(rank)
}

/// Uniformly random `BigUint` below `bound` (which must be positive).
pub fn random_below<R: rand::Rng + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    use num_bigint::RandBigInt;
    rng.gen_biguint_below(bound)
}
