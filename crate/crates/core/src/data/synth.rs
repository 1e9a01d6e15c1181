//! Synthetic RNA generators.
//!
//! [`UniformSampler`] draws uniformly among all valid records of a given
//! length: every unpaired position carries one of 4 bases, every pair one of
//! the 6 canonical pairs, and no hairpin is empty. [`stem_loop`] builds
//! folded-looking records from helices, loops and multiloops.

use rand::distributions::WeightedIndex;
use rand::prelude::*;

use super::RnaRecord;
use crate::alphabet::{Base, BasePair, Mark};

/// Uniform sampler over valid joint words up to a maximum length.
pub struct UniformSampler {
    /// `scaled[n]` is the number of valid words of length `n` divided by `8^n`.
    scaled: Vec<f64>,
}

impl UniformSampler {
    pub fn new(max_len: usize) -> UniformSampler {
        let mut scaled = vec![0.0; max_len + 1];
        scaled[0] = 1.0;
        for n in 1..=max_len {
            let mut s = 0.5 * scaled[n - 1];
            for m in 1..n.saturating_sub(1) {
                s += 6.0 / 64.0 * scaled[m] * scaled[n - 2 - m];
            }
            scaled[n] = s;
        }
        UniformSampler { scaled }
    }

    pub fn max_len(&self) -> usize {
        self.scaled.len() - 1
    }

    /// Draws a structure and sequence of length `len`.
    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> (Vec<Base>, Vec<Mark>) {
        assert!(len <= self.max_len(), "length exceeds the sampler's table");
        let mut seq = vec![Base::A; len];
        let mut st = vec![Mark::Dot; len];
        let mut todo = vec![(0usize, len)];
        while let Some((start, n)) = todo.pop() {
            if n == 0 {
                continue;
            }
            // unpaired first position, or a pair enclosing `m` positions
            let mut x = rng.gen::<f64>() * self.scaled[n];
            let mut inner = None;
            x -= 0.5 * self.scaled[n - 1];
            if x >= 0.0 {
                for m in 1..n.saturating_sub(1) {
                    inner = Some(m);
                    x -= 6.0 / 64.0 * self.scaled[m] * self.scaled[n - 2 - m];
                    if x < 0.0 {
                        break;
                    }
                }
            }
            match inner {
                None => {
                    seq[start] = Base::ALL[rng.gen_range(0..4)];
                    todo.push((start + 1, n - 1));
                }
                Some(m) => {
                    let BasePair(l, r) = BasePair::CANONICAL[rng.gen_range(0..6)];
                    let close = start + m + 1;
                    (seq[start], seq[close]) = (l, r);
                    (st[start], st[close]) = (Mark::Open, Mark::Close);
                    todo.push((start + 1, m));
                    todo.push((close + 1, n - m - 2));
                }
            }
        }
        (seq, st)
    }
}

/// `count` uniformly random valid records of length `len`.
pub fn uniform_records<R: Rng + ?Sized>(count: usize, len: usize, rng: &mut R) -> Vec<RnaRecord> {
    let sampler = UniformSampler::new(len);
    (0..count)
        .map(|i| {
            let (seq, st) = sampler.sample(len, rng);
            RnaRecord::new(format!("uniform_{i}"), seq, st).expect("sampler emits valid records")
        })
        .collect()
}

struct Builder<'r, R: Rng + ?Sized> {
    rng: &'r mut R,
    seq: Vec<Base>,
    st: Vec<Mark>,
    pairs: WeightedIndex<f64>,
    bases: WeightedIndex<f64>,
}

impl<R: Rng + ?Sized> Builder<'_, R> {
    fn unpaired(&mut self, n: usize) {
        for _ in 0..n {
            self.seq.push(Base::ALL[self.bases.sample(self.rng)]);
            self.st.push(Mark::Dot);
        }
    }

    /// A helix of 3 to 7 pairs closing a hairpin, an interior loop or a
    /// multiloop.
    fn helix(&mut self, depth: usize) {
        let stem = self.rng.gen_range(3..=7);
        let mut closing = Vec::with_capacity(stem);
        for _ in 0..stem {
            let p = BasePair::CANONICAL[self.pairs.sample(self.rng)];
            self.seq.push(p.0);
            self.st.push(Mark::Open);
            closing.push(p.1);
        }
        let roll: f64 = self.rng.gen();
        if depth >= 3 || roll < 0.5 {
            let n = self.rng.gen_range(3..=8);
            self.unpaired(n);
        } else if roll < 0.75 {
            let (l, r) = (self.rng.gen_range(0..=3), self.rng.gen_range(0..=3));
            self.unpaired(l);
            self.helix(depth + 1);
            self.unpaired(r);
        } else {
            let branches = self.rng.gen_range(2..=3);
            for _ in 0..branches {
                let n = self.rng.gen_range(0..=3);
                self.unpaired(n);
                self.helix(depth + 1);
            }
            let n = self.rng.gen_range(1..=3);
            self.unpaired(n);
        }
        for b in closing.into_iter().rev() {
            self.seq.push(b);
            self.st.push(Mark::Close);
        }
    }
}

/// A record of one to three helices separated by unpaired runs, with length
/// in `min_len..=max_len`.
pub fn stem_loop<R: Rng + ?Sized>(id: &str, min_len: usize, max_len: usize, rng: &mut R) -> RnaRecord {
    assert!(min_len <= max_len && max_len >= 12);
    loop {
        let mut b = Builder {
            rng: &mut *rng,
            seq: Vec::new(),
            st: Vec::new(),
            pairs: WeightedIndex::new([0.16, 0.28, 0.28, 0.06, 0.16, 0.06]).unwrap(),
            bases: WeightedIndex::new([0.34, 0.18, 0.2, 0.28]).unwrap(),
        };
        let helices = b.rng.gen_range(1..=3);
        for _ in 0..helices {
            let n = b.rng.gen_range(0..=6);
            b.unpaired(n);
            b.helix(0);
        }
        let n = b.rng.gen_range(0..=6);
        b.unpaired(n);
        if (min_len..=max_len).contains(&b.seq.len()) {
            return RnaRecord::new(id, b.seq, b.st).expect("builder emits valid records");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn count_valid(n: usize) -> f64 {
        // words over {unpaired x4, canonical pair x6}, no empty hairpin
        let mut w = vec![0.0f64; n + 1];
        w[0] = 1.0;
        for len in 1..=n {
            let mut s = 4.0 * w[len - 1];
            for m in 1..len.saturating_sub(1) {
                s += 6.0 * w[m] * w[len - 2 - m];
            }
            w[len] = s;
        }
        w[n]
    }

    #[test]
    fn scaled_counts_match_direct_counts() {
        let s = UniformSampler::new(12);
        for n in 0..=12 {
            let direct = count_valid(n) / 8f64.powi(n as i32);
            assert!((s.scaled[n] - direct).abs() <= 1e-12 * direct, "n={n}");
        }
        assert_eq!(count_valid(3), 64.0 + 24.0);
    }

    #[test]
    fn uniform_over_length_three() {
        // 64 all-unpaired words and 24 hairpins
        let s = UniformSampler::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 88_000;
        let hairpins = (0..trials).filter(|_| s.sample(3, &mut rng).1[0] == Mark::Open).count();
        let expect = trials as f64 * 24.0 / 88.0;
        let sd = (trials as f64 * (24.0 / 88.0) * (64.0 / 88.0)).sqrt();
        assert!((hairpins as f64 - expect).abs() < 5.0 * sd, "{hairpins}");
    }

    #[test]
    fn generators_emit_valid_records() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for r in uniform_records(20, 200, &mut rng) {
            assert_eq!(r.len(), 200);
            assert!(r.non_canonical_pair().is_none());
        }
        for i in 0..50 {
            let r = stem_loop(&format!("s{i}"), 40, 120, &mut rng);
            assert!((40..=120).contains(&r.len()));
            assert!(r.non_canonical_pair().is_none());
        }
    }
}
