//! Binary arithmetic coder with 32-bit registers and pending-bit
//! (bits-to-follow) renormalization.
//!
//! Frequency totals are at most [`MAX_TOTAL`], so `range * cum` fits in
//! `u64` and every symbol keeps a nonempty subinterval.

use crate::bits::{BitReader, Bitstream};

const TOP: u64 = (1 << 32) - 1;
const HALF: u64 = 1 << 31;
const QUARTER: u64 = 1 << 30;
const THREE_QUARTERS: u64 = 3 << 30;

/// Largest permitted frequency total.
pub const MAX_TOTAL: u64 = 1 << 16;
/// Grid that model counts are scaled to.
pub const FREQ_SCALE: u64 = 1 << 14;

/// Scales counts to integer frequencies, each at least one.
///
/// `f_i = max(1, round(c_i * 2^14 / C))`, so the total never exceeds
/// `2^14 + n`.
pub fn quantize(counts: &[u64]) -> Vec<u32> {
    let total: u128 = counts.iter().map(|&c| c as u128).sum();
    assert!(total > 0, "counts must not all be zero");
    counts
        .iter()
        .map(|&c| {
            let f = (c as u128 * FREQ_SCALE as u128 * 2 + total) / (2 * total);
            f.max(1) as u32
        })
        .collect()
}

/// Cumulative table `cum[0] = 0, cum[i+1] = cum[i] + freq[i]`.
pub fn cumulative(freqs: &[u32]) -> Vec<u64> {
    let mut cum = Vec::with_capacity(freqs.len() + 1);
    cum.push(0);
    for &f in freqs {
        cum.push(cum.last().unwrap() + f as u64);
    }
    cum
}

pub struct Encoder {
    low: u64,
    high: u64,
    follow: u64,
    out: Bitstream,
}

impl Default for Encoder {
    fn default() -> Self {
        Encoder::new()
    }
}

impl Encoder {
    pub fn new() -> Encoder {
        Encoder { low: 0, high: TOP, follow: 0, out: Bitstream::new() }
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        for _ in 0..self.follow {
            self.out.push(!bit);
        }
        self.follow = 0;
    }

    /// Narrows to `[cum_low, cum_high)` out of `total`.
    pub fn encode(&mut self, cum_low: u64, cum_high: u64, total: u64) {
        debug_assert!(cum_low < cum_high && cum_high <= total && total <= MAX_TOTAL);
        let range = self.high - self.low + 1;
        self.high = self.low + range * cum_high / total - 1;
        self.low += range * cum_low / total;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.follow += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    /// Emits two disambiguating bits plus pending follow bits. The decoder
    /// reads at most 30 bits past the returned length.
    pub fn finish(mut self) -> Bitstream {
        self.follow += 1;
        let bit = self.low >= QUARTER;
        self.emit(bit);
        self.out
    }
}

/// Decoder reading zeros past the end of the stream.
pub struct Decoder<'a> {
    low: u64,
    high: u64,
    value: u64,
    reader: BitReader<'a>,
    limit: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(bits: &'a Bitstream) -> Decoder<'a> {
        let mut reader = BitReader::new(bits);
        let mut value = 0;
        for _ in 0..32 {
            value = (value << 1) | reader.read_or_zero() as u64;
        }
        Decoder { low: 0, high: TOP, value, reader, limit: bits.len() + 32 }
    }

    /// Cumulative frequency the next symbol's interval contains.
    pub fn target(&self, total: u64) -> u64 {
        let range = self.high - self.low + 1;
        ((self.value - self.low + 1) * total - 1) / range
    }

    /// Mirrors [`Encoder::encode`]. Returns false once more than 32 bits
    /// past the end have been requested, which no valid stream needs.
    pub fn consume(&mut self, cum_low: u64, cum_high: u64, total: u64) -> bool {
        let range = self.high - self.low + 1;
        self.high = self.low + range * cum_high / total - 1;
        self.low += range * cum_low / total;
        loop {
            if self.high < HALF {
            } else if self.low >= HALF {
                self.value -= HALF;
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.value -= QUARTER;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | self.reader.read_or_zero() as u64;
        }
        self.reader.position() <= self.limit
    }

    pub fn bits_read(&self) -> usize {
        self.reader.position()
    }
}

/// Index `s` with `cum[s] <= target < cum[s+1]`.
pub fn find_symbol(cum: &[u64], target: u64) -> usize {
    cum.partition_point(|&c| c <= target) - 1
}

/// Codes a symbol sequence under one fixed frequency table.
pub fn encode_symbols(freqs: &[u32], symbols: &[usize]) -> Bitstream {
    let cum = cumulative(freqs);
    let total = *cum.last().unwrap();
    let mut enc = Encoder::new();
    for &s in symbols {
        enc.encode(cum[s], cum[s + 1], total);
    }
    enc.finish()
}

/// Inverse of [`encode_symbols`] for a known symbol count.
pub fn decode_symbols(freqs: &[u32], bits: &Bitstream, n: usize) -> Option<Vec<usize>> {
    let cum = cumulative(freqs);
    let total = *cum.last().unwrap();
    let mut dec = Decoder::new(bits);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let s = find_symbol(&cum, dec.target(total));
        if s >= freqs.len() || !dec.consume(cum[s], cum[s + 1], total) {
            return None;
        }
        out.push(s);
    }
    Some(out)
}
