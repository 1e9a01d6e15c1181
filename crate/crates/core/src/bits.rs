//! MSB-first bit buffers.

use std::fmt;

/// A bit sequence packed MSB-first; trailing bits of the last byte are zero.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Bitstream {
    bytes: Vec<u8>,
    len: usize,
}

impl Bitstream {
    pub fn new() -> Bitstream {
        Bitstream::default()
    }

    /// Wraps whole bytes; the length is `8 * bytes.len()`.
    pub fn from_bytes(bytes: Vec<u8>) -> Bitstream {
        let len = bytes.len() * 8;
        Bitstream { bytes, len }
    }

    /// Wraps bytes holding `len` meaningful bits.
    pub fn from_parts(mut bytes: Vec<u8>, len: usize) -> Bitstream {
        assert!(len <= bytes.len() * 8);
        bytes.truncate(len.div_ceil(8));
        if !len.is_multiple_of(8) {
            let last = bytes.len() - 1;
            bytes[last] &= 0xffu8 << (8 - len % 8);
        }
        Bitstream { bytes, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_u64(&mut self, value: u64, width: usize) {
        for i in (0..width).rev() {
            self.push(i < 64 && (value >> i) & 1 == 1);
        }
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i).unwrap_or(false))
    }

    /// Lowercase hex of the packed bytes.
    pub fn to_hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_bit_string(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bit_string(s: &str) -> Option<Bitstream> {
        let mut out = Bitstream::new();
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return None,
            }
        }
        Some(out)
    }
}

impl fmt::Debug for Bitstream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstream({} bits: {})", self.len, self.to_bit_string())
    }
}

/// Sequential reader over a [`Bitstream`].
pub struct BitReader<'a> {
    bits: &'a Bitstream,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a Bitstream) -> BitReader<'a> {
        BitReader { bits, pos: 0 }
    }

    pub fn read(&mut self) -> Option<bool> {
        let b = self.bits.get(self.pos)?;
        self.pos += 1;
        Some(b)
    }

    /// Reads a bit, yielding zero past the end. The position still advances.
    pub fn read_or_zero(&mut self) -> bool {
        let b = self.bits.get(self.pos).unwrap_or(false);
        self.pos += 1;
        b
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len().saturating_sub(self.pos)
    }
}
