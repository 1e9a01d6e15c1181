//! Terminal alphabet: RNA bases, dot-bracket marks and their pairing.

use std::fmt;

/// One of the four RNA bases.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Base {
    A,
    C,
    G,
    U,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::U];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Base {
        Base::ALL[i]
    }

    /// Parses a nucleotide letter, case-insensitively, reading `T` as `U`.
    pub fn from_char(c: char) -> Option<Base> {
        match c.to_ascii_uppercase() {
            'A' => Some(Base::A),
            'C' => Some(Base::C),
            'G' => Some(Base::G),
            'U' | 'T' => Some(Base::U),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::U => 'U',
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Ordered (left, right) pair of bases emitted by a bond.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasePair(pub Base, pub Base);

impl BasePair {
    /// Watson-Crick and wobble pairs in expansion order.
    pub const CANONICAL: [BasePair; 6] = [
        BasePair(Base::A, Base::U),
        BasePair(Base::C, Base::G),
        BasePair(Base::G, Base::C),
        BasePair(Base::G, Base::U),
        BasePair(Base::U, Base::A),
        BasePair(Base::U, Base::G),
    ];

    pub fn all16() -> impl Iterator<Item = BasePair> {
        Base::ALL
            .into_iter()
            .flat_map(|l| Base::ALL.into_iter().map(move |r| BasePair(l, r)))
    }

    pub fn is_canonical(self) -> bool {
        BasePair::CANONICAL.contains(&self)
    }

    /// Index into a 4x4 table.
    pub fn index(self) -> usize {
        self.0.index() * 4 + self.1.index()
    }
}

impl fmt::Display for BasePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0, self.1)
    }
}

/// Dot-bracket symbol.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mark {
    Dot,
    Open,
    Close,
}

impl Mark {
    pub fn from_char(c: char) -> Option<Mark> {
        match c {
            '.' | '•' => Some(Mark::Dot),
            '(' => Some(Mark::Open),
            ')' => Some(Mark::Close),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Mark::Dot => '.',
            Mark::Open => '(',
            Mark::Close => ')',
        }
    }
}

/// Parses a dot-bracket string. Returns `None` on any foreign character.
pub fn parse_marks(s: &str) -> Option<Vec<Mark>> {
    s.chars().map(Mark::from_char).collect()
}

pub fn marks_to_string(marks: &[Mark]) -> String {
    marks.iter().map(|m| m.to_char()).collect()
}

pub fn bases_to_string(bases: &[Base]) -> String {
    bases.iter().map(|b| b.to_char()).collect()
}

/// A produced terminal. Structure grammars leave `base` empty.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Terminal {
    pub base: Option<Base>,
    pub mark: Mark,
}
