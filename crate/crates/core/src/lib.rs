//! Stochastic RNA Form grammars: parsing, joint sequence and structure
//! compression, grammar size coding and grammar search.

pub mod alphabet;
pub mod bits;
pub mod codec;
pub mod data;
pub mod grammar;
pub mod parser;
pub mod probmodel;
pub mod search;
pub mod sizecode;
