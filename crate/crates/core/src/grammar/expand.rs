use std::fmt;
use std::str::FromStr;

use crate::alphabet::{Base, BasePair};

use super::{Nt, Production, Rhs, RuleBody, RuleSet, SrfGrammar};

/// Which base pairs a bond rule expands into.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default)]
pub enum ExpansionMode {
    /// AU, CG, GC, GU, UA, UG.
    #[default]
    Canonical6,
    /// All 4x4 combinations.
    All16,
}

impl ExpansionMode {
    pub fn pairs(self) -> Vec<BasePair> {
        match self {
            ExpansionMode::Canonical6 => BasePair::CANONICAL.to_vec(),
            ExpansionMode::All16 => BasePair::all16().collect(),
        }
    }

    pub fn allows(self, pair: BasePair) -> bool {
        match self {
            ExpansionMode::Canonical6 => pair.is_canonical(),
            ExpansionMode::All16 => true,
        }
    }
}

impl fmt::Display for ExpansionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpansionMode::Canonical6 => "canonical6",
            ExpansionMode::All16 => "all16",
        })
    }
}

impl FromStr for ExpansionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "canonical6" | "canonical" | "6" => Ok(ExpansionMode::Canonical6),
            "all16" | "16" => Ok(ExpansionMode::All16),
            other => Err(format!("unknown expansion mode `{other}` (expected canonical6 or all16)")),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExpandedBody {
    PairSplit(Nt, Nt),
    Unpaired(Base),
    Bond { inner: Nt, pair: BasePair },
    Chain(Nt),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExpandedRule {
    /// Index of the originating rule in the base grammar.
    pub origin: usize,
    pub lhs: Nt,
    pub body: ExpandedBody,
}

impl fmt::Display for ExpandedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.body {
            ExpandedBody::PairSplit(l, r) => write!(f, "{} -> {} {}", self.lhs, l, r),
            ExpandedBody::Unpaired(b) => write!(f, "{} -> {}.", self.lhs, b),
            ExpandedBody::Bond { inner, pair } => write!(f, "{} -> {}( {} {})", self.lhs, pair.0, inner, pair.1),
            ExpandedBody::Chain(t) => write!(f, "{} -> {}", self.lhs, t),
        }
    }
}

/// RNA grammar obtained from a structure grammar by annotating terminals
/// with bases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpandedGrammar {
    base: SrfGrammar,
    mode: ExpansionMode,
    rules: Vec<ExpandedRule>,
}

pub fn expand(g: &SrfGrammar, mode: ExpansionMode) -> ExpandedGrammar {
    let pairs = mode.pairs();
    let mut rules = Vec::new();
    for (origin, rule) in g.rules().iter().enumerate() {
        let lhs = rule.lhs;
        match rule.body {
            RuleBody::PairSplit(l, r) => {
                rules.push(ExpandedRule { origin, lhs, body: ExpandedBody::PairSplit(l, r) })
            }
            RuleBody::Unpaired => rules.extend(
                Base::ALL.iter().map(|&b| ExpandedRule { origin, lhs, body: ExpandedBody::Unpaired(b) }),
            ),
            RuleBody::Bond(inner) => rules.extend(
                pairs.iter().map(|&pair| ExpandedRule { origin, lhs, body: ExpandedBody::Bond { inner, pair } }),
            ),
            RuleBody::Chain(t) => rules.push(ExpandedRule { origin, lhs, body: ExpandedBody::Chain(t) }),
        }
    }
    ExpandedGrammar { base: g.clone(), mode, rules }
}

impl ExpandedGrammar {
    pub fn base(&self) -> &SrfGrammar {
        &self.base
    }

    pub fn mode(&self) -> ExpansionMode {
        self.mode
    }

    pub fn rules(&self) -> &[ExpandedRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl RuleSet for ExpandedGrammar {
    fn nts(&self) -> usize {
        self.base.nts()
    }

    fn rule_count(&self) -> usize {
        self.rules.len()
    }

    fn production(&self, id: usize) -> Production {
        let r = self.rules[id];
        let rhs = match r.body {
            ExpandedBody::PairSplit(l, rr) => Rhs::Split(l, rr),
            ExpandedBody::Unpaired(b) => Rhs::Unpaired(Some(b)),
            ExpandedBody::Bond { inner, pair } => Rhs::Bond(inner, Some(pair)),
            ExpandedBody::Chain(t) => Rhs::Chain(t),
        };
        Production { lhs: r.lhs, rhs }
    }
}
