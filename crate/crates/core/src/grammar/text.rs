//! Plain-text grammar files.
//!
//! ```text
//! # comment
//! nts: 2
//! A0 -> A1 A0
//! A0 -> u
//! A1 -> ( A1 )
//! A1 -> A0
//! ```
//!
//! The `nts:` header is optional; without it `k` is one more than the
//! largest index mentioned.

use super::{validate_srf, GrammarError, Nt, Rule, RuleBody, SrfGrammar};

fn syntax(line: usize, msg: impl Into<String>) -> GrammarError {
    GrammarError::Syntax { line, msg: msg.into() }
}

fn parse_nt(tok: &str, line: usize) -> Result<Nt, GrammarError> {
    let digits = tok
        .strip_prefix('A')
        .or_else(|| tok.strip_prefix('a'))
        .ok_or_else(|| syntax(line, format!("expected a nonterminal like A0, found `{tok}`")))?;
    let digits = digits.strip_prefix('_').unwrap_or(digits);
    digits
        .parse::<u32>()
        .map(Nt)
        .map_err(|_| syntax(line, format!("bad nonterminal `{tok}`")))
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        if c.is_whitespace() || c == '(' || c == ')' {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            if c == '(' || c == ')' {
                out.push(c.to_string());
            }
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_rule(line_no: usize, line: &str) -> Result<Rule, GrammarError> {
    let (lhs, rhs) = line
        .split_once("->")
        .or_else(|| line.split_once('→'))
        .ok_or_else(|| syntax(line_no, "expected `->`"))?;
    let lhs = parse_nt(lhs.trim(), line_no)?;
    let toks = tokenize(rhs);
    let toks: Vec<&str> = toks.iter().map(String::as_str).collect();
    let body = match toks.as_slice() {
        ["u" | "." | "•"] => RuleBody::Unpaired,
        ["(", inner, ")"] => RuleBody::Bond(parse_nt(inner, line_no)?),
        [left, right] => RuleBody::PairSplit(parse_nt(left, line_no)?, parse_nt(right, line_no)?),
        [target] => RuleBody::Chain(parse_nt(target, line_no)?),
        _ => return Err(syntax(line_no, format!("unrecognised right-hand side `{}`", rhs.trim()))),
    };
    Ok(Rule { lhs, body })
}

pub fn parse_grammar(src: &str) -> Result<SrfGrammar, GrammarError> {
    let mut declared = None;
    let mut rules = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("nts:") {
            let k = rest
                .trim()
                .parse::<usize>()
                .map_err(|_| syntax(line_no, format!("bad nonterminal count `{}`", rest.trim())))?;
            declared = Some(k);
            continue;
        }
        rules.push(parse_rule(line_no, line)?);
    }
    let k = declared.unwrap_or_else(|| rules.iter().map(|r| r.max_index() as usize + 1).max().unwrap_or(0));
    validate_srf(k, rules)
}

/// Writes the canonical text form; `parse_grammar` reads it back unchanged.
pub fn format_grammar(g: &SrfGrammar) -> String {
    let mut out = format!("nts: {}\n", g.nts());
    for r in g.rules() {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}
