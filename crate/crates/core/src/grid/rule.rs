use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Largest supported alphabet. Symbols are written as base-36 digits in rule
/// and dump files.
pub const MAX_ALPHABET: u8 = 36;

/// Largest lookup table accepted for table rules (`q^((2r+1)^2)` entries).
pub const MAX_TABLE_ENTRIES: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Offset {
    pub di: i32,
    pub dj: i32,
}

impl Offset {
    pub const fn new(di: i32, dj: i32) -> Self {
        Offset { di, dj }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearTerm {
    pub offset: Offset,
    pub coeff: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleKind {
    /// `f(x) = sum coeff * x[z + offset] mod q`. Terms are sorted by offset,
    /// unique, with nonzero coefficients.
    Linear(Vec<LinearTerm>),
    /// Indexed by the neighbourhood read as a base-q number, most significant
    /// digit first, in [`RuleSpec::neighbourhood`] order.
    Table(Vec<u8>),
}

/// A radius-`r` local rule over the alphabet `{0, .., q-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSpec {
    name: String,
    alphabet: u8,
    radius: u32,
    kind: RuleKind,
}

impl RuleSpec {
    /// Builds a linear rule. Duplicate offsets are summed mod q and zero
    /// coefficients dropped.
    pub fn linear(name: impl Into<String>, alphabet: u8, radius: u32, terms: &[LinearTerm]) -> Result<Self> {
        check_alphabet(alphabet, None)?;
        let mut acc: BTreeMap<Offset, u32> = BTreeMap::new();
        for t in terms {
            check_offset(t.offset, radius, None)?;
            if t.coeff >= alphabet {
                return Err(rule_err(None, format!("coefficient {} is not below alphabet size {alphabet}", t.coeff)));
            }
            *acc.entry(t.offset).or_insert(0) += t.coeff as u32;
        }
        Ok(RuleSpec {
            name: name.into(),
            alphabet,
            radius,
            kind: RuleKind::Linear(normalize_terms(acc, alphabet)),
        })
    }

    pub fn table(name: impl Into<String>, alphabet: u8, radius: u32, table: Vec<u8>) -> Result<Self> {
        check_alphabet(alphabet, None)?;
        let size = table_size(alphabet, radius)
            .ok_or_else(|| rule_err(None, "lookup table would exceed 2^24 entries".into()))?;
        if table.len() as u64 != size {
            return Err(rule_err(None, format!("table has {} entries, expected {size}", table.len())));
        }
        if let Some(bad) = table.iter().find(|&&s| s >= alphabet) {
            return Err(rule_err(None, format!("table symbol {bad} is not below alphabet size {alphabet}")));
        }
        Ok(RuleSpec { name: name.into(), alphabet, radius, kind: RuleKind::Table(table) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn kind(&self) -> &RuleKind {
        &self.kind
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, RuleKind::Linear(_))
    }

    pub fn linear_terms(&self) -> Option<&[LinearTerm]> {
        match &self.kind {
            RuleKind::Linear(t) => Some(t),
            RuleKind::Table(_) => None,
        }
    }

    /// Neighbourhood offsets in table-pattern order: rows `dj = -r..=r`, and
    /// within a row `di = -r..=r`. This is the order in which rows appear in a
    /// configuration dump.
    pub fn neighbourhood(&self) -> impl Iterator<Item = Offset> {
        let r = self.radius as i32;
        (-r..=r).flat_map(move |dj| (-r..=r).map(move |di| Offset::new(di, dj)))
    }

    /// Applies the local rule to a neighbourhood given by `read(offset)`.
    #[inline]
    pub fn apply(&self, mut read: impl FnMut(Offset) -> u8) -> u8 {
        let q = self.alphabet as u32;
        match &self.kind {
            RuleKind::Linear(terms) => {
                let mut acc = 0u32;
                for t in terms {
                    acc += t.coeff as u32 * read(t.offset) as u32;
                }
                (acc % q) as u8
            }
            RuleKind::Table(table) => {
                let mut idx = 0usize;
                for off in self.neighbourhood() {
                    idx = idx * q as usize + read(off) as usize;
                }
                table[idx]
            }
        }
    }

    /// Tabulates the rule. Fails when the table would exceed 2^24 entries.
    pub fn to_table(&self) -> Result<RuleSpec> {
        let size = table_size(self.alphabet, self.radius)
            .ok_or_else(|| Error::SizeCap("lookup table would exceed 2^24 entries".into()))?;
        if let RuleKind::Table(_) = self.kind {
            return Ok(self.clone());
        }
        let offsets: Vec<Offset> = self.neighbourhood().collect();
        let q = self.alphabet as u64;
        let mut digits = vec![0u8; offsets.len()];
        let mut table = Vec::with_capacity(size as usize);
        for idx in 0..size {
            let mut rest = idx;
            for d in digits.iter_mut().rev() {
                *d = (rest % q) as u8;
                rest /= q;
            }
            table.push(self.apply(|off| {
                let pos = offsets.iter().position(|&o| o == off).unwrap();
                digits[pos]
            }));
        }
        Ok(RuleSpec { name: self.name.clone(), alphabet: self.alphabet, radius: self.radius, kind: RuleKind::Table(table) })
    }

    /// Canonical rule-file text; parsing it yields an equal rule.
    pub fn to_rule_text(&self) -> String {
        self.to_string()
    }

    /// SHA-256 of the canonical rule text, hex encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_rule_text().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alphabet = {}", self.alphabet)?;
        writeln!(f, "radius = {}", self.radius)?;
        match &self.kind {
            RuleKind::Linear(terms) => {
                writeln!(f, "type = linear")?;
                for t in terms {
                    writeln!(f, "term = ({},{}) {}", t.offset.di, t.offset.dj, t.coeff)?;
                }
            }
            RuleKind::Table(table) => {
                writeln!(f, "type = table")?;
                let len = ((2 * self.radius + 1) * (2 * self.radius + 1)) as usize;
                let q = self.alphabet as usize;
                let mut digits = vec![0u8; len];
                for (idx, &sym) in table.iter().enumerate() {
                    let mut rest = idx;
                    for d in digits.iter_mut().rev() {
                        *d = (rest % q) as u8;
                        rest /= q;
                    }
                    let pattern: String = digits.iter().map(|&d| digit_char(d)).collect();
                    writeln!(f, "map = {pattern} {}", digit_char(sym))?;
                }
            }
        }
        Ok(())
    }
}

/// Parses the line-oriented rule format:
///
/// ```text
/// # comment
/// alphabet = 2
/// radius = 1
/// type = linear
/// term = (0,1) 1
/// term = (1,0) 1
/// ```
///
/// Table rules use `type = table` and lines `map = <pattern> <symbol>` where
/// the pattern lists the `(2r+1)^2` neighbourhood symbols as base-36 digits.
pub fn parse_rule(text: &str) -> Result<RuleSpec> {
    #[derive(PartialEq)]
    enum Kind {
        Linear,
        Table,
    }
    let mut alphabet: Option<(u8, usize)> = None;
    let mut radius: Option<(u32, usize)> = None;
    let mut kind: Option<(Kind, usize)> = None;
    let mut terms: Vec<(Offset, u32, usize)> = Vec::new();
    let mut maps: Vec<(String, String, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| rule_err(Some(line), format!("expected `key = value`, found `{content}`")))?;
        let value = value.trim();
        match key.trim() {
            "alphabet" => {
                if alphabet.is_some() {
                    return Err(rule_err(Some(line), "duplicate `alphabet`".into()));
                }
                let q: u8 = value
                    .parse()
                    .map_err(|_| rule_err(Some(line), format!("invalid alphabet size `{value}`")))?;
                check_alphabet(q, Some(line))?;
                alphabet = Some((q, line));
            }
            "radius" => {
                if radius.is_some() {
                    return Err(rule_err(Some(line), "duplicate `radius`".into()));
                }
                let r: u32 = value
                    .parse()
                    .map_err(|_| rule_err(Some(line), format!("invalid radius `{value}`")))?;
                radius = Some((r, line));
            }
            "type" => {
                if kind.is_some() {
                    return Err(rule_err(Some(line), "duplicate `type`".into()));
                }
                let k = match value {
                    "linear" => Kind::Linear,
                    "table" => Kind::Table,
                    other => return Err(rule_err(Some(line), format!("unknown rule type `{other}`"))),
                };
                kind = Some((k, line));
            }
            "term" => {
                let (off, coeff) = parse_term(value).map_err(|m| rule_err(Some(line), m))?;
                terms.push((off, coeff, line));
            }
            "map" => {
                let mut parts = value.split_whitespace();
                match (parts.next(), parts.next(), parts.next()) {
                    (Some(p), Some(s), None) => maps.push((p.to_string(), s.to_string(), line)),
                    _ => return Err(rule_err(Some(line), "expected `map = <pattern> <symbol>`".into())),
                }
            }
            other => return Err(rule_err(Some(line), format!("unknown key `{other}`"))),
        }
    }

    let (q, _) = alphabet.ok_or_else(|| rule_err(None, "missing `alphabet`".into()))?;
    let (r, radius_line) = radius.ok_or_else(|| rule_err(None, "missing `radius`".into()))?;
    let (kind, _) = kind.ok_or_else(|| rule_err(None, "missing `type`".into()))?;

    match kind {
        Kind::Linear => {
            if let Some((_, _, line)) = maps.first() {
                return Err(rule_err(Some(*line), "`map` line in a linear rule".into()));
            }
            let mut acc: BTreeMap<Offset, u32> = BTreeMap::new();
            for (off, coeff, line) in terms {
                check_offset(off, r, Some(line))?;
                if coeff >= q as u32 {
                    return Err(rule_err(Some(line), format!("coefficient {coeff} is not below alphabet size {q}")));
                }
                *acc.entry(off).or_insert(0) += coeff;
            }
            Ok(RuleSpec { name: String::new(), alphabet: q, radius: r, kind: RuleKind::Linear(normalize_terms(acc, q)) })
        }
        Kind::Table => {
            if let Some((_, _, line)) = terms.first() {
                return Err(rule_err(Some(*line), "`term` line in a table rule".into()));
            }
            let size = table_size(q, r)
                .ok_or_else(|| rule_err(Some(radius_line), "lookup table would exceed 2^24 entries".into()))?;
            let len = ((2 * r + 1) * (2 * r + 1)) as usize;
            let mut table: Vec<Option<u8>> = vec![None; size as usize];
            for (pattern, symbol, line) in maps {
                if pattern.chars().count() != len {
                    return Err(rule_err(Some(line), format!("pattern must have {len} digits")));
                }
                let mut idx = 0usize;
                for c in pattern.chars() {
                    let d = parse_digit(c, q).ok_or_else(|| rule_err(Some(line), format!("invalid digit `{c}` in pattern")))?;
                    idx = idx * q as usize + d as usize;
                }
                let mut sc = symbol.chars();
                let sym = match (sc.next(), sc.next()) {
                    (Some(c), None) => parse_digit(c, q),
                    _ => None,
                }
                .ok_or_else(|| rule_err(Some(line), format!("invalid symbol `{symbol}`")))?;
                if table[idx].is_some() {
                    return Err(rule_err(Some(line), format!("duplicate pattern `{pattern}`")));
                }
                table[idx] = Some(sym);
            }
            let missing = table.iter().filter(|e| e.is_none()).count();
            if missing > 0 {
                return Err(rule_err(None, format!("incomplete table: {missing} of {size} patterns missing")));
            }
            Ok(RuleSpec {
                name: String::new(),
                alphabet: q,
                radius: r,
                kind: RuleKind::Table(table.into_iter().map(Option::unwrap).collect()),
            })
        }
    }
}

/// The worked example rules, all binary:
///
/// * `F1`: `x[i+1, j]`
/// * `F2`: `x[i-1, j] + x[i+1, j]`
/// * `F3`: `x[i, j+1] + x[i+1, j]`
/// * `Fk`: `x[i+k, j] + x[i, j+k]`, radius `k`
pub fn builtin_rule(name: &str, k: u32) -> Result<RuleSpec> {
    let t = |di, dj| LinearTerm { offset: Offset::new(di, dj), coeff: 1 };
    match name {
        "F1" => RuleSpec::linear("F1", 2, 1, &[t(1, 0)]),
        "F2" => RuleSpec::linear("F2", 2, 1, &[t(-1, 0), t(1, 0)]),
        "F3" => RuleSpec::linear("F3", 2, 1, &[t(0, 1), t(1, 0)]),
        "Fk" => {
            if k == 0 {
                return Err(Error::InvalidArgument("Fk requires k >= 1".into()));
            }
            let ki = k as i32;
            RuleSpec::linear(format!("Fk(k={k})"), 2, k, &[t(ki, 0), t(0, ki)])
        }
        other => Err(Error::UnknownRule(other.to_string())),
    }
}

fn parse_term(value: &str) -> std::result::Result<(Offset, u32), String> {
    let rest = value
        .strip_prefix('(')
        .ok_or_else(|| format!("expected `(<di>,<dj>) <coeff>`, found `{value}`"))?;
    let (inside, tail) = rest.split_once(')').ok_or_else(|| "missing `)`".to_string())?;
    let (a, b) = inside.split_once(',').ok_or_else(|| "offset needs two components".to_string())?;
    let di: i32 = a.trim().parse().map_err(|_| format!("invalid offset component `{}`", a.trim()))?;
    let dj: i32 = b.trim().parse().map_err(|_| format!("invalid offset component `{}`", b.trim()))?;
    let tail = tail.trim();
    let coeff: u32 = tail.parse().map_err(|_| format!("invalid coefficient `{tail}`"))?;
    Ok((Offset::new(di, dj), coeff))
}

fn normalize_terms(acc: BTreeMap<Offset, u32>, q: u8) -> Vec<LinearTerm> {
    acc.into_iter()
        .filter_map(|(offset, c)| {
            let c = (c % q as u32) as u8;
            (c != 0).then_some(LinearTerm { offset, coeff: c })
        })
        .collect()
}

fn check_alphabet(q: u8, line: Option<usize>) -> Result<()> {
    if !(2..=MAX_ALPHABET).contains(&q) {
        return Err(rule_err(line, format!("alphabet size {q} outside 2..={MAX_ALPHABET}")));
    }
    Ok(())
}

fn check_offset(off: Offset, radius: u32, line: Option<usize>) -> Result<()> {
    let r = radius as i64;
    if (off.di as i64).abs() > r || (off.dj as i64).abs() > r {
        return Err(rule_err(line, format!("offset ({},{}) lies outside radius {radius}", off.di, off.dj)));
    }
    Ok(())
}

fn table_size(q: u8, r: u32) -> Option<u64> {
    let len = (2 * r as u64 + 1).checked_mul(2 * r as u64 + 1)?;
    let mut size: u64 = 1;
    for _ in 0..len {
        size = size.checked_mul(q as u64)?;
        if size > MAX_TABLE_ENTRIES {
            return None;
        }
    }
    Some(size)
}

fn rule_err(line: Option<usize>, message: String) -> Error {
    Error::Rule { line, message }
}

pub(crate) fn digit_char(d: u8) -> char {
    std::char::from_digit(d as u32, 36).expect("symbol below 36")
}

pub(crate) fn parse_digit(c: char, q: u8) -> Option<u8> {
    c.to_digit(36).filter(|&d| d < q as u32).map(|d| d as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(rule: &RuleSpec) -> Vec<(i32, i32, u8)> {
        rule.linear_terms().unwrap().iter().map(|t| (t.offset.di, t.offset.dj, t.coeff)).collect()
    }

    #[test]
    fn parses_f3() {
        let rule = parse_rule("alphabet=2\nradius=1\ntype=linear\nterm=(0,1) 1\nterm=(1,0) 1\n").unwrap();
        assert_eq!(rule.alphabet(), 2);
        assert_eq!(rule.radius(), 1);
        assert_eq!(terms(&rule), vec![(0, 1, 1), (1, 0, 1)]);
        assert_eq!(rule.kind(), builtin_rule("F3", 0).unwrap().kind());
    }

    #[test]
    fn identity_rule() {
        let rule = parse_rule("alphabet=2\nradius=0\ntype=linear\nterm=(0,0) 1").unwrap();
        assert_eq!(terms(&rule), vec![(0, 0, 1)]);
        assert_eq!(rule.apply(|_| 1), 1);
        assert_eq!(rule.apply(|_| 0), 0);
    }

    #[test]
    fn duplicate_terms_cancel() {
        let rule = parse_rule("alphabet=2\nradius=1\ntype=linear\nterm=(0,1) 1\nterm=(0,1) 1").unwrap();
        assert!(terms(&rule).is_empty());
        assert_eq!(rule.apply(|_| 1), 0);
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "# the F1 rule\n  alphabet = 2 # binary\n\nradius=1\ntype = linear\nterm = ( 1 , 0 ) 1\n";
        let rule = parse_rule(text).unwrap();
        assert_eq!(terms(&rule), vec![(1, 0, 1)]);
    }

    #[test]
    fn syntax_errors_report_line() {
        let err = parse_rule("alphabet=2\nradius=1\ntype=linear\nterm=0,1 1\n").unwrap_err();
        assert!(matches!(err, Error::Rule { line: Some(4), .. }), "{err:?}");
        let err = parse_rule("alphabet=2\nradius=1\nbogus\n").unwrap_err();
        assert!(matches!(err, Error::Rule { line: Some(3), .. }));
        let err = parse_rule("alphabet=2\nradius=1\ntype=linear\nterm=(2,0) 1\n").unwrap_err();
        assert!(matches!(err, Error::Rule { line: Some(4), .. }));
        let err = parse_rule("alphabet=3\nradius=1\ntype=linear\nterm=(1,0) 3\n").unwrap_err();
        assert!(matches!(err, Error::Rule { line: Some(4), .. }));
        assert!(parse_rule("alphabet=1\nradius=0\ntype=linear\n").is_err());
        assert!(parse_rule("radius=0\ntype=linear\n").is_err());
    }

    #[test]
    fn incomplete_table() {
        let err = parse_rule("alphabet=2\nradius=0\ntype=table\nmap = 0 1\n").unwrap_err();
        assert!(matches!(err, Error::Rule { line: None, .. }));
        let rule = parse_rule("alphabet=2\nradius=0\ntype=table\nmap = 0 1\nmap = 1 0\n").unwrap();
        assert_eq!(rule.apply(|_| 0), 1);
        assert_eq!(rule.apply(|_| 1), 0);
    }

    #[test]
    fn oversized_table_rejected() {
        // 2^(7*7) entries
        let err = parse_rule("alphabet=2\nradius=3\ntype=table\n").unwrap_err();
        assert!(matches!(err, Error::Rule { line: Some(2), .. }));
    }

    #[test]
    fn builtins() {
        assert_eq!(terms(&builtin_rule("F1", 0).unwrap()), vec![(1, 0, 1)]);
        assert_eq!(terms(&builtin_rule("F2", 0).unwrap()), vec![(-1, 0, 1), (1, 0, 1)]);
        let fk = builtin_rule("Fk", 3).unwrap();
        assert_eq!(fk.radius(), 3);
        assert_eq!(terms(&fk), vec![(0, 3, 1), (3, 0, 1)]);
        assert!(matches!(builtin_rule("F9", 0), Err(Error::UnknownRule(_))));
        assert!(builtin_rule("Fk", 0).is_err());
    }

    #[test]
    fn table_matches_linear() {
        let f3 = builtin_rule("F3", 0).unwrap();
        let table = f3.to_table().unwrap();
        let offsets: Vec<Offset> = f3.neighbourhood().collect();
        for idx in 0..512u32 {
            let read = |o: Offset| {
                let pos = offsets.iter().position(|&x| x == o).unwrap();
                ((idx >> (8 - pos)) & 1) as u8
            };
            assert_eq!(f3.apply(read), table.apply(read));
        }
        let reparsed = parse_rule(&table.to_rule_text()).unwrap();
        assert_eq!(reparsed.kind(), table.kind());
    }
}
