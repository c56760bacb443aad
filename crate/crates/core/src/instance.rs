//! Preference instances, upward shifts and distributions over shifts.
//!
//! Agents are 0-based internally. Text formats use 1-based labels (`b1`,
//! `g3`) so fixtures read naturally.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseErrorKind, Result};

const UNRANKED: usize = usize::MAX;

/// A two-sided instance with strict, possibly incomplete preference lists.
///
/// Lists are mutually consistent: `g` appears in `b`'s list exactly when `b`
/// appears in `g`'s list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct PreferenceInstance {
    boy_prefs: Vec<Vec<usize>>,
    girl_prefs: Vec<Vec<usize>>,
    // row-major rank tables, UNRANKED for unacceptable partners
    boy_rank: Vec<usize>,
    girl_rank: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawInstance {
    n_boys: usize,
    n_girls: usize,
    boy_prefs: Vec<Vec<usize>>,
    girl_prefs: Vec<Vec<usize>>,
}

impl TryFrom<RawInstance> for PreferenceInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        PreferenceInstance::new(raw.n_boys, raw.n_girls, raw.boy_prefs, raw.girl_prefs)
    }
}

impl From<PreferenceInstance> for RawInstance {
    fn from(inst: PreferenceInstance) -> Self {
        RawInstance {
            n_boys: inst.n_boys(),
            n_girls: inst.n_girls(),
            boy_prefs: inst.boy_prefs,
            girl_prefs: inst.girl_prefs,
        }
    }
}

fn rank_table(prefs: &[Vec<usize>], other: usize) -> Vec<usize> {
    let mut table = vec![UNRANKED; prefs.len() * other];
    for (agent, list) in prefs.iter().enumerate() {
        for (rank, &x) in list.iter().enumerate() {
            table[agent * other + x] = rank;
        }
    }
    table
}

impl PreferenceInstance {
    pub fn new(
        n_boys: usize,
        n_girls: usize,
        boy_prefs: Vec<Vec<usize>>,
        girl_prefs: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if boy_prefs.len() != n_boys || girl_prefs.len() != n_girls {
            return Err(Error::InvalidInstance(format!(
                "expected {n_boys} boy lists and {n_girls} girl lists, got {} and {}",
                boy_prefs.len(),
                girl_prefs.len()
            )));
        }
        check_lists(&boy_prefs, n_girls, 'b', 'g')?;
        check_lists(&girl_prefs, n_boys, 'g', 'b')?;
        let inst = PreferenceInstance {
            boy_rank: rank_table(&boy_prefs, n_girls),
            girl_rank: rank_table(&girl_prefs, n_boys),
            boy_prefs,
            girl_prefs,
        };
        for b in 0..n_boys {
            for &g in &inst.boy_prefs[b] {
                if inst.girl_rank(g, b).is_none() {
                    return Err(Error::InvalidInstance(
                        ParseErrorKind::NonMutualPair { boy: b, girl: g }.to_string(),
                    ));
                }
            }
        }
        for g in 0..n_girls {
            for &b in &inst.girl_prefs[g] {
                if inst.boy_rank(b, g).is_none() {
                    return Err(Error::InvalidInstance(
                        ParseErrorKind::NonMutualPair { boy: b, girl: g }.to_string(),
                    ));
                }
            }
        }
        Ok(inst)
    }

    pub fn n_boys(&self) -> usize {
        self.boy_prefs.len()
    }

    pub fn n_girls(&self) -> usize {
        self.girl_prefs.len()
    }

    /// Largest side; the size used by brute-force guards.
    pub fn size(&self) -> usize {
        self.n_boys().max(self.n_girls())
    }

    pub fn boy_prefs(&self, b: usize) -> &[usize] {
        &self.boy_prefs[b]
    }

    pub fn girl_prefs(&self, g: usize) -> &[usize] {
        &self.girl_prefs[g]
    }

    /// Position of `g` in `b`'s list (0 = most preferred).
    pub fn boy_rank(&self, b: usize, g: usize) -> Option<usize> {
        match self.boy_rank[b * self.n_girls() + g] {
            UNRANKED => None,
            r => Some(r),
        }
    }

    pub fn girl_rank(&self, g: usize, b: usize) -> Option<usize> {
        match self.girl_rank[g * self.n_boys() + b] {
            UNRANKED => None,
            r => Some(r),
        }
    }

    pub fn acceptable(&self, b: usize, g: usize) -> bool {
        self.boy_rank(b, g).is_some()
    }

    /// Does `b` strictly prefer `g` to `current` (`None` = unmatched)?
    pub fn boy_prefers(&self, b: usize, g: usize, current: Option<usize>) -> bool {
        let Some(r) = self.boy_rank(b, g) else {
            return false;
        };
        match current {
            None => true,
            Some(c) => self.boy_rank(b, c).is_none_or(|rc| r < rc),
        }
    }

    pub fn girl_prefers(&self, g: usize, b: usize, current: Option<usize>) -> bool {
        let Some(r) = self.girl_rank(g, b) else {
            return false;
        };
        match current {
            None => true,
            Some(c) => self.girl_rank(g, c).is_none_or(|rc| r < rc),
        }
    }

    /// Square instance where everybody ranks everybody on the other side.
    pub fn is_complete(&self) -> bool {
        self.n_boys() == self.n_girls()
            && self.boy_prefs.iter().all(|l| l.len() == self.n_girls())
            && self.girl_prefs.iter().all(|l| l.len() == self.n_boys())
    }

    /// Swap the roles of boys and girls.
    pub fn reversed(&self) -> PreferenceInstance {
        PreferenceInstance {
            boy_prefs: self.girl_prefs.clone(),
            girl_prefs: self.boy_prefs.clone(),
            boy_rank: self.girl_rank.clone(),
            girl_rank: self.boy_rank.clone(),
        }
    }

    fn list(&self, side: Side, agent: usize) -> Option<&Vec<usize>> {
        match side {
            Side::GirlList => self.girl_prefs.get(agent),
            Side::BoyList => self.boy_prefs.get(agent),
        }
    }

    /// Serialize to the instance file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.n_boys() == self.n_girls() {
            out.push_str(&format!("{}\n", self.n_boys()));
        } else {
            out.push_str(&format!("{} {}\n", self.n_boys(), self.n_girls()));
        }
        for (b, list) in self.boy_prefs.iter().enumerate() {
            out.push_str(&format!("b{}:", b + 1));
            for g in list {
                out.push_str(&format!(" g{}", g + 1));
            }
            out.push('\n');
        }
        for (g, list) in self.girl_prefs.iter().enumerate() {
            out.push_str(&format!("g{}:", g + 1));
            for b in list {
                out.push_str(&format!(" b{}", b + 1));
            }
            out.push('\n');
        }
        out
    }
}

fn check_lists(prefs: &[Vec<usize>], other: usize, own: char, theirs: char) -> Result<()> {
    for (agent, list) in prefs.iter().enumerate() {
        let mut seen = vec![false; other];
        for &x in list {
            if x >= other {
                return Err(Error::InvalidInstance(format!(
                    "{own}{} lists {theirs}{} but there are only {other}",
                    agent + 1,
                    x + 1
                )));
            }
            if std::mem::replace(&mut seen[x], true) {
                return Err(Error::InvalidInstance(format!(
                    "{own}{} lists {theirs}{} twice",
                    agent + 1,
                    x + 1
                )));
            }
        }
    }
    Ok(())
}

/// Lines that carry content, with 1-based line numbers. `#` starts a comment.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Parse an agent label such as `b3` into a 0-based id.
pub(crate) fn parse_agent(token: &str, prefix: char, count: usize, line: usize) -> Result<usize> {
    let digits = token.strip_prefix(prefix).ok_or_else(|| Error::Parse {
        line,
        kind: ParseErrorKind::Malformed(format!("expected `{prefix}<id>`, found `{token}`")),
    })?;
    let id: usize = digits.parse().map_err(|_| Error::Parse {
        line,
        kind: ParseErrorKind::Malformed(format!("bad agent id `{token}`")),
    })?;
    if id == 0 || id > count {
        return Err(Error::Parse {
            line,
            kind: ParseErrorKind::OutOfRange(format!("`{token}` (valid range {prefix}1..{prefix}{count})")),
        });
    }
    Ok(id - 1)
}

impl FromStr for PreferenceInstance {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        parse_instance(text)
    }
}

/// Parse the instance file format: a header `n` (or `n_boys n_girls`)
/// followed by one `b<i>: g.. g..` line per boy and one `g<j>: b.. b..` line
/// per girl.
pub fn parse_instance(text: &str) -> Result<PreferenceInstance> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        kind: ParseErrorKind::Malformed("missing size header".into()),
    })?;
    let sizes: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse {
            line: header_line,
            kind: ParseErrorKind::Malformed(format!("bad size header `{header}`")),
        })?;
    let (n_boys, n_girls) = match sizes.as_slice() {
        [n] => (*n, *n),
        [nb, ng] => (*nb, *ng),
        _ => {
            return Err(Error::Parse {
                line: header_line,
                kind: ParseErrorKind::Malformed(format!("bad size header `{header}`")),
            })
        }
    };

    let mut boy_prefs: Vec<Option<(usize, Vec<usize>)>> = vec![None; n_boys];
    let mut girl_prefs: Vec<Option<(usize, Vec<usize>)>> = vec![None; n_girls];
    let mut last_line = header_line;
    for (line, content) in lines {
        last_line = line;
        let (label, rest) = content.split_once(':').ok_or_else(|| Error::Parse {
            line,
            kind: ParseErrorKind::Malformed(format!("expected `<agent>: <list>`, found `{content}`")),
        })?;
        let label = label.trim();
        let (slot, list_prefix, list_count) = if label.starts_with('b') {
            let b = parse_agent(label, 'b', n_boys, line)?;
            (&mut boy_prefs[b], 'g', n_girls)
        } else if label.starts_with('g') {
            let g = parse_agent(label, 'g', n_girls, line)?;
            (&mut girl_prefs[g], 'b', n_boys)
        } else {
            return Err(Error::Parse {
                line,
                kind: ParseErrorKind::Malformed(format!("unknown agent `{label}`")),
            });
        };
        if slot.is_some() {
            return Err(Error::Parse {
                line,
                kind: ParseErrorKind::DuplicateEntry(format!("second list for {label}")),
            });
        }
        let mut list = Vec::new();
        for token in rest.split_whitespace() {
            let x = parse_agent(token, list_prefix, list_count, line)?;
            if list.contains(&x) {
                return Err(Error::Parse {
                    line,
                    kind: ParseErrorKind::DuplicateEntry(format!("{token} listed twice by {label}")),
                });
            }
            list.push(x);
        }
        *slot = Some((line, list));
    }

    let missing = |prefix: char, idx: usize| Error::Parse {
        line: last_line,
        kind: ParseErrorKind::Malformed(format!("no preference list for {prefix}{}", idx + 1)),
    };
    let boys: Vec<(usize, Vec<usize>)> = boy_prefs
        .into_iter()
        .enumerate()
        .map(|(i, e)| e.ok_or_else(|| missing('b', i)))
        .collect::<Result<_>>()?;
    let girls: Vec<(usize, Vec<usize>)> = girl_prefs
        .into_iter()
        .enumerate()
        .map(|(i, e)| e.ok_or_else(|| missing('g', i)))
        .collect::<Result<_>>()?;

    // mutual acceptability, reported on the line of the one-sided entry
    for (b, (line, list)) in boys.iter().enumerate() {
        for &g in list {
            if !girls[g].1.contains(&b) {
                return Err(Error::Parse {
                    line: *line,
                    kind: ParseErrorKind::NonMutualPair { boy: b, girl: g },
                });
            }
        }
    }
    for (g, (line, list)) in girls.iter().enumerate() {
        for &b in list {
            if !boys[b].1.contains(&g) {
                return Err(Error::Parse {
                    line: *line,
                    kind: ParseErrorKind::NonMutualPair { boy: b, girl: g },
                });
            }
        }
    }

    PreferenceInstance::new(
        n_boys,
        n_girls,
        boys.into_iter().map(|(_, l)| l).collect(),
        girls.into_iter().map(|(_, l)| l).collect(),
    )
}

/// Which kind of list a shift edits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "GIRL_LIST")]
    GirlList,
    #[serde(rename = "BOY_LIST")]
    BoyList,
}

impl Side {
    fn prefixes(self) -> (char, char) {
        match self {
            Side::GirlList => ('g', 'b'),
            Side::BoyList => ('b', 'g'),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::GirlList => "GIRL_LIST",
            Side::BoyList => "BOY_LIST",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GIRL_LIST" | "GIRL" | "G" => Ok(Side::GirlList),
            "BOY_LIST" | "BOY" | "B" => Ok(Side::BoyList),
            _ => Err(Error::InvalidShift(format!("unknown side `{s}`"))),
        }
    }
}

/// An upward shift: in `agent`'s list, `mover` jumps over the `window`
/// entries directly above it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Shift {
    pub side: Side,
    pub agent: usize,
    pub mover: usize,
    pub window: usize,
}

impl Shift {
    pub fn girl(girl: usize, boy: usize, window: usize) -> Shift {
        Shift { side: Side::GirlList, agent: girl, mover: boy, window }
    }

    pub fn boy(boy: usize, girl: usize, window: usize) -> Shift {
        Shift { side: Side::BoyList, agent: boy, mover: girl, window }
    }

    /// The same shift seen in the role-reversed instance.
    pub fn reversed(self) -> Shift {
        let side = match self.side {
            Side::GirlList => Side::BoyList,
            Side::BoyList => Side::GirlList,
        };
        Shift { side, ..self }
    }

    /// Position of the mover in the agent's list, checked against the window.
    pub fn mover_position(&self, inst: &PreferenceInstance) -> Result<usize> {
        let list = inst
            .list(self.side, self.agent)
            .ok_or_else(|| Error::InvalidShift(format!("{self}: agent out of range")))?;
        let pos = list
            .iter()
            .position(|&x| x == self.mover)
            .ok_or_else(|| Error::InvalidShift(format!("{self}: mover absent from list")))?;
        if self.window == 0 || self.window > pos {
            return Err(Error::InvalidShift(format!(
                "{self}: window must be in 1..={pos}"
            )));
        }
        Ok(pos)
    }

    pub fn validate(&self, inst: &PreferenceInstance) -> Result<()> {
        self.mover_position(inst).map(|_| ())
    }

    fn parse_tokens(tokens: &[&str], line: usize) -> Result<Shift> {
        let [side, agent, mover, window] = tokens else {
            return Err(Error::Parse {
                line,
                kind: ParseErrorKind::Malformed("expected `SIDE agent mover k`".into()),
            });
        };
        let side: Side = side.parse().map_err(|_| Error::Parse {
            line,
            kind: ParseErrorKind::Malformed(format!("unknown side `{side}`")),
        })?;
        let (ap, mp) = side.prefixes();
        let agent = parse_agent(agent, ap, usize::MAX, line)?;
        let mover = parse_agent(mover, mp, usize::MAX, line)?;
        let window = window.parse().map_err(|_| Error::Parse {
            line,
            kind: ParseErrorKind::Malformed(format!("bad window `{window}`")),
        })?;
        Ok(Shift { side, agent, mover, window })
    }
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (ap, mp) = self.side.prefixes();
        write!(
            f,
            "{} {}{} {}{} {}",
            self.side,
            ap,
            self.agent + 1,
            mp,
            self.mover + 1,
            self.window
        )
    }
}

impl FromStr for Shift {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        Shift::parse_tokens(&tokens, 1)
    }
}

/// Apply an upward shift, producing the perturbed instance.
pub fn apply_shift(inst: &PreferenceInstance, shift: &Shift) -> Result<PreferenceInstance> {
    let pos = shift.mover_position(inst)?;
    let mut out = inst.clone();
    let (list, ranks, stride) = match shift.side {
        Side::GirlList => (&mut out.girl_prefs[shift.agent], &mut out.girl_rank, inst.n_boys()),
        Side::BoyList => (&mut out.boy_prefs[shift.agent], &mut out.boy_rank, inst.n_girls()),
    };
    let mover = list.remove(pos);
    list.insert(pos - shift.window, mover);
    for (rank, &x) in list.iter().enumerate().skip(pos - shift.window).take(shift.window + 1) {
        ranks[shift.agent * stride + x] = rank;
    }
    Ok(out)
}

/// Every valid upward shift of every list, girls' lists first.
pub fn enumerate_shift_domain(inst: &PreferenceInstance) -> Vec<Shift> {
    let mut shifts = Vec::new();
    for (side, lists) in [(Side::GirlList, &inst.girl_prefs), (Side::BoyList, &inst.boy_prefs)] {
        for (agent, list) in lists.iter().enumerate() {
            for (pos, &mover) in list.iter().enumerate().skip(1) {
                for window in 1..=pos {
                    shifts.push(Shift { side, agent, mover, window });
                }
            }
        }
    }
    shifts
}

/// Render a rational as `num/den` in lowest terms, even for integers.
pub fn format_ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim().parse().ok()?, d.trim().parse().ok()?),
        None => (s.trim().parse().ok()?, One::one()),
    };
    let den: num_bigint::BigInt = den;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// A discrete distribution over distinct shifts with exact probabilities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftDistribution {
    entries: Vec<(Shift, BigRational)>,
}

impl ShiftDistribution {
    /// Probabilities must be non-negative and sum to exactly one.
    pub fn new(entries: Vec<(Shift, BigRational)>) -> Result<Self> {
        let dist = Self::sub_distribution(entries)?;
        let total = dist.total();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {}, not 1",
                format_ratio(&total)
            )));
        }
        Ok(dist)
    }

    /// Like [`ShiftDistribution::new`] but accepts any total mass ≤ 1.
    /// Not reachable from the file parser; used when probing how the optimum
    /// reacts to adding mass.
    pub fn sub_distribution(entries: Vec<(Shift, BigRational)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (shift, p) in &entries {
            if p.is_negative() {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability for {shift}"
                )));
            }
            if !seen.insert(*shift) {
                return Err(Error::InvalidDistribution(format!("{shift} listed twice")));
            }
        }
        let dist = ShiftDistribution { entries };
        if dist.total() > BigRational::one() {
            return Err(Error::InvalidDistribution("total probability exceeds 1".into()));
        }
        Ok(dist)
    }

    pub fn uniform(shifts: &[Shift]) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::InvalidDistribution("empty shift domain".into()));
        }
        let p = BigRational::new(1.into(), shifts.len().into());
        Self::new(shifts.iter().map(|s| (*s, p.clone())).collect())
    }

    pub fn entries(&self) -> &[(Shift, BigRational)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> BigRational {
        self.entries.iter().fold(BigRational::zero(), |acc, (_, p)| acc + p)
    }

    pub fn validate(&self, inst: &PreferenceInstance) -> Result<()> {
        self.entries.iter().try_for_each(|(s, _)| s.validate(inst))
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(s, p)| format!("{s} {}\n", format_ratio(p)))
            .collect()
    }
}

/// Parse the distribution file format: one `SIDE agent mover k p` line per
/// shift, with `p` written as `num/den`.
pub fn parse_distribution(text: &str, inst: &PreferenceInstance) -> Result<ShiftDistribution> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, content) in content_lines(text) {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() != 5 {
            return Err(Error::Parse {
                line,
                kind: ParseErrorKind::Malformed("expected `SIDE agent mover k p_num/p_den`".into()),
            });
        }
        let shift = Shift::parse_tokens(&tokens[..4], line)?;
        shift.validate(inst).map_err(|e| Error::Parse {
            line,
            kind: ParseErrorKind::OutOfRange(e.to_string()),
        })?;
        let p = parse_ratio(tokens[4])
            .filter(|p| !p.is_negative())
            .ok_or_else(|| Error::Parse {
                line,
                kind: ParseErrorKind::Malformed(format!("bad probability `{}`", tokens[4])),
            })?;
        if !seen.insert(shift) {
            return Err(Error::Parse {
                line,
                kind: ParseErrorKind::DuplicateEntry(format!("{shift} listed twice")),
            });
        }
        entries.push((shift, p));
    }
    ShiftDistribution::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    const I2: &str = "2\nb1: g1 g2\nb2: g2 g1\ng1: b2 b1\ng2: b1 b2\n";
    const I3: &str = "3\nb1: g1 g2 g3\nb2: g2 g3 g1\nb3: g3 g1 g2\n\
                      g1: b2 b3 b1\ng2: b3 b1 b2\ng3: b1 b2 b3\n";

    #[test]
    fn parses_i2_and_round_trips() {
        let inst = parse_instance(I2).unwrap();
        assert_eq!(inst.n_boys(), 2);
        assert!(inst.is_complete());
        assert_eq!(inst.girl_prefs(0), &[1, 0]);
        assert_eq!(inst.to_text(), I2);
        assert_eq!(parse_instance(&inst.to_text()).unwrap(), inst);
    }

    #[test]
    fn empty_lists_are_valid() {
        let inst = parse_instance("2\nb1:\nb2:\ng1:\ng2:\n").unwrap();
        assert!(enumerate_shift_domain(&inst).is_empty());
        assert!(!inst.acceptable(0, 0));
    }

    #[test]
    fn reports_non_mutual_pair_with_line() {
        let err = parse_instance("1\nb1: g1\ng1:\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse { line: 2, kind: ParseErrorKind::NonMutualPair { boy: 0, girl: 0 } }
        );
        assert!(err.to_string().contains("non-mutual pair"));
    }

    #[test]
    fn reports_duplicates_and_range_errors() {
        let dup = parse_instance("2\nb1: g1 g1\nb2:\ng1: b1\ng2:\n").unwrap_err();
        assert!(matches!(dup, Error::Parse { line: 2, kind: ParseErrorKind::DuplicateEntry(_) }));
        let range = parse_instance("2\nb1: g3\nb2:\ng1:\ng2:\n").unwrap_err();
        assert!(matches!(range, Error::Parse { line: 2, kind: ParseErrorKind::OutOfRange(_) }));
        let bad = parse_instance("2\nb1 g1\n").unwrap_err();
        assert!(matches!(bad, Error::Parse { line: 2, kind: ParseErrorKind::Malformed(_) }));
        let again = parse_instance("1\nb1: g1\nb1: g1\ng1: b1\n").unwrap_err();
        assert!(matches!(again, Error::Parse { line: 3, kind: ParseErrorKind::DuplicateEntry(_) }));
    }

    #[test]
    fn unequal_sides() {
        let inst = parse_instance("2 1\nb1: g1\nb2: g1\ng1: b2 b1\n").unwrap();
        assert_eq!((inst.n_boys(), inst.n_girls()), (2, 1));
        assert_eq!(parse_instance(&inst.to_text()).unwrap(), inst);
    }

    #[test]
    fn apply_shift_examples() {
        let i2 = parse_instance(I2).unwrap();
        let b = apply_shift(&i2, &Shift::girl(0, 0, 1)).unwrap();
        assert_eq!(b.girl_prefs(0), &[0, 1]);
        assert_eq!(b.girl_rank(0, 0), Some(0));
        assert_eq!(b.boy_prefs(0), i2.boy_prefs(0));

        let i3 = parse_instance(I3).unwrap();
        let b = apply_shift(&i3, &Shift::boy(0, 2, 2)).unwrap();
        assert_eq!(b.boy_prefs(0), &[2, 0, 1]);
        assert_eq!(b.boy_rank(0, 1), Some(2));
        // mover at the bottom jumping over everything lands on top
        let b = apply_shift(&i3, &Shift::girl(2, 2, 2)).unwrap();
        assert_eq!(b.girl_prefs(2), &[2, 0, 1]);
    }

    #[test]
    fn apply_shift_rejects_invalid() {
        let i3 = parse_instance(I3).unwrap();
        assert!(apply_shift(&i3, &Shift::girl(0, 1, 1)).is_err()); // b2 is on top
        assert!(apply_shift(&i3, &Shift::girl(0, 0, 3)).is_err()); // window too large
        assert!(apply_shift(&i3, &Shift::girl(0, 0, 0)).is_err());
        assert!(apply_shift(&i3, &Shift::girl(5, 0, 1)).is_err());
    }

    #[test]
    fn domain_sizes() {
        assert_eq!(enumerate_shift_domain(&parse_instance(I2).unwrap()).len(), 4);
        assert_eq!(enumerate_shift_domain(&parse_instance(I3).unwrap()).len(), 18);
        let singles = parse_instance("2\nb1: g1\nb2: g2\ng1: b1\ng2: b2\n").unwrap();
        assert!(enumerate_shift_domain(&singles).is_empty());
    }

    #[test]
    fn shift_text_round_trip() {
        let s = Shift::boy(2, 0, 1);
        assert_eq!(s.to_string(), "BOY_LIST b3 g1 1");
        assert_eq!(s.to_string().parse::<Shift>().unwrap(), s);
        assert!("GIRL_LIST b1 g1 1".parse::<Shift>().is_err());
    }

    #[test]
    fn distribution_parsing() {
        let i2 = parse_instance(I2).unwrap();
        let d = parse_distribution("GIRL_LIST g1 b1 1 1/4\n# note\nBOY_LIST b1 g2 1 3/4\n", &i2).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(parse_distribution(&d.to_text(), &i2).unwrap(), d);

        let short = parse_distribution("GIRL_LIST g1 b1 1 1/4\n", &i2).unwrap_err();
        assert!(matches!(short, Error::InvalidDistribution(_)));
        let dup = parse_distribution("GIRL_LIST g1 b1 1 1/2\nGIRL_LIST g1 b1 1 1/2\n", &i2);
        assert!(matches!(dup, Err(Error::Parse { line: 2, .. })));
        let invalid = parse_distribution("GIRL_LIST g1 b2 1 1\n", &i2);
        assert!(matches!(invalid, Err(Error::Parse { line: 1, .. })));
        let zero_den = parse_distribution("GIRL_LIST g1 b1 1 1/0\n", &i2);
        assert!(zero_den.is_err());
    }

    #[test]
    fn sub_distribution_allows_deficit() {
        let half = BigRational::new(1.into(), 2.into());
        let d = ShiftDistribution::sub_distribution(vec![(Shift::girl(0, 0, 1), half.clone())]).unwrap();
        assert_eq!(d.total(), half);
        assert!(ShiftDistribution::new(d.entries().to_vec()).is_err());
    }

    #[test]
    fn ratio_format() {
        assert_eq!(format_ratio(&BigRational::zero()), "0/1");
        assert_eq!(format_ratio(&parse_ratio("2/8").unwrap()), "1/4");
        assert_eq!(parse_ratio("3"), Some(BigRational::from_integer(3.into())));
    }
}
