//! Matchings, stability, deferred acceptance and the lattice operations.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseErrorKind, Result};
use crate::instance::{parse_agent, PreferenceInstance};

/// A one-to-one pairing of boys and girls. Partners are indexed both ways.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Matching {
    boy_partner: Vec<Option<usize>>,
    girl_partner: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(n_boys: usize, n_girls: usize) -> Matching {
        Matching { boy_partner: vec![None; n_boys], girl_partner: vec![None; n_girls] }
    }

    pub fn from_pairs(
        n_boys: usize,
        n_girls: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Matching> {
        let mut m = Matching::empty(n_boys, n_girls);
        for (b, g) in pairs {
            if b >= n_boys || g >= n_girls {
                return Err(Error::InvalidMatching(format!("pair b{} g{} out of range", b + 1, g + 1)));
            }
            if m.boy_partner[b].is_some() || m.girl_partner[g].is_some() {
                return Err(Error::InvalidMatching(format!(
                    "agent matched twice in pair b{} g{}",
                    b + 1,
                    g + 1
                )));
            }
            m.boy_partner[b] = Some(g);
            m.girl_partner[g] = Some(b);
        }
        Ok(m)
    }

    pub fn n_boys(&self) -> usize {
        self.boy_partner.len()
    }

    pub fn n_girls(&self) -> usize {
        self.girl_partner.len()
    }

    pub fn boy_partner(&self, b: usize) -> Option<usize> {
        self.boy_partner[b]
    }

    pub fn girl_partner(&self, g: usize) -> Option<usize> {
        self.girl_partner[g]
    }

    pub fn contains(&self, b: usize, g: usize) -> bool {
        self.boy_partner.get(b) == Some(&Some(g))
    }

    /// Pairs sorted by boy id.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.boy_partner
            .iter()
            .enumerate()
            .filter_map(|(b, g)| g.map(|g| (b, g)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.boy_partner.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn unmatched_boys(&self) -> Vec<usize> {
        (0..self.n_boys()).filter(|&b| self.boy_partner[b].is_none()).collect()
    }

    pub fn unmatched_girls(&self) -> Vec<usize> {
        (0..self.n_girls()).filter(|&g| self.girl_partner[g].is_none()).collect()
    }

    /// The same matching with boys and girls swapped.
    pub fn transposed(&self) -> Matching {
        Matching { boy_partner: self.girl_partner.clone(), girl_partner: self.boy_partner.clone() }
    }

    /// Re-pair `b` with `g`. Callers keep the matching consistent as a whole
    /// (rotations reassign a full cycle at once).
    pub(crate) fn assign(&mut self, b: usize, g: usize) {
        self.boy_partner[b] = Some(g);
        self.girl_partner[g] = Some(b);
    }

    /// Text form: `b<i> g<j>` per pair, then the unmatched agents under a
    /// `# unmatched` header.
    pub fn to_text(&self) -> String {
        let mut out: String = self
            .pairs()
            .into_iter()
            .map(|(b, g)| format!("b{} g{}\n", b + 1, g + 1))
            .collect();
        let unmatched: Vec<String> = self
            .unmatched_boys()
            .into_iter()
            .map(|b| format!("b{}", b + 1))
            .chain(self.unmatched_girls().into_iter().map(|g| format!("g{}", g + 1)))
            .collect();
        if !unmatched.is_empty() {
            out.push_str("# unmatched\n");
            out.push_str(&unmatched.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, n_boys: usize, n_girls: usize) -> Result<Matching> {
        let mut pairs = Vec::new();
        let mut in_unmatched = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('#') {
                in_unmatched = line.trim_start_matches('#').trim() == "unmatched";
                continue;
            }
            if in_unmatched {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let [b, g] = tokens.as_slice() else {
                return Err(Error::Parse {
                    line: i + 1,
                    kind: ParseErrorKind::Malformed("expected `b<i> g<j>`".into()),
                });
            };
            pairs.push((parse_agent(b, 'b', n_boys, i + 1)?, parse_agent(g, 'g', n_girls, i + 1)?));
        }
        Matching::from_pairs(n_boys, n_girls, pairs)
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> =
            self.pairs().into_iter().map(|(b, g)| format!("b{}g{}", b + 1, g + 1)).collect();
        write!(f, "{{{}}}", pairs.join(","))
    }
}

fn fits(inst: &PreferenceInstance, m: &Matching) -> bool {
    m.n_boys() == inst.n_boys() && m.n_girls() == inst.n_girls()
}

/// Mutually acceptable pairs outside `m` where both sides would rather be
/// together than with their current partner (or alone).
pub fn blocking_pairs(inst: &PreferenceInstance, m: &Matching) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for b in 0..inst.n_boys() {
        let current = m.boy_partner(b);
        for &g in inst.boy_prefs(b) {
            if Some(g) == current {
                break; // the rest of the list is worse than his partner
            }
            if inst.girl_prefers(g, b, m.girl_partner(g)) {
                out.insert((b, g));
            }
        }
    }
    out
}

/// Stable: every pair is acceptable and nothing blocks.
///
/// Without blocking pairs no two mutually acceptable agents are both single,
/// so the matching cannot be extended; this is the maximality requirement
/// for incomplete lists.
pub fn is_stable(inst: &PreferenceInstance, m: &Matching) -> bool {
    fits(inst, m)
        && m.pairs().iter().all(|&(b, g)| inst.acceptable(b, g))
        && first_blocking_pair(inst, m).is_none()
}

fn first_blocking_pair(inst: &PreferenceInstance, m: &Matching) -> Option<(usize, usize)> {
    (0..inst.n_boys()).find_map(|b| {
        let current = m.boy_partner(b);
        inst.boy_prefs(b)
            .iter()
            .take_while(|&&g| Some(g) != current)
            .find(|&&g| inst.girl_prefers(g, b, m.girl_partner(g)))
            .map(|&g| (b, g))
    })
}

/// Deferred acceptance with proposers taken in ascending id order.
/// Returns the proposer-side partner vector.
fn deferred_acceptance(
    proposer_prefs: impl Fn(usize) -> Vec<usize>,
    n_proposers: usize,
    n_receivers: usize,
    receiver_prefers: impl Fn(usize, usize, Option<usize>) -> bool,
) -> Vec<Option<usize>> {
    let lists: Vec<Vec<usize>> = (0..n_proposers).map(proposer_prefs).collect();
    let mut next = vec![0usize; n_proposers];
    let mut held: Vec<Option<usize>> = vec![None; n_receivers];
    let mut free: VecDeque<usize> = (0..n_proposers).collect();
    while let Some(p) = free.pop_front() {
        let Some(&r) = lists[p].get(next[p]) else {
            continue; // exhausted his list, stays single
        };
        next[p] += 1;
        if receiver_prefers(r, p, held[r]) {
            if let Some(old) = held[r].replace(p) {
                free.push_front(old);
            }
        } else {
            free.push_front(p);
        }
    }
    let mut partner = vec![None; n_proposers];
    for (r, p) in held.iter().enumerate() {
        if let Some(p) = p {
            partner[*p] = Some(r);
        }
    }
    partner
}

/// Boy-proposing deferred acceptance.
pub fn boy_optimal(inst: &PreferenceInstance) -> Matching {
    let partners = deferred_acceptance(
        |b| inst.boy_prefs(b).to_vec(),
        inst.n_boys(),
        inst.n_girls(),
        |g, b, cur| inst.girl_prefers(g, b, cur),
    );
    let pairs = partners.iter().enumerate().filter_map(|(b, g)| g.map(|g| (b, g)));
    Matching::from_pairs(inst.n_boys(), inst.n_girls(), pairs).expect("deferred acceptance output is a matching")
}

/// Girl-proposing deferred acceptance.
pub fn girl_optimal(inst: &PreferenceInstance) -> Matching {
    let partners = deferred_acceptance(
        |g| inst.girl_prefs(g).to_vec(),
        inst.n_girls(),
        inst.n_boys(),
        |b, g, cur| inst.boy_prefers(b, g, cur),
    );
    let pairs = partners.iter().enumerate().filter_map(|(g, b)| b.map(|b| (b, g)));
    Matching::from_pairs(inst.n_boys(), inst.n_girls(), pairs).expect("deferred acceptance output is a matching")
}

fn boy_rank_of(inst: &PreferenceInstance, b: usize, g: Option<usize>) -> usize {
    g.and_then(|g| inst.boy_rank(b, g)).unwrap_or(usize::MAX)
}

/// `a ⪯ b` in the boy-side dominance order: every boy weakly prefers his
/// partner in `a`.
pub fn dominates(inst: &PreferenceInstance, a: &Matching, b: &Matching) -> bool {
    (0..inst.n_boys()).all(|boy| {
        boy_rank_of(inst, boy, a.boy_partner(boy)) <= boy_rank_of(inst, boy, b.boy_partner(boy))
    })
}

fn combine(inst: &PreferenceInstance, a: &Matching, b: &Matching, better: bool) -> Result<Matching> {
    if !is_stable(inst, a) || !is_stable(inst, b) {
        return Err(Error::NotStable);
    }
    let pairs = (0..inst.n_boys()).filter_map(|boy| {
        let (pa, pb) = (a.boy_partner(boy), b.boy_partner(boy));
        let a_better = boy_rank_of(inst, boy, pa) <= boy_rank_of(inst, boy, pb);
        let pick = if a_better == better { pa } else { pb };
        pick.map(|g| (boy, g))
    });
    Matching::from_pairs(inst.n_boys(), inst.n_girls(), pairs)
}

/// Each boy takes the better of his two partners.
pub fn meet(inst: &PreferenceInstance, a: &Matching, b: &Matching) -> Result<Matching> {
    combine(inst, a, b, true)
}

/// Each boy takes the worse of his two partners.
pub fn join(inst: &PreferenceInstance, a: &Matching, b: &Matching) -> Result<Matching> {
    combine(inst, a, b, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::parse_instance;

    fn i2() -> PreferenceInstance {
        parse_instance("2\nb1: g1 g2\nb2: g2 g1\ng1: b2 b1\ng2: b1 b2\n").unwrap()
    }

    fn i3() -> PreferenceInstance {
        parse_instance(
            "3\nb1: g1 g2 g3\nb2: g2 g3 g1\nb3: g3 g1 g2\ng1: b2 b3 b1\ng2: b3 b1 b2\ng3: b1 b2 b3\n",
        )
        .unwrap()
    }

    fn m(n: usize, pairs: &[(usize, usize)]) -> Matching {
        Matching::from_pairs(n, n, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn i2_both_perfect_matchings_stable() {
        let inst = i2();
        let m0 = m(2, &[(0, 0), (1, 1)]);
        let mz = m(2, &[(0, 1), (1, 0)]);
        assert!(blocking_pairs(&inst, &m0).is_empty());
        assert!(blocking_pairs(&inst, &mz).is_empty());
        assert!(is_stable(&inst, &m0));
        assert!(!is_stable(&inst, &Matching::empty(2, 2)));
        assert_eq!(boy_optimal(&inst), m0);
        assert_eq!(girl_optimal(&inst), mz);
    }

    #[test]
    fn i3_blocking_pairs_of_unstable_matching() {
        let inst = i3();
        let bad = m(3, &[(0, 1), (1, 0), (2, 2)]);
        // b2 sits with his last choice; g2 keeps b1 over him but g3 would drop b3
        let blocking = blocking_pairs(&inst, &bad);
        assert_eq!(blocking, BTreeSet::from([(1, 2)]));
        assert!(!is_stable(&inst, &bad));
    }

    #[test]
    fn i3_extremes() {
        let inst = i3();
        assert_eq!(boy_optimal(&inst), m(3, &[(0, 0), (1, 1), (2, 2)]));
        assert_eq!(girl_optimal(&inst), m(3, &[(0, 2), (1, 0), (2, 1)]));
        assert!(is_stable(&inst, &m(3, &[(0, 0), (1, 1), (2, 2)])));
    }

    #[test]
    fn meet_join_examples() {
        let inst = i3();
        let m0 = boy_optimal(&inst);
        let mz = girl_optimal(&inst);
        let m1 = m(3, &[(0, 1), (1, 2), (2, 0)]);
        assert!(is_stable(&inst, &m1));
        assert_eq!(meet(&inst, &m0, &m0).unwrap(), m0);
        assert_eq!(meet(&inst, &m0, &mz).unwrap(), m0);
        assert_eq!(join(&inst, &m0, &mz).unwrap(), mz);
        assert_eq!(meet(&inst, &m1, &mz).unwrap(), m1);
        assert!(dominates(&inst, &m0, &m1) && dominates(&inst, &m1, &mz));
        assert!(!dominates(&inst, &mz, &m1));
        let bad = m(3, &[(0, 1), (1, 0), (2, 2)]);
        assert_eq!(meet(&inst, &bad, &m0), Err(Error::NotStable));
    }

    #[test]
    fn unique_stable_matching_when_lists_agree() {
        let inst = parse_instance("2\nb1: g1 g2\nb2: g2 g1\ng1: b1 b2\ng2: b2 b1\n").unwrap();
        assert_eq!(boy_optimal(&inst), girl_optimal(&inst));
    }

    #[test]
    fn incomplete_lists_leave_agents_single() {
        // b1 and g2 only accept each other's rivals
        let inst = parse_instance("2\nb1: g1 g2\nb2: g1\ng1: b1 b2\ng2: b1\n").unwrap();
        let m0 = boy_optimal(&inst);
        assert_eq!(m0.pairs(), vec![(0, 0)]);
        assert!(is_stable(&inst, &m0));
        assert_eq!(m0.unmatched_boys(), vec![1]);
        assert_eq!(girl_optimal(&inst), m0);
    }

    #[test]
    fn text_round_trip() {
        let mm = Matching::from_pairs(3, 2, [(2, 0)]).unwrap();
        let text = mm.to_text();
        assert_eq!(text, "b3 g1\n# unmatched\nb1 b2 g2\n");
        assert_eq!(Matching::parse(&text, 3, 2).unwrap(), mm);
        assert!(Matching::from_pairs(2, 2, [(0, 0), (1, 0)]).is_err());
    }
}
