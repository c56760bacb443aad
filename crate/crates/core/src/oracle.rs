//! Brute-force ground truth for small instances.
//!
//! Uses only instance/matching primitives plus exposed-rotation elimination;
//! never the poset builder or the flow solver.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::instance::{apply_shift, PreferenceInstance, ShiftDistribution};
use crate::matching::{boy_optimal, is_stable, join, meet, Matching};
use crate::rotations::{eliminate, exposed_rotations, Rotation, RotationPoset};

pub const MAX_BRUTE_FORCE: usize = 8;
pub const MAX_ORACLE_POSET: usize = 7;

fn guard(inst: &PreferenceInstance, limit: usize) -> Result<()> {
    let size = inst.n_boys().max(inst.n_girls());
    if size > limit {
        return Err(Error::SizeGuard { limit, size });
    }
    Ok(())
}

/// Every stable matching, found by testing every matching of the
/// acceptability graph. Sorted.
pub fn enumerate_stable_bruteforce(inst: &PreferenceInstance) -> Result<Vec<Matching>> {
    guard(inst, MAX_BRUTE_FORCE)?;
    let mut found = Vec::new();
    let current = Matching::empty(inst.n_boys(), inst.n_girls());
    let mut used = vec![false; inst.n_girls()];
    search(inst, 0, &current, &mut used, &mut found);
    found.sort();
    Ok(found)
}

fn search(inst: &PreferenceInstance, b: usize, m: &Matching, used: &mut [bool], found: &mut Vec<Matching>) {
    if b == inst.n_boys() {
        if is_stable(inst, m) {
            found.push(m.clone());
        }
        return;
    }
    search(inst, b + 1, m, used, found);
    for &g in inst.boy_prefs(b) {
        if !used[g] {
            used[g] = true;
            let mut next = m.clone();
            next.assign(b, g);
            search(inst, b + 1, &next, used, found);
            used[g] = false;
        }
    }
}

/// Probability that `m` is unstable after one shift drawn from `dist`,
/// testing each shifted instance directly.
pub fn oracle_objective(inst: &PreferenceInstance, dist: &ShiftDistribution, m: &Matching) -> Result<BigRational> {
    if !is_stable(inst, m) {
        return Err(Error::NotStable);
    }
    let mut total = BigRational::zero();
    for (shift, p) in dist.entries() {
        if !is_stable(&apply_shift(inst, shift)?, m) {
            total += p;
        }
    }
    Ok(total)
}

/// One edge `m -> m / rotation` of the lattice's elimination graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: Matching,
    pub rotation: Rotation,
    pub to: Matching,
}

/// Breadth-first search over exposed-rotation eliminations from `M0`,
/// returning every reached matching with the rotations eliminated to get
/// there, plus all transitions.
fn explore(inst: &PreferenceInstance) -> (BTreeMap<Matching, BTreeSet<Rotation>>, Vec<Transition>) {
    let m0 = boy_optimal(inst);
    let mut sets = BTreeMap::from([(m0.clone(), BTreeSet::new())]);
    let mut transitions = Vec::new();
    let mut queue = VecDeque::from([m0]);
    while let Some(m) = queue.pop_front() {
        let base = sets[&m].clone();
        for r in exposed_rotations(inst, &m) {
            let next = eliminate(inst, &m, &r).expect("exposed rotation");
            if !sets.contains_key(&next) {
                let mut set = base.clone();
                set.insert(r.clone());
                sets.insert(next.clone(), set);
                queue.push_back(next.clone());
            }
            transitions.push(Transition { from: m.clone(), rotation: r, to: next });
        }
    }
    (sets, transitions)
}

/// All transitions of the lattice, in breadth-first order.
pub fn lattice_transitions(inst: &PreferenceInstance) -> Result<Vec<Transition>> {
    guard(inst, MAX_ORACLE_POSET)?;
    Ok(explore(inst).1)
}

/// The rotation poset read off the lattice: `ρ ≺ ρ'` when every matching
/// whose rotation set contains `ρ'` also contains `ρ`.
pub fn oracle_poset(inst: &PreferenceInstance) -> Result<RotationPoset> {
    guard(inst, MAX_ORACLE_POSET)?;
    let (sets, _) = explore(inst);
    let rotations: Vec<Rotation> = sets.values().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut relation = Vec::new();
    for (i, a) in rotations.iter().enumerate() {
        for (j, b) in rotations.iter().enumerate() {
            if i != j && sets.values().all(|s| !s.contains(b) || s.contains(a)) {
                relation.push((i, j));
            }
        }
    }
    RotationPoset::from_relation(inst, boy_optimal(inst), rotations, &relation).map(|(p, _)| p)
}

/// Meet/join closure and both distributive laws over `matchings`.
pub fn check_lattice_laws(inst: &PreferenceInstance, matchings: &[Matching]) -> std::result::Result<(), String> {
    let set: BTreeSet<&Matching> = matchings.iter().collect();
    let mut meets = BTreeMap::new();
    let mut joins = BTreeMap::new();
    for (i, a) in matchings.iter().enumerate() {
        for (j, b) in matchings.iter().enumerate() {
            let mt = meet(inst, a, b).map_err(|e| format!("meet of {a} and {b}: {e}"))?;
            let jn = join(inst, a, b).map_err(|e| format!("join of {a} and {b}: {e}"))?;
            if !set.contains(&mt) || !set.contains(&jn) {
                return Err(format!("{a} and {b}: meet or join leaves the set"));
            }
            meets.insert((i, j), mt);
            joins.insert((i, j), jn);
        }
    }
    let index: BTreeMap<&Matching, usize> = matchings.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let idx = |m: &Matching| index[m];
    for a in 0..matchings.len() {
        for b in 0..matchings.len() {
            for c in 0..matchings.len() {
                let left = &meets[&(a, idx(&joins[&(b, c)]))];
                let right = &joins[&(idx(&meets[&(a, b)]), idx(&meets[&(a, c)]))];
                if left != right {
                    return Err(format!("meet does not distribute over join at {a},{b},{c}"));
                }
                let left = &joins[&(a, idx(&meets[&(b, c)]))];
                let right = &meets[&(idx(&joins[&(a, b)]), idx(&joins[&(a, c)]))];
                if left != right {
                    return Err(format!("join does not distribute over meet at {a},{b},{c}"));
                }
            }
        }
    }
    Ok(())
}

/// Meet/join closure only.
pub fn check_sublattice(inst: &PreferenceInstance, matchings: &[Matching]) -> std::result::Result<(), String> {
    let set: BTreeSet<&Matching> = matchings.iter().collect();
    for a in matchings {
        for b in matchings {
            let ok = [meet(inst, a, b), join(inst, a, b)]
                .into_iter()
                .all(|m| m.is_ok_and(|m| set.contains(&m)));
            if !ok {
                return Err(format!("{a} and {b}: meet or join leaves the set"));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub stable_set: Vec<Matching>,
    /// Parallel to `stable_set`.
    pub objectives: Vec<BigRational>,
    pub min_objective: Option<BigRational>,
    pub argmin_set: Vec<Matching>,
    pub lattice_check: std::result::Result<(), String>,
}

/// Brute-force everything about `(inst, dist)`. Lattice laws are checked
/// when there are at most `lattice_limit` stable matchings.
pub fn oracle_report(inst: &PreferenceInstance, dist: &ShiftDistribution, lattice_limit: usize) -> Result<OracleReport> {
    oracle_report_with(inst, dist, enumerate_stable_bruteforce(inst)?, lattice_limit)
}

/// As [`oracle_report`], reusing a stable set enumerated earlier.
pub fn oracle_report_with(
    inst: &PreferenceInstance,
    dist: &ShiftDistribution,
    stable_set: Vec<Matching>,
    lattice_limit: usize,
) -> Result<OracleReport> {
    let objectives = stable_set
        .iter()
        .map(|m| oracle_objective(inst, dist, m))
        .collect::<Result<Vec<_>>>()?;
    let min_objective = objectives.iter().min().cloned();
    let argmin_set = stable_set
        .iter()
        .zip(&objectives)
        .filter(|(_, o)| Some(*o) == min_objective.as_ref())
        .map(|(m, _)| m.clone())
        .collect();
    let lattice_check = if stable_set.len() <= lattice_limit {
        check_lattice_laws(inst, &stable_set)
    } else {
        Ok(())
    };
    Ok(OracleReport { stable_set, objectives, min_objective, argmin_set, lattice_check })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{parse_instance, Shift};
    use crate::matching::girl_optimal;
    use crate::test_fixtures::{i2, i3};

    #[test]
    fn stable_sets_of_fixtures() {
        let inst = i2();
        assert_eq!(enumerate_stable_bruteforce(&inst).unwrap(), {
            let mut v = vec![boy_optimal(&inst), girl_optimal(&inst)];
            v.sort();
            v
        });
        assert_eq!(enumerate_stable_bruteforce(&i3()).unwrap().len(), 3);
    }

    #[test]
    fn identical_lists_give_one_matching() {
        let inst = parse_instance("3\nb1: g1 g2 g3\nb2: g1 g2 g3\nb3: g1 g2 g3\ng1: b1 b2 b3\ng2: b1 b2 b3\ng3: b1 b2 b3\n").unwrap();
        assert_eq!(enumerate_stable_bruteforce(&inst).unwrap(), vec![boy_optimal(&inst)]);
        assert!(oracle_poset(&inst).unwrap().is_empty());
    }

    #[test]
    fn i3_objectives() {
        let inst = i3();
        let dist = ShiftDistribution::new(vec![(Shift::girl(0, 0, 1), BigRational::from_integer(1.into()))]).unwrap();
        let m1 = Matching::from_pairs(3, 3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let one = BigRational::from_integer(1.into());
        assert_eq!(oracle_objective(&inst, &dist, &m1).unwrap(), one);
        assert!(oracle_objective(&inst, &dist, &boy_optimal(&inst)).unwrap().is_zero());
        assert!(oracle_objective(&inst, &dist, &girl_optimal(&inst)).unwrap().is_zero());
        assert_eq!(oracle_objective(&inst, &dist, &Matching::empty(3, 3)), Err(Error::NotStable));
        let report = oracle_report(&inst, &dist, 25).unwrap();
        assert_eq!(report.argmin_set.len(), 2);
        assert!(report.lattice_check.is_ok());
    }

    #[test]
    fn oracle_posets_of_fixtures() {
        let p3 = oracle_poset(&i3()).unwrap();
        assert_eq!(p3.len(), 2);
        assert!(p3.precedes(0, 1));
        assert_eq!(oracle_poset(&i2()).unwrap().len(), 1);
        assert_eq!(lattice_transitions(&i3()).unwrap().len(), 2);
    }

    #[test]
    fn size_guards() {
        let n = 9;
        let list = |q: char| (1..=n).map(|i| format!("{q}{i}")).collect::<Vec<_>>().join(" ");
        let mut text = format!("{n}\n");
        for i in 1..=n {
            text += &format!("b{i}: {}\n", list('g'));
        }
        for i in 1..=n {
            text += &format!("g{i}: {}\n", list('b'));
        }
        let inst = parse_instance(&text).unwrap();
        assert_eq!(enumerate_stable_bruteforce(&inst), Err(Error::SizeGuard { limit: 8, size: 9 }));
        assert_eq!(oracle_poset(&inst).unwrap_err(), Error::SizeGuard { limit: 7, size: 9 });
    }
}
