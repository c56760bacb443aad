//! Cross-checks of the main pipeline against the brute-force oracle.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::Result;
use crate::instance::{apply_shift, format_ratio, PreferenceInstance, Shift, ShiftDistribution, Side};
use crate::matching::{dominates, is_stable, Matching};
use crate::oracle::{
    check_sublattice, lattice_transitions, oracle_objective, oracle_poset, oracle_report, OracleReport,
    MAX_ORACLE_POSET,
};
use crate::robust_flow::{check_complementary_slackness, check_flow_feasibility, run_pipeline, RobustPipeline};
use crate::robust_lattice::{build_robust_poset, enumerate_robust};
use crate::rotations::{ClosedSet, PosetNode, RotationPoset};
use crate::shift_analysis::{characterize_mab, sublattice_poset, ShiftAnalyzer, ShiftStatus};

pub type Check = std::result::Result<(), String>;

/// Closed sets of `poset` generate exactly `stable_set`, one each.
pub fn check_bijection(poset: &RotationPoset, stable_set: &[Matching]) -> Check {
    let generated: Vec<Matching> = poset
        .enumerate_closed_sets()
        .map(|s| poset.closed_set_to_matching(&s).map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    let distinct: BTreeSet<&Matching> = generated.iter().collect();
    if distinct.len() != generated.len() {
        return Err("two closed sets generate the same matching".into());
    }
    let expected: BTreeSet<&Matching> = stable_set.iter().collect();
    if distinct != expected {
        return Err(format!("{} generated vs {} stable matchings", distinct.len(), expected.len()));
    }
    Ok(())
}

pub fn check_poset_against_oracle(inst: &PreferenceInstance, poset: &RotationPoset) -> Check {
    let oracle = oracle_poset(inst).map_err(|e| e.to_string())?;
    poset.same_order_as(&oracle)
}

/// Structural statements about one shift, against direct stability tests
/// and the lattice's transition graph.
pub fn check_shift_structure(
    inst: &PreferenceInstance,
    poset: &RotationPoset,
    analyzer: &ShiftAnalyzer<'_>,
    stable_set: &[Matching],
    transitions: &[crate::oracle::Transition],
    shift: &Shift,
) -> Check {
    let err = |msg: String| format!("{shift}: {msg}");
    let shifted = apply_shift(inst, shift).map_err(|e| err(e.to_string()))?;
    let analysis = analyzer.analyze(shift).map_err(|e| err(e.to_string()))?;

    let mut mab = Vec::new();
    for m in stable_set {
        let direct = !is_stable(&shifted, m);
        if characterize_mab(inst, shift, m) != direct {
            return Err(err(format!("window test disagrees with direct test on {m}")));
        }
        let set = poset.matching_to_closed_set(m).map_err(|e| err(e.to_string()))?;
        if analysis.destabilizes(&set) != direct {
            return Err(err(format!("status {} misclassifies {m}", analysis.status)));
        }
        if direct {
            mab.push(m.clone());
        }
    }

    let in_mab: BTreeSet<&Matching> = mab.iter().collect();
    let mut entries = BTreeSet::new();
    let mut exits = BTreeSet::new();
    for t in transitions {
        match (in_mab.contains(&t.from), in_mab.contains(&t.to)) {
            (false, true) => entries.insert(t.rotation.clone()),
            (true, false) => exits.insert(t.rotation.clone()),
            _ => false,
        };
    }
    if entries.len() > 1 || exits.len() > 1 {
        return Err(err(format!("{} entry and {} exit rotations", entries.len(), exits.len())));
    }
    let id = |node: Option<PosetNode>| match node {
        Some(PosetNode::Rotation(i)) => Some(poset.rotation(i).clone()),
        _ => None,
    };
    if entries.iter().next().is_some_and(|r| Some(r) != id(analysis.rho_in).as_ref())
        || exits.iter().next().is_some_and(|r| Some(r) != id(analysis.rho_out).as_ref())
    {
        return Err(err("entry or exit rotation differs from the analysis".into()));
    }

    let c = analyzer.component_rotations(shift).map_err(|e| err(e.to_string()))?;
    if let (Some(r1), Some(r2)) = (c.rho1, c.rho2) {
        // boy-list components come from the dual poset
        let ordered = match shift.side {
            Side::GirlList => poset.precedes_or_eq(r1, r2),
            Side::BoyList => poset.precedes_or_eq(r2, r1),
        };
        if !ordered {
            return Err(err(format!("rho1 = R{r1} and rho2 = R{r2} are out of order")));
        }
    }

    if analysis.status == ShiftStatus::Proper {
        let sub = sublattice_poset(poset, &analysis).map_err(|e| err(e.to_string()))?;
        let generated: BTreeSet<Matching> =
            sub.matchings(poset).map_err(|e| err(e.to_string()))?.into_iter().collect();
        if generated != mab.iter().cloned().collect() {
            return Err(err("sublattice poset does not generate the destabilized set".into()));
        }
        let extremes_ok = in_mab.contains(&sub.m_boy)
            && in_mab.contains(&sub.m_girl)
            && mab.iter().all(|m| dominates(inst, &sub.m_boy, m) && dominates(inst, m, &sub.m_girl));
        if !extremes_ok {
            return Err(err("extreme matchings of the destabilized set differ".into()));
        }
    }
    check_sublattice(inst, &mab).map_err(err)
}

/// Optimal value, attainment by the returned matching, flow feasibility and
/// complementary slackness.
pub fn check_optimality(inst: &PreferenceInstance, dist: &ShiftDistribution, pipe: &RobustPipeline, oracle: &OracleReport) -> Check {
    let sol = &pipe.solution;
    if sol.objective != sol.flow_value.clone() + &sol.constant_loss {
        return Err("objective is not flow value plus constant loss".into());
    }
    let Some(min) = &oracle.min_objective else {
        return Err("no stable matching".into());
    };
    if &sol.objective != min {
        return Err(format!("objective {} vs oracle minimum {}", format_ratio(&sol.objective), format_ratio(min)));
    }
    let attained = oracle_objective(inst, dist, &sol.matching).map_err(|e| e.to_string())?;
    if &attained != min {
        return Err(format!("returned matching scores {}", format_ratio(&attained)));
    }
    if pipe.network.objective(&sol.closed_set) != *min {
        return Err("network objective of the closed set differs".into());
    }
    check_flow_feasibility(&pipe.network, &pipe.flow)?;
    check_complementary_slackness(&pipe.network, &pipe.flow, &sol.closed_set)
}

/// Robust poset generates exactly the oracle's argmin set, which is a
/// sublattice.
pub fn check_representation(inst: &PreferenceInstance, pipe: &RobustPipeline, oracle: &OracleReport) -> Check {
    let robust = build_robust_poset(&pipe.network, &pipe.flow).map_err(|e| e.to_string())?;
    let generated: Vec<Matching> = enumerate_robust(&pipe.poset, &robust).collect();
    let got: BTreeSet<&Matching> = generated.iter().collect();
    if got.len() != generated.len() {
        return Err("robust poset generates a matching twice".into());
    }
    let want: BTreeSet<&Matching> = oracle.argmin_set.iter().collect();
    if got != want {
        let missing: Vec<String> = want.difference(&got).map(|m| m.to_string()).collect();
        let extra: Vec<String> = got.difference(&want).map(|m| m.to_string()).collect();
        return Err(format!("robust set differs: missing [{}], extra [{}]", missing.join(" "), extra.join(" ")));
    }
    for set in robust.closed_sets() {
        let rotations: ClosedSet = robust.rotation_set(&set).map_err(|e| e.to_string())?;
        let needed = pipe.network.cut_value(&rotations);
        if needed != pipe.flow.value().clone() {
            return Err("a robust closed set is not a minimum cut".into());
        }
    }
    check_sublattice(inst, &oracle.argmin_set)
}

/// Unmatched agents are the same in every stable matching.
pub fn check_unmatched_invariance(stable_set: &[Matching]) -> Check {
    let mut sets = stable_set.iter().map(|m| (m.unmatched_boys(), m.unmatched_girls()));
    let Some(first) = sets.next() else { return Ok(()) };
    if sets.all(|s| s == first) {
        Ok(())
    } else {
        Err("unmatched agents vary across stable matchings".into())
    }
}

#[derive(Clone, Debug)]
pub struct NamedCheck {
    pub name: &'static str,
    pub result: Check,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub checks: Vec<NamedCheck>,
    pub stable_count: usize,
    pub robust_count: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.result.is_ok())
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stable matchings: {}", self.stable_count)?;
        writeln!(f, "robust matchings: {}", self.robust_count)?;
        for c in &self.checks {
            match &c.result {
                Ok(()) => writeln!(f, "PASS {}", c.name)?,
                Err(e) => writeln!(f, "FAIL {}: {e}", c.name)?,
            }
        }
        Ok(())
    }
}

/// Run every cross-check on one instance and distribution.
pub fn verify_instance(inst: &PreferenceInstance, dist: &ShiftDistribution) -> Result<VerifyReport> {
    let oracle = oracle_report(inst, dist, 25)?;
    let pipe = run_pipeline(inst, dist)?;
    let mut checks = vec![
        NamedCheck { name: "bijection", result: check_bijection(&pipe.poset, &oracle.stable_set) },
        NamedCheck { name: "lattice-laws", result: oracle.lattice_check.clone() },
        NamedCheck { name: "unmatched-invariance", result: check_unmatched_invariance(&oracle.stable_set) },
    ];
    if inst.n_boys().max(inst.n_girls()) <= MAX_ORACLE_POSET {
        checks.push(NamedCheck { name: "poset", result: check_poset_against_oracle(inst, &pipe.poset) });
        let transitions = lattice_transitions(inst)?;
        let analyzer = ShiftAnalyzer::new(inst, &pipe.poset);
        let result = dist
            .entries()
            .iter()
            .try_for_each(|(s, _)| check_shift_structure(inst, &pipe.poset, &analyzer, &oracle.stable_set, &transitions, s));
        checks.push(NamedCheck { name: "shift-structure", result });
    }
    checks.push(NamedCheck { name: "optimality", result: check_optimality(inst, dist, &pipe, &oracle) });
    checks.push(NamedCheck { name: "representation", result: check_representation(inst, &pipe, &oracle) });
    Ok(VerifyReport { checks, stable_count: oracle.stable_set.len(), robust_count: oracle.argmin_set.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::enumerate_shift_domain;
    use crate::test_fixtures::{i2, i3};

    #[test]
    fn fixtures_verify() {
        for inst in [i2(), i3()] {
            let dist = ShiftDistribution::uniform(&enumerate_shift_domain(&inst)).unwrap();
            let report = verify_instance(&inst, &dist).unwrap();
            assert!(report.passed(), "{report}");
        }
    }
}
