//! How one upward shift interacts with the lattice of stable matchings.
//!
//! For a shift `B` of instance `A`, the matchings destabilized by `B` form a
//! sublattice entered by at most one rotation (`rho_in`) and left by at most
//! one rotation (`rho_out`). A stable matching generated by the closed set
//! `S` is destabilized exactly when `rho_in ∈ S` and `rho_out ∉ S`, with the
//! virtual `S`/`T` endpoints standing in for absent rotations.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{apply_shift, PreferenceInstance, Shift, Side};
use crate::matching::{boy_optimal, is_stable, Matching};
use crate::order::DownSets;
use crate::rotations::{ClosedSet, PosetNode, RotationId, RotationPoset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShiftStatus {
    /// No stable matching of `A` is destabilized.
    #[serde(rename = "UNCHANGED")]
    Unchanged,
    /// Every stable matching of `A` is destabilized.
    #[serde(rename = "DISJOINT")]
    Disjoint,
    /// The window conditions rule out every stable matching.
    #[serde(rename = "EMPTY_MAB")]
    EmptyMab,
    /// A proper, non-empty subset is destabilized.
    #[serde(rename = "PROPER")]
    Proper,
}

impl fmt::Display for ShiftStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShiftStatus::Unchanged => "UNCHANGED",
            ShiftStatus::Disjoint => "DISJOINT",
            ShiftStatus::EmptyMab => "EMPTY_MAB",
            ShiftStatus::Proper => "PROPER",
        })
    }
}

/// For a girl-list shift moving `b` above the window `b_1..b_k` of `g`:
/// `rho1` moves `g` into the window, `rho2` moves `b` below `g`, `rho3`
/// moves `g` out of the window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ComponentRotations {
    pub rho1: Option<RotationId>,
    pub rho2: Option<RotationId>,
    pub rho3: Option<RotationId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftAnalysis {
    pub shift: Shift,
    pub status: ShiftStatus,
    /// Entry rotation (`S` when none); set only for `PROPER`.
    pub rho_in: Option<PosetNode>,
    /// Exit rotation (`T` when none); set only for `PROPER`.
    pub rho_out: Option<PosetNode>,
}

impl ShiftAnalysis {
    fn without_edge(shift: Shift, status: ShiftStatus) -> ShiftAnalysis {
        ShiftAnalysis { shift, status, rho_in: None, rho_out: None }
    }

    /// Does the matching generated by `set` lose stability under this shift?
    pub fn destabilizes(&self, set: &ClosedSet) -> bool {
        let contains = |node: Option<PosetNode>| match node {
            Some(PosetNode::Source) => true,
            Some(PosetNode::Sink) | None => false,
            Some(PosetNode::Rotation(id)) => set.contains(id),
        };
        match self.status {
            ShiftStatus::Unchanged | ShiftStatus::EmptyMab => false,
            ShiftStatus::Disjoint => true,
            ShiftStatus::Proper => contains(self.rho_in) && !contains(self.rho_out),
        }
    }
}

struct GirlSide {
    components: ComponentRotations,
    window_partner: bool,
    partner_below: bool,
}

/// Girl-list analysis core: `g` moves `b` up over `k` boys.
fn girl_side(poset: &RotationPoset, inst: &PreferenceInstance, shift: &Shift) -> Result<GirlSide> {
    debug_assert_eq!(shift.side, Side::GirlList);
    let pos = shift.mover_position(inst)?;
    let (g, b) = (shift.agent, shift.mover);
    let window = pos - shift.window..pos;

    let path = poset.girl_path(g);
    let in_window: Vec<usize> = path
        .iter()
        .enumerate()
        .filter(|(_, s)| window.contains(&inst.girl_rank(g, s.partner).expect("acceptable")))
        .map(|(i, _)| i)
        .collect();
    let (rho1, rho3) = match (in_window.first(), in_window.last()) {
        (Some(&first), Some(&last)) => (path[first].via, path.get(last + 1).and_then(|s| s.via)),
        _ => (None, None),
    };

    let bpath = poset.boy_path(b);
    let g_rank = inst.boy_rank(b, g).expect("mutually acceptable");
    let (rho2, partner_below) = match bpath.first() {
        // single in every stable matching: always below g
        None => (None, true),
        Some(first) if inst.boy_rank(b, first.partner).expect("acceptable") > g_rank => (None, true),
        Some(_) => {
            let r = poset.rotation_moving_boy_below(b, g);
            (r, r.is_some())
        }
    };

    Ok(GirlSide {
        components: ComponentRotations { rho1, rho2, rho3 },
        window_partner: !in_window.is_empty(),
        partner_below,
    })
}

/// `rho1`, `rho2`, `rho3` for a girl-list shift.
pub fn find_component_rotations(
    poset: &RotationPoset,
    inst: &PreferenceInstance,
    shift: &Shift,
) -> Result<ComponentRotations> {
    if shift.side != Side::GirlList {
        return Err(Error::InvalidShift(format!(
            "{shift}: component rotations are defined for girl lists; use ShiftAnalyzer for boy lists"
        )));
    }
    Ok(girl_side(poset, inst, shift)?.components)
}

fn girl_side_analysis(
    poset: &RotationPoset,
    inst: &PreferenceInstance,
    shift: &Shift,
) -> Result<(ShiftStatus, Option<PosetNode>, Option<PosetNode>)> {
    let side = girl_side(poset, inst, shift)?;
    if !side.window_partner || !side.partner_below {
        return Ok((ShiftStatus::EmptyMab, None, None));
    }
    let ComponentRotations { rho1, rho2, rho3 } = side.components;
    let rho_in = rho2.or(rho1);
    if let (Some(i), Some(o)) = (rho_in, rho3) {
        if poset.precedes_or_eq(o, i) {
            return Ok((ShiftStatus::EmptyMab, None, None));
        }
    }
    if rho_in.is_none() && rho3.is_none() {
        let shifted = apply_shift(inst, shift)?;
        let status = if is_stable(&shifted, poset.boy_optimal()) {
            ShiftStatus::Unchanged
        } else {
            ShiftStatus::Disjoint
        };
        return Ok((status, None, None));
    }
    let rho_in = rho_in.map_or(PosetNode::Source, PosetNode::Rotation);
    let rho_out = rho3.map_or(PosetNode::Sink, PosetNode::Rotation);
    Ok((ShiftStatus::Proper, Some(rho_in), Some(rho_out)))
}

/// Analyzes shifts of one instance. Holds the role-reversed instance and
/// poset so boy-list shifts run through the girl-list path.
pub struct ShiftAnalyzer<'a> {
    inst: &'a PreferenceInstance,
    poset: &'a RotationPoset,
    reversed_inst: PreferenceInstance,
    reversed_poset: RotationPoset,
    to_original: Vec<RotationId>,
    unmatched: Option<(Vec<usize>, Vec<usize>)>,
}

impl<'a> ShiftAnalyzer<'a> {
    pub fn new(inst: &'a PreferenceInstance, poset: &'a RotationPoset) -> Self {
        let reversed_inst = inst.reversed();
        let (reversed_poset, to_original) = poset.reversed(&reversed_inst);
        // with complete square lists every stable matching is perfect in A and B
        let unmatched = (!inst.is_complete()).then(|| {
            let m0 = poset.boy_optimal();
            (m0.unmatched_boys(), m0.unmatched_girls())
        });
        ShiftAnalyzer { inst, poset, reversed_inst, reversed_poset, to_original, unmatched }
    }

    pub fn instance(&self) -> &PreferenceInstance {
        self.inst
    }

    pub fn poset(&self) -> &RotationPoset {
        self.poset
    }

    fn map_back(&self, node: PosetNode) -> PosetNode {
        match node {
            PosetNode::Source => PosetNode::Sink,
            PosetNode::Sink => PosetNode::Source,
            PosetNode::Rotation(id) => PosetNode::Rotation(self.to_original[id]),
        }
    }

    /// Component rotations; for boy-list shifts these are the reversed
    /// instance's components mapped back to this poset's ids.
    pub fn component_rotations(&self, shift: &Shift) -> Result<ComponentRotations> {
        match shift.side {
            Side::GirlList => find_component_rotations(self.poset, self.inst, shift),
            Side::BoyList => {
                let c = find_component_rotations(&self.reversed_poset, &self.reversed_inst, &shift.reversed())?;
                let map = |r: Option<RotationId>| r.map(|id| self.to_original[id]);
                Ok(ComponentRotations { rho1: map(c.rho1), rho2: map(c.rho2), rho3: map(c.rho3) })
            }
        }
    }

    pub fn analyze(&self, shift: &Shift) -> Result<ShiftAnalysis> {
        shift.validate(self.inst)?;
        if let Some((boys, girls)) = &self.unmatched {
            let m = boy_optimal(&apply_shift(self.inst, shift)?);
            if &m.unmatched_boys() != boys || &m.unmatched_girls() != girls {
                return Ok(ShiftAnalysis::without_edge(*shift, ShiftStatus::Disjoint));
            }
        }
        let (status, rho_in, rho_out) = match shift.side {
            Side::GirlList => girl_side_analysis(self.poset, self.inst, shift)?,
            Side::BoyList => {
                let (status, rin, rout) =
                    girl_side_analysis(&self.reversed_poset, &self.reversed_inst, &shift.reversed())?;
                (status, rout.map(|n| self.map_back(n)), rin.map(|n| self.map_back(n)))
            }
        };
        Ok(ShiftAnalysis { shift: *shift, status, rho_in, rho_out })
    }

    pub fn analyze_all<'s>(&self, shifts: impl IntoIterator<Item = &'s Shift>) -> Result<Vec<ShiftAnalysis>> {
        shifts.into_iter().map(|s| self.analyze(s)).collect()
    }
}

/// One-off analysis; prefer [`ShiftAnalyzer`] when analyzing many shifts.
pub fn analyze_shift(poset: &RotationPoset, inst: &PreferenceInstance, shift: &Shift) -> Result<ShiftAnalysis> {
    ShiftAnalyzer::new(inst, poset).analyze(shift)
}

/// Window test on partners: for a girl-list shift, `g` must hold a partner
/// from the window and `b` a partner below `g` (or none). Boy-list shifts
/// are symmetric.
pub fn characterize_mab(inst: &PreferenceInstance, shift: &Shift, m: &Matching) -> bool {
    let Ok(pos) = shift.mover_position(inst) else {
        return false;
    };
    let window = pos - shift.window..pos;
    match shift.side {
        Side::GirlList => {
            let (g, b) = (shift.agent, shift.mover);
            let in_window = m
                .girl_partner(g)
                .and_then(|x| inst.girl_rank(g, x))
                .is_some_and(|r| window.contains(&r));
            in_window && below(inst.boy_rank(b, g), m.boy_partner(b).and_then(|x| inst.boy_rank(b, x)))
        }
        Side::BoyList => {
            let (b, g) = (shift.agent, shift.mover);
            let in_window = m
                .boy_partner(b)
                .and_then(|x| inst.boy_rank(b, x))
                .is_some_and(|r| window.contains(&r));
            in_window && below(inst.girl_rank(g, b), m.girl_partner(g).and_then(|x| inst.girl_rank(g, x)))
        }
    }
}

/// Is the partner at `partner_rank` (`None` = single) strictly below `rank`?
fn below(rank: Option<usize>, partner_rank: Option<usize>) -> bool {
    match (rank, partner_rank) {
        (Some(r), Some(p)) => p > r,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

/// Rotation poset of the destabilized sublattice for a `PROPER` shift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sublattice {
    /// Rotations neither below `rho_in` nor above `rho_out`, in id order.
    pub rotations: Vec<RotationId>,
    /// Hasse edges of the induced order.
    pub hasse: Vec<(RotationId, RotationId)>,
    /// The down-set of `rho_in`; every destabilized matching contains it.
    pub base: ClosedSet,
    pub m_boy: Matching,
    pub m_girl: Matching,
}

impl Sublattice {
    /// Closed sets of the whole poset generating the destabilized matchings.
    pub fn closed_sets(&self, poset: &RotationPoset) -> Vec<ClosedSet> {
        let local: Vec<Vec<usize>> = self
            .rotations
            .iter()
            .map(|&id| {
                poset
                    .hasse_preds(id)
                    .iter()
                    .filter_map(|p| self.rotations.iter().position(|r| r == p))
                    .collect()
            })
            .collect();
        DownSets::new(&local)
            .map(|set| self.base.iter().chain(set.into_iter().map(|i| self.rotations[i])).collect())
            .collect()
    }

    pub fn matchings(&self, poset: &RotationPoset) -> Result<Vec<Matching>> {
        self.closed_sets(poset).iter().map(|s| poset.closed_set_to_matching(s)).collect()
    }
}

/// Remove the down-set of `rho_in` and the up-set of `rho_out`.
pub fn sublattice_poset(poset: &RotationPoset, analysis: &ShiftAnalysis) -> Result<Sublattice> {
    if analysis.status != ShiftStatus::Proper {
        return Err(Error::NotProper(analysis.status));
    }
    let base = match analysis.rho_in {
        Some(PosetNode::Rotation(id)) => poset.down_set(id),
        _ => ClosedSet::empty(),
    };
    let above: BTreeSet<RotationId> = match analysis.rho_out {
        Some(PosetNode::Rotation(id)) => poset.up_set(id),
        _ => BTreeSet::new(),
    };
    let rotations: Vec<RotationId> =
        (0..poset.len()).filter(|id| !base.contains(*id) && !above.contains(id)).collect();
    let hasse = rotations
        .iter()
        .flat_map(|&v| {
            poset.hasse_preds(v).iter().filter(|u| rotations.contains(u)).map(move |&u| (u, v))
        })
        .collect();
    let m_boy = poset.closed_set_to_matching(&base)?;
    let top: ClosedSet = (0..poset.len()).filter(|id| !above.contains(id)).collect();
    let m_girl = poset.closed_set_to_matching(&top)?;
    Ok(Sublattice { rotations, hasse, base, m_boy, m_girl })
}
