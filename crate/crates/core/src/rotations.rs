//! Rotations and the rotation poset.
//!
//! A rotation exposed in a stable matching is a cycle of pairs
//! `(b_0,g_0) .. (b_{r-1},g_{r-1})` where `g_{i+1}` is the first girl below
//! `g_i` on `b_i`'s list who would rather have `b_i` than her partner.
//! Eliminating it moves every `b_i` to `g_{i+1}`. The closed sets of the
//! precedence order on rotations are in bijection with the stable matchings.

use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::PreferenceInstance;
use crate::matching::{boy_optimal, is_stable, Matching};
use crate::order::{ancestor_sets, transitive_reduction, DownSets};

pub type RotationId = usize;

/// A vertex of the rotation poset extended with virtual bottom `S` and top `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosetNode {
    Source,
    Rotation(RotationId),
    Sink,
}

impl fmt::Display for PosetNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosetNode::Source => f.write_str("S"),
            PosetNode::Rotation(id) => write!(f, "R{id}"),
            PosetNode::Sink => f.write_str("T"),
        }
    }
}

/// A rotation in canonical form: the pair with the smallest boy comes first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rotation {
    pairs: Vec<(usize, usize)>,
}

impl Rotation {
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Result<Rotation> {
        if pairs.len() < 2 {
            return Err(Error::InvalidPoset("a rotation needs at least two pairs".into()));
        }
        let boys: BTreeSet<usize> = pairs.iter().map(|p| p.0).collect();
        let girls: BTreeSet<usize> = pairs.iter().map(|p| p.1).collect();
        if boys.len() != pairs.len() || girls.len() != pairs.len() {
            return Err(Error::InvalidPoset("rotation repeats an agent".into()));
        }
        let start = (0..pairs.len()).min_by_key(|&i| pairs[i].0).unwrap_or(0);
        pairs.rotate_left(start);
        Ok(Rotation { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(b_i, g_i, g_{i+1})`: the boy, the girl he leaves, the girl he gets.
    pub fn boy_moves(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let r = self.pairs.len();
        (0..r).map(move |i| (self.pairs[i].0, self.pairs[i].1, self.pairs[(i + 1) % r].1))
    }

    /// `(g_i, b_i, b_{i-1})`: the girl, the boy she leaves, the boy she gets.
    pub fn girl_moves(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let r = self.pairs.len();
        (0..r).map(move |i| (self.pairs[i].1, self.pairs[i].0, self.pairs[(i + r - 1) % r].0))
    }

    /// The same exchange seen from the role-reversed instance, where it is
    /// eliminated in the opposite direction.
    pub fn reversed(&self) -> Rotation {
        let r = self.pairs.len();
        let pairs = (0..r).map(|i| (self.pairs[(i + 1) % r].1, self.pairs[i].0)).collect();
        Rotation::new(pairs).expect("reversal keeps agents distinct")
    }

    fn apply(&self, m: &mut Matching) {
        for (b, _, to) in self.boy_moves() {
            m.assign(b, to);
        }
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.pairs.iter().map(|(b, g)| format!("(b{},g{})", b + 1, g + 1)).collect();
        f.write_str(&parts.join(" "))
    }
}

/// First girl below `b`'s partner who prefers `b` to her own partner,
/// together with that partner. `None` when the girl found is single (then no
/// stable matching moves `b` past her) or no such girl exists.
fn successor(inst: &PreferenceInstance, m: &Matching, b: usize) -> Option<(usize, usize)> {
    let partner = m.boy_partner(b)?;
    let rank = inst.boy_rank(b, partner)?;
    for &g in &inst.boy_prefs(b)[rank + 1..] {
        match m.girl_partner(g) {
            None => return None,
            Some(x) if inst.girl_prefers(g, b, Some(x)) => return Some((g, x)),
            Some(_) => {}
        }
    }
    None
}

/// All rotations exposed in a stable matching, sorted by canonical form.
pub fn exposed_rotations(inst: &PreferenceInstance, m: &Matching) -> Vec<Rotation> {
    let n = inst.n_boys();
    let next: Vec<Option<usize>> = (0..n).map(|b| successor(inst, m, b).map(|(_, x)| x)).collect();
    // 0 = unvisited, 1 = on the current walk, 2 = finished
    let mut state = vec![0u8; n];
    let mut found = Vec::new();
    for start in 0..n {
        let mut walk = Vec::new();
        let mut cur = Some(start);
        while let Some(b) = cur {
            if state[b] != 0 {
                if state[b] == 1 {
                    let from = walk.iter().position(|&x| x == b).expect("on current walk");
                    let pairs = walk[from..]
                        .iter()
                        .map(|&x| (x, m.boy_partner(x).expect("boys on a cycle are matched")))
                        .collect();
                    found.push(Rotation::new(pairs).expect("cycle of distinct pairs"));
                }
                break;
            }
            state[b] = 1;
            walk.push(b);
            cur = next[b];
        }
        for b in walk {
            state[b] = 2;
        }
    }
    found.sort();
    found
}

/// `M/ρ`, after checking that `ρ` is exposed in `M`.
pub fn eliminate(inst: &PreferenceInstance, m: &Matching, rotation: &Rotation) -> Result<Matching> {
    for (b, from, to) in rotation.boy_moves() {
        if m.boy_partner(b) != Some(from) || successor(inst, m, b).map(|(g, _)| g) != Some(to) {
            return Err(Error::NotExposed);
        }
    }
    let mut out = m.clone();
    rotation.apply(&mut out);
    Ok(out)
}

/// A set of rotation ids; closed when it contains every predecessor of its
/// members.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClosedSet {
    members: BTreeSet<RotationId>,
}

impl ClosedSet {
    pub fn empty() -> ClosedSet {
        ClosedSet::default()
    }

    pub fn members(&self) -> &BTreeSet<RotationId> {
        &self.members
    }

    pub fn contains(&self, id: RotationId) -> bool {
        self.members.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = RotationId> + '_ {
        self.members.iter().copied()
    }

    pub fn union(&self, other: &ClosedSet) -> ClosedSet {
        self.members.union(&other.members).copied().collect()
    }

    pub fn intersection(&self, other: &ClosedSet) -> ClosedSet {
        self.members.intersection(&other.members).copied().collect()
    }
}

impl FromIterator<RotationId> for ClosedSet {
    fn from_iter<I: IntoIterator<Item = RotationId>>(iter: I) -> Self {
        ClosedSet { members: iter.into_iter().collect() }
    }
}

/// One entry of an agent's partner history from `M0` to `Mz`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathStep {
    pub partner: usize,
    /// Rotation that moves the agent to `partner`; `None` for the `M0` partner.
    pub via: Option<RotationId>,
}

/// Per-agent movement data derived from a linear extension of rotations.
struct Movement {
    boy_paths: Vec<Vec<PathStep>>,
    girl_paths: Vec<Vec<PathStep>>,
    boy_below: Vec<Option<RotationId>>,
    girl_above: Vec<Option<RotationId>>,
}

impl Movement {
    fn new(inst: &PreferenceInstance, m0: &Matching, rotations: &[Rotation]) -> Movement {
        let (nb, ng) = (inst.n_boys(), inst.n_girls());
        let mut boy_paths: Vec<Vec<PathStep>> = (0..nb)
            .map(|b| m0.boy_partner(b).map(|g| PathStep { partner: g, via: None }).into_iter().collect())
            .collect();
        let mut girl_paths: Vec<Vec<PathStep>> = (0..ng)
            .map(|g| m0.girl_partner(g).map(|b| PathStep { partner: b, via: None }).into_iter().collect())
            .collect();
        for (id, rot) in rotations.iter().enumerate() {
            for (b, from, to) in rot.boy_moves() {
                debug_assert_eq!(boy_paths[b].last().map(|s| s.partner), Some(from));
                boy_paths[b].push(PathStep { partner: to, via: Some(id) });
            }
            for (g, from, to) in rot.girl_moves() {
                debug_assert_eq!(girl_paths[g].last().map(|s| s.partner), Some(from));
                girl_paths[g].push(PathStep { partner: to, via: Some(id) });
            }
        }

        let mut boy_below = vec![None; nb * ng];
        for (b, path) in boy_paths.iter().enumerate() {
            for w in path.windows(2) {
                let lo = inst.boy_rank(b, w[0].partner).expect("acceptable");
                let hi = inst.boy_rank(b, w[1].partner).expect("acceptable");
                for &g in &inst.boy_prefs(b)[lo..hi] {
                    boy_below[b * ng + g] = w[1].via;
                }
            }
        }
        let mut girl_above = vec![None; ng * nb];
        for (g, path) in girl_paths.iter().enumerate() {
            for w in path.windows(2) {
                let old = inst.girl_rank(g, w[0].partner).expect("acceptable");
                let new = inst.girl_rank(g, w[1].partner).expect("acceptable");
                for &b in &inst.girl_prefs(g)[new + 1..=old] {
                    girl_above[g * nb + b] = w[1].via;
                }
            }
        }
        Movement { boy_paths, girl_paths, boy_below, girl_above }
    }
}

/// The rotation poset of an instance, with its Hasse diagram, a reachability
/// index, and per-agent movement tables.
///
/// Rotation ids follow a linear extension of the order, so eliminating
/// rotations by increasing id is always valid.
#[derive(Clone, Debug)]
pub struct RotationPoset {
    n_boys: usize,
    n_girls: usize,
    boy_optimal: Matching,
    rotations: Vec<Rotation>,
    index: HashMap<Rotation, RotationId>,
    preds: Vec<Vec<RotationId>>,
    succs: Vec<Vec<RotationId>>,
    ancestors: Vec<FixedBitSet>,
    descendants: Vec<FixedBitSet>,
    boy_paths: Vec<Vec<PathStep>>,
    girl_paths: Vec<Vec<PathStep>>,
    boy_below: Vec<Option<RotationId>>,
    girl_above: Vec<Option<RotationId>>,
}

impl RotationPoset {
    /// Build from rotations listed in a linear extension and a generating
    /// relation `generators[v]` (all smaller than `v`).
    fn from_linear_extension(
        inst: &PreferenceInstance,
        boy_optimal: Matching,
        rotations: Vec<Rotation>,
        generators: Vec<Vec<RotationId>>,
    ) -> RotationPoset {
        let movement = Movement::new(inst, &boy_optimal, &rotations);
        let ancestors = ancestor_sets(&generators);
        let preds = transitive_reduction(&generators, &ancestors);
        let n = rotations.len();
        let mut succs = vec![Vec::new(); n];
        for (v, ps) in preds.iter().enumerate() {
            for &u in ps {
                succs[u].push(v);
            }
        }
        let mut descendants = vec![FixedBitSet::with_capacity(n); n];
        for u in (0..n).rev() {
            let mut set = FixedBitSet::with_capacity(n);
            for &v in &succs[u] {
                set.union_with(&descendants[v]);
                set.insert(v);
            }
            descendants[u] = set;
        }
        let index = rotations.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect();
        RotationPoset {
            n_boys: inst.n_boys(),
            n_girls: inst.n_girls(),
            boy_optimal,
            rotations,
            index,
            preds,
            succs,
            ancestors,
            descendants,
            boy_paths: movement.boy_paths,
            girl_paths: movement.girl_paths,
            boy_below: movement.boy_below,
            girl_above: movement.girl_above,
        }
    }

    /// Build from rotations in any order and strict precedence pairs
    /// `(a, b)` meaning `a ≺ b`, both indexing `rotations`. Returns the
    /// poset and the new id of every input rotation.
    pub fn from_relation(
        inst: &PreferenceInstance,
        boy_optimal: Matching,
        rotations: Vec<Rotation>,
        relation: &[(usize, usize)],
    ) -> Result<(RotationPoset, Vec<RotationId>)> {
        let n = rotations.len();
        let mut indegree = vec![0usize; n];
        let mut out = vec![Vec::new(); n];
        for &(a, b) in relation {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidPoset(format!("bad precedence pair ({a}, {b})")));
            }
            out[a].push(b);
            indegree[b] += 1;
        }
        let mut heap: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
        let mut new_id = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(v)) = heap.pop() {
            new_id[v] = order.len();
            order.push(v);
            for &w in &out[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    heap.push(Reverse(w));
                }
            }
        }
        if order.len() != n {
            return Err(Error::InvalidPoset("precedence relation has a cycle".into()));
        }
        let mut generators = vec![Vec::new(); n];
        for &(a, b) in relation {
            generators[new_id[b]].push(new_id[a]);
        }
        let sorted = order.iter().map(|&v| rotations[v].clone()).collect();
        Ok((Self::from_linear_extension(inst, boy_optimal, sorted, generators), new_id))
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.rotations
    }

    pub fn rotation(&self, id: RotationId) -> &Rotation {
        &self.rotations[id]
    }

    pub fn id_of(&self, rotation: &Rotation) -> Option<RotationId> {
        self.index.get(rotation).copied()
    }

    pub fn boy_optimal(&self) -> &Matching {
        &self.boy_optimal
    }

    pub fn girl_optimal(&self) -> Matching {
        let mut m = self.boy_optimal.clone();
        for r in &self.rotations {
            r.apply(&mut m);
        }
        m
    }

    /// Immediate (Hasse) predecessors among rotations.
    pub fn hasse_preds(&self, id: RotationId) -> &[RotationId] {
        &self.preds[id]
    }

    pub fn hasse_succs(&self, id: RotationId) -> &[RotationId] {
        &self.succs[id]
    }

    /// Hasse diagram including the virtual `S` and `T` endpoints.
    pub fn hasse_edges(&self) -> Vec<(PosetNode, PosetNode)> {
        if self.is_empty() {
            return vec![(PosetNode::Source, PosetNode::Sink)];
        }
        let mut edges = Vec::new();
        for id in 0..self.len() {
            if self.preds[id].is_empty() {
                edges.push((PosetNode::Source, PosetNode::Rotation(id)));
            }
        }
        for id in 0..self.len() {
            for &p in &self.preds[id] {
                edges.push((PosetNode::Rotation(p), PosetNode::Rotation(id)));
            }
        }
        for id in 0..self.len() {
            if self.succs[id].is_empty() {
                edges.push((PosetNode::Rotation(id), PosetNode::Sink));
            }
        }
        edges
    }

    /// Strict precedence `a ≺ b`.
    pub fn precedes(&self, a: RotationId, b: RotationId) -> bool {
        self.ancestors[b].contains(a)
    }

    pub fn precedes_or_eq(&self, a: RotationId, b: RotationId) -> bool {
        a == b || self.precedes(a, b)
    }

    /// `a ⪯ b` on the extended poset, with `S` below and `T` above everything.
    pub fn node_precedes_or_eq(&self, a: PosetNode, b: PosetNode) -> bool {
        match (a, b) {
            (PosetNode::Source, _) | (_, PosetNode::Sink) => true,
            (_, PosetNode::Source) | (PosetNode::Sink, _) => false,
            (PosetNode::Rotation(x), PosetNode::Rotation(y)) => self.precedes_or_eq(x, y),
        }
    }

    /// `{ρ : ρ ⪯ id}`.
    pub fn down_set(&self, id: RotationId) -> ClosedSet {
        self.ancestors[id].ones().chain(std::iter::once(id)).collect()
    }

    /// `{ρ : ρ ⪰ id}`.
    pub fn up_set(&self, id: RotationId) -> BTreeSet<RotationId> {
        self.descendants[id].ones().chain(std::iter::once(id)).collect()
    }

    pub fn check_closed(&self, set: &ClosedSet) -> Result<()> {
        for id in set.iter() {
            if id >= self.len() {
                return Err(Error::InvalidPoset(format!("unknown rotation R{id}")));
            }
            if let Some(&missing) = self.preds[id].iter().find(|p| !set.contains(**p)) {
                return Err(Error::NotClosed { member: id, missing });
            }
        }
        Ok(())
    }

    /// Eliminate the rotations of a closed set from `M0` in id order.
    pub fn closed_set_to_matching(&self, set: &ClosedSet) -> Result<Matching> {
        self.check_closed(set)?;
        let mut m = self.boy_optimal.clone();
        for id in set.iter() {
            self.rotations[id].apply(&mut m);
        }
        Ok(m)
    }

    /// The closed set generating a stable matching.
    pub fn matching_to_closed_set(&self, m: &Matching) -> Result<ClosedSet> {
        if m.n_boys() != self.n_boys || m.n_girls() != self.n_girls {
            return Err(Error::InvalidMatching("matching has the wrong dimensions".into()));
        }
        let mut set = ClosedSet::empty();
        for (id, rot) in self.rotations.iter().enumerate() {
            let b = rot.pairs()[0].0;
            let path = &self.boy_paths[b];
            let entered = path.iter().position(|s| s.via == Some(id)).expect("rotation on its boys' paths");
            let current = m
                .boy_partner(b)
                .and_then(|g| path.iter().position(|s| s.partner == g))
                .ok_or_else(|| Error::InvalidMatching(format!("b{} has no stable partner here", b + 1)))?;
            if current >= entered {
                set.members.insert(id);
            }
        }
        match self.closed_set_to_matching(&set) {
            Ok(back) if &back == m => Ok(set),
            _ => Err(Error::InvalidMatching("not a stable matching of this instance".into())),
        }
    }

    /// All closed sets, each exactly once, starting with the empty set.
    pub fn enumerate_closed_sets(&self) -> impl Iterator<Item = ClosedSet> + '_ {
        DownSets::new(&self.preds).map(ClosedSet::from_iter)
    }

    /// Partner history of a boy from `M0` to `Mz` (empty if always single).
    pub fn boy_path(&self, b: usize) -> &[PathStep] {
        &self.boy_paths[b]
    }

    pub fn girl_path(&self, g: usize) -> &[PathStep] {
        &self.girl_paths[g]
    }

    /// The rotation moving `b` from `g` or a girl above her to a girl
    /// strictly below `g`.
    pub fn rotation_moving_boy_below(&self, b: usize, g: usize) -> Option<RotationId> {
        self.boy_below[b * self.n_girls + g]
    }

    /// The rotation moving `g` from `b` or a boy below him to a boy strictly
    /// above `b`.
    pub fn rotation_moving_girl_above(&self, g: usize, b: usize) -> Option<RotationId> {
        self.girl_above[g * self.n_boys + b]
    }

    /// The dual poset of the role-reversed instance. Reversed id `j`
    /// corresponds to original id `len - 1 - j`; the returned vector maps
    /// reversed ids back to original ones.
    pub fn reversed(&self, reversed_inst: &PreferenceInstance) -> (RotationPoset, Vec<RotationId>) {
        let n = self.len();
        let to_original: Vec<RotationId> = (0..n).map(|j| n - 1 - j).collect();
        let rotations = to_original.iter().map(|&i| self.rotations[i].reversed()).collect();
        let generators = to_original
            .iter()
            .map(|&i| self.succs[i].iter().map(|&s| n - 1 - s).collect())
            .collect();
        let m0 = self.girl_optimal().transposed();
        (Self::from_linear_extension(reversed_inst, m0, rotations, generators), to_original)
    }

    /// Compare with another poset over the same rotations. `Err` describes
    /// the first difference.
    pub fn same_order_as(&self, other: &RotationPoset) -> std::result::Result<(), String> {
        if self.len() != other.len() {
            return Err(format!("{} rotations vs {}", self.len(), other.len()));
        }
        let map: Vec<RotationId> = self
            .rotations
            .iter()
            .map(|r| other.id_of(r).ok_or_else(|| format!("rotation {r} missing from the other poset")))
            .collect::<std::result::Result<_, _>>()?;
        for a in 0..self.len() {
            for b in 0..self.len() {
                if self.precedes(a, b) != other.precedes(map[a], map[b]) {
                    return Err(format!(
                        "precedence of {} and {} differs",
                        self.rotations[a], self.rotations[b]
                    ));
                }
            }
        }
        Ok(())
    }

    /// Text dump: one `R<k>: (b,g) ...` line per rotation, then the Hasse
    /// edges with `S`/`T` for the virtual endpoints.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, r) in self.rotations.iter().enumerate() {
            out.push_str(&format!("R{id}: {r}\n"));
        }
        for (a, b) in self.hasse_edges() {
            out.push_str(&format!("HASSE: {a} -> {b}\n"));
        }
        out
    }
}

/// Discover all rotations along one elimination path from `M0` (always
/// taking the exposed rotation with the smallest leading boy) and derive the
/// precedence order from how rotations move agents:
///
/// * the rotation moving `b` to `g` precedes the one moving `b` away from `g`;
/// * when `ρ` moves `b` past a girl `w` strictly between his old and new
///   partner, the rotation moving `w` above `b` precedes `ρ`.
pub fn build_rotation_poset(inst: &PreferenceInstance) -> RotationPoset {
    let m0 = boy_optimal(inst);
    debug_assert!(is_stable(inst, &m0));
    let mut current = m0.clone();
    let mut rotations = Vec::new();
    while let Some(r) = exposed_rotations(inst, &current).into_iter().next() {
        r.apply(&mut current);
        rotations.push(r);
    }

    let movement = Movement::new(inst, &m0, &rotations);
    let nb = inst.n_boys();
    let mut generators: Vec<Vec<RotationId>> = vec![Vec::new(); rotations.len()];
    for (id, rot) in rotations.iter().enumerate() {
        for (b, from, to) in rot.boy_moves() {
            let path = &movement.boy_paths[b];
            let k = path.iter().position(|s| s.via == Some(id)).expect("rotation on its boys' paths");
            if let Some(prev) = path[k - 1].via {
                generators[id].push(prev);
            }
            let lo = inst.boy_rank(b, from).expect("acceptable");
            let hi = inst.boy_rank(b, to).expect("acceptable");
            for &w in &inst.boy_prefs(b)[lo + 1..hi] {
                if let Some(p) = movement.girl_above[w * nb + b] {
                    if p != id {
                        debug_assert!(p < id, "predecessor discovered later on the path");
                        generators[id].push(p);
                    }
                }
            }
        }
        generators[id].sort_unstable();
        generators[id].dedup();
    }
    RotationPoset::from_linear_extension(inst, m0, rotations, generators)
}
