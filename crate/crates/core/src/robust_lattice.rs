//! The poset whose closed sets generate exactly the robust stable matchings.
//!
//! Built from the residual graph of a maximum flow. A residual edge `u -> v`
//! forces `u` into every optimal closed set containing `v`; strongly
//! connected components become the elements.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use fixedbitset::FixedBitSet;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::order::{ancestor_sets, transitive_reduction, DownSets};
use crate::robust_flow::{reachable, residual_graph, reversed_adjacency, ClosureNetwork, MaxFlow};
use crate::rotations::{ClosedSet, PosetNode, RotationId, RotationPoset};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustPoset {
    /// Free elements in a linear extension, each a sorted set of rotations.
    elements: Vec<Vec<RotationId>>,
    /// Covering relations among free elements, `preds[i]` all below `i`.
    preds: Vec<Vec<usize>>,
    ancestors: Vec<FixedBitSet>,
    /// Rotations present in every robust matching.
    fixed_bottom: Vec<RotationId>,
    /// Rotations present in none.
    fixed_top: Vec<RotationId>,
}

impl RobustPoset {
    pub fn elements(&self) -> &[Vec<RotationId>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn fixed_bottom(&self) -> &[RotationId] {
        &self.fixed_bottom
    }

    pub fn fixed_top(&self) -> &[RotationId] {
        &self.fixed_top
    }

    pub fn preds(&self, element: usize) -> &[usize] {
        &self.preds[element]
    }

    /// Covering pairs `(a, b)` with `a ≺ b`.
    pub fn dag_edges(&self) -> Vec<(usize, usize)> {
        self.preds.iter().enumerate().flat_map(|(b, ps)| ps.iter().map(move |&a| (a, b))).collect()
    }

    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.ancestors[b].contains(a)
    }

    /// Closed sets of free elements, starting with the empty one.
    pub fn closed_sets(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        DownSets::new(&self.preds)
    }

    /// Rotations generating the matching of a closed set of elements.
    pub fn rotation_set(&self, selected: &[usize]) -> Result<ClosedSet> {
        let chosen: BTreeSet<usize> = selected.iter().copied().collect();
        for &e in &chosen {
            if e >= self.len() {
                return Err(Error::InvalidPoset(format!("unknown element {e}")));
            }
            if let Some(missing) = self.ancestors[e].ones().find(|a| !chosen.contains(a)) {
                return Err(Error::NotClosed { member: e, missing });
            }
        }
        Ok(self
            .fixed_bottom
            .iter()
            .copied()
            .chain(chosen.iter().flat_map(|&e| self.elements[e].iter().copied()))
            .collect())
    }

    pub fn dump(&self) -> String {
        let ids = |v: &[RotationId]| v.iter().map(|r| format!(" R{r}")).collect::<String>();
        let mut out = format!("BOTTOM:{}\nTOP:{}\n", ids(&self.fixed_bottom), ids(&self.fixed_top));
        for (i, e) in self.elements.iter().enumerate() {
            out.push_str(&format!("E{i}:{}\n", ids(e)));
        }
        for (a, b) in self.dag_edges() {
            out.push_str(&format!("DAG: E{a} -> E{b}\n"));
        }
        out
    }
}

pub fn build_robust_poset(network: &ClosureNetwork, flow: &MaxFlow) -> Result<RobustPoset> {
    let adj = residual_graph(network, flow);
    let n = network.n_rotations();
    let s = network.node_index(PosetNode::Source);
    let t = network.node_index(PosetNode::Sink);
    let bottom = reachable(&reversed_adjacency(&adj), s);
    let top = reachable(&adj, t);
    if bottom[t] {
        return Err(Error::FlowNotMaximum);
    }

    let free: Vec<usize> = (0..n).filter(|&u| !bottom[u] && !top[u]).collect();
    let mut graph = DiGraph::<usize, ()>::with_capacity(free.len(), 0);
    let mut node_of = vec![None; n];
    for &u in &free {
        node_of[u] = Some(graph.add_node(u));
    }
    for &u in &free {
        for &v in &adj[u] {
            if let (Some(a), Some(b)) = (node_of[u], node_of.get(v).copied().flatten()) {
                graph.add_edge(a, b, ());
            }
        }
    }

    let mut components: Vec<Vec<RotationId>> = tarjan_scc(&graph)
        .into_iter()
        .map(|c| {
            let mut ids: Vec<RotationId> = c.into_iter().map(|x| graph[x]).collect();
            ids.sort_unstable();
            ids
        })
        .collect();
    components.sort();
    let mut comp_of = vec![usize::MAX; n];
    for (c, ids) in components.iter().enumerate() {
        for &id in ids {
            comp_of[id] = c;
        }
    }

    let k = components.len();
    let mut out_edges: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    let mut indegree = vec![0usize; k];
    for &u in &free {
        for &v in &adj[u] {
            if v < n && comp_of[v] != usize::MAX && comp_of[u] != comp_of[v] && out_edges[comp_of[u]].insert(comp_of[v])
            {
                indegree[comp_of[v]] += 1;
            }
        }
    }
    let mut heap: BinaryHeap<Reverse<usize>> = (0..k).filter(|&c| indegree[c] == 0).map(Reverse).collect();
    let mut new_id = vec![usize::MAX; k];
    let mut order = Vec::with_capacity(k);
    while let Some(Reverse(c)) = heap.pop() {
        new_id[c] = order.len();
        order.push(c);
        for &d in &out_edges[c] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                heap.push(Reverse(d));
            }
        }
    }
    debug_assert_eq!(order.len(), k, "condensation must be acyclic");

    let mut generators = vec![Vec::new(); k];
    for (c, outs) in out_edges.iter().enumerate() {
        for &d in outs {
            generators[new_id[d]].push(new_id[c]);
        }
    }
    let ancestors = ancestor_sets(&generators);
    let preds = transitive_reduction(&generators, &ancestors);
    let elements = order.into_iter().map(|c| std::mem::take(&mut components[c])).collect();

    Ok(RobustPoset {
        elements,
        preds,
        ancestors,
        fixed_bottom: (0..n).filter(|&u| bottom[u]).collect(),
        fixed_top: (0..n).filter(|&u| top[u]).collect(),
    })
}

/// The robust matching generated by a closed set of elements.
pub fn robust_members(poset: &RotationPoset, robust: &RobustPoset, selected: &[usize]) -> Result<Matching> {
    poset.closed_set_to_matching(&robust.rotation_set(selected)?)
}

/// Every robust stable matching exactly once.
pub fn enumerate_robust<'a>(
    poset: &'a RotationPoset,
    robust: &'a RobustPoset,
) -> impl Iterator<Item = Matching> + 'a {
    robust.closed_sets().map(move |set| robust_members(poset, robust, &set).expect("closed by construction"))
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;
    use num_traits::Zero;

    use super::*;
    use crate::matching::{boy_optimal, girl_optimal};
    use crate::robust_flow::{solve, ShiftEdge};
    use crate::rotations::build_rotation_poset;
    use crate::test_fixtures::{i2, i3};

    fn network(poset: &RotationPoset, edges: Vec<(PosetNode, PosetNode)>) -> ClosureNetwork {
        let edges = edges.into_iter().map(|(from, to)| ShiftEdge { from, to, capacity: BigRational::from_integer(1.into()) });
        ClosureNetwork::new(poset, edges, BigRational::zero()).unwrap()
    }

    #[test]
    fn no_shifts_keeps_every_matching() {
        let inst = i3();
        let poset = build_rotation_poset(&inst);
        let net = network(&poset, vec![]);
        let robust = build_robust_poset(&net, &solve(&net)).unwrap();
        assert_eq!(robust.elements(), &[vec![0], vec![1]]);
        assert_eq!(robust.dag_edges(), vec![(0, 1)]);
        assert!(robust.fixed_bottom().is_empty() && robust.fixed_top().is_empty());
        assert_eq!(robust_members(&poset, &robust, &[]).unwrap(), boy_optimal(&inst));
        assert_eq!(robust_members(&poset, &robust, &[0, 1]).unwrap(), girl_optimal(&inst));
        assert!(matches!(robust_members(&poset, &robust, &[1]), Err(Error::NotClosed { member: 1, missing: 0 })));
        assert_eq!(enumerate_robust(&poset, &robust).count(), 3);
    }

    #[test]
    fn i3_cycle_merges_both_rotations() {
        let inst = i3();
        let poset = build_rotation_poset(&inst);
        let net = network(&poset, vec![(PosetNode::Rotation(1), PosetNode::Rotation(0))]);
        let flow = solve(&net);
        assert!(flow.value().is_zero());
        let robust = build_robust_poset(&net, &flow).unwrap();
        assert_eq!(robust.elements(), &[vec![0, 1]]);
        assert_eq!(robust_members(&poset, &robust, &[0]).unwrap(), girl_optimal(&inst));
        let all: Vec<Matching> = enumerate_robust(&poset, &robust).collect();
        assert_eq!(all, vec![boy_optimal(&inst), girl_optimal(&inst)]);
    }

    #[test]
    fn sink_edge_pins_rotation_to_top() {
        let inst = i2();
        let poset = build_rotation_poset(&inst);
        let net = network(&poset, vec![(PosetNode::Sink, PosetNode::Rotation(0))]);
        let robust = build_robust_poset(&net, &solve(&net)).unwrap();
        assert!(robust.is_empty());
        assert_eq!(robust.fixed_top(), &[0]);
        assert_eq!(enumerate_robust(&poset, &robust).collect::<Vec<_>>(), vec![boy_optimal(&inst)]);
    }

    #[test]
    fn no_shifts_on_i2() {
        let inst = i2();
        let poset = build_rotation_poset(&inst);
        let net = network(&poset, vec![]);
        let robust = build_robust_poset(&net, &solve(&net)).unwrap();
        let all: Vec<Matching> = enumerate_robust(&poset, &robust).collect();
        assert_eq!(all, vec![boy_optimal(&inst), girl_optimal(&inst)]);
    }
}
