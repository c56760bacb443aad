//! Closure network over the rotation poset and its max-flow solution.
//!
//! Node numbering: rotation `i` is node `i`, `S` is node `n`, `T` is node
//! `n + 1`. Flow is pushed from `T` to `S`; a closed set is read off the
//! residual graph as the nodes that can still reach `S`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::instance::{format_ratio, PreferenceInstance, Shift, ShiftDistribution};
use crate::matching::Matching;
use crate::rotations::{build_rotation_poset, ClosedSet, PosetNode, RotationPoset};
use crate::shift_analysis::{ShiftAnalysis, ShiftAnalyzer, ShiftStatus};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftEdge {
    pub from: PosetNode,
    pub to: PosetNode,
    pub capacity: BigRational,
}

#[derive(Clone, Debug)]
pub struct ClosureNetwork {
    n_rotations: usize,
    hasse_edges: Vec<(PosetNode, PosetNode)>,
    shift_edges: Vec<ShiftEdge>,
    constant_loss: BigRational,
}

impl ClosureNetwork {
    /// Assemble a network directly; parallel shift edges are merged and
    /// zero-capacity ones dropped.
    pub fn new(
        poset: &RotationPoset,
        shift_edges: impl IntoIterator<Item = ShiftEdge>,
        constant_loss: BigRational,
    ) -> Result<ClosureNetwork> {
        let n = poset.len();
        let mut merged: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        for e in shift_edges {
            for node in [e.from, e.to] {
                if let PosetNode::Rotation(id) = node {
                    if id >= n {
                        return Err(Error::Mismatch(format!("edge endpoint R{id} is not a rotation")));
                    }
                }
            }
            if e.capacity.is_negative() {
                return Err(Error::Mismatch(format!("negative capacity on {} -> {}", e.from, e.to)));
            }
            if e.capacity.is_zero() {
                continue;
            }
            *merged.entry((node_index(n, e.from), node_index(n, e.to))).or_insert_with(BigRational::zero) +=
                e.capacity;
        }
        let shift_edges = merged
            .into_iter()
            .map(|((u, v), capacity)| ShiftEdge { from: index_node(n, u), to: index_node(n, v), capacity })
            .collect();
        Ok(ClosureNetwork { n_rotations: n, hasse_edges: poset.hasse_edges(), shift_edges, constant_loss })
    }

    pub fn n_rotations(&self) -> usize {
        self.n_rotations
    }

    pub fn n_nodes(&self) -> usize {
        self.n_rotations + 2
    }

    pub fn hasse_edges(&self) -> &[(PosetNode, PosetNode)] {
        &self.hasse_edges
    }

    /// Merged shift edges sorted by endpoints.
    pub fn shift_edges(&self) -> &[ShiftEdge] {
        &self.shift_edges
    }

    /// Total probability of shifts that destabilize every stable matching.
    pub fn constant_loss(&self) -> &BigRational {
        &self.constant_loss
    }

    pub fn node_index(&self, node: PosetNode) -> usize {
        node_index(self.n_rotations, node)
    }

    pub fn index_node(&self, index: usize) -> PosetNode {
        index_node(self.n_rotations, index)
    }

    fn in_set(set: &ClosedSet, node: PosetNode) -> bool {
        match node {
            PosetNode::Source => true,
            PosetNode::Sink => false,
            PosetNode::Rotation(id) => set.contains(id),
        }
    }

    /// Mass of shift edges separated by `set` (head inside, tail outside).
    pub fn cut_value(&self, set: &ClosedSet) -> BigRational {
        self.shift_edges
            .iter()
            .filter(|e| Self::in_set(set, e.to) && !Self::in_set(set, e.from))
            .map(|e| e.capacity.clone())
            .sum()
    }

    /// Probability that the matching generated by `set` is destabilized.
    pub fn objective(&self, set: &ClosedSet) -> BigRational {
        self.cut_value(set) + &self.constant_loss
    }

    /// Node and edge listing.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "NODES S T{}", (0..self.n_rotations).map(|i| format!(" R{i}")).collect::<String>());
        for (u, v) in &self.hasse_edges {
            let _ = writeln!(out, "HASSE {u} -> {v} inf");
        }
        for e in &self.shift_edges {
            let _ = writeln!(out, "SHIFT {} -> {} {}", e.from, e.to, format_ratio(&e.capacity));
        }
        let _ = writeln!(out, "CONSTANT {}", format_ratio(&self.constant_loss));
        out
    }

    /// The 0/1 program in a plain LP-like text form.
    pub fn ip_text(&self) -> String {
        let var = |node: &PosetNode| match node {
            PosetNode::Source => "y_S".to_string(),
            PosetNode::Sink => "y_T".to_string(),
            PosetNode::Rotation(id) => format!("y_R{id}"),
        };
        let mut out = String::from("minimize\n  obj:");
        if self.shift_edges.is_empty() {
            out.push_str(" 0");
        }
        for (i, e) in self.shift_edges.iter().enumerate() {
            let _ = write!(out, " + {} x_{i}", format_ratio(&e.capacity));
        }
        out.push_str("\nsubject to\n  y_T = 1\n  y_S = 0\n");
        for (u, v) in &self.hasse_edges {
            let _ = writeln!(out, "  {} - {} <= 0", var(u), var(v));
        }
        for (i, e) in self.shift_edges.iter().enumerate() {
            let _ = writeln!(out, "  x_{i} - {} + {} >= 0", var(&e.from), var(&e.to));
        }
        out.push_str("bounds\n");
        for i in 0..self.shift_edges.len() {
            let _ = writeln!(out, "  x_{i} >= 0");
        }
        out.push_str("binary\n ");
        out.push_str(" y_S y_T");
        for id in 0..self.n_rotations {
            let _ = write!(out, " y_R{id}");
        }
        out.push_str("\nend\n");
        out
    }
}

fn node_index(n: usize, node: PosetNode) -> usize {
    match node {
        PosetNode::Rotation(id) => id,
        PosetNode::Source => n,
        PosetNode::Sink => n + 1,
    }
}

fn index_node(n: usize, index: usize) -> PosetNode {
    match index {
        i if i < n => PosetNode::Rotation(i),
        i if i == n => PosetNode::Source,
        _ => PosetNode::Sink,
    }
}

/// Turn analyses into a network. Every shift of `dist` must be analyzed.
pub fn build_network(
    poset: &RotationPoset,
    analyses: &[ShiftAnalysis],
    dist: &ShiftDistribution,
) -> Result<ClosureNetwork> {
    let by_shift: HashMap<Shift, &ShiftAnalysis> = analyses.iter().map(|a| (a.shift, a)).collect();
    let mut edges = Vec::new();
    let mut constant_loss = BigRational::zero();
    for (shift, p) in dist.entries() {
        let a = by_shift.get(shift).ok_or_else(|| Error::Mismatch(format!("no analysis for {shift}")))?;
        match a.status {
            ShiftStatus::Unchanged | ShiftStatus::EmptyMab => {}
            ShiftStatus::Disjoint => constant_loss += p,
            ShiftStatus::Proper => {
                let (Some(to), Some(from)) = (a.rho_in, a.rho_out) else {
                    return Err(Error::Mismatch(format!("PROPER analysis of {shift} lacks endpoints")));
                };
                edges.push(ShiftEdge { from, to, capacity: p.clone() });
            }
        }
    }
    ClosureNetwork::new(poset, edges, constant_loss)
}

/// A flow from `T` to `S`, stored as integers over a common denominator.
#[derive(Clone, Debug)]
pub struct MaxFlow {
    denominator: BigInt,
    hasse_flow: Vec<BigInt>,
    shift_flow: Vec<BigInt>,
    value: BigRational,
}

impl MaxFlow {
    pub fn value(&self) -> &BigRational {
        &self.value
    }

    /// Flow on the `i`-th Hasse edge of the network.
    pub fn hasse_flow(&self, i: usize) -> BigRational {
        BigRational::new(self.hasse_flow[i].clone(), self.denominator.clone())
    }

    /// Flow on the `i`-th shift edge of the network.
    pub fn shift_flow(&self, i: usize) -> BigRational {
        BigRational::new(self.shift_flow[i].clone(), self.denominator.clone())
    }
}

struct Arc {
    to: usize,
    cap: BigInt,
}

/// Dinic's algorithm on integer capacities.
struct FlowGraph {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    fn new(n: usize) -> FlowGraph {
        FlowGraph { arcs: Vec::new(), adj: vec![Vec::new(); n] }
    }

    /// Adds an arc and its reverse; returns the forward arc index.
    fn add(&mut self, u: usize, v: usize, cap: BigInt) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to: v, cap });
        self.arcs.push(Arc { to: u, cap: BigInt::zero() });
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        id
    }

    fn levels(&self, source: usize, sink: usize) -> Option<Vec<usize>> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let arc = &self.arcs[a];
                if arc.cap.is_positive() && level[arc.to] == usize::MAX {
                    level[arc.to] = level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        (level[sink] != usize::MAX).then_some(level)
    }

    fn augment(&mut self, u: usize, sink: usize, limit: &BigInt, level: &[usize], next: &mut [usize]) -> BigInt {
        if u == sink {
            return limit.clone();
        }
        while next[u] < self.adj[u].len() {
            let a = self.adj[u][next[u]];
            let (to, cap) = (self.arcs[a].to, &self.arcs[a].cap);
            if cap.is_positive() && level[to] == level[u] + 1 {
                let bound = if cap < limit { cap.clone() } else { limit.clone() };
                let pushed = self.augment(to, sink, &bound, level, next);
                if pushed.is_positive() {
                    self.arcs[a].cap -= &pushed;
                    self.arcs[a ^ 1].cap += &pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        BigInt::zero()
    }

    fn max_flow(&mut self, source: usize, sink: usize, infinity: &BigInt) -> BigInt {
        let mut total = BigInt::zero();
        while let Some(level) = self.levels(source, sink) {
            let mut next = vec![0; self.adj.len()];
            loop {
                let pushed = self.augment(source, sink, infinity, &level, &mut next);
                if pushed.is_zero() {
                    break;
                }
                total += pushed;
            }
        }
        total
    }
}

/// Maximum flow from `T` to `S` with unbounded Hasse edges.
pub fn solve(network: &ClosureNetwork) -> MaxFlow {
    let denominator = network
        .shift_edges
        .iter()
        .fold(BigInt::one(), |acc, e| num_integer::Integer::lcm(&acc, e.capacity.denom()));
    let scaled: Vec<BigInt> = network
        .shift_edges
        .iter()
        .map(|e| e.capacity.numer() * (&denominator / e.capacity.denom()))
        .collect();
    let infinity = BigInt::one() + scaled.iter().sum::<BigInt>();

    let mut graph = FlowGraph::new(network.n_nodes());
    let hasse_arcs: Vec<usize> = network
        .hasse_edges
        .iter()
        .map(|&(u, v)| graph.add(network.node_index(u), network.node_index(v), infinity.clone()))
        .collect();
    let shift_arcs: Vec<usize> = network
        .shift_edges
        .iter()
        .zip(&scaled)
        .map(|(e, c)| graph.add(network.node_index(e.from), network.node_index(e.to), c.clone()))
        .collect();
    let t = network.node_index(PosetNode::Sink);
    let s = network.node_index(PosetNode::Source);
    let total = graph.max_flow(t, s, &infinity);

    let flow_on = |a: usize| graph.arcs[a ^ 1].cap.clone();
    MaxFlow {
        hasse_flow: hasse_arcs.iter().map(|&a| flow_on(a)).collect(),
        shift_flow: shift_arcs.iter().map(|&a| flow_on(a)).collect(),
        value: BigRational::new(total, denominator.clone()),
        denominator,
    }
}

/// Residual adjacency: `u -> v` when more flow can move from `u` to `v`.
/// Hasse edges are always forward-residual.
pub fn residual_graph(network: &ClosureNetwork, flow: &MaxFlow) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); network.n_nodes()];
    for (i, &(u, v)) in network.hasse_edges.iter().enumerate() {
        let (u, v) = (network.node_index(u), network.node_index(v));
        adj[u].push(v);
        if flow.hasse_flow[i].is_positive() {
            adj[v].push(u);
        }
    }
    for (i, e) in network.shift_edges.iter().enumerate() {
        let (u, v) = (network.node_index(e.from), network.node_index(e.to));
        if flow.shift_flow(i) < e.capacity {
            adj[u].push(v);
        }
        if flow.shift_flow[i].is_positive() {
            adj[v].push(u);
        }
    }
    adj
}

/// Nodes reachable from `start` along `adj`.
pub(crate) fn reachable(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

pub(crate) fn reversed_adjacency(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (u, vs) in adj.iter().enumerate() {
        for &v in vs {
            rev[v].push(u);
        }
    }
    rev
}

/// The smallest optimal closed set: rotations that reach `S` in the
/// residual graph.
pub fn extract_closed_set(network: &ClosureNetwork, flow: &MaxFlow) -> Result<ClosedSet> {
    let adj = residual_graph(network, flow);
    let s = network.node_index(PosetNode::Source);
    let t = network.node_index(PosetNode::Sink);
    let reaches_s = reachable(&reversed_adjacency(&adj), s);
    if reaches_s[t] {
        return Err(Error::FlowNotMaximum);
    }
    Ok((0..network.n_rotations).filter(|&i| reaches_s[i]).collect())
}

/// Capacity bounds and conservation at every node other than `S` and `T`,
/// with net outflow of `T` equal to the flow value.
pub fn check_flow_feasibility(network: &ClosureNetwork, flow: &MaxFlow) -> std::result::Result<(), String> {
    let mut balance = vec![BigInt::zero(); network.n_nodes()];
    for (i, &(u, v)) in network.hasse_edges.iter().enumerate() {
        let f = &flow.hasse_flow[i];
        if f.is_negative() {
            return Err(format!("negative flow on Hasse edge {u} -> {v}"));
        }
        balance[network.node_index(u)] -= f;
        balance[network.node_index(v)] += f;
    }
    for (i, e) in network.shift_edges.iter().enumerate() {
        let f = &flow.shift_flow[i];
        if f.is_negative() || flow.shift_flow(i) > e.capacity {
            return Err(format!("flow on {} -> {} outside [0, capacity]", e.from, e.to));
        }
        balance[network.node_index(e.from)] -= f;
        balance[network.node_index(e.to)] += f;
    }
    let s = network.node_index(PosetNode::Source);
    let t = network.node_index(PosetNode::Sink);
    for (u, b) in balance.iter().enumerate() {
        let expected = if u == s {
            flow.value.numer() * (&flow.denominator / flow.value.denom())
        } else if u == t {
            -(flow.value.numer() * (&flow.denominator / flow.value.denom()))
        } else {
            BigInt::zero()
        };
        if *b != expected {
            return Err(format!("conservation fails at {}", network.index_node(u)));
        }
    }
    Ok(())
}

/// Complementary slackness between the flow and the 0/1 solution induced by
/// `set` (`y = 0` inside, `1` outside, `x_B = max(y_out - y_in, 0)`), plus
/// primal feasibility and equality of the two objective values.
pub fn check_complementary_slackness(
    network: &ClosureNetwork,
    flow: &MaxFlow,
    set: &ClosedSet,
) -> std::result::Result<(), String> {
    let y = |node: PosetNode| -> i32 { i32::from(!ClosureNetwork::in_set(set, node)) };
    for (i, &(u, v)) in network.hasse_edges.iter().enumerate() {
        if y(u) > y(v) {
            return Err(format!("closure violated on {u} -> {v}"));
        }
        if !flow.hasse_flow[i].is_zero() && y(u) != y(v) {
            return Err(format!("flow crosses the cut on Hasse edge {u} -> {v}"));
        }
    }
    let mut primal = BigRational::zero();
    for (i, e) in network.shift_edges.iter().enumerate() {
        let diff = y(e.from) - y(e.to);
        let x = diff.max(0);
        let g = flow.shift_flow(i);
        if x == 1 && g != e.capacity {
            return Err(format!("separated edge {} -> {} is not saturated", e.from, e.to));
        }
        if !g.is_zero() && diff != x {
            return Err(format!("flow on {} -> {} runs against the cut", e.from, e.to));
        }
        if x == 1 {
            primal += &e.capacity;
        }
    }
    if primal != flow.value {
        return Err(format!(
            "cut value {} differs from flow value {}",
            format_ratio(&primal),
            format_ratio(&flow.value)
        ));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustSolution {
    pub matching: Matching,
    pub closed_set: ClosedSet,
    /// Probability of instability under one sampled shift.
    pub objective: BigRational,
    pub flow_value: BigRational,
    pub constant_loss: BigRational,
}

/// Every intermediate of the computation.
#[derive(Clone, Debug)]
pub struct RobustPipeline {
    pub poset: RotationPoset,
    pub analyses: Vec<ShiftAnalysis>,
    pub network: ClosureNetwork,
    pub flow: MaxFlow,
    pub solution: RobustSolution,
}

pub fn run_pipeline(inst: &PreferenceInstance, dist: &ShiftDistribution) -> Result<RobustPipeline> {
    dist.validate(inst)?;
    let poset = build_rotation_poset(inst);
    let analyses = ShiftAnalyzer::new(inst, &poset).analyze_all(dist.entries().iter().map(|(s, _)| s))?;
    let network = build_network(&poset, &analyses, dist)?;
    let flow = solve(&network);
    let closed_set = extract_closed_set(&network, &flow)?;
    let matching = poset.closed_set_to_matching(&closed_set)?;
    let solution = RobustSolution {
        matching,
        objective: flow.value() + network.constant_loss(),
        flow_value: flow.value().clone(),
        constant_loss: network.constant_loss().clone(),
        closed_set,
    };
    Ok(RobustPipeline { poset, analyses, network, flow, solution })
}

/// A stable matching minimizing the probability of being destabilized by
/// one shift drawn from `dist`.
pub fn robust_matching(inst: &PreferenceInstance, dist: &ShiftDistribution) -> Result<RobustSolution> {
    run_pipeline(inst, dist).map(|p| p.solution)
}
