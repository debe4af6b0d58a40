//! Cluster graphs, the direct amplitude formula, and the computational-basis
//! deletion rule.
//!
//! A cluster state over a graph assigns basis state `z` the amplitude
//! `(-1)^(sum over edges of z_j z_k) * 2^(-n/2)`. Building the same state by
//! applying a controlled-phase across every edge of `|+>^n` must agree with
//! that formula, and measuring any node in the computational basis deletes it
//! from the graph up to `Z^m` on its former neighbours. Node ids are opaque
//! and stable: deletions never renumber, so byproduct records stay valid
//! while growth simulations add and remove nodes.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::simcore::{fidelity, StateVector, MAX_QUBITS};

/// Opaque, stable identifier of a cluster node.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Undirected simple graph with stable node ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusterGraph {
    nodes: BTreeSet<NodeId>,
    edges: BTreeSet<(NodeId, NodeId)>,
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl ClusterGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph from an edge list; endpoints are inserted as nodes.
    pub fn from_edges<I: IntoIterator<Item = (NodeId, NodeId)>>(edges: I) -> Result<Self> {
        let mut g = Self::new();
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Self {
        let mut g = Self::new();
        for i in 0..n {
            g.add_node(NodeId(i as u32));
        }
        for i in 1..n {
            g.add_edge(NodeId(i as u32 - 1), NodeId(i as u32)).unwrap();
        }
        g
    }

    /// Hub node 0 with `leaves` degree-one neighbours.
    pub fn star(leaves: usize) -> Self {
        let mut g = Self::new();
        g.add_node(NodeId(0));
        for i in 1..=leaves {
            g.add_edge(NodeId(0), NodeId(i as u32)).unwrap();
        }
        g
    }

    pub fn add_node(&mut self, id: NodeId) -> bool {
        self.nodes.insert(id)
    }

    pub fn add_edge(&mut self, a: NodeId, b: NodeId) -> Result<bool> {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        self.nodes.insert(a);
        self.nodes.insert(b);
        Ok(self.edges.insert(ordered(a, b)))
    }

    /// Remove a node and its incident edges, returning the former neighbours.
    pub fn remove_node(&mut self, id: NodeId) -> Result<Vec<NodeId>> {
        if !self.nodes.remove(&id) {
            return Err(Error::NodeAbsent(id));
        }
        let neighbours: Vec<NodeId> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        self.edges.retain(|&(a, b)| a != id && b != id);
        Ok(neighbours)
    }

    pub fn has_node(&self, id: NodeId) -> bool {
        self.nodes.contains(&id)
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edges.contains(&ordered(a, b))
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == id || b == id).count()
    }

    /// Qubit index of a node: its rank in ascending node-id order.
    pub fn qubit_index(&self, id: NodeId) -> Option<usize> {
        if !self.nodes.contains(&id) {
            return None;
        }
        Some(self.nodes.range(..id).count())
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.nodes.iter().next() else {
            return false;
        };
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for w in self.neighbors(v) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == self.nodes.len()
    }

    /// Relabel every node id by adding `offset`.
    pub fn shifted(&self, offset: u32) -> Self {
        let nodes = self.nodes.iter().map(|n| NodeId(n.0 + offset)).collect();
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| (NodeId(a.0 + offset), NodeId(b.0 + offset)))
            .collect();
        Self { nodes, edges }
    }

    /// Edge-list text format: one `u v` pair per line, single ids declare
    /// isolated nodes, `#` starts a comment.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::new();
        for (a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        for n in &self.nodes {
            if self.degree(*n) == 0 {
                out.push_str(&format!("{n}\n"));
            }
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut g = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| -> Result<NodeId> {
                s.parse::<u32>().map(NodeId).map_err(|e| Error::GraphParse {
                    line: lineno + 1,
                    msg: format!("bad node id {s:?}: {e}"),
                })
            };
            match fields.as_slice() {
                [v] => {
                    g.add_node(parse(v)?);
                }
                [a, b] => {
                    g.add_edge(parse(a)?, parse(b)?)?;
                }
                _ => {
                    return Err(Error::GraphParse {
                        line: lineno + 1,
                        msg: format!("expected 1 or 2 fields, got {}", fields.len()),
                    })
                }
            }
        }
        if g.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok(g)
    }

    /// Random connected graph on node ids `0..n`: a random spanning tree plus
    /// each remaining edge independently with probability `extra_edge_prob`.
    pub fn random_connected(n: usize, extra_edge_prob: f64, rng: &mut RngStream) -> Self {
        let mut g = Self::new();
        g.add_node(NodeId(0));
        for i in 1..n {
            let parent = rng.gen_range(0..i) as u32;
            g.add_edge(NodeId(parent), NodeId(i as u32)).unwrap();
        }
        for a in 0..n {
            for b in (a + 1)..n {
                if !g.has_edge(NodeId(a as u32), NodeId(b as u32))
                    && rng.gen::<f64>() < extra_edge_prob
                {
                    g.add_edge(NodeId(a as u32), NodeId(b as u32)).unwrap();
                }
            }
        }
        g
    }
}

/// Per-node Pauli exponents accumulated from measurement outcomes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliExponents {
    pub x: u8,
    pub z: u8,
}

impl PauliExponents {
    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }
}

/// Map from node id to the `X^x Z^z` correction it carries.
///
/// Records compose by adding exponents mod 2.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ByproductRecord {
    entries: BTreeMap<NodeId, PauliExponents>,
}

impl ByproductRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, node: NodeId) -> PauliExponents {
        self.entries.get(&node).copied().unwrap_or_default()
    }

    pub fn add_z(&mut self, node: NodeId, exponent: u8) {
        let e = self.entries.entry(node).or_default();
        e.z ^= exponent & 1;
        if e.is_identity() {
            self.entries.remove(&node);
        }
    }

    pub fn add_x(&mut self, node: NodeId, exponent: u8) {
        let e = self.entries.entry(node).or_default();
        e.x ^= exponent & 1;
        if e.is_identity() {
            self.entries.remove(&node);
        }
    }

    /// Compose with another record (exponents add mod 2).
    pub fn merge(&mut self, other: &ByproductRecord) {
        for (&node, &e) in &other.entries {
            self.add_x(node, e.x);
            self.add_z(node, e.z);
        }
    }

    pub fn is_identity(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, PauliExponents)> + '_ {
        self.entries.iter().map(|(&n, &e)| (n, e))
    }

    /// Drop entries for nodes no longer of interest.
    pub fn retain_nodes(&mut self, keep: &BTreeSet<NodeId>) {
        self.entries.retain(|n, _| keep.contains(n));
    }
}

/// Evaluate the cluster-state amplitude formula directly.
///
/// Basis state `z` gets `(-1)^(sum over edges of z_j z_k) * 2^(-n/2)`, with
/// qubit indices assigned by ascending node id.
pub fn cluster_amplitudes(g: &ClusterGraph) -> Result<StateVector> {
    let n = g.num_nodes();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if n > MAX_QUBITS {
        return Err(Error::QubitCountOutOfRange(n));
    }
    let edge_masks: Vec<(usize, usize)> = g
        .edges()
        .map(|(a, b)| {
            (
                1usize << g.qubit_index(a).unwrap(),
                1usize << g.qubit_index(b).unwrap(),
            )
        })
        .collect();
    let dim = 1usize << n;
    let magnitude = 1.0 / (dim as f64).sqrt();
    let mut amps = Vec::with_capacity(dim);
    for z in 0..dim {
        let mut parity = 0u32;
        for &(ma, mb) in &edge_masks {
            if z & ma != 0 && z & mb != 0 {
                parity ^= 1;
            }
        }
        let sign = if parity == 0 { magnitude } else { -magnitude };
        amps.push(num_complex::Complex64::new(sign, 0.0));
    }
    StateVector::from_amplitudes(amps)
}

/// Build the cluster state by circuit: `|+>^n`, then a controlled-phase per
/// edge. Edge order is irrelevant because the gates commute.
pub fn build_cluster_state(g: &ClusterGraph) -> Result<StateVector> {
    let n = g.num_nodes();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut s = StateVector::new_plus_state(n)?;
    for (a, b) in g.edges() {
        s.cphase(g.qubit_index(a).unwrap(), g.qubit_index(b).unwrap())?;
    }
    Ok(s)
}

/// Deletion rule: removing `node` after a computational-basis measurement
/// with outcome `m` leaves the cluster state of the reduced graph, up to
/// `Z^m` on each former neighbour.
pub fn delete_by_measurement(
    g: &ClusterGraph,
    node: NodeId,
    outcome: u8,
) -> Result<(ClusterGraph, ByproductRecord)> {
    let mut reduced = g.clone();
    let neighbours = reduced.remove_node(node)?;
    let mut correction = ByproductRecord::new();
    for n in neighbours {
        correction.add_z(n, outcome);
    }
    Ok((reduced, correction))
}

/// Check the deletion rule against the state-vector oracle for a random
/// measurement outcome.
pub fn verify_deletion(g: &ClusterGraph, node: NodeId, rng: &mut RngStream) -> Result<bool> {
    let outcome = rng.fair_bit();
    verify_deletion_forced(g, node, outcome)
}

/// Forced-outcome variant used for exhaustive tests: builds the cluster
/// state, projects `node` onto `m`, applies the predicted correction, and
/// compares with the reduced cluster state. Also checks that both outcomes
/// occur with probability exactly 1/2.
pub fn verify_deletion_forced(g: &ClusterGraph, node: NodeId, m: u8) -> Result<bool> {
    if g.num_nodes() < 2 {
        return Err(Error::EmptyGraph);
    }
    let mut state = build_cluster_state(g)?;
    let q = g.qubit_index(node).ok_or(Error::NodeAbsent(node))?;

    // Uniform moduli make every computational-basis outcome a fair coin.
    let p_one = state.prob_one(q)?;
    if (p_one - 0.5).abs() > 1e-12 {
        return Ok(false);
    }

    let measurement = state.measure_z_forced(q, m)?;
    if (measurement.probability - 0.5).abs() > 1e-12 {
        return Ok(false);
    }

    let (reduced, correction) = delete_by_measurement(g, node, m)?;
    for (n, e) in correction.iter() {
        if e.z == 1 {
            state.pauli(g.qubit_index(n).unwrap(), crate::simcore::Pauli::Z)?;
        }
    }
    let remaining = state.factor_collapsed(&[(q, m)].into_iter().collect())?;
    let expected = cluster_amplitudes(&reduced)?;
    Ok(fidelity(&remaining, &expected)? >= 1.0 - 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::seq::SliceRandom;

    #[test]
    fn single_node_is_plus() {
        let mut g = ClusterGraph::new();
        g.add_node(NodeId(3));
        let s = cluster_amplitudes(&g).unwrap();
        let plus = StateVector::new_plus_state(1).unwrap();
        assert!((fidelity(&s, &plus).unwrap() - 1.0).abs() < 1e-12);
        assert!((fidelity(&build_cluster_state(&g).unwrap(), &plus).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_node_amplitudes_match_expansion() {
        // Expansion of the formula over the four configurations.
        let g = ClusterGraph::from_edges([(NodeId(0), NodeId(1))]).unwrap();
        let s = cluster_amplitudes(&g).unwrap();
        let expected = [0.5, 0.5, 0.5, -0.5];
        for (amp, want) in s.amplitudes().iter().zip(expected) {
            assert!((amp - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn three_node_line_signs() {
        // Sign is -1 exactly when an adjacent pair of bits is 11.
        let g = ClusterGraph::chain(3);
        let s = cluster_amplitudes(&g).unwrap();
        let mag = 1.0 / 8.0f64.sqrt();
        for z in 0..8usize {
            let adjacent_pair = (z & 0b011 == 0b011) ^ (z & 0b110 == 0b110);
            let want = if adjacent_pair { -mag } else { mag };
            assert!(
                (s.amplitudes()[z] - Complex64::new(want, 0.0)).norm() < 1e-12,
                "z={z}"
            );
        }
    }

    #[test]
    fn build_matches_formula_on_cycle() {
        let g = ClusterGraph::from_edges([
            (NodeId(0), NodeId(1)),
            (NodeId(1), NodeId(2)),
            (NodeId(2), NodeId(3)),
            (NodeId(3), NodeId(0)),
        ])
        .unwrap();
        let built = build_cluster_state(&g).unwrap();
        let formula = cluster_amplitudes(&g).unwrap();
        for (a, b) in built.amplitudes().iter().zip(formula.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn edge_order_is_irrelevant() {
        let mut rng = RngStream::new(17, 0);
        let g = ClusterGraph::random_connected(6, 0.4, &mut rng);
        let reference = build_cluster_state(&g).unwrap();
        for round in 0..2 {
            let mut edges: Vec<_> = g.edges().collect();
            let mut shuffle_rng = RngStream::new(17, round + 1);
            edges.shuffle(&mut shuffle_rng);
            let mut s = StateVector::new_plus_state(g.num_nodes()).unwrap();
            for (a, b) in edges {
                s.cphase(g.qubit_index(a).unwrap(), g.qubit_index(b).unwrap())
                    .unwrap();
            }
            for (x, y) in s.amplitudes().iter().zip(reference.amplitudes()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn deletion_with_outcome_zero_has_identity_correction() {
        let g = ClusterGraph::chain(3);
        let (reduced, correction) = delete_by_measurement(&g, NodeId(1), 0).unwrap();
        assert!(correction.is_identity());
        assert_eq!(reduced.num_nodes(), 2);
        assert_eq!(reduced.num_edges(), 0);
    }

    #[test]
    fn deletion_of_middle_node_corrects_both_ends() {
        let g = ClusterGraph::chain(3);
        let (reduced, correction) = delete_by_measurement(&g, NodeId(1), 1).unwrap();
        assert_eq!(correction.get(NodeId(0)), PauliExponents { x: 0, z: 1 });
        assert_eq!(correction.get(NodeId(2)), PauliExponents { x: 0, z: 1 });
        assert_eq!(reduced.num_nodes(), 2);
        assert_eq!(reduced.num_edges(), 0);
    }

    #[test]
    fn deletion_of_isolated_node() {
        let mut g = ClusterGraph::chain(2);
        g.add_node(NodeId(9));
        let (reduced, correction) = delete_by_measurement(&g, NodeId(9), 1).unwrap();
        assert!(correction.is_identity());
        assert!(!reduced.has_node(NodeId(9)));
        assert_eq!(reduced.num_edges(), 1);
    }

    #[test]
    fn verify_deletion_on_edge_and_star() {
        for node in [NodeId(0), NodeId(1)] {
            for m in 0..2u8 {
                let g = ClusterGraph::from_edges([(NodeId(0), NodeId(1))]).unwrap();
                assert!(verify_deletion_forced(&g, node, m).unwrap());
            }
        }
        let star = ClusterGraph::star(4);
        for node in [NodeId(0), NodeId(2)] {
            for m in 0..2u8 {
                assert!(verify_deletion_forced(&star, node, m).unwrap(), "{node} {m}");
            }
        }
        // Random-outcome variant as well.
        let mut rng = RngStream::new(4, 0);
        assert!(verify_deletion(&star, NodeId(0), &mut rng).unwrap());
    }

    #[test]
    fn delete_all_nodes_in_random_order() {
        let mut rng = RngStream::new(23, 0);
        let mut g = ClusterGraph::random_connected(8, 0.3, &mut rng);
        let mut order: Vec<NodeId> = g.nodes().collect();
        order.shuffle(&mut rng);
        for node in order {
            let m = rng.fair_bit();
            let (next, _) = delete_by_measurement(&g, node, m).unwrap();
            g = next;
        }
        assert!(g.is_empty());
    }

    #[test]
    fn byproduct_records_compose_mod_two() {
        let mut a = ByproductRecord::new();
        a.add_z(NodeId(1), 1);
        a.add_x(NodeId(2), 1);
        let mut b = ByproductRecord::new();
        b.add_z(NodeId(1), 1);
        b.add_z(NodeId(2), 1);
        a.merge(&b);
        assert_eq!(a.get(NodeId(1)), PauliExponents::default());
        assert_eq!(a.get(NodeId(2)), PauliExponents { x: 1, z: 1 });
    }

    #[test]
    fn edge_list_round_trip() {
        let mut g = ClusterGraph::from_edges([(NodeId(0), NodeId(2)), (NodeId(2), NodeId(5))])
            .unwrap();
        g.add_node(NodeId(7));
        let text = g.to_edge_list_string();
        let parsed = ClusterGraph::parse_edge_list(&text).unwrap();
        assert_eq!(parsed, g);
    }

    #[test]
    fn edge_list_rejects_garbage() {
        let err = ClusterGraph::parse_edge_list("0 1\n2 x\n").unwrap_err();
        assert!(matches!(err, Error::GraphParse { line: 2, .. }));
        let err = ClusterGraph::parse_edge_list("0 1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::GraphParse { line: 1, .. }));
    }

    #[test]
    fn cluster_outcome_probability_is_half() {
        let mut rng = RngStream::new(31, 0);
        for trial in 0..5 {
            let g = ClusterGraph::random_connected(5 + trial % 3, 0.3, &mut rng);
            let s = build_cluster_state(&g).unwrap();
            for node in g.nodes() {
                let p = s.prob_one(g.qubit_index(node).unwrap()).unwrap();
                assert!((p - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qubit_index_is_rank() {
        let mut g = ClusterGraph::new();
        g.add_node(NodeId(10));
        g.add_node(NodeId(3));
        g.add_node(NodeId(7));
        assert_eq!(g.qubit_index(NodeId(3)), Some(0));
        assert_eq!(g.qubit_index(NodeId(7)), Some(1));
        assert_eq!(g.qubit_index(NodeId(10)), Some(2));
        assert_eq!(g.qubit_index(NodeId(4)), None);
    }
}
