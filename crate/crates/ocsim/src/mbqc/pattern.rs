//! Cluster layouts and adaptive measurement patterns.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphstate::{ClusterGraph, NodeId};
use crate::mbqc::circuit::{CircuitIR, Gate};

/// A node that will be measured: rotate by `H Z(sign * base_angle)` and
/// measure in the computational basis, with the sign fixed by the parity of
/// the outcomes at `sign_deps`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredNode {
    pub base_angle: f64,
    pub time_label: u32,
    pub sign_deps: BTreeSet<NodeId>,
}

/// An unmeasured output node. The residual Pauli byproduct on it is
/// `X^(parity of x_deps) Z^(parity of z_deps)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OutputNode {
    pub x_deps: BTreeSet<NodeId>,
    pub z_deps: BTreeSet<NodeId>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeRole {
    Measured(MeasuredNode),
    Output(OutputNode),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternNode {
    /// Circuit qubit this node belongs to.
    pub row: usize,
    /// Position along the wire, left to right.
    pub col: usize,
    pub role: NodeRole,
}

/// Compiled cluster layout plus the adaptive measurement schedule.
#[derive(Clone, Debug)]
pub struct MeasurementPattern {
    pub graph: ClusterGraph,
    pub rows: usize,
    pub nodes: BTreeMap<NodeId, PatternNode>,
    bridges: BTreeSet<(NodeId, NodeId)>,
}

impl MeasurementPattern {
    pub fn measured_count(&self) -> usize {
        self.nodes
            .values()
            .filter(|n| matches!(n.role, NodeRole::Measured(_)))
            .count()
    }

    /// Measured nodes sorted by time label (node id breaks ties between
    /// same-label nodes, which commute).
    pub fn measured_in_time_order(&self) -> Vec<NodeId> {
        let mut nodes: Vec<(u32, NodeId)> = self
            .nodes
            .iter()
            .filter_map(|(&id, node)| match &node.role {
                NodeRole::Measured(m) => Some((m.time_label, id)),
                NodeRole::Output(_) => None,
            })
            .collect();
        nodes.sort();
        nodes.into_iter().map(|(_, id)| id).collect()
    }

    /// Output node of each row, in row order.
    pub fn outputs(&self) -> Vec<NodeId> {
        let mut outs: Vec<(usize, NodeId)> = self
            .nodes
            .iter()
            .filter_map(|(&id, node)| match &node.role {
                NodeRole::Output(_) => Some((node.row, id)),
                _ => None,
            })
            .collect();
        outs.sort();
        outs.into_iter().map(|(_, id)| id).collect()
    }

    /// Build order used by growth: column by column, rows top to bottom.
    pub fn column_major_order(&self) -> Vec<NodeId> {
        let mut order: Vec<(usize, usize, NodeId)> = self
            .nodes
            .iter()
            .map(|(&id, n)| (n.col, n.row, id))
            .collect();
        order.sort();
        order.into_iter().map(|(_, _, id)| id).collect()
    }

    pub fn node_columns(&self) -> BTreeMap<NodeId, usize> {
        self.nodes.iter().map(|(&id, n)| (id, n.col)).collect()
    }

    pub fn num_columns(&self) -> usize {
        self.nodes.values().map(|n| n.col + 1).max().unwrap_or(0)
    }

    /// Vertical edges that simulate controlled-phase gates.
    pub fn bridge_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.bridges.iter().copied()
    }

    /// Structured-text (JSON) export of grid coordinates, angles, time
    /// labels and dependencies.
    pub fn to_layout_json(&self) -> String {
        #[derive(Serialize)]
        struct NodeOut {
            id: u32,
            row: usize,
            col: usize,
            kind: &'static str,
            #[serde(skip_serializing_if = "Option::is_none")]
            angle: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            time: Option<u32>,
            #[serde(skip_serializing_if = "Option::is_none")]
            sign_deps: Option<Vec<u32>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            x_deps: Option<Vec<u32>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            z_deps: Option<Vec<u32>>,
        }
        #[derive(Serialize)]
        struct LayoutOut {
            rows: usize,
            nodes: Vec<NodeOut>,
            edges: Vec<[u32; 2]>,
            bridges: Vec<[u32; 2]>,
        }
        let ids = |set: &BTreeSet<NodeId>| set.iter().map(|n| n.0).collect::<Vec<u32>>();
        let nodes = self
            .nodes
            .iter()
            .map(|(&id, node)| match &node.role {
                NodeRole::Measured(m) => NodeOut {
                    id: id.0,
                    row: node.row,
                    col: node.col,
                    kind: "measured",
                    angle: Some(m.base_angle),
                    time: Some(m.time_label),
                    sign_deps: Some(ids(&m.sign_deps)),
                    x_deps: None,
                    z_deps: None,
                },
                NodeRole::Output(o) => NodeOut {
                    id: id.0,
                    row: node.row,
                    col: node.col,
                    kind: "output",
                    angle: None,
                    time: None,
                    sign_deps: None,
                    x_deps: Some(ids(&o.x_deps)),
                    z_deps: Some(ids(&o.z_deps)),
                },
            })
            .collect();
        let layout = LayoutOut {
            rows: self.rows,
            nodes,
            edges: self.graph.edges().map(|(a, b)| [a.0, b.0]).collect(),
            bridges: self.bridges.iter().map(|&(a, b)| [a.0, b.0]).collect(),
        };
        serde_json::to_string_pretty(&layout).expect("layout serialises")
    }
}

fn symmetric_difference(target: &mut BTreeSet<NodeId>, other: &BTreeSet<NodeId>) {
    for &n in other {
        if !target.remove(&n) {
            target.insert(n);
        }
    }
}

fn toggle(target: &mut BTreeSet<NodeId>, n: NodeId) {
    if !target.remove(&n) {
        target.insert(n);
    }
}

/// Compile a validated circuit into its cluster layout and measurement
/// schedule.
///
/// Each wire becomes a chain with two measured nodes per single-qubit gate
/// (base angles `alpha` then `alpha_prime`) and one output node. Each
/// controlled-phase becomes one vertical edge attached at the first chain
/// node following it on either wire (the output node if no rotation
/// follows). Time labels order same-gate-column nodes identically, as only
/// the relative order matters; sign and byproduct dependency sets are
/// computed by conjugating the accumulated `X/Z` byproducts through each
/// `H Z(angle)` step and each bridge.
pub fn compile(circuit: &CircuitIR) -> Result<MeasurementPattern> {
    circuit.validate()?;
    let wires = circuit.qubits;

    // Rank of each layer among layers that contain a rotation.
    let mut u_layer_rank: BTreeMap<usize, u32> = BTreeMap::new();
    for (idx, layer) in circuit.layers.iter().enumerate() {
        if layer.iter().any(|g| matches!(g, Gate::U { .. })) {
            let rank = u_layer_rank.len() as u32;
            u_layer_rank.insert(idx, rank);
        }
    }

    // First pass: lay out chains wire by wire so ids ascend row-major.
    struct ChainNode {
        id: NodeId,
        angle: f64,
        layer: usize,
        pair_pos: u8,
    }
    let mut chains: Vec<Vec<ChainNode>> = (0..wires).map(|_| Vec::new()).collect();
    let mut next_id = 0u32;
    let mut outputs: Vec<NodeId> = Vec::with_capacity(wires);
    for wire in 0..wires {
        for (layer_idx, layer) in circuit.layers.iter().enumerate() {
            for gate in layer {
                if let Gate::U {
                    qubit,
                    alpha,
                    alpha_prime,
                } = *gate
                {
                    if qubit == wire {
                        for (pair_pos, angle) in [(0u8, alpha), (1u8, alpha_prime)] {
                            chains[wire].push(ChainNode {
                                id: NodeId(next_id),
                                angle,
                                layer: layer_idx,
                                pair_pos,
                            });
                            next_id += 1;
                        }
                    }
                }
            }
        }
        outputs.push(NodeId(next_id));
        next_id += 1;
    }

    // Graph: chain edges plus one bridge per controlled-phase.
    let mut graph = ClusterGraph::new();
    for (wire, chain) in chains.iter().enumerate() {
        let mut prev: Option<NodeId> = None;
        for node in chain {
            graph.add_node(node.id);
            if let Some(p) = prev {
                graph.add_edge(p, node.id)?;
            }
            prev = Some(node.id);
        }
        graph.add_node(outputs[wire]);
        if let Some(p) = prev {
            graph.add_edge(p, outputs[wire])?;
        }
    }

    // Attach point on `wire` for a controlled-phase in `layer`: the first
    // pair node in a later layer, else the output.
    let attach = |wire: usize, layer: usize| -> NodeId {
        chains[wire]
            .iter()
            .find(|n| n.layer > layer && n.pair_pos == 0)
            .map(|n| n.id)
            .unwrap_or(outputs[wire])
    };

    let mut bridges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut bridge_layer: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut bridge_list: Vec<(usize, usize, usize, NodeId, NodeId)> = Vec::new();
    for (layer_idx, layer) in circuit.layers.iter().enumerate() {
        for gate in layer {
            if let Gate::CPhase { a, b } = *gate {
                let na = attach(a, layer_idx);
                let nb = attach(b, layer_idx);
                for endpoint in [na, nb] {
                    if let Some(&first) = bridge_layer.get(&endpoint) {
                        return Err(Error::BridgeOverlap {
                            first,
                            second: layer_idx,
                        });
                    }
                    bridge_layer.insert(endpoint, layer_idx);
                }
                graph.add_edge(na, nb)?;
                let key = if na <= nb { (na, nb) } else { (nb, na) };
                bridges.insert(key);
                bridge_list.push((layer_idx, a, b, na, nb));
            }
        }
    }

    // Second pass: symbolic X/Z byproduct sets per wire, walked in layer
    // order. Measuring a node with outcome s maps (x, z) to (z + {s}, x);
    // a bridge adds each wire's x set to the other wire's z set at the
    // moment the gate logically acts.
    let mut x_sets: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); wires];
    let mut z_sets: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); wires];
    let mut sign_deps: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    let mut cursor: Vec<usize> = vec![0; wires];
    for (layer_idx, layer) in circuit.layers.iter().enumerate() {
        for gate in layer {
            if let Gate::CPhase { a, b } = *gate {
                let _ = layer_idx;
                let xa = x_sets[a].clone();
                let xb = x_sets[b].clone();
                symmetric_difference(&mut z_sets[a], &xb);
                symmetric_difference(&mut z_sets[b], &xa);
            }
        }
        for gate in layer {
            if let Gate::U { qubit, .. } = *gate {
                for _ in 0..2 {
                    let node = chains[qubit][cursor[qubit]].id;
                    cursor[qubit] += 1;
                    sign_deps.insert(node, x_sets[qubit].clone());
                    let mut new_x = z_sets[qubit].clone();
                    toggle(&mut new_x, node);
                    z_sets[qubit] = std::mem::replace(&mut x_sets[qubit], new_x);
                }
            }
        }
    }

    // Assemble per-node records.
    let mut nodes: BTreeMap<NodeId, PatternNode> = BTreeMap::new();
    for (wire, chain) in chains.iter().enumerate() {
        for (col, chain_node) in chain.iter().enumerate() {
            let rank = u_layer_rank[&chain_node.layer];
            nodes.insert(
                chain_node.id,
                PatternNode {
                    row: wire,
                    col,
                    role: NodeRole::Measured(MeasuredNode {
                        base_angle: chain_node.angle,
                        time_label: 2 * rank + u32::from(chain_node.pair_pos) + 1,
                        sign_deps: sign_deps.remove(&chain_node.id).unwrap_or_default(),
                    }),
                },
            );
        }
        nodes.insert(
            outputs[wire],
            PatternNode {
                row: wire,
                col: chain.len(),
                role: NodeRole::Output(OutputNode {
                    x_deps: x_sets[wire].clone(),
                    z_deps: z_sets[wire].clone(),
                }),
            },
        );
    }

    let pattern = MeasurementPattern {
        graph,
        rows: wires,
        nodes,
        bridges,
    };
    debug_assert!(pattern_is_consistent(&pattern));
    Ok(pattern)
}

/// Dependencies must point strictly backwards in time.
fn pattern_is_consistent(p: &MeasurementPattern) -> bool {
    let time = |id: NodeId| -> Option<u32> {
        match &p.nodes[&id].role {
            NodeRole::Measured(m) => Some(m.time_label),
            NodeRole::Output(_) => None,
        }
    };
    p.nodes.values().all(|node| match &node.role {
        NodeRole::Measured(m) => m
            .sign_deps
            .iter()
            .all(|d| time(*d).is_some_and(|t| t < m.time_label)),
        NodeRole::Output(_) => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbqc::circuit::standard_two_qubit_circuit;

    #[test]
    fn standard_circuit_layout_matches_figure() {
        // Two rows of four measured nodes plus an output each, and one
        // vertical edge at the third node column.
        let c = standard_two_qubit_circuit([0.0; 8]);
        let p = compile(&c).unwrap();
        assert_eq!(p.rows, 2);
        assert_eq!(p.graph.num_nodes(), 10);
        assert_eq!(p.measured_count(), 8);
        // 4 chain edges per wire + 1 bridge.
        assert_eq!(p.graph.num_edges(), 9);
        let bridges: Vec<_> = p.bridge_edges().collect();
        assert_eq!(bridges.len(), 1);
        let (a, b) = bridges[0];
        assert_eq!(p.nodes[&a].col, 2);
        assert_eq!(p.nodes[&b].col, 2);
        assert_ne!(p.nodes[&a].row, p.nodes[&b].row);
        // Time labels 1..=4 along each wire.
        for row in 0..2 {
            let labels: Vec<u32> = p
                .nodes
                .values()
                .filter(|n| n.row == row)
                .filter_map(|n| match &n.role {
                    NodeRole::Measured(m) => Some(m.time_label),
                    _ => None,
                })
                .collect();
            assert_eq!(labels, vec![1, 2, 3, 4]);
        }
        // First-column measurements are unconditional; later ones adapt.
        let first = p.measured_in_time_order()[0];
        match &p.nodes[&first].role {
            NodeRole::Measured(m) => assert!(m.sign_deps.is_empty()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_u_wire_is_three_node_line() {
        let c = CircuitIR::new(
            1,
            vec![vec![Gate::U {
                qubit: 0,
                alpha: 0.3,
                alpha_prime: 0.7,
            }]],
        );
        let p = compile(&c).unwrap();
        assert_eq!(p.graph.num_nodes(), 3);
        assert_eq!(p.graph.num_edges(), 2);
        assert_eq!(p.measured_count(), 2);
        // Second angle adapts to the first outcome.
        let order = p.measured_in_time_order();
        match &p.nodes[&order[1]].role {
            NodeRole::Measured(m) => {
                assert_eq!(m.sign_deps.len(), 1);
                assert!(m.sign_deps.contains(&order[0]));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn empty_circuit_compiles_to_isolated_outputs() {
        let c = CircuitIR::new(3, vec![]);
        let p = compile(&c).unwrap();
        assert_eq!(p.graph.num_nodes(), 3);
        assert_eq!(p.graph.num_edges(), 0);
        assert_eq!(p.measured_count(), 0);
        assert_eq!(p.outputs().len(), 3);
    }

    #[test]
    fn trailing_cphase_joins_outputs() {
        let c = CircuitIR::new(2, vec![vec![Gate::CPhase { a: 0, b: 1 }]]);
        let p = compile(&c).unwrap();
        assert_eq!(p.graph.num_nodes(), 2);
        assert_eq!(p.graph.num_edges(), 1);
        let outs = p.outputs();
        assert!(p.graph.has_edge(outs[0], outs[1]));
    }

    #[test]
    fn node_and_edge_counts_are_structural() {
        let mut rng = crate::rng::RngStream::new(7, 0);
        let params = crate::mbqc::circuit::RandomCircuitParams::default();
        for _ in 0..100 {
            let c = crate::mbqc::circuit::random_circuit(&params, &mut rng);
            let p = compile(&c).unwrap();
            assert_eq!(p.graph.num_nodes(), 2 * c.u_gate_count() + c.num_qubits());
            let chain_edges: usize = (0..c.num_qubits())
                .map(|w| {
                    2 * c
                        .layers
                        .iter()
                        .flatten()
                        .filter(|g| matches!(g, Gate::U { qubit, .. } if *qubit == w))
                        .count()
                })
                .sum();
            assert_eq!(p.graph.num_edges(), chain_edges + c.cphase_count());
        }
    }

    #[test]
    fn sequential_bridges_on_same_node_rejected() {
        // Two controlled-phases with no rotation between them on wire 0
        // would both attach to the same cluster node.
        let c = CircuitIR::new(
            3,
            vec![
                vec![Gate::CPhase { a: 0, b: 1 }],
                vec![Gate::CPhase { a: 0, b: 2 }],
            ],
        );
        assert!(matches!(
            compile(&c),
            Err(Error::BridgeOverlap {
                first: 0,
                second: 1
            })
        ));
    }

    #[test]
    fn unbalanced_wires_have_consistent_dependencies() {
        // Wire 0 runs two rotations before the bridge, wire 1 none; the
        // compiled dependencies must still point strictly backwards.
        let c = CircuitIR::new(
            2,
            vec![
                vec![Gate::U {
                    qubit: 0,
                    alpha: 0.1,
                    alpha_prime: 0.2,
                }],
                vec![Gate::CPhase { a: 0, b: 1 }],
                vec![
                    Gate::U {
                        qubit: 0,
                        alpha: 0.3,
                        alpha_prime: 0.4,
                    },
                    Gate::U {
                        qubit: 1,
                        alpha: 0.5,
                        alpha_prime: 0.6,
                    },
                ],
            ],
        );
        let p = compile(&c).unwrap();
        assert!(pattern_is_consistent(&p));
        assert_eq!(p.graph.num_nodes(), 2 * 3 + 2);
    }

    #[test]
    fn layout_json_is_deterministic() {
        let c = standard_two_qubit_circuit([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]);
        let a = compile(&c).unwrap().to_layout_json();
        let b = compile(&c).unwrap().to_layout_json();
        assert_eq!(a, b);
        assert!(a.contains("\"bridges\""));
    }
}
