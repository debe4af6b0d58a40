//! Execution of measurement patterns and equivalence checking against
//! direct simulation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graphstate::{build_cluster_state, ByproductRecord, NodeId};
use crate::mbqc::circuit::{direct_simulate, CircuitIR};
use crate::mbqc::pattern::{compile, MeasurementPattern, NodeRole};
use crate::rng::RngStream;
use crate::simcore::{fidelity, Pauli, StateVector, MAX_QUBITS};

/// Outcome of one pattern run.
#[derive(Clone, Debug)]
pub struct ExecutionResult {
    /// Residual state on the output nodes, one qubit per circuit row.
    pub output_state: StateVector,
    /// Pauli byproducts on the output nodes.
    pub byproducts: ByproductRecord,
    /// Measurement outcome of every non-output node.
    pub outcomes: BTreeMap<NodeId, u8>,
}

enum OutcomeSource<'a> {
    Random(&'a mut RngStream),
    Forced(&'a BTreeMap<NodeId, u8>),
}

/// Run the pattern with Born-rule outcomes.
pub fn execute_pattern(p: &MeasurementPattern, rng: &mut RngStream) -> Result<ExecutionResult> {
    execute_with(p, OutcomeSource::Random(rng))
}

/// Run the pattern with every outcome forced; used for exhaustive branch
/// checks.
pub fn execute_pattern_forced(
    p: &MeasurementPattern,
    outcomes: &BTreeMap<NodeId, u8>,
) -> Result<ExecutionResult> {
    execute_with(p, OutcomeSource::Forced(outcomes))
}

fn execute_with(p: &MeasurementPattern, mut source: OutcomeSource) -> Result<ExecutionResult> {
    if p.graph.num_nodes() > MAX_QUBITS {
        return Err(Error::PatternTooLarge(p.graph.num_nodes()));
    }
    let mut state = build_cluster_state(&p.graph)?;
    let mut outcomes: BTreeMap<NodeId, u8> = BTreeMap::new();

    for node in p.measured_in_time_order() {
        let NodeRole::Measured(record) = &p.nodes[&node].role else {
            unreachable!("time order yields measured nodes");
        };
        let mut parity = 0u8;
        for dep in &record.sign_deps {
            parity ^= outcomes.get(dep).copied().ok_or(Error::PatternInconsistent {
                node,
                dependency: *dep,
            })?;
        }
        let sign = if parity == 1 { -1.0 } else { 1.0 };
        let q = p.graph.qubit_index(node).expect("pattern node in graph");
        state.rotate_z(q, sign * record.base_angle)?;
        state.hadamard(q)?;
        let measurement = match &mut source {
            OutcomeSource::Random(rng) => state.measure_z(q, rng)?,
            OutcomeSource::Forced(map) => {
                let &m = map.get(&node).ok_or(Error::PatternInconsistent {
                    node,
                    dependency: node,
                })?;
                state.measure_z_forced(q, m)?
            }
        };
        outcomes.insert(node, measurement.outcome);
    }

    let mut byproducts = ByproductRecord::new();
    for out in p.outputs() {
        let NodeRole::Output(deps) = &p.nodes[&out].role else {
            unreachable!();
        };
        let parity = |set: &std::collections::BTreeSet<NodeId>| {
            set.iter().fold(0u8, |acc, d| acc ^ outcomes[d])
        };
        byproducts.add_x(out, parity(&deps.x_deps));
        byproducts.add_z(out, parity(&deps.z_deps));
    }

    let collapsed: BTreeMap<usize, u8> = outcomes
        .iter()
        .map(|(n, &m)| (p.graph.qubit_index(*n).unwrap(), m))
        .collect();
    let output_state = if collapsed.is_empty() {
        state
    } else {
        state.factor_collapsed(&collapsed)?
    };

    Ok(ExecutionResult {
        output_state,
        byproducts,
        outcomes,
    })
}

/// Undo the byproducts on an execution result's output state.
pub fn corrected_output(p: &MeasurementPattern, result: &ExecutionResult) -> Result<StateVector> {
    let mut state = result.output_state.clone();
    for (row, out) in p.outputs().into_iter().enumerate() {
        let e = result.byproducts.get(out);
        if e.x == 1 {
            state.pauli(row, Pauli::X)?;
        }
        if e.z == 1 {
            state.pauli(row, Pauli::Z)?;
        }
    }
    Ok(state)
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub trials: u64,
    pub min_fidelity: f64,
    pub mean_fidelity: f64,
    /// Count per observed outcome bitstring (time order).
    pub branch_counts: BTreeMap<String, u64>,
}

/// Execute the compiled pattern repeatedly with random outcomes, undo the
/// byproducts, and compare against direct simulation.
pub fn verify_equivalence(
    circuit: &CircuitIR,
    trials: u64,
    master_seed: u64,
) -> Result<EquivalenceReport> {
    let pattern = compile(circuit)?;
    let ideal = direct_simulate(circuit)?;
    let time_order = pattern.measured_in_time_order();

    let mut min_fidelity = f64::INFINITY;
    let mut sum = 0.0;
    let mut branch_counts: BTreeMap<String, u64> = BTreeMap::new();
    for trial in 0..trials {
        let mut rng = RngStream::new(master_seed, trial);
        let result = execute_pattern(&pattern, &mut rng)?;
        let corrected = corrected_output(&pattern, &result)?;
        let fid = fidelity(&corrected, &ideal)?;
        min_fidelity = min_fidelity.min(fid);
        sum += fid;
        let key: String = time_order
            .iter()
            .map(|n| char::from(b'0' + result.outcomes[n]))
            .collect();
        *branch_counts.entry(key).or_insert(0) += 1;
    }
    Ok(EquivalenceReport {
        trials,
        min_fidelity,
        mean_fidelity: sum / trials as f64,
        branch_counts,
    })
}

#[derive(Clone, Debug)]
pub struct ExhaustiveReport {
    pub branches: u64,
    pub min_fidelity: f64,
}

/// Force every one of the `2^M` outcome branches and verify the corrected
/// output against direct simulation. The brute-force oracle for the sign
/// and byproduct bookkeeping.
pub fn verify_equivalence_exhaustive(circuit: &CircuitIR) -> Result<ExhaustiveReport> {
    let pattern = compile(circuit)?;
    let ideal = direct_simulate(circuit)?;
    let measured = pattern.measured_in_time_order();
    assert!(
        measured.len() < 24,
        "exhaustive enumeration over {} nodes is unreasonable",
        measured.len()
    );
    let mut min_fidelity = f64::INFINITY;
    let branches = 1u64 << measured.len();
    for branch in 0..branches {
        let outcomes: BTreeMap<NodeId, u8> = measured
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, ((branch >> i) & 1) as u8))
            .collect();
        let result = execute_pattern_forced(&pattern, &outcomes)?;
        let corrected = corrected_output(&pattern, &result)?;
        min_fidelity = min_fidelity.min(fidelity(&corrected, &ideal)?);
    }
    Ok(ExhaustiveReport {
        branches,
        min_fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphstate::{cluster_amplitudes, ClusterGraph};
    use crate::mbqc::circuit::{random_circuit, standard_two_qubit_circuit, RandomCircuitParams};
    use std::f64::consts::TAU;

    #[test]
    fn identity_wire_outputs_plus_on_all_branches() {
        // One zero-angle rotation pair on one wire: every forced branch must
        // give |+> after corrections.
        let c = CircuitIR::new(
            1,
            vec![vec![crate::mbqc::Gate::U {
                qubit: 0,
                alpha: 0.0,
                alpha_prime: 0.0,
            }]],
        );
        let report = verify_equivalence_exhaustive(&c).unwrap();
        assert_eq!(report.branches, 4);
        assert!(report.min_fidelity >= 1.0 - 1e-10, "{}", report.min_fidelity);
    }

    #[test]
    fn standard_circuit_zero_angles_gives_cluster_state() {
        let c = standard_two_qubit_circuit([0.0; 8]);
        let report = verify_equivalence_exhaustive(&c).unwrap();
        assert_eq!(report.branches, 256);
        assert!(report.min_fidelity >= 1.0 - 1e-10);
        // Sanity: the ideal itself is the two-node cluster state.
        let ideal = direct_simulate(&c).unwrap();
        let cluster = cluster_amplitudes(
            &ClusterGraph::from_edges([(NodeId(0), NodeId(1))]).unwrap(),
        )
        .unwrap();
        assert!((fidelity(&ideal, &cluster).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_outcomes_use_positive_signs() {
        let c = standard_two_qubit_circuit([0.3, 1.1, 0.7, 0.2, 0.9, 0.4, 1.3, 0.8]);
        let pattern = compile(&c).unwrap();
        let zeros: BTreeMap<NodeId, u8> = pattern
            .measured_in_time_order()
            .into_iter()
            .map(|n| (n, 0))
            .collect();
        let result = execute_pattern_forced(&pattern, &zeros).unwrap();
        // All-zero outcomes mean every sign parity is even and all
        // byproducts vanish.
        assert!(result.byproducts.is_identity());
        let corrected = corrected_output(&pattern, &result).unwrap();
        let ideal = direct_simulate(&c).unwrap();
        assert!(fidelity(&corrected, &ideal).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn random_angle_standard_circuit_random_trials() {
        let c = standard_two_qubit_circuit([0.17, 2.9, 4.2, 1.4, 5.5, 0.6, 3.3, 2.2]);
        let report = verify_equivalence(&c, 64, 42).unwrap();
        assert!(report.min_fidelity >= 1.0 - 1e-9, "{}", report.min_fidelity);
        assert!(report.branch_counts.values().sum::<u64>() == 64);
    }

    #[test]
    fn exhaustive_branches_on_random_small_circuits() {
        let params = RandomCircuitParams {
            min_qubits: 2,
            max_qubits: 2,
            max_u_columns: 2,
            max_cphase: 2,
            max_nodes: 10,
        };
        let mut rng = RngStream::new(7, 100);
        for _ in 0..10 {
            let c = random_circuit(&params, &mut rng);
            let report = verify_equivalence_exhaustive(&c).unwrap();
            assert!(
                report.min_fidelity >= 1.0 - 1e-10,
                "circuit {c:?} fidelity {}",
                report.min_fidelity
            );
        }
    }

    #[test]
    fn unbalanced_bridge_circuit_exhaustive() {
        // Bridge endpoints in different grid columns exercise the cross-wire
        // dependency bookkeeping.
        let c = CircuitIR::new(
            2,
            vec![
                vec![crate::mbqc::Gate::U {
                    qubit: 0,
                    alpha: 1.3,
                    alpha_prime: 0.4,
                }],
                vec![crate::mbqc::Gate::CPhase { a: 0, b: 1 }],
                vec![
                    crate::mbqc::Gate::U {
                        qubit: 0,
                        alpha: 0.8,
                        alpha_prime: 2.1,
                    },
                    crate::mbqc::Gate::U {
                        qubit: 1,
                        alpha: 5.1,
                        alpha_prime: 0.2,
                    },
                ],
            ],
        );
        let report = verify_equivalence_exhaustive(&c).unwrap();
        assert!(report.min_fidelity >= 1.0 - 1e-10, "{}", report.min_fidelity);
    }

    #[test]
    fn empty_circuit_executes_to_plus() {
        let c = CircuitIR::new(2, vec![]);
        let pattern = compile(&c).unwrap();
        let mut rng = RngStream::new(1, 0);
        let result = execute_pattern(&pattern, &mut rng).unwrap();
        assert!(result.outcomes.is_empty());
        assert!(result.byproducts.is_identity());
        let plus = StateVector::new_plus_state(2).unwrap();
        assert!((fidelity(&result.output_state, &plus).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outcome_frequencies_are_fair() {
        let c = standard_two_qubit_circuit([1.0, 0.5, 0.25, 2.0, 0.75, 1.5, 2.5, 3.0]);
        let pattern = compile(&c).unwrap();
        let nodes = pattern.measured_in_time_order();
        let mut ones: BTreeMap<NodeId, u64> = nodes.iter().map(|&n| (n, 0)).collect();
        let trials = 10_000u64;
        for trial in 0..trials {
            let mut rng = RngStream::new(31, trial);
            let result = execute_pattern(&pattern, &mut rng).unwrap();
            for (&n, &m) in &result.outcomes {
                *ones.get_mut(&n).unwrap() += u64::from(m);
            }
        }
        let sigma = 0.5 / (trials as f64).sqrt();
        for (&n, &count) in &ones {
            let freq = count as f64 / trials as f64;
            assert!((freq - 0.5).abs() < 4.0 * sigma, "node {n} freq {freq}");
        }
    }

    #[test]
    fn execution_is_deterministic_per_seed() {
        let c = standard_two_qubit_circuit([0.9, 0.1, 1.9, 2.4, 0.3, 1.2, 2.8, 0.05]);
        let a = verify_equivalence(&c, 16, 5).unwrap();
        let b = verify_equivalence(&c, 16, 5).unwrap();
        assert_eq!(a.branch_counts, b.branch_counts);
        assert_eq!(a.min_fidelity.to_bits(), b.min_fidelity.to_bits());
        let c2 = verify_equivalence(&c, 16, 6).unwrap();
        assert!(a.branch_counts != c2.branch_counts);
    }

    #[test]
    fn oversized_pattern_rejected() {
        // 11 single-qubit gates on one wire: 23 nodes.
        let gates: Vec<Vec<crate::mbqc::Gate>> = (0..11)
            .map(|_| {
                vec![crate::mbqc::Gate::U {
                    qubit: 0,
                    alpha: 0.0,
                    alpha_prime: 0.0,
                }]
            })
            .collect();
        let c = CircuitIR::new(1, gates);
        let pattern = compile(&c).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert!(matches!(
            execute_pattern(&pattern, &mut rng),
            Err(Error::PatternTooLarge(23))
        ));
    }

    #[test]
    fn random_circuits_random_angles_match_oracle() {
        let params = RandomCircuitParams::default();
        let mut rng = RngStream::new(2024, 0);
        for case in 0..20 {
            let c = random_circuit(&params, &mut rng);
            let report = verify_equivalence(&c, 8, 9_000 + case).unwrap();
            assert!(
                report.min_fidelity >= 1.0 - 1e-9,
                "case {case}: {c:?} min fidelity {}",
                report.min_fidelity
            );
        }
    }

    #[test]
    fn byproduct_angles_wander_through_tau() {
        // Angles above 2 pi and negative angles must behave identically
        // modulo the rotation period.
        let base = standard_two_qubit_circuit([0.4, 1.0, 2.0, 0.3, 1.1, 0.9, 0.2, 2.7]);
        let shifted = standard_two_qubit_circuit([
            0.4 + TAU,
            1.0 - TAU,
            2.0,
            0.3,
            1.1,
            0.9 + TAU,
            0.2,
            2.7 - TAU,
        ]);
        let a = direct_simulate(&base).unwrap();
        let b = direct_simulate(&shifted).unwrap();
        // Z/X rotations are 4pi-periodic as matrices but 2pi shifts only
        // change global phase.
        assert!(crate::simcore::equal_up_to_global_phase(&a, &b, 1e-10).unwrap());
    }
}
