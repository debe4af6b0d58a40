//! Circuit intermediate representation, validation and direct simulation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::simcore::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Gate {
    /// `X(alpha') Z(alpha)` on one qubit.
    #[serde(rename = "u")]
    U {
        qubit: usize,
        alpha: f64,
        alpha_prime: f64,
    },
    /// Controlled phase between two qubits.
    #[serde(rename = "cz")]
    CPhase { a: usize, b: usize },
}

/// Layered circuit over `qubits` lines, all starting in `|+>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitIR {
    pub qubits: usize,
    pub layers: Vec<Vec<Gate>>,
}

impl CircuitIR {
    pub fn new(qubits: usize, layers: Vec<Vec<Gate>>) -> Self {
        Self { qubits, layers }
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn u_gate_count(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .filter(|g| matches!(g, Gate::U { .. }))
            .count()
    }

    pub fn cphase_count(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .filter(|g| matches!(g, Gate::CPhase { .. }))
            .count()
    }

    /// Check the layering rules: a qubit appears in at most one gate per
    /// layer, never in two parallel controlled-phase gates, endpoints are
    /// distinct and in range, and every angle is finite.
    pub fn validate(&self) -> Result<()> {
        if self.qubits == 0 {
            return Err(Error::QubitCountOutOfRange(0));
        }
        for (layer_idx, layer) in self.layers.iter().enumerate() {
            // Which gate kind already claimed each qubit in this layer.
            let mut claimed: Vec<Option<bool>> = vec![None; self.qubits]; // true = cphase
            let mut claim = |qubit: usize, is_cz: bool| -> Result<()> {
                if qubit >= self.qubits {
                    return Err(Error::GateQubitOutOfRange {
                        layer: layer_idx,
                        qubit,
                        num_qubits: self.qubits,
                    });
                }
                match claimed[qubit] {
                    None => {
                        claimed[qubit] = Some(is_cz);
                        Ok(())
                    }
                    Some(true) if is_cz => Err(Error::ParallelBridgeConflict {
                        layer: layer_idx,
                        qubit,
                    }),
                    Some(_) => Err(Error::DuplicateQubitInLayer {
                        layer: layer_idx,
                        qubit,
                    }),
                }
            };
            for gate in layer {
                match *gate {
                    Gate::U {
                        qubit,
                        alpha,
                        alpha_prime,
                    } => {
                        if !alpha.is_finite() || !alpha_prime.is_finite() {
                            return Err(Error::NonFiniteAngle(if alpha.is_finite() {
                                alpha_prime
                            } else {
                                alpha
                            }));
                        }
                        claim(qubit, false)?;
                    }
                    Gate::CPhase { a, b } => {
                        if a == b || a >= self.qubits || b >= self.qubits {
                            return Err(Error::BadEndpoints {
                                layer: layer_idx,
                                a,
                                b,
                            });
                        }
                        claim(a, true)?;
                        claim(b, true)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let circuit: CircuitIR =
            serde_json::from_str(text).map_err(|e| Error::CircuitParse(e.to_string()))?;
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialises")
    }
}

/// Apply the circuit gate by gate to `|+>^n`; the oracle every pattern
/// execution is compared against.
pub fn direct_simulate(circuit: &CircuitIR) -> Result<StateVector> {
    circuit.validate()?;
    let mut state = StateVector::new_plus_state(circuit.qubits)?;
    for layer in &circuit.layers {
        for gate in layer {
            match *gate {
                Gate::U {
                    qubit,
                    alpha,
                    alpha_prime,
                } => {
                    state.apply_u(qubit, alpha, alpha_prime)?;
                }
                Gate::CPhase { a, b } => {
                    state.cphase(a, b)?;
                }
            }
        }
    }
    Ok(state)
}

/// The standard two-qubit example: a column of single-qubit gates, a
/// controlled-phase, and another column. Angles are
/// `[a1, a2, a3, a4, b1, b2, b3, b4]` for `U(a1,a2)`/`U(a3,a4)` on the top
/// wire and `U(b1,b2)`/`U(b3,b4)` on the bottom wire.
pub fn standard_two_qubit_circuit(angles: [f64; 8]) -> CircuitIR {
    CircuitIR::new(
        2,
        vec![
            vec![
                Gate::U {
                    qubit: 0,
                    alpha: angles[0],
                    alpha_prime: angles[1],
                },
                Gate::U {
                    qubit: 1,
                    alpha: angles[4],
                    alpha_prime: angles[5],
                },
            ],
            vec![Gate::CPhase { a: 0, b: 1 }],
            vec![
                Gate::U {
                    qubit: 0,
                    alpha: angles[2],
                    alpha_prime: angles[3],
                },
                Gate::U {
                    qubit: 1,
                    alpha: angles[6],
                    alpha_prime: angles[7],
                },
            ],
        ],
    )
}

/// Family of random test circuits.
#[derive(Clone, Debug)]
pub struct RandomCircuitParams {
    pub min_qubits: usize,
    pub max_qubits: usize,
    pub max_u_columns: usize,
    pub max_cphase: usize,
    /// Cap on cluster nodes (2 per U plus one output per qubit).
    pub max_nodes: usize,
}

impl Default for RandomCircuitParams {
    fn default() -> Self {
        Self {
            min_qubits: 2,
            max_qubits: 3,
            max_u_columns: 4,
            max_cphase: 2,
            max_nodes: 16,
        }
    }
}

/// Random layered circuit with angles uniform in `[0, 2pi)`.
///
/// Wires touched by a controlled-phase always receive a rotation in the
/// next rotation column (budget permitting, reserved up front), so no two
/// bridges ever land on the same cluster node and the circuit compiles.
pub fn random_circuit(params: &RandomCircuitParams, rng: &mut RngStream) -> CircuitIR {
    use std::f64::consts::TAU;
    let qubits = rng.gen_range(params.min_qubits..=params.max_qubits);
    let u_columns = rng.gen_range(1..=params.max_u_columns);
    let mut u_budget = (params.max_nodes.saturating_sub(qubits)) / 2;

    let mut random_u = |qubit: usize, rng: &mut RngStream| Gate::U {
        qubit,
        alpha: rng.gen::<f64>() * TAU,
        alpha_prime: rng.gen::<f64>() * TAU,
    };

    let mut layers: Vec<Vec<Gate>> = Vec::new();
    let mut cphase_left = rng.gen_range(0..=params.max_cphase);
    let mut pending_u: Vec<usize> = Vec::new();
    let mut u_count = 0usize;
    for col in 0..u_columns {
        let mut layer = Vec::new();
        for qubit in 0..qubits {
            let mandatory = pending_u.contains(&qubit);
            let p = if col == 0 { 0.9 } else { 0.6 };
            if mandatory || (u_budget > 0 && rng.gen::<f64>() < p) {
                layer.push(random_u(qubit, rng));
                u_count += 1;
                if !mandatory {
                    u_budget -= 1;
                }
            }
        }
        pending_u.clear();
        if !layer.is_empty() {
            layers.push(layer);
        }
        // At most one controlled-phase per gap; reserve budget for the two
        // follow-up rotations that keep its bridge isolated.
        if cphase_left > 0 && u_budget >= 2 && rng.gen::<f64>() < 0.5 {
            let a = rng.gen_range(0..qubits);
            let b = (a + rng.gen_range(1..qubits)) % qubits;
            layers.push(vec![Gate::CPhase {
                a: a.min(b),
                b: a.max(b),
            }]);
            cphase_left -= 1;
            if col + 1 < u_columns {
                pending_u = vec![a, b];
                u_budget -= 2;
            }
        }
    }
    if u_count == 0 {
        layers.insert(0, vec![random_u(0, rng)]);
    }
    let circuit = CircuitIR::new(qubits, layers);
    debug_assert!(circuit.validate().is_ok());
    circuit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphstate::{cluster_amplitudes, ClusterGraph, NodeId};
    use crate::simcore::{equal_up_to_global_phase, fidelity, zrot_matrix};
    use num_complex::Complex64;
    use std::f64::consts::FRAC_PI_2;

    use super::standard_two_qubit_circuit as two_qubit_standard;

    #[test]
    fn standard_circuit_validates() {
        assert!(two_qubit_standard([0.0; 8]).validate().is_ok());
    }

    #[test]
    fn parallel_bridges_rejected() {
        let c = CircuitIR::new(
            3,
            vec![vec![Gate::CPhase { a: 0, b: 1 }, Gate::CPhase { a: 1, b: 2 }]],
        );
        assert!(matches!(
            c.validate(),
            Err(Error::ParallelBridgeConflict { layer: 0, qubit: 1 })
        ));
    }

    #[test]
    fn self_cphase_rejected() {
        let c = CircuitIR::new(3, vec![vec![Gate::CPhase { a: 2, b: 2 }]]);
        assert!(matches!(
            c.validate(),
            Err(Error::BadEndpoints {
                layer: 0,
                a: 2,
                b: 2
            })
        ));
    }

    #[test]
    fn duplicate_qubit_rejected() {
        let c = CircuitIR::new(
            2,
            vec![vec![
                Gate::U {
                    qubit: 0,
                    alpha: 0.0,
                    alpha_prime: 0.0,
                },
                Gate::CPhase { a: 0, b: 1 },
            ]],
        );
        assert!(matches!(
            c.validate(),
            Err(Error::DuplicateQubitInLayer { layer: 0, qubit: 0 })
        ));
    }

    #[test]
    fn out_of_range_qubit_rejected() {
        let c = CircuitIR::new(
            1,
            vec![vec![Gate::U {
                qubit: 3,
                alpha: 0.0,
                alpha_prime: 0.0,
            }]],
        );
        assert!(matches!(
            c.validate(),
            Err(Error::GateQubitOutOfRange { qubit: 3, .. })
        ));
    }

    #[test]
    fn empty_circuit_simulates_to_plus() {
        let c = CircuitIR::new(3, vec![]);
        let s = direct_simulate(&c).unwrap();
        let plus = StateVector::new_plus_state(3).unwrap();
        assert!((fidelity(&s, &plus).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_cphase_gives_two_node_cluster() {
        let c = CircuitIR::new(2, vec![vec![Gate::CPhase { a: 0, b: 1 }]]);
        let s = direct_simulate(&c).unwrap();
        let g = ClusterGraph::from_edges([(NodeId(0), NodeId(1))]).unwrap();
        let cluster = cluster_amplitudes(&g).unwrap();
        assert!((fidelity(&s, &cluster).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standard_circuit_against_matrix_oracle() {
        // Angles (pi/2, 0, 0, 0) on the top wire, all zero below: the state
        // is CZ applied after Z(pi/2) on qubit 0, worked out by hand.
        let c = two_qubit_standard([FRAC_PI_2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let got = direct_simulate(&c).unwrap();

        let z = zrot_matrix(FRAC_PI_2);
        let mut expect = StateVector::new_plus_state(2).unwrap();
        expect.apply_single_qubit(0, z).unwrap();
        expect.cphase(0, 1).unwrap();
        assert!(equal_up_to_global_phase(&got, &expect, 1e-12).unwrap());

        // Explicit amplitude check of the same state.
        let half = Complex64::new(0.5, 0.0);
        let phase = Complex64::from_polar(1.0, FRAC_PI_2);
        let want = [half, half * phase, half, -half * phase];
        for (a, w) in got.amplitudes().iter().zip(want) {
            let scale = got.amplitudes()[0] / want[0];
            assert!((a - w * scale).norm() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_and_errors() {
        let c = two_qubit_standard([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]);
        let text = c.to_json();
        let back = CircuitIR::from_json(&text).unwrap();
        assert_eq!(back, c);

        assert!(matches!(
            CircuitIR::from_json("{\"qubits\": 2"),
            Err(Error::CircuitParse(_))
        ));
        let bad_angle = r#"{"qubits":1,"layers":[[{"type":"u","qubit":0,"alpha":"x","alpha_prime":0}]]}"#;
        assert!(matches!(
            CircuitIR::from_json(bad_angle),
            Err(Error::CircuitParse(_))
        ));
    }

    #[test]
    fn random_circuits_validate_and_fit() {
        let params = RandomCircuitParams::default();
        let mut rng = RngStream::new(123, 0);
        for _ in 0..200 {
            let c = random_circuit(&params, &mut rng);
            assert!(c.validate().is_ok());
            assert!(2 * c.u_gate_count() + c.num_qubits() <= params.max_nodes);
            assert!(c.u_gate_count() >= 1);
        }
    }
}
