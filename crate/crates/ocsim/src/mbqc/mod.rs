//! Compilation of small circuits into cluster layouts and adaptive
//! measurement patterns, plus their execution against the state-vector
//! oracle.
//!
//! Circuits are layered lists of single-qubit gates `U(alpha, alpha')`
//! (Z-rotation then X-rotation) and controlled-phase gates. Each circuit
//! qubit becomes a horizontal chain of cluster nodes: two nodes per `U`,
//! measured in the rotated bases `H Z(+-alpha)` then `H Z(+-alpha')`, and a
//! final unmeasured output node. A controlled-phase becomes a single
//! vertical edge joining the two rows at the first node following it. Signs
//! and the output Pauli byproducts are classical functions of earlier
//! outcomes; their bookkeeping is validated operationally by comparing
//! corrected pattern output against direct simulation over every outcome
//! branch.

mod circuit;
mod execute;
mod pattern;

pub use circuit::{
    direct_simulate, random_circuit, standard_two_qubit_circuit, CircuitIR, Gate,
    RandomCircuitParams,
};
pub use execute::{
    execute_pattern, execute_pattern_forced, verify_equivalence, verify_equivalence_exhaustive,
    EquivalenceReport, ExecutionResult, ExhaustiveReport,
};
pub use pattern::{compile, MeasuredNode, MeasurementPattern, NodeRole, OutputNode, PatternNode};
