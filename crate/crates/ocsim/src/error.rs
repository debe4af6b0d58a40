//! Crate-wide error type.

use thiserror::Error;

use crate::graphstate::NodeId;
use crate::simcore::MAX_QUBITS;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // --- state-vector layer ---
    #[error("qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    QubitCountOutOfRange(usize),
    #[error("qubit index {index} out of range for {num_qubits}-qubit state")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("gate requires two distinct qubits, got {0} twice")]
    DuplicateQubit(usize),
    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("state norm {0:.3e} is degenerate; refusing to measure")]
    DegenerateState(f64),
    #[error("cannot force outcome {outcome}; its probability is {probability:.3e}")]
    ImpossibleOutcome { outcome: u8, probability: f64 },
    #[error("states have different sizes: {0} vs {1} qubits")]
    SizeMismatch(usize, usize),

    // --- cluster graphs ---
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("node {0} not present in graph")]
    NodeAbsent(NodeId),
    #[error("edge endpoints must differ, got {0} twice")]
    SelfLoop(NodeId),

    // --- circuits and measurement patterns ---
    #[error("layer {layer}: qubit {qubit} appears in more than one gate")]
    DuplicateQubitInLayer { layer: usize, qubit: usize },
    #[error("layer {layer}: qubit {qubit} takes part in two parallel cphase gates")]
    ParallelBridgeConflict { layer: usize, qubit: usize },
    #[error("layer {layer}: cphase endpoints ({a}, {b}) are invalid")]
    BadEndpoints { layer: usize, a: usize, b: usize },
    #[error("layer {layer}: qubit {qubit} out of range for a {num_qubits}-qubit circuit")]
    GateQubitOutOfRange {
        layer: usize,
        qubit: usize,
        num_qubits: usize,
    },
    #[error("cphase gates in layers {first} and {second} land on the same cluster node; a qubit may carry at most one vertical bridge between rotations")]
    BridgeOverlap { first: usize, second: usize },
    #[error("pattern node {node} needs the outcome of node {dependency}, which is unmeasured at that point")]
    PatternInconsistent { node: NodeId, dependency: NodeId },
    #[error("pattern has {0} nodes, above the {MAX_QUBITS}-qubit state-vector limit")]
    PatternTooLarge(usize),

    // --- growth model ---
    #[error("gate model parameter n must be 1 or 2, got {0}")]
    UnsupportedModel(u32),
    #[error("build order must list every target node exactly once (node {0} mismatched)")]
    BuildOrderMismatch(NodeId),
    #[error("target node {node} has {bonds} bonds into the already-built prefix; growth supports at most 2")]
    GrowthOrderUnsupported { node: NodeId, bonds: usize },
    #[error("target node {node} has degree {degree}; rebuild after failures needs degree <= 3")]
    GrowthDegreeUnsupported { node: NodeId, degree: usize },
    #[error("growth did not finish within {0} site attempts (non-viable drift?)")]
    GrowthStalled(u64),

    // --- microclusters ---
    #[error("microcluster needs at least one dangling node")]
    NoDangling,
    #[error("target probability must lie strictly between 0 and 1, got {0}")]
    BadProbabilityTarget(f64),

    // --- Fock layer ---
    #[error("mode {mode} out of range for {num_modes} modes")]
    ModeOutOfRange { mode: usize, num_modes: usize },
    #[error("dual-rail qubit needs two distinct modes, got {0} twice")]
    DuplicateMode(usize),
    #[error("operation would push an occupation past the cutoff {cutoff} with weight {weight:.3e}")]
    CutoffViolation { cutoff: u8, weight: f64 },
    #[error("state leaks out of the dual-rail subspace with weight {weight:.3e}")]
    Leakage { weight: f64 },
    #[error("logical amplitudes must be normalised: |c0|^2 + |c1|^2 = {0}")]
    NotNormalized(f64),

    // --- file formats ---
    #[error("graph file line {line}: {msg}")]
    GraphParse { line: usize, msg: String },
    #[error("circuit file: {0}")]
    CircuitParse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
