//! Topology-aware synthesis of unitaries into CNOT + single-qubit circuits
//! using the block-ZXZ decomposition with connectivity-aware uniformly
//! controlled rotations.
//!
//! The entry point is [`synthesize`]; [`synthesize_with`] exposes options
//! and returns the placement and statistics alongside the circuit.

pub mod blockzxz;
pub mod circuit;
pub mod error;
pub mod gray;
pub mod numerics;
pub mod placement;
pub mod report;
pub mod topology;

pub use blockzxz::synth::{synthesize, synthesize_with, SynthOptions, SynthResult, SynthStats};
pub use circuit::{circuit_to_unitary, count_gates, export_qasm, parse_qasm, synthesis_residual, validate_connectivity, Circuit, Gate, GateKind};
pub use error::{Error, Result};
pub use numerics::{haar_random_unitary, ComplexMatrix, C64};
pub use placement::{select_placement, Placement};
pub use report::{BenchRecord, BenchReport};
pub use topology::{CouplingMap, Topology};
