//! Simulation of driven Kerr-cat qubits: spectra and the robust line,
//! closed-form cat quantities, pulse schemes, unitary propagation, detuning
//! robustness metrics, exhaustive pulse optimization, spectral noise
//! analysis and a two-qubit echo gate.

// `!(x > 0.0)` checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod cat;
pub mod error;
pub mod fidelity;
pub mod fock;
pub mod interp;
pub mod linalg;
pub mod noise;
pub mod optimizer;
pub mod propagator;
pub mod pulse;
pub mod spectral;
pub mod table;
pub mod twoqubit;

pub use error::{Error, Result};
pub use fock::{Channel, ChannelValues, FockSpace, HamiltonianAssembly, KerrCatParams};
