//! Hybrid sequential quantum-classical optimization of higher-order unconstrained
//! binary optimization (HUBO) problems.
//!
//! The pipeline chains simulated annealing, bias-field digitized counterdiabatic
//! quantum optimization on an exact statevector, and a memetic tabu search.

pub mod bfdcqo;
pub mod error;
pub mod exact;
pub mod format;
pub mod hubo;
pub mod instance_gen;
pub mod mts;
pub mod pauli;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod sa;
pub mod statevector;
pub mod timing;

pub use error::{Error, Result};
pub use hubo::{HuboInstance, SpinConfiguration, Term};

/// Default qubit cap for exhaustive enumeration and statevector simulation.
pub const DEFAULT_MAX_QUBITS: usize = 24;

/// Environment variable overriding [`DEFAULT_MAX_QUBITS`].
pub const MAX_QUBITS_ENV: &str = "HSQC_MAX_QUBITS";

pub fn qubit_cap() -> usize {
    std::env::var(MAX_QUBITS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_QUBITS)
}
