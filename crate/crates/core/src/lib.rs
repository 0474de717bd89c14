//! Qudit state tomography from ancilla-qubit statistics.
//!
//! A `d`-level state `ρ` is expanded in the `d²` Hermitian Heisenberg-Weyl
//! observables `Q_lm` built from the generalized Pauli operators. Each
//! coefficient `⟨Q_lm⟩` is read from a single ancilla qubit that controls
//! `Z^l X^m` on the qudit inside a one-clean-qubit circuit, so the qudit
//! itself is never measured. The [`optics`] module compiles every
//! `Z^l X^m` into spiral phase plates, OAM sorters and Dove-prism pairs and
//! checks by simulation that the optical layout realizes the same gate.

pub mod dqc1;
pub mod error;
pub mod hw_basis;
pub mod optics;
pub mod qmath;
pub mod rng;
pub mod tomography;
pub mod wire;

pub use error::{Error, Result};
