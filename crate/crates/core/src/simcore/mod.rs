//! Dense statevector simulation.
//!
//! Basis convention: qubit `q` of an `n`-qubit register is bit `n − 1 − q` of
//! the basis index, so qubit 0 is the most significant bit and `|0^q 1^{n−q}⟩`
//! is index `2^{n−q} − 1`.

mod gate;
mod observable;
mod sampling;
mod state;

pub use gate::{apply_circuit, inverse_circuit, Gate};
pub use observable::{Observable, Pauli, PauliString};
pub use sampling::{
    permuted_observable, random_transpositions, sample_haar_state, sample_unitary, HaarConvention, Unitary,
};
pub use state::StateVector;

pub(crate) const MODULE: &str = "simcore";

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 13;

#[inline]
pub(crate) fn qubit_mask(n_qubits: usize, qubit: usize) -> usize {
    1usize << (n_qubits - 1 - qubit)
}
