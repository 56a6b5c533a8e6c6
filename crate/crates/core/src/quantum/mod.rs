//! Dense complex linear algebra over small Hilbert spaces.

mod layout;
mod matrix;
mod sparse;
mod state;

pub use layout::{Register, RegisterLabel, RegisterLayout};
pub use matrix::{kron, matrix_exponential, ComplexMatrix, HermitianEigen, HERMITIAN_TOL};
pub use sparse::CsrMatrix;
pub use state::{fidelity, fidelity_pure, partial_trace, partial_trace_dims, DensityMatrix, StateVector};

pub type C64 = num_complex::Complex64;

/// Largest Hilbert-space dimension any dense routine will materialize.
pub const MAX_DIM: usize = 1 << 14;

pub(crate) fn check_budget(dim: usize) -> crate::Result<()> {
    if dim > MAX_DIM {
        return Err(crate::Error::DimensionBudget { dim, budget: MAX_DIM });
    }
    Ok(())
}

/// Number of qubits needed to hold `levels` basis states.
pub fn ceil_log2(levels: usize) -> usize {
    if levels <= 1 {
        0
    } else {
        (usize::BITS - (levels - 1).leading_zeros()) as usize
    }
}
