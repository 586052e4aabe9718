//! Dense complex linear algebra for states, unitaries, channels and
//! controlled operations on the joint control ⊗ target space.

mod matrix;
pub mod random;
mod state;

pub(crate) use matrix::kernel;
pub use matrix::{tensor, ComplexMatrix, Unitary, C_ONE, C_ZERO};
pub(crate) use state::apply_kraus;
pub use state::{
    apply_channel, basis_vector, kraus_residual, materialize_controlled, plus_state,
    povm_expectation, ControlledUnitary, DensityMatrix,
};
