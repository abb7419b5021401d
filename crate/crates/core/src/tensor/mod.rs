//! Dense complex linear algebra over multi-leg tensor-product systems.

mod eigen;
mod haar;
mod layout;
mod matrix;
mod state;
mod subspace;

pub use eigen::{eigh, Eigh};
pub use haar::{haar_state, haar_unitary};
pub use layout::SystemLayout;
pub use matrix::{kron, partial_trace, reduce_kets, ComplexMatrix, C64};
pub use state::{entropy, entropy_of_matrix, max_entangled_ket, shannon_entropy, uhlmann_fidelity, DensityOperator};
pub use subspace::SubspaceBasis;

/// Tolerance on Hermiticity, positivity and trace of density operators.
pub const STATE_TOL: f64 = 1e-10;
