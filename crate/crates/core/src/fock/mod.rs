//! Truncated Fock spaces, sparse operators and the Hamiltonians built on them.

mod basis;
mod dilation;
mod hamiltonian;
mod ops;
mod sparse;
mod split;

pub use basis::{basis_dimension, enumerate_basis, Caps, FermionSigns, FockBasis, Ladder};
pub use dilation::{
    build_a_tau, build_b_weight, build_commutator, dilation_generator, matrix_commutator,
    one_particle_dilation, position_laplacian, BWeight,
};
pub use hamiltonian::{
    band_kernel, build_h0, build_hamiltonian, build_hi, free_energies, keep_high, HamiltonianVariant,
};
pub use ops::{ladder_operator, number_operator, second_quantize};
pub use sparse::SparseOperator;
pub use split::{sector_split, SectorSplit};
