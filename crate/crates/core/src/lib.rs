//! Canonical form and constructive separability certificates for PPT states of
//! rank `N` on `C^K ⊗ C^M ⊗ C^N`.
//!
//! The pipeline is:
//!
//! 1. [`ppt::ppt_report`] checks positivity of every partial transpose.
//! 2. [`canonical::find_witness`] looks for a product pair `(e_A, f_B)` whose
//!    sandwich `⟨e_A, f_B|ρ|e_A, f_B⟩` has full rank `N`, and
//!    [`canonical::rotate_to_corner`] moves it to the `(K−1, M−1)` corner.
//! 3. [`canonical::extract_canonical`] filters subsystem C so the corner block
//!    is the identity and reads off commuting normal generators, verifying
//!    `ρ_f = T†T`.
//! 4. [`decompose::decompose`] diagonalizes the generators jointly and emits a
//!    [`decompose::SeparableEnsemble`], certified by reconstruction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod decompose;
pub mod error;
pub mod gen;
pub mod io;
pub mod ppt;
pub mod random;
pub mod tensor;

pub use canonical::{
    extract_canonical, find_witness, rotate_to_corner, verify_kernel_vectors, CanonicalForm,
    ExtractionDiagnostics, ProductWitness, Tolerances, WitnessMode,
};
pub use decompose::{
    decompose, simultaneous_diagonalize, verify_ensemble, DecomposeOptions, EigenTable,
    EnsembleCheck, EnsembleTerm, SeparableEnsemble,
};
pub use error::{Error, Result};
pub use ppt::{is_psd, ppt_report, PptReport};
pub use tensor::{CMatrix, CVector, SubsystemMask, TripartiteDims, TripartiteState};
