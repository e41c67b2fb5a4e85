//! Numerical toolkit for conformal metrics on planar charts and the
//! geometry they induce in hyperbolic 3-space.
//!
//! The pipeline runs from pointwise tensor algebra ([`tensor`]) through
//! conformal metric fields ([`field`]) and Schwarzian tensors
//! ([`schwarzian`]) to dual fundamental pairs ([`duality`]), Epstein
//! surfaces in the Minkowski model ([`epstein`]), univalence and
//! quasiconformal-extension criteria ([`univalence`]) and W-volume
//! functionals with the grafting bound layer ([`wvolume`]).
//!
//! Every nontrivial construction is cross-checked by an independent route:
//! envelope solves against flat-connection transport, eigenvalue formulas
//! against direct eigensolves, variational identities against finite
//! differences. The `verify` CLI subcommand runs the whole battery.

pub mod duality;
pub mod epstein;
pub mod error;
pub mod field;
pub mod schwarzian;
pub mod tensor;
pub mod univalence;
pub mod wvolume;

pub use error::{GeomError, Result};

/// Complex scalar used throughout (`f64` components).
pub type C = num_complex::Complex64;
