//! Certification of Einstein-Kähler metrics on symmetric smooth toric Fano
//! manifolds.
//!
//! The pipeline runs on exact lattice data: a complete regular fan is
//! validated, its anticanonical polytope is built, the fan automorphism
//! group is searched and the fixed characters are computed. A fan whose
//! automorphism group fixes no nonzero character is certified. The
//! [`analytic`] module adds numerical evidence for the integral and
//! positivity estimates behind the certificate.

pub mod analytic;
pub mod catalog;
pub mod certify;
pub mod cli;
pub mod error;
pub mod fan;
pub mod lattice;
pub mod polytope;
pub mod symmetry;

pub use error::{Error, Result};
pub use fan::{build_fan, validate_smooth_fano, Fan, ValidationReport};
pub use lattice::{LatticeVector, RationalVector, UnimodularMap};
pub use polytope::{polytope_from_fan, Barycenter, FanoPolytope};
pub use symmetry::{fan_automorphisms, is_symmetric, SymmetryGroup, SymmetryVerdict};
