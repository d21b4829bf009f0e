//! Canonical forms under qubit-side mixing: fractional-linear eigenvalue
//! maps, the anchored standard form, its family signature, and the
//! stabilizer of the result.

pub mod mobius;
pub mod signature;
pub mod stabilizer;
pub mod standard;

pub use mobius::{orbit_min, residual_orbit, ExtEig, MobiusMap};
pub use signature::{signature_of_blocks, AnchorLabel, FamilySignature, SkeletonEntry};
pub use stabilizer::{
    pair_commutant, stabilizer, MobiusPart, MobiusStabElement, StabilizerDescription,
};
pub use standard::{mobius_normalize, standard_form, RouteTriple, StandardForm};
