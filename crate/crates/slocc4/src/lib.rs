//! Exact SLOCC classification of 2 x L x M x N pure states via matrix
//! pencils: canonical forms, entanglement-family signatures, equivalence
//! decisions with verified witnesses, and family census counts.

pub mod canonical;
pub mod census;
pub mod cli;
pub mod decide;
pub mod error;
pub mod exact;
pub mod pencil;
pub mod realign;
pub mod state;
pub mod symbolic;

pub use error::{Error, Result};
