pub mod gaussian;
pub mod gint;
pub mod matrix;
pub mod modular;
pub mod poly;

pub use gaussian::Gaussian;
pub use matrix::{parse_matrix, ExactMatrix};
pub use modular::{ModField, ModMatrix};
pub use poly::ExactPoly;
