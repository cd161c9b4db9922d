//! Classical simulation of phase-linearization algorithms for hidden
//! polynomial graph problems over finite fields.

pub mod diag;
pub mod field;
pub mod hpgp;
pub mod harness;
pub mod hpp;
pub mod rng;
pub mod statesim;

pub use field::{FieldElement, FieldError, FieldParams, UniPoly};
pub use rng::RngStream;
