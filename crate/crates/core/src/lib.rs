//! Measurement engine for one-dimensional linear cluster states.
//!
//! Three representations of the same physics live side by side:
//!
//! * [`statevector`]: dense amplitudes, the exact oracle every other
//!   representation is checked against.
//! * [`symbolic`]: the single-qubit Pauli measurement rules over linear
//!   cluster segments with `S^t` byproduct tracking.
//! * [`ribbon`]: the framed-ribbon picture, rings joined by ribbons carrying
//!   a quarter-turn twist label.
//!
//! [`verify`] grades the symbolic and ribbon models against the oracle.

pub mod error;
pub mod qubit;
pub mod ribbon;
pub mod statevector;
pub mod symbolic;
pub mod verify;

pub use error::{Error, Result};
pub use qubit::{Outcome, PauliBasis, QubitId};
