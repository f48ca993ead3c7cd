//! Symbolic strategy iteration for monotonic Markov decision processes,
//! with state sets represented as pseudo-antichains.

pub mod cli;
pub mod error;
pub mod explicit;
pub mod lattice;
pub mod linalg;
pub mod lumping;
pub mod mdp;
pub mod pseudo;
pub mod quotient;
pub mod strategy;
pub mod strips;
pub mod table;

/// Exact rational used for probabilities, costs and values.
pub type Rational = num_rational::BigRational;

pub use error::{Error, Result};
pub use lattice::{Antichain, CondSet, Lattice, NatVec};
pub use mdp::{ActionId, MonotonicMdp, PaPartition, Strategy};
pub use pseudo::{PseudoAntichain, PseudoElement};
