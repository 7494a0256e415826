//! Row cones, consistent normal forms and semantic guarantees for privacy
//! mechanisms given as column-stochastic matrices.

pub mod error;
pub mod mechanisms;
pub mod noisecone;
pub mod numerics;
pub mod relax;
pub mod rowcone;
pub mod semantics;

pub use error::{Error, Result};
pub use numerics::{LabeledMatrix, MechanismMatrix, Rational};
