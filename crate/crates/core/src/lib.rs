//! Simulation of subcritical Galton–Watson trees conditioned on the number
//! of vertices whose outdegree lies in a set Ω, together with the numerics
//! and statistics used to check their condensation limit laws.

pub mod distributions;
pub mod error;
pub mod experiments;
pub mod num;
pub mod oracle;
pub mod sampler;
pub mod special;
pub mod stable;
pub mod stats;
pub mod treeops;

pub use distributions::{OffspringLaw, OffspringSource, OmegaSet, OmegaSplit, SizeBiasedLaw};
pub use error::{GwError, Result};
pub use num::Real;
pub use sampler::{Decoration, DegreeSequence, MarkedTree, PlaneTree, SamplingMode};
pub use stable::{LocalLimit, llt_prediction, scaling_sequence};

/// Stable law in double precision.
pub type StableLaw = stable::StableLaw<f64>;
/// Stable law in single precision.
pub type StableLaw32 = stable::StableLaw<f32>;
