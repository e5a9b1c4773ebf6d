//! Discrete-time analysis and simulation of disturbance-observer based
//! servo control.
//!
//! A single-axis servo `J q'' = u - b q' - tau_d` is sampled with a
//! zero-order hold. An auxiliary-variable observer estimates the lumped
//! disturbance, which is fed back in an inner loop; position/velocity state
//! feedback closes the outer loop. The crate provides the sampled models,
//! closed-loop assemblies and their transfer functions, stability analysis
//! (eigenvalues, root loci, frequency response, Jordan structure) and a
//! simulator with a PID baseline.

pub mod analysis;
pub mod error;
pub mod loops;
pub mod observer;
pub mod plant;
pub mod sim;
pub mod transfer;

pub use error::{Error, Result};
pub use loops::{AugmentedSystem, FeedbackGains, JordanForm, LoopKind};
pub use observer::{ObserverConfig, ObserverState};
pub use plant::{ContinuousPlant, DiscretePlant, LumpedDisturbance, NominalPlant};
pub use transfer::RationalTf;
