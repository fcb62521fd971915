//! Exact intersection-theoretic toolkit for log surface pairs.
//!
//! The crate models a log smooth surface pair by a finite configuration of
//! tracked prime divisors with a rational intersection form, and provides
//! blow-up and contraction calculus, discrepancy and singularity
//! classification, terminalization, a numerical MMP, and the effective
//! pluricanonical birationality threshold with a replayable certificate.

pub mod bigness;
pub mod bounds;
pub mod divisor;
pub mod error;
pub mod format;
pub mod linalg;
pub mod model;
pub mod morphism;
pub mod pipeline;
pub mod programs;
pub mod rational;
pub mod sample;
pub mod singularity;

pub use divisor::{CoefficientSet, DivisorId, LogDivisor, QDivisor};
pub use error::{Error, Result};
pub use model::{BlowUpSpec, LogPair, SurfaceModel};
pub use morphism::{ModelMorphism, Step};
pub use rational::Rational;
