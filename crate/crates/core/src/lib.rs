//! Domain-adaptive implicit shape completion at desk scale.
//!
//! The crate is organized around a small deterministic tensor engine
//! ([`tensor`]), geometry kernels ([`geometry`]), a two-domain scan
//! simulator ([`scansim`]), the implicit reconstruction core ([`ifnet`]),
//! cross-domain feature fusion ([`cdff`]), volume-consistent self-training
//! ([`vcst`]), and evaluation metrics ([`metrics`]).
//!
//! Everything is a pure function of its inputs plus an explicit seed;
//! single-threaded runs are bit-reproducible.

pub mod cdff;
pub mod error;
pub mod geometry;
pub mod ifnet;
pub mod metrics;
pub mod scalar;
pub mod scansim;
pub mod seed;
pub mod tensor;
pub mod vcst;

pub use error::CoreError;
pub use scalar::Scalar;
