//! Surrogate-assisted concurrent plant, control, and layout design of
//! heaving-cylinder wave-energy-converter farms.
//!
//! The pipeline: a probabilistic wave climate on quadrature nodes
//! ([`waves`]), hydrodynamic coefficients from an analytical oracle or
//! imported tables ([`hydro`]), shallow neural networks ([`neural`]) wrapped
//! into a 30-model surrogate bundle with many-body-expansion assembly of
//! farm matrices ([`surrogate`]), the frequency-domain power pipeline
//! ([`farm`]), and a penalized differential-evolution search over plant,
//! control, and layout variables ([`optim`]).

pub mod config;
pub mod error;
pub mod farm;
pub mod hydro;
pub mod neural;
pub mod optim;
pub mod special;
pub mod surrogate;
pub mod waves;

pub use error::{Error, Result};
