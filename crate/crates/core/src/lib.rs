//! Resonance fluorescence of a dense two-level medium driven by a finite
//! rectangular pulse, with the near-dipole-dipole (local field) correction.
//!
//! The atom is integrated first ([`bloch`]); every detector mode is then an
//! independent linear filter of the recorded coherence ([`field`]). The
//! first-order perturbative spectrum lives in [`analytic`], feature
//! extraction in [`analysis`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod analytic;
pub mod bloch;
pub mod cli;
pub mod config;
pub mod error;
pub mod field;
pub mod output;
pub mod phi;
pub mod pipeline;
pub mod spectrum;

pub use error::{Error, Result};
