//! Data-induced randomness diagnostics for quantum classifiers.
//!
//! The crate is organized around the quantities a binary quantum classifier
//! exposes through a single observable:
//!
//! * [`simcore`]: dense statevector simulation, observables, Haar sampling.
//! * [`moments`]: exact Haar reference moments from an observable's spectrum
//!   and Monte-Carlo estimates of ensemble moments and anti-randomness.
//! * [`margin`]: the class margin and the classification-failure bounds
//!   built on its moments.
//! * [`dlp`], [`toymodel`], [`varmodels`]: the three case studies.
//!
//! Everything random flows from a [`RandomStream`], so results are
//! reproducible bit-for-bit regardless of the number of worker threads.

pub mod csvio;
pub mod dlp;
mod error;
pub mod margin;
pub mod moments;
pub mod par;
mod rng;
pub mod simcore;
pub mod special;
pub mod stats;
pub mod toymodel;
pub mod varmodels;

pub use error::{Error, Result};
pub use rng::RandomStream;
