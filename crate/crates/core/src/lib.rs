//! Explicit-duration hidden semi-Markov models for symbol sequences that
//! contain silent intervals, such as quantized sensor traces or note
//! sequences with rests.
//!
//! Three model families share one parameter core:
//!
//! * [`hsmm`] — the baseline explicit-duration HSMM over (state, duration)
//!   super-states. Intervals, if present, are just another symbol.
//! * [`is_hsmm`] — an interval-state variant. Interval runs are absorbed by a
//!   dedicated node and the transition *across* an interval is second order:
//!   it conditions jointly on the pre-interval super-state and the bucketed
//!   interval length, which removes the transition-statistics bias the
//!   baseline incurs when intervals are modeled as a plain state.
//! * [`ilp_hsmm`] — an interval-length-probability variant. The sequence is
//!   reduced to its ordinary runs and every state pair (i, j) carries a
//!   truncated Gaussian over the gap length observed between them.
//!
//! Training is EM (forward-backward over segment lattices), recognition is
//! per-label likelihood scoring, and [`datagen`]/[`eval`] provide a synthetic
//! corpus generator and the evaluation harness (classification metrics,
//! generative reproducibility, scaling comparisons). [`oracle`] holds slow
//! enumeration references used by the test suites.
//!
//! All lattice math runs in the log domain; parameters are stored as linear
//! probabilities. The crate is `no_std`-compatible (with `alloc`); disable
//! the default `std` feature and enable `libm` for embedded use. IO, file
//! formats and the command-line interface live in the companion crate
//! `semimarkov-cli`.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("either the `std` or the `libm` feature must be enabled");

pub mod alphabet;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod hsmm;
pub mod ilp_hsmm;
pub mod is_hsmm;
pub mod math;
pub mod oracle;
pub mod seq;

mod lattice;

pub use alphabet::{SymbolTable, END, INTERVAL, START};
pub use error::{Error, Result};
pub use hsmm::{
    GenerateMode, HsmmParams, ModelBank, ModelKind, ModelParams, Recognition, TrainConfig,
    TrainedModel,
};
pub use seq::{Dataset, Run, SegmentedSequence, Sequence};
