//! Congestion-aware deadline extension for challenge-response protocols.
//!
//! The crate is layered bottom-up:
//!
//! - [`chain`]: blocks, congestion/control vectors, seeded generators and
//!   JSON-Lines ingestion of recorded chains.
//! - [`signal`]: the `(theta, gamma)` block congestion predicate, its
//!   threshold functions and manipulation-cost lower bounds, plus the
//!   alternative (manipulable) signals.
//! - [`protocols`]: uncongested-period protocols (cumulative, percentage,
//!   consecutive run, sliding window) with witnesses and incremental refresh.
//! - [`analysis`]: exact attack probabilities for the consecutive-run
//!   protocol and union/independence bounds for the sliding window, in
//!   extended-exponent arithmetic.
//! - [`adversary`]: Monte Carlo attack estimation and an exhaustive oracle.
//! - [`challenge`]: the deadline-extension loop and response adjudication.

pub mod adversary;
pub mod analysis;
pub mod chain;
pub mod challenge;
mod error;
pub mod extended;
pub mod protocols;
pub mod rng;
pub mod signal;

pub use analysis::AttackDirection;
pub use error::{Error, Result};
pub use extended::ExtendedProb;
