//! Toolkit for building Signed Ego Networks from directed interaction logs.
//!
//! The pipeline goes: parse interaction logs ([`ingest`]), label each
//! interaction with a sentiment ([`sentiment`]), aggregate labels into a
//! per-relationship sign ([`signing`]), cluster alters into concentric
//! circles by contact frequency ([`egonet`]), validate the sign distribution
//! with a triad census against a shuffled null model ([`triads`]) and
//! produce negativity statistics ([`analytics`]).

pub mod analytics;
pub mod egonet;
pub mod ingest;
pub mod sentiment;
pub mod signing;
pub mod stats;
pub mod triads;

pub use sentiment::Polarity;
pub use signing::Sign;
