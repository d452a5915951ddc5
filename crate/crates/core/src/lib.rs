//! Sub-event discovery for crisis tweets.
//!
//! Candidate sub-events are noun-verb pairs taken from dependency parses plus collocated
//! bigrams. Candidates are scored by embedding similarity to a crisis ontology, grouped with
//! spectral clustering, and evaluated by how well the top of the ranking retrieves
//! informative tweets.
//!
//! The modules follow the data flow: [`corpus`] → [`extract`] → [`embed`]/[`rank`] →
//! [`cluster`] → [`eval`]. [`pipeline`] wires them to files on disk and [`synth`] builds
//! deterministic synthetic data for experiments.

pub mod cluster;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod extract;
pub mod pipeline;
pub mod rank;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
