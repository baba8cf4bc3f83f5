//! Consistency testing of language-model scores over adjacent token spans.
//!
//! A model that assigns proper probabilities must give the same joint
//! probability to a token pair whichever position it predicts first. This
//! crate measures the log discrepancy between the two orders from stored
//! score records, tests it for significance with a signed-rank test under
//! Benjamini–Yekutieli control, regresses its variance on model attributes,
//! and relates it to prediction entropies.

pub mod analysis;
pub mod cli;
pub mod discrepancy;
pub mod oracle;
pub mod records;
pub mod stats;
