//! Local retrieval-augmented question answering over guideline documents,
//! with a benchmark harness that compares model backends using chrF,
//! exact-match METEOR, latency and human ratings.

pub mod benchharness;
pub mod docstore;
pub mod embedindex;
pub mod evalmetrics;
pub mod ragchat;
