//! Experiment harness around `wavepair-core`: a strict flat config format,
//! four reproducible experiment kinds (noise sweep, linearized-map SVD,
//! transform diagnostics, weight audit), envelope rate fitting, and CSV
//! reporting designed so identical config and seed reproduce identical bytes.

pub mod config;
pub mod experiments;
pub mod rates;
pub mod report;
