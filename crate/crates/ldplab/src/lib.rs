//! Experiment harness for small-noise Lévy-driven SDEs: Monte Carlo rate
//! curves, closed-form baselines, probes, and the `ldplab` command line.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod formats;
pub mod stats;
