//! Experiment harness, file formats and command-line driver for `cem-core`.
//!
//! - [`bench`] runs seeded multi-run experiments in parallel and aggregates
//!   the seed-averaged best value and distance to the optimum.
//! - [`io`] writes the summary and curve CSVs, sierra grids and trace JSON.
//! - [`cli`] is the `cem` binary's argument parsing and subcommands.

pub mod bench;
pub mod cli;
pub mod io;
