//! Experiment driver for rhythmic control: configuration, runs, output
//! formats and acceptance checks.

pub mod clock;
pub mod config;
pub mod experiment;
pub mod output;
pub mod plotdata;
pub mod verify;
