//! Experiment harness for high-order planted model partitioning: parameter
//! grids, Monte Carlo trial execution with reproducible seeds, CSV output,
//! and phase-transition reporting.

pub mod grid;
pub mod report;
