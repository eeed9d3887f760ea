//! File formats, parallel passes and the command-line front end around
//! `satrdo_core`.

pub mod cli;
pub mod frame_io;
pub mod parallel;
pub mod report;
pub mod run;

pub use cli::run_cli;
