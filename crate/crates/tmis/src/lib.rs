//! File formats, the replicated sweep harness and the `tmis` command line
//! on top of [`tmis_core`].

#![forbid(unsafe_code)]

pub mod cli;
pub mod harness;
pub mod io;
