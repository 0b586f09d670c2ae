//! Configuration, output layout and pipeline stages behind the `hydrofluct`
//! binary.

pub mod artifacts;
pub mod config;
pub mod stages;
