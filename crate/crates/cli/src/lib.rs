//! Library half of the experiment runner: specification types, the
//! runner itself, report emission, and the randomized oracle harness.
//! The `mctree` binary is a thin argument-parsing layer over this.

pub mod oracle;
pub mod report;
pub mod runner;
pub mod spec;
