//! Exact simulation and empirical certification of the CompareWithPartialOPT
//! online algorithm for 2-bounded delay buffer management with one step of
//! lookahead.

pub mod analysis;
pub mod cp;
pub mod generators;
pub mod harness;
pub mod model;
pub mod offline;
