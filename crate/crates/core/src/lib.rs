//! Contract-guided search-based test generation for a small subject language.

pub mod baseline;
pub mod contract;
pub mod emit;
pub mod fitness;
pub mod harness;
pub mod lang;
pub mod search;
pub mod testcase;
