//! First-order projections from 3SAT to SUBSET-SUM to PARTITION.
//!
//! The crate interprets first-order reductions over finite ordered
//! structures, ships the two projections of the 3SAT → SUBSET-SUM →
//! PARTITION chain as data, and checks them against brute-force oracles.

pub mod fologic;
pub mod harness;
pub mod oracles;
pub mod problems;
pub mod projana;
pub mod reductions;
pub mod structures;
