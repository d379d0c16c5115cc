// Index loops mirror the matrix formulas they implement.
#![allow(clippy::needless_range_loop)]

pub mod exact;
pub mod graph;
pub mod pimsner;
pub mod exec;
pub mod watatani;
pub mod duality;
pub mod linalg;
pub mod fock;
pub mod crossed;
