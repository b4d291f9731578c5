//! Brute-force reference solvers. Nothing here shares code with the production solver or model
//! builder; the suites compare the two.

pub mod charge;
pub mod vertex;
