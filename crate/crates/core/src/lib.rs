//! Cost-minimizing charge scheduling for EV fleets that move between grid zones.

pub mod generate;
pub mod io;
pub mod metrics;
pub mod model;
pub mod profiles;
pub mod schedule;
