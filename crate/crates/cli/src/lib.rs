//! Scenario generation, solving, validation, LP export and parameter sweeps behind the
//! `gridsched` command.

pub mod commands;
pub mod error;
pub mod output;
pub mod overrides;
pub mod sweep;
