//! Scenario files, reports and the verification suite behind the
//! `consensus-attack` command.

pub mod fixtures;
pub mod paper;
pub mod report;
pub mod run;
pub mod scenario;
pub mod verify;
