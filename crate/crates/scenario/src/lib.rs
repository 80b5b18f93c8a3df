//! Scripted end-to-end runs of the board with a plaintext oracle,
//! adversaries and auditors, plus the role command line.

pub mod generate;
pub mod oracle;
pub mod privacy;
pub mod runner;
pub mod scenario;

pub use oracle::{oracle_state, oracle_tally};
pub use runner::{execute, genesis_for, materialize, run, run_local, LocalBoard, Run, RunError, Verdict};
pub use scenario::{Adversary, Auditor, GroupChoice, Scenario, ScenarioError};
