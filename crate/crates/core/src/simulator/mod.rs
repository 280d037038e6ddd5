//! Deterministic meeting simulation and an independent oracle.

pub mod compare;
pub mod fuzz;
pub mod oracle;
pub mod run;
pub mod scenario;
pub mod speech;

pub use self::compare::{compare, Divergence, DivergenceReport};
pub use self::oracle::{oracle_cumulative, oracle_first_trigger, oracle_report, OracleReport};
pub use self::run::{run, CumulativeTable, SimResult, SimSummary};
pub use self::scenario::Scenario;
