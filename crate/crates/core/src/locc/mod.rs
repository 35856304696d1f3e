//! Local operations and classical communication under the parity
//! superselection rule.

pub mod engine;
pub mod kraus;
pub mod random;
pub mod script;

pub use engine::{enumerate_branches, run_script, PartyMonotone, StepRecord, TrialReport, MAX_BRANCHES};
pub use kraus::{completeness_deviation, haar_unitary, random_ssr_unitary, sample_random_ssr_povm, KrausSet};
pub use random::{random_feedback_script, RandomScriptConfig};
pub use script::{validate_script, OperatorSpec, ProtocolScript, Step};
