//! Command-line and HTTP front ends for the ribbonchain engine: a small
//! measurement-script language, sessions with undo, and a JSON service.

pub mod run;
pub mod script;
pub mod service;
pub mod session;

pub use run::{run_script, RunError, RunOptions, RunRecord};
pub use script::{parse_script, MeasurementScript, OutcomeChoice, ParseError, ScriptStep};
pub use session::{Session, SessionError, SessionOptions};
