//! Executes a parsed measurement script through a [`Session`].

use std::fmt::Write as _;

use serde::Serialize;

use crate::script::MeasurementScript;
use crate::session::{Session, SessionError, SessionOptions, SessionView, StepMode, StepRecord};

pub type RunOptions = SessionOptions;

#[derive(Debug, thiserror::Error)]
#[error("step {step}: {source}")]
pub struct RunError {
    /// 1-based index of the failing script step.
    pub step: usize,
    #[source]
    pub source: SessionError,
}

impl RunError {
    pub fn code(&self) -> &'static str {
        self.source.code()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub chain_size: usize,
    pub steps: Vec<StepRecord>,
    #[serde(rename = "final")]
    pub final_state: SessionView,
}

impl RunRecord {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let v = &self.final_state;
        let _ = writeln!(out, "chain {}  oracle {}", self.chain_size, if v.oracle { "on" } else { "off" });
        if let Some(note) = &v.oracle_note {
            let _ = writeln!(out, "  ({note})");
        }
        for s in &self.steps {
            let _ = write!(out, "{:>3}. M {} {} {}  p={:.6}", s.index, s.qubit, s.basis, s.outcome, s.probability);
            if s.sampled {
                out.push_str(" sampled");
            }
            match s.mode {
                StepMode::Symbolic => {
                    let rule = s.rule.map(|r| r.to_string()).unwrap_or_default();
                    let event = s.event.map(|e| e.to_string()).unwrap_or_default();
                    let _ = write!(out, "  {rule}  {event}");
                }
                StepMode::OracleOnly => out.push_str("  oracle-only"),
            }
            if let Some(f) = s.fidelity {
                let _ = write!(out, "  fidelity={f:.12}");
            }
            out.push('\n');
        }
        let segments: Vec<String> = v
            .segments
            .iter()
            .map(|seg| format!("[{}]", seg.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        let _ = writeln!(out, "segments: {}", segments.join(" "));
        let byproducts: Vec<String> = v.byproducts.iter().map(|(q, b)| format!("{b} on q{q}")).collect();
        let _ = writeln!(out, "byproducts: {}", if byproducts.is_empty() { "none".into() } else { byproducts.join(", ") });
        if let Some(at) = v.frozen_at {
            let _ = writeln!(out, "symbolic and ribbon views frozen from step {at}");
        }
        out
    }
}

pub fn run_script(script: &MeasurementScript, options: RunOptions) -> Result<(RunRecord, Session), RunError> {
    let mut session = Session::new("run", script.chain_size, options).map_err(|source| RunError { step: 0, source })?;
    let mut steps = Vec::with_capacity(script.steps.len());
    for (i, step) in script.steps.iter().enumerate() {
        let result = session
            .measure(step.qubit, step.basis, step.outcome, step.seed)
            .map_err(|source| RunError { step: i + 1, source })?;
        steps.push(result.step);
    }
    let record = RunRecord { chain_size: script.chain_size, steps, final_state: session.view() };
    Ok((record, session))
}
