//! A measurement session: symbolic state, ribbon chain and (when the chain
//! is small enough) the statevector oracle, advanced in lockstep.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ribbonchain_core::ribbon::{correspondence_check, Diagram, RibbonChainState, RingStatus, SurgeryKind};
use ribbonchain_core::statevector::{fidelity_mod_phase, PureState, DEFAULT_SCHMIDT_TOLERANCE};
use ribbonchain_core::symbolic::{RuleTag, SymbolicState};
use ribbonchain_core::{Error, Outcome, PauliBasis, QubitId};
use serde::{Deserialize, Serialize};

use crate::script::OutcomeChoice;

/// Largest oracle register for which per-cut Schmidt data is reported.
pub const SCHMIDT_INFO_MAX_QUBITS: usize = 14;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("nothing to undo")]
    NothingToUndo,
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Core(e) => e.code(),
            SessionError::NothingToUndo => "nothing_to_undo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionOptions {
    pub oracle: bool,
    pub hybrid: bool,
    pub seed: u64,
    pub max_qubits: usize,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            oracle: true,
            hybrid: false,
            seed: 0,
            max_qubits: ribbonchain_core::statevector::DEFAULT_MAX_QUBITS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// Symbolic and ribbon views advanced (and the oracle, when present).
    Symbolic,
    /// Only the oracle advanced; the other views are frozen.
    OracleOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub qubit: QubitId,
    pub basis: PauliBasis,
    pub outcome: Outcome,
    pub sampled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub probability: f64,
    pub mode: StepMode,
    pub rule: Option<RuleTag>,
    pub event: Option<SurgeryKind>,
    pub fidelity: Option<f64>,
    pub correspondence: Option<bool>,
}

/// Everything that a measurement changes; the undo stack holds copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub symbolic: SymbolicState,
    pub ribbon: RibbonChainState,
    pub oracle: Option<PureState>,
    pub rng: ChaCha8Rng,
    pub history: Vec<StepRecord>,
    /// Step index at which symbolic and ribbon views stopped advancing.
    pub frozen_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub n: usize,
    pub options: SessionOptions,
    /// Why the oracle is absent, if it is.
    pub oracle_note: Option<String>,
    state: SessionState,
    undo: Vec<SessionState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtCut {
    /// Last qubit on the left of the cut.
    pub after: QubitId,
    pub rank: usize,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub id: String,
    pub n: usize,
    pub seed: u64,
    pub hybrid: bool,
    pub oracle: bool,
    pub oracle_note: Option<String>,
    pub frozen_at: Option<usize>,
    pub live_qubits: Vec<QubitId>,
    pub segments: Vec<Vec<QubitId>>,
    pub byproducts: BTreeMap<QubitId, String>,
    pub symbolic: serde_json::Value,
    pub diagram: Diagram,
    pub history: Vec<StepRecord>,
    pub undo_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureResult {
    pub step: StepRecord,
    pub diagram: Diagram,
    pub byproducts: BTreeMap<QubitId, String>,
    pub schmidt: Option<Vec<SchmidtCut>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomePreview {
    pub outcome: Outcome,
    pub probability: f64,
    pub possible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<MeasureResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn byproduct_names(sym: &SymbolicState) -> BTreeMap<QubitId, String> {
    sym.byproducts().iter().map(|(q, b)| (*q, b.to_string())).collect()
}

fn schmidt_cuts(oracle: &PureState) -> Option<Vec<SchmidtCut>> {
    let n = oracle.num_qubits();
    if !(2..=SCHMIDT_INFO_MAX_QUBITS).contains(&n) {
        return None;
    }
    let labels = oracle.labels();
    (1..n)
        .map(|i| {
            let spec = oracle.schmidt_spectrum(&labels[..i], DEFAULT_SCHMIDT_TOLERANCE).ok()?;
            Some(SchmidtCut { after: labels[i - 1], rank: spec.rank, coefficients: spec.coefficients })
        })
        .collect()
}

impl SessionState {
    /// Born probability from the oracle when present, else from the symbolic
    /// state. Freezing requires the oracle, so frozen sessions always have one.
    pub fn outcome_probability(&self, q: QubitId, basis: PauliBasis, o: Outcome) -> Result<f64, SessionError> {
        Ok(match &self.oracle {
            Some(oracle) => oracle.outcome_probability(q, basis, o)?,
            None => self.symbolic.outcome_probability(q, basis, o)?,
        })
    }

    /// Unknown ids and already-measured qubits are rejected up front. Once
    /// frozen, the oracle register decides what has been measured.
    pub fn check_target(&self, q: QubitId) -> Result<(), SessionError> {
        let ring = self.ribbon.ring(q).ok_or(Error::UnknownQubit(q))?;
        let measured = match (&self.oracle, self.frozen_at) {
            (Some(oracle), Some(_)) => !oracle.contains(q),
            _ => ring.status == RingStatus::Removed,
        };
        if measured {
            return Err(Error::InactiveRing(q).into());
        }
        Ok(())
    }

    fn measure(
        &mut self,
        q: QubitId,
        basis: PauliBasis,
        choice: OutcomeChoice,
        seed: Option<u64>,
        options: &SessionOptions,
    ) -> Result<StepRecord, SessionError> {
        self.check_target(q)?;
        let frozen = self.frozen_at.is_some();
        let p_plus = self.outcome_probability(q, basis, Outcome::Plus)?;
        let outcome = match choice {
            OutcomeChoice::Fixed(o) => o,
            OutcomeChoice::Random => {
                let u: f64 = match seed {
                    Some(s) => ChaCha8Rng::seed_from_u64(s).random(),
                    None => self.rng.random(),
                };
                if u < p_plus { Outcome::Plus } else { Outcome::Minus }
            }
        };
        let probability = if outcome == Outcome::Plus { p_plus } else { 1.0 - p_plus };
        let mut record = StepRecord {
            index: self.history.len() + 1,
            qubit: q,
            basis,
            outcome,
            sampled: choice == OutcomeChoice::Random,
            seed,
            probability,
            mode: StepMode::Symbolic,
            rule: None,
            event: None,
            fidelity: None,
            correspondence: None,
        };

        let symbolic = if frozen {
            None
        } else {
            match self.symbolic.symbolic_measure(q, basis, outcome) {
                Ok(r) => Some(r),
                Err(Error::UnsupportedComposition { .. }) if options.hybrid && self.oracle.is_some() => None,
                Err(e) => return Err(e.into()),
            }
        };
        let oracle = match &self.oracle {
            Some(o) => Some(o.project_measure(q, basis, outcome)?.1),
            None => None,
        };
        match symbolic {
            Some((sym, rule)) => {
                let (ribbon, event) = self.ribbon.apply_surgery(q, basis, outcome)?;
                record.rule = Some(rule);
                record.event = Some(event.kind);
                record.correspondence = Some(correspondence_check(&ribbon, &sym)?.passed());
                if let Some(o) = &oracle {
                    record.fidelity = Some(fidelity_mod_phase(&sym.materialize(options.max_qubits)?, o)?);
                }
                self.symbolic = sym;
                self.ribbon = ribbon;
            }
            None => {
                record.mode = StepMode::OracleOnly;
                self.frozen_at.get_or_insert(record.index);
            }
        }
        self.oracle = oracle;
        self.history.push(record.clone());
        Ok(record)
    }

    fn result_for(&self, step: StepRecord) -> MeasureResult {
        MeasureResult {
            step,
            diagram: self.ribbon.export_diagram(),
            byproducts: byproduct_names(&self.symbolic),
            schmidt: self.oracle.as_ref().and_then(schmidt_cuts),
        }
    }
}

impl Session {
    /// A fresh `|C_n⟩`. The oracle is built only when requested and `n`
    /// fits under `max_qubits`; otherwise `oracle_note` says why.
    pub fn new(id: impl Into<String>, n: usize, options: SessionOptions) -> Result<Session, SessionError> {
        let symbolic = SymbolicState::new_chain(n)?;
        let ribbon = RibbonChainState::initial_chain(n)?;
        let (oracle, oracle_note) = if !options.oracle {
            (None, Some("oracle disabled".to_string()))
        } else if n > options.max_qubits {
            (None, Some(format!("chain of {n} exceeds the oracle limit of {} qubits", options.max_qubits)))
        } else {
            (Some(ribbonchain_core::statevector::build_cluster(n, options.max_qubits)?), None)
        };
        Ok(Session {
            id: id.into(),
            n,
            options,
            oracle_note,
            state: SessionState {
                symbolic,
                ribbon,
                oracle,
                rng: ChaCha8Rng::seed_from_u64(options.seed),
                history: Vec::new(),
                frozen_at: None,
            },
            undo: Vec::new(),
        })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    pub fn measure(
        &mut self,
        q: QubitId,
        basis: PauliBasis,
        choice: OutcomeChoice,
        seed: Option<u64>,
    ) -> Result<MeasureResult, SessionError> {
        let mut next = self.state.clone();
        let step = next.measure(q, basis, choice, seed, &self.options)?;
        let result = next.result_for(step);
        self.undo.push(std::mem::replace(&mut self.state, next));
        Ok(result)
    }

    /// Both outcomes of measuring `q` in `basis`, without touching the session.
    pub fn dry_run(&self, q: QubitId, basis: PauliBasis) -> Result<Vec<OutcomePreview>, SessionError> {
        self.state.check_target(q)?;
        Ok(Outcome::BOTH
            .into_iter()
            .map(|o| {
                let mut trial = self.state.clone();
                match trial.measure(q, basis, OutcomeChoice::Fixed(o), None, &self.options) {
                    Ok(step) => OutcomePreview {
                        outcome: o,
                        probability: step.probability,
                        possible: true,
                        result: Some(trial.result_for(step)),
                        error: None,
                    },
                    Err(e) => OutcomePreview {
                        outcome: o,
                        probability: self.state.outcome_probability(q, basis, o).unwrap_or(0.0),
                        possible: false,
                        result: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect())
    }

    pub fn undo(&mut self) -> Result<(), SessionError> {
        self.state = self.undo.pop().ok_or(SessionError::NothingToUndo)?;
        Ok(())
    }

    pub fn diagram(&self) -> Diagram {
        self.state.ribbon.export_diagram()
    }

    pub fn schmidt(&self) -> Option<Vec<SchmidtCut>> {
        self.state.oracle.as_ref().and_then(schmidt_cuts)
    }

    pub fn view(&self) -> SessionView {
        let s = &self.state;
        SessionView {
            id: self.id.clone(),
            n: self.n,
            seed: self.options.seed,
            hybrid: self.options.hybrid,
            oracle: s.oracle.is_some(),
            oracle_note: self.oracle_note.clone(),
            frozen_at: s.frozen_at,
            live_qubits: s.symbolic.live_qubits(),
            segments: s.symbolic.segments().iter().map(|seg| seg.qubits().to_vec()).collect(),
            byproducts: byproduct_names(&s.symbolic),
            symbolic: s.symbolic.to_json(),
            diagram: s.ribbon.export_diagram(),
            history: s.history.clone(),
            undo_depth: self.undo.len(),
        }
    }
}
