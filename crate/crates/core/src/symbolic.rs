//! Symbolic measurement calculus over linear cluster segments.
//!
//! A [`SymbolicState`] is a set of linear cluster segments, qubits pinned to
//! a computational basis value, splice bonds left behind by X measurements
//! in the bulk, and a per-qubit byproduct `S^t`. Each single-qubit Pauli
//! measurement is dispatched to one of twelve rules ([`RuleTag`]) after the
//! target's own byproduct has been absorbed into the measured basis.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{chain_labels, Outcome, PauliBasis, QubitId};
use crate::statevector::{Gate, PureState};

/// The local operator `S^t` (t mod 4): I, S, Z, S†. Global phase ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Byproduct(u8);

impl Byproduct {
    pub const IDENTITY: Byproduct = Byproduct(0);
    pub const S: Byproduct = Byproduct(1);
    pub const Z: Byproduct = Byproduct(2);
    pub const S_DAGGER: Byproduct = Byproduct(3);

    pub fn new(t: u8) -> Self {
        Byproduct(t % 4)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn compose(self, other: Byproduct) -> Byproduct {
        Byproduct((self.0 + other.0) % 4)
    }

    pub fn is_identity(self) -> bool {
        self.0 == 0
    }

    pub fn gate(self) -> Option<Gate> {
        Gate::s_power(self.0)
    }

    /// Relative phase `i^t` the operator puts on `|1⟩`.
    pub fn phase(self) -> Complex64 {
        Complex64::i().powu(u32::from(self.0))
    }
}

impl TryFrom<u8> for Byproduct {
    type Error = String;

    fn try_from(t: u8) -> std::result::Result<Self, Self::Error> {
        if t < 4 {
            Ok(Byproduct(t))
        } else {
            Err(format!("byproduct power {t} out of range 0..4"))
        }
    }
}

impl From<Byproduct> for u8 {
    fn from(b: Byproduct) -> u8 {
        b.0
    }
}

impl fmt::Display for Byproduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "I",
            1 => "S",
            2 => "Z",
            _ => "S†",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Position {
    EndLeft,
    EndRight,
    Bulk,
    Isolated,
    Decoupled,
}

/// One value per row of the single-measurement summary table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleTag {
    #[serde(rename = "Z_End_Prune")]
    ZEndPrune,
    #[serde(rename = "Z_End_PruneFlip")]
    ZEndPruneFlip,
    #[serde(rename = "Z_Bulk_Sever")]
    ZBulkSever,
    #[serde(rename = "Z_Bulk_SeverFlip")]
    ZBulkSeverFlip,
    #[serde(rename = "X_End_Skip")]
    XEndSkip,
    #[serde(rename = "X_End_SkipFlip")]
    XEndSkipFlip,
    #[serde(rename = "X_Bulk_Splice")]
    XBulkSplice,
    #[serde(rename = "X_Bulk_SpliceFlip")]
    XBulkSpliceFlip,
    #[serde(rename = "Y_End_Twist")]
    YEndTwist,
    #[serde(rename = "Y_End_AntiTwist")]
    YEndAntiTwist,
    #[serde(rename = "Y_Bulk_Twist")]
    YBulkTwist,
    #[serde(rename = "Y_Bulk_AntiTwist")]
    YBulkAntiTwist,
}

impl RuleTag {
    pub const ALL: [RuleTag; 12] = [
        RuleTag::ZEndPrune,
        RuleTag::ZEndPruneFlip,
        RuleTag::ZBulkSever,
        RuleTag::ZBulkSeverFlip,
        RuleTag::XEndSkip,
        RuleTag::XEndSkipFlip,
        RuleTag::XBulkSplice,
        RuleTag::XBulkSpliceFlip,
        RuleTag::YEndTwist,
        RuleTag::YEndAntiTwist,
        RuleTag::YBulkTwist,
        RuleTag::YBulkAntiTwist,
    ];

    pub fn from_parts(basis: PauliBasis, bulk: bool, outcome: Outcome) -> RuleTag {
        let base = match basis {
            PauliBasis::Z => 0,
            PauliBasis::X => 4,
            PauliBasis::Y => 8,
        };
        let idx = base + if bulk { 2 } else { 0 } + usize::from(outcome.bit());
        RuleTag::ALL[idx]
    }

    fn index(self) -> usize {
        RuleTag::ALL.iter().position(|&r| r == self).expect("listed")
    }

    pub fn basis(self) -> PauliBasis {
        PauliBasis::ALL[self.index() / 4]
    }

    pub fn is_bulk(self) -> bool {
        self.index() % 4 >= 2
    }

    pub fn outcome(self) -> Outcome {
        Outcome::BOTH[self.index() % 2]
    }

    /// Phase class carried by the rule: the byproduct it composes onto the
    /// neighbours, with the anti-correlated splice counted as the Z class.
    pub fn byproduct_class(self) -> Byproduct {
        match (self.basis(), self.outcome()) {
            (PauliBasis::Z | PauliBasis::X, Outcome::Plus) => Byproduct::IDENTITY,
            (PauliBasis::Z | PauliBasis::X, Outcome::Minus) => Byproduct::Z,
            (PauliBasis::Y, Outcome::Plus) => Byproduct::S,
            (PauliBasis::Y, Outcome::Minus) => Byproduct::S_DAGGER,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleTag::ZEndPrune => "Z_End_Prune",
            RuleTag::ZEndPruneFlip => "Z_End_PruneFlip",
            RuleTag::ZBulkSever => "Z_Bulk_Sever",
            RuleTag::ZBulkSeverFlip => "Z_Bulk_SeverFlip",
            RuleTag::XEndSkip => "X_End_Skip",
            RuleTag::XEndSkipFlip => "X_End_SkipFlip",
            RuleTag::XBulkSplice => "X_Bulk_Splice",
            RuleTag::XBulkSpliceFlip => "X_Bulk_SpliceFlip",
            RuleTag::YEndTwist => "Y_End_Twist",
            RuleTag::YEndAntiTwist => "Y_End_AntiTwist",
            RuleTag::YBulkTwist => "Y_Bulk_Twist",
            RuleTag::YBulkAntiTwist => "Y_Bulk_AntiTwist",
        }
    }
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rewrites a measurement of `S^t|ψ⟩` as an equivalent measurement of `|ψ⟩`.
///
/// The new eigenvector is `S^{-t}` applied to the old one, up to phase.
pub fn absorb_byproduct(basis: PauliBasis, o: Outcome, bp: Byproduct) -> (PauliBasis, Outcome) {
    use Outcome::*;
    use PauliBasis::*;
    match (bp.power(), basis, o) {
        (_, Z, o) => (Z, o),
        (0, b, o) => (b, o),
        (2, b, o) => (b, o.flipped()),
        (1, X, o) => (Y, o.flipped()),
        (1, Y, o) => (X, o),
        (3, X, o) => (Y, o),
        (3, Y, Plus) => (X, Minus),
        (3, Y, Minus) => (X, Plus),
        _ => unreachable!("byproduct power is always < 4"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpliceKind {
    /// The two endpoints are locked to equal computational values.
    #[serde(rename = "correlated")]
    CorrelatedSplice,
    /// The two endpoints are locked to opposite computational values.
    #[serde(rename = "anticorrelated")]
    AntiCorrelatedSplice,
}

/// Marks an adjacent pair of a segment joined by an X measurement in the
/// bulk. The pair carries no CZ bond; instead its bit values are locked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpliceBond {
    pub left: QubitId,
    pub right: QubitId,
    pub kind: SpliceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Segment(pub Vec<QubitId>);

impl Segment {
    pub fn qubits(&self) -> &[QubitId] {
        &self.0
    }

    pub fn contains(&self, q: QubitId) -> bool {
        self.0.contains(&q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DecoupledQubit {
    pub id: QubitId,
    pub value: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub qubit: QubitId,
    pub basis: PauliBasis,
    pub outcome: Outcome,
    pub rule: RuleTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicState {
    segments: Vec<Segment>,
    byproducts: BTreeMap<QubitId, Byproduct>,
    decoupled: Vec<DecoupledQubit>,
    splice_bonds: Vec<SpliceBond>,
    history: Vec<MeasurementRecord>,
}

impl SymbolicState {
    /// One segment `1..=n`, nothing else.
    pub fn new_chain(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("chain size must be at least 1".into()));
        }
        Ok(SymbolicState {
            segments: vec![Segment(chain_labels(n))],
            byproducts: BTreeMap::new(),
            decoupled: Vec::new(),
            splice_bonds: Vec::new(),
            history: Vec::new(),
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn decoupled(&self) -> &[DecoupledQubit] {
        &self.decoupled
    }

    pub fn splice_bonds(&self) -> &[SpliceBond] {
        &self.splice_bonds
    }

    pub fn history(&self) -> &[MeasurementRecord] {
        &self.history
    }

    pub fn byproducts(&self) -> &BTreeMap<QubitId, Byproduct> {
        &self.byproducts
    }

    pub fn byproduct(&self, q: QubitId) -> Byproduct {
        self.byproducts.get(&q).copied().unwrap_or_default()
    }

    /// All live qubits in ascending order.
    pub fn live_qubits(&self) -> Vec<QubitId> {
        let mut live: Vec<QubitId> = self
            .segments
            .iter()
            .flat_map(|s| s.0.iter().copied())
            .chain(self.decoupled.iter().map(|d| d.id))
            .collect();
        live.sort();
        live
    }

    fn segment_index(&self, q: QubitId) -> Option<usize> {
        self.segments.iter().position(|s| s.contains(q))
    }

    fn has_splice(&self, segment: &Segment) -> bool {
        self.splice_bonds.iter().any(|b| segment.contains(b.left))
    }

    pub fn classify_target(&self, q: QubitId) -> Result<Position> {
        if self.decoupled.iter().any(|d| d.id == q) {
            return Ok(Position::Decoupled);
        }
        let seg = &self.segments[self.segment_index(q).ok_or(Error::UnknownQubit(q))?].0;
        Ok(if seg.len() == 1 {
            Position::Isolated
        } else if seg[0] == q {
            Position::EndLeft
        } else if seg[seg.len() - 1] == q {
            Position::EndRight
        } else {
            Position::Bulk
        })
    }

    /// Born probability of `(basis, o)` on `q`, for targets the rule set covers.
    pub fn outcome_probability(&self, q: QubitId, basis: PauliBasis, o: Outcome) -> Result<f64> {
        match self.classify_target(q)? {
            Position::Decoupled => {
                let value = self.decoupled.iter().find(|d| d.id == q).map(|d| d.value).unwrap_or(0);
                Ok(match basis {
                    PauliBasis::Z if o.bit() == value => 1.0,
                    PauliBasis::Z => 0.0,
                    _ => 0.5,
                })
            }
            position => {
                let seg = &self.segments[self.segment_index(q).expect("classified")];
                if self.has_splice(seg) {
                    return Err(unsupported_splice(q));
                }
                let (basis, o) = absorb_byproduct(basis, o, self.byproduct(q));
                Ok(match (position, basis, o) {
                    (Position::Isolated, PauliBasis::X, Outcome::Plus) => 1.0,
                    (Position::Isolated, PauliBasis::X, Outcome::Minus) => 0.0,
                    _ => 0.5,
                })
            }
        }
    }

    fn compose_onto(&mut self, q: QubitId, bp: Byproduct) {
        let t = self.byproduct(q).compose(bp);
        if t.is_identity() {
            self.byproducts.remove(&q);
        } else {
            self.byproducts.insert(q, t);
        }
    }

    fn push_segment(&mut self, qubits: Vec<QubitId>) {
        if !qubits.is_empty() {
            self.segments.push(Segment(qubits));
        }
    }

    fn normalize(&mut self) {
        self.segments.sort();
        self.decoupled.sort();
        self.splice_bonds.sort();
    }

    /// Applies the measurement rule for `(basis, o)` on `q` and returns the
    /// new state together with the rule that fired.
    pub fn symbolic_measure(
        &self,
        q: QubitId,
        basis: PauliBasis,
        o: Outcome,
    ) -> Result<(SymbolicState, RuleTag)> {
        let position = self.classify_target(q)?;
        let mut next = self.clone();

        if position == Position::Decoupled {
            if basis != PauliBasis::Z {
                return Err(Error::UnsupportedComposition {
                    qubit: q,
                    reason: format!("decoupled qubit admits only Z measurement, got {basis}"),
                });
            }
            let value = self.decoupled.iter().find(|d| d.id == q).map(|d| d.value).unwrap_or(0);
            if o.bit() != value {
                return Err(Error::ImpossibleOutcome { probability: 0.0 });
            }
            next.decoupled.retain(|d| d.id != q);
            next.byproducts.remove(&q);
            let rule = RuleTag::from_parts(PauliBasis::Z, false, o);
            next.history.push(MeasurementRecord { qubit: q, basis, outcome: o, rule });
            return Ok((next, rule));
        }

        let si = self.segment_index(q).expect("classified");
        if self.has_splice(&self.segments[si]) {
            return Err(unsupported_splice(q));
        }
        let own = next.byproducts.remove(&q).unwrap_or_default();
        let (eff_basis, eff_o) = absorb_byproduct(basis, o, own);
        let seg = next.segments.remove(si).0;

        let flip_or_none = |o: Outcome| match o {
            Outcome::Plus => Byproduct::IDENTITY,
            Outcome::Minus => Byproduct::Z,
        };
        let phase_gate = |o: Outcome| match o {
            Outcome::Plus => Byproduct::S,
            Outcome::Minus => Byproduct::S_DAGGER,
        };

        let rule = match position {
            Position::Isolated => {
                if eff_basis == PauliBasis::X && eff_o == Outcome::Minus {
                    return Err(Error::ImpossibleOutcome { probability: 0.0 });
                }
                RuleTag::from_parts(eff_basis, false, eff_o)
            }
            Position::EndLeft | Position::EndRight => {
                let mut seq = seg;
                if position == Position::EndRight {
                    seq.reverse();
                }
                let near = seq[1];
                let mut rest = match eff_basis {
                    PauliBasis::Z => {
                        next.compose_onto(near, flip_or_none(eff_o));
                        seq[1..].to_vec()
                    }
                    PauliBasis::X => {
                        next.byproducts.remove(&near);
                        next.decoupled.push(DecoupledQubit { id: near, value: eff_o.bit() });
                        if let Some(&far) = seq.get(2) {
                            next.compose_onto(far, flip_or_none(eff_o));
                        }
                        seq[2..].to_vec()
                    }
                    PauliBasis::Y => {
                        next.compose_onto(near, phase_gate(eff_o));
                        seq[1..].to_vec()
                    }
                };
                if position == Position::EndRight {
                    rest.reverse();
                }
                next.push_segment(rest);
                RuleTag::from_parts(eff_basis, false, eff_o)
            }
            Position::Bulk => {
                let pos = seg.iter().position(|&x| x == q).expect("member");
                let (left, right) = (seg[..pos].to_vec(), seg[pos + 1..].to_vec());
                let (a, b) = (left[left.len() - 1], right[0]);
                match eff_basis {
                    PauliBasis::Z => {
                        next.compose_onto(a, flip_or_none(eff_o));
                        next.compose_onto(b, flip_or_none(eff_o));
                        next.push_segment(left);
                        next.push_segment(right);
                    }
                    PauliBasis::X => {
                        let kind = match eff_o {
                            Outcome::Plus => SpliceKind::CorrelatedSplice,
                            Outcome::Minus => SpliceKind::AntiCorrelatedSplice,
                        };
                        next.splice_bonds.push(SpliceBond { left: a, right: b, kind });
                        next.push_segment([left, right].concat());
                    }
                    PauliBasis::Y => {
                        next.compose_onto(a, phase_gate(eff_o));
                        next.compose_onto(b, phase_gate(eff_o));
                        next.push_segment([left, right].concat());
                    }
                }
                RuleTag::from_parts(eff_basis, true, eff_o)
            }
            Position::Decoupled => unreachable!("handled above"),
        };

        next.normalize();
        next.history.push(MeasurementRecord { qubit: q, basis, outcome: o, rule });
        Ok((next, rule))
    }

    /// Dense state over the live qubits, ascending by id.
    ///
    /// Each segment contributes `(-1)^{x_a x_b}` for every consecutive pair
    /// except splice-bonded pairs, which instead constrain `x_a = x_b`
    /// (correlated) or `x_a ≠ x_b` (anti-correlated). Decoupled qubits are
    /// fixed basis states; byproducts contribute `i^{t·x_q}`.
    pub fn materialize(&self, max_qubits: usize) -> Result<PureState> {
        let live = self.live_qubits();
        let n = live.len();
        if n > max_qubits {
            return Err(Error::SizeLimit { requested: n, limit: max_qubits });
        }
        let bit = |q: QubitId| -> usize {
            let pos = live.binary_search(&q).expect("live qubit");
            1usize << (n - 1 - pos)
        };

        let mut edges = Vec::new();
        let mut equal = Vec::new();
        let mut opposite = Vec::new();
        for seg in &self.segments {
            for w in seg.0.windows(2) {
                let pair = bit(w[0]) | bit(w[1]);
                let bond = self
                    .splice_bonds
                    .iter()
                    .find(|b| (b.left, b.right) == (w[0], w[1]) || (b.left, b.right) == (w[1], w[0]));
                match bond.map(|b| b.kind) {
                    None => edges.push(pair),
                    Some(SpliceKind::CorrelatedSplice) => equal.push(pair),
                    Some(SpliceKind::AntiCorrelatedSplice) => opposite.push(pair),
                }
            }
        }
        let (fixed_mask, fixed_value) = self.decoupled.iter().fold((0usize, 0usize), |(m, v), d| {
            let b = bit(d.id);
            (m | b, if d.value == 1 { v | b } else { v })
        });
        let phases: Vec<(usize, u32)> = self
            .byproducts
            .iter()
            .map(|(&q, &t)| (bit(q), u32::from(t.power())))
            .collect();

        let amplitudes = (0..1usize << n)
            .map(|x| {
                let allowed = x & fixed_mask == fixed_value
                    && equal.iter().all(|&m| (x & m).count_ones() != 1)
                    && opposite.iter().all(|&m| (x & m).count_ones() == 1);
                if !allowed {
                    return Complex64::new(0.0, 0.0);
                }
                let sign = edges.iter().filter(|&&m| x & m == m).count() as u32;
                let quarter: u32 = phases.iter().filter(|(b, _)| x & b != 0).map(|(_, t)| t).sum();
                Complex64::i().powu((2 * sign + quarter) % 4)
            })
            .collect();
        PureState::from_amplitudes(live, amplitudes)
    }

    /// Checks the structural invariants; used after deserializing.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for q in self.segments.iter().flat_map(|s| s.0.iter()).chain(self.decoupled.iter().map(|d| &d.id)) {
            if q.0 == 0 || !seen.insert(*q) {
                return Err(Error::InvalidArgument(format!("qubit {q} is duplicated or invalid")));
            }
        }
        if self.segments.iter().any(|s| s.0.is_empty()) {
            return Err(Error::InvalidArgument("empty segment".into()));
        }
        if self.decoupled.iter().any(|d| d.value > 1) {
            return Err(Error::InvalidArgument("decoupled value must be 0 or 1".into()));
        }
        if let Some(q) = self.byproducts.keys().find(|q| !seen.contains(q)) {
            return Err(Error::InvalidArgument(format!("byproduct on non-live qubit {q}")));
        }
        for b in &self.splice_bonds {
            let adjacent = self.segments.iter().any(|s| {
                s.0.windows(2).any(|w| (w[0], w[1]) == (b.left, b.right))
            });
            if !adjacent {
                return Err(Error::InvalidArgument(format!(
                    "splice bond {}–{} is not an adjacent pair",
                    b.left, b.right
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("symbolic state serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let state: SymbolicState = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        state.validate()?;
        Ok(state)
    }
}

fn unsupported_splice(q: QubitId) -> Error {
    Error::UnsupportedComposition {
        qubit: q,
        reason: "segment carries a splice bond; use the statevector path".into(),
    }
}

/// The literal residual formula for a single measurement on `|C_n⟩`, built
/// from statevector primitives and independent of [`SymbolicState`].
///
/// X measurements in the bulk use a plain path cluster across the removed
/// site, as the table states; this is what the verification harness grades.
pub fn table_formula_state(
    n: usize,
    q: QubitId,
    basis: PauliBasis,
    o: Outcome,
    max_qubits: usize,
) -> Result<PureState> {
    let k = q.0 as usize;
    if n < 2 || k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("position {q} invalid for chain of {n}")));
    }
    let labels = chain_labels(n);
    let minus = o == Outcome::Minus;
    let phase = if minus { Gate::SDagger } else { Gate::S };

    let state = if k == 1 || k == n {
        let mut seq = labels;
        if k == n {
            seq.reverse();
        }
        let near = seq[1];
        match basis {
            PauliBasis::Z => {
                let s = PureState::cluster_on(&seq[1..], max_qubits)?;
                if minus { s.apply_local(near, Gate::Z)? } else { s }
            }
            PauliBasis::X => {
                let fixed = PureState::basis_state(vec![near], &[o.bit()])?;
                if seq.len() > 2 {
                    let s = fixed.tensor(&PureState::cluster_on(&seq[2..], max_qubits)?)?;
                    if minus { s.apply_local(seq[2], Gate::Z)? } else { s }
                } else {
                    fixed
                }
            }
            PauliBasis::Y => PureState::cluster_on(&seq[1..], max_qubits)?.apply_local(near, phase)?,
        }
    } else {
        let (a, b) = (QubitId(q.0 - 1), QubitId(q.0 + 1));
        let rest: Vec<QubitId> = labels.iter().copied().filter(|&l| l != q).collect();
        match basis {
            PauliBasis::Z => {
                let left = PureState::cluster_on(&labels[..k - 1], max_qubits)?;
                let s = left.tensor(&PureState::cluster_on(&labels[k..], max_qubits)?)?;
                if minus { s.apply_local(a, Gate::Z)?.apply_local(b, Gate::Z)? } else { s }
            }
            PauliBasis::X => {
                let s = PureState::cluster_on(&rest, max_qubits)?;
                if minus { s.apply_local(a, Gate::Z)? } else { s }
            }
            PauliBasis::Y => PureState::cluster_on(&rest, max_qubits)?
                .apply_local(a, phase)?
                .apply_local(b, phase)?,
        }
    };
    Ok(state.sorted())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::{build_cluster, fidelity_mod_phase};

    const MAX: usize = 20;

    fn q(v: u32) -> QubitId {
        QubitId(v)
    }

    fn segs(state: &SymbolicState) -> Vec<Vec<u32>> {
        state.segments().iter().map(|s| s.0.iter().map(|x| x.0).collect()).collect()
    }

    fn oracle_residual(n: usize, k: u32, basis: PauliBasis, o: Outcome) -> PureState {
        build_cluster(n, MAX).unwrap().project_measure(q(k), basis, o).unwrap().1
    }

    #[test]
    fn new_chain_shapes() {
        assert_eq!(segs(&SymbolicState::new_chain(5).unwrap()), vec![vec![1, 2, 3, 4, 5]]);
        assert_eq!(segs(&SymbolicState::new_chain(1).unwrap()), vec![vec![1]]);
        let m = SymbolicState::new_chain(3).unwrap().materialize(MAX).unwrap();
        let f = fidelity_mod_phase(&m, &build_cluster(3, MAX).unwrap()).unwrap();
        assert!((f - 1.0).abs() < 1e-14);
        assert!(SymbolicState::new_chain(0).is_err());
    }

    #[test]
    fn classify_examples() {
        let c5 = SymbolicState::new_chain(5).unwrap();
        assert_eq!(c5.classify_target(q(3)).unwrap(), Position::Bulk);
        assert_eq!(c5.classify_target(q(5)).unwrap(), Position::EndRight);
        assert_eq!(c5.classify_target(q(1)).unwrap(), Position::EndLeft);
        assert_eq!(c5.classify_target(q(6)).unwrap_err(), Error::UnknownQubit(q(6)));

        let (c3, _) = SymbolicState::new_chain(3)
            .unwrap()
            .symbolic_measure(q(2), PauliBasis::Z, Outcome::Plus)
            .unwrap();
        assert_eq!(c3.classify_target(q(1)).unwrap(), Position::Isolated);
        assert_eq!(c3.classify_target(q(2)).unwrap_err(), Error::UnknownQubit(q(2)));

        let (c4, _) = SymbolicState::new_chain(4)
            .unwrap()
            .symbolic_measure(q(1), PauliBasis::X, Outcome::Plus)
            .unwrap();
        assert_eq!(c4.classify_target(q(2)).unwrap(), Position::Decoupled);
    }

    #[test]
    fn absorb_examples() {
        assert_eq!(absorb_byproduct(PauliBasis::Z, Outcome::Plus, Byproduct::S), (PauliBasis::Z, Outcome::Plus));
        assert_eq!(absorb_byproduct(PauliBasis::X, Outcome::Plus, Byproduct::Z), (PauliBasis::X, Outcome::Minus));
        assert_eq!(absorb_byproduct(PauliBasis::X, Outcome::Plus, Byproduct::S), (PauliBasis::Y, Outcome::Minus));
    }

    /// Every entry of the rewrite table against direct projection of
    /// `S^t|ψ⟩`, on a state with no special symmetry.
    #[test]
    fn absorb_table_matches_oracle() {
        let psi = build_cluster(3, MAX)
            .unwrap()
            .apply_local(q(1), Gate::H)
            .unwrap()
            .apply_local(q(3), Gate::S)
            .unwrap()
            .apply_local(q(2), Gate::H)
            .unwrap()
            .apply_cz(q(1), q(3))
            .unwrap();
        for t in 0..4u8 {
            let mut dressed = psi.clone();
            for _ in 0..t {
                dressed = dressed.apply_local(q(2), Gate::S).unwrap();
            }
            for basis in PauliBasis::ALL {
                for o in Outcome::BOTH {
                    let (b2, o2) = absorb_byproduct(basis, o, Byproduct::new(t));
                    let (p1, r1) = dressed.project_measure(q(2), basis, o).unwrap();
                    let (p2, r2) = psi.project_measure(q(2), b2, o2).unwrap();
                    assert!((p1 - p2).abs() < 1e-12, "t={t} {basis}{o}");
                    let f = fidelity_mod_phase(&r1, &r2).unwrap();
                    assert!((f - 1.0).abs() < 1e-12, "t={t} {basis}{o}: {f}");
                }
            }
        }
    }

    #[test]
    fn measure_examples() {
        let c5 = SymbolicState::new_chain(5).unwrap();

        let (s, rule) = c5.symbolic_measure(q(3), PauliBasis::Z, Outcome::Plus).unwrap();
        assert_eq!(segs(&s), vec![vec![1, 2], vec![4, 5]]);
        assert!(s.byproducts().is_empty());
        assert_eq!(rule, RuleTag::ZBulkSever);

        let (s, rule) = c5.symbolic_measure(q(3), PauliBasis::Z, Outcome::Minus).unwrap();
        assert_eq!(segs(&s), vec![vec![1, 2], vec![4, 5]]);
        assert_eq!(s.byproduct(q(2)), Byproduct::Z);
        assert_eq!(s.byproduct(q(4)), Byproduct::Z);
        assert_eq!(rule, RuleTag::ZBulkSeverFlip);

        let (s, rule) = SymbolicState::new_chain(3)
            .unwrap()
            .symbolic_measure(q(1), PauliBasis::Y, Outcome::Plus)
            .unwrap();
        assert_eq!(segs(&s), vec![vec![2, 3]]);
        assert_eq!(s.byproduct(q(2)), Byproduct::S);
        assert_eq!(rule, RuleTag::YEndTwist);

        let (s, rule) = c5.symbolic_measure(q(3), PauliBasis::Y, Outcome::Minus).unwrap();
        assert_eq!(segs(&s), vec![vec![1, 2, 4, 5]]);
        assert_eq!(s.byproduct(q(2)), Byproduct::S_DAGGER);
        assert_eq!(s.byproduct(q(4)), Byproduct::S_DAGGER);
        assert!(s.splice_bonds().is_empty());
        assert_eq!(rule, RuleTag::YBulkAntiTwist);

        let (s, rule) = SymbolicState::new_chain(4)
            .unwrap()
            .symbolic_measure(q(1), PauliBasis::X, Outcome::Plus)
            .unwrap();
        assert_eq!(s.decoupled(), &[DecoupledQubit { id: q(2), value: 0 }]);
        assert_eq!(segs(&s), vec![vec![3, 4]]);
        assert_eq!(rule, RuleTag::XEndSkip);
        assert_eq!(s.history().len(), 1);
    }

    #[test]
    fn right_end_rules_mirror_left() {
        let (s, rule) = SymbolicState::new_chain(4)
            .unwrap()
            .symbolic_measure(q(4), PauliBasis::X, Outcome::Minus)
            .unwrap();
        assert_eq!(rule, RuleTag::XEndSkipFlip);
        assert_eq!(s.decoupled(), &[DecoupledQubit { id: q(3), value: 1 }]);
        assert_eq!(segs(&s), vec![vec![1, 2]]);
        assert_eq!(s.byproduct(q(2)), Byproduct::Z);
    }

    #[test]
    fn degenerate_x_end_on_pair() {
        for o in Outcome::BOTH {
            let (s, rule) = SymbolicState::new_chain(2)
                .unwrap()
                .symbolic_measure(q(1), PauliBasis::X, o)
                .unwrap();
            assert_eq!(rule, RuleTag::from_parts(PauliBasis::X, false, o));
            assert!(s.segments().is_empty());
            assert_eq!(s.decoupled(), &[DecoupledQubit { id: q(2), value: o.bit() }]);
            assert!(s.byproducts().is_empty());
            let f = fidelity_mod_phase(&s.materialize(MAX).unwrap(), &oracle_residual(2, 1, PauliBasis::X, o))
                .unwrap();
            assert!((f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn splice_segment_is_refused() {
        let (s, rule) = SymbolicState::new_chain(5)
            .unwrap()
            .symbolic_measure(q(3), PauliBasis::X, Outcome::Plus)
            .unwrap();
        assert_eq!(rule, RuleTag::XBulkSplice);
        assert_eq!(s.splice_bonds()[0].kind, SpliceKind::CorrelatedSplice);
        let err = s.symbolic_measure(q(2), PauliBasis::Z, Outcome::Plus).unwrap_err();
        assert_eq!(err.code(), "unsupported_composition");
        assert!(s.outcome_probability(q(1), PauliBasis::Z, Outcome::Plus).is_err());
    }

    #[test]
    fn decoupled_admits_only_z() {
        let (s, _) = SymbolicState::new_chain(4)
            .unwrap()
            .symbolic_measure(q(1), PauliBasis::X, Outcome::Minus)
            .unwrap();
        assert!(matches!(
            s.symbolic_measure(q(2), PauliBasis::X, Outcome::Plus),
            Err(Error::UnsupportedComposition { .. })
        ));
        assert!(matches!(
            s.symbolic_measure(q(2), PauliBasis::Z, Outcome::Plus),
            Err(Error::ImpossibleOutcome { .. })
        ));
        let (t, rule) = s.symbolic_measure(q(2), PauliBasis::Z, Outcome::Minus).unwrap();
        assert_eq!(rule, RuleTag::ZEndPruneFlip);
        assert!(t.decoupled().is_empty());
        assert_eq!(s.outcome_probability(q(2), PauliBasis::Z, Outcome::Minus).unwrap(), 1.0);
    }

    #[test]
    fn isolated_measurements() {
        let (s, _) = SymbolicState::new_chain(3)
            .unwrap()
            .symbolic_measure(q(2), PauliBasis::Z, Outcome::Minus)
            .unwrap();
        // q1 is isolated and carries Z: |−⟩, so X gives Minus deterministically
        assert_eq!(s.byproduct(q(1)), Byproduct::Z);
        assert_eq!(s.outcome_probability(q(1), PauliBasis::X, Outcome::Minus).unwrap(), 1.0);
        assert!(s.symbolic_measure(q(1), PauliBasis::X, Outcome::Plus).is_err());
        let (t, _) = s.symbolic_measure(q(1), PauliBasis::Z, Outcome::Minus).unwrap();
        assert_eq!(t.live_qubits(), vec![q(3)]);
        assert!(t.byproducts().keys().all(|&k| k == q(3)));
    }

    #[test]
    fn materialize_examples() {
        let (s, _) = SymbolicState::new_chain(3)
            .unwrap()
            .symbolic_measure(q(2), PauliBasis::X, Outcome::Plus)
            .unwrap();
        let f = fidelity_mod_phase(
            &s.materialize(MAX).unwrap(),
            &oracle_residual(3, 2, PauliBasis::X, Outcome::Plus),
        )
        .unwrap();
        assert!((f - 1.0).abs() < 1e-12);

        let (s, _) = SymbolicState::new_chain(2)
            .unwrap()
            .symbolic_measure(q(1), PauliBasis::Y, Outcome::Plus)
            .unwrap();
        let plus_i = PureState::product(vec![q(2)], &[PauliBasis::Y.eigenvector(Outcome::Plus)]).unwrap();
        let f = fidelity_mod_phase(&s.materialize(MAX).unwrap(), &plus_i).unwrap();
        assert!((f - 1.0).abs() < 1e-14);

        let big = SymbolicState::new_chain(21).unwrap();
        assert!(matches!(big.materialize(MAX), Err(Error::SizeLimit { limit: 20, .. })));
    }

    #[test]
    fn every_single_rule_matches_oracle_small() {
        for n in 2..=6usize {
            for k in 1..=n as u32 {
                for basis in PauliBasis::ALL {
                    for o in Outcome::BOTH {
                        let (s, _) = SymbolicState::new_chain(n)
                            .unwrap()
                            .symbolic_measure(q(k), basis, o)
                            .unwrap();
                        let f = fidelity_mod_phase(
                            &s.materialize(MAX).unwrap(),
                            &oracle_residual(n, k, basis, o),
                        )
                        .unwrap();
                        assert!((f - 1.0).abs() < 1e-10, "n={n} k={k} {basis}{o}: {f}");
                    }
                }
            }
        }
    }

    #[test]
    fn table_formula_examples() {
        let plus = PauliBasis::X.eigenvector(Outcome::Plus);
        let pp = PureState::product(vec![q(1), q(3)], &[plus, plus]).unwrap();
        let lit = table_formula_state(3, q(2), PauliBasis::Z, Outcome::Plus, MAX).unwrap();
        assert!((fidelity_mod_phase(&lit, &pp).unwrap() - 1.0).abs() < 1e-14);

        let c13 = PureState::cluster_on(&[q(1), q(3)], MAX).unwrap();
        let lit = table_formula_state(3, q(2), PauliBasis::X, Outcome::Plus, MAX).unwrap();
        assert!((fidelity_mod_phase(&lit, &c13).unwrap() - 1.0).abs() < 1e-14);

        let expect = PureState::cluster_on(&[q(2), q(3)], MAX)
            .unwrap()
            .apply_local(q(2), Gate::SDagger)
            .unwrap();
        let lit = table_formula_state(3, q(1), PauliBasis::Y, Outcome::Minus, MAX).unwrap();
        assert!((fidelity_mod_phase(&lit, &expect).unwrap() - 1.0).abs() < 1e-14);

        assert!(table_formula_state(1, q(1), PauliBasis::Z, Outcome::Plus, MAX).is_err());
        assert!(table_formula_state(3, q(4), PauliBasis::Z, Outcome::Plus, MAX).is_err());
    }

    #[test]
    fn canonical_json_shape() {
        let (s, _) = SymbolicState::new_chain(5)
            .unwrap()
            .symbolic_measure(q(3), PauliBasis::X, Outcome::Minus)
            .unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"segments":[[1,2,4,5]],"byproducts":{},"decoupled":[],"splice_bonds":[{"left":2,"right":4,"kind":"anticorrelated"}],"history":[{"qubit":3,"basis":"X","outcome":"-","rule":"X_Bulk_SpliceFlip"}]}"#
        );
        let back = SymbolicState::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);

        let (y, _) = SymbolicState::new_chain(3)
            .unwrap()
            .symbolic_measure(q(1), PauliBasis::Y, Outcome::Minus)
            .unwrap();
        let json = serde_json::to_string(&y).unwrap();
        assert!(json.contains(r#""byproducts":{"2":3}"#), "{json}");
        assert_eq!(SymbolicState::from_json(&y.to_json()).unwrap(), y);

        let bad = serde_json::json!({"segments":[[1,2],[2]],"byproducts":{},"decoupled":[],"splice_bonds":[],"history":[]});
        assert!(SymbolicState::from_json(&bad).is_err());
    }

    #[test]
    fn rule_tag_parts_round_trip() {
        for rule in RuleTag::ALL {
            assert_eq!(RuleTag::from_parts(rule.basis(), rule.is_bulk(), rule.outcome()), rule);
            let json = serde_json::to_string(&rule).unwrap();
            assert_eq!(json, format!("\"{}\"", rule.name()));
        }
    }
}
