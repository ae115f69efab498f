//! Oracle harness.
//!
//! Grades every single-measurement case of the rule table against the
//! statevector engine, checks ribbon correspondence along random measurement
//! sequences, and tabulates how far the literal X-bulk splice formula is from
//! the exact residual.

use std::fmt::Write as _;
use std::ops::Range;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qubit::{Outcome, PauliBasis, QubitId};
use crate::ribbon::{correspondence_check, RibbonChainState, SurgeryKind};
use crate::statevector::{
    build_cluster, fidelity_mod_phase, Gate, PureState, DEFAULT_MAX_QUBITS, DEFAULT_SCHMIDT_TOLERANCE,
};
use crate::symbolic::{table_formula_state, Position, RuleTag, SymbolicState};

/// Single-measurement exactness bar.
pub const FIDELITY_TOLERANCE: f64 = 1e-10;
/// Per-step bar along measurement sequences.
pub const SEQUENCE_FIDELITY_TOLERANCE: f64 = 1e-9;
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    /// Symbolic materialization and the literal table formula both match.
    LiteralMatchToo,
    /// Symbolic materialization matches; the literal formula does not.
    ExactMatch,
    /// Symbolic materialization matches; the literal formula only agrees on
    /// probability and Schmidt rank.
    ConnectivityOnly,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CasePosition {
    End,
    Bulk,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub n: usize,
    pub qubit: QubitId,
    pub position: CasePosition,
    pub basis: PauliBasis,
    pub outcome: Outcome,
    pub rule: RuleTag,
    pub probability: f64,
    pub fidelity_exact: f64,
    pub fidelity_literal: f64,
    pub rank_left_right: usize,
    pub rank_claimed: usize,
    pub verdict: Verdict,
}

impl CaseReport {
    /// X-bulk cases need an exact match and rank 2; every other case needs
    /// the literal formula to match as well.
    pub fn required_met(&self) -> bool {
        if self.basis == PauliBasis::X && self.position == CasePosition::Bulk {
            self.fidelity_exact >= 1.0 - FIDELITY_TOLERANCE && self.rank_left_right == 2
        } else {
            self.verdict == Verdict::LiteralMatchToo
        }
    }

    pub fn probability_ok(&self) -> bool {
        (self.probability - 0.5).abs() <= PROBABILITY_TOLERANCE
    }
}

/// Left side of the cut used for the rank column. Bulk cases cut at the
/// measured site; end cases cut off the nearest surviving qubit.
fn rank_cut(n: usize, k: usize) -> Option<Vec<QubitId>> {
    let ids = |r: Range<usize>| r.map(|v| QubitId(v as u32)).collect::<Vec<_>>();
    if n < 3 {
        None
    } else if k == 1 {
        Some(ids(2..3))
    } else if k == n {
        Some(ids(1..n - 1))
    } else {
        Some(ids(1..k))
    }
}

fn claimed_rank(n: usize, bulk: bool, basis: PauliBasis) -> usize {
    match (bulk, basis) {
        (true, PauliBasis::Z) => 1,
        (true, _) => 2,
        (false, PauliBasis::X) => 1,
        (false, _) if n > 2 => 2,
        (false, _) => 1,
    }
}

fn schmidt_rank(state: &PureState, cut: &Option<Vec<QubitId>>) -> Result<usize> {
    match cut {
        Some(left) => Ok(state.schmidt_spectrum(left, DEFAULT_SCHMIDT_TOLERANCE)?.rank),
        None => Ok(1),
    }
}

pub fn check_case(n: usize, q: QubitId, basis: PauliBasis, o: Outcome) -> Result<CaseReport> {
    let k = q.0 as usize;
    if n < 2 || k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("position {q} invalid for chain of {n}")));
    }
    let bulk = k != 1 && k != n;
    let cluster = build_cluster(n, DEFAULT_MAX_QUBITS)?;
    let probability = cluster.outcome_probability(q, basis, o)?;
    let (_, oracle) = cluster.project_measure(q, basis, o)?;

    let (sym, rule) = SymbolicState::new_chain(n)?.symbolic_measure(q, basis, o)?;
    let exact = sym.materialize(DEFAULT_MAX_QUBITS)?;
    let literal = table_formula_state(n, q, basis, o, DEFAULT_MAX_QUBITS)?;
    let fidelity_exact = fidelity_mod_phase(&exact, &oracle)?;
    let fidelity_literal = fidelity_mod_phase(&literal, &oracle)?;

    let cut = rank_cut(n, k);
    let rank_left_right = schmidt_rank(&oracle, &cut)?;
    let rank_claimed = claimed_rank(n, bulk, basis);

    let verdict = if fidelity_exact < 1.0 - FIDELITY_TOLERANCE {
        Verdict::Fail
    } else if fidelity_literal >= 1.0 - FIDELITY_TOLERANCE {
        Verdict::LiteralMatchToo
    } else if (probability - 0.5).abs() <= PROBABILITY_TOLERANCE && rank_left_right == rank_claimed {
        Verdict::ConnectivityOnly
    } else {
        Verdict::ExactMatch
    };

    Ok(CaseReport {
        n,
        qubit: q,
        position: if bulk { CasePosition::Bulk } else { CasePosition::End },
        basis,
        outcome: o,
        rule,
        probability,
        fidelity_exact,
        fidelity_literal,
        rank_left_right,
        rank_claimed,
        verdict,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerdictCounts {
    pub literal_match_too: usize,
    pub exact_match: usize,
    pub connectivity_only: usize,
    pub fail: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub n_min: usize,
    pub n_max: usize,
    pub cases: Vec<CaseReport>,
    pub counts: VerdictCounts,
    pub required_missed: usize,
    #[serde(skip)]
    pub duration: Duration,
}

impl SuiteSummary {
    pub fn all_required_met(&self) -> bool {
        self.required_missed == 0
    }

    /// Every case reached `LiteralMatchToo`, X bulk included.
    pub fn all_literal(&self) -> bool {
        self.cases.iter().all(|c| c.verdict == Verdict::LiteralMatchToo)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>3} {:>3} {:<4} {:<5} {:<3} {:<20} {:>8} {:>14} {:>14} {:>4} {:>5}  verdict",
            "n", "q", "pos", "basis", "out", "rule", "prob", "fid_exact", "fid_literal", "rank", "claim"
        );
        for c in &self.cases {
            let pos = match c.position {
                CasePosition::End => "end",
                CasePosition::Bulk => "bulk",
            };
            let _ = writeln!(
                out,
                "{:>3} {:>3} {:<4} {:<5} {:<3} {:<20} {:>8.6} {:>14.12} {:>14.12} {:>4} {:>5}  {:?}{}",
                c.n,
                c.qubit,
                pos,
                c.basis,
                c.outcome,
                c.rule,
                c.probability,
                c.fidelity_exact,
                c.fidelity_literal,
                c.rank_left_right,
                c.rank_claimed,
                c.verdict,
                if c.required_met() { "" } else { "  MISSED" }
            );
        }
        let k = &self.counts;
        let _ = writeln!(
            out,
            "cases {}  literal {}  exact {}  connectivity-only {}  fail {}  required missed {}",
            self.cases.len(),
            k.literal_match_too,
            k.exact_match,
            k.connectivity_only,
            k.fail,
            self.required_missed
        );
        out
    }
}

/// Every position, basis and outcome for chain sizes `n_min..=n_max`, in
/// (n, q, basis, outcome) order.
pub fn run_table_suite(n_min: usize, n_max: usize) -> Result<SuiteSummary> {
    if n_min < 2 || n_min > n_max || n_max > DEFAULT_MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "suite range {n_min}..={n_max} must satisfy 2 ≤ n_min ≤ n_max ≤ {DEFAULT_MAX_QUBITS}"
        )));
    }
    let start = Instant::now();
    let keys: Vec<(usize, u32, PauliBasis, Outcome)> = (n_min..=n_max)
        .flat_map(|n| {
            (1..=n as u32).flat_map(move |k| {
                PauliBasis::ALL.into_iter().flat_map(move |b| Outcome::BOTH.into_iter().map(move |o| (n, k, b, o)))
            })
        })
        .collect();
    let cases = keys
        .par_iter()
        .map(|&(n, k, b, o)| check_case(n, QubitId(k), b, o))
        .collect::<Result<Vec<_>>>()?;

    let mut counts = VerdictCounts::default();
    for c in &cases {
        match c.verdict {
            Verdict::LiteralMatchToo => counts.literal_match_too += 1,
            Verdict::ExactMatch => counts.exact_match += 1,
            Verdict::ConnectivityOnly => counts.connectivity_only += 1,
            Verdict::Fail => counts.fail += 1,
        }
    }
    let required_missed = cases.iter().filter(|c| !c.required_met()).count();
    Ok(SuiteSummary { n_min, n_max, cases, counts, required_missed, duration: start.elapsed() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SequenceLength {
    /// Stop after this many measurements.
    Steps(usize),
    /// Stop once at most this many qubits remain unmeasured.
    UntilLive(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceStep {
    pub qubit: QubitId,
    pub basis: PauliBasis,
    pub outcome: Outcome,
    pub rule: Option<RuleTag>,
    pub surgery: Option<SurgeryKind>,
    pub probability: f64,
    pub fidelity: f64,
    pub correspondence: bool,
    pub error: Option<String>,
}

impl SequenceStep {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.correspondence && self.fidelity >= 1.0 - SEQUENCE_FIDELITY_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedMove {
    pub qubit: QubitId,
    pub basis: PauliBasis,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceReport {
    pub n: usize,
    pub seed: u64,
    pub steps: Vec<SequenceStep>,
    pub skipped: Vec<SkippedMove>,
}

impl SequenceReport {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(SequenceStep::passed)
    }

    pub fn min_fidelity(&self) -> f64 {
        self.steps.iter().map(|s| s.fidelity).fold(1.0, f64::min)
    }
}

/// Bases drawn for a target: X only where it closes without a splice.
fn candidate_bases(position: Position) -> &'static [PauliBasis] {
    match position {
        Position::Decoupled => &[PauliBasis::Z],
        Position::Bulk => &[PauliBasis::Z, PauliBasis::Y],
        Position::EndLeft | Position::EndRight | Position::Isolated => &[PauliBasis::Z, PauliBasis::X, PauliBasis::Y],
    }
}

/// A seeded random adaptive measurement sequence on `|C_n⟩`. Outcomes are
/// drawn from the oracle's Born probabilities; after each step the symbolic
/// state is materialized and compared with the oracle, and the ribbon chain
/// is checked against the symbolic state.
pub fn random_sequence_test(n: usize, length: SequenceLength, seed: u64) -> Result<SequenceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle = build_cluster(n, DEFAULT_MAX_QUBITS)?;
    let mut sym = SymbolicState::new_chain(n)?;
    let mut chain = RibbonChainState::initial_chain(n)?;
    let mut steps = Vec::new();
    let mut skipped = Vec::new();
    let max_attempts = 16 * n + 64;

    for _ in 0..max_attempts {
        let live = sym.live_qubits();
        let done = match length {
            SequenceLength::Steps(k) => steps.len() >= k,
            SequenceLength::UntilLive(m) => live.len() <= m,
        };
        if done || live.is_empty() {
            break;
        }
        let q = live[rng.random_range(0..live.len())];
        let bases = candidate_bases(sym.classify_target(q)?);
        let basis = bases[rng.random_range(0..bases.len())];
        let p_plus = oracle.outcome_probability(q, basis, Outcome::Plus)?;
        let o = if rng.random::<f64>() < p_plus { Outcome::Plus } else { Outcome::Minus };

        let mut step = SequenceStep {
            qubit: q,
            basis,
            outcome: o,
            rule: None,
            surgery: None,
            probability: if o == Outcome::Plus { p_plus } else { 1.0 - p_plus },
            fidelity: 0.0,
            correspondence: false,
            error: None,
        };
        let (next_sym, rule) = match sym.symbolic_measure(q, basis, o) {
            Ok(r) => r,
            Err(Error::UnsupportedComposition { reason, .. }) => {
                skipped.push(SkippedMove { qubit: q, basis, reason });
                continue;
            }
            Err(e) => {
                step.error = Some(e.to_string());
                steps.push(step);
                break;
            }
        };
        step.rule = Some(rule);
        let outcome = chain
            .apply_surgery(q, basis, o)
            .and_then(|(next_chain, event)| {
                let (_, next_oracle) = oracle.project_measure(q, basis, o)?;
                let fidelity = fidelity_mod_phase(&next_sym.materialize(DEFAULT_MAX_QUBITS)?, &next_oracle)?;
                let report = correspondence_check(&next_chain, &next_sym)?;
                Ok((next_chain, next_oracle, event, fidelity, report))
            });
        match outcome {
            Ok((next_chain, next_oracle, event, fidelity, report)) => {
                step.surgery = Some(event.kind);
                step.fidelity = fidelity;
                step.correspondence = report.passed();
                if !report.passed() {
                    step.error = Some(report.mismatches.join("; "));
                }
                chain = next_chain;
                oracle = next_oracle;
                sym = next_sym;
                steps.push(step);
            }
            Err(e) => {
                step.error = Some(e.to_string());
                steps.push(step);
                break;
            }
        }
    }
    Ok(SequenceReport { n, seed, steps, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceSweep {
    pub n: usize,
    pub runs: usize,
    pub total_steps: usize,
    pub failed_seeds: Vec<u64>,
    pub min_fidelity: f64,
    #[serde(skip)]
    pub duration: Duration,
}

impl SequenceSweep {
    pub fn passed(&self) -> bool {
        self.failed_seeds.is_empty()
    }
}

pub fn sequence_sweep(n: usize, length: SequenceLength, seeds: Range<u64>) -> Result<SequenceSweep> {
    let start = Instant::now();
    let reports = seeds
        .into_par_iter()
        .map(|seed| random_sequence_test(n, length, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceSweep {
        n,
        runs: reports.len(),
        total_steps: reports.iter().map(|r| r.steps.len()).sum(),
        failed_seeds: reports.iter().filter(|r| !r.passed()).map(|r| r.seed).collect(),
        min_fidelity: reports.iter().map(SequenceReport::min_fidelity).fold(1.0, f64::min),
        duration: start.elapsed(),
    })
}

/// A single-qubit Clifford, named by the H/S word that produces it (applied
/// left to right; the empty word is `I`).
#[derive(Debug, Clone, PartialEq)]
pub struct Clifford {
    pub word: String,
    pub matrix: [[Complex64; 2]; 2],
}

fn mat_mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Rescales so the first entry of non-negligible size is real and positive.
fn strip_phase(m: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let pivot = m.iter().flatten().copied().find(|z| z.norm() > 1e-9).expect("nonzero matrix");
    let unit = pivot.conj() / pivot.norm();
    m.map(|row| row.map(|z| z * unit))
}

fn same_matrix(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> bool {
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).norm() < 1e-9)
}

/// The 24 single-qubit Cliffords modulo global phase, by breadth-first
/// search over H and S words.
pub fn single_qubit_cliffords() -> Vec<Clifford> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut found = vec![Clifford { word: "I".into(), matrix: [[one, zero], [zero, one]] }];
    let mut frontier = 0;
    while frontier < found.len() {
        let base = found[frontier].clone();
        for (name, gate) in [("H", Gate::H), ("S", Gate::S)] {
            let matrix = strip_phase(mat_mul(&gate.matrix(), &base.matrix));
            if !found.iter().any(|c| same_matrix(&c.matrix, &matrix)) {
                let word = if base.word == "I" { name.to_string() } else { format!("{}{name}", base.word) };
                found.push(Clifford { word, matrix });
            }
        }
        frontier += 1;
    }
    found
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborCorrection {
    pub qubit: QubitId,
    pub clifford: String,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XBulkRow {
    pub n: usize,
    pub qubit: QubitId,
    pub outcome: Outcome,
    pub probability: f64,
    pub fidelity_literal: f64,
    pub fidelity_exact: f64,
    pub rank_left_right: usize,
    /// Best single Clifford on one neighbor applied to the literal formula.
    pub best_correction: NeighborCorrection,
}

impl XBulkRow {
    pub fn claims_hold(&self) -> bool {
        self.rank_left_right == 2 && (self.probability - 0.5).abs() <= PROBABILITY_TOLERANCE
    }

    pub fn restored(&self) -> bool {
        self.best_correction.fidelity >= 1.0 - FIDELITY_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XBulkDeviationReport {
    pub rows: Vec<XBulkRow>,
}

impl XBulkDeviationReport {
    pub fn row(&self, n: usize, k: u32, o: Outcome) -> Option<&XBulkRow> {
        self.rows.iter().find(|r| r.n == n && r.qubit.0 == k && r.outcome == o)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>3} {:>3} {:<3} {:>8} {:>14} {:>14} {:>4}  correction",
            "n", "q", "out", "prob", "fid_literal", "fid_exact", "rank"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>3} {:>3} {:<3} {:>8.6} {:>14.12} {:>14.12} {:>4}  {} on {} -> {:.12}",
                r.n,
                r.qubit,
                r.outcome,
                r.probability,
                r.fidelity_literal,
                r.fidelity_exact,
                r.rank_left_right,
                r.best_correction.clifford,
                r.best_correction.qubit,
                r.best_correction.fidelity
            );
        }
        out
    }
}

pub fn xbulk_deviation_report(n_max: usize) -> Result<XBulkDeviationReport> {
    if !(3..=DEFAULT_MAX_QUBITS).contains(&n_max) {
        return Err(Error::InvalidArgument(format!("n_max must lie in 3..={DEFAULT_MAX_QUBITS}")));
    }
    let cliffords = single_qubit_cliffords();
    let keys: Vec<(usize, u32, Outcome)> = (3..=n_max)
        .flat_map(|n| (2..n as u32).flat_map(move |k| Outcome::BOTH.into_iter().map(move |o| (n, k, o))))
        .collect();
    let rows = keys
        .par_iter()
        .map(|&(n, k, o)| {
            let q = QubitId(k);
            let case = check_case(n, q, PauliBasis::X, o)?;
            let cluster = build_cluster(n, DEFAULT_MAX_QUBITS)?;
            let (_, oracle) = cluster.project_measure(q, PauliBasis::X, o)?;
            let literal = table_formula_state(n, q, PauliBasis::X, o, DEFAULT_MAX_QUBITS)?;
            let mut best: Option<NeighborCorrection> = None;
            for neighbor in [QubitId(k - 1), QubitId(k + 1)] {
                for c in &cliffords {
                    let fidelity = fidelity_mod_phase(&literal.apply_unitary(neighbor, c.matrix)?, &oracle)?;
                    if best.as_ref().is_none_or(|b| fidelity > b.fidelity + 1e-12) {
                        best = Some(NeighborCorrection { qubit: neighbor, clifford: c.word.clone(), fidelity });
                    }
                }
            }
            Ok(XBulkRow {
                n,
                qubit: q,
                outcome: o,
                probability: case.probability,
                fidelity_literal: case.fidelity_literal,
                fidelity_exact: case.fidelity_exact,
                rank_left_right: case.rank_left_right,
                best_correction: best.expect("at least one candidate"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(XBulkDeviationReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_examples() {
        let z = check_case(3, QubitId(2), PauliBasis::Z, Outcome::Plus).unwrap();
        assert_eq!((z.rank_left_right, z.verdict), (1, Verdict::LiteralMatchToo));
        let y = check_case(3, QubitId(2), PauliBasis::Y, Outcome::Plus).unwrap();
        assert_eq!((y.rank_left_right, y.verdict), (2, Verdict::LiteralMatchToo));
        let x = check_case(3, QubitId(2), PauliBasis::X, Outcome::Plus).unwrap();
        assert_eq!((x.rank_left_right, x.verdict), (2, Verdict::ConnectivityOnly));
        assert!(x.fidelity_exact >= 1.0 - FIDELITY_TOLERANCE);
        assert!(x.required_met());
        // |C_2⟩ against (|00⟩+|11⟩)/√2 on the surviving pair
        assert!(x.fidelity_literal.abs() < 1e-12);
    }

    #[test]
    fn case_rejects_bad_position() {
        assert!(check_case(3, QubitId(4), PauliBasis::Z, Outcome::Plus).is_err());
        assert!(check_case(1, QubitId(1), PauliBasis::Z, Outcome::Plus).is_err());
    }

    #[test]
    fn smallest_suite() {
        let s = run_table_suite(2, 2).unwrap();
        assert_eq!(s.cases.len(), 12);
        assert!(s.all_required_met(), "{}", s.to_text());
        assert!(s.cases.iter().all(CaseReport::probability_ok));
    }

    #[test]
    fn suite_is_deterministic() {
        let a = run_table_suite(3, 5).unwrap();
        let b = run_table_suite(3, 5).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_text(), b.to_text());
        assert!(a.all_required_met());
        assert!(!a.all_literal());
        assert!(a
            .cases
            .iter()
            .filter(|c| c.basis != PauliBasis::X)
            .all(|c| c.verdict == Verdict::LiteralMatchToo));
    }

    #[test]
    fn clifford_group_has_24_elements() {
        let group = single_qubit_cliffords();
        assert_eq!(group.len(), 24);
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                assert!(!same_matrix(&a.matrix, &b.matrix));
            }
        }
    }

    #[test]
    fn deviation_at_three_qubits() {
        let report = xbulk_deviation_report(3).unwrap();
        let row = report.row(3, 2, Outcome::Plus).unwrap();
        assert!(row.claims_hold());
        assert!(row.restored(), "{}", report.to_text());
        assert!(row.fidelity_literal < 1.0 - FIDELITY_TOLERANCE);
    }

    #[test]
    fn sequences() {
        let trivial = random_sequence_test(2, SequenceLength::Steps(1), 7).unwrap();
        assert_eq!(trivial.steps.len(), 1);
        assert!(trivial.passed());

        let long = random_sequence_test(8, SequenceLength::UntilLive(2), 42).unwrap();
        assert!(long.passed(), "{long:?}");
        assert!(long.steps.len() >= 6);
        assert_eq!(long, random_sequence_test(8, SequenceLength::UntilLive(2), 42).unwrap());
    }
}
