//! Line-oriented measurement scripts.
//!
//! ```text
//! # comment
//! CHAIN 5
//! M 3 Y +
//! M 1 X ?      # sampled outcome
//! M 5 Z ? 42   # sampled with a step-local seed
//! ```

use std::fmt;
use std::str::FromStr;

use ribbonchain_core::{Outcome, PauliBasis, QubitId};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeChoice {
    Fixed(Outcome),
    Random,
}

impl fmt::Display for OutcomeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeChoice::Fixed(o) => write!(f, "{o}"),
            OutcomeChoice::Random => f.write_str("?"),
        }
    }
}

impl FromStr for OutcomeChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+" => Ok(OutcomeChoice::Fixed(Outcome::Plus)),
            "-" | "−" => Ok(OutcomeChoice::Fixed(Outcome::Minus)),
            "?" => Ok(OutcomeChoice::Random),
            _ if s.eq_ignore_ascii_case("random") => Ok(OutcomeChoice::Random),
            _ => Err(format!("expected outcome +, - or ?, found {s:?}")),
        }
    }
}

impl Serialize for OutcomeChoice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            OutcomeChoice::Fixed(o) => o.serialize(s),
            OutcomeChoice::Random => s.serialize_str("random"),
        }
    }
}

impl<'de> Deserialize<'de> for OutcomeChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub qubit: QubitId,
    pub basis: PauliBasis,
    pub outcome: OutcomeChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementScript {
    pub chain_size: usize,
    pub steps: Vec<ScriptStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for MeasurementScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CHAIN {}", self.chain_size)?;
        for s in &self.steps {
            write!(f, "M {} {} {}", s.qubit, s.basis, s.outcome)?;
            if let Some(seed) = s.seed {
                write!(f, " {seed}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for MeasurementScript {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_script(s)
    }
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut column = 0;
    let mut start_col = 0;
    for (i, ch) in line.char_indices() {
        column += 1;
        match (ch.is_whitespace(), start) {
            (false, None) => {
                start = Some(i);
                start_col = column;
            }
            (true, Some(s)) => {
                out.push((start_col, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((start_col, &line[s..]));
    }
    out
}

pub fn parse_script(text: &str) -> Result<MeasurementScript, ParseError> {
    let mut chain_size = None;
    let mut steps = Vec::new();
    let mut last_line = 1;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let code = raw.split('#').next().unwrap_or("");
        let toks = tokens(code);
        let Some(&(kw_col, keyword)) = toks.first() else { continue };
        let err = |column: usize, message: String| ParseError { line: line_no, column, message };

        if keyword.eq_ignore_ascii_case("CHAIN") {
            if chain_size.is_some() {
                return Err(err(kw_col, "duplicate CHAIN declaration".into()));
            }
            let &(col, value) = toks.get(1).ok_or_else(|| err(kw_col, "CHAIN needs a size".into()))?;
            let n: usize = value.parse().map_err(|_| err(col, format!("expected chain size, found {value:?}")))?;
            if n < 1 {
                return Err(err(col, "chain size must be at least 1".into()));
            }
            if let Some(&(col, extra)) = toks.get(2) {
                return Err(err(col, format!("unexpected {extra:?} after chain size")));
            }
            chain_size = Some(n);
        } else if keyword.eq_ignore_ascii_case("M") {
            if chain_size.is_none() {
                return Err(err(kw_col, "CHAIN must come before measurements".into()));
            }
            if toks.len() < 4 {
                let col = toks.last().map(|(c, t)| c + t.chars().count()).unwrap_or(kw_col);
                return Err(err(col, "expected M <qubit> <Z|X|Y> <+|-|?> [seed]".into()));
            }
            let (qc, qs) = toks[1];
            let qubit: u32 = qs.parse().map_err(|_| err(qc, format!("expected qubit number, found {qs:?}")))?;
            if qubit == 0 {
                return Err(err(qc, "qubits are numbered from 1".into()));
            }
            let (bc, bs) = toks[2];
            let basis: PauliBasis = bs.parse().map_err(|_| err(bc, format!("expected Z, X or Y, found {bs:?}")))?;
            let (oc, os) = toks[3];
            let outcome: OutcomeChoice = os.parse().map_err(|m| err(oc, m))?;
            let seed = match toks.get(4) {
                Some(&(sc, ss)) => Some(ss.parse().map_err(|_| err(sc, format!("expected seed, found {ss:?}")))?),
                None => None,
            };
            if let Some(&(col, extra)) = toks.get(5) {
                return Err(err(col, format!("unexpected {extra:?}")));
            }
            steps.push(ScriptStep { qubit: QubitId(qubit), basis, outcome, seed });
        } else {
            return Err(err(kw_col, format!("unknown keyword {keyword:?}")));
        }
    }

    let chain_size = chain_size.ok_or(ParseError { line: last_line, column: 1, message: "missing CHAIN".into() })?;
    Ok(MeasurementScript { chain_size, steps })
}
