use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Positive integer label of a qubit. Labels are never reused within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QubitId(pub u32);

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for QubitId {
    fn from(v: u32) -> Self {
        QubitId(v)
    }
}

/// Labels `1..=n`.
pub fn chain_labels(n: usize) -> Vec<QubitId> {
    (1..=n as u32).map(QubitId).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliBasis {
    Z,
    X,
    Y,
}

impl PauliBasis {
    pub const ALL: [PauliBasis; 3] = [PauliBasis::Z, PauliBasis::X, PauliBasis::Y];

    /// Eigenvector for `outcome`: Z → |0⟩,|1⟩; X → |+⟩,|−⟩; Y → |+i⟩,|−i⟩.
    pub fn eigenvector(self, outcome: Outcome) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match (self, outcome) {
            (PauliBasis::Z, Outcome::Plus) => [one, zero],
            (PauliBasis::Z, Outcome::Minus) => [zero, one],
            (PauliBasis::X, Outcome::Plus) => [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            (PauliBasis::X, Outcome::Minus) => [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
            (PauliBasis::Y, Outcome::Plus) => [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
            (PauliBasis::Y, Outcome::Minus) => [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
        }
    }
}

impl fmt::Display for PauliBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PauliBasis::Z => "Z",
            PauliBasis::X => "X",
            PauliBasis::Y => "Y",
        };
        f.write_str(s)
    }
}

impl FromStr for PauliBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Z" | "z" => Ok(PauliBasis::Z),
            "X" | "x" => Ok(PauliBasis::X),
            "Y" | "y" => Ok(PauliBasis::Y),
            other => Err(Error::InvalidArgument(format!("unknown basis {other:?}"))),
        }
    }
}

/// Plus selects the first eigenvector of a basis, Minus the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+",
            Outcome::Minus => "-",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+" => Ok(Outcome::Plus),
            "-" => Ok(Outcome::Minus),
            other => Err(Error::InvalidArgument(format!("unknown outcome {other:?}"))),
        }
    }
}
