//! Dense-amplitude engine.
//!
//! A [`PureState`] stores `2^n` complex amplitudes over an ordered list of
//! qubit labels. The first label is the most significant bit of the basis
//! index: for labels `[a, b, c]` the amplitude of `|x_a x_b x_c⟩` lives at
//! index `4·x_a + 2·x_b + x_c`. Cross-state comparisons always go through
//! label-aware alignment ([`PureState::reordered`]), never raw index order.
//!
//! States are immutable values; every operation returns a new state.

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{chain_labels, Outcome, PauliBasis, QubitId};

pub const DEFAULT_MAX_QUBITS: usize = 20;

/// Probabilities below this are treated as impossible outcomes.
pub const IMPOSSIBLE_OUTCOME_THRESHOLD: f64 = 1e-14;

pub const DEFAULT_SCHMIDT_TOLERANCE: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Named single-qubit gates accepted by [`PureState::apply_local`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    Z,
    S,
    #[serde(rename = "S_dagger")]
    SDagger,
    H,
    X,
    Y,
}

impl Gate {
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            Gate::Z => [[ONE, ZERO], [ZERO, -ONE]],
            Gate::S => [[ONE, ZERO], [ZERO, I]],
            Gate::SDagger => [[ONE, ZERO], [ZERO, -I]],
            Gate::H => [[h, h], [h, -h]],
            Gate::X => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Y => [[ZERO, -I], [I, ZERO]],
        }
    }

    /// `S^t` for `t` taken mod 4, or `None` for the identity.
    pub fn s_power(t: u8) -> Option<Gate> {
        match t % 4 {
            0 => None,
            1 => Some(Gate::S),
            2 => Some(Gate::Z),
            _ => Some(Gate::SDagger),
        }
    }
}

/// Eigenvalues of a reduced density operator, sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    pub coefficients: Vec<f64>,
    pub rank: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    labels: Vec<QubitId>,
    amplitudes: Vec<Complex64>,
}

/// JSON debug dump: `{"labels":[…],"amplitudes":[[re,im],…]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeDump {
    pub labels: Vec<QubitId>,
    pub amplitudes: Vec<[f64; 2]>,
}

/// Builds `|C_n⟩` on labels `1..=n` by evaluating `2^{-n/2}·(-1)^{Σ x_i x_{i+1}}`.
pub fn build_cluster(n: usize, max_qubits: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::InvalidArgument("cluster size must be at least 1".into()));
    }
    PureState::cluster_on(&chain_labels(n), max_qubits)
}

/// `|⟨a|b⟩|` after aligning `b` to the label order of `a`.
pub fn fidelity_mod_phase(a: &PureState, b: &PureState) -> Result<f64> {
    let b = b.reordered(&a.labels)?;
    let overlap: Complex64 = a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(overlap.norm().min(1.0))
}

fn check_size(n: usize, max_qubits: usize) -> Result<()> {
    if n > max_qubits {
        Err(Error::SizeLimit { requested: n, limit: max_qubits })
    } else {
        Ok(())
    }
}

fn check_distinct(labels: &[QubitId]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for q in labels {
        if q.0 == 0 {
            return Err(Error::InvalidArgument("qubit labels must be positive".into()));
        }
        if !seen.insert(*q) {
            return Err(Error::InvalidArgument(format!("duplicate qubit label {q}")));
        }
    }
    Ok(())
}

#[cfg(test)]
#[inline]
fn remove_bit(index: usize, shift: usize) -> usize {
    let low = index & ((1 << shift) - 1);
    ((index >> (shift + 1)) << shift) | low
}

#[inline]
fn insert_bit(index: usize, shift: usize, bit: usize) -> usize {
    let low = index & ((1 << shift) - 1);
    ((index >> shift) << (shift + 1)) | (bit << shift) | low
}

impl PureState {
    /// Zero-qubit state with unit scalar amplitude.
    pub fn empty() -> Self {
        PureState { labels: Vec::new(), amplitudes: vec![ONE] }
    }

    /// Validates labels and amplitudes and normalizes the vector.
    pub fn from_amplitudes(labels: Vec<QubitId>, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_distinct(&labels)?;
        if labels.len() >= usize::BITS as usize || amplitudes.len() != 1usize << labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes do not match {} labels",
                amplitudes.len(),
                labels.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidArgument("zero vector".into()));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(PureState { labels, amplitudes })
    }

    /// Computational basis state; `bits[i]` is the value of `labels[i]`.
    pub fn basis_state(labels: Vec<QubitId>, bits: &[u8]) -> Result<Self> {
        if bits.len() != labels.len() {
            return Err(Error::InvalidArgument("bit count does not match labels".into()));
        }
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1));
        let mut amplitudes = vec![ZERO; 1 << labels.len()];
        amplitudes[index] = ONE;
        PureState::from_amplitudes(labels, amplitudes)
    }

    /// Tensor product of single-qubit states, one per label.
    pub fn product(labels: Vec<QubitId>, factors: &[[Complex64; 2]]) -> Result<Self> {
        if factors.len() != labels.len() {
            return Err(Error::InvalidArgument("factor count does not match labels".into()));
        }
        let mut amplitudes = vec![ONE];
        for f in factors {
            amplitudes = amplitudes.iter().flat_map(|a| [a * f[0], a * f[1]]).collect();
        }
        PureState::from_amplitudes(labels, amplitudes)
    }

    pub fn plus_state(labels: Vec<QubitId>) -> Result<Self> {
        let plus = PauliBasis::X.eigenvector(Outcome::Plus);
        let factors = vec![plus; labels.len()];
        PureState::product(labels, &factors)
    }

    /// Linear cluster state with CZ bonds between consecutive entries of `labels`.
    pub fn cluster_on(labels: &[QubitId], max_qubits: usize) -> Result<Self> {
        let n = labels.len();
        check_size(n, max_qubits)?;
        check_distinct(labels)?;
        let scale = (0.5f64).powf(n as f64 / 2.0);
        let amplitudes = (0..1usize << n)
            .map(|x| {
                // adjacent bits both set ⇔ a CZ bond contributes −1
                let parity = (x & (x >> 1)).count_ones();
                if parity % 2 == 0 {
                    Complex64::new(scale, 0.0)
                } else {
                    Complex64::new(-scale, 0.0)
                }
            })
            .collect();
        Ok(PureState { labels: labels.to_vec(), amplitudes })
    }

    pub fn labels(&self) -> &[QubitId] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn contains(&self, q: QubitId) -> bool {
        self.labels.contains(&q)
    }

    fn shift_of(&self, q: QubitId) -> Result<usize> {
        let pos = self.labels.iter().position(|&l| l == q).ok_or(Error::UnknownQubit(q))?;
        Ok(self.labels.len() - 1 - pos)
    }

    pub fn apply_cz(&self, a: QubitId, b: QubitId) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidArgument(format!("CZ needs two distinct qubits, got {a} twice")));
        }
        let mask = (1usize << self.shift_of(a)?) | (1usize << self.shift_of(b)?);
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &amp)| if i & mask == mask { -amp } else { amp })
            .collect();
        Ok(PureState { labels: self.labels.clone(), amplitudes })
    }

    pub fn apply_local(&self, q: QubitId, gate: Gate) -> Result<Self> {
        self.apply_unitary(q, gate.matrix())
    }

    /// Applies an arbitrary 2×2 matrix on `q`; the caller supplies a unitary.
    pub fn apply_unitary(&self, q: QubitId, m: [[Complex64; 2]; 2]) -> Result<Self> {
        let shift = self.shift_of(q)?;
        let bit = 1usize << shift;
        let mut amplitudes = self.amplitudes.clone();
        for i in (0..amplitudes.len()).filter(|i| i & bit == 0) {
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[i | bit];
            amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(PureState { labels: self.labels.clone(), amplitudes })
    }

    /// Unnormalized `(⟨e|_q ⊗ 1)|ψ⟩` over the remaining labels.
    fn contract(&self, shift: usize, e: [Complex64; 2]) -> Vec<Complex64> {
        let (c0, c1) = (e[0].conj(), e[1].conj());
        (0..self.amplitudes.len() / 2)
            .map(|j| {
                c0 * self.amplitudes[insert_bit(j, shift, 0)]
                    + c1 * self.amplitudes[insert_bit(j, shift, 1)]
            })
            .collect()
    }

    pub fn outcome_probability(&self, q: QubitId, basis: PauliBasis, o: Outcome) -> Result<f64> {
        let shift = self.shift_of(q)?;
        let p: f64 = self
            .contract(shift, basis.eigenvector(o))
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        Ok(p.clamp(0.0, 1.0))
    }

    /// Projects qubit `q` onto the eigenvector selected by `(basis, o)` and
    /// removes it from the register.
    pub fn project_measure(
        &self,
        q: QubitId,
        basis: PauliBasis,
        o: Outcome,
    ) -> Result<(f64, PureState)> {
        let shift = self.shift_of(q)?;
        let residual = self.contract(shift, basis.eigenvector(o));
        let p: f64 = residual.iter().map(|a| a.norm_sqr()).sum();
        if p < IMPOSSIBLE_OUTCOME_THRESHOLD {
            return Err(Error::ImpossibleOutcome { probability: p });
        }
        let scale = p.sqrt();
        let labels = self.labels.iter().copied().filter(|&l| l != q).collect();
        let amplitudes = residual.into_iter().map(|a| a / scale).collect();
        Ok((p.min(1.0), PureState { labels, amplitudes }))
    }

    /// Born-rule draw from `rng`, followed by [`PureState::project_measure`].
    pub fn sample_measure<R: Rng + ?Sized>(
        &self,
        q: QubitId,
        basis: PauliBasis,
        rng: &mut R,
    ) -> Result<(Outcome, f64, PureState)> {
        let p_plus = self.outcome_probability(q, basis, Outcome::Plus)?;
        let u: f64 = rng.random();
        let outcome = if u < p_plus { Outcome::Plus } else { Outcome::Minus };
        let (p, residual) = self.project_measure(q, basis, outcome)?;
        Ok((outcome, p, residual))
    }

    /// `self ⊗ other`; `self` occupies the high-order bits.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        check_distinct(&labels)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ok(PureState { labels, amplitudes })
    }

    /// Re-inserts qubit `q` in the single-qubit state `single`, placed at
    /// label position `pos`.
    pub fn insert_qubit(&self, q: QubitId, pos: usize, single: [Complex64; 2]) -> Result<Self> {
        if pos > self.labels.len() {
            return Err(Error::InvalidArgument(format!("position {pos} out of range")));
        }
        let mut labels = self.labels.clone();
        labels.insert(pos, q);
        check_distinct(&labels)?;
        let shift = labels.len() - 1 - pos;
        let mut amplitudes = vec![ZERO; 1 << labels.len()];
        for (j, a) in self.amplitudes.iter().enumerate() {
            amplitudes[insert_bit(j, shift, 0)] = a * single[0];
            amplitudes[insert_bit(j, shift, 1)] = a * single[1];
        }
        PureState::from_amplitudes(labels, amplitudes)
    }

    /// Same state expressed in the label order `labels` (a permutation of
    /// the current labels).
    pub fn reordered(&self, labels: &[QubitId]) -> Result<Self> {
        if labels.len() != self.labels.len() {
            return Err(Error::InvalidArgument(format!(
                "label sets differ: {:?} vs {:?}",
                self.labels, labels
            )));
        }
        if labels == self.labels.as_slice() {
            return Ok(self.clone());
        }
        let n = labels.len();
        // source shift for each target position
        let shifts = labels
            .iter()
            .map(|&l| {
                self.shift_of(l).map_err(|_| {
                    Error::InvalidArgument(format!("label sets differ: {:?} vs {:?}", self.labels, labels))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        check_distinct(labels)?;
        let amplitudes = (0..1usize << n)
            .map(|target| {
                let source = shifts.iter().enumerate().fold(0usize, |acc, (pos, &s)| {
                    let bit = (target >> (n - 1 - pos)) & 1;
                    acc | (bit << s)
                });
                self.amplitudes[source]
            })
            .collect();
        Ok(PureState { labels: labels.to_vec(), amplitudes })
    }

    /// Same state with labels in ascending order.
    pub fn sorted(&self) -> Self {
        let mut labels = self.labels.clone();
        labels.sort();
        self.reordered(&labels).expect("permutation of own labels")
    }

    /// Schmidt spectrum across the cut `left | rest`.
    ///
    /// The coefficients are the eigenvalues of the reduced density operator
    /// of the smaller side, obtained from the Gram matrix of the reshaped
    /// amplitude grid.
    pub fn schmidt_spectrum(&self, left: &[QubitId], tolerance: f64) -> Result<SchmidtSpectrum> {
        if left.is_empty() || left.len() >= self.labels.len() {
            return Err(Error::InvalidArgument(
                "Schmidt cut needs a nonempty proper subset of the qubits".into(),
            ));
        }
        check_distinct(left)?;
        let left_shifts = left.iter().map(|&q| self.shift_of(q)).collect::<Result<Vec<_>>>()?;
        let right_shifts: Vec<usize> = (0..self.labels.len())
            .rev()
            .filter(|s| !left_shifts.contains(s))
            .collect();

        let gather = |index: usize, shifts: &[usize]| {
            shifts.iter().fold(0usize, |acc, &s| (acc << 1) | ((index >> s) & 1))
        };
        let (rows, cols) = (1usize << left_shifts.len(), 1usize << right_shifts.len());
        let mut grid = DMatrix::<Complex64>::zeros(rows, cols);
        for (i, a) in self.amplitudes.iter().enumerate() {
            grid[(gather(i, &left_shifts), gather(i, &right_shifts))] = *a;
        }
        let gram = if rows <= cols {
            &grid * grid.adjoint()
        } else {
            grid.adjoint() * &grid
        };
        let mut coefficients: Vec<f64> = gram
            .symmetric_eigenvalues()
            .iter()
            .map(|&v| v.max(0.0))
            .collect();
        coefficients.sort_by(|a, b| b.total_cmp(a));
        let rank = coefficients.iter().filter(|&&c| c > tolerance).count();
        Ok(SchmidtSpectrum { coefficients, rank, tolerance })
    }

    pub fn to_dump(&self) -> AmplitudeDump {
        AmplitudeDump {
            labels: self.labels.clone(),
            amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn from_dump(dump: &AmplitudeDump) -> Result<Self> {
        let amplitudes = dump.amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        let state = PureState::from_amplitudes(dump.labels.clone(), amplitudes)?;
        Ok(state)
    }
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_dump().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let dump = AmplitudeDump::deserialize(deserializer)?;
        PureState::from_dump(&dump).map_err(serde::de::Error::custom)
    }
}
