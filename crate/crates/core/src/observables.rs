//! Three-outcome observables `F` and `G` as projector-valued measures, and
//! the equivalent measurement made with four fixed single-qubit tests.
//!
//! Outcome `−1` is the first singlet of the observable's basis, `+1` the
//! second, and `0` the rank-14 complement. The complement is kept explicit so
//! that Born probabilities are defined on every four-qubit state; its
//! probability is zero on the spin-zero subspace.
//!
//! Post-measurement states follow projection and renormalization for every
//! outcome, including `0`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qstate::{build_phi, build_psi, StateVector};

/// Dense operator on a 16-dimensional (four-qubit) space.
pub type Operator = DMatrix<Complex64>;

pub const LOCAL_QUBITS: usize = 4;
pub const LOCAL_DIM: usize = 1 << LOCAL_QUBITS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("state has {got} qubits, measurement acts on {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("projector for outcome {label} is not Hermitian (deviation {deviation:e})")]
    NotHermitian { label: OutcomeLabel, deviation: f64 },
    #[error("projector for outcome {label} is not idempotent (deviation {deviation:e})")]
    NotIdempotent { label: OutcomeLabel, deviation: f64 },
    #[error("projectors {a} and {b} are not orthogonal (deviation {deviation:e})")]
    NotOrthogonal {
        a: OutcomeLabel,
        b: OutcomeLabel,
        deviation: f64,
    },
    #[error("projectors do not sum to the identity (deviation {deviation:e})")]
    Incomplete { deviation: f64 },
    #[error("invalid local protocol: {0}")]
    BadProtocol(String),
}

/// Measurement outcome label in `{−1, +1, 0}`. Serialized as the integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum OutcomeLabel {
    Minus,
    Plus,
    Zero,
}

impl OutcomeLabel {
    pub const ALL: [OutcomeLabel; 3] = [OutcomeLabel::Minus, OutcomeLabel::Plus, OutcomeLabel::Zero];

    pub fn value(self) -> i8 {
        match self {
            OutcomeLabel::Minus => -1,
            OutcomeLabel::Plus => 1,
            OutcomeLabel::Zero => 0,
        }
    }

    /// Position in [`OutcomeLabel::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl From<OutcomeLabel> for i8 {
    fn from(l: OutcomeLabel) -> i8 {
        l.value()
    }
}

impl TryFrom<i8> for OutcomeLabel {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            -1 => Ok(OutcomeLabel::Minus),
            1 => Ok(OutcomeLabel::Plus),
            0 => Ok(OutcomeLabel::Zero),
            other => Err(format!("outcome label must be -1, 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.value())
    }
}

/// Which observable a side measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    F,
    G,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::F, Setting::G];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Eigenvectors for outcomes −1 and +1.
    pub fn eigenstates(self) -> [StateVector; 2] {
        match self {
            Setting::F => [build_phi(0), build_phi(1)],
            Setting::G => [build_psi(0), build_psi(1)],
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::F => "F",
            Setting::G => "G",
        })
    }
}

/// Ordered list of labeled orthogonal projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Pvm {
    outcomes: Vec<(OutcomeLabel, Operator)>,
}

impl Pvm {
    pub fn new(outcomes: Vec<(OutcomeLabel, Operator)>) -> Self {
        Self { outcomes }
    }

    pub fn outcomes(&self) -> &[(OutcomeLabel, Operator)] {
        &self.outcomes
    }

    pub fn projector(&self, label: OutcomeLabel) -> Option<&Operator> {
        self.outcomes.iter().find(|(l, _)| *l == label).map(|(_, p)| p)
    }

    pub fn dim(&self) -> usize {
        self.outcomes.first().map_or(0, |(_, p)| p.nrows())
    }

    /// Largest entrywise deviation between corresponding projectors.
    pub fn max_deviation(&self, other: &Pvm) -> f64 {
        let mut worst: f64 = 0.0;
        for (label, p) in &self.outcomes {
            let d = match other.projector(*label) {
                Some(q) if q.shape() == p.shape() => max_abs(&(p - q)),
                _ => f64::INFINITY,
            };
            worst = worst.max(d);
        }
        if other.outcomes.len() != self.outcomes.len() {
            worst = f64::INFINITY;
        }
        worst
    }

    /// Checks hermiticity, idempotence, mutual orthogonality, and completeness.
    pub fn validate(&self, tol: f64) -> Result<(), ObservableError> {
        let dim = self.dim();
        let mut sum = Operator::zeros(dim, dim);
        for (i, (label, p)) in self.outcomes.iter().enumerate() {
            let deviation = max_abs(&(p - p.adjoint()));
            if deviation > tol {
                return Err(ObservableError::NotHermitian {
                    label: *label,
                    deviation,
                });
            }
            let deviation = max_abs(&(p * p - p));
            if deviation > tol {
                return Err(ObservableError::NotIdempotent {
                    label: *label,
                    deviation,
                });
            }
            for (label_b, q) in &self.outcomes[i + 1..] {
                let deviation = max_abs(&(p * q));
                if deviation > tol {
                    return Err(ObservableError::NotOrthogonal {
                        a: *label,
                        b: *label_b,
                        deviation,
                    });
                }
            }
            sum += p;
        }
        let deviation = max_abs(&(sum - Operator::identity(dim, dim)));
        if deviation > tol {
            return Err(ObservableError::Incomplete { deviation });
        }
        Ok(())
    }
}

pub(crate) fn max_abs(m: &Operator) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `|s⟩⟨s|`.
pub fn rank_one(s: &StateVector) -> Operator {
    let v = s.as_dvector();
    v * v.adjoint()
}

fn three_outcome(eigen: [StateVector; 2]) -> Pvm {
    let minus = rank_one(&eigen[0]);
    let plus = rank_one(&eigen[1]);
    let zero = Operator::identity(LOCAL_DIM, LOCAL_DIM) - &minus - &plus;
    Pvm::new(vec![
        (OutcomeLabel::Minus, minus),
        (OutcomeLabel::Plus, plus),
        (OutcomeLabel::Zero, zero),
    ])
}

/// `F = −|φ0⟩⟨φ0| + |φ1⟩⟨φ1|` with its rank-14 zero outcome.
pub fn build_f() -> Pvm {
    three_outcome(Setting::F.eigenstates())
}

/// `G = −|ψ0⟩⟨ψ0| + |ψ1⟩⟨ψ1|` with its rank-14 zero outcome.
pub fn build_g() -> Pvm {
    three_outcome(Setting::G.eigenstates())
}

pub fn build_pvm(setting: Setting) -> Pvm {
    match setting {
        Setting::F => build_f(),
        Setting::G => build_g(),
    }
}

/// Probabilities of the three outcome labels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelDistribution {
    probs: [f64; 3],
}

impl LabelDistribution {
    pub fn get(&self, label: OutcomeLabel) -> f64 {
        self.probs[label.index()]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn max_deviation(&self, other: &LabelDistribution) -> f64 {
        self.probs
            .iter()
            .zip(other.probs.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn expectation(state: &DVector<Complex64>, op: &Operator) -> f64 {
    state.dotc(&(op * state)).re
}

/// Born-rule outcome probabilities. Labels absent from `m` get probability 0.
pub fn born_distribution(state: &StateVector, m: &Pvm) -> Result<LabelDistribution, ObservableError> {
    if state.dim() != m.dim() {
        return Err(ObservableError::DimensionMismatch {
            expected: m.dim().trailing_zeros() as usize,
            got: state.num_qubits(),
        });
    }
    let mut probs = [0.0; 3];
    for (label, p) in m.outcomes() {
        probs[label.index()] += expectation(state.as_dvector(), p);
    }
    Ok(LabelDistribution { probs })
}

/// Projects onto outcome `label` and renormalizes. Returns the outcome
/// probability and, when it is nonzero, the post-measurement state.
pub fn project(
    state: &StateVector,
    m: &Pvm,
    label: OutcomeLabel,
) -> Result<(f64, Option<StateVector>), ObservableError> {
    if state.dim() != m.dim() {
        return Err(ObservableError::DimensionMismatch {
            expected: m.dim().trailing_zeros() as usize,
            got: state.num_qubits(),
        });
    }
    let Some(p) = m.projector(label) else {
        return Ok((0.0, None));
    };
    let v = p * state.as_dvector();
    let prob = v.norm_squared();
    if prob <= 0.0 {
        return Ok((0.0, None));
    }
    let post = StateVector::from_amplitudes((v.unscale(prob.sqrt())).as_slice().to_vec()).expect("power-of-two length");
    Ok((prob, Some(post)))
}

/// Single-qubit measurement axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Z,
    X,
}

impl Axis {
    /// Eigenvector for bit `b`: `|0⟩`, `|1⟩` on z and `|0̄⟩`, `|1̄⟩` on x,
    /// where bit 0 is the `+1` eigenvalue.
    pub fn eigenvector(self, bit: u8) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match (self, bit) {
            (Axis::Z, 0) => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            (Axis::Z, _) => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            (Axis::X, 0) => [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            (Axis::X, _) => [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        }
    }
}

/// Number of 4-bit outcome strings of the single-qubit protocol.
pub const PROTOCOL_OUTCOMES: usize = 16;

/// Four fixed single-qubit tests plus the map from their joint outcome
/// string to the observable's label. Outcome strings are 4-bit indices with
/// qubit 1 most significant; an x-basis result `0̄` is recorded as bit 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalProtocol {
    setting: Setting,
    axes: [Axis; LOCAL_QUBITS],
    classifier: [OutcomeLabel; PROTOCOL_OUTCOMES],
}

/// Strings `01 0̄1̄`, `01 1̄0̄`, `10 0̄1̄`, `10 1̄0̄`: the support of `|φ0⟩` in
/// the `z z x x` eigenbasis.
const PHI0_STRINGS: [usize; 4] = [0b0101, 0b0110, 0b1001, 0b1010];

fn swap_middle_bits(s: usize) -> usize {
    // qubit 2 is bit 2, qubit 3 is bit 1
    let b2 = (s >> 2) & 1;
    let b1 = (s >> 1) & 1;
    if b1 == b2 {
        s
    } else {
        s ^ 0b0110
    }
}

/// `z z x x` for `F`; for `G` the same construction with qubits 2 and 3
/// exchanged (`z x z x`).
pub fn local_protocol_for(setting: Setting) -> LocalProtocol {
    let mut f_classifier = [OutcomeLabel::Plus; PROTOCOL_OUTCOMES];
    for s in PHI0_STRINGS {
        f_classifier[s] = OutcomeLabel::Minus;
    }
    match setting {
        Setting::F => LocalProtocol {
            setting,
            axes: [Axis::Z, Axis::Z, Axis::X, Axis::X],
            classifier: f_classifier,
        },
        Setting::G => {
            let mut classifier = [OutcomeLabel::Plus; PROTOCOL_OUTCOMES];
            for (s, c) in classifier.iter_mut().enumerate() {
                *c = f_classifier[swap_middle_bits(s)];
            }
            LocalProtocol {
                setting,
                axes: [Axis::Z, Axis::X, Axis::Z, Axis::X],
                classifier,
            }
        }
    }
}

impl LocalProtocol {
    pub fn new(
        setting: Setting,
        axes: [Axis; LOCAL_QUBITS],
        classifier: [OutcomeLabel; PROTOCOL_OUTCOMES],
    ) -> Result<Self, ObservableError> {
        let z = axes.iter().filter(|a| **a == Axis::Z).count();
        if z != 2 {
            return Err(ObservableError::BadProtocol(format!(
                "expected two z and two x axes, got {z} z"
            )));
        }
        if classifier.contains(&OutcomeLabel::Zero) {
            return Err(ObservableError::BadProtocol(
                "classifier must map every string to -1 or +1".into(),
            ));
        }
        Ok(Self {
            setting,
            axes,
            classifier,
        })
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    pub fn axes(&self) -> [Axis; LOCAL_QUBITS] {
        self.axes
    }

    pub fn classify(&self, outcome: usize) -> OutcomeLabel {
        self.classifier[outcome]
    }

    pub fn strings_for(&self, label: OutcomeLabel) -> Vec<usize> {
        (0..PROTOCOL_OUTCOMES)
            .filter(|&s| self.classifier[s] == label)
            .collect()
    }

    /// Product eigenvector for outcome string `s`.
    pub fn eigenvector(&self, s: usize) -> DVector<Complex64> {
        let mut v = DVector::from_element(1, Complex64::new(1.0, 0.0));
        for (q, axis) in self.axes.iter().enumerate() {
            let bit = ((s >> (LOCAL_QUBITS - 1 - q)) & 1) as u8;
            v = v.kronecker(&DVector::from_row_slice(&axis.eigenvector(bit)));
        }
        v
    }

    /// The protocol with its outcome strings rendered as text, e.g.
    /// `{"setting":"F","axes":["z","z","x","x"],"classifier":{"0000":1,...}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let classifier: BTreeMap<String, i8> = (0..PROTOCOL_OUTCOMES)
            .map(|s| (format!("{s:04b}"), self.classifier[s].value()))
            .collect();
        serde_json::json!({
            "setting": self.setting,
            "axes": self.axes,
            "classifier": classifier,
        })
    }
}

/// The 16 rank-one projectors onto the protocol's product eigenbasis,
/// indexed by outcome string.
#[derive(Debug, Clone)]
pub struct ProtocolMeasure {
    projectors: Vec<Operator>,
}

impl ProtocolMeasure {
    pub fn projectors(&self) -> &[Operator] {
        &self.projectors
    }

    pub fn distribution(&self, state: &StateVector) -> Result<[f64; PROTOCOL_OUTCOMES], ObservableError> {
        if state.dim() != LOCAL_DIM {
            return Err(ObservableError::DimensionMismatch {
                expected: LOCAL_QUBITS,
                got: state.num_qubits(),
            });
        }
        let mut out = [0.0; PROTOCOL_OUTCOMES];
        for (o, p) in out.iter_mut().zip(&self.projectors) {
            *o = expectation(state.as_dvector(), p);
        }
        Ok(out)
    }
}

pub fn protocol_pvm(p: &LocalProtocol) -> ProtocolMeasure {
    let projectors = (0..PROTOCOL_OUTCOMES)
        .map(|s| {
            let v = p.eigenvector(s);
            &v * v.adjoint()
        })
        .collect();
    ProtocolMeasure { projectors }
}

/// Sums the string projectors by classifier label into a two-outcome PVM.
pub fn coarse_grain(p: &LocalProtocol) -> Pvm {
    let fine = protocol_pvm(p);
    let mut minus = Operator::zeros(LOCAL_DIM, LOCAL_DIM);
    let mut plus = Operator::zeros(LOCAL_DIM, LOCAL_DIM);
    for (s, proj) in fine.projectors.iter().enumerate() {
        match p.classify(s) {
            OutcomeLabel::Minus => minus += proj,
            _ => plus += proj,
        }
    }
    Pvm::new(vec![(OutcomeLabel::Minus, minus), (OutcomeLabel::Plus, plus)])
}
