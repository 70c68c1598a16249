//! Dense state vectors over small qubit registers and the named four- and
//! eight-qubit states of the rotation-invariant Bell construction.
//!
//! Basis convention: qubit 1 is the most significant bit, so on four qubits
//! the ket `|0101⟩` is basis index 5. All constructors build amplitudes from
//! closed-form expressions (`1/(2√3)` is `0.5 / 3f64.sqrt()`, never a decimal
//! literal).

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single complex amplitude.
pub type Amplitude = Complex64;

/// Register size used by [`tensor`] when no explicit limit is given.
pub const DEFAULT_MAX_QUBITS: usize = 8;

/// Tolerance on the L2 norm of every constructed state.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("dimension mismatch: {left} qubits vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("register of {requested} qubits exceeds the configured maximum of {max}")]
    TooManyQubits { requested: usize, max: usize },
    #[error("amplitude vector of length {len} is not a power of two")]
    BadLength { len: usize },
    #[error("invalid basis label {0:?}")]
    BadLabel(String),
    #[error("malformed state dump: {0}")]
    BadDump(String),
}

/// A computational basis label such as `0101`, qubit 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    bits: Vec<u8>,
}

impl BasisLabel {
    pub fn from_index(index: usize, num_qubits: usize) -> Self {
        assert!(num_qubits < usize::BITS as usize && index < (1usize << num_qubits));
        let bits = (0..num_qubits)
            .map(|q| ((index >> (num_qubits - 1 - q)) & 1) as u8)
            .collect();
        Self { bits }
    }

    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn num_qubits(&self) -> usize {
        self.bits.len()
    }
}

impl FromStr for BasisLabel {
    type Err = StateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || s.len() > usize::BITS as usize - 1 {
            return Err(StateError::BadLabel(s.to_owned()));
        }
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(StateError::BadLabel(s.to_owned())),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        Ok(Self { bits })
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Dense amplitude vector of length `2^num_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: DVector<Amplitude>,
}

impl StateVector {
    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(amps: Vec<Amplitude>) -> Result<Self, StateError> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(StateError::BadLength { len });
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amps: DVector::from_vec(amps),
        })
    }

    pub(crate) fn from_dvector(amps: DVector<Amplitude>) -> Self {
        let len = amps.len();
        debug_assert!(len.is_power_of_two());
        Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        }
    }

    /// The computational basis state with the given index.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let dim = 1usize << num_qubits;
        assert!(index < dim, "basis index {index} out of range for {num_qubits} qubits");
        let mut amps = DVector::zeros(dim);
        amps[index] = Complex64::new(1.0, 0.0);
        Self { num_qubits, amps }
    }

    /// Builds a state from `(label, coefficient)` terms, e.g. `("0101", 0.5)`.
    pub fn from_terms(num_qubits: usize, terms: &[(&str, f64)]) -> Result<Self, StateError> {
        let mut amps = DVector::zeros(1 << num_qubits);
        for &(label, coeff) in terms {
            let label: BasisLabel = label.parse()?;
            if label.num_qubits() != num_qubits {
                return Err(StateError::BadLabel(label.to_string()));
            }
            amps[label.index()] += Complex64::new(coeff, 0.0);
        }
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        self.amps.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<Amplitude> {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Amplitude {
        self.amps[index]
    }

    /// Amplitude at a ket written as a bit string.
    pub fn amplitude_at(&self, label: &str) -> Result<Amplitude, StateError> {
        let label: BasisLabel = label.parse()?;
        if label.num_qubits() != self.num_qubits {
            return Err(StateError::DimensionMismatch {
                left: self.num_qubits,
                right: label.num_qubits(),
            });
        }
        Ok(self.amps[label.index()])
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn scaled(&self, factor: Amplitude) -> Self {
        Self {
            num_qubits: self.num_qubits,
            amps: &self.amps * factor,
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &StateVector, factor: Amplitude) -> Result<Self, StateError> {
        self.check_same(other)?;
        Ok(Self {
            num_qubits: self.num_qubits,
            amps: &self.amps + &other.amps * factor,
        })
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &StateVector) -> Result<f64, StateError> {
        self.check_same(other)?;
        Ok((&self.amps - &other.amps).norm())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, StateError> {
        Ok(inner_product(self, other)?.norm_sqr())
    }

    /// Applies a 2×2 gate (row-major) to qubit `qubit` (1-based) in place.
    pub fn apply_gate_in_place(&mut self, qubit: usize, gate: &[[Amplitude; 2]; 2]) {
        let n = self.num_qubits;
        assert!((1..=n).contains(&qubit), "qubit {qubit} out of range 1..={n}");
        let stride = 1usize << (n - qubit);
        let amps = self.amps.as_mut_slice();
        for block in (0..amps.len()).step_by(2 * stride) {
            for i in block..block + stride {
                let a0 = amps[i];
                let a1 = amps[i + stride];
                amps[i] = gate[0][0] * a0 + gate[0][1] * a1;
                amps[i + stride] = gate[1][0] * a0 + gate[1][1] * a1;
            }
        }
    }

    /// Exchanges two qubits (1-based positions).
    pub fn swap_qubits(&self, q1: usize, q2: usize) -> Self {
        let n = self.num_qubits;
        assert!((1..=n).contains(&q1) && (1..=n).contains(&q2));
        let (s1, s2) = (n - q1, n - q2);
        let mut amps = DVector::zeros(self.dim());
        for (i, a) in self.amps.iter().enumerate() {
            let b1 = (i >> s1) & 1;
            let b2 = (i >> s2) & 1;
            let j = if b1 == b2 { i } else { i ^ ((1 << s1) | (1 << s2)) };
            amps[j] = *a;
        }
        Self { num_qubits: n, amps }
    }

    /// Nonzero amplitudes as `(label, amplitude)` pairs sorted by basis index.
    pub fn support(&self, threshold: f64) -> Vec<(BasisLabel, Amplitude)> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > threshold)
            .map(|(i, a)| (BasisLabel::from_index(i, self.num_qubits), *a))
            .collect()
    }

    /// Debug dump: JSON array of `{basis_label, re, im}` for nonzero
    /// amplitudes, sorted by basis index. The zero vector dumps its first
    /// entry so the register width survives.
    pub fn to_dump_json(&self) -> String {
        let mut support = self.support(0.0);
        if support.is_empty() {
            support.push((BasisLabel::from_index(0, self.num_qubits), self.amplitude(0)));
        }
        let entries: Vec<DumpEntry> = support
            .into_iter()
            .map(|(label, a)| DumpEntry {
                basis_label: label.to_string(),
                re: a.re,
                im: a.im,
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("dump entries serialize")
    }

    /// Parses a debug dump. Every label must have the same length; duplicate
    /// labels are rejected.
    pub fn from_dump_json(text: &str) -> Result<Self, StateError> {
        let entries: Vec<DumpEntry> = serde_json::from_str(text).map_err(|e| StateError::BadDump(e.to_string()))?;
        let first = entries
            .first()
            .ok_or_else(|| StateError::BadDump("empty dump".into()))?;
        let num_qubits = first.basis_label.len();
        if num_qubits == 0 || num_qubits > MAX_DUMP_QUBITS {
            return Err(StateError::BadDump(format!(
                "register of {num_qubits} qubits not supported"
            )));
        }
        let mut amps = DVector::zeros(1 << num_qubits);
        let mut seen = vec![false; 1 << num_qubits];
        for e in &entries {
            let label: BasisLabel = e.basis_label.parse()?;
            if label.num_qubits() != num_qubits {
                return Err(StateError::BadDump(format!(
                    "label {} has {} bits, expected {num_qubits}",
                    e.basis_label,
                    label.num_qubits()
                )));
            }
            if !(e.re.is_finite() && e.im.is_finite()) {
                return Err(StateError::BadDump(format!(
                    "non-finite amplitude at {}",
                    e.basis_label
                )));
            }
            let i = label.index();
            if std::mem::replace(&mut seen[i], true) {
                return Err(StateError::BadDump(format!("duplicate label {}", e.basis_label)));
            }
            amps[i] = Complex64::new(e.re, e.im);
        }
        Ok(Self { num_qubits, amps })
    }

    fn check_same(&self, other: &StateVector) -> Result<(), StateError> {
        if self.num_qubits != other.num_qubits {
            return Err(StateError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(())
    }
}

const MAX_DUMP_QUBITS: usize = 12;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DumpEntry {
    basis_label: String,
    re: f64,
    im: f64,
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Amplitude, StateError> {
    a.check_same(b)?;
    Ok(a.amps.dotc(&b.amps))
}

/// Kronecker product `a ⊗ b` with the register capped at [`DEFAULT_MAX_QUBITS`].
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector, StateError> {
    tensor_bounded(a, b, DEFAULT_MAX_QUBITS)
}

/// Kronecker product with an explicit register limit. The qubits of `a`
/// become the leading (most significant) qubits of the result.
pub fn tensor_bounded(a: &StateVector, b: &StateVector, max_qubits: usize) -> Result<StateVector, StateError> {
    let n = a.num_qubits + b.num_qubits;
    if n > max_qubits {
        return Err(StateError::TooManyQubits {
            requested: n,
            max: max_qubits,
        });
    }
    Ok(StateVector {
        num_qubits: n,
        amps: a.amps.kronecker(&b.amps),
    })
}

/// Which of the two named four-qubit bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingletBasis {
    /// `{|φ0⟩, |φ1⟩}`
    Phi,
    /// `{|ψ0⟩, |ψ1⟩}`, the φ basis with qubits 2 and 3 exchanged.
    Psi,
}

impl SingletBasis {
    pub fn state(self, j: usize) -> StateVector {
        match self {
            SingletBasis::Phi => build_phi(j),
            SingletBasis::Psi => build_psi(j),
        }
    }
}

fn check_index(j: usize) {
    assert!(j < 2, "singlet index must be 0 or 1, got {j}");
}

/// The four-qubit singlets `|φ0⟩`, `|φ1⟩`.
///
/// Panics if `j > 1`.
pub fn build_phi(j: usize) -> StateVector {
    check_index(j);
    let terms: Vec<(&str, f64)> = if j == 0 {
        let h = 0.5;
        vec![("0101", h), ("0110", -h), ("1001", -h), ("1010", h)]
    } else {
        let c = 0.5 / 3f64.sqrt();
        vec![
            ("0011", 2.0 * c),
            ("0101", -c),
            ("0110", -c),
            ("1001", -c),
            ("1010", -c),
            ("1100", 2.0 * c),
        ]
    };
    StateVector::from_terms(4, &terms).expect("static labels")
}

/// `|ψ0⟩`, `|ψ1⟩` from their explicit ket expansions.
///
/// Panics if `j > 1`.
pub fn build_psi(j: usize) -> StateVector {
    check_index(j);
    let terms: Vec<(&str, f64)> = if j == 0 {
        let h = 0.5;
        vec![("0011", h), ("0110", -h), ("1001", -h), ("1100", h)]
    } else {
        let c = 0.5 / 3f64.sqrt();
        vec![
            ("0011", -c),
            ("0101", 2.0 * c),
            ("0110", -c),
            ("1001", -c),
            ("1010", 2.0 * c),
            ("1100", -c),
        ]
    };
    StateVector::from_terms(4, &terms).expect("static labels")
}

/// Change of basis `|ψ_i⟩ = Σ_j M[i][j] |φ_j⟩`. The matrix is symmetric and
/// orthogonal, so it is also the inverse map.
pub fn psi_in_phi_basis() -> [[f64; 2]; 2] {
    let s = 3f64.sqrt() / 2.0;
    [[0.5, s], [s, -0.5]]
}

/// `|ψj⟩` assembled as a linear combination of `|φ0⟩`, `|φ1⟩`.
pub fn psi_from_phi(j: usize) -> StateVector {
    check_index(j);
    let m = psi_in_phi_basis();
    build_phi(0)
        .scaled(Complex64::new(m[j][0], 0.0))
        .add_scaled(&build_phi(1), Complex64::new(m[j][1], 0.0))
        .expect("same register")
}

/// `(|φ0φ0⟩ + √3|φ0φ1⟩ + √3|φ1φ0⟩)/√7` on eight qubits; Alice holds qubits
/// 1–4 and Bob qubits 5–8.
pub fn build_eta() -> StateVector {
    let r3 = Complex64::new(3f64.sqrt(), 0.0);
    let p0 = build_phi(0);
    let p1 = build_phi(1);
    let t00 = tensor(&p0, &p0).expect("8 qubits");
    let t01 = tensor(&p0, &p1).expect("8 qubits");
    let t10 = tensor(&p1, &p0).expect("8 qubits");
    t00.add_scaled(&t01, r3)
        .and_then(|s| s.add_scaled(&t10, r3))
        .expect("same register")
        .scaled(Complex64::new(1.0 / 7f64.sqrt(), 0.0))
}

/// Coefficients `⟨x_a y_b|η⟩` with `x` from `basis_a` on Alice's side and `y`
/// from `basis_b` on Bob's side; row index `a`, column index `b`.
pub fn expand_eta_in(basis_a: SingletBasis, basis_b: SingletBasis) -> [[Amplitude; 2]; 2] {
    let eta = build_eta();
    let mut table = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (a, row) in table.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            let product = tensor(&basis_a.state(a), &basis_b.state(b)).expect("8 qubits");
            *cell = inner_product(&product, &eta).expect("8 qubits");
        }
    }
    table
}

/// Rebuilds an eight-qubit state from a 2×2 coefficient table in the given
/// bases.
pub fn reconstruct(basis_a: SingletBasis, basis_b: SingletBasis, table: &[[Amplitude; 2]; 2]) -> StateVector {
    let mut acc = StateVector::from_dvector(DVector::zeros(256));
    for (a, row) in table.iter().enumerate() {
        for (b, coeff) in row.iter().enumerate() {
            let product = tensor(&basis_a.state(a), &basis_b.state(b)).expect("8 qubits");
            acc = acc.add_scaled(&product, *coeff).expect("8 qubits");
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn close(a: Amplitude, re: f64) -> bool {
        (a - Complex64::new(re, 0.0)).norm() < TOL
    }

    #[test]
    fn bit_order_is_big_endian() {
        let label: BasisLabel = "0101".parse().unwrap();
        assert_eq!(label.index(), 5);
        assert_eq!(BasisLabel::from_index(5, 4).to_string(), "0101");
        assert!("01a1".parse::<BasisLabel>().is_err());
        assert!("".parse::<BasisLabel>().is_err());
    }

    #[test]
    fn phi_amplitudes() {
        let p0 = build_phi(0);
        let p1 = build_phi(1);
        assert!(close(p0.amplitude_at("0101").unwrap(), 0.5));
        assert!(close(p0.amplitude_at("0110").unwrap(), -0.5));
        assert!(close(p1.amplitude_at("0011").unwrap(), 1.0 / 3f64.sqrt()));
        assert_eq!(p0.support(0.0).len(), 4);
        assert_eq!(p1.support(0.0).len(), 6);
        assert!(inner_product(&p0, &p1).unwrap().norm() < TOL);
    }

    #[test]
    fn psi_amplitudes_and_overlaps() {
        let s0 = build_psi(0);
        let s1 = build_psi(1);
        assert!(close(s0.amplitude_at("0011").unwrap(), 0.5));
        assert!(inner_product(&s0, &s1).unwrap().norm() < TOL);
        assert!(close(inner_product(&build_phi(0), &s0).unwrap(), 0.5));
        assert!(close(inner_product(&build_phi(1), &s1).unwrap(), -0.5));
        assert!(close(
            inner_product(&StateVector::basis(4, 5), &build_phi(1)).unwrap(),
            -0.5 / 3f64.sqrt()
        ));
    }

    #[test]
    fn psi_routes_agree() {
        for j in 0..2 {
            let explicit = build_psi(j);
            assert!(explicit.distance(&psi_from_phi(j)).unwrap() < TOL);
            assert!(explicit.distance(&build_phi(j).swap_qubits(2, 3)).unwrap() < TOL);
        }
    }

    #[test]
    fn named_states_are_normalized() {
        for s in [build_phi(0), build_phi(1), build_psi(0), build_psi(1), build_eta()] {
            assert!((s.norm() - 1.0).abs() < NORM_TOLERANCE);
        }
    }

    #[test]
    fn eta_overlaps() {
        let eta = build_eta();
        let p00 = tensor(&build_phi(0), &build_phi(0)).unwrap();
        let p11 = tensor(&build_phi(1), &build_phi(1)).unwrap();
        assert!((p00.fidelity(&eta).unwrap() - 1.0 / 7.0).abs() < TOL);
        assert!(p11.fidelity(&eta).unwrap() < TOL);
    }

    #[test]
    fn expansion_tables() {
        let r3 = 3f64.sqrt();
        let r7 = 7f64.sqrt();
        let pp = expand_eta_in(SingletBasis::Phi, SingletBasis::Phi);
        let expect = [[1.0 / r7, r3 / r7], [r3 / r7, 0.0]];
        let ss = expand_eta_in(SingletBasis::Psi, SingletBasis::Psi);
        let d = 4.0 * r7;
        let expect_ss = [[7.0 / d, 3.0 * r3 / d], [3.0 * r3 / d, -3.0 / d]];
        let ps = expand_eta_in(SingletBasis::Phi, SingletBasis::Psi);
        let d = 2.0 * r7;
        let expect_ps = [[4.0 / d, 0.0], [r3 / d, 3.0 / d]];
        let sp = expand_eta_in(SingletBasis::Psi, SingletBasis::Phi);
        let expect_sp = [[4.0 / d, r3 / d], [0.0, 3.0 / d]];
        for a in 0..2 {
            for b in 0..2 {
                assert!(close(pp[a][b], expect[a][b]));
                assert!(close(ss[a][b], expect_ss[a][b]));
                assert!(close(ps[a][b], expect_ps[a][b]));
                assert!(close(sp[a][b], expect_sp[a][b]));
            }
        }
    }

    #[test]
    fn tensor_of_basis_states() {
        let t = tensor(&StateVector::basis(1, 0), &StateVector::basis(1, 1)).unwrap();
        assert_eq!(t, StateVector::basis(2, 1));
        let pp = tensor(&build_phi(0), &build_phi(0)).unwrap();
        assert!(close(pp.amplitude_at("01010101").unwrap(), 0.25));
    }

    #[test]
    fn tensor_respects_limit() {
        let eta = build_eta();
        let one = StateVector::basis(1, 0);
        assert_eq!(
            tensor(&eta, &one),
            Err(StateError::TooManyQubits {
                requested: 9,
                max: DEFAULT_MAX_QUBITS
            })
        );
        assert_eq!(tensor_bounded(&eta, &one, 9).unwrap().num_qubits(), 9);
    }

    #[test]
    fn inner_product_rejects_mismatch() {
        assert!(matches!(
            inner_product(&build_phi(0), &build_eta()),
            Err(StateError::DimensionMismatch { left: 4, right: 8 })
        ));
    }

    #[test]
    fn dump_round_trip() {
        let p1 = build_phi(1);
        let text = p1.to_dump_json();
        assert!(text.find("0011").unwrap() < text.find("1100").unwrap());
        let back = StateVector::from_dump_json(&text).unwrap();
        assert_eq!(back, p1);

        let zero = StateVector::from_dump_json(r#"[{"basis_label":"101","re":0.0,"im":0.0}]"#).unwrap();
        assert_eq!(StateVector::from_dump_json(&zero.to_dump_json()).unwrap(), zero);
    }

    #[test]
    fn dump_rejects_bad_input() {
        for bad in [
            "[]",
            "{}",
            r#"[{"basis_label":"01","re":1.0,"im":0.0},{"basis_label":"011","re":0.0,"im":0.0}]"#,
            r#"[{"basis_label":"01","re":1.0,"im":0.0},{"basis_label":"01","re":0.0,"im":0.0}]"#,
            r#"[{"basis_label":"0x","re":1.0,"im":0.0}]"#,
            r#"[{"basis_label":"0000000000000","re":1.0,"im":0.0}]"#,
        ] {
            assert!(StateVector::from_dump_json(bad).is_err(), "{bad}");
        }
    }
}
