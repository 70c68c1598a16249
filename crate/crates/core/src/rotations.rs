//! Collective local rotations: one SU(2) element applied to every qubit on a
//! side. Haar samples come from a unit quaternion drawn as four normalized
//! standard normals.
//!
//! Seed splitting for parallel runs: the seed for item `i` under root `r` is
//! `mix64(r ^ i)`, where `mix64` is the SplitMix64 finalizer (a bijection on
//! `u64`).

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::observables::{Operator, Pvm};
use crate::qstate::StateVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotationError {
    #[error("rotation acts on {expected} qubits, state has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("invalid seed {0:?}: expected a decimal or 0x-prefixed hex u64")]
    BadSeed(String),
}

const C1: Complex64 = Complex64::new(1.0, 0.0);

/// A 2×2 unitary. Constructors other than [`SingleQubitUnitary::from_matrix`]
/// always produce determinant 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitUnitary {
    m: Matrix2<Complex64>,
}

impl SingleQubitUnitary {
    pub fn identity() -> Self {
        Self { m: Matrix2::identity() }
    }

    /// `q0·I + i(q1·X + q2·Y + q3·Z)` for a quaternion normalized to unit
    /// length. Panics on the zero quaternion.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(n > 0.0, "zero quaternion");
        let [a, b, c, d] = q.map(|x| x / n);
        Self {
            m: Matrix2::new(
                Complex64::new(a, d),
                Complex64::new(c, b),
                Complex64::new(-c, b),
                Complex64::new(a, -d),
            ),
        }
    }

    /// `exp(−i θ n·σ / 2)` for a unit axis `n`.
    pub fn axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(n > 0.0, "zero axis");
        let (s, c) = (angle / 2.0).sin_cos();
        Self::from_quaternion([c, -s * axis[0] / n, -s * axis[1] / n, -s * axis[2] / n])
    }

    /// Accepts any unitary, including ones with a nontrivial global phase.
    pub fn from_matrix(m: Matrix2<Complex64>) -> Result<Self, RotationError> {
        let dev = (m * m.adjoint() - Matrix2::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > 1e-12 {
            return Err(RotationError::NotUnitary(dev));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.m
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn det(&self) -> Complex64 {
        self.m[(0, 0)] * self.m[(1, 1)] - self.m[(0, 1)] * self.m[(1, 0)]
    }

    /// Scales by `e^{iθ}`.
    pub fn with_phase(&self, theta: f64) -> Self {
        Self {
            m: self.m * Complex64::from_polar(1.0, theta),
        }
    }

    /// Largest entry of `|U U† − I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        (self.m * self.m.adjoint() - Matrix2::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn rows(&self) -> [[Complex64; 2]; 2] {
        [[self.m[(0, 0)], self.m[(0, 1)]], [self.m[(1, 0)], self.m[(1, 1)]]]
    }

    /// Entries as `[[ [re, im], [re, im] ], [ ... ]]` for JSON export.
    pub fn to_entries(&self) -> [[[f64; 2]; 2]; 2] {
        self.rows().map(|row| row.map(|z| [z.re, z.im]))
    }
}

/// Haar-random SU(2) element, a deterministic function of `seed`.
pub fn sample_su2(seed: u64) -> SingleQubitUnitary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_su2_from(&mut rng)
}

pub fn sample_su2_from<R: Rng + ?Sized>(rng: &mut R) -> SingleQubitUnitary {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if q.iter().map(|x| x * x).sum::<f64>() > 1e-300 {
            return SingleQubitUnitary::from_quaternion(q);
        }
    }
}

/// SplitMix64 output mixing; a bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-item seed: `mix64(root ^ index)`.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    mix64(root ^ index)
}

/// Parses a seed written in decimal or as `0x`-prefixed hex.
pub fn parse_seed(text: &str) -> Result<u64, RotationError> {
    let t = text.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse::<u64>(),
    };
    parsed.map_err(|_| RotationError::BadSeed(text.to_owned()))
}

/// `u ⊗ u ⊗ … ⊗ u` (`fold` factors).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveRotation {
    u: SingleQubitUnitary,
    fold: usize,
}

impl CollectiveRotation {
    pub fn new(u: SingleQubitUnitary, fold: usize) -> Self {
        assert!(fold > 0);
        Self { u, fold }
    }

    /// The four-fold rotation of one observer's qubits.
    pub fn local(u: SingleQubitUnitary) -> Self {
        Self::new(u, 4)
    }

    pub fn unitary(&self) -> &SingleQubitUnitary {
        &self.u
    }

    pub fn fold(&self) -> usize {
        self.fold
    }

    pub fn inverse(&self) -> Self {
        Self {
            u: self.u.adjoint(),
            fold: self.fold,
        }
    }

    /// The `2^fold × 2^fold` Kronecker power.
    pub fn expand(&self) -> Operator {
        let single = DMatrix::from_fn(2, 2, |r, c| self.u.m[(r, c)]);
        let mut acc = DMatrix::from_element(1, 1, C1);
        for _ in 0..self.fold {
            acc = acc.kronecker(&single);
        }
        acc
    }

    /// Applies `u` to qubits `first..first+fold` (1-based) of `s` in place.
    pub(crate) fn apply_at(&self, s: &mut StateVector, first: usize) {
        let gate = self.u.rows();
        for q in first..first + self.fold {
            s.apply_gate_in_place(q, &gate);
        }
    }
}

/// `(U⊗4)|s⟩` on a four-qubit state.
pub fn apply_collective(r: &CollectiveRotation, s: &StateVector) -> Result<StateVector, RotationError> {
    if s.num_qubits() != r.fold {
        return Err(RotationError::DimensionMismatch {
            expected: r.fold,
            got: s.num_qubits(),
        });
    }
    let mut out = s.clone();
    r.apply_at(&mut out, 1);
    Ok(out)
}

/// Conjugates every projector: `P ↦ R P R†`.
pub fn rotate_pvm(r: &CollectiveRotation, m: &Pvm) -> Pvm {
    let big = r.expand();
    let big_adj = big.adjoint();
    Pvm::new(
        m.outcomes()
            .iter()
            .map(|(label, p)| (*label, &big * p * &big_adj))
            .collect(),
    )
}

/// Independent rotations of Alice's and Bob's four qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationPair {
    pub alice: CollectiveRotation,
    pub bob: CollectiveRotation,
}

impl RotationPair {
    pub fn new(alice: SingleQubitUnitary, bob: SingleQubitUnitary) -> Self {
        Self {
            alice: CollectiveRotation::local(alice),
            bob: CollectiveRotation::local(bob),
        }
    }

    pub fn identity() -> Self {
        Self::new(SingleQubitUnitary::identity(), SingleQubitUnitary::identity())
    }

    /// Two Haar samples from seeds `derive_seed(root, 2i)` and
    /// `derive_seed(root, 2i + 1)`.
    pub fn sample(root: u64, index: u64) -> Self {
        Self::new(
            sample_su2(derive_seed(root, 2 * index)),
            sample_su2(derive_seed(root, 2 * index + 1)),
        )
    }

    pub fn inverse(&self) -> Self {
        Self {
            alice: self.alice.inverse(),
            bob: self.bob.inverse(),
        }
    }
}

/// `(R_A ⊗ R_B)|s⟩`: Alice's rotation on qubits 1–4, Bob's on 5–8.
pub fn apply_pair(p: &RotationPair, s: &StateVector) -> Result<StateVector, RotationError> {
    let expected = p.alice.fold + p.bob.fold;
    if s.num_qubits() != expected {
        return Err(RotationError::DimensionMismatch {
            expected,
            got: s.num_qubits(),
        });
    }
    let mut out = s.clone();
    p.alice.apply_at(&mut out, 1);
    p.bob.apply_at(&mut out, 1 + p.alice.fold);
    Ok(out)
}
