//! Simulation and exact auditing of a Bell nonlocality argument that needs no
//! shared reference frame.
//!
//! Two observers each hold four qubits of an eight-qubit state built from
//! rotation-invariant four-qubit singlets. Each measures one of two
//! three-outcome observables, `F` or `G`, with an apparatus in an arbitrary
//! orientation. The crate builds the states and observables, checks the
//! invariance properties, computes the joint behavior exactly and by seeded
//! Monte Carlo sampling, and certifies in exact rational arithmetic that no
//! local hidden-variable model reproduces it.

pub mod experiment;
pub mod lhv;
pub mod observables;
pub mod qstate;
pub mod rotations;
