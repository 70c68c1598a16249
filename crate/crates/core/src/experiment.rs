//! Joint behavior `P(a, b | setting_A, setting_B)` on the eight-qubit state,
//! computed exactly and estimated by seeded Monte Carlo trials.
//!
//! Every trial draws fresh, independent setup rotations for each side (unless
//! rotations are fixed), picks settings according to the policy, and samples
//! the outcome pair from the exact nine-entry joint distribution of the
//! rotated setups.
//!
//! Seed layout for trial `i` under root seed `r`:
//!
//! * `trial_seed = derive_seed(r, i)` seeds the ChaCha8 stream used for the
//!   setting choice and the outcome draw;
//! * `seed_a = mix64(base ^ 0xA)` and `seed_b = mix64(base ^ 0xB)` with
//!   `base = trial_seed` (or `mix64(r)` with fixed rotations);
//! * a side's rotation for setting `s` is `sample_su2(derive_seed(seed_side, s))`
//!   with `F = 0`, `G = 1`.

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::observables::{build_pvm, local_protocol_for, Axis, OutcomeLabel, Pvm, Setting, LOCAL_DIM, LOCAL_QUBITS};
use crate::qstate::{build_eta, StateVector};
use crate::rotations::{derive_seed, mix64, rotate_pvm, sample_su2, CollectiveRotation, SingleQubitUnitary};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("trial {trial}: sampled the forbidden outcome 0")]
    ZeroOutcome { trial: u64 },
    #[error("conditioning event has probability zero")]
    ZeroProbabilityCondition,
    #[error("events on the same side use different settings")]
    IncompatibleEvents,
    #[error("invalid setting policy {0:?}")]
    BadPolicy(String),
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("malformed trial log: {0}")]
    TrialLog(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Alice,
    Bob,
}

/// `(side, setting, outcome)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub side: Side,
    pub setting: Setting,
    pub outcome: OutcomeLabel,
}

impl Event {
    pub fn new(side: Side, setting: Setting, outcome: OutcomeLabel) -> Self {
        Self { side, setting, outcome }
    }
}

/// The four independent setup rotations: Alice's for `F` and for `G`, and
/// Bob's for `F` and for `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetupRotations {
    pub f_alice: SingleQubitUnitary,
    pub g_alice: SingleQubitUnitary,
    pub f_bob: SingleQubitUnitary,
    pub g_bob: SingleQubitUnitary,
}

impl SetupRotations {
    pub fn identity() -> Self {
        let id = SingleQubitUnitary::identity();
        Self {
            f_alice: id,
            g_alice: id,
            f_bob: id,
            g_bob: id,
        }
    }

    /// Four Haar samples seeded by `derive_seed(root, 4·index + k)`.
    pub fn sample(root: u64, index: u64) -> Self {
        let s = |k: u64| sample_su2(derive_seed(root, 4 * index + k));
        Self {
            f_alice: s(0),
            g_alice: s(1),
            f_bob: s(2),
            g_bob: s(3),
        }
    }

    pub fn get(&self, side: Side, setting: Setting) -> &SingleQubitUnitary {
        match (side, setting) {
            (Side::Alice, Setting::F) => &self.f_alice,
            (Side::Alice, Setting::G) => &self.g_alice,
            (Side::Bob, Setting::F) => &self.f_bob,
            (Side::Bob, Setting::G) => &self.g_bob,
        }
    }
}

type JointTable = [[f64; 3]; 3];

/// Exact probabilities indexed `[setting_a][setting_b][outcome_a][outcome_b]`
/// using [`Setting::index`] and [`OutcomeLabel::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactBehavior {
    probs: [[JointTable; 2]; 2],
}

impl ExactBehavior {
    pub fn get(&self, sa: Setting, sb: Setting, oa: OutcomeLabel, ob: OutcomeLabel) -> f64 {
        self.probs[sa.index()][sb.index()][oa.index()][ob.index()]
    }

    pub fn table(&self, sa: Setting, sb: Setting) -> &JointTable {
        &self.probs[sa.index()][sb.index()]
    }

    /// A side's outcome distribution when the remote side measures `remote`.
    pub fn marginal(&self, side: Side, setting: Setting, remote: Setting) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = match side {
                Side::Alice => self.probs[setting.index()][remote.index()][i].iter().sum(),
                Side::Bob => (0..3).map(|a| self.probs[remote.index()][setting.index()][a][i]).sum(),
            };
        }
        out
    }

    pub fn max_deviation(&self, other: &ExactBehavior) -> f64 {
        self.probs
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .zip(other.probs.iter().flatten().flatten().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Probability of `target` given `given`, from the joint table. Events on
    /// the same side must use the same setting.
    pub fn conditional(&self, target: Event, given: Event) -> Result<f64, ExperimentError> {
        let (joint, cond) = if target.side == given.side {
            if target.setting != given.setting {
                return Err(ExperimentError::IncompatibleEvents);
            }
            // any remote setting gives the same marginal
            let m = self.marginal(given.side, given.setting, Setting::F);
            let p = m[given.outcome.index()];
            (if target.outcome == given.outcome { p } else { 0.0 }, p)
        } else {
            let (a, b) = match target.side {
                Side::Alice => (target, given),
                Side::Bob => (given, target),
            };
            let joint = self.get(a.setting, b.setting, a.outcome, b.outcome);
            let m = self.marginal(given.side, given.setting, target.setting);
            (joint, m[given.outcome.index()])
        };
        if cond <= 0.0 {
            return Err(ExperimentError::ZeroProbabilityCondition);
        }
        Ok(joint / cond)
    }
}

/// `⟨s|(P_a ⊗ P_b)|s⟩` with the Kronecker product formed densely.
pub fn joint_born(state: &StateVector, pa: &crate::observables::Operator, pb: &crate::observables::Operator) -> f64 {
    let big = pa.kronecker(pb);
    let v = state.as_dvector();
    v.dotc(&(big * v)).re
}

fn dense_behavior(state: &StateVector, pvms: impl Fn(Side, Setting) -> Pvm) -> ExactBehavior {
    let mut probs = [[[[0.0; 3]; 3]; 2]; 2];
    for sa in Setting::ALL {
        let ma = pvms(Side::Alice, sa);
        for sb in Setting::ALL {
            let mb = pvms(Side::Bob, sb);
            for (la, pa) in ma.outcomes() {
                for (lb, pb) in mb.outcomes() {
                    probs[sa.index()][sb.index()][la.index()][lb.index()] = joint_born(state, pa, pb);
                }
            }
        }
    }
    ExactBehavior { probs }
}

/// Born-rule behavior on `|η⟩` with each setup's PVM conjugated by its
/// rotation (identity when `rotations` is `None`).
pub fn exact_behavior(rotations: Option<&SetupRotations>) -> ExactBehavior {
    let eta = build_eta();
    let rot = rotations.copied().unwrap_or_else(SetupRotations::identity);
    dense_behavior(&eta, |side, setting| {
        rotate_pvm(&CollectiveRotation::local(*rot.get(side, setting)), &build_pvm(setting))
    })
}

/// The same behavior computed in the Schrödinger picture: the state is rotated
/// by the inverse setup rotations and measured with the canonical PVMs. Only
/// valid when both of a side's setups share one rotation, so it takes a pair.
pub fn exact_behavior_rotated_state(alice: &SingleQubitUnitary, bob: &SingleQubitUnitary) -> ExactBehavior {
    let pair = crate::rotations::RotationPair::new(*alice, *bob).inverse();
    let state = crate::rotations::apply_pair(&pair, &build_eta()).expect("8 qubits");
    dense_behavior(&state, |_, setting| build_pvm(setting))
}

/// Alice measured first, the state projected and renormalized, then Bob
/// measured on the post-measurement state. Returns `P(a)·P(b | a)`.
pub fn sequential_behavior() -> ExactBehavior {
    let eta = build_eta();
    let id = crate::observables::Operator::identity(LOCAL_DIM, LOCAL_DIM);
    let mut probs = [[[[0.0; 3]; 3]; 2]; 2];
    for sa in Setting::ALL {
        let ma = build_pvm(sa);
        for (la, pa) in ma.outcomes() {
            let projected = pa.kronecker(&id) * eta.as_dvector();
            let pa_prob = projected.norm_squared();
            if pa_prob <= 0.0 {
                continue;
            }
            let post = StateVector::from_amplitudes(projected.unscale(pa_prob.sqrt()).as_slice().to_vec())
                .expect("256 amplitudes");
            for sb in Setting::ALL {
                for (lb, pb) in build_pvm(sb).outcomes() {
                    let cond = joint_born(&post, &id, pb);
                    probs[sa.index()][sb.index()][la.index()][lb.index()] = pa_prob * cond;
                }
            }
        }
    }
    ExactBehavior { probs }
}

/// How settings are chosen per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SettingPolicy {
    /// Each side flips an independent fair coin.
    #[default]
    Uniform,
    Fixed(Setting, Setting),
    /// Trial `i` uses pair `i mod 4` in the order FF, FG, GF, GG.
    Cycle,
}

const PAIRS: [(Setting, Setting); 4] = [
    (Setting::F, Setting::F),
    (Setting::F, Setting::G),
    (Setting::G, Setting::F),
    (Setting::G, Setting::G),
];

impl FromStr for SettingPolicy {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ExperimentError::BadPolicy(s.to_owned());
        match s {
            "uniform" => Ok(SettingPolicy::Uniform),
            "cycle" => Ok(SettingPolicy::Cycle),
            _ => {
                let pair = s.strip_prefix("fixed:").ok_or_else(bad)?;
                let mut it = pair.chars().map(|c| match c {
                    'F' => Ok(Setting::F),
                    'G' => Ok(Setting::G),
                    _ => Err(bad()),
                });
                match (it.next(), it.next(), it.next()) {
                    (Some(a), Some(b), None) => Ok(SettingPolicy::Fixed(a?, b?)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

impl fmt::Display for SettingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingPolicy::Uniform => f.write_str("uniform"),
            SettingPolicy::Cycle => f.write_str("cycle"),
            SettingPolicy::Fixed(a, b) => write!(f, "fixed:{a}{b}"),
        }
    }
}

/// Which measurement model produces each side's outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeasurementPath {
    /// Sample the pair from the nine-entry joint distribution of the PVMs.
    #[default]
    Pvm,
    /// Sample four single-qubit results per side and classify the strings.
    Protocol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub policy: SettingPolicy,
    pub fixed_rotations: bool,
    pub path: MeasurementPath,
}

/// One Monte Carlo event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    #[serde(rename = "trial")]
    pub trial_index: u64,
    pub setting_a: Setting,
    pub setting_b: Setting,
    pub seed_a: u64,
    pub seed_b: u64,
    pub outcome_a: OutcomeLabel,
    pub outcome_b: OutcomeLabel,
}

/// Column header of the CSV trial log.
pub const TRIAL_LOG_HEADER: &str = "trial,setting_a,setting_b,seed_a,seed_b,outcome_a,outcome_b";

/// Outcome counts indexed like [`ExactBehavior`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct JointStats {
    counts: [[[[u64; 3]; 3]; 2]; 2],
}

impl JointStats {
    pub fn record(&mut self, r: &TrialRecord) {
        self.counts[r.setting_a.index()][r.setting_b.index()][r.outcome_a.index()][r.outcome_b.index()] += 1;
    }

    pub fn from_records(records: &[TrialRecord]) -> Self {
        let mut s = Self::default();
        for r in records {
            s.record(r);
        }
        s
    }

    pub fn merge(mut self, other: &JointStats) -> Self {
        for (a, b) in self
            .counts
            .iter_mut()
            .flatten()
            .flatten()
            .flatten()
            .zip(other.counts.iter().flatten().flatten().flatten())
        {
            *a += b;
        }
        self
    }

    pub fn count(&self, sa: Setting, sb: Setting, oa: OutcomeLabel, ob: OutcomeLabel) -> u64 {
        self.counts[sa.index()][sb.index()][oa.index()][ob.index()]
    }

    pub fn total(&self, sa: Setting, sb: Setting) -> u64 {
        self.counts[sa.index()][sb.index()].iter().flatten().sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.counts.iter().flatten().flatten().flatten().sum()
    }

    /// Empirical joint frequency; `None` when the setting pair never ran.
    pub fn frequency(&self, sa: Setting, sb: Setting, oa: OutcomeLabel, ob: OutcomeLabel) -> Option<f64> {
        let n = self.total(sa, sb);
        (n > 0).then(|| self.count(sa, sb, oa, ob) as f64 / n as f64)
    }

    /// Count of trials with `Zero` on either side.
    pub fn zero_outcomes(&self) -> u64 {
        let mut z = 0;
        for table in self.counts.iter().flatten() {
            for (a, row) in table.iter().enumerate() {
                for (b, c) in row.iter().enumerate() {
                    if a == OutcomeLabel::Zero.index() || b == OutcomeLabel::Zero.index() {
                        z += c;
                    }
                }
            }
        }
        z
    }

    /// Per setting pair: counts, empirical probabilities, the exact table, and
    /// absolute deviations. Rows are Alice's outcome, columns Bob's, both in
    /// the order `[-1, 1, 0]`.
    pub fn to_report(&self, exact: &ExactBehavior) -> serde_json::Value {
        let mut pairs = serde_json::Map::new();
        for (sa, sb) in PAIRS {
            let n = self.total(sa, sb);
            let mut counts = [[0u64; 3]; 3];
            let mut empirical = [[0.0f64; 3]; 3];
            let mut deviation = [[0.0f64; 3]; 3];
            for la in OutcomeLabel::ALL {
                for lb in OutcomeLabel::ALL {
                    let (i, j) = (la.index(), lb.index());
                    counts[i][j] = self.count(sa, sb, la, lb);
                    empirical[i][j] = if n > 0 { counts[i][j] as f64 / n as f64 } else { 0.0 };
                    deviation[i][j] = (empirical[i][j] - exact.get(sa, sb, la, lb)).abs();
                }
            }
            pairs.insert(
                format!("{sa}{sb}"),
                json!({
                    "trials": n,
                    "counts": counts,
                    "empirical": empirical,
                    "exact": exact.table(sa, sb),
                    "abs_deviation": deviation,
                }),
            );
        }
        json!({ "labels": [-1, 1, 0], "pairs": pairs })
    }
}

/// Output of [`run_trials`].
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub records: Vec<TrialRecord>,
    pub stats: JointStats,
}

const SIDE_A_TAG: u64 = 0xA;
const SIDE_B_TAG: u64 = 0xB;

/// Precomputed data shared by all trials.
struct TrialEngine {
    root: u64,
    options: RunOptions,
    eta: Vec<Complex64>,
    eigen: [[DVector<Complex64>; 2]; 2],
}

impl TrialEngine {
    fn new(root: u64, options: RunOptions) -> Self {
        let eigen = Setting::ALL.map(|s| s.eigenstates().map(|v| v.as_dvector().clone()));
        Self {
            root,
            options,
            eta: build_eta().amplitudes().to_vec(),
            eigen,
        }
    }

    fn settings(&self, index: u64, rng: &mut ChaCha8Rng) -> (Setting, Setting) {
        match self.options.policy {
            SettingPolicy::Fixed(a, b) => (a, b),
            SettingPolicy::Cycle => PAIRS[(index % 4) as usize],
            SettingPolicy::Uniform => {
                let a = if rng.random::<bool>() { Setting::G } else { Setting::F };
                let b = if rng.random::<bool>() { Setting::G } else { Setting::F };
                (a, b)
            }
        }
    }

    fn run(&self, index: u64) -> Result<TrialRecord, ExperimentError> {
        let trial_seed = derive_seed(self.root, index);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let (setting_a, setting_b) = self.settings(index, &mut rng);
        let base = if self.options.fixed_rotations {
            mix64(self.root)
        } else {
            trial_seed
        };
        let seed_a = mix64(base ^ SIDE_A_TAG);
        let seed_b = mix64(base ^ SIDE_B_TAG);
        let u_a = sample_su2(derive_seed(seed_a, setting_a.index() as u64));
        let u_b = sample_su2(derive_seed(seed_b, setting_b.index() as u64));
        let draw: f64 = rng.random();
        let (outcome_a, outcome_b) = match self.options.path {
            MeasurementPath::Pvm => {
                let table = self.joint_table(setting_a, &u_a, setting_b, &u_b);
                sample_cell(&table, draw)
            }
            MeasurementPath::Protocol => self.protocol_outcomes(setting_a, &u_a, setting_b, &u_b, draw),
        };
        if outcome_a == OutcomeLabel::Zero || outcome_b == OutcomeLabel::Zero {
            return Err(ExperimentError::ZeroOutcome { trial: index });
        }
        Ok(TrialRecord {
            trial_index: index,
            setting_a,
            setting_b,
            seed_a,
            seed_b,
            outcome_a,
            outcome_b,
        })
    }

    fn rotated_eigen(&self, setting: Setting, u: &SingleQubitUnitary) -> [Vec<Complex64>; 2] {
        let r = CollectiveRotation::local(*u);
        self.eigen[setting.index()].clone().map(|v| {
            let s = StateVector::from_amplitudes(v.as_slice().to_vec()).expect("16 amplitudes");
            crate::rotations::apply_collective(&r, &s)
                .expect("4 qubits")
                .amplitudes()
                .to_vec()
        })
    }

    /// Nine-entry joint distribution for rotated rank-one projectors, with the
    /// zero outcomes obtained as marginal complements.
    fn joint_table(&self, sa: Setting, ua: &SingleQubitUnitary, sb: Setting, ub: &SingleQubitUnitary) -> JointTable {
        let xa = self.rotated_eigen(sa, ua);
        let yb = self.rotated_eigen(sb, ub);
        let eta = &self.eta;
        let mut t = [[0.0; 3]; 3];
        // w[a][j] = Σ_i conj(x_a[i]) η[i, j]
        let mut w = [[Complex64::new(0.0, 0.0); LOCAL_DIM]; 2];
        for a in 0..2 {
            for i in 0..LOCAL_DIM {
                let c = xa[a][i].conj();
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..LOCAL_DIM {
                    w[a][j] += c * eta[i * LOCAL_DIM + j];
                }
            }
        }
        let mut bob_marginal = [0.0; 2];
        for b in 0..2 {
            for i in 0..LOCAL_DIM {
                let s: Complex64 = (0..LOCAL_DIM).map(|j| yb[b][j].conj() * eta[i * LOCAL_DIM + j]).sum();
                bob_marginal[b] += s.norm_sqr();
            }
        }
        for a in 0..2 {
            let alice_marginal: f64 = w[a].iter().map(|z| z.norm_sqr()).sum();
            for b in 0..2 {
                let amp: Complex64 = (0..LOCAL_DIM).map(|j| yb[b][j].conj() * w[a][j]).sum();
                t[a][b] = amp.norm_sqr();
            }
            t[a][2] = alice_marginal - t[a][0] - t[a][1];
        }
        for b in 0..2 {
            t[2][b] = bob_marginal[b] - t[0][b] - t[1][b];
        }
        let total: f64 = t.iter().flatten().sum::<f64>() - t[2][2];
        t[2][2] = 1.0 - total;
        t
    }

    fn protocol_outcomes(
        &self,
        sa: Setting,
        ua: &SingleQubitUnitary,
        sb: Setting,
        ub: &SingleQubitUnitary,
        draw: f64,
    ) -> (OutcomeLabel, OutcomeLabel) {
        let pa = local_protocol_for(sa);
        let pb = local_protocol_for(sb);
        let mut state = StateVector::from_amplitudes(self.eta.clone()).expect("256 amplitudes");
        for (offset, protocol, u) in [(0, &pa, ua), (LOCAL_QUBITS, &pb, ub)] {
            for (q, axis) in protocol.axes().iter().enumerate() {
                state.apply_gate_in_place(offset + q + 1, &measurement_gate(*axis, u));
            }
        }
        let probs: Vec<f64> = state.amplitudes().iter().map(|z| z.norm_sqr()).collect();
        let index = sample_index(&probs, draw);
        (pa.classify(index >> LOCAL_QUBITS), pb.classify(index & (LOCAL_DIM - 1)))
    }
}

/// `B† U†`, where the columns of `B` are the axis eigenvectors: maps a state
/// so that computational-basis amplitudes are overlaps with the rotated
/// eigenbasis.
fn measurement_gate(axis: Axis, u: &SingleQubitUnitary) -> [[Complex64; 2]; 2] {
    let ud = u.adjoint().rows();
    let e0 = axis.eigenvector(0);
    let e1 = axis.eigenvector(1);
    let bd = [[e0[0].conj(), e0[1].conj()], [e1[0].conj(), e1[1].conj()]];
    let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            g[r][c] = bd[r][0] * ud[0][c] + bd[r][1] * ud[1][c];
        }
    }
    g
}

fn sample_index(probs: &[f64], draw: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_positive = i;
        acc += p;
        if draw < acc {
            return i;
        }
    }
    last_positive
}

fn sample_cell(table: &JointTable, draw: f64) -> (OutcomeLabel, OutcomeLabel) {
    let flat: Vec<f64> = table.iter().flatten().map(|p| p.max(0.0)).collect();
    let i = sample_index(&flat, draw);
    (OutcomeLabel::ALL[i / 3], OutcomeLabel::ALL[i % 3])
}

/// Runs `n` seeded trials in parallel. Results depend only on `root_seed` and
/// `options`, never on scheduling.
pub fn run_trials(n: u64, root_seed: u64, options: RunOptions) -> Result<TrialRun, ExperimentError> {
    if n == 0 {
        return Err(ExperimentError::NoTrials);
    }
    let engine = TrialEngine::new(root_seed, options);
    let records = (0..n)
        .into_par_iter()
        .map(|i| engine.run(i))
        .collect::<Result<Vec<_>, _>>()?;
    let stats = records
        .par_chunks(4096)
        .map(JointStats::from_records)
        .reduce(JointStats::default, |a, b| a.merge(&b));
    Ok(TrialRun { records, stats })
}

/// The four numbers of the EPR inference chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EprFigures {
    /// `P(A:G=1, B:G=1)`.
    pub hardy_fraction: f64,
    /// `P(A:F=1 | B:G=1)`.
    pub cond_ab: Option<f64>,
    /// `P(B:F=1 | A:G=1)`.
    pub cond_ba: Option<f64>,
    /// `P(A:F=1, B:F=1)`.
    pub joint_ff: f64,
}

impl EprFigures {
    pub fn from_behavior(b: &ExactBehavior) -> Self {
        use OutcomeLabel::Plus;
        let cond = |target: Event, given: Event| b.conditional(target, given).ok();
        Self {
            hardy_fraction: b.get(Setting::G, Setting::G, Plus, Plus),
            cond_ab: cond(
                Event::new(Side::Alice, Setting::F, Plus),
                Event::new(Side::Bob, Setting::G, Plus),
            ),
            cond_ba: cond(
                Event::new(Side::Bob, Setting::F, Plus),
                Event::new(Side::Alice, Setting::G, Plus),
            ),
            joint_ff: b.get(Setting::F, Setting::F, Plus, Plus),
        }
    }

    pub fn from_stats(s: &JointStats) -> Self {
        use OutcomeLabel::Plus;
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        let b_g_plus: u64 = OutcomeLabel::ALL
            .iter()
            .map(|&a| s.count(Setting::F, Setting::G, a, Plus))
            .sum();
        let a_g_plus: u64 = OutcomeLabel::ALL
            .iter()
            .map(|&b| s.count(Setting::G, Setting::F, Plus, b))
            .sum();
        Self {
            hardy_fraction: s.frequency(Setting::G, Setting::G, Plus, Plus).unwrap_or(0.0),
            cond_ab: ratio(s.count(Setting::F, Setting::G, Plus, Plus), b_g_plus),
            cond_ba: ratio(s.count(Setting::G, Setting::F, Plus, Plus), a_g_plus),
            joint_ff: s.frequency(Setting::F, Setting::F, Plus, Plus).unwrap_or(0.0),
        }
    }

    /// True when the Hardy event occurs while both conditionals are certain
    /// and the `(F, F) → (1, 1)` event never happens.
    pub fn contradiction_witnessed(&self, tol: f64) -> bool {
        let certain = |c: Option<f64>| c.is_some_and(|c| (c - 1.0).abs() <= tol);
        self.hardy_fraction > tol && certain(self.cond_ab) && certain(self.cond_ba) && self.joint_ff <= tol
    }

    pub fn verdict(&self, tol: f64) -> &'static str {
        if self.contradiction_witnessed(tol) {
            "contradiction witnessed"
        } else {
            "no contradiction witnessed"
        }
    }
}

/// Exact and sampled figures side by side.
#[derive(Debug, Clone, Serialize)]
pub struct EprAudit {
    pub exact: EprFigures,
    pub sampled: Option<EprFigures>,
    /// Number of `(G, G)` trials behind the sampled Hardy fraction.
    pub hardy_trials: u64,
    /// `3·sqrt(p(1−p)/n)` around the exact Hardy fraction.
    pub hardy_three_sigma: Option<f64>,
    pub exact_verdict: &'static str,
    pub sampled_verdict: Option<&'static str>,
}

pub const EXACT_TOLERANCE: f64 = 1e-12;

pub fn epr_audit(trials: &[TrialRecord], exact: &ExactBehavior) -> EprAudit {
    let exact_fig = EprFigures::from_behavior(exact);
    let stats = JointStats::from_records(trials);
    let hardy_trials = stats.total(Setting::G, Setting::G);
    let sampled = (!trials.is_empty()).then(|| EprFigures::from_stats(&stats));
    let p = exact_fig.hardy_fraction;
    EprAudit {
        exact: exact_fig,
        sampled,
        hardy_trials,
        hardy_three_sigma: (hardy_trials > 0).then(|| 3.0 * (p * (1.0 - p) / hardy_trials as f64).sqrt()),
        exact_verdict: exact_fig.verdict(EXACT_TOLERANCE),
        // exact zeros and ones are what sampling must show; any positive
        // Hardy count counts as occurrence
        sampled_verdict: sampled.map(|s| s.verdict(0.0)),
    }
}

/// Writes `# `-prefixed metadata lines, then the CSV header and one row per
/// trial.
pub fn write_trial_log<W: Write>(mut w: W, meta: &[String], records: &[TrialRecord]) -> Result<(), ExperimentError> {
    for line in meta {
        writeln!(w, "# {line}")?;
    }
    let mut csv = csv::WriterBuilder::new().has_headers(true).from_writer(w);
    for r in records {
        csv.serialize(r)?;
    }
    if records.is_empty() {
        csv.write_record(TRIAL_LOG_HEADER.split(','))?;
    }
    csv.flush()?;
    Ok(())
}

/// Parses a trial log written by [`write_trial_log`]; returns the metadata
/// lines (without the `# ` prefix) and the records.
pub fn read_trial_log<R: Read>(r: R) -> Result<(Vec<String>, Vec<TrialRecord>), ExperimentError> {
    let mut reader = std::io::BufReader::new(r);
    let mut meta = Vec::new();
    let header = loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(ExperimentError::TrialLog("missing header".into()));
        }
        match line.strip_prefix('#') {
            Some(rest) => {
                let rest = rest.trim_end_matches(['\n', '\r']);
                meta.push(rest.strip_prefix(' ').unwrap_or(rest).to_owned());
            }
            None => break line,
        }
    };
    if header.trim_end() != TRIAL_LOG_HEADER {
        return Err(ExperimentError::TrialLog(format!(
            "unexpected header {:?}",
            header.trim_end()
        )));
    }
    let mut csv = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut records = Vec::new();
    for row in csv.deserialize() {
        records.push(row.map_err(|e: csv::Error| ExperimentError::TrialLog(e.to_string()))?);
    }
    Ok((meta, records))
}
