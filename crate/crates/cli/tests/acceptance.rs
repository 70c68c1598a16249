//! Acceptance suite. Runs every criterion in order and prints one line each;
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use frameless_bell::experiment::{
    exact_behavior, joint_born, run_trials, MeasurementPath, RunOptions, SettingPolicy, SetupRotations, Side,
};
use frameless_bell::lhv::{
    check_feasibility, hardy_side_constraints, max_hardy_fraction, quantum_constraints, verify_certificate, Rational,
};
use frameless_bell::observables::{
    born_distribution, build_pvm, coarse_grain, local_protocol_for, protocol_pvm, Operator, OutcomeLabel, Pvm, Setting,
    LOCAL_DIM,
};
use frameless_bell::qstate::{build_eta, build_phi, build_psi, expand_eta_in, reconstruct, SingletBasis, StateVector};
use frameless_bell::rotations::{apply_collective, apply_pair, rotate_pvm, CollectiveRotation, RotationPair};
use frameless_bell_cli::{cmd_sample, Command, RunConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT_TOL: f64 = 1e-12;
const ROTATED_TOL: f64 = 1e-10;
const HARDY: f64 = 9.0 / 112.0;

const LIMIT_IDENTITIES: Duration = Duration::from_secs(1);
const LIMIT_ROBUSTNESS: Duration = Duration::from_secs(10);
const LIMIT_MONTE_CARLO: Duration = Duration::from_secs(60);
const LIMIT_LHV: Duration = Duration::from_secs(1);

const ROBUSTNESS_SETUPS: u64 = 20;
const INVARIANCE_PAIRS: u64 = 100;
const SPAN_STATES: usize = 100;
const GG_TRIALS: u64 = 1_000_000;
const FF_TRIALS: u64 = 100_000;
const GF_TRIALS: u64 = 100_000;
const DETERMINISM_TRIALS: u64 = 1_000_000;
const SEED: u64 = 42;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn identity16() -> Operator {
    Operator::identity(LOCAL_DIM, LOCAL_DIM)
}

fn plus(m: &Pvm) -> &Operator {
    m.projector(OutcomeLabel::Plus).expect("+1 projector")
}

/// The four chain quantities by dense Born-rule evaluation, given each
/// side's F and G measurements.
fn chain(state: &StateVector, fa: &Pvm, ga: &Pvm, fb: &Pvm, gb: &Pvm) -> [f64; 4] {
    let id = identity16();
    let ff = joint_born(state, plus(fa), plus(fb));
    let gg = joint_born(state, plus(ga), plus(gb));
    // P(A:F=1 | B:G=1) and P(B:F=1 | A:G=1)
    let ab = joint_born(state, plus(fa), plus(gb)) / joint_born(state, &id, plus(gb));
    let ba = joint_born(state, plus(ga), plus(fb)) / joint_born(state, plus(ga), &id);
    [ff, ab, ba, gg]
}

fn chain_deviation(q: [f64; 4]) -> f64 {
    let targets = [0.0, 1.0, 1.0, HARDY];
    q.iter().zip(targets).map(|(v, t)| (v - t).abs()).fold(0.0, f64::max)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let eta = build_eta();
    let (f, g) = (build_pvm(Setting::F), build_pvm(Setting::G));
    let q = chain(&eta, &f, &g, &f, &g);
    let dev = chain_deviation(q);
    let elapsed = start.elapsed();
    verdict(
        dev < EXACT_TOL && elapsed < LIMIT_IDENTITIES,
        format!(
            "P(F,F->1,1)={:.3e} P(A:F=1|B:G=1)={:.15} P(B:F=1|A:G=1)={:.15} P(G,G->1,1)={:.15}; max deviation {dev:.2e} < {EXACT_TOL:e}; {elapsed:.2?} < {LIMIT_IDENTITIES:?}",
            q[0], q[1], q[2], q[3]
        ),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let (f, g) = (build_pvm(Setting::F), build_pvm(Setting::G));
    let mut worst: f64 = 0.0;
    for i in 0..ROBUSTNESS_SETUPS {
        let s = SetupRotations::sample(SEED, i);
        let rot = |u, m: &Pvm| rotate_pvm(&CollectiveRotation::local(u), m);
        let q = chain(
            &build_eta(),
            &rot(s.f_alice, &f),
            &rot(s.g_alice, &g),
            &rot(s.f_bob, &f),
            &rot(s.g_bob, &g),
        );
        worst = worst.max(chain_deviation(q));
    }
    let elapsed = start.elapsed();
    verdict(
        worst < ROTATED_TOL && elapsed < LIMIT_ROBUSTNESS,
        format!(
            "{ROBUSTNESS_SETUPS} seeded rotation 4-tuples; max deviation {worst:.2e} < {ROTATED_TOL:e}; {elapsed:.2?} < {LIMIT_ROBUSTNESS:?}"
        ),
    )
}

fn criterion_3() -> Verdict {
    let eta = build_eta();
    let mut worst_pair: f64 = 0.0;
    let mut worst_single: f64 = 0.0;
    for i in 0..INVARIANCE_PAIRS {
        let pair = RotationPair::sample(SEED, i);
        worst_pair = worst_pair.max(apply_pair(&pair, &eta).unwrap().distance(&eta).unwrap());
        for r in [pair.alice, pair.bob] {
            for s in [build_phi(0), build_phi(1), build_psi(0), build_psi(1)] {
                worst_single = worst_single.max(apply_collective(&r, &s).unwrap().distance(&s).unwrap());
            }
        }
    }
    verdict(
        worst_pair < ROTATED_TOL && worst_single < ROTATED_TOL,
        format!(
            "{INVARIANCE_PAIRS} SU(2) pairs on eta: {worst_pair:.2e}; singlets under single collective rotations: {worst_single:.2e}; both < {ROTATED_TOL:e}"
        ),
    )
}

fn criterion_4() -> Verdict {
    let eta = build_eta();
    let mut worst: f64 = 0.0;
    for (a, b) in [
        (SingletBasis::Phi, SingletBasis::Phi),
        (SingletBasis::Phi, SingletBasis::Psi),
        (SingletBasis::Psi, SingletBasis::Phi),
        (SingletBasis::Psi, SingletBasis::Psi),
    ] {
        worst = worst.max(reconstruct(a, b, &expand_eta_in(a, b)).distance(&eta).unwrap());
    }
    // the psi,psi table scaled by 112 must be the integers 49, 27, 27, 9
    let t = expand_eta_in(SingletBasis::Psi, SingletBasis::Psi);
    let scaled: Vec<f64> = t.iter().flatten().map(|c| c.norm_sqr() * 112.0).collect();
    let expected = [49.0, 27.0, 27.0, 9.0];
    let table_dev = scaled
        .iter()
        .zip(expected)
        .map(|(v, e)| (v - e).abs())
        .fold(0.0, f64::max);
    let rounded: Vec<i64> = scaled.iter().map(|v| v.round() as i64).collect();
    verdict(
        worst < EXACT_TOL && table_dev < EXACT_TOL && rounded == [49, 27, 27, 9],
        format!(
            "reconstruction distance {worst:.2e} < {EXACT_TOL:e}; psi,psi table = {rounded:?}/112 (deviation {table_dev:.2e})"
        ),
    )
}

fn random_span_state(rng: &mut ChaCha8Rng) -> StateVector {
    let mut c = [0.0f64; 4];
    for x in &mut c {
        *x = rng.random_range(-1.0..1.0);
    }
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    build_phi(0)
        .scaled(Complex64::new(c[0] / n, c[1] / n))
        .add_scaled(&build_phi(1), Complex64::new(c[2] / n, c[3] / n))
        .unwrap()
}

fn criterion_5() -> Verdict {
    let mut ok = true;
    let mut worst_string: f64 = 0.0;
    let mut worst_span: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let states: Vec<StateVector> = (0..SPAN_STATES).map(|_| random_span_state(&mut rng)).collect();
    for setting in Setting::ALL {
        let p = local_protocol_for(setting);
        let minus = p.strings_for(OutcomeLabel::Minus);
        let plus = p.strings_for(OutcomeLabel::Plus);
        ok &= minus.len() == 4 && plus.len() == 12;
        let m = protocol_pvm(&p);
        let [e0, e1] = setting.eigenstates();
        let (d0, d1) = (m.distribution(&e0).unwrap(), m.distribution(&e1).unwrap());
        for &s in &minus {
            worst_string = worst_string.max((d0[s] - 0.25).abs());
        }
        for &s in &plus {
            worst_string = worst_string.max((d1[s] - 1.0 / 12.0).abs());
        }
        let (pvm, coarse) = (build_pvm(setting), coarse_grain(&p));
        for s in &states {
            let a = born_distribution(s, &pvm).unwrap();
            let b = born_distribution(s, &coarse).unwrap();
            worst_span = worst_span.max(a.max_deviation(&b));
        }
    }
    verdict(
        ok && worst_string < EXACT_TOL && worst_span < EXACT_TOL,
        format!(
            "4/12 string split; string probabilities 1/4 and 1/12 within {worst_string:.2e}; {SPAN_STATES} span states within {worst_span:.2e}; both < {EXACT_TOL:e}"
        ),
    )
}

fn criterion_6() -> Verdict {
    use OutcomeLabel::Plus;
    use Setting::{F, G};
    let start = Instant::now();
    let opts = |a, b| RunOptions {
        policy: SettingPolicy::Fixed(a, b),
        fixed_rotations: false,
        path: MeasurementPath::Pvm,
    };
    let gg = run_trials(GG_TRIALS, SEED, opts(G, G)).unwrap().stats;
    let f = gg.frequency(G, G, Plus, Plus).unwrap();
    let band = 3.0 * (HARDY * (1.0 - HARDY) / GG_TRIALS as f64).sqrt();
    let ff = run_trials(FF_TRIALS, SEED + 1, opts(F, F)).unwrap().stats;
    let ff_hits = ff.count(F, F, Plus, Plus);
    let gf = run_trials(GF_TRIALS, SEED + 2, opts(G, F)).unwrap().stats;
    let a_plus: u64 = OutcomeLabel::ALL.iter().map(|&b| gf.count(G, F, Plus, b)).sum();
    let both = gf.count(G, F, Plus, Plus);
    let elapsed = start.elapsed();
    verdict(
        (f - HARDY).abs() <= band && ff_hits == 0 && a_plus > 0 && both == a_plus && elapsed < LIMIT_MONTE_CARLO,
        format!(
            "(G,G) {GG_TRIALS} trials: {f:.6} vs 9/112 = {HARDY:.6}, |diff| {:.2e} <= 3 sigma {band:.2e}; (F,F) {FF_TRIALS} trials: {ff_hits} (1,1) events; (G,F) {GF_TRIALS} trials: {both}/{a_plus} A=1 with B=1; {elapsed:.2?} < {LIMIT_MONTE_CARLO:?}",
            (f - HARDY).abs()
        ),
    )
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let c = quantum_constraints();
    let cert = check_feasibility(&c).unwrap();
    let verified = verify_certificate(&cert, &c).unwrap();
    let max = max_hardy_fraction(&hardy_side_constraints()).unwrap();
    let quantum = Rational::new(9, 112);
    let elapsed = start.elapsed();
    verdict(
        !cert.feasible() && verified && max == Rational::new(0, 1) && max < quantum && elapsed < LIMIT_LHV,
        format!(
            "feasible={} verified={verified}; max Hardy fraction {max} < {quantum}; {elapsed:.2?} < {LIMIT_LHV:?}",
            cert.feasible()
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut worst: f64 = 0.0;
    let setups = std::iter::once(None).chain((0..ROBUSTNESS_SETUPS).map(|i| Some(SetupRotations::sample(SEED, i))));
    for s in setups {
        let b = exact_behavior(s.as_ref());
        for side in [Side::Alice, Side::Bob] {
            for setting in Setting::ALL {
                let f = b.marginal(side, setting, Setting::F);
                let g = b.marginal(side, setting, Setting::G);
                for k in 0..3 {
                    worst = worst.max((f[k] - g[k]).abs());
                }
            }
        }
    }
    verdict(
        worst < EXACT_TOL,
        format!("canonical and {ROBUSTNESS_SETUPS} rotated setups; max marginal shift {worst:.2e} < {EXACT_TOL:e}"),
    )
}

fn criterion_9() -> Verdict {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let logs: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| {
            let mut cfg = RunConfig::new(Command::Sample, d.path());
            cfg.trials = DETERMINISM_TRIALS;
            cfg.root_seed = SEED;
            cmd_sample(&cfg).unwrap();
            std::fs::read(d.path().join("trials.csv")).unwrap()
        })
        .collect();
    verdict(
        logs[0] == logs[1] && !logs[0].is_empty(),
        format!(
            "two runs of {DETERMINISM_TRIALS} trials, seed {SEED}: {} and {} bytes, identical={}",
            logs[0].len(),
            logs[1].len(),
            logs[0] == logs[1]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("exact identities", criterion_1),
        ("rotation robustness", criterion_2),
        ("state invariance", criterion_3),
        ("expansion consistency", criterion_4),
        ("local protocol equivalence", criterion_5),
        ("Monte Carlo reproduction", criterion_6),
        ("hidden-variable infeasibility", criterion_7),
        ("no-signaling", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        let mark = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {mark}  {}", i + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
