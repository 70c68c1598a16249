use std::collections::BTreeMap;

use frameless_bell::experiment::{
    exact_behavior, read_trial_log, run_trials, write_trial_log, MeasurementPath, RunOptions, SettingPolicy,
    SetupRotations, TrialRecord,
};
use frameless_bell::lhv::{
    all_strategies, check_feasibility, drop_constraint, event_mass, quantum_constraints, verify_certificate, Alphabet,
    BehavioralConstraint, LhvStrategy, Rational,
};
use frameless_bell::observables::{
    born_distribution, build_pvm, coarse_grain, local_protocol_for, OutcomeLabel, Setting,
};
use frameless_bell::qstate::{build_eta, build_phi, build_psi, inner_product, tensor, StateVector};
use frameless_bell::rotations::{apply_pair, parse_seed, RotationPair, SingleQubitUnitary};
use num_complex::Complex64;
use proptest::prelude::*;

fn unit_vector(n: usize) -> impl Strategy<Value = StateVector> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| {
            let norm: f64 = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            StateVector::from_amplitudes(v.iter().map(|(a, b)| Complex64::new(a / norm, b / norm)).collect()).unwrap()
        })
}

fn quaternion() -> impl Strategy<Value = SingleQubitUnitary> {
    [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0]
        .prop_filter("nonzero", |q| q.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(SingleQubitUnitary::from_quaternion)
}

fn span_state() -> impl Strategy<Value = StateVector> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("nonzero", |(a, b, c, d)| a * a + b * b + c * c + d * d > 1e-4)
        .prop_map(|(a, b, c, d)| {
            let n = (a * a + b * b + c * c + d * d).sqrt();
            build_phi(0)
                .scaled(Complex64::new(a / n, b / n))
                .add_scaled(&build_phi(1), Complex64::new(c / n, d / n))
                .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_norms_multiply(a in unit_vector(2), b in unit_vector(3)) {
        let s = a.scaled(Complex64::new(2.0, 0.0));
        let t = tensor(&s, &b).unwrap();
        prop_assert!((t.norm() - s.norm() * b.norm()).abs() < 1e-12);
        prop_assert_eq!(t.num_qubits(), 5);
    }

    #[test]
    fn tensor_is_associative(a in unit_vector(1), b in unit_vector(2), c in unit_vector(2)) {
        let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        prop_assert!(left.distance(&right).unwrap() < 1e-12);
    }

    #[test]
    fn eta_is_invariant(u in quaternion(), v in quaternion()) {
        let eta = build_eta();
        let rotated = apply_pair(&RotationPair::new(u, v), &eta).unwrap();
        prop_assert!(eta.distance(&rotated).unwrap() < 1e-10);
    }

    #[test]
    fn singlets_stay_singlets(u in quaternion(), j in 0usize..2) {
        use frameless_bell::rotations::{apply_collective, CollectiveRotation};
        let r = CollectiveRotation::local(u);
        for s in [build_phi(j), build_psi(j)] {
            let out = apply_collective(&r, &s).unwrap();
            prop_assert!((inner_product(&s, &out).unwrap().norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn protocol_matches_pvm_on_span(s in span_state(), setting in prop_oneof![Just(Setting::F), Just(Setting::G)]) {
        let exact = born_distribution(&s, &build_pvm(setting)).unwrap();
        let coarse = born_distribution(&s, &coarse_grain(&local_protocol_for(setting))).unwrap();
        prop_assert!(exact.max_deviation(&coarse) < 1e-12);
        prop_assert!(exact.get(OutcomeLabel::Zero) < 1e-12);
    }

    #[test]
    fn exact_behavior_is_rotation_independent(root in any::<u64>(), i in 0u64..1000) {
        let rotated = exact_behavior(Some(&SetupRotations::sample(root, i)));
        prop_assert!(rotated.max_deviation(&exact_behavior(None)) < 1e-10);
    }

    #[test]
    fn seeds_parse_back(x in any::<u64>()) {
        prop_assert_eq!(parse_seed(&x.to_string()).unwrap(), x);
        prop_assert_eq!(parse_seed(&format!("{x:#x}")).unwrap(), x);
    }

    #[test]
    fn trial_logs_round_trip(seed in any::<u64>(), n in 1u64..40, meta in proptest::collection::vec("[a-z=0-9 ]{0,20}", 0..4)) {
        let run = run_trials(n, seed, RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_trial_log(&mut buf, &meta, &run.records).unwrap();
        let (meta_back, records): (Vec<String>, Vec<TrialRecord>) = read_trial_log(&buf[..]).unwrap();
        prop_assert_eq!(meta_back, meta);
        prop_assert_eq!(records, run.records);
    }

    #[test]
    fn policies_display_and_parse(a in 0usize..2, b in 0usize..2, kind in 0u8..3) {
        let p = match kind {
            0 => SettingPolicy::Uniform,
            1 => SettingPolicy::Cycle,
            _ => SettingPolicy::Fixed(Setting::ALL[a], Setting::ALL[b]),
        };
        prop_assert_eq!(p.to_string().parse::<SettingPolicy>().unwrap(), p);
    }

    #[test]
    fn sub_constraint_certificates_verify(mask in 0u32..32, binary in any::<bool>()) {
        let all = quantum_constraints();
        let subset: Vec<BehavioralConstraint> =
            all.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, c)| c.clone()).collect();
        let alphabet = if binary { Alphabet::Binary } else { Alphabet::Ternary };
        let cert = frameless_bell::lhv::check_feasibility_over(&subset, alphabet).unwrap();
        prop_assert!(verify_certificate(&cert, &subset).unwrap());
        // only the full chain plus the Hardy value refutes
        let needed = 0b01111;
        prop_assert_eq!(cert.feasible(), mask & needed != needed);
    }

    #[test]
    fn constraints_read_off_a_model_are_feasible(weights in proptest::collection::vec(0u8..4, 81), picks in proptest::collection::vec(0usize..5, 1..5)) {
        prop_assume!(weights.iter().any(|&w| w > 0));
        let total: i128 = weights.iter().map(|&w| w as i128).sum();
        let dist: BTreeMap<LhvStrategy, Rational> = all_strategies(Alphabet::Ternary)
            .into_iter()
            .zip(&weights)
            .filter(|(_, &w)| w > 0)
            .map(|(s, &w)| (s, Rational::new(w as i128, total)))
            .collect();
        let constraints: Vec<BehavioralConstraint> = picks
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let mut c = quantum_constraints()[i].clone();
                c.name = format!("{}_{k}", c.name);
                c.value = event_mass(&c.event, &dist);
                c
            })
            .collect();
        let cert = check_feasibility(&constraints).unwrap();
        prop_assert!(cert.feasible());
        prop_assert!(verify_certificate(&cert, &constraints).unwrap());
    }
}

#[test]
fn protocol_path_matches_pvm_path_in_distribution() {
    // both paths sample the same joint law; compare (G,G) counts loosely
    let opts = |path| RunOptions {
        policy: SettingPolicy::Fixed(Setting::G, Setting::G),
        fixed_rotations: false,
        path,
    };
    let n = 4000;
    let pvm = run_trials(n, 11, opts(MeasurementPath::Pvm)).unwrap();
    let protocol = run_trials(n, 11, opts(MeasurementPath::Protocol)).unwrap();
    let p = 9.0 / 112.0;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    for run in [pvm, protocol] {
        let f = run
            .stats
            .frequency(Setting::G, Setting::G, OutcomeLabel::Plus, OutcomeLabel::Plus)
            .unwrap();
        assert!((f - p).abs() < 4.0 * sigma, "{f}");
        assert_eq!(run.stats.zero_outcomes(), 0);
    }
}

#[test]
fn dropping_any_chain_link_restores_feasibility() {
    for name in ["ff_zero", "ab_certain", "ba_certain", "hardy"] {
        let c = drop_constraint(&quantum_constraints(), name).unwrap();
        let cert = check_feasibility(&c).unwrap();
        assert!(cert.feasible(), "{name}");
        assert!(verify_certificate(&cert, &c).unwrap());
    }
    let c = drop_constraint(&quantum_constraints(), "no_zero").unwrap();
    assert!(!check_feasibility(&c).unwrap().feasible());
}
