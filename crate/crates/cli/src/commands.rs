use std::fs;
use std::path::{Path, PathBuf};

use frameless_bell::experiment::{
    epr_audit, exact_behavior, run_trials, write_trial_log, EprFigures, ExactBehavior, ExperimentError, SetupRotations,
    Side, TrialRun, EXACT_TOLERANCE,
};
use frameless_bell::lhv::{
    check_feasibility, drop_constraint, max_hardy_fraction, quantum_constraints, verify_certificate, Rational, HARDY,
};
use frameless_bell::observables::{
    born_distribution, build_pvm, coarse_grain, local_protocol_for, protocol_pvm, OutcomeLabel, Setting,
};
use frameless_bell::qstate::{build_eta, build_phi, build_psi, expand_eta_in, reconstruct, SingletBasis, StateVector};
use frameless_bell::rotations::{
    apply_collective, apply_pair, derive_seed, mix64, sample_su2, CollectiveRotation, RotationPair,
};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::report::{Check, Table};
use crate::{CliError, Outcome, RunConfig};

const EXACT_LIMIT: f64 = 1e-12;
const ROTATED_LIMIT: f64 = 1e-10;
const INVARIANCE_PAIRS: u64 = 100;
const SPAN_STATES: u64 = 100;
const ROTATED_SETUPS: u64 = 20;
const HARDY_EXACT: f64 = 9.0 / 112.0;

fn limit(cfg: &RunConfig, default: f64) -> f64 {
    cfg.max_deviation.unwrap_or(default)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn outcome(table: &Table, cfg: &RunConfig, files: Vec<PathBuf>) -> Outcome {
    let failure = table.first_failure().map(|c| format!("{}: {}", c.section, c.name));
    Outcome {
        status: if failure.is_some() { 1 } else { 0 },
        report: table.render(cfg.format, &cfg.metadata(), &cfg.metadata_lines()),
        failure,
        files,
    }
}

/// Uniform value in `[-1, 1)` from a seed.
fn unit_interval(seed: u64) -> f64 {
    (mix64(seed) >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// Seeded normalized state in span{φ0, φ1}.
fn span_state(root: u64, i: u64) -> StateVector {
    let c: Vec<f64> = (0..4).map(|k| unit_interval(derive_seed(root, 4 * i + k))).collect();
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    build_phi(0)
        .scaled(Complex64::new(c[0] / n, c[1] / n))
        .add_scaled(&build_phi(1), Complex64::new(c[2] / n, c[3] / n))
        .expect("four-qubit states")
}

fn chain_checks(table: &mut Table, section: &str, figures: &EprFigures, tol: f64) {
    let cond = |c: Option<f64>| c.unwrap_or(f64::NAN);
    let dev = |v: f64, t: f64| if v.is_nan() { f64::INFINITY } else { (v - t).abs() };
    let (ba, ab) = (cond(figures.cond_ba), cond(figures.cond_ab));
    table.push(Check::measured(section, "P(B:F=1 | A:G=1)", ba, "1", dev(ba, 1.0), tol));
    table.push(Check::measured(section, "P(A:F=1 | B:G=1)", ab, "1", dev(ab, 1.0), tol));
    table.push(Check::measured(
        section,
        "P(A:G=1, B:G=1)",
        figures.hardy_fraction,
        "9/112",
        dev(figures.hardy_fraction, HARDY_EXACT),
        tol,
    ));
    table.push(Check::measured(
        section,
        "P(A:F=1, B:F=1)",
        figures.joint_ff,
        "0",
        figures.joint_ff.abs(),
        tol,
    ));
}

fn no_signaling_deviation(b: &ExactBehavior) -> f64 {
    let mut worst: f64 = 0.0;
    for side in [Side::Alice, Side::Bob] {
        for s in Setting::ALL {
            let f = b.marginal(side, s, Setting::F);
            let g = b.marginal(side, s, Setting::G);
            for k in 0..3 {
                worst = worst.max((f[k] - g[k]).abs());
            }
        }
    }
    worst
}

fn setup_json(s: &SetupRotations) -> Value {
    json!({
        "f_alice": s.f_alice.to_entries(),
        "g_alice": s.g_alice.to_entries(),
        "f_bob": s.f_bob.to_entries(),
        "g_bob": s.g_bob.to_entries(),
    })
}

fn verify_table(cfg: &RunConfig) -> Table {
    let mut t = Table::new("exact verification suite");
    let exact_tol = limit(cfg, EXACT_LIMIT);
    let rot_tol = limit(cfg, ROTATED_LIMIT);

    let eta = build_eta();
    t.push(Check::measured(
        "state",
        "norm of eta",
        eta.norm(),
        "1",
        (eta.norm() - 1.0).abs(),
        exact_tol,
    ));
    for (a, b, name) in [
        (
            SingletBasis::Phi,
            SingletBasis::Phi,
            "eta rebuilt from phi,phi expansion",
        ),
        (
            SingletBasis::Phi,
            SingletBasis::Psi,
            "eta rebuilt from phi,psi expansion",
        ),
        (
            SingletBasis::Psi,
            SingletBasis::Phi,
            "eta rebuilt from psi,phi expansion",
        ),
        (
            SingletBasis::Psi,
            SingletBasis::Psi,
            "eta rebuilt from psi,psi expansion",
        ),
    ] {
        let d = reconstruct(a, b, &expand_eta_in(a, b))
            .distance(&eta)
            .expect("8 qubits");
        t.push(Check::measured("state", name, d, "0", d, exact_tol));
    }
    let psipsi = expand_eta_in(SingletBasis::Psi, SingletBasis::Psi);
    let target = [[49.0, 27.0], [27.0, 9.0]];
    let worst = (0..4)
        .map(|k| (psipsi[k / 2][k % 2].norm_sqr() - target[k / 2][k % 2] / 112.0).abs())
        .fold(0.0, f64::max);
    t.push(Check::measured(
        "state",
        "psi,psi probability table",
        worst,
        "(49,27,27,9)/112",
        worst,
        exact_tol,
    ));

    for s in Setting::ALL {
        let ok = build_pvm(s).validate(exact_tol);
        t.push(Check::fact(
            "observables",
            &format!("{s} is a projector-valued measure"),
            match &ok {
                Ok(()) => "valid".to_string(),
                Err(e) => e.to_string(),
            },
            "valid",
            ok.is_ok(),
        ));
    }

    let mut worst_pair: f64 = 0.0;
    let mut within = 0;
    for i in 0..INVARIANCE_PAIRS {
        let d = apply_pair(&RotationPair::sample(cfg.root_seed, i), &eta)
            .expect("8 qubits")
            .distance(&eta)
            .expect("8 qubits");
        worst_pair = worst_pair.max(d);
        within += usize::from(d <= rot_tol);
    }
    t.push(Check::measured(
        "invariance",
        "eta under seeded rotation pairs",
        worst_pair,
        "0",
        worst_pair,
        rot_tol,
    ));
    t.push(Check::fact(
        "invariance",
        "pairs leaving eta unchanged",
        format!("{within}/{INVARIANCE_PAIRS}"),
        format!("{INVARIANCE_PAIRS}/{INVARIANCE_PAIRS}"),
        within as u64 == INVARIANCE_PAIRS,
    ));
    let mut worst_singlet: f64 = 0.0;
    for i in 0..INVARIANCE_PAIRS {
        let r = CollectiveRotation::local(sample_su2(derive_seed(mix64(cfg.root_seed), i)));
        for s in [build_phi(0), build_phi(1), build_psi(0), build_psi(1)] {
            let d = apply_collective(&r, &s)
                .expect("4 qubits")
                .distance(&s)
                .expect("4 qubits");
            worst_singlet = worst_singlet.max(d);
        }
    }
    t.push(Check::measured(
        "invariance",
        "singlets under collective rotations",
        worst_singlet,
        "0",
        worst_singlet,
        rot_tol,
    ));

    for setting in Setting::ALL {
        let p = local_protocol_for(setting);
        let minus = p.strings_for(OutcomeLabel::Minus);
        let plus = p.strings_for(OutcomeLabel::Plus);
        t.push(Check::fact(
            "protocol",
            &format!("{setting} strings classified -1 / +1"),
            format!("{} / {}", minus.len(), plus.len()),
            "4 / 12",
            minus.len() == 4 && plus.len() == 12,
        ));
        let [e0, e1] = setting.eigenstates();
        let measure = protocol_pvm(&p);
        let d0 = measure.distribution(&e0).expect("4 qubits");
        let d1 = measure.distribution(&e1).expect("4 qubits");
        let dev0 = minus.iter().map(|&s| (d0[s] - 0.25).abs()).fold(0.0, f64::max);
        let dev1 = plus.iter().map(|&s| (d1[s] - 1.0 / 12.0).abs()).fold(0.0, f64::max);
        t.push(Check::measured(
            "protocol",
            &format!("{setting}: each -1 string on first eigenstate"),
            0.25 + dev0,
            "1/4",
            dev0,
            exact_tol,
        ));
        t.push(Check::measured(
            "protocol",
            &format!("{setting}: each +1 string on second eigenstate"),
            1.0 / 12.0 + dev1,
            "1/12",
            dev1,
            exact_tol,
        ));
        let pvm = build_pvm(setting);
        let coarse = coarse_grain(&p);
        let worst = (0..SPAN_STATES)
            .map(|i| {
                let s = span_state(cfg.root_seed, i);
                born_distribution(&s, &pvm)
                    .expect("4 qubits")
                    .max_deviation(&born_distribution(&s, &coarse).expect("4 qubits"))
            })
            .fold(0.0, f64::max);
        t.push(Check::measured(
            "protocol",
            &format!("{setting}: protocol vs measure on {SPAN_STATES} span states"),
            worst,
            "0",
            worst,
            exact_tol,
        ));
    }

    let canonical = exact_behavior(None);
    chain_checks(&mut t, "identities", &EprFigures::from_behavior(&canonical), exact_tol);

    let mut worst_setup: f64 = 0.0;
    let mut worst_signal = no_signaling_deviation(&canonical);
    let mut setups = Vec::new();
    for i in 0..ROTATED_SETUPS {
        let s = SetupRotations::sample(cfg.root_seed, i);
        let b = exact_behavior(Some(&s));
        worst_setup = worst_setup.max(b.max_deviation(&canonical));
        worst_signal = worst_signal.max(no_signaling_deviation(&b));
        setups.push(setup_json(&s));
    }
    t.push(Check::measured(
        "robustness",
        "behavior under seeded setup rotations",
        worst_setup,
        "canonical",
        worst_setup,
        rot_tol,
    ));
    t.push(Check::measured(
        "no-signaling",
        "marginals vs remote setting",
        worst_signal,
        "0",
        worst_signal,
        exact_tol,
    ));
    t.extra.insert("setup_rotations".into(), Value::Array(setups));
    t
}

/// Runs the exact suite. Exit 1 names the first failing check.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let table = verify_table(cfg);
    ensure_dir(&cfg.output_dir)?;
    let mut out = outcome(&table, cfg, Vec::new());
    let file = write_file(
        &cfg.output_dir,
        &format!("verify.{}", cfg.format.extension()),
        out.report.as_bytes(),
    )?;
    out.files.push(file);
    Ok(out)
}

fn simulate(cfg: &RunConfig) -> Result<TrialRun, CliError> {
    run_trials(cfg.trials, cfg.root_seed, cfg.run_options()).map_err(|e| match e {
        ExperimentError::ZeroOutcome { trial } => {
            CliError::Check(format!("trial {trial} produced outcome 0, which the state forbids"))
        }
        other => CliError::Usage(other.to_string()),
    })
}

fn sample_table(cfg: &RunConfig, run: &TrialRun) -> (Table, Value) {
    let exact = exact_behavior(None);
    let audit = epr_audit(&run.records, &exact);
    let mut t = Table::new("Monte Carlo sampling");
    let n_gg = audit.hardy_trials;
    match (audit.sampled, audit.hardy_three_sigma) {
        (Some(s), Some(sigma3)) => {
            let f = s.hardy_fraction;
            t.push(Check::measured(
                "sample",
                "P(A:G=1, B:G=1) within 3 sigma",
                f,
                "9/112",
                (f - HARDY_EXACT).abs(),
                sigma3,
            ));
            t.notes.push(format!(
                "Hardy fraction {f:.6} +/- {sigma3:.6} (3 sigma, {n_gg} (G,G) trials); exact 9/112 = {HARDY_EXACT:.6}"
            ));
        }
        _ => t.push(Check::fact(
            "sample",
            "P(A:G=1, B:G=1)",
            "no (G,G) trials",
            "9/112",
            true,
        )),
    }
    let s = run.stats;
    use OutcomeLabel::Plus;
    let ba_given = OutcomeLabel::ALL
        .iter()
        .map(|&b| s.count(Setting::G, Setting::F, Plus, b))
        .sum::<u64>();
    let ab_given = OutcomeLabel::ALL
        .iter()
        .map(|&a| s.count(Setting::F, Setting::G, a, Plus))
        .sum::<u64>();
    let ba_hit = s.count(Setting::G, Setting::F, Plus, Plus);
    let ab_hit = s.count(Setting::F, Setting::G, Plus, Plus);
    t.push(Check::fact(
        "sample",
        "A:G=1 followed by B:F=1",
        format!("{ba_hit}/{ba_given}"),
        "all",
        ba_hit == ba_given,
    ));
    t.push(Check::fact(
        "sample",
        "B:G=1 followed by A:F=1",
        format!("{ab_hit}/{ab_given}"),
        "all",
        ab_hit == ab_given,
    ));
    let ff = s.count(Setting::F, Setting::F, Plus, Plus);
    t.push(Check::fact(
        "sample",
        "(F,F) trials giving (1,1)",
        format!("{ff}/{}", s.total(Setting::F, Setting::F)),
        "0",
        ff == 0,
    ));
    t.push(Check::fact(
        "sample",
        "outcome 0 occurrences",
        s.zero_outcomes().to_string(),
        "0",
        s.zero_outcomes() == 0,
    ));
    let stats = json!({
        "metadata": cfg.metadata(),
        "stats": s.to_report(&exact),
        "epr": audit,
    });
    (t, stats)
}

fn write_samples(cfg: &RunConfig, run: &TrialRun, stats: &Value) -> Result<Vec<PathBuf>, CliError> {
    let mut csv = Vec::new();
    write_trial_log(&mut csv, &cfg.metadata_lines(), &run.records).map_err(|e| match e {
        ExperimentError::Io(source) => CliError::io(&cfg.output_dir.join("trials.csv"), source),
        other => CliError::Check(other.to_string()),
    })?;
    let mut stats_text = serde_json::to_string_pretty(stats).expect("stats serialize");
    stats_text.push('\n');
    Ok(vec![
        write_file(&cfg.output_dir, "trials.csv", &csv)?,
        write_file(&cfg.output_dir, "stats.json", stats_text.as_bytes())?,
    ])
}

/// Runs the Monte Carlo experiment and writes `trials.csv` and `stats.json`.
pub fn cmd_sample(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    ensure_dir(&cfg.output_dir)?;
    let run = simulate(cfg)?;
    let (table, stats) = sample_table(cfg, &run);
    let files = write_samples(cfg, &run, &stats)?;
    let mut out = outcome(&table, cfg, files);
    let file = write_file(
        &cfg.output_dir,
        &format!("sample.{}", cfg.format.extension()),
        out.report.as_bytes(),
    )?;
    out.files.push(file);
    Ok(out)
}

struct Audit {
    table: Table,
    certificate_json: Value,
    certificate_text: String,
}

fn audit(cfg: &RunConfig) -> Result<Audit, CliError> {
    let mut constraints = quantum_constraints();
    if let Some(name) = &cfg.drop_constraint {
        constraints = drop_constraint(&constraints, name).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let cert = check_feasibility(&constraints).map_err(|e| CliError::Check(e.to_string()))?;
    let verified = verify_certificate(&cert, &constraints).map_err(|e| CliError::Check(e.to_string()))?;
    let mut t = Table::new("hidden-variable audit");
    let verdict = if cert.feasible() { "feasible" } else { "infeasible" };
    t.push(Check::fact(
        "lhv",
        "constraints",
        constraints.len().to_string(),
        "",
        true,
    ));
    t.push(Check::fact("lhv", "verdict", verdict, "", true));
    if let Some(d) = cert.derivation() {
        t.push(Check::fact(
            "lhv",
            "derivation steps",
            d.steps().len().to_string(),
            "",
            true,
        ));
    }
    t.push(Check::fact(
        "lhv",
        "certificate verifies",
        verified.to_string(),
        "true",
        verified,
    ));
    if cfg.max_hardy {
        let others = match drop_constraint(&constraints, HARDY) {
            Ok(c) => c,
            Err(_) => constraints.clone(),
        };
        let lhv = max_hardy_fraction(&others).map_err(|e| CliError::Check(e.to_string()))?;
        let quantum = Rational::new(9, 112);
        t.push(Check::fact(
            "lhv",
            "max Hardy fraction (hidden variables)",
            lhv.to_string(),
            format!("quantum {quantum}"),
            true,
        ));
        t.notes.push(format!(
            "largest P(g_a=1, g_b=1) any hidden-variable model allows: {lhv}; quantum value: {quantum}"
        ));
    }
    t.notes.extend(cert.to_text().lines().map(str::to_owned));
    let certificate_json: Value = serde_json::from_str(&cert.to_json()).expect("certificate json");
    Ok(Audit {
        table: t,
        certificate_json,
        certificate_text: cert.to_text(),
    })
}

fn write_certificate(cfg: &RunConfig, a: &Audit) -> Result<Vec<PathBuf>, CliError> {
    let mut json_text = serde_json::to_string_pretty(&json!({
        "metadata": cfg.metadata(),
        "certificate": a.certificate_json,
    }))
    .expect("certificate serializes");
    json_text.push('\n');
    let mut text = String::new();
    for line in cfg.metadata_lines() {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str(&a.certificate_text);
    Ok(vec![
        write_file(&cfg.output_dir, "certificate.json", json_text.as_bytes())?,
        write_file(&cfg.output_dir, "certificate.txt", text.as_bytes())?,
    ])
}

/// Decides hidden-variable feasibility and writes the certificate. Exit 0 iff
/// the certificate verifies.
pub fn cmd_lhv_audit(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let a = audit(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    let files = write_certificate(cfg, &a)?;
    Ok(outcome(&a.table, cfg, files))
}

/// Exact suite, sampling and audit in one report, led by the four quantities
/// of the inference chain.
pub fn cmd_report(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    ensure_dir(&cfg.output_dir)?;
    let verify = verify_table(cfg);
    let run = simulate(cfg)?;
    let (sample, stats) = sample_table(cfg, &run);
    let a = audit(cfg)?;

    let mut t = Table::new("frameless Bell test report");
    let exact = EprFigures::from_behavior(&exact_behavior(None));
    chain_checks(&mut t, "chain (exact)", &exact, limit(cfg, EXACT_TOLERANCE));
    let sampled = EprFigures::from_stats(&run.stats);
    let mut sampled_table = Table::new("");
    chain_checks(&mut sampled_table, "chain (sampled)", &sampled, f64::INFINITY);
    for mut c in sampled_table.checks {
        // sampled values are reported, not judged; the sample section judges them
        c.threshold = None;
        c.deviation = None;
        c.passed = true;
        t.push(c);
    }
    t.notes.push(format!(
        "exact: {}; sampled: {}",
        exact.verdict(EXACT_TOLERANCE),
        sampled.verdict(0.0)
    ));
    for part in [&verify, &sample, &a.table] {
        t.checks.extend(part.checks.iter().cloned());
        t.notes.extend(part.notes.iter().cloned());
    }
    t.extra = verify.extra.clone();

    let mut files = write_samples(cfg, &run, &stats)?;
    files.extend(write_certificate(cfg, &a)?);
    let mut out = outcome(&t, cfg, files);
    let file = write_file(
        &cfg.output_dir,
        &format!("report.{}", cfg.format.extension()),
        out.report.as_bytes(),
    )?;
    out.files.push(file);
    Ok(out)
}
