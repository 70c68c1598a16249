//! Exact local-hidden-variable audit.
//!
//! A hidden-variable model is a probability distribution over deterministic
//! strategies `(f_a, g_a, f_b, g_b)`, one predetermined outcome per local
//! observable. The quantum behavior imposes constraints on that distribution;
//! this module decides, in exact rational arithmetic, whether any distribution
//! satisfies them and emits a certificate either way.
//!
//! Decision order:
//!
//! 1. a single strategy satisfying every constraint (point-mass witness);
//! 2. a null-set derivation: the zero-probability constraints forbid a region
//!    of strategy space, and a constraint demanding positive probability on an
//!    event inside that region is contradictory;
//! 3. an exact simplex over the strategy weights, yielding a mixed witness or
//!    Farkas multipliers.
//!
//! No floating point is used anywhere in this module.

mod certificate;
mod simplex;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::observables::OutcomeLabel;

pub use certificate::{verify_certificate, Derivation, FeasibilityCertificate, Step};

/// Exact rational number in lowest terms.
pub type Rational = Ratio<i128>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LhvError {
    #[error("constraint {index} ({name}): {reason}")]
    BadConstraint { index: usize, name: String, reason: String },
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("invalid rational {0:?}")]
    BadRational(String),
    #[error("no hidden-variable model satisfies the given constraints")]
    Infeasible,
    #[error("unknown constraint {0:?}")]
    UnknownConstraint(String),
}

/// Parses `p/q` or `p` into a reduced rational.
pub fn parse_rational(text: &str) -> Result<Rational, LhvError> {
    let bad = || LhvError::BadRational(text.to_owned());
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (
            n.trim().parse::<i128>().map_err(|_| bad())?,
            d.trim().parse::<i128>().map_err(|_| bad())?,
        ),
        None => (text.trim().parse::<i128>().map_err(|_| bad())?, 1),
    };
    if d == 0 || n.checked_abs().is_none() || d.checked_abs().is_none() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

pub(crate) mod rational_serde {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// One of the four local observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "f_a")]
    FA,
    #[serde(rename = "g_a")]
    GA,
    #[serde(rename = "f_b")]
    FB,
    #[serde(rename = "g_b")]
    GB,
}

impl Observable {
    pub const ALL: [Observable; 4] = [Observable::FA, Observable::GA, Observable::FB, Observable::GB];

    pub fn name(self) -> &'static str {
        match self {
            Observable::FA => "f_a",
            Observable::GA => "g_a",
            Observable::FB => "f_b",
            Observable::GB => "g_b",
        }
    }
}

/// Predetermined outcomes for every observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LhvStrategy {
    pub f_a: OutcomeLabel,
    pub g_a: OutcomeLabel,
    pub f_b: OutcomeLabel,
    pub g_b: OutcomeLabel,
}

impl LhvStrategy {
    pub fn new(f_a: OutcomeLabel, g_a: OutcomeLabel, f_b: OutcomeLabel, g_b: OutcomeLabel) -> Self {
        Self { f_a, g_a, f_b, g_b }
    }

    pub fn value(&self, obs: Observable) -> OutcomeLabel {
        match obs {
            Observable::FA => self.f_a,
            Observable::GA => self.g_a,
            Observable::FB => self.f_b,
            Observable::GB => self.g_b,
        }
    }
}

impl fmt::Display for LhvStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.f_a.value(),
            self.g_a.value(),
            self.f_b.value(),
            self.g_b.value()
        )
    }
}

impl FromStr for LhvStrategy {
    type Err = LhvError;

    /// Parses `f_a,g_a,f_b,g_b` as four integers in `{-1, 0, 1}`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LhvError::MalformedCertificate(format!("bad strategy key {s:?}"));
        let vals = s
            .split(',')
            .map(|v| {
                let v: i8 = v.trim().parse().map_err(|_| bad())?;
                OutcomeLabel::try_from(v).map_err(|_| bad())
            })
            .collect::<Result<Vec<_>, _>>()?;
        match vals.as_slice() {
            [a, b, c, d] => Ok(Self::new(*a, *b, *c, *d)),
            _ => Err(bad()),
        }
    }
}

/// Outcome alphabet of the strategy space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alphabet {
    /// `{−1, +1, 0}`: 81 strategies.
    #[default]
    Ternary,
    /// `{−1, +1}`: 16 strategies.
    Binary,
}

impl Alphabet {
    pub fn labels(self) -> &'static [OutcomeLabel] {
        match self {
            Alphabet::Ternary => &OutcomeLabel::ALL,
            Alphabet::Binary => &OutcomeLabel::ALL[..2],
        }
    }

    pub fn contains(self, s: &LhvStrategy) -> bool {
        Observable::ALL.iter().all(|&o| self.labels().contains(&s.value(o)))
    }
}

/// Every strategy over the alphabet, lexicographic in `(f_a, g_a, f_b, g_b)`
/// with labels ordered `−1, +1, 0`. The all-`−1` strategy comes first.
pub fn all_strategies(alphabet: Alphabet) -> Vec<LhvStrategy> {
    let labels = alphabet.labels();
    let mut out = Vec::with_capacity(labels.len().pow(4));
    for &f_a in labels {
        for &g_a in labels {
            for &f_b in labels {
                for &g_b in labels {
                    out.push(LhvStrategy::new(f_a, g_a, f_b, g_b));
                }
            }
        }
    }
    out
}

/// A predicate over strategies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    Eq { var: Observable, value: OutcomeLabel },
    Ne { var: Observable, value: OutcomeLabel },
    And { all: Vec<Event> },
    Or { any: Vec<Event> },
}

impl Event {
    pub fn eq(var: Observable, value: OutcomeLabel) -> Self {
        Event::Eq { var, value }
    }

    pub fn ne(var: Observable, value: OutcomeLabel) -> Self {
        Event::Ne { var, value }
    }

    pub fn contains(&self, s: &LhvStrategy) -> bool {
        match self {
            Event::Eq { var, value } => s.value(*var) == *value,
            Event::Ne { var, value } => s.value(*var) != *value,
            Event::And { all } => all.iter().all(|e| e.contains(s)),
            Event::Or { any } => any.iter().any(|e| e.contains(s)),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, es: &[Event], sep: &str, empty: &str| {
            if es.is_empty() {
                return f.write_str(empty);
            }
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                match e {
                    Event::And { .. } | Event::Or { .. } => write!(f, "({e})")?,
                    _ => write!(f, "{e}")?,
                }
            }
            Ok(())
        };
        match self {
            Event::Eq { var, value } => write!(f, "{}={}", var.name(), value.value()),
            Event::Ne { var, value } => write!(f, "{}!={}", var.name(), value.value()),
            Event::And { all } => join(f, all, " and ", "true"),
            Event::Or { any } => join(f, any, " or ", "false"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    EventProbabilityEquals,
    EventProbabilityAtLeast,
}

/// `P(event) = value` or `P(event) ≥ value`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehavioralConstraint {
    pub name: String,
    pub kind: ConstraintKind,
    pub event: Event,
    #[serde(with = "rational_serde")]
    pub value: Rational,
}

impl BehavioralConstraint {
    pub fn equals(name: &str, event: Event, value: Rational) -> Self {
        Self {
            name: name.to_owned(),
            kind: ConstraintKind::EventProbabilityEquals,
            event,
            value,
        }
    }

    pub fn at_least(name: &str, event: Event, value: Rational) -> Self {
        Self {
            name: name.to_owned(),
            kind: ConstraintKind::EventProbabilityAtLeast,
            event,
            value,
        }
    }

    /// An equality pinning the event to probability zero.
    pub fn is_null(&self) -> bool {
        self.kind == ConstraintKind::EventProbabilityEquals && self.value.is_zero()
    }

    /// Demands strictly positive probability.
    pub fn demands_mass(&self) -> bool {
        self.value.is_positive()
    }

    pub fn satisfied_by(&self, mass: &Rational) -> bool {
        match self.kind {
            ConstraintKind::EventProbabilityEquals => *mass == self.value,
            ConstraintKind::EventProbabilityAtLeast => *mass >= self.value,
        }
    }
}

impl fmt::Display for BehavioralConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.kind {
            ConstraintKind::EventProbabilityEquals => "=",
            ConstraintKind::EventProbabilityAtLeast => ">=",
        };
        write!(f, "{}: P({}) {} {}", self.name, self.event, rel, self.value)
    }
}

pub const FF_ZERO: &str = "ff_zero";
pub const AB_CERTAIN: &str = "ab_certain";
pub const BA_CERTAIN: &str = "ba_certain";
pub const HARDY: &str = "hardy";
pub const NO_ZERO: &str = "no_zero";

/// `{g_a = 1 ∧ g_b = 1}`.
pub fn hardy_event() -> Event {
    use Observable::*;
    Event::And {
        all: vec![Event::eq(GA, OutcomeLabel::Plus), Event::eq(GB, OutcomeLabel::Plus)],
    }
}

/// The quantum predictions as constraints, in order: `(F,F)→(1,1)` never
/// happens; `g_b = 1` forces `f_a = 1`; `g_a = 1` forces `f_b = 1`; the
/// Hardy event has probability 9/112; outcome 0 never occurs.
pub fn quantum_constraints() -> Vec<BehavioralConstraint> {
    use Observable::*;
    use OutcomeLabel::{Plus, Zero};
    vec![
        BehavioralConstraint::equals(
            FF_ZERO,
            Event::And {
                all: vec![Event::eq(FA, Plus), Event::eq(FB, Plus)],
            },
            Rational::zero(),
        ),
        BehavioralConstraint::equals(
            AB_CERTAIN,
            Event::And {
                all: vec![Event::eq(GB, Plus), Event::ne(FA, Plus)],
            },
            Rational::zero(),
        ),
        BehavioralConstraint::equals(
            BA_CERTAIN,
            Event::And {
                all: vec![Event::eq(GA, Plus), Event::ne(FB, Plus)],
            },
            Rational::zero(),
        ),
        BehavioralConstraint::equals(HARDY, hardy_event(), Rational::new(9, 112)),
        BehavioralConstraint::equals(
            NO_ZERO,
            Event::Or {
                any: Observable::ALL.iter().map(|&o| Event::eq(o, Zero)).collect(),
            },
            Rational::zero(),
        ),
    ]
}

/// Removes the named constraint. Errors if no constraint has that name.
pub fn drop_constraint(
    constraints: &[BehavioralConstraint],
    name: &str,
) -> Result<Vec<BehavioralConstraint>, LhvError> {
    if !constraints.iter().any(|c| c.name == name) {
        return Err(LhvError::UnknownConstraint(name.to_owned()));
    }
    Ok(constraints.iter().filter(|c| c.name != name).cloned().collect())
}

fn validate(constraints: &[BehavioralConstraint]) -> Result<(), LhvError> {
    for (index, c) in constraints.iter().enumerate() {
        if c.value.is_negative() || c.value > Rational::one() {
            return Err(LhvError::BadConstraint {
                index,
                name: c.name.clone(),
                reason: format!("value {} outside [0, 1]", c.value),
            });
        }
    }
    Ok(())
}

/// Probability of `event` under a distribution.
pub fn event_mass(event: &Event, dist: &BTreeMap<LhvStrategy, Rational>) -> Rational {
    dist.iter().filter(|(s, _)| event.contains(s)).map(|(_, w)| *w).sum()
}

/// Smallest set of null constraints (fewest members, then lowest indices)
/// whose events cover every strategy of `event`.
fn minimal_cover(
    event: &Event,
    nulls: &[usize],
    constraints: &[BehavioralConstraint],
    strategies: &[LhvStrategy],
) -> Option<Vec<usize>> {
    let targets: Vec<&LhvStrategy> = strategies.iter().filter(|s| event.contains(s)).collect();
    let covers = |subset: &[usize]| {
        targets
            .iter()
            .all(|s| subset.iter().any(|&i| constraints[i].event.contains(s)))
    };
    // nulls is short (a handful of constraints), so enumerate subsets by size
    let n = nulls.len();
    if n > 20 {
        return covers(nulls).then(|| nulls.to_vec());
    }
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| (m.count_ones(), m.reverse_bits()));
    masks.into_iter().find_map(|mask| {
        let subset: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).map(|b| nulls[b]).collect();
        covers(&subset).then_some(subset)
    })
}

/// Decides whether some distribution over strategies satisfies every
/// constraint, over the ternary alphabet.
pub fn check_feasibility(constraints: &[BehavioralConstraint]) -> Result<FeasibilityCertificate, LhvError> {
    check_feasibility_over(constraints, Alphabet::Ternary)
}

pub fn check_feasibility_over(
    constraints: &[BehavioralConstraint],
    alphabet: Alphabet,
) -> Result<FeasibilityCertificate, LhvError> {
    validate(constraints)?;
    let strategies = all_strategies(alphabet);

    // 1. point mass
    for s in &strategies {
        let ok = constraints.iter().all(|c| {
            let mass = if c.event.contains(s) {
                Rational::one()
            } else {
                Rational::zero()
            };
            c.satisfied_by(&mass)
        });
        if ok {
            return Ok(FeasibilityCertificate::with_witness(
                constraints.to_vec(),
                alphabet,
                BTreeMap::from([(*s, Rational::one())]),
            ));
        }
    }

    // 2. null-set derivation
    let nulls: Vec<usize> = (0..constraints.len()).filter(|&i| constraints[i].is_null()).collect();
    for (target, c) in constraints.iter().enumerate() {
        if !c.demands_mass() {
            continue;
        }
        if let Some(cover) = minimal_cover(&c.event, &nulls, constraints, &strategies) {
            return Ok(FeasibilityCertificate::refutation(
                constraints.to_vec(),
                alphabet,
                Derivation::null_set(constraints, target, &cover),
            ));
        }
    }

    // 3. exact simplex
    let rows = lp_rows(constraints, &strategies);
    match simplex::solve(strategies.len(), &rows, None) {
        simplex::LpOutcome::Optimal { x, .. } => {
            let dist = strategies
                .iter()
                .zip(x)
                .filter(|(_, w)| !w.is_zero())
                .map(|(s, w)| (*s, w))
                .collect();
            Ok(FeasibilityCertificate::with_witness(
                constraints.to_vec(),
                alphabet,
                dist,
            ))
        }
        simplex::LpOutcome::Infeasible { farkas } => {
            let (normalization, multipliers) = farkas.split_last().expect("normalization row");
            Ok(FeasibilityCertificate::refutation(
                constraints.to_vec(),
                alphabet,
                Derivation::farkas(constraints, multipliers.to_vec(), *normalization),
            ))
        }
        simplex::LpOutcome::Unbounded => unreachable!("feasibility problems have no objective"),
    }
}

/// One row per constraint plus a final normalization row.
fn lp_rows(constraints: &[BehavioralConstraint], strategies: &[LhvStrategy]) -> Vec<simplex::Row> {
    let indicator = |e: &Event| -> Vec<Rational> {
        strategies
            .iter()
            .map(|s| {
                if e.contains(s) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect()
    };
    let mut rows: Vec<simplex::Row> = constraints
        .iter()
        .map(|c| simplex::Row {
            coeffs: indicator(&c.event),
            kind: match c.kind {
                ConstraintKind::EventProbabilityEquals => simplex::RowKind::Eq,
                ConstraintKind::EventProbabilityAtLeast => simplex::RowKind::Ge,
            },
            rhs: c.value,
        })
        .collect();
    rows.push(simplex::Row {
        coeffs: vec![Rational::one(); strategies.len()],
        kind: simplex::RowKind::Eq,
        rhs: Rational::one(),
    });
    rows
}

/// Largest `P(event)` over all distributions satisfying `constraints`, by
/// exact linear programming. `Err(Infeasible)` if the constraints themselves
/// admit no distribution.
pub fn max_event_probability(
    event: &Event,
    constraints: &[BehavioralConstraint],
    alphabet: Alphabet,
) -> Result<Rational, LhvError> {
    validate(constraints)?;
    let strategies = all_strategies(alphabet);
    let rows = lp_rows(constraints, &strategies);
    let objective: Vec<Rational> = strategies
        .iter()
        .map(|s| {
            if event.contains(s) {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .collect();
    match simplex::solve(strategies.len(), &rows, Some(&objective)) {
        simplex::LpOutcome::Optimal { value, .. } => Ok(value),
        simplex::LpOutcome::Infeasible { .. } => Err(LhvError::Infeasible),
        simplex::LpOutcome::Unbounded => unreachable!("probabilities are bounded by 1"),
    }
}

/// Largest Hardy fraction `P(g_a = 1 ∧ g_b = 1)` any hidden-variable model
/// can reach under `other_constraints`.
///
/// When every constraint is a null constraint the answer is read off the
/// strategy space directly: 1 if some strategy outside every null event lies
/// in the Hardy event, else 0. Other constraint sets go through the exact
/// linear program.
pub fn max_hardy_fraction(other_constraints: &[BehavioralConstraint]) -> Result<Rational, LhvError> {
    validate(other_constraints)?;
    let hardy = hardy_event();
    if other_constraints.iter().all(|c| c.is_null()) {
        let reachable = all_strategies(Alphabet::Ternary)
            .iter()
            .filter(|s| other_constraints.iter().all(|c| !c.event.contains(s)))
            .any(|s| hardy.contains(s));
        return Ok(if reachable { Rational::one() } else { Rational::zero() });
    }
    max_event_probability(&hardy, other_constraints, Alphabet::Ternary)
}

/// The quantum constraints without the Hardy constraint.
pub fn hardy_side_constraints() -> Vec<BehavioralConstraint> {
    drop_constraint(&quantum_constraints(), HARDY).expect("hardy constraint present")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero as _;
    use OutcomeLabel::{Minus, Plus, Zero};

    #[test]
    fn strategy_space_sizes() {
        assert_eq!(all_strategies(Alphabet::Ternary).len(), 81);
        assert_eq!(all_strategies(Alphabet::Binary).len(), 16);
        assert_eq!(
            all_strategies(Alphabet::Ternary)[0],
            LhvStrategy::new(Minus, Minus, Minus, Minus)
        );
    }

    #[test]
    fn quantum_constraint_values() {
        let c = quantum_constraints();
        assert_eq!(c.len(), 5);
        assert_eq!(c[3].value, Rational::new(9, 112));
        assert_eq!(c[0].value, Rational::new(0, 1));
        assert_eq!(c[0].name, FF_ZERO);
    }

    #[test]
    fn quantum_constraints_are_infeasible() {
        let cert = check_feasibility(&quantum_constraints()).unwrap();
        assert!(!cert.feasible());
        let steps = cert.derivation().unwrap().steps();
        assert_eq!(steps.len(), 3);
        assert!(verify_certificate(&cert, &quantum_constraints()).unwrap());
    }

    #[test]
    fn binary_alphabet_gives_same_verdict() {
        let cert = check_feasibility_over(&quantum_constraints(), Alphabet::Binary).unwrap();
        assert!(!cert.feasible());
        assert!(verify_certificate(&cert, &quantum_constraints()).unwrap());
    }

    #[test]
    fn zero_hardy_value_is_feasible_with_point_mass() {
        let mut c = quantum_constraints();
        c[3].value = Rational::zero();
        let cert = check_feasibility(&c).unwrap();
        assert!(cert.feasible());
        let w = cert.witness_distribution().unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[&LhvStrategy::new(Minus, Minus, Minus, Minus)], Rational::one());
        assert!(verify_certificate(&cert, &c).unwrap());
    }

    #[test]
    fn half_mixture_is_feasible() {
        let c = vec![BehavioralConstraint::equals(
            "fa_half",
            Event::eq(Observable::FA, Plus),
            Rational::new(1, 2),
        )];
        let cert = check_feasibility(&c).unwrap();
        assert!(cert.feasible());
        let w = cert.witness_distribution().unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(event_mass(&c[0].event, w), Rational::new(1, 2));
        assert!(verify_certificate(&cert, &c).unwrap());
    }

    #[test]
    fn lp_infeasibility_gives_farkas_certificate() {
        let c = vec![
            BehavioralConstraint::equals("fa_plus_half", Event::eq(Observable::FA, Plus), Rational::new(1, 2)),
            BehavioralConstraint::at_least("fa_minus", Event::eq(Observable::FA, Minus), Rational::new(2, 3)),
        ];
        let cert = check_feasibility(&c).unwrap();
        assert!(!cert.feasible());
        assert!(matches!(
            cert.derivation().unwrap().steps().last(),
            Some(Step::Farkas { .. })
        ));
        assert!(verify_certificate(&cert, &c).unwrap());
    }

    #[test]
    fn max_hardy_values() {
        assert_eq!(max_hardy_fraction(&hardy_side_constraints()).unwrap(), Rational::zero());
        let no_ff = drop_constraint(&hardy_side_constraints(), FF_ZERO).unwrap();
        assert_eq!(max_hardy_fraction(&no_ff).unwrap(), Rational::one());
        let only_zero = vec![quantum_constraints().remove(4)];
        assert_eq!(max_hardy_fraction(&only_zero).unwrap(), Rational::one());
        assert!(max_hardy_fraction(&hardy_side_constraints()).unwrap() < Rational::new(9, 112));
    }

    #[test]
    fn set_measure_and_lp_agree_on_max_hardy() {
        let base = hardy_side_constraints();
        let mut sets = vec![base.clone(), vec![]];
        for name in [FF_ZERO, AB_CERTAIN, BA_CERTAIN, NO_ZERO] {
            sets.push(drop_constraint(&base, name).unwrap());
        }
        for set in sets {
            let direct = max_hardy_fraction(&set).unwrap();
            let lp = max_event_probability(&hardy_event(), &set, Alphabet::Ternary).unwrap();
            assert_eq!(direct, lp);
        }
    }

    #[test]
    fn lp_bound_with_positive_constraint() {
        // P(g_a=1) = 1/3 caps the Hardy event at 1/3
        let c = vec![BehavioralConstraint::equals(
            "ga_third",
            Event::eq(Observable::GA, Plus),
            Rational::new(1, 3),
        )];
        assert_eq!(max_hardy_fraction(&c).unwrap(), Rational::new(1, 3));
        let bad = vec![
            BehavioralConstraint::equals("x", Event::eq(Observable::GA, Plus), Rational::new(1, 3)),
            BehavioralConstraint::equals("y", Event::eq(Observable::GA, Plus), Rational::new(1, 2)),
        ];
        assert_eq!(max_hardy_fraction(&bad), Err(LhvError::Infeasible));
    }

    #[test]
    fn constraint_values_are_validated() {
        let c = vec![BehavioralConstraint::equals(
            "big",
            Event::eq(Observable::FA, Zero),
            Rational::new(3, 2),
        )];
        assert!(matches!(check_feasibility(&c), Err(LhvError::BadConstraint { .. })));
    }

    #[test]
    fn unknown_drop_is_an_error() {
        assert!(drop_constraint(&quantum_constraints(), "nope").is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("9/112").unwrap(), Rational::new(9, 112));
        assert_eq!(parse_rational("18/224").unwrap(), Rational::new(9, 112));
        assert_eq!(parse_rational("0").unwrap(), Rational::zero());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/2").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn strategy_keys_round_trip() {
        for s in all_strategies(Alphabet::Ternary) {
            assert_eq!(s.to_string().parse::<LhvStrategy>().unwrap(), s);
        }
        assert!("1,1,1".parse::<LhvStrategy>().is_err());
        assert!("1,1,1,2".parse::<LhvStrategy>().is_err());
    }

    #[test]
    fn event_display() {
        let c = quantum_constraints();
        assert_eq!(c[1].event.to_string(), "g_b=1 and f_a!=1");
        assert_eq!(c[3].to_string(), "hardy: P(g_a=1 and g_b=1) = 9/112");
    }
}
