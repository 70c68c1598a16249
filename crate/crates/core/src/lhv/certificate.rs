//! Feasibility certificates and their independent checker.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{CheckedAdd, CheckedMul, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{
    all_strategies, rational_serde, Alphabet, BehavioralConstraint, ConstraintKind, LhvError, LhvStrategy, Rational,
};

/// One inference step. Indices refer to the certificate's constraint list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    /// With the events of `uses` excluded, every strategy in the event of
    /// `target` lies in the event of `lands_in`.
    Implication {
        uses: Vec<usize>,
        target: usize,
        lands_in: usize,
    },
    /// The union of the events of `uses` has probability zero.
    NullSet { uses: Vec<usize> },
    /// The event of `target` lies inside the null union of `uses`, so its
    /// probability is at most `bound`, yet the constraint demands `required`.
    Contradiction {
        uses: Vec<usize>,
        target: usize,
        #[serde(with = "rational_serde")]
        bound: Rational,
        #[serde(with = "rational_serde")]
        required: Rational,
    },
    /// Multipliers `y` (one per constraint) and `y0` for the normalization
    /// `Σ p = 1` such that `Σ_i y_i [s ∈ E_i] + y0 ≤ 0` for every strategy
    /// while `Σ_i y_i v_i + y0 > 0`.
    Farkas {
        #[serde(with = "rational_vec")]
        multipliers: Vec<Rational>,
        #[serde(with = "rational_serde")]
        normalization: Rational,
    },
}

mod rational_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| r.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| super::super::parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Derivation {
    steps: Vec<Step>,
}

impl Derivation {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Derivation for a target whose event is covered by the null events in
    /// `cover` (ascending indices). The lowest-index cover member is where the
    /// implication lands.
    pub(crate) fn null_set(constraints: &[BehavioralConstraint], target: usize, cover: &[usize]) -> Self {
        let mut steps = Vec::new();
        let landing = cover[0];
        if cover.len() > 1 {
            steps.push(Step::Implication {
                uses: cover[1..].to_vec(),
                target,
                lands_in: landing,
            });
        }
        steps.push(Step::NullSet { uses: cover.to_vec() });
        steps.push(Step::Contradiction {
            uses: cover.to_vec(),
            target,
            bound: Rational::zero(),
            required: constraints[target].value,
        });
        Self { steps }
    }

    pub(crate) fn farkas(
        _constraints: &[BehavioralConstraint],
        multipliers: Vec<Rational>,
        normalization: Rational,
    ) -> Self {
        Self {
            steps: vec![Step::Farkas {
                multipliers,
                normalization,
            }],
        }
    }
}

/// Result of a feasibility check: a witness distribution or a refutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityCertificate {
    constraints: Vec<BehavioralConstraint>,
    alphabet: Alphabet,
    derivation: Option<Derivation>,
    witness: Option<BTreeMap<LhvStrategy, Rational>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    feasible: bool,
    alphabet: Alphabet,
    constraints: Vec<BehavioralConstraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    derivation: Option<Derivation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness: Option<BTreeMap<String, String>>,
}

impl FeasibilityCertificate {
    pub(crate) fn with_witness(
        constraints: Vec<BehavioralConstraint>,
        alphabet: Alphabet,
        dist: BTreeMap<LhvStrategy, Rational>,
    ) -> Self {
        Self {
            constraints,
            alphabet,
            derivation: None,
            witness: Some(dist),
        }
    }

    pub(crate) fn refutation(
        constraints: Vec<BehavioralConstraint>,
        alphabet: Alphabet,
        derivation: Derivation,
    ) -> Self {
        Self {
            constraints,
            alphabet,
            derivation: Some(derivation),
            witness: None,
        }
    }

    /// Builds a certificate from parts without checking it.
    pub fn from_parts(
        constraints: Vec<BehavioralConstraint>,
        alphabet: Alphabet,
        derivation: Option<Derivation>,
        witness: Option<BTreeMap<LhvStrategy, Rational>>,
    ) -> Self {
        Self {
            constraints,
            alphabet,
            derivation,
            witness,
        }
    }

    pub fn feasible(&self) -> bool {
        self.witness.is_some()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn constraints(&self) -> &[BehavioralConstraint] {
        &self.constraints
    }

    pub fn derivation(&self) -> Option<&Derivation> {
        self.derivation.as_ref()
    }

    pub fn witness_distribution(&self) -> Option<&BTreeMap<LhvStrategy, Rational>> {
        self.witness.as_ref()
    }

    pub fn derivation_mut(&mut self) -> Option<&mut Vec<Step>> {
        self.derivation.as_mut().map(|d| &mut d.steps)
    }

    pub fn witness_mut(&mut self) -> Option<&mut BTreeMap<LhvStrategy, Rational>> {
        self.witness.as_mut()
    }

    pub fn to_json(&self) -> String {
        let wire = Wire {
            feasible: self.feasible(),
            alphabet: self.alphabet,
            constraints: self.constraints.clone(),
            derivation: self.derivation.clone(),
            witness: self
                .witness
                .as_ref()
                .map(|w| w.iter().map(|(s, p)| (s.to_string(), p.to_string())).collect()),
        };
        serde_json::to_string_pretty(&wire).expect("certificate serializes")
    }

    /// Parses certificate JSON. Structural problems (a feasible certificate
    /// without a witness, bad rationals, bad strategy keys) are errors; the
    /// logic is left to [`verify_certificate`].
    pub fn from_json(text: &str) -> Result<Self, LhvError> {
        let wire: Wire = serde_json::from_str(text).map_err(|e| LhvError::MalformedCertificate(e.to_string()))?;
        let witness = match wire.witness {
            Some(w) => Some(
                w.iter()
                    .map(|(k, v)| Ok((k.parse::<LhvStrategy>()?, super::parse_rational(v)?)))
                    .collect::<Result<BTreeMap<_, _>, LhvError>>()?,
            ),
            None => None,
        };
        match (wire.feasible, &witness, &wire.derivation) {
            (true, Some(_), None) | (false, None, Some(_)) => {}
            _ => {
                return Err(LhvError::MalformedCertificate(
                    "feasible certificates carry a witness, infeasible ones a derivation".into(),
                ))
            }
        }
        Ok(Self {
            constraints: wire.constraints,
            alphabet: wire.alphabet,
            derivation: wire.derivation,
            witness,
        })
    }

    /// Human-readable account of the certificate.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let name = |i: usize| self.constraints.get(i).map(|c| c.name.as_str()).unwrap_or("?");
        let names = |v: &[usize]| v.iter().map(|&i| name(i)).collect::<Vec<_>>().join(", ");
        let _ = writeln!(out, "constraints:");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(out, "  [{i}] {c}");
        }
        if let Some(w) = &self.witness {
            let _ = writeln!(out, "feasible: a hidden-variable model reproduces every constraint");
            for (s, p) in w {
                let _ = writeln!(out, "  strategy (f_a,g_a,f_b,g_b) = ({s}) with weight {p}");
            }
            return out;
        }
        let _ = writeln!(out, "infeasible: no hidden-variable model reproduces the constraints");
        for (n, step) in self.derivation.iter().flat_map(|d| &d.steps).enumerate() {
            let n = n + 1;
            let line = match step {
                Step::Implication { uses, target, lands_in } => format!(
                    "{n}. every strategy in {} ({}) outside the null events of {} lies in {} ({})",
                    name(*target),
                    self.event_text(*target),
                    names(uses),
                    name(*lands_in),
                    self.event_text(*lands_in),
                ),
                Step::NullSet { uses } => {
                    format!(
                        "{n}. the events of {} all have probability 0, so their union does too",
                        names(uses)
                    )
                }
                Step::Contradiction {
                    target,
                    bound,
                    required,
                    ..
                } => format!(
                    "{n}. so P({}) <= {bound}, but {} requires {required}: contradiction",
                    self.event_text(*target),
                    name(*target),
                ),
                Step::Farkas {
                    multipliers,
                    normalization,
                } => {
                    let terms = multipliers
                        .iter()
                        .enumerate()
                        .filter(|(_, y)| !y.is_zero())
                        .map(|(i, y)| format!("{y}*{}", name(i)))
                        .collect::<Vec<_>>()
                        .join(" + ");
                    format!(
                        "{n}. the combination {terms} with normalization weight {normalization} is nonpositive on every strategy but positive on the constraint values: contradiction"
                    )
                }
            };
            let _ = writeln!(out, "{line}");
        }
        out
    }

    fn event_text(&self, i: usize) -> String {
        self.constraints.get(i).map(|c| c.event.to_string()).unwrap_or_default()
    }
}

fn check_index(i: usize, n: usize) -> Result<(), LhvError> {
    if i < n {
        Ok(())
    } else {
        Err(LhvError::MalformedCertificate(format!(
            "constraint index {i} out of range"
        )))
    }
}

/// Re-checks a certificate against `constraints` by enumerating every
/// strategy with exact arithmetic.
///
/// `Err` means the certificate is structurally malformed (indices out of
/// range, wrong multiplier count, missing parts). `Ok(false)` means it is well
/// formed but does not establish its claim, including when it was issued for a
/// different constraint list.
pub fn verify_certificate(
    cert: &FeasibilityCertificate,
    constraints: &[BehavioralConstraint],
) -> Result<bool, LhvError> {
    if cert.constraints != constraints {
        return Ok(false);
    }
    let strategies = all_strategies(cert.alphabet);
    match (&cert.witness, &cert.derivation) {
        (Some(w), None) => verify_witness(w, constraints, cert.alphabet),
        (None, Some(d)) => verify_derivation(d, constraints, &strategies),
        _ => Err(LhvError::MalformedCertificate(
            "exactly one of witness and derivation must be present".into(),
        )),
    }
}

fn overflow() -> LhvError {
    LhvError::MalformedCertificate("rational arithmetic overflow".into())
}

/// Exact sum that reports overflow instead of panicking; certificates may
/// come from untrusted files.
fn checked_sum<'a>(terms: impl IntoIterator<Item = &'a Rational>) -> Result<Rational, LhvError> {
    terms
        .into_iter()
        .try_fold(Rational::zero(), |acc, t| acc.checked_add(t).ok_or_else(overflow))
}

fn verify_witness(
    w: &BTreeMap<LhvStrategy, Rational>,
    constraints: &[BehavioralConstraint],
    alphabet: Alphabet,
) -> Result<bool, LhvError> {
    if w.is_empty() || w.iter().any(|(s, p)| p.is_negative() || !alphabet.contains(s)) {
        return Ok(false);
    }
    if checked_sum(w.values())? != Rational::one() {
        return Ok(false);
    }
    for c in constraints {
        let mass = checked_sum(w.iter().filter(|(s, _)| c.event.contains(s)).map(|(_, p)| p))?;
        if !c.satisfied_by(&mass) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn verify_derivation(
    d: &Derivation,
    constraints: &[BehavioralConstraint],
    strategies: &[LhvStrategy],
) -> Result<bool, LhvError> {
    let n = constraints.len();
    let in_any = |uses: &[usize], s: &LhvStrategy| uses.iter().any(|&i| constraints[i].event.contains(s));
    let mut null_sets: Vec<Vec<usize>> = Vec::new();
    let mut concluded = false;
    for (k, step) in d.steps.iter().enumerate() {
        let last = k + 1 == d.steps.len();
        match step {
            Step::Implication { uses, target, lands_in } => {
                for &i in uses.iter().chain([target, lands_in]) {
                    check_index(i, n)?;
                }
                if !uses.iter().chain([lands_in]).all(|&i| constraints[i].is_null()) {
                    return Ok(false);
                }
                let holds = strategies
                    .iter()
                    .filter(|s| constraints[*target].event.contains(s) && !in_any(uses, s))
                    .all(|s| constraints[*lands_in].event.contains(s));
                if !holds {
                    return Ok(false);
                }
            }
            Step::NullSet { uses } => {
                for &i in uses {
                    check_index(i, n)?;
                }
                if uses.is_empty() || !uses.iter().all(|&i| constraints[i].is_null()) {
                    return Ok(false);
                }
                null_sets.push(uses.clone());
            }
            Step::Contradiction {
                uses,
                target,
                bound,
                required,
            } => {
                for &i in uses.iter().chain([target]) {
                    check_index(i, n)?;
                }
                let c = &constraints[*target];
                let established = null_sets.iter().any(|ns| ns == uses);
                let covered = strategies
                    .iter()
                    .filter(|s| c.event.contains(s))
                    .all(|s| in_any(uses, s));
                let demanded = match c.kind {
                    ConstraintKind::EventProbabilityEquals | ConstraintKind::EventProbabilityAtLeast => c.value,
                };
                if !established || !covered || !bound.is_zero() || *required != demanded || required <= bound {
                    return Ok(false);
                }
                if !last {
                    return Ok(false);
                }
                concluded = true;
            }
            Step::Farkas {
                multipliers,
                normalization,
            } => {
                if multipliers.len() != n {
                    return Err(LhvError::MalformedCertificate(format!(
                        "{} multipliers for {n} constraints",
                        multipliers.len()
                    )));
                }
                let signs_ok = constraints
                    .iter()
                    .zip(multipliers)
                    .all(|(c, y)| c.kind == ConstraintKind::EventProbabilityEquals || !y.is_negative());
                let mut column_ok = true;
                for s in strategies {
                    let col = checked_sum(
                        constraints
                            .iter()
                            .zip(multipliers)
                            .filter(|(c, _)| c.event.contains(s))
                            .map(|(_, y)| y),
                    )?;
                    column_ok &= !col.checked_add(normalization).ok_or_else(overflow)?.is_positive();
                }
                let products = constraints
                    .iter()
                    .zip(multipliers)
                    .map(|(c, y)| c.value.checked_mul(y).ok_or_else(overflow))
                    .collect::<Result<Vec<_>, _>>()?;
                let rhs = checked_sum(&products)?
                    .checked_add(normalization)
                    .ok_or_else(overflow)?;
                if !signs_ok || !column_ok || !rhs.is_positive() || !last {
                    return Ok(false);
                }
                concluded = true;
            }
        }
    }
    Ok(concluded)
}
