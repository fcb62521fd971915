//! Discrepancies and singularity classes of SNC pairs.
//!
//! For an SNC pair with coefficients at most one, the smallest discrepancy of
//! a divisor over a point is attained by the single blow-up of that point:
//! `1` at a point on no component, `1 - a_i` at a point of one component and
//! `1 - a_i - a_j` at a crossing. [`brute_force_min_discrepancy`] checks this
//! by enumerating blow-up sequences and never consults the closed forms.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::divisor::{DivisorId, LogDivisor};
use crate::error::{Error, Result};
use crate::model::{BlowUpSpec, LogPair};
use crate::morphism::{blow_up, ModelMorphism};
use crate::rational::{denominator_lcm, Rational};

/// Hard cap on the depth of the enumeration oracle.
pub const MAX_ORACLE_DEPTH: usize = 6;

/// Default depth of the enumeration oracle.
pub const DEFAULT_ORACLE_DEPTH: usize = 4;

/// Convention used for ε-klt, recorded in every report.
pub const EPSILON_KLT_CONVENTION: &str =
    "epsilon-klt: every exceptional discrepancy > -1+epsilon and every boundary coefficient <= 1-epsilon";

/// A discrepancy value; `NegInfinity` marks pairs that are not log canonical.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Discrepancy {
    Finite(Rational),
    #[serde(with = "neg_infinity")]
    NegInfinity,
}

mod neg_infinity {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("-inf")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "-inf" {
            Ok(())
        } else {
            Err(serde::de::Error::custom("expected \"-inf\""))
        }
    }
}

impl Discrepancy {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Discrepancy::Finite(r) => Some(r),
            Discrepancy::NegInfinity => None,
        }
    }
}

impl Ord for Discrepancy {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Discrepancy::NegInfinity, Discrepancy::NegInfinity) => Ordering::Equal,
            (Discrepancy::NegInfinity, _) => Ordering::Less,
            (_, Discrepancy::NegInfinity) => Ordering::Greater,
            (Discrepancy::Finite(a), Discrepancy::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Discrepancy {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Discrepancy::Finite(r) => write!(f, "{r}"),
            Discrepancy::NegInfinity => write!(f, "-inf"),
        }
    }
}

/// Where a discrepancy is realised.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Location {
    /// A point on no tracked divisor.
    GeneralPoint,
    /// A point of one component and of no other tracked divisor.
    FreePoint { divisor: String },
    /// A crossing of two tracked divisors.
    Crossing { first: String, second: String },
    /// The boundary component itself (discrepancy `-a_i`).
    Component { divisor: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub location: Location,
    pub discrepancy: Discrepancy,
    /// The blow-up that realises the value, when the location is exceptional.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realised_by: Option<BlowUpSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularityClass {
    Terminal,
    Canonical,
    KltNotCanonical,
    LcNotKlt,
    NotLc,
}

impl SingularityClass {
    pub fn is_terminal(self) -> bool {
        self == SingularityClass::Terminal
    }

    pub fn is_klt(self) -> bool {
        matches!(
            self,
            SingularityClass::Terminal | SingularityClass::Canonical | SingularityClass::KltNotCanonical
        )
    }

    pub fn is_lc(self) -> bool {
        self != SingularityClass::NotLc
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub classification: SingularityClass,
    pub min_exceptional_discrepancy: Discrepancy,
    /// Supremum of the ε for which the pair is ε-klt; `None` when not klt.
    pub epsilon_klt_threshold: Option<Rational>,
    /// Whether the supremum itself is attained.
    pub epsilon_klt_threshold_attained: bool,
    pub witnesses: Vec<Witness>,
    pub convention: String,
}

impl SingularityReport {
    /// Check ε-klt directly against both clauses of the convention.
    pub fn is_epsilon_klt(&self, epsilon: &Rational) -> bool {
        match &self.epsilon_klt_threshold {
            None => false,
            Some(t) => epsilon < t || (epsilon == t && self.epsilon_klt_threshold_attained),
        }
    }
}

fn require_snc(pair: &LogPair) -> Result<()> {
    if pair.model().is_smooth() {
        Ok(())
    } else {
        Err(Error::domain(
            "pair is not flagged SNC (singular model); closed-form discrepancies need a log smooth pair",
        ))
    }
}

/// Every exceptional location of an SNC pair with its closed-form discrepancy,
/// in a fixed order: general point, free points, crossings.
fn exceptional_witnesses(pair: &LogPair) -> Vec<Witness> {
    let model = pair.model();
    let one = Rational::one();
    let mut out = vec![Witness {
        location: Location::GeneralPoint,
        discrepancy: Discrepancy::Finite(one.clone()),
        realised_by: Some(BlowUpSpec::GeneralPoint),
    }];
    for &i in model.ids() {
        let a = pair.coefficient(i);
        let value = if a > one {
            Discrepancy::NegInfinity
        } else {
            Discrepancy::Finite(&one - &a)
        };
        out.push(Witness {
            location: Location::FreePoint {
                divisor: model.label(i).to_string(),
            },
            discrepancy: value,
            realised_by: Some(BlowUpSpec::FreePoint { i }),
        });
    }
    for (i, j) in model.intersecting_pairs() {
        let (a, b) = (pair.coefficient(i), pair.coefficient(j));
        let value = if a > one || b > one {
            Discrepancy::NegInfinity
        } else {
            Discrepancy::Finite(&one - &a - &b)
        };
        out.push(Witness {
            location: Location::Crossing {
                first: model.label(i).to_string(),
                second: model.label(j).to_string(),
            },
            discrepancy: value,
            realised_by: Some(BlowUpSpec::IntersectionPoint { i, j }),
        });
    }
    out
}

/// Minimal discrepancy over all exceptional divisors of an SNC pair, with the
/// location that realises it.
pub fn min_discrepancy_snc(pair: &LogPair) -> Result<(Discrepancy, Witness)> {
    require_snc(pair)?;
    let witnesses = exceptional_witnesses(pair);
    let best = witnesses
        .into_iter()
        .min_by(|a, b| a.discrepancy.cmp(&b.discrepancy))
        .expect("general point is always present");
    Ok((best.discrepancy.clone(), best))
}

/// Singularity class, ε-klt threshold and witnesses of an SNC pair.
pub fn classify(pair: &LogPair) -> Result<SingularityReport> {
    let (min_exc, _) = min_discrepancy_snc(pair)?;
    let one = Rational::one();
    let model = pair.model();
    let max_coeff = pair.boundary().max_coeff().cloned();

    let classification = match (&max_coeff, &min_exc) {
        (Some(m), _) if *m > one => SingularityClass::NotLc,
        (Some(m), _) if *m == one => SingularityClass::LcNotKlt,
        (_, Discrepancy::Finite(d)) if d.is_positive() => SingularityClass::Terminal,
        (_, Discrepancy::Finite(d)) if d.is_zero() => SingularityClass::Canonical,
        (_, Discrepancy::Finite(_)) => SingularityClass::KltNotCanonical,
        (_, Discrepancy::NegInfinity) => SingularityClass::NotLc,
    };

    // ε is bounded by 1 - a_i on every prime divisor (including the untracked
    // ones, coefficient 0) and, strictly, by 1 + (minimal exceptional discrepancy).
    let (threshold, attained) = if classification.is_klt() {
        let coeff_bound = pair
            .boundary()
            .iter()
            .map(|(_, a)| &one - a)
            .fold(one.clone(), Rational::min);
        let disc_bound = &one + min_exc.finite().expect("klt pairs have finite discrepancies");
        if coeff_bound < disc_bound {
            (Some(coeff_bound), true)
        } else {
            (Some(disc_bound), false)
        }
    } else {
        (None, false)
    };

    let mut witnesses: Vec<Witness> = exceptional_witnesses(pair)
        .into_iter()
        .filter(|w| match &w.location {
            Location::GeneralPoint => true,
            Location::FreePoint { divisor } => {
                !pair.coefficient(model.id_of_label(divisor).expect("own label")).is_zero()
            }
            Location::Crossing { first, second } => [first, second]
                .iter()
                .any(|l| !pair.coefficient(model.id_of_label(l).expect("own label")).is_zero()),
            Location::Component { .. } => true,
        })
        .collect();
    witnesses.extend(pair.boundary().iter().map(|(id, a)| Witness {
        location: Location::Component {
            divisor: model.label(id).to_string(),
        },
        discrepancy: Discrepancy::Finite(-a),
        realised_by: None,
    }));

    Ok(SingularityReport {
        classification,
        min_exceptional_discrepancy: min_exc,
        epsilon_klt_threshold: threshold,
        epsilon_klt_threshold_attained: attained,
        witnesses,
        convention: EPSILON_KLT_CONVENTION.to_string(),
    })
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(Error::domain("oracle depth must be at least 1"));
    }
    if depth > MAX_ORACLE_DEPTH {
        return Err(Error::Resource(format!(
            "oracle depth {depth} exceeds the maximum {MAX_ORACLE_DEPTH}"
        )));
    }
    Ok(())
}

/// Minimal exceptional discrepancy found by blowing up, up to `depth` times.
///
/// Every divisor over a smooth surface is reached by a chain of point
/// blow-ups whose centres lie on the previous exceptional curve, and blow-ups
/// away from that chain do not change its discrepancy. The search therefore
/// follows chains: any centre on the first step, then every centre on the
/// newest exceptional curve. Crepant coefficients are tracked through
/// [`blow_up`] with sub-boundaries allowed.
pub fn brute_force_min_discrepancy(pair: &LogPair, depth: usize) -> Result<Rational> {
    check_depth(depth)?;
    require_snc(pair)?;
    let mut best: Option<Rational> = None;
    descend_chains(pair, None, depth, &mut best)?;
    Ok(best.expect("at least one blow-up is always available"))
}

fn descend_chains(
    pair: &LogPair,
    last: Option<DivisorId>,
    remaining: usize,
    best: &mut Option<Rational>,
) -> Result<()> {
    let centres = match last {
        None => BlowUpSpec::enumerate(pair.model()),
        Some(e) => {
            let model = pair.model();
            let mut c = vec![BlowUpSpec::FreePoint { i: e }];
            for &d in model.ids() {
                if d != e && *model.pairing(d, e) >= Rational::one() {
                    let (i, j) = if d < e { (d, e) } else { (e, d) };
                    c.push(BlowUpSpec::IntersectionPoint { i, j });
                }
            }
            c
        }
    };
    for spec in centres {
        let (up, f) = blow_up(pair, &spec)?;
        let e = f.steps()[0].new_divisor();
        let disc = -up.coefficient(e);
        if best.as_ref().is_none_or(|b| disc < *b) {
            *best = Some(disc);
        }
        if remaining > 1 {
            descend_chains(&up, Some(e), remaining - 1, best)?;
        }
    }
    Ok(())
}

/// Like [`brute_force_min_discrepancy`] but over every blow-up sequence of
/// length at most `depth`, with no chain restriction. Exponential; meant for
/// small depths when validating the chain search itself.
pub fn exhaustive_min_discrepancy(pair: &LogPair, depth: usize) -> Result<Rational> {
    check_depth(depth)?;
    require_snc(pair)?;
    fn go(pair: &LogPair, remaining: usize, best: &mut Option<Rational>) -> Result<()> {
        for spec in BlowUpSpec::enumerate(pair.model()) {
            let (up, f) = blow_up(pair, &spec)?;
            let disc = -up.coefficient(f.steps()[0].new_divisor());
            if best.as_ref().is_none_or(|b| disc < *b) {
                *best = Some(disc);
            }
            if remaining > 1 {
                go(&up, remaining - 1, best)?;
            }
        }
        Ok(())
    }
    let mut best = None;
    go(pair, depth, &mut best)?;
    Ok(best.expect("at least one blow-up is always available"))
}

/// Smallest `N > 0` such that `N·D` and `N·f*D` have integer coefficients,
/// where `D` lives on the target of `contracted`.
pub fn cartier_index(d: &LogDivisor, contracted: &ModelMorphism) -> Result<u64> {
    if let Some(id) = d.divisor.support().find(|id| !contracted.target().contains(*id)) {
        return Err(Error::domain(format!("divisor component {id} is not on the contracted model")));
    }
    let pulled = contracted.pullback_log(d);
    let values = std::iter::once(&d.canonical)
        .chain(d.divisor.iter().map(|(_, c)| c))
        .chain(std::iter::once(&pulled.canonical))
        .chain(pulled.divisor.iter().map(|(_, c)| c));
    let lcm: BigInt = denominator_lcm(values);
    lcm.to_u64()
        .ok_or_else(|| Error::Resource(format!("Cartier index {lcm} does not fit in u64")))
}
