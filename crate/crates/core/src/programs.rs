//! Birational programs on tracked configurations: terminalization by
//! crossing blow-ups, a numerical MMP, the projection-formula check and the
//! greedy redundant part of a boundary.

use serde::{Deserialize, Serialize};

use crate::bigness::{BignessCertificate, BignessOracle};
use crate::divisor::{floor_divisor, DivisorId, LogDivisor, QDivisor};
use crate::error::{Error, Result};
use crate::model::{BlowUpSpec, LogPair};
use crate::morphism::{blow_up, contract, ModelMorphism};
use crate::rational::Rational;
use crate::singularity::classify;

pub const MAX_TERMINALIZATION_STEPS: usize = 4096;

/// Which offending crossing to blow up first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingOrder {
    #[default]
    Ascending,
    Descending,
}

fn offending_crossings(pair: &LogPair) -> Vec<(DivisorId, DivisorId)> {
    let one = Rational::one();
    pair.model()
        .intersecting_pairs()
        .into_iter()
        .filter(|&(i, j)| {
            let (a, b) = (pair.coefficient(i), pair.coefficient(j));
            a.is_positive() && b.is_positive() && a + b >= one
        })
        .collect()
}

/// Crepant terminal model of a klt SNC pair, obtained by blowing up crossings
/// `D_i ∩ D_j` with `a_i + a_j ≥ 1` until none are left.
///
/// Returns the terminal pair `(Y, Δ_Y)` with `K_Y + Δ_Y = f*(K_X + Δ)` and the
/// morphism `f: Y → X`.
pub fn terminalize(pair: &LogPair) -> Result<(LogPair, ModelMorphism)> {
    terminalize_with_order(pair, CrossingOrder::Ascending)
}

pub fn terminalize_with_order(pair: &LogPair, order: CrossingOrder) -> Result<(LogPair, ModelMorphism)> {
    pair.ensure_boundary()?;
    let report = classify(pair)?;
    if !report.classification.is_klt() {
        return Err(Error::domain(format!(
            "terminalization needs a klt pair, got {:?}",
            report.classification
        )));
    }
    let mut current = pair.clone();
    let mut morphism = ModelMorphism::identity(pair.model());
    for _ in 0..MAX_TERMINALIZATION_STEPS {
        let crossings = offending_crossings(&current);
        let chosen = match order {
            CrossingOrder::Ascending => crossings.first(),
            CrossingOrder::Descending => crossings.last(),
        };
        let Some(&(i, j)) = chosen else {
            let check = classify(&current)?;
            if !check.classification.is_terminal() {
                return Err(Error::domain("terminalization ended on a non-terminal pair"));
            }
            return Ok((current, morphism));
        };
        let (up, f) = blow_up(&current, &BlowUpSpec::IntersectionPoint { i, j })?;
        morphism = f.then(morphism)?;
        current = up;
    }
    Err(Error::Resource(format!(
        "terminalization exceeded {MAX_TERMINALIZATION_STEPS} blow-ups"
    )))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmpStep {
    pub curve: DivisorId,
    pub label: String,
    /// `(K + Δ) · C` on the model where `C` was contracted.
    pub log_degree: Rational,
    pub self_intersection: Rational,
    /// Discrepancy of `C` over the pair right after its contraction.
    pub discrepancy: Rational,
    /// Discrepancy of `C` over the final pair of the run.
    pub final_discrepancy: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MmpOutcome {
    /// `K + Δ` is nef on every tracked curve.
    Minimal,
    /// A tracked curve with `(K + Δ) · C < 0` that cannot be contracted.
    NonNefResidual { curve: String, log_degree: Rational },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MmpTrace {
    pub initial: LogPair,
    pub steps: Vec<MmpStep>,
    pub final_pair: LogPair,
    /// `initial → final`.
    pub morphism: ModelMorphism,
    pub outcome: MmpOutcome,
}

impl MmpTrace {
    pub fn contracted(&self) -> Vec<DivisorId> {
        self.steps.iter().map(|s| s.curve).collect()
    }
}

/// Contract `(K + Δ)`-negative curves of negative self-intersection until none
/// remain. The most negative log degree goes first, ties by smallest id.
pub fn run_mmp(pair: &LogPair) -> Result<MmpTrace> {
    pair.ensure_boundary()?;
    let mut current = pair.clone();
    let mut morphism = ModelMorphism::identity(pair.model());
    let mut steps = Vec::new();
    loop {
        let model = current.model();
        let candidate = model
            .ids()
            .iter()
            .filter(|&&c| model.pairing(c, c).is_negative())
            .map(|&c| (current.log_degree(c), c))
            .filter(|(d, _)| d.is_negative())
            .min();
        let Some((log_degree, curve)) = candidate else {
            break;
        };
        let self_intersection = model.pairing(curve, curve).clone();
        let label = model.label(curve).to_string();
        let (lower, f) = contract(&current, curve)?;
        steps.push(MmpStep {
            curve,
            label,
            log_degree,
            self_intersection,
            discrepancy: f.steps()[0].discrepancy(),
            final_discrepancy: Rational::zero(),
        });
        morphism = morphism.then(f)?;
        current = lower;
    }

    let pulled = morphism.pullback_log(&current.log_canonical());
    for step in &mut steps {
        step.final_discrepancy = -pulled.divisor.coeff(step.curve);
    }

    let residual = current
        .model()
        .ids()
        .iter()
        .map(|&c| (current.log_degree(c), c))
        .filter(|(d, _)| d.is_negative())
        .min();
    let outcome = match residual {
        None => MmpOutcome::Minimal,
        Some((log_degree, c)) => MmpOutcome::NonNefResidual {
            curve: current.model().label(c).to_string(),
            log_degree,
        },
    };
    Ok(MmpTrace {
        initial: pair.clone(),
        steps,
        final_pair: current,
        morphism,
        outcome,
    })
}

/// Number of contracted curves with negative discrepancy over the final pair.
pub fn count_negative_discrepancy(trace: &MmpTrace) -> usize {
    trace
        .steps
        .iter()
        .filter(|s| s.final_discrepancy.is_negative())
        .count()
}

/// Whether `f_*(⌊m f*D⌋ + E) = ⌊m D⌋` for `f: Y → X`, `D` on `X` and an
/// effective `f`-exceptional `E`.
pub fn check_projection_formula(f: &ModelMorphism, d: &QDivisor, m: u64, e: &QDivisor) -> Result<bool> {
    if m == 0 {
        return Err(Error::domain("multiplier must be positive"));
    }
    if !e.is_effective() {
        return Err(Error::domain("E must be effective"));
    }
    if let Some(id) = e.support().find(|&id| !f.is_exceptional(id)) {
        return Err(Error::domain(format!("E has a non-exceptional component {id}")));
    }
    if let Some(id) = d.support().find(|&id| !f.target().contains(id)) {
        return Err(Error::domain(format!("D has an untracked component {id}")));
    }
    let m = Rational::from_bigint(m.into());
    let upstairs = &floor_divisor(&f.pullback(d).scale(&m)) + e;
    Ok(f.pushforward(&upstairs) == floor_divisor(&d.scale(&m)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyDecision {
    pub divisor: DivisorId,
    pub coefficient: Rational,
    pub removed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RedundantPart {
    /// The removed part `R ≤ Δ`.
    pub removed: QDivisor,
    /// `Δ - R`.
    pub remaining: QDivisor,
    /// Certificate that `K + Δ - R` is big.
    pub certificate: BignessCertificate,
    pub decisions: Vec<RedundancyDecision>,
}

/// Greedily drop whole boundary components, largest id first, as long as the
/// oracle still certifies `K + (remaining)` as big.
pub fn redundant_part(pair: &LogPair, oracle: &dyn BignessOracle) -> Result<RedundantPart> {
    let model = pair.model();
    let mut certificate = oracle
        .certify(model, &pair.log_canonical())
        .ok_or_else(|| Error::domain("K + Δ is not certified big"))?;
    let mut remaining = pair.boundary().clone();
    let mut decisions = Vec::new();
    let components: Vec<(DivisorId, Rational)> =
        pair.boundary().iter().map(|(id, c)| (id, c.clone())).collect();
    for (id, coefficient) in components.into_iter().rev() {
        let candidate = remaining.without(id);
        let cert = oracle.certify(model, &LogDivisor::log_canonical(&candidate));
        let removed = cert.is_some();
        if let Some(c) = cert {
            certificate = c;
            remaining = candidate;
        }
        decisions.push(RedundancyDecision {
            divisor: id,
            coefficient,
            removed,
        });
    }
    Ok(RedundantPart {
        removed: pair.boundary() - &remaining,
        remaining,
        certificate,
        decisions,
    })
}
