//! Point blow-ups, numerical (Mumford) contractions and the birational
//! morphisms they generate.
//!
//! A [`ModelMorphism`] `f: source → target` is stored as the list of
//! elementary extractions that rebuild `source` from `target`: either a point
//! blow-up or the re-insertion of a curve that a contraction removed. Every
//! step also records the crepant coefficient the new divisor received, i.e.
//! minus its discrepancy over the boundary that was current at that step.

use serde::{Deserialize, Serialize};

use crate::divisor::{DivisorId, LogDivisor, QDivisor};
use crate::error::{Error, Result};
use crate::model::{BlowUpSpec, LogPair, SurfaceModel};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum Step {
    BlowUp {
        spec: BlowUpSpec,
        exceptional: DivisorId,
        label: String,
        crepant_coefficient: Rational,
    },
    /// Inverse of a numerical contraction of `curve`.
    Extract {
        curve: DivisorId,
        label: String,
        self_intersection: Rational,
        canonical_degree: Rational,
        /// Nonzero intersection numbers of the curve with the other divisors.
        meets: Vec<(DivisorId, Rational)>,
        smooth_before: bool,
        crepant_coefficient: Rational,
    },
}

impl Step {
    /// The divisor that appears when the step is replayed upwards.
    pub fn new_divisor(&self) -> DivisorId {
        match self {
            Step::BlowUp { exceptional, .. } => *exceptional,
            Step::Extract { curve, .. } => *curve,
        }
    }

    pub fn crepant_coefficient(&self) -> &Rational {
        match self {
            Step::BlowUp { crepant_coefficient, .. } | Step::Extract { crepant_coefficient, .. } => {
                crepant_coefficient
            }
        }
    }

    /// Discrepancy of the new divisor over the lower model.
    pub fn discrepancy(&self) -> Rational {
        -self.crepant_coefficient()
    }

    /// Apply the step to the lower model.
    pub fn replay_up(&self, lower: &SurfaceModel) -> Result<SurfaceModel> {
        match self {
            Step::BlowUp {
                spec,
                exceptional,
                label,
                ..
            } => {
                spec.validate(lower)?;
                if lower.contains(*exceptional) {
                    return Err(Error::domain(format!("exceptional id {exceptional} already in use")));
                }
                Ok(blow_up_model(lower, spec, *exceptional, label.clone()))
            }
            Step::Extract { curve, .. } => {
                if lower.contains(*curve) {
                    return Err(Error::domain(format!("curve id {curve} already in use")));
                }
                extract_model(lower, self)
            }
        }
    }
}

fn insert_divisor(
    model: &SurfaceModel,
    id: DivisorId,
    label: String,
    pairings: &[Rational],
    self_intersection: Rational,
    canonical_degree: Rational,
) -> SurfaceModel {
    let mut out = model.clone();
    let pos = model.ids().partition_point(|&d| d < id);
    let (ids, labels, form, canonical, _) = out.raw_parts_mut();
    ids.insert(pos, id);
    labels.insert(pos, label);
    canonical.insert(pos, canonical_degree);
    for (row, p) in form.iter_mut().zip(pairings) {
        row.insert(pos, p.clone());
    }
    let mut new_row = pairings.to_vec();
    new_row.insert(pos, self_intersection);
    form.insert(pos, new_row);
    out
}

fn remove_divisor(model: &SurfaceModel, pos: usize) -> SurfaceModel {
    let mut out = model.clone();
    let (ids, labels, form, canonical, _) = out.raw_parts_mut();
    ids.remove(pos);
    labels.remove(pos);
    canonical.remove(pos);
    form.remove(pos);
    for row in form.iter_mut() {
        row.remove(pos);
    }
    out
}

/// Blow up a point: `E² = -1`, `K·E = -1`, and for each divisor through the
/// centre with multiplicity `m`, `D̃ = f*D - mE`.
fn blow_up_model(model: &SurfaceModel, spec: &BlowUpSpec, exceptional: DivisorId, label: String) -> SurfaceModel {
    let mults = spec.multiplicities();
    let mut out = model.clone();
    {
        let idx: Vec<(usize, Rational)> = mults
            .iter()
            .map(|&(d, m)| (model.index_of(d).expect("validated centre"), Rational::integer(m)))
            .collect();
        let (_, _, form, canonical, _) = out.raw_parts_mut();
        for (a, ma) in &idx {
            for (b, mb) in &idx {
                form[*a][*b] -= &(ma * mb);
            }
            canonical[*a] += ma;
        }
    }
    let pairings: Vec<Rational> = model
        .ids()
        .iter()
        .map(|&d| {
            mults
                .iter()
                .find(|&&(c, _)| c == d)
                .map_or_else(Rational::zero, |&(_, m)| Rational::integer(m))
        })
        .collect();
    insert_divisor(&out, exceptional, label, &pairings, Rational::integer(-1), Rational::integer(-1))
}

/// Data describing how a contracted curve sat in the model, as stored in
/// [`Step::Extract`].
struct Contraction {
    lower: SurfaceModel,
    self_intersection: Rational,
    canonical_degree: Rational,
    meets: Vec<(DivisorId, Rational)>,
    smooth_before: bool,
    label: String,
}

fn contract_model(model: &SurfaceModel, curve: DivisorId) -> Result<Contraction> {
    let c = model
        .index_of(curve)
        .ok_or_else(|| Error::domain(format!("{curve} is not a tracked divisor")))?;
    let rows = model.form_rows();
    let c2 = rows[c][c].clone();
    if !c2.is_negative() {
        return Err(Error::domain(format!(
            "only negative curves contract numerically: {} has self-intersection {c2}",
            model.label(curve)
        )));
    }
    let kc = model.canonical_vector()[c].clone();
    let meets: Vec<(DivisorId, Rational)> = model
        .ids()
        .iter()
        .enumerate()
        .filter(|&(a, _)| a != c && !rows[a][c].is_zero())
        .map(|(a, &id)| (id, rows[a][c].clone()))
        .collect();

    let mut lower = model.clone();
    {
        let canon = model.canonical_vector();
        let (_, _, form, canonical, smooth) = lower.raw_parts_mut();
        let n = rows.len();
        for a in 0..n {
            if rows[a][c].is_zero() {
                continue;
            }
            let ratio = &rows[a][c] / &c2;
            for b in 0..n {
                if !rows[b][c].is_zero() {
                    form[a][b] -= &(&ratio * &rows[b][c]);
                }
            }
            canonical[a] = &canon[a] - &(&ratio * &kc);
        }
        *smooth = model.is_smooth()
            && c2 == -1
            && kc == -1
            && meets.len() <= 2
            && meets.iter().all(|(_, m)| *m == 1);
    }
    let lower = remove_divisor(&lower, c);
    Ok(Contraction {
        lower,
        self_intersection: c2,
        canonical_degree: kc,
        meets,
        smooth_before: model.is_smooth(),
        label: model.label(curve).to_string(),
    })
}

fn extract_model(lower: &SurfaceModel, step: &Step) -> Result<SurfaceModel> {
    let Step::Extract {
        curve,
        label,
        self_intersection,
        canonical_degree,
        meets,
        smooth_before,
        ..
    } = step
    else {
        unreachable!("extract_model called on a blow-up step");
    };
    if !self_intersection.is_negative() {
        return Err(Error::domain(format!(
            "re-inserted curve {label} must have negative self-intersection"
        )));
    }
    let n = lower.len();
    let mut meet_vec = vec![Rational::zero(); n];
    for (id, m) in meets {
        let a = lower
            .index_of(*id)
            .ok_or_else(|| Error::domain(format!("{label} meets untracked divisor {id}")))?;
        meet_vec[a] = m.clone();
    }
    let mut upper = lower.clone();
    {
        let (_, _, form, canonical, smooth) = upper.raw_parts_mut();
        for a in 0..n {
            if meet_vec[a].is_zero() {
                continue;
            }
            let ratio = &meet_vec[a] / self_intersection;
            for b in 0..n {
                if !meet_vec[b].is_zero() {
                    form[a][b] += &(&ratio * &meet_vec[b]);
                }
            }
            canonical[a] += &(&ratio * canonical_degree);
        }
        *smooth = *smooth_before;
    }
    Ok(insert_divisor(
        &upper,
        *curve,
        label.clone(),
        &meet_vec,
        self_intersection.clone(),
        canonical_degree.clone(),
    ))
}

/// A birational morphism `source → target` between models, recorded as the
/// extractions that rebuild `source` from `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelMorphism {
    source: SurfaceModel,
    target: SurfaceModel,
    steps: Vec<Step>,
}

impl ModelMorphism {
    pub fn identity(model: &SurfaceModel) -> Self {
        ModelMorphism {
            source: model.clone(),
            target: model.clone(),
            steps: Vec::new(),
        }
    }

    /// Rebuild a morphism from its lower model and step list.
    pub fn from_steps(target: SurfaceModel, steps: Vec<Step>) -> Result<Self> {
        let mut source = target.clone();
        for step in &steps {
            source = step.replay_up(&source)?;
        }
        Ok(ModelMorphism { source, target, steps })
    }

    pub fn source(&self) -> &SurfaceModel {
        &self.source
    }

    pub fn target(&self) -> &SurfaceModel {
        &self.target
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    /// `next ∘ self`, where `self: A → B` and `next: B → C`.
    pub fn then(self, next: ModelMorphism) -> Result<ModelMorphism> {
        if self.target != next.source {
            return Err(Error::domain("cannot compose morphisms: models do not match"));
        }
        let mut steps = next.steps;
        steps.extend(self.steps);
        Ok(ModelMorphism {
            source: self.source,
            target: next.target,
            steps,
        })
    }

    /// Divisors of the source that are contracted by the morphism.
    pub fn exceptional_ids(&self) -> Vec<DivisorId> {
        self.steps.iter().map(Step::new_divisor).collect()
    }

    pub fn is_exceptional(&self, id: DivisorId) -> bool {
        self.source.contains(id) && !self.target.contains(id)
    }

    /// Replay the steps upwards from the target.
    pub fn replay_up(&self) -> Result<SurfaceModel> {
        let mut m = self.target.clone();
        for step in &self.steps {
            m = step.replay_up(&m)?;
        }
        Ok(m)
    }

    /// Undo the steps from the source by contracting each new divisor in turn.
    pub fn replay_down(&self) -> Result<SurfaceModel> {
        let mut m = self.source.clone();
        for step in self.steps.iter().rev() {
            m = contract_model(&m, step.new_divisor())?.lower;
        }
        Ok(m)
    }

    /// Numerical pullback of `cK + D` from the target to the source.
    ///
    /// Blow-ups use `f*K = K_Y - E` and `f*D = D̃ + mE`; re-inserted curves get
    /// the unique coefficient making the class orthogonal to them.
    pub fn pullback_log(&self, d: &LogDivisor) -> LogDivisor {
        let mut model = self.target.clone();
        let mut out = d.clone();
        for step in &self.steps {
            let upper = step.replay_up(&model).expect("morphism steps replay from their target");
            match step {
                Step::BlowUp { spec, exceptional, .. } => {
                    let coeff: Rational = spec
                        .multiplicities()
                        .iter()
                        .map(|&(id, m)| out.divisor.coeff(id) * Rational::integer(m))
                        .sum::<Rational>()
                        - &out.canonical;
                    out.divisor.set(*exceptional, coeff);
                }
                Step::Extract {
                    curve,
                    self_intersection,
                    ..
                } => {
                    let deg = upper.degree_on(&out, *curve);
                    out.divisor.set(*curve, -deg / self_intersection.clone());
                }
            }
            model = upper;
        }
        out
    }

    pub fn pullback(&self, d: &QDivisor) -> QDivisor {
        self.pullback_log(&LogDivisor::plain(d.clone())).divisor
    }

    pub fn pushforward(&self, d: &QDivisor) -> QDivisor {
        d.restrict(|id| self.target.contains(id))
    }

    pub fn pushforward_log(&self, d: &LogDivisor) -> LogDivisor {
        LogDivisor::new(d.canonical.clone(), self.pushforward(&d.divisor))
    }
}

/// Blow up a point of a pair and assign the new exceptional divisor its
/// crepant coefficient `Σ m_i a_i - 1`, so that `K_Y + Δ_Y = f*(K_X + Δ)`.
///
/// The coefficient may be negative; the returned pair is then a sub-boundary.
pub fn blow_up(pair: &LogPair, spec: &BlowUpSpec) -> Result<(LogPair, ModelMorphism)> {
    let model = pair.model();
    spec.validate(model)?;
    let exceptional = model.fresh_id();
    let label = model.fresh_label(exceptional);
    let coeff: Rational = spec
        .multiplicities()
        .iter()
        .map(|&(id, m)| pair.coefficient(id) * Rational::integer(m))
        .sum::<Rational>()
        - Rational::one();
    let upper = blow_up_model(model, spec, exceptional, label.clone());
    let mut boundary = pair.boundary().clone();
    boundary.set(exceptional, coeff.clone());
    let morphism = ModelMorphism {
        source: upper.clone(),
        target: model.clone(),
        steps: vec![Step::BlowUp {
            spec: spec.clone(),
            exceptional,
            label,
            crepant_coefficient: coeff,
        }],
    };
    Ok((LogPair::sub_boundary(upper, boundary)?, morphism))
}

/// Contract a negative tracked curve numerically.
///
/// The remaining intersection numbers become those of the pullbacks,
/// `D̄_i·D̄_j = D_i·D_j - (D_i·C)(D_j·C)/C²`, and the step records the
/// discrepancy `a(C) = (K+Δ)·C / C² - coeff_Δ(C)` of `C` over the image pair.
pub fn contract(pair: &LogPair, curve: DivisorId) -> Result<(LogPair, ModelMorphism)> {
    let model = pair.model();
    let c = contract_model(model, curve)?;
    let log_difference = pair.log_degree(curve) / c.self_intersection.clone();
    let crepant = pair.coefficient(curve) - log_difference;
    let boundary = pair.boundary().without(curve);
    let morphism = ModelMorphism {
        source: model.clone(),
        target: c.lower.clone(),
        steps: vec![Step::Extract {
            curve,
            label: c.label,
            self_intersection: c.self_intersection,
            canonical_degree: c.canonical_degree,
            meets: c.meets,
            smooth_before: c.smooth_before,
            crepant_coefficient: crepant,
        }],
    };
    Ok((LogPair::sub_boundary(c.lower, boundary)?, morphism))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn ints(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| Rational::integer(x)).collect())
            .collect()
    }

    /// Two transverse curves with given self-intersections on a smooth surface.
    fn crossing(a: i64, b: i64) -> SurfaceModel {
        // rational curves: K·C = -2 - C²
        SurfaceModel::from_matrix(ints(&[&[a, 1], &[1, b]]), vec![q(-2 - a, 1), q(-2 - b, 1)]).unwrap()
    }

    fn pair(model: SurfaceModel, coeffs: &[(u32, Rational)]) -> LogPair {
        LogPair::new(model, coeffs.iter().map(|(i, c)| (DivisorId(*i), c.clone())).collect()).unwrap()
    }

    const D0: DivisorId = DivisorId(0);
    const D1: DivisorId = DivisorId(1);

    #[test]
    fn intersection_point_blow_up_updates_form() {
        let p = pair(crossing(1, 1), &[(0, q(2, 3)), (1, q(2, 3))]);
        let (up, f) = blow_up(&p, &BlowUpSpec::IntersectionPoint { i: D0, j: D1 }).unwrap();
        let m = up.model();
        let e = DivisorId(2);
        assert_eq!(*m.pairing(e, e), -1);
        assert_eq!(*m.canonical_degree(e), -1);
        assert_eq!(*m.pairing(D0, D0), 0);
        assert_eq!(*m.pairing(D0, D1), 0);
        assert_eq!(*m.pairing(D0, e), 1);
        assert_eq!(*m.canonical_degree(D0), -2);
        assert_eq!(up.coefficient(e), q(1, 3));
        assert_eq!(f.steps()[0].discrepancy(), q(-1, 3));
        m.check_adjunction_parity().unwrap();
    }

    #[test]
    fn free_point_blow_up_without_boundary() {
        let p = pair(crossing(1, 1), &[]);
        let (up, f) = blow_up(&p, &BlowUpSpec::FreePoint { i: D0 }).unwrap();
        assert_eq!(up.coefficient(DivisorId(2)), q(-1, 1));
        assert_eq!(f.steps()[0].discrepancy(), q(1, 1));
        assert!(!up.is_boundary());
    }

    #[test]
    fn invalid_centre_is_rejected() {
        let p = pair(crossing(-1, -1), &[]);
        let (up, _) = blow_up(&p, &BlowUpSpec::IntersectionPoint { i: D0, j: D1 }).unwrap();
        assert!(blow_up(&up, &BlowUpSpec::IntersectionPoint { i: D0, j: D1 }).is_err());
        assert!(blow_up(&p, &BlowUpSpec::FreePoint { i: DivisorId(9) }).is_err());
        assert!(blow_up(&p, &BlowUpSpec::IntersectionPoint { i: D0, j: D0 }).is_err());
    }

    #[test]
    fn contracting_fresh_exceptional_restores_pair() {
        let p = pair(crossing(1, -2), &[(0, q(1, 2)), (1, q(1, 3))]);
        for spec in BlowUpSpec::enumerate(p.model()) {
            let (up, _) = blow_up(&p, &spec).unwrap();
            let e = up.model().fresh_id().0 - 1;
            let (down, g) = contract(&up, DivisorId(e)).unwrap();
            assert_eq!(down, p, "round trip through {spec:?}");
            assert!(down.model().is_smooth());
            assert_eq!(g.steps()[0].discrepancy(), -up.coefficient(DivisorId(e)));
        }
    }

    #[test]
    fn contracting_minus_one_curve_discrepancy_one() {
        let model = SurfaceModel::from_matrix(ints(&[&[-1]]), vec![q(-1, 1)]).unwrap();
        let (_, f) = contract(&pair(model, &[]), D0).unwrap();
        assert_eq!(f.steps()[0].discrepancy(), q(1, 1));
    }

    #[test]
    fn contracting_minus_two_curve_is_crepant_and_singular() {
        // a (-2)-curve C meeting a curve B once
        let model = crossing(-2, 0);
        let (down, f) = contract(&pair(model, &[]), D0).unwrap();
        assert_eq!(f.steps()[0].discrepancy(), Rational::zero());
        assert!(!down.model().is_smooth());
        assert_eq!(*down.model().pairing(D1, D1), q(1, 2));
        // K pulls back to K, a boundary 1/2 B pulls back with coefficient 1/4 on C
        let k = f.pullback_log(&LogDivisor::log_canonical(&QDivisor::new()));
        assert!(k.divisor.is_empty());
        let b = f.pullback(&QDivisor::single(D1, q(1, 2)));
        assert_eq!(b.coeff(D0), q(1, 4));
    }

    #[test]
    fn contraction_requires_negative_curve() {
        let model = crossing(0, -1);
        assert!(contract(&pair(model.clone(), &[]), D0).is_err());
        assert!(contract(&pair(model, &[]), DivisorId(7)).is_err());
    }

    #[test]
    fn pullback_under_blow_up_adds_multiplicity() {
        let p = pair(crossing(1, 1), &[]);
        let (_, f) = blow_up(&p, &BlowUpSpec::IntersectionPoint { i: D0, j: D1 }).unwrap();
        let d: QDivisor = [(D0, q(2, 1)), (D1, q(3, 1))].into_iter().collect();
        let pulled = f.pullback(&d);
        assert_eq!(pulled.coeff(DivisorId(2)), q(5, 1));
        assert_eq!(f.pushforward(&pulled), d);
        assert!(f.pushforward(&QDivisor::single(DivisorId(2), q(1, 1))).is_empty());
        // pulled-back classes are orthogonal to the exceptional curve
        let e = QDivisor::single(DivisorId(2), Rational::one());
        assert_eq!(f.source().intersect(&pulled, &e), Rational::zero());
    }

    #[test]
    fn crepant_pullback_after_contraction() {
        let p = pair(crossing(-3, 1), &[(1, q(1, 2))]);
        let (down, f) = contract(&p, D0).unwrap();
        let pulled = f.pullback_log(&down.log_canonical());
        let alpha = p.log_degree(D0) / q(-3, 1);
        let mut expected = p.log_canonical();
        expected.divisor.add_to(D0, &-alpha);
        assert_eq!(pulled, expected);
    }

    #[test]
    fn replay_both_directions() {
        let p = pair(crossing(1, 1), &[(0, q(1, 2))]);
        let (p1, f1) = blow_up(&p, &BlowUpSpec::IntersectionPoint { i: D0, j: D1 }).unwrap();
        let (_, f2) = blow_up(&p1, &BlowUpSpec::FreePoint { i: DivisorId(2) }).unwrap();
        let chain = f2.then(f1).unwrap();
        assert_eq!(chain.replay_up().unwrap(), *chain.source());
        assert_eq!(chain.replay_down().unwrap(), *chain.target());
        assert_eq!(chain.exceptional_ids(), vec![DivisorId(2), DivisorId(3)]);
        let rebuilt = ModelMorphism::from_steps(chain.target().clone(), chain.steps().to_vec()).unwrap();
        assert_eq!(rebuilt, chain);
    }
}
