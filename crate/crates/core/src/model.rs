//! Combinatorial surface models: a window of tracked prime divisors with
//! their rational intersection form and canonical degrees.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::divisor::{DivisorId, LogDivisor, QDivisor};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// A surface as seen through a finite set of tracked prime divisors.
///
/// `form[a][b]` is the intersection number of the `a`-th and `b`-th tracked
/// divisors and `canonical[a]` is `K·D_a`. Divisor ids are kept in strictly
/// ascending order, so positional data is a function of the id set.
/// `smooth` records whether the model is still a smooth surface carrying an
/// SNC configuration; it is cleared by contractions that leave a singular
/// point or a non-transverse configuration behind.
#[derive(Clone, PartialEq, Eq)]
pub struct SurfaceModel {
    ids: Vec<DivisorId>,
    labels: Vec<String>,
    form: Vec<Vec<Rational>>,
    canonical: Vec<Rational>,
    smooth: bool,
}

/// One tracked divisor, used to build models.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrackedDivisor {
    pub id: DivisorId,
    pub label: String,
    pub canonical_degree: Rational,
}

impl SurfaceModel {
    /// Build a model, checking symmetry, nonnegativity off the diagonal and
    /// adjunction parity. Divisors are reordered by id.
    pub fn new(divisors: Vec<TrackedDivisor>, form: Vec<Vec<Rational>>) -> Result<Self> {
        let n = divisors.len();
        if form.len() != n || form.iter().any(|row| row.len() != n) {
            return Err(Error::domain(format!(
                "intersection matrix must be {n}x{n} to match the divisor list"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| divisors[i].id);
        for w in order.windows(2) {
            if divisors[w[0]].id == divisors[w[1]].id {
                return Err(Error::domain(format!("duplicate divisor id {}", divisors[w[0]].id)));
            }
        }
        let model = SurfaceModel {
            ids: order.iter().map(|&i| divisors[i].id).collect(),
            labels: order.iter().map(|&i| divisors[i].label.clone()).collect(),
            form: order
                .iter()
                .map(|&i| order.iter().map(|&j| form[i][j].clone()).collect())
                .collect(),
            canonical: order.iter().map(|&i| divisors[i].canonical_degree.clone()).collect(),
            smooth: true,
        };
        model.validate()?;
        Ok(model)
    }

    /// Convenience constructor with ids `0..n` and labels `D0, D1, …`.
    pub fn from_matrix(form: Vec<Vec<Rational>>, canonical: Vec<Rational>) -> Result<Self> {
        let divisors = canonical
            .into_iter()
            .enumerate()
            .map(|(i, k)| TrackedDivisor {
                id: DivisorId(i as u32),
                label: format!("D{i}"),
                canonical_degree: k,
            })
            .collect();
        Self::new(divisors, form)
    }

    /// Same model with the smoothness flag overridden.
    pub fn with_smooth(mut self, smooth: bool) -> Self {
        self.smooth = smooth;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::domain(format!("duplicate divisor label {dup:?}")));
        }
        for a in 0..n {
            for b in 0..n {
                if self.form[a][b] != self.form[b][a] {
                    return Err(Error::domain(format!(
                        "intersection matrix is not symmetric at ({}, {})",
                        self.labels[a], self.labels[b]
                    )));
                }
                if a != b && self.form[a][b].is_negative() {
                    return Err(Error::domain(format!(
                        "distinct prime divisors {} and {} have negative intersection",
                        self.labels[a], self.labels[b]
                    )));
                }
            }
        }
        self.check_adjunction_parity()
    }

    /// `K·C + C²` must be even whenever both numbers are integers.
    pub fn check_adjunction_parity(&self) -> Result<()> {
        for a in 0..self.len() {
            let sum = &self.canonical[a] + &self.form[a][a];
            if self.canonical[a].is_integer() && self.form[a][a].is_integer() {
                let half = &sum / &Rational::integer(2);
                if !half.is_integer() {
                    return Err(Error::domain(format!(
                        "adjunction parity fails for {}: K·C + C² = {sum} is odd",
                        self.labels[a]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn ids(&self) -> &[DivisorId] {
        &self.ids
    }

    pub fn contains(&self, id: DivisorId) -> bool {
        self.index_of(id).is_some()
    }

    pub fn index_of(&self, id: DivisorId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    fn idx(&self, id: DivisorId) -> usize {
        self.index_of(id)
            .unwrap_or_else(|| panic!("divisor {id} is not tracked by this model"))
    }

    pub fn label(&self, id: DivisorId) -> &str {
        &self.labels[self.idx(id)]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id_of_label(&self, label: &str) -> Option<DivisorId> {
        self.labels.iter().position(|l| l == label).map(|i| self.ids[i])
    }

    /// `D_a · D_b`.
    pub fn pairing(&self, a: DivisorId, b: DivisorId) -> &Rational {
        &self.form[self.idx(a)][self.idx(b)]
    }

    /// `K · D_a`.
    pub fn canonical_degree(&self, a: DivisorId) -> &Rational {
        &self.canonical[self.idx(a)]
    }

    pub fn form_rows(&self) -> &[Vec<Rational>] {
        &self.form
    }

    pub fn canonical_vector(&self) -> &[Rational] {
        &self.canonical
    }

    /// Whether two distinct tracked divisors meet.
    pub fn meets(&self, a: DivisorId, b: DivisorId) -> bool {
        a != b && self.pairing(a, b).is_positive()
    }

    /// Unordered pairs of distinct tracked divisors that meet, in id order.
    pub fn intersecting_pairs(&self) -> Vec<(DivisorId, DivisorId)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                if self.form[a][b].is_positive() {
                    out.push((self.ids[a], self.ids[b]));
                }
            }
        }
        out
    }

    /// Smallest id not used by the model's largest divisor.
    pub fn fresh_id(&self) -> DivisorId {
        self.ids.last().map_or(DivisorId(0), |d| DivisorId(d.0 + 1))
    }

    /// A display label for a new divisor that does not clash with existing ones.
    pub fn fresh_label(&self, id: DivisorId) -> String {
        let mut label = format!("E{}", id.0);
        while self.labels.contains(&label) {
            label.push('\'');
        }
        label
    }

    /// Bilinear extension of the intersection form.
    pub fn intersect(&self, d1: &QDivisor, d2: &QDivisor) -> Rational {
        let mut total = Rational::zero();
        for (a, ca) in d1.iter() {
            let row = &self.form[self.idx(a)];
            for (b, cb) in d2.iter() {
                total += ca * cb * &row[self.idx(b)];
            }
        }
        total
    }

    /// `(cK + D) · C` for a tracked curve `C`.
    pub fn degree_on(&self, d: &LogDivisor, curve: DivisorId) -> Rational {
        let c = self.idx(curve);
        let mut total = &d.canonical * &self.canonical[c];
        for (a, coeff) in d.divisor.iter() {
            total += coeff * &self.form[self.idx(a)][c];
        }
        total
    }

    /// `(cK + D) · E` for a divisor `E` on tracked curves.
    pub fn degree_against(&self, d: &LogDivisor, e: &QDivisor) -> Rational {
        e.iter().map(|(id, c)| c * self.degree_on(d, id)).sum()
    }

    /// Nefness relative to the tracked curves.
    pub fn nef_check(&self, d: &LogDivisor) -> NefReport {
        let violations = self
            .ids
            .iter()
            .filter_map(|&c| {
                let deg = self.degree_on(d, c);
                deg.is_negative().then_some((c, deg))
            })
            .collect();
        NefReport { violations }
    }

    pub fn is_nef_on_tracked(&self, d: &QDivisor) -> NefReport {
        self.nef_check(&LogDivisor::plain(d.clone()))
    }

    /// `D²` for a divisor that is nef on the tracked curves.
    pub fn volume_nef(&self, d: &QDivisor) -> Result<Rational> {
        let report = self.is_nef_on_tracked(d);
        if !report.is_nef() {
            return Err(Error::domain(format!(
                "volume is only computed for nef divisors; {} has negative degree on {} tracked curve(s)",
                d,
                report.violations.len()
            )));
        }
        Ok(self.intersect(d, d))
    }

    #[allow(clippy::type_complexity)]
    pub(crate) fn raw_parts_mut(
        &mut self,
    ) -> (&mut Vec<DivisorId>, &mut Vec<String>, &mut Vec<Vec<Rational>>, &mut Vec<Rational>, &mut bool) {
        (&mut self.ids, &mut self.labels, &mut self.form, &mut self.canonical, &mut self.smooth)
    }
}

impl fmt::Debug for SurfaceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SurfaceModel (smooth: {}) {{", self.smooth)?;
        for (a, id) in self.ids.iter().enumerate() {
            let row: Vec<String> = self.form[a].iter().map(ToString::to_string).collect();
            writeln!(
                f,
                "  {id} {:>4}  K·D = {:>5}  [{}]",
                self.labels[a],
                self.canonical[a].to_string(),
                row.join(", ")
            )?;
        }
        write!(f, "}}")
    }
}

/// Tracked curves on which a class has negative degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NefReport {
    pub violations: Vec<(DivisorId, Rational)>,
}

impl NefReport {
    pub fn is_nef(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A model together with a divisor `Δ` on its tracked curves.
///
/// `LogPair::new` enforces that `Δ` is a boundary (coefficients in `[0, 1]`).
/// Crepant pullbacks can produce negative coefficients; such sub-boundary
/// pairs are built with [`LogPair::sub_boundary`] and only used inside
/// discrepancy computations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogPair {
    model: SurfaceModel,
    boundary: QDivisor,
}

impl LogPair {
    pub fn new(model: SurfaceModel, boundary: QDivisor) -> Result<Self> {
        let pair = Self::sub_boundary(model, boundary)?;
        pair.ensure_boundary()?;
        Ok(pair)
    }

    pub fn sub_boundary(model: SurfaceModel, boundary: QDivisor) -> Result<Self> {
        if let Some(id) = boundary.support().find(|id| !model.contains(*id)) {
            return Err(Error::domain(format!("boundary component {id} is not a tracked divisor")));
        }
        Ok(LogPair { model, boundary })
    }

    pub fn model(&self) -> &SurfaceModel {
        &self.model
    }

    pub fn boundary(&self) -> &QDivisor {
        &self.boundary
    }

    pub fn into_parts(self) -> (SurfaceModel, QDivisor) {
        (self.model, self.boundary)
    }

    pub fn coefficient(&self, id: DivisorId) -> Rational {
        self.boundary.coeff(id)
    }

    pub fn is_boundary(&self) -> bool {
        self.boundary
            .iter()
            .all(|(_, c)| !c.is_negative() && *c <= Rational::one())
    }

    pub fn ensure_boundary(&self) -> Result<()> {
        match self
            .boundary
            .iter()
            .find(|(_, c)| c.is_negative() || **c > Rational::one())
        {
            Some((id, c)) => Err(Error::domain(format!(
                "coefficient {c} of {} lies outside [0, 1]",
                self.model.label(id)
            ))),
            None => Ok(()),
        }
    }

    /// `K + Δ`.
    pub fn log_canonical(&self) -> LogDivisor {
        LogDivisor::log_canonical(&self.boundary)
    }

    /// `(K + Δ) · C`.
    pub fn log_degree(&self, curve: DivisorId) -> Rational {
        self.model.degree_on(&self.log_canonical(), curve)
    }

    pub fn with_boundary(&self, boundary: QDivisor) -> Result<LogPair> {
        LogPair::sub_boundary(self.model.clone(), boundary)
    }

    /// Boundary coefficients keyed by label, for reports.
    pub fn labelled_boundary(&self) -> BTreeMap<String, Rational> {
        self.boundary
            .iter()
            .map(|(id, c)| (self.model.label(id).to_string(), c.clone()))
            .collect()
    }
}

/// Where a point blow-up is centred.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BlowUpSpec {
    /// One transverse intersection point of two tracked divisors.
    IntersectionPoint { i: DivisorId, j: DivisorId },
    /// A point of one tracked divisor lying on no other tracked divisor.
    FreePoint { i: DivisorId },
    /// A point on no tracked divisor.
    GeneralPoint,
}

impl BlowUpSpec {
    /// Tracked divisors through the centre, with their multiplicities there.
    pub fn multiplicities(&self) -> Vec<(DivisorId, i64)> {
        match *self {
            BlowUpSpec::IntersectionPoint { i, j } => vec![(i, 1), (j, 1)],
            BlowUpSpec::FreePoint { i } => vec![(i, 1)],
            BlowUpSpec::GeneralPoint => Vec::new(),
        }
    }

    pub fn validate(&self, model: &SurfaceModel) -> Result<()> {
        match *self {
            BlowUpSpec::IntersectionPoint { i, j } => {
                if i == j {
                    return Err(Error::domain("intersection-point blow-up needs two distinct divisors"));
                }
                for d in [i, j] {
                    if !model.contains(d) {
                        return Err(Error::domain(format!("{d} is not a tracked divisor")));
                    }
                }
                if *model.pairing(i, j) < Rational::one() {
                    return Err(Error::domain(format!(
                        "{} and {} have no intersection point left (D_i·D_j = {})",
                        model.label(i),
                        model.label(j),
                        model.pairing(i, j)
                    )));
                }
                Ok(())
            }
            BlowUpSpec::FreePoint { i } => {
                if model.contains(i) {
                    Ok(())
                } else {
                    Err(Error::domain(format!("{i} is not a tracked divisor")))
                }
            }
            BlowUpSpec::GeneralPoint => Ok(()),
        }
    }

    /// All centres available on a model, in a fixed order.
    pub fn enumerate(model: &SurfaceModel) -> Vec<BlowUpSpec> {
        let mut out = vec![BlowUpSpec::GeneralPoint];
        out.extend(model.ids().iter().map(|&i| BlowUpSpec::FreePoint { i }));
        out.extend(
            model
                .intersecting_pairs()
                .into_iter()
                .filter(|&(i, j)| *model.pairing(i, j) >= Rational::one())
                .map(|(i, j)| BlowUpSpec::IntersectionPoint { i, j }),
        );
        out
    }
}
