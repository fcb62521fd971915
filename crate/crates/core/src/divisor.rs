//! Rational divisors over a set of tracked prime divisors, together with
//! rounding, boundary decomposition and the coefficient-grid reduction used
//! before terminalization.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Identifier of a tracked prime divisor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DivisorId(pub u32);

impl fmt::Display for DivisorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A finite formal sum `Σ a_i D_i` with rational coefficients.
///
/// Zero coefficients are never stored, so `len()` is the number of
/// components of the divisor.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "BTreeMap<DivisorId, Rational>", into = "BTreeMap<DivisorId, Rational>")]
pub struct QDivisor {
    entries: BTreeMap<DivisorId, Rational>,
}

impl From<BTreeMap<DivisorId, Rational>> for QDivisor {
    fn from(map: BTreeMap<DivisorId, Rational>) -> Self {
        map.into_iter().collect()
    }
}

impl From<QDivisor> for BTreeMap<DivisorId, Rational> {
    fn from(d: QDivisor) -> Self {
        d.entries
    }
}

impl QDivisor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(id: DivisorId, coeff: Rational) -> Self {
        let mut d = Self::new();
        d.set(id, coeff);
        d
    }

    pub fn coeff(&self, id: DivisorId) -> Rational {
        self.entries.get(&id).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, id: DivisorId, coeff: Rational) {
        if coeff.is_zero() {
            self.entries.remove(&id);
        } else {
            self.entries.insert(id, coeff);
        }
    }

    pub fn add_to(&mut self, id: DivisorId, delta: &Rational) {
        let c = self.coeff(id) + delta;
        self.set(id, c);
    }

    pub fn iter(&self) -> impl Iterator<Item = (DivisorId, &Rational)> + '_ {
        self.entries.iter().map(|(id, c)| (*id, c))
    }

    pub fn support(&self) -> impl Iterator<Item = DivisorId> + '_ {
        self.entries.keys().copied()
    }

    /// Number of components.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_effective(&self) -> bool {
        self.entries.values().all(|c| !c.is_negative())
    }

    pub fn is_integral(&self) -> bool {
        self.entries.values().all(Rational::is_integer)
    }

    pub fn scale(&self, by: &Rational) -> QDivisor {
        self.iter().map(|(id, c)| (id, c * by)).collect()
    }

    pub fn map_coeffs(&self, f: impl Fn(&Rational) -> Rational) -> QDivisor {
        self.iter().map(|(id, c)| (id, f(c))).collect()
    }

    /// Keep only the components accepted by `keep`.
    pub fn restrict(&self, keep: impl Fn(DivisorId) -> bool) -> QDivisor {
        self.iter()
            .filter(|(id, _)| keep(*id))
            .map(|(id, c)| (id, c.clone()))
            .collect()
    }

    pub fn without(&self, id: DivisorId) -> QDivisor {
        self.restrict(|d| d != id)
    }

    /// `self <= other` coefficientwise.
    pub fn le(&self, other: &QDivisor) -> bool {
        (other - self).is_effective()
    }

    pub fn max_coeff(&self) -> Option<&Rational> {
        self.entries.values().max()
    }
}

impl FromIterator<(DivisorId, Rational)> for QDivisor {
    fn from_iter<T: IntoIterator<Item = (DivisorId, Rational)>>(iter: T) -> Self {
        let mut d = QDivisor::new();
        for (id, c) in iter {
            d.add_to(id, &c);
        }
        d
    }
}

impl std::ops::Add<&QDivisor> for &QDivisor {
    type Output = QDivisor;
    fn add(self, rhs: &QDivisor) -> QDivisor {
        let mut out = self.clone();
        for (id, c) in rhs.iter() {
            out.add_to(id, c);
        }
        out
    }
}

impl std::ops::Sub<&QDivisor> for &QDivisor {
    type Output = QDivisor;
    fn sub(self, rhs: &QDivisor) -> QDivisor {
        let mut out = self.clone();
        for (id, c) in rhs.iter() {
            out.add_to(id, &-c);
        }
        out
    }
}

impl std::ops::Neg for &QDivisor {
    type Output = QDivisor;
    fn neg(self) -> QDivisor {
        self.map_coeffs(|c| -c)
    }
}

impl fmt::Display for QDivisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "0");
        }
        for (i, (id, c)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c}){id}")?;
        }
        Ok(())
    }
}

/// A class of the form `c·K + D`, where `K` is the canonical class of the
/// ambient model and `D` a rational divisor on tracked curves.
///
/// Pullbacks and pushforwards act on the `K` part symbolically, which lets
/// crepancy identities such as `K_Y + Δ_Y = f*(K_X + Δ)` be compared as
/// exact divisor equalities.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogDivisor {
    pub canonical: Rational,
    pub divisor: QDivisor,
}

impl LogDivisor {
    pub fn new(canonical: Rational, divisor: QDivisor) -> Self {
        LogDivisor { canonical, divisor }
    }

    /// `K + Δ`.
    pub fn log_canonical(boundary: &QDivisor) -> Self {
        LogDivisor::new(Rational::one(), boundary.clone())
    }

    /// A plain divisor with no canonical part.
    pub fn plain(divisor: QDivisor) -> Self {
        LogDivisor::new(Rational::zero(), divisor)
    }

    pub fn scale(&self, by: &Rational) -> LogDivisor {
        LogDivisor::new(&self.canonical * by, self.divisor.scale(by))
    }
}

impl fmt::Display for LogDivisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})K + {}", self.canonical, self.divisor)
    }
}

/// Componentwise floor `⌊D⌋`.
pub fn floor_divisor(d: &QDivisor) -> QDivisor {
    d.map_coeffs(Rational::floor)
}

/// Componentwise ceiling `⌈D⌉`.
pub fn ceil_divisor(d: &QDivisor) -> QDivisor {
    d.map_coeffs(Rational::ceil)
}

/// Split a boundary `D` into `(D^{<1}, D^{=1})`.
///
/// The second part is the reduced sum of the coefficient-one components.
pub fn decompose_boundary(d: &QDivisor) -> Result<(QDivisor, QDivisor)> {
    let one = Rational::one();
    let mut less = QDivisor::new();
    let mut equal = QDivisor::new();
    for (id, c) in d.iter() {
        if c.is_negative() || *c > one {
            return Err(Error::domain(format!(
                "coefficient {c} of {id} lies outside [0, 1]"
            )));
        }
        if *c == one {
            equal.set(id, one.clone());
        } else {
            less.set(id, c.clone());
        }
    }
    Ok((less, equal))
}

/// A finite set of admissible coefficients in `[0, 1]`, optionally with a
/// declared lower bound for the nonzero part of the (possibly infinite)
/// DCC set it stands in for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientSet {
    elements: Vec<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dcc_floor: Option<Rational>,
}

impl CoefficientSet {
    pub fn new(elements: impl IntoIterator<Item = Rational>, dcc_floor: Option<Rational>) -> Result<Self> {
        let mut elements: Vec<Rational> = elements.into_iter().collect();
        elements.sort();
        elements.dedup();
        if let Some(bad) = elements
            .iter()
            .find(|c| c.is_negative() || **c > Rational::one())
        {
            return Err(Error::domain(format!("coefficient {bad} lies outside [0, 1]")));
        }
        if let Some(floor) = &dcc_floor {
            if !floor.is_positive() || *floor > Rational::one() {
                return Err(Error::domain(format!("dcc floor {floor} must lie in (0, 1]")));
            }
            if let Some(m) = elements.iter().find(|c| c.is_positive()) {
                if m < floor {
                    return Err(Error::domain(format!(
                        "element {m} lies below the declared dcc floor {floor}"
                    )));
                }
            }
        }
        Ok(CoefficientSet { elements, dcc_floor })
    }

    /// The set of coefficients appearing in a divisor.
    pub fn of_divisor(d: &QDivisor) -> Result<Self> {
        Self::new(d.iter().map(|(_, c)| c.clone()), None)
    }

    /// `{ℓ/k : ℓ = 1, …, k-1}`.
    pub fn grid(k: u64) -> Self {
        let k = k as i64;
        CoefficientSet {
            elements: (1..k).map(|l| Rational::new(l, k)).collect(),
            dcc_floor: None,
        }
    }

    pub fn elements(&self) -> &[Rational] {
        &self.elements
    }

    pub fn dcc_floor(&self) -> Option<&Rational> {
        self.dcc_floor.as_ref()
    }

    pub fn contains(&self, c: &Rational) -> bool {
        self.elements.binary_search(c).is_ok()
    }

    /// The minimum `a` of the nonzero part that the rounding step uses: the
    /// declared floor if there is one, otherwise the smallest nonzero element.
    pub fn min_nonzero(&self) -> Option<Rational> {
        self.dcc_floor
            .clone()
            .or_else(|| self.elements.iter().find(|c| c.is_positive()).cloned())
    }
}

/// Result of snapping coefficients down onto the grid `{ℓ/k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rounding {
    pub k: u64,
    pub map: BTreeMap<Rational, Rational>,
}

impl Rounding {
    /// `⌊k·a⌋/k`, for any coefficient (not only those of the source set).
    pub fn apply(&self, a: &Rational) -> Rational {
        snap_down(a, self.k)
    }

    pub fn apply_divisor(&self, d: &QDivisor) -> QDivisor {
        d.map_coeffs(|c| self.apply(c))
    }
}

fn snap_down(a: &Rational, k: u64) -> Rational {
    let k = Rational::from(BigInt::from(k));
    (a * &k).floor() / k
}

/// Round every nonzero element of `set` down to the grid `1/k`, with
/// `k = ⌈1/(a·δ)⌉` and `a` the minimum of the nonzero part. Every image
/// satisfies `(1-δ)·a_i < a_i' <= a_i`.
pub fn round_coefficients(set: &CoefficientSet, delta: &Rational) -> Result<Rounding> {
    if !delta.is_positive() || *delta >= Rational::one() {
        return Err(Error::domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    let a = set
        .min_nonzero()
        .ok_or_else(|| Error::domain("coefficient set has no nonzero element"))?;
    let k = (&a * delta).recip().ceil();
    let k = k
        .to_bigint()
        .and_then(|k| k.to_u64())
        .ok_or_else(|| Error::Resource(format!("grid size {k} does not fit in u64")))?;
    let map = set
        .elements()
        .iter()
        .filter(|c| c.is_positive())
        .map(|c| (c.clone(), snap_down(c, k)))
        .collect();
    Ok(Rounding { k, map })
}
