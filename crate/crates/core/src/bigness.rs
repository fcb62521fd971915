//! Numerical bigness certificates `K + Δ ≡ P + F` with `P` nef, `P² > 0` and
//! `F` effective, checked against the tracked curves of a model.

use serde::{Deserialize, Serialize};

use crate::divisor::{DivisorId, LogDivisor, QDivisor};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::SurfaceModel;
use crate::morphism::ModelMorphism;
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BignessCertificate {
    pub nef_part: QDivisor,
    pub effective_part: QDivisor,
}

impl BignessCertificate {
    pub fn new(nef_part: QDivisor, effective_part: QDivisor) -> Self {
        BignessCertificate {
            nef_part,
            effective_part,
        }
    }

    /// Check the certificate for `d` on `model`.
    pub fn verify(&self, model: &SurfaceModel, d: &LogDivisor) -> Result<()> {
        let untracked = self
            .nef_part
            .support()
            .chain(self.effective_part.support())
            .find(|id| !model.contains(*id));
        if let Some(id) = untracked {
            return Err(Error::domain(format!("certificate uses untracked divisor {id}")));
        }
        if !self.effective_part.is_effective() {
            return Err(Error::domain("effective part has a negative coefficient"));
        }
        let nef = model.is_nef_on_tracked(&self.nef_part);
        if let Some((id, deg)) = nef.violations.first() {
            return Err(Error::domain(format!(
                "nef part has degree {deg} on {}",
                model.label(*id)
            )));
        }
        let square = model.intersect(&self.nef_part, &self.nef_part);
        if !square.is_positive() {
            return Err(Error::domain(format!("nef part has square {square}")));
        }
        let sum = LogDivisor::plain(&self.nef_part + &self.effective_part);
        for &c in model.ids() {
            let lhs = model.degree_on(d, c);
            let rhs = model.degree_on(&sum, c);
            if lhs != rhs {
                return Err(Error::domain(format!(
                    "certificate is not numerically equal on {}: {lhs} vs {rhs}",
                    model.label(c)
                )));
            }
        }
        Ok(())
    }

    /// Transport along `f: Y → X` from `X` to `Y`.
    pub fn pullback(&self, f: &ModelMorphism) -> Self {
        BignessCertificate::new(f.pullback(&self.nef_part), f.pullback(&self.effective_part))
    }

    /// Transport along `f: Y → X` from `Y` to `X`. The pushforward of a nef
    /// class need not stay nef on tracked curves, so the result must be
    /// re-verified before use.
    pub fn pushforward(&self, f: &ModelMorphism) -> Self {
        BignessCertificate::new(f.pushforward(&self.nef_part), f.pushforward(&self.effective_part))
    }
}

/// Decides bigness of `K + B` for boundaries `B` on a fixed model.
pub trait BignessOracle {
    fn certify(&self, model: &SurfaceModel, d: &LogDivisor) -> Option<BignessCertificate>;
}

/// Reuses a known certificate for a reference class, moving the difference
/// into the effective part: if `K + Δ ≡ P + F` then `K + B ≡ P + F + (B - Δ)`.
#[derive(Clone, Debug)]
pub struct TrackedCertificateOracle {
    pub reference: LogDivisor,
    pub certificate: BignessCertificate,
}

impl BignessOracle for TrackedCertificateOracle {
    fn certify(&self, model: &SurfaceModel, d: &LogDivisor) -> Option<BignessCertificate> {
        if d.canonical != self.reference.canonical {
            return None;
        }
        let shift = &d.divisor - &self.reference.divisor;
        let candidate = BignessCertificate::new(
            self.certificate.nef_part.clone(),
            &self.certificate.effective_part + &shift,
        );
        candidate.verify(model, d).ok().map(|_| candidate)
    }
}

/// Finds a representative of the class on the tracked curves and runs a
/// Zariski decomposition on it.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZariskiOracle;

impl BignessOracle for ZariskiOracle {
    fn certify(&self, model: &SurfaceModel, d: &LogDivisor) -> Option<BignessCertificate> {
        let rep = numerical_representative(model, d)?;
        if !rep.is_effective() {
            return None;
        }
        let (positive, negative) = zariski_decomposition(model, &rep)?;
        let cert = BignessCertificate::new(positive, negative);
        cert.verify(model, d).ok().map(|_| cert)
    }
}

/// A divisor on tracked curves with the same degrees as `d` on every tracked
/// curve. When the form is degenerate there are many; an effective one is
/// preferred, trying newer curves as pivots first.
pub fn numerical_representative(model: &SurfaceModel, d: &LogDivisor) -> Option<QDivisor> {
    let n = model.len();
    let degrees: Vec<Rational> = model.ids().iter().map(|&c| model.degree_on(d, c)).collect();
    let mut first = None;
    for order in [(0..n).rev().collect::<Vec<_>>(), (0..n).collect()] {
        let permuted: Vec<Vec<Rational>> = model
            .form_rows()
            .iter()
            .map(|row| order.iter().map(|&j| row[j].clone()).collect())
            .collect();
        let y = linalg::solve(&permuted, &degrees)?;
        let rep: QDivisor = order.iter().map(|&j| model.ids()[j]).zip(y).collect();
        if rep.is_effective() {
            return Some(rep);
        }
        first.get_or_insert(rep);
    }
    first
}

/// Zariski decomposition `D = P + N` of an effective divisor supported on
/// tracked curves, computed by growing the support of `N` until `P` is nef.
/// Returns `None` if a candidate support is not negative definite.
pub fn zariski_decomposition(model: &SurfaceModel, d: &QDivisor) -> Option<(QDivisor, QDivisor)> {
    let mut support: Vec<DivisorId> = Vec::new();
    let mut negative = QDivisor::new();
    loop {
        let positive = d - &negative;
        let fresh: Vec<DivisorId> = model
            .ids()
            .iter()
            .copied()
            .filter(|c| !support.contains(c))
            .filter(|&c| model.degree_on(&LogDivisor::plain(positive.clone()), c).is_negative())
            .collect();
        if fresh.is_empty() {
            return Some((positive, negative));
        }
        support.extend(fresh);
        support.sort();
        let gram: Vec<Vec<Rational>> = support
            .iter()
            .map(|&a| support.iter().map(|&b| model.pairing(a, b).clone()).collect())
            .collect();
        if !linalg::is_negative_definite(&gram) {
            return None;
        }
        let rhs: Vec<Rational> = support
            .iter()
            .map(|&c| model.degree_on(&LogDivisor::plain(d.clone()), c))
            .collect();
        let x = linalg::solve(&gram, &rhs)?;
        negative = support.iter().copied().zip(x).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BlowUpSpec, LogPair};
    use crate::morphism::blow_up;
    use crate::rational::q;

    /// Two lines on a surface with `K ≡ 3L`, `L² = 1`.
    fn plane_like() -> SurfaceModel {
        SurfaceModel::from_matrix(
            vec![vec![q(1, 1), q(1, 1)], vec![q(1, 1), q(1, 1)]],
            vec![q(3, 1), q(3, 1)],
        )
        .unwrap()
    }

    #[test]
    fn explicit_certificate_verifies() {
        let m = plane_like();
        let k = LogDivisor::log_canonical(&QDivisor::new());
        let cert = BignessCertificate::new(QDivisor::single(DivisorId(0), q(3, 1)), QDivisor::new());
        cert.verify(&m, &k).unwrap();
        let bad = BignessCertificate::new(QDivisor::single(DivisorId(0), q(2, 1)), QDivisor::new());
        assert!(bad.verify(&m, &k).is_err());
    }

    #[test]
    fn zariski_oracle_finds_negative_part() {
        let pair = LogPair::new(plane_like(), QDivisor::new()).unwrap();
        let (up, f) = blow_up(&pair, &BlowUpSpec::FreePoint { i: DivisorId(0) }).unwrap();
        // K_Y = f*K + E with the exceptional curve E = #2.
        let k = LogDivisor::log_canonical(&QDivisor::new());
        let cert = ZariskiOracle.certify(up.model(), &k).expect("K is big");
        assert_eq!(cert.effective_part, QDivisor::single(DivisorId(2), q(1, 1)));
        let nef = f.pullback(&QDivisor::single(DivisorId(1), q(3, 1)));
        assert_eq!(up.model().intersect(&cert.nef_part, &cert.nef_part), q(9, 1));
        assert_eq!(
            up.model().intersect(&cert.nef_part, &QDivisor::single(DivisorId(1), q(1, 1))),
            up.model().intersect(&nef, &QDivisor::single(DivisorId(1), q(1, 1)))
        );
    }

    #[test]
    fn tracked_oracle_shifts_effective_part() {
        let m = plane_like();
        let delta = QDivisor::single(DivisorId(1), q(1, 2));
        let reference = LogDivisor::log_canonical(&delta);
        let certificate = BignessCertificate::new(
            QDivisor::single(DivisorId(0), q(3, 1)),
            QDivisor::single(DivisorId(1), q(1, 2)),
        );
        let oracle = TrackedCertificateOracle {
            reference,
            certificate,
        };
        let k = LogDivisor::log_canonical(&QDivisor::new());
        let c = oracle.certify(&m, &k).unwrap();
        assert!(c.effective_part.is_empty());
        let more = LogDivisor::log_canonical(&QDivisor::single(DivisorId(1), q(1, 1)));
        assert!(oracle.certify(&m, &more).is_some());
    }

    #[test]
    fn anti_canonical_plane_is_not_certified() {
        let m = SurfaceModel::from_matrix(vec![vec![q(1, 1)]], vec![q(-3, 1)]).unwrap();
        let k = LogDivisor::log_canonical(&QDivisor::new());
        assert!(ZariskiOracle.certify(&m, &k).is_none());
    }
}
