//! Seeded random SNC configurations for property suites and the oracle
//! command.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::divisor::QDivisor;
use crate::model::{BlowUpSpec, LogPair, SurfaceModel};
use crate::morphism::blow_up;
use crate::rational::Rational;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug)]
pub struct SampleParams {
    /// Extra random point blow-ups applied to the base configuration.
    pub max_blow_ups: usize,
    /// Largest number of boundary components.
    pub max_components: usize,
    /// Coefficients are drawn from `{ℓ/k : 1 ≤ ℓ < k}`.
    pub grid: u64,
}

impl Default for SampleParams {
    fn default() -> Self {
        SampleParams {
            max_blow_ups: 3,
            max_components: 5,
            grid: 6,
        }
    }
}

fn model(form: &[&[i64]], canonical: &[i64]) -> SurfaceModel {
    SurfaceModel::from_matrix(
        form.iter()
            .map(|r| r.iter().map(|&x| Rational::integer(x)).collect())
            .collect(),
        canonical.iter().map(|&x| Rational::integer(x)).collect(),
    )
    .expect("base configurations are valid")
}

/// One of a few classical configurations: lines in the plane, a conic and a
/// line, a Hirzebruch surface with sections and fibres, or lines on a
/// surface with `K ≡ 3L`.
pub fn base_model(rng: &mut impl Rng) -> SurfaceModel {
    match rng.gen_range(0..5) {
        0 => {
            let n = rng.gen_range(2..=4);
            let form: Vec<Vec<i64>> = vec![vec![1; n]; n];
            let rows: Vec<&[i64]> = form.iter().map(Vec::as_slice).collect();
            model(&rows, &vec![-3; n])
        }
        1 => model(&[&[4, 2], &[2, 1]], &[-6, -3]),
        2 => {
            let e = rng.gen_range(0..=4i64);
            // σ, σ∞, two fibres
            model(
                &[&[-e, 0, 1, 1], &[0, e, 1, 1], &[1, 1, 0, 0], &[1, 1, 0, 0]],
                &[e - 2, -e - 2, -2, -2],
            )
        }
        3 => model(&[&[1, 1, 1], &[1, 1, 1], &[1, 1, 1]], &[3, 3, 3]),
        _ => {
            let e = rng.gen_range(2..=5i64);
            model(&[&[-e, 1], &[1, 0]], &[e - 2, -2])
        }
    }
}

/// `base_model` followed by up to `max_blow_ups` random point blow-ups.
pub fn random_model(rng: &mut impl Rng, max_blow_ups: usize) -> SurfaceModel {
    let mut pair = LogPair::new(base_model(rng), QDivisor::new()).expect("empty boundary");
    for _ in 0..rng.gen_range(0..=max_blow_ups) {
        let specs = BlowUpSpec::enumerate(pair.model());
        let spec = specs.choose(rng).expect("general point is always available");
        let (up, _) = blow_up(&pair, spec).expect("enumerated centres are valid");
        pair = LogPair::new(up.model().clone(), QDivisor::new()).expect("empty boundary");
    }
    pair.model().clone()
}

/// A random boundary with coefficients on the `1/grid` lattice, strictly
/// between 0 and 1.
pub fn random_boundary(rng: &mut impl Rng, model: &SurfaceModel, max_components: usize, grid: u64) -> QDivisor {
    let mut ids = model.ids().to_vec();
    ids.shuffle(rng);
    let count = rng.gen_range(1..=max_components.min(ids.len()).max(1));
    ids.into_iter()
        .take(count)
        .map(|id| {
            let l = rng.gen_range(1..grid.max(2)) as i64;
            (id, Rational::new(l, grid.max(2) as i64))
        })
        .collect()
}

/// A random klt SNC pair.
pub fn random_klt_pair(rng: &mut impl Rng, params: &SampleParams) -> LogPair {
    let model = random_model(rng, params.max_blow_ups);
    let boundary = random_boundary(rng, &model, params.max_components, params.grid);
    LogPair::new(model, boundary).expect("grid coefficients lie in (0, 1)")
}
