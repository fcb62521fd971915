//! The numerical semigroup generated by `{qN + 1 : q ≥ 1}` and the
//! birationality threshold derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `m` handled by the dynamic-programming fallback.
pub const DP_LIMIT: u64 = 1_000_000;

/// A way of writing `m = Σ (q_i N + 1)`, recorded as the multipliers `q_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Decomposition {
    Representable { multipliers: Vec<u64> },
    NotRepresentable,
}

impl Decomposition {
    pub fn is_representable(&self) -> bool {
        matches!(self, Decomposition::Representable { .. })
    }

    /// `Σ (q_i N + 1)`.
    pub fn total(&self, n: u64) -> Option<u64> {
        match self {
            Decomposition::Representable { multipliers } => multipliers
                .iter()
                .try_fold(0u64, |acc, &q| acc.checked_add(q.checked_mul(n)?.checked_add(1)?)),
            Decomposition::NotRepresentable => None,
        }
    }
}

fn conductor(n: u64) -> Result<u64> {
    n.checked_mul(n)
        .and_then(|s| s.checked_add(1))
        .ok_or_else(|| Error::Resource(format!("N = {n} is too large")))
}

/// Write `m` as a sum of elements `qN + 1` with `q ≥ 1`.
///
/// Every `m ≥ N² + 1` is representable and gets an explicit decomposition;
/// smaller `m` fall back to a dynamic program.
pub fn semigroup_decompose(n: u64, m: u64) -> Result<Decomposition> {
    if n == 0 || m == 0 {
        return Err(Error::domain("N and m must be positive"));
    }
    let c = conductor(n)?;
    if m >= c {
        return Ok(Decomposition::Representable {
            multipliers: constructive(n, m - (c - 1)),
        });
    }
    if m > DP_LIMIT {
        return Err(Error::Resource(format!("m = {m} exceeds the search limit {DP_LIMIT}")));
    }
    let table = SemigroupTable::new(n, m);
    Ok(table.decomposition(m))
}

/// For `m = N² + k` with `k ≥ 1`, write `k = (N+1)a + b` with `0 ≤ b ≤ N`.
/// Using `N + 1 = 1·N + 1` and `(N - b + 1)N + 1`:
/// `b = 0` gives `[N+1]` then `a - 1` ones, otherwise `[N - b + 1]` then
/// `a + b - 1` ones.
fn constructive(n: u64, k: u64) -> Vec<u64> {
    let (a, b) = (k / (n + 1), k % (n + 1));
    if b == 0 {
        let mut out = vec![n + 1];
        out.extend(std::iter::repeat_n(1, (a - 1) as usize));
        out
    } else {
        let mut out = vec![n - b + 1];
        out.extend(std::iter::repeat_n(1, (a + b - 1) as usize));
        out
    }
}

/// Membership table for `0..=limit`, built by unbounded knapsack over every
/// generator `qN + 1 ≤ limit`.
#[derive(Clone, Debug)]
pub struct SemigroupTable {
    n: u64,
    /// `last[m]` is the multiplier of one generator used to reach `m`.
    last: Vec<Option<u64>>,
}

impl SemigroupTable {
    pub fn new(n: u64, limit: u64) -> Self {
        assert!(n > 0, "N must be positive");
        let len = limit as usize + 1;
        let mut last: Vec<Option<u64>> = vec![None; len];
        let mut reachable = vec![false; len];
        reachable[0] = true;
        let mut q = 1u64;
        while let Some(g) = q.checked_mul(n).and_then(|x| x.checked_add(1)).filter(|&g| g <= limit) {
            let g = g as usize;
            for m in g..len {
                if reachable[m - g] && !reachable[m] {
                    reachable[m] = true;
                    last[m] = Some(q);
                }
            }
            q += 1;
        }
        SemigroupTable { n, last }
    }

    pub fn limit(&self) -> u64 {
        self.last.len() as u64 - 1
    }

    pub fn contains(&self, m: u64) -> bool {
        m == 0 || self.last.get(m as usize).is_some_and(Option::is_some)
    }

    pub fn decomposition(&self, m: u64) -> Decomposition {
        if m == 0 || !self.contains(m) {
            return Decomposition::NotRepresentable;
        }
        let mut multipliers = Vec::new();
        let mut rest = m;
        while rest > 0 {
            let q = self.last[rest as usize].expect("reachable values chain back to zero");
            multipliers.push(q);
            rest -= q * self.n + 1;
        }
        multipliers.sort_unstable_by(|a, b| b.cmp(a));
        Decomposition::Representable { multipliers }
    }
}

/// `(18N)² + 1`: pluricanonical maps `|m(K + Δ)|` are birational for every
/// `m` at or above this value once `N(K + Δ)` is Cartier.
pub fn birationality_threshold(n: u64) -> Result<u64> {
    n.checked_mul(18)
        .and_then(|x| x.checked_mul(x))
        .and_then(|x| x.checked_add(1))
        .ok_or_else(|| Error::Resource(format!("threshold for N = {n} overflows")))
}
