//! Goodness-of-fit statistics evaluated at a point of the simplex.

use serde::{Deserialize, Serialize};

use crate::domain::{NullModel, SimplexPoint};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    ChiSquared,
}

/// Which statistic a test uses, and whether the envelope kernels may rely on
/// convexity in `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestStatisticSpec {
    kind: StatisticKind,
    convex_in_p: bool,
    /// Lattice resolution used for the envelope when convexity is not declared.
    lattice_fallback: Option<usize>,
}

impl TestStatisticSpec {
    pub fn chi_squared() -> Self {
        TestStatisticSpec {
            kind: StatisticKind::ChiSquared,
            convex_in_p: true,
            lattice_fallback: None,
        }
    }

    /// Statistic treated as a black box: envelopes come from the lattice oracle.
    #[cfg(test)]
    pub(crate) fn opaque(kind: StatisticKind, lattice_fallback: Option<usize>) -> Self {
        TestStatisticSpec {
            kind,
            convex_in_p: false,
            lattice_fallback,
        }
    }

    pub fn kind(&self) -> StatisticKind {
        self.kind
    }

    pub fn convex_in_p(&self) -> bool {
        self.convex_in_p
    }

    pub fn lattice_fallback(&self) -> Option<usize> {
        self.lattice_fallback
    }

    /// Evaluates the statistic on raw slices; dimensions are the caller's problem.
    pub fn eval<F: Real>(&self, p: &[F], p0: &[F], n: F) -> F {
        match self.kind {
            StatisticKind::ChiSquared => chi_squared_raw(p, p0, n),
        }
    }

    /// Per-cell contribution when the statistic has the form
    /// `scale(n) * sum_i cell_term(p_i, p0_i)`, summed left to right from zero.
    /// `eval` and the lattice oracle agree bit for bit through this split.
    pub(crate) fn cell_term<F: Real>(&self, p: F, p0: F) -> Option<F> {
        match self.kind {
            StatisticKind::ChiSquared => {
                let d = p - p0;
                Some(d * d / p0)
            }
        }
    }

    pub(crate) fn scale<F: Real>(&self, n: F) -> F {
        match self.kind {
            StatisticKind::ChiSquared => n,
        }
    }
}

impl Default for TestStatisticSpec {
    fn default() -> Self {
        TestStatisticSpec::chi_squared()
    }
}

/// `sum_i (n p_i - n p0_i)^2 / (n p0_i)`.
pub(crate) fn chi_squared_raw<F: Real>(p: &[F], p0: &[F], n: F) -> F {
    let s = p.iter().zip(p0).fold(F::zero(), |acc, (&pi, &qi)| {
        let d = pi - qi;
        acc + d * d / qi
    });
    n * s
}

/// Pearson chi-squared statistic of `p_hat` against the null at sample size `n`.
pub fn chi_squared_stat<F: Real>(
    p_hat: &SimplexPoint<F>,
    null: &NullModel<F>,
    n: u64,
) -> Result<F> {
    if p_hat.k() != null.k() {
        return Err(Error::DimensionMismatch {
            left: p_hat.k(),
            right: null.k(),
        });
    }
    Ok(chi_squared_raw(
        p_hat.probs(),
        null.probs(),
        F::of(n as f64),
    ))
}
