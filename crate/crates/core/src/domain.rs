//! Domain types shared by the sampler, the envelope kernels and the test engine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{stable_sum, Real};
use crate::statistic::TestStatisticSpec;

/// Observed multinomial cell counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountData {
    counts: Vec<u64>,
    n: u64,
}

impl CountData {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::TooFewCells(counts.len()));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::AllZero);
        }
        Ok(CountData { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }
}

/// Checks raw (possibly negative) integers and builds [`CountData`].
pub fn validate_counts(raw: &[i64]) -> Result<CountData> {
    if raw.len() < 2 {
        return Err(Error::TooFewCells(raw.len()));
    }
    if let Some((index, &value)) = raw.iter().enumerate().find(|(_, &v)| v < 0) {
        return Err(Error::NegativeCount { index, value });
    }
    CountData::new(raw.iter().map(|&v| v as u64).collect())
}

/// Null cell probabilities; every cell strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<F>",
    into = "Vec<F>",
    bound(
        serialize = "F: Real + Serialize",
        deserialize = "F: Real + Deserialize<'de>"
    )
)]
pub struct NullModel<F> {
    p0: Vec<F>,
}

impl<F: Real> TryFrom<Vec<F>> for NullModel<F> {
    type Error = Error;

    fn try_from(p0: Vec<F>) -> Result<Self> {
        NullModel::new(p0)
    }
}

impl<F> From<NullModel<F>> for Vec<F> {
    fn from(m: NullModel<F>) -> Vec<F> {
        m.p0
    }
}

impl<F: Real> NullModel<F> {
    pub fn new(p0: Vec<F>) -> Result<Self> {
        if p0.len() < 2 {
            return Err(Error::TooFewCells(p0.len()));
        }
        for (index, &v) in p0.iter().enumerate() {
            if v.is_nan() || v <= F::zero() || !v.is_finite() {
                return Err(Error::NonPositiveNull {
                    index,
                    value: v.as_f64(),
                });
            }
        }
        let sum = stable_sum(p0.iter().copied());
        if (sum - F::one()).abs() > F::construct_tol() {
            return Err(Error::NotNormalized { sum: sum.as_f64() });
        }
        Ok(NullModel { p0 })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewCells(k));
        }
        let kf = F::from_usize(k).expect("k fits the scalar");
        NullModel::new(vec![F::one() / kf; k])
    }

    /// Normalizes positive weights, e.g. deaths per cause.
    pub fn from_weights(weights: &[F]) -> Result<Self> {
        let total = stable_sum(weights.iter().copied());
        if total.is_nan() || total <= F::zero() {
            return Err(Error::NotNormalized {
                sum: total.as_f64(),
            });
        }
        NullModel::new(weights.iter().map(|&w| w / total).collect())
    }

    pub fn probs(&self) -> &[F] {
        &self.p0
    }

    pub fn k(&self) -> usize {
        self.p0.len()
    }
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint<F> {
    p: Vec<F>,
}

impl<F: Real> SimplexPoint<F> {
    pub fn new(p: Vec<F>) -> Result<Self> {
        Self::with_tol(p, F::construct_tol())
    }

    pub(crate) fn with_tol(p: Vec<F>, tol: F) -> Result<Self> {
        for (index, &v) in p.iter().enumerate() {
            if v < F::zero() || !v.is_finite() {
                return Err(Error::NegativeProbability {
                    index,
                    value: v.as_f64(),
                });
            }
        }
        let sum = stable_sum(p.iter().copied());
        if (sum - F::one()).abs() > tol {
            return Err(Error::NotNormalized { sum: sum.as_f64() });
        }
        Ok(SimplexPoint { p })
    }

    pub fn probs(&self) -> &[F] {
        &self.p
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn into_vec(self) -> Vec<F> {
        self.p
    }
}

/// One posterior random set: the simplex with vertices `z + z0 * e_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomPolytope<F> {
    z0: F,
    z: Vec<F>,
}

impl<F: Real> RandomPolytope<F> {
    pub fn new(z0: F, z: Vec<F>) -> Result<Self> {
        if z.len() < 2 {
            return Err(Error::TooFewCells(z.len()));
        }
        if !(z0 >= F::zero() && z0 <= F::one()) {
            return Err(Error::InvalidPolytope(format!("width {z0} outside [0, 1]")));
        }
        if let Some((i, v)) = z
            .iter()
            .enumerate()
            .find(|(_, v)| v.is_nan() || **v < F::zero())
        {
            return Err(Error::InvalidPolytope(format!("location {i} is {v}")));
        }
        let total = z0 + stable_sum(z.iter().copied());
        if (total - F::one()).abs() > F::construct_tol() {
            return Err(Error::InvalidPolytope(format!("components sum to {total}")));
        }
        Ok(RandomPolytope { z0, z })
    }

    /// Polytope width `Z_0`.
    pub fn width(&self) -> F {
        self.z0
    }

    /// Polytope location `Z_1..Z_k`.
    pub fn location(&self) -> &[F] {
        &self.z
    }

    pub fn k(&self) -> usize {
        self.z.len()
    }
}

/// How the observed counts are turned into a single point of the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorMode {
    /// `(n_i + 1/k) / (n + 1)`, the mean of the polytope centroid.
    #[default]
    Centroid,
    /// `(n_i + 1) / (n + k)`.
    Laplace,
    /// `n_i / n`.
    Mle,
}

impl EstimatorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorMode::Centroid => "centroid",
            EstimatorMode::Laplace => "laplace",
            EstimatorMode::Mle => "mle",
        }
    }
}

impl fmt::Display for EstimatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroid" => Ok(EstimatorMode::Centroid),
            "laplace" => Ok(EstimatorMode::Laplace),
            "mle" => Ok(EstimatorMode::Mle),
            other => Err(Error::InvalidConfig(format!("unknown estimator '{other}'"))),
        }
    }
}

pub fn point_estimate<F: Real>(data: &CountData, mode: EstimatorMode) -> SimplexPoint<F> {
    let k = data.k() as f64;
    let n = data.n() as f64;
    let p: Vec<F> = data
        .counts()
        .iter()
        .map(|&c| {
            let c = c as f64;
            F::of(match mode {
                EstimatorMode::Centroid => (c + 1.0 / k) / (n + 1.0),
                EstimatorMode::Laplace => (c + 1.0) / (n + k),
                EstimatorMode::Mle => c / n,
            })
        })
        .collect();
    SimplexPoint::new(p).expect("estimators are normalized by construction")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Reject,
    Accept,
    Unknown,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Reject => "Reject",
            Decision::Accept => "Accept",
            Decision::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exceedance probabilities of the lower and upper envelope statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPair {
    /// `P(T_lower >= t_obs)`.
    pub q_lower_env: f64,
    /// `P(T_upper >= t_obs)`.
    pub q_upper_env: f64,
}

/// Which random polytopes the envelope tail probabilities are taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailReference {
    /// Polytopes of data sitting exactly at the null:
    /// `Dirichlet(1 + weaken_alpha, n * p0_1, ..., n * p0_k)`.
    #[default]
    Null,
    /// Polytopes of the observed counts: `Dirichlet(1 + weaken_alpha, n_1, ..., n_k)`.
    Observed,
}

impl TailReference {
    pub fn as_str(self) -> &'static str {
        match self {
            TailReference::Null => "null",
            TailReference::Observed => "observed",
        }
    }
}

impl fmt::Display for TailReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TailReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "null" => Ok(TailReference::Null),
            "observed" => Ok(TailReference::Observed),
            other => Err(Error::InvalidConfig(format!(
                "unknown tail reference '{other}'"
            ))),
        }
    }
}

/// Configuration of one DS test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    /// Number of polytope draws.
    pub replicates: usize,
    /// Extra mass on the width concentration; 0 disables weakening.
    pub weaken_alpha: f64,
    pub estimator: EstimatorMode,
    pub seed: u64,
    pub statistic: TestStatisticSpec,
    pub reference: TailReference,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            alpha: 0.05,
            replicates: 1000,
            weaken_alpha: 0.0,
            estimator: EstimatorMode::Centroid,
            seed: 0,
            statistic: TestStatisticSpec::chi_squared(),
            reference: TailReference::Null,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha {} not in (0, 1)",
                self.alpha
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be >= 1".into()));
        }
        if !(self.weaken_alpha >= 0.0 && self.weaken_alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "weakening {} must be a finite nonnegative number",
                self.weaken_alpha
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn validate_counts_examples() {
        let d = validate_counts(&[3, 2, 5]).unwrap();
        assert_eq!((d.k(), d.n()), (3, 10));
        let d = validate_counts(&[1, 0]).unwrap();
        assert_eq!((d.k(), d.n()), (2, 1));
        assert_eq!(
            validate_counts(&[-1, 2]),
            Err(Error::NegativeCount {
                index: 0,
                value: -1
            })
        );
        assert_eq!(validate_counts(&[4]), Err(Error::TooFewCells(1)));
        assert_eq!(validate_counts(&[0, 0, 0]), Err(Error::AllZero));
    }

    #[test]
    fn point_estimates() {
        let d = validate_counts(&[3, 2, 5]).unwrap();
        let lap = point_estimate::<f64>(&d, EstimatorMode::Laplace);
        for (a, b) in lap.probs().iter().zip([4.0 / 13.0, 3.0 / 13.0, 6.0 / 13.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        let cen = point_estimate::<f64>(&d, EstimatorMode::Centroid);
        for (a, b) in cen
            .probs()
            .iter()
            .zip([10.0 / 33.0, 7.0 / 33.0, 16.0 / 33.0])
        {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        let d = validate_counts(&[0, 0, 4]).unwrap();
        assert_eq!(
            point_estimate::<f64>(&d, EstimatorMode::Mle).probs(),
            &[0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn point_estimate_in_f32() {
        let d = validate_counts(&[3, 2, 5]).unwrap();
        let p = point_estimate::<f32>(&d, EstimatorMode::Laplace);
        assert!((p.probs()[0] - 4.0 / 13.0).abs() < 1e-7);
    }

    #[test]
    fn null_model_validation() {
        assert!(NullModel::<f64>::new(vec![0.7, 0.2]).is_err());
        assert!(NullModel::<f64>::new(vec![1.0, 0.0]).is_err());
        assert!(NullModel::<f64>::new(vec![0.25; 4]).is_ok());
        let m = NullModel::<f64>::from_weights(&[1.0, 3.0]).unwrap();
        assert_eq!(m.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn polytope_validation() {
        assert!(RandomPolytope::new(0.2, vec![0.3, 0.2, 0.3]).is_ok());
        assert!(RandomPolytope::new(0.2, vec![0.3, 0.2, 0.2]).is_err());
        assert!(RandomPolytope::new(-0.1, vec![0.6, 0.5]).is_err());
        assert!(RandomPolytope::new(1.0, vec![0.0, 0.0]).is_ok());
    }

    #[test]
    fn config_validation() {
        let mut c = TestConfig::default();
        assert!(c.validate().is_ok());
        c.alpha = 1.0;
        assert!(c.validate().is_err());
        c = TestConfig {
            replicates: 0,
            ..TestConfig::default()
        };
        assert!(c.validate().is_err());
        c = TestConfig {
            weaken_alpha: -1.0,
            ..TestConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
