//! Dempster-Shafer inference for multinomial data.
//!
//! Each observation of counts `(n_1, ..., n_k)` induces posterior random sets:
//! polytopes `{ z + z0 * theta }` with `(z0, z) ~ Dirichlet(1, n_1, ..., n_k)`.
//! Evaluating a goodness-of-fit statistic over each polytope gives lower,
//! mean and upper sampling distributions, and the test reports Reject,
//! Accept or Unknown depending on how the two envelope tails sit relative to
//! the significance level.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod domain;
pub mod dstest;
pub mod envelope;
pub mod error;
pub mod sampling;
pub mod scalar;
pub mod simlab;
pub mod statistic;
pub mod textscreen;

pub use domain::{
    point_estimate, validate_counts, CountData, Decision, EstimatorMode, TailPair, TailReference,
    TestConfig,
};
pub use dstest::{
    decide, ds_test, freq_resampled_test, observed_statistic, tail_probabilities, FrequentistReport,
};
pub use error::{Error, Result};
pub use scalar::Real;
pub use statistic::{chi_squared_stat, StatisticKind, TestStatisticSpec};

pub type NullModel = domain::NullModel<f64>;
pub type SimplexPoint = domain::SimplexPoint<f64>;
pub type RandomPolytope = domain::RandomPolytope<f64>;
pub type EnvelopeTriple = envelope::EnvelopeTriple<f64>;
pub type DecisionReport = dstest::DecisionReport<f64>;
