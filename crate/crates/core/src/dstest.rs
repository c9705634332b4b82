//! The three-way DS test: tail probabilities of the envelope statistics,
//! the Reject / Accept / Unknown rule, and a resampled frequentist baseline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    point_estimate, CountData, Decision, NullModel, SimplexPoint, TailPair, TailReference,
    TestConfig,
};
use crate::envelope::envelope;
use crate::error::{Error, Result};
use crate::sampling::{derive_seed, multinomial_draw, polytope_from_concentrations, stream_for};
use crate::scalar::Real;
use crate::EstimatorMode;

const FREQ_STREAM: u64 = 0x6672_6571;

/// Result of one DS test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport<F> {
    pub tails: TailPair,
    pub decision: Decision,
    pub t_obs: F,
    pub point_estimate: SimplexPoint<F>,
    pub config: TestConfig,
    /// Belief that the statistic falls below the observed value: `1 - q_upper_env`.
    pub belief: f64,
    /// Plausibility of the same event: `1 - q_lower_env`.
    pub plausibility: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub lower_exceedances: u64,
    pub upper_exceedances: u64,
    pub replicates: u64,
    /// Polytope draws whose lower statistic is zero (the null lies inside).
    pub null_inside: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequentistReport {
    pub p_value: f64,
    pub t_obs: f64,
    pub resamples: usize,
}

fn check_inputs<F: Real>(data: &CountData, null: &NullModel<F>) -> Result<()> {
    if data.k() != null.k() {
        return Err(Error::DimensionMismatch {
            left: data.k(),
            right: null.k(),
        });
    }
    Ok(())
}

pub fn observed_statistic<F: Real>(
    data: &CountData,
    null: &NullModel<F>,
    config: &TestConfig,
) -> Result<F> {
    check_inputs(data, null)?;
    let p_hat = point_estimate::<F>(data, config.estimator);
    Ok(config
        .statistic
        .eval(p_hat.probs(), null.probs(), F::of(data.n() as f64)))
}

fn exceedance_counts<F: Real>(
    data: &CountData,
    null: &NullModel<F>,
    config: &TestConfig,
    t_obs: F,
) -> Result<Diagnostics> {
    let location: Vec<f64> = match config.reference {
        TailReference::Null => {
            let n = data.n() as f64;
            null.probs().iter().map(|&q| n * q.as_f64()).collect()
        }
        TailReference::Observed => data.counts().iter().map(|&c| c as f64).collect(),
    };
    let counts = (0..config.replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_for(config.seed, b).rng();
            let poly =
                polytope_from_concentrations::<_, F>(&mut rng, &location, config.weaken_alpha)?;
            let env = envelope(&poly, null, data.n(), &config.statistic)?;
            Ok::<_, Error>([
                (env.t_lower >= t_obs) as u64,
                (env.t_upper >= t_obs) as u64,
                (env.t_lower == F::zero()) as u64,
            ])
        })
        .try_reduce(
            || [0u64; 3],
            |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2]]),
        )?;
    Ok(Diagnostics {
        lower_exceedances: counts[0],
        upper_exceedances: counts[1],
        replicates: config.replicates as u64,
        null_inside: counts[2],
    })
}

fn tails_of(d: &Diagnostics) -> TailPair {
    let b = d.replicates as f64;
    TailPair {
        q_lower_env: d.lower_exceedances as f64 / b,
        q_upper_env: d.upper_exceedances as f64 / b,
    }
}

/// Fractions of polytope draws whose lower / upper statistic reaches `t_obs`.
/// Both come from the same draws, so `q_lower_env <= q_upper_env`.
pub fn tail_probabilities<F: Real>(
    data: &CountData,
    null: &NullModel<F>,
    config: &TestConfig,
) -> Result<TailPair> {
    config.validate()?;
    let t_obs = observed_statistic(data, null, config)?;
    Ok(tails_of(&exceedance_counts(data, null, config, t_obs)?))
}

/// Reject if `q_upper_env <= alpha`, Accept if `q_lower_env > alpha`, otherwise Unknown.
pub fn decide(tails: TailPair, alpha: f64) -> Decision {
    if tails.q_upper_env <= alpha {
        Decision::Reject
    } else if tails.q_lower_env > alpha {
        Decision::Accept
    } else {
        Decision::Unknown
    }
}

pub fn ds_test<F: Real>(
    data: &CountData,
    null: &NullModel<F>,
    config: &TestConfig,
) -> Result<DecisionReport<F>> {
    config.validate()?;
    check_inputs(data, null)?;
    let point_estimate = point_estimate::<F>(data, config.estimator);
    let t_obs = config
        .statistic
        .eval(point_estimate.probs(), null.probs(), F::of(data.n() as f64));
    let diagnostics = exceedance_counts(data, null, config, t_obs)?;
    let tails = tails_of(&diagnostics);
    Ok(DecisionReport {
        tails,
        decision: decide(tails, config.alpha),
        t_obs,
        point_estimate,
        config: config.clone(),
        belief: 1.0 - tails.q_upper_env,
        plausibility: 1.0 - tails.q_lower_env,
        diagnostics,
    })
}

/// Monte-Carlo p-value of the statistic under multinomial sampling from the
/// null, with the plus-one correction.
pub fn freq_resampled_test(
    data: &CountData,
    null: &NullModel<f64>,
    resamples: usize,
    seed: u64,
    estimator: EstimatorMode,
) -> Result<FrequentistReport> {
    check_inputs(data, null)?;
    if resamples == 0 {
        return Err(Error::InvalidConfig("resamples must be >= 1".into()));
    }
    let config = TestConfig {
        estimator,
        ..TestConfig::default()
    };
    let t_obs: f64 = observed_statistic(data, null, &config)?;
    let stream_seed = derive_seed(seed, &[FREQ_STREAM]);
    let exceed: u64 = (0..resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_for(stream_seed, r).rng();
            let sim = CountData::new(multinomial_draw(&mut rng, data.n(), null.probs()))
                .expect("a multinomial draw keeps k and n");
            let t: f64 = observed_statistic(&sim, null, &config).expect("dimensions checked");
            (t >= t_obs) as u64
        })
        .sum();
    Ok(FrequentistReport {
        p_value: (1 + exceed) as f64 / (resamples + 1) as f64,
        t_obs,
        resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_counts;

    #[test]
    fn decide_examples() {
        let t = |l, u| TailPair {
            q_lower_env: l,
            q_upper_env: u,
        };
        assert_eq!(decide(t(0.034, 0.12), 0.05), Decision::Unknown);
        assert_eq!(decide(t(0.0003, 0.0008), 0.05), Decision::Reject);
        assert_eq!(decide(t(0.2, 0.6), 0.05), Decision::Accept);
        assert_eq!(decide(t(0.05, 0.05), 0.05), Decision::Reject);
    }

    #[test]
    fn observed_statistic_examples() {
        let null = NullModel::<f64>::uniform(3).unwrap();
        let cfg = TestConfig {
            estimator: EstimatorMode::Laplace,
            ..TestConfig::default()
        };
        let t = observed_statistic(&validate_counts(&[3, 2, 5]).unwrap(), &null, &cfg).unwrap();
        assert!((t - 0.828402366863905).abs() < 1e-12);
        let big =
            observed_statistic(&validate_counts(&[30, 20, 50]).unwrap(), &null, &cfg).unwrap();
        let p: [f64; 3] = [31.0 / 103.0, 21.0 / 103.0, 51.0 / 103.0];
        let oracle: f64 = p
            .iter()
            .map(|x| (100.0 * x - 100.0 / 3.0).powi(2) / (100.0 / 3.0))
            .sum();
        assert!((big - oracle).abs() < 1e-10);
    }

    #[test]
    fn observed_statistic_vanishes_with_centroid_on_proportional_data() {
        let null = NullModel::<f64>::new(vec![0.25, 0.25, 0.5]).unwrap();
        let cfg = TestConfig::default();
        let mut prev = f64::INFINITY;
        for scale in [4u64, 40, 400, 4000, 40000] {
            let d = CountData::new(vec![scale, scale, 2 * scale]).unwrap();
            let t: f64 = observed_statistic(&d, &null, &cfg).unwrap();
            assert!(t < prev);
            prev = t;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn zero_observed_statistic_gives_full_upper_tail() {
        let null = NullModel::<f64>::uniform(2).unwrap();
        let d = CountData::new(vec![5, 5]).unwrap();
        let cfg = TestConfig {
            estimator: EstimatorMode::Mle,
            replicates: 200,
            ..TestConfig::default()
        };
        let tails = tail_probabilities(&d, &null, &cfg).unwrap();
        assert_eq!(tails.q_upper_env, 1.0);
    }

    #[test]
    fn freq_p_value_bounds() {
        let null = NullModel::<f64>::uniform(4).unwrap();
        let d = CountData::new(vec![250, 250, 250, 250]).unwrap();
        let r = freq_resampled_test(&d, &null, 500, 3, EstimatorMode::Centroid).unwrap();
        assert!(r.p_value > 0.9 && r.p_value <= 1.0);
        let d = CountData::new(vec![30, 20, 50]).unwrap();
        let null = NullModel::<f64>::uniform(3).unwrap();
        let r = freq_resampled_test(&d, &null, 10_000, 3, EstimatorMode::Centroid).unwrap();
        assert!(r.p_value < 0.02 && r.p_value > 0.0);
    }

    #[test]
    fn mismatched_dimensions() {
        let null = NullModel::<f64>::uniform(4).unwrap();
        let d = validate_counts(&[3, 2, 5]).unwrap();
        assert!(matches!(
            ds_test(&d, &null, &TestConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
