//! Seeded Gamma / Dirichlet / multinomial generation and posterior polytope draws.
//!
//! Every replicate owns its generator. A [`StreamKey`] selects a ChaCha8 key
//! from the seed and a stream number from the replicate index, so the variates
//! of replicate `b` never depend on which worker evaluates it or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::domain::{CountData, RandomPolytope};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Identifies the variate sequence of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replicate_index: u64,
}

impl StreamKey {
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.replicate_index);
        rng
    }
}

pub fn stream_for(seed: u64, replicate_index: u64) -> StreamKey {
    StreamKey {
        seed,
        replicate_index,
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a child seed from a parent seed and a path of labels.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(splitmix64(seed), |acc, &l| {
        splitmix64(acc ^ splitmix64(l.wrapping_add(0xD134_2543_DE82_EF95)))
    })
}

/// Uniform on the open interval (0, 1).
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

fn gamma_variate<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape == 0.0 {
        return 0.0;
    }
    Gamma::new(shape, 1.0)
        .expect("positive finite shape")
        .sample(rng)
}

/// Normalized independent Gamma draws. Zero concentrations give exact zeros.
pub fn dirichlet_draw_with<R: Rng + ?Sized, F: Real>(
    rng: &mut R,
    concentrations: &[f64],
) -> Result<Vec<F>> {
    check_concentrations(concentrations)?;
    loop {
        let g: Vec<f64> = concentrations
            .iter()
            .map(|&a| gamma_variate(rng, a))
            .collect();
        let s: f64 = g.iter().sum();
        // All-positive-shape draws can underflow together for tiny shapes.
        if s > 0.0 {
            return Ok(g.into_iter().map(|x| F::of(x / s)).collect());
        }
    }
}

pub fn dirichlet_draw<F: Real>(concentrations: &[f64], stream: StreamKey) -> Result<Vec<F>> {
    dirichlet_draw_with(&mut stream.rng(), concentrations)
}

fn check_concentrations(concentrations: &[f64]) -> Result<()> {
    for (index, &value) in concentrations.iter().enumerate() {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::InvalidConcentration { index, value });
        }
    }
    if concentrations.iter().all(|&a| a == 0.0) {
        return Err(Error::ZeroConcentrations);
    }
    Ok(())
}

/// Draws `(Z_0; Z_1..Z_k) ~ Dirichlet(1 + weaken_alpha, n_1, ..., n_k)`.
///
/// The location Gammas are drawn first and the width Gamma is built as
/// `Exp(1) + Q(weaken_alpha, U)` with `Q` the Gamma quantile function. For a
/// fixed stream the location is therefore shared across weakening levels and
/// the width grows monotonically with `weaken_alpha`, which nests the
/// polytopes.
pub fn polytope_draw<F: Real>(
    data: &CountData,
    weaken_alpha: f64,
    stream: StreamKey,
) -> Result<RandomPolytope<F>> {
    polytope_draw_with(&mut stream.rng(), data, weaken_alpha)
}

pub fn polytope_draw_with<R: Rng + ?Sized, F: Real>(
    rng: &mut R,
    data: &CountData,
    weaken_alpha: f64,
) -> Result<RandomPolytope<F>> {
    let location: Vec<f64> = data.counts().iter().map(|&c| c as f64).collect();
    polytope_from_concentrations(rng, &location, weaken_alpha)
}

/// Polytope with `(Z_0; Z) ~ Dirichlet(1 + weaken_alpha, location...)` for
/// real-valued location concentrations.
pub fn polytope_from_concentrations<R: Rng + ?Sized, F: Real>(
    rng: &mut R,
    location: &[f64],
    weaken_alpha: f64,
) -> Result<RandomPolytope<F>> {
    if !(weaken_alpha >= 0.0 && weaken_alpha.is_finite()) {
        return Err(Error::InvalidConcentration {
            index: 0,
            value: 1.0 + weaken_alpha,
        });
    }
    if let Some((i, &v)) = location
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidConcentration {
            index: i + 1,
            value: v,
        });
    }
    let loc: Vec<f64> = location.iter().map(|&a| gamma_variate(rng, a)).collect();
    let mut width = -open_unit(rng).ln();
    if weaken_alpha > 0.0 {
        width += gamma_quantile(weaken_alpha, open_unit(rng));
    }
    let total = width + loc.iter().sum::<f64>();
    let z: Vec<F> = loc.iter().map(|&g| F::of(g / total)).collect();
    RandomPolytope::new(F::of(width / total), z)
}

/// Quantile of Gamma(shape, 1) at `u` in (0, 1): safeguarded Newton on the
/// regularized lower incomplete gamma function.
pub fn gamma_quantile(shape: f64, u: f64) -> f64 {
    assert!(shape > 0.0 && u > 0.0 && u < 1.0);
    let log_norm = ln_gamma(shape);
    let density = |x: f64| ((shape - 1.0) * x.ln() - x - log_norm).exp();

    let mut lo = 0.0;
    let mut hi = shape.max(1.0);
    while gamma_lr(shape, hi) < u {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = if shape < 1.0 {
        (u * (ln_gamma(shape + 1.0)).exp()).powf(1.0 / shape)
    } else {
        // Wilson-Hilferty starting point.
        let z = normal_quantile(u);
        let c = 1.0 / (9.0 * shape);
        shape * (1.0 - c + z * c.sqrt()).powi(3)
    };
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let f = gamma_lr(shape, x) - u;
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = density(x);
        let mut next = if d > 0.0 { x - f / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.max(f64::MIN_POSITIVE) || hi - lo <= 1e-15 * hi {
            return next;
        }
        x = next;
    }
    x
}

fn normal_quantile(u: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(u)
}

/// Multinomial(n, probs) by sequential conditional binomials.
pub fn multinomial_draw<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass_left = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = remaining;
            break;
        }
        let q = (p / mass_left).clamp(0.0, 1.0);
        let x = Binomial::new(remaining, q)
            .expect("probability in [0, 1]")
            .sample(rng);
        out[i] = x;
        remaining -= x;
        mass_left -= p;
    }
    out
}
