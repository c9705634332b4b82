//! Lower, mean and upper statistics over one random polytope.
//!
//! A polytope is `{ z + z0 * theta : theta in the unit simplex }`. For a
//! statistic convex in `p` the supremum sits at one of the `k` vertices, and
//! for the chi-squared statistic the infimum is a weighted projection of the
//! null onto the polytope, solved exactly by a sorted threshold search.

use serde::{Deserialize, Serialize};

use crate::domain::{NullModel, RandomPolytope, SimplexPoint};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::statistic::{StatisticKind, TestStatisticSpec};

/// Per-draw envelope values, `t_lower <= t_mean <= t_upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeTriple<F> {
    pub t_lower: F,
    pub t_mean: F,
    pub t_upper: F,
}

/// Largest `k` accepted by [`brute_force_envelope`].
pub const LATTICE_MAX_K: usize = 6;

pub fn vertices<F: Real>(poly: &RandomPolytope<F>) -> Vec<SimplexPoint<F>> {
    (0..poly.k())
        .map(|j| {
            SimplexPoint::with_tol(vertex(poly, j), F::check_tol())
                .expect("vertex lies on the simplex")
        })
        .collect()
}

fn vertex<F: Real>(poly: &RandomPolytope<F>, j: usize) -> Vec<F> {
    let mut v = poly.location().to_vec();
    v[j] = v[j] + poly.width();
    v
}

pub fn centroid<F: Real>(poly: &RandomPolytope<F>) -> SimplexPoint<F> {
    SimplexPoint::with_tol(centroid_raw(poly), F::check_tol())
        .expect("centroid lies on the simplex")
}

fn centroid_raw<F: Real>(poly: &RandomPolytope<F>) -> Vec<F> {
    let share = poly.width() / F::from_usize(poly.k()).expect("k fits the scalar");
    poly.location().iter().map(|&z| z + share).collect()
}

/// `p` is in the polytope iff `p_i >= z_i` for every cell (up to 1e-12).
pub fn contains<F: Real>(poly: &RandomPolytope<F>, p: &[F]) -> bool {
    assert_eq!(poly.k(), p.len(), "dimension mismatch");
    let tol = F::construct_tol();
    p.iter()
        .zip(poly.location())
        .all(|(&pi, &zi)| pi >= zi - tol)
}

fn check_dims<F: Real>(poly: &RandomPolytope<F>, null: &NullModel<F>) -> Result<()> {
    if poly.k() != null.k() {
        return Err(Error::DimensionMismatch {
            left: poly.k(),
            right: null.k(),
        });
    }
    Ok(())
}

fn as_scalar<F: Real>(n: u64) -> F {
    F::of(n as f64)
}

pub fn upper_stat<F: Real>(
    poly: &RandomPolytope<F>,
    null: &NullModel<F>,
    n: u64,
    spec: &TestStatisticSpec,
) -> Result<F> {
    check_dims(poly, null)?;
    if !spec.convex_in_p() {
        return lattice_fallback(poly, null, n, spec).map(|(_, hi)| hi);
    }
    let nf = as_scalar::<F>(n);
    let p0 = null.probs();
    let candidates: Vec<usize> = match spec.kind() {
        // Screen vertices with the O(1) change in the weighted sum of squares,
        // then evaluate the near-best ones directly so the result is the exact
        // maximum of the vertex values.
        StatisticKind::ChiSquared => {
            let z0 = poly.width();
            let two = F::of(2.0);
            let gains: Vec<F> = poly
                .location()
                .iter()
                .zip(p0)
                .map(|(&z, &q)| z0 * (two * (z - q) + z0) / q)
                .collect();
            let best = gains.iter().copied().fold(F::neg_infinity(), F::max);
            let base = poly
                .location()
                .iter()
                .zip(p0)
                .fold(F::zero(), |acc, (&z, &q)| acc + (z - q) * (z - q) / q);
            let slack = F::of(1e-9) * (base.abs() + best.abs() + F::one());
            (0..poly.k())
                .filter(|&j| gains[j] >= best - slack)
                .collect()
        }
    };
    Ok(candidates
        .into_iter()
        .map(|j| spec.eval(&vertex(poly, j), p0, nf))
        .fold(F::neg_infinity(), F::max))
}

pub fn lower_stat<F: Real>(
    poly: &RandomPolytope<F>,
    null: &NullModel<F>,
    n: u64,
    spec: &TestStatisticSpec,
) -> Result<F> {
    check_dims(poly, null)?;
    if !spec.convex_in_p() {
        return lattice_fallback(poly, null, n, spec).map(|(lo, _)| lo);
    }
    let p0 = null.probs();
    if contains(poly, p0) {
        return Ok(F::zero());
    }
    let nf = as_scalar::<F>(n);
    if poly.width() == F::zero() {
        return Ok(spec.eval(poly.location(), p0, nf));
    }
    let p = match spec.kind() {
        StatisticKind::ChiSquared => weighted_projection(poly, p0),
    };
    Ok(spec.eval(&p, p0, nf))
}

/// Minimizer of `sum_i (p_i - p0_i)^2 / p0_i` over the polytope.
///
/// The optimum is `p_i = max(z_i, r * p0_i)` for the unique `r` making it sum
/// to one. Cells enter the free set in increasing order of `z_i / p0_i`.
fn weighted_projection<F: Real>(poly: &RandomPolytope<F>, p0: &[F]) -> Vec<F> {
    let z = poly.location();
    let k = z.len();
    let ratio: Vec<F> = z.iter().zip(p0).map(|(&zi, &qi)| zi / qi).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| ratio[a].partial_cmp(&ratio[b]).expect("finite ratios"));

    let mut free_z = poly.width();
    let mut free_p0 = F::zero();
    let mut r = F::zero();
    for (m, &i) in order.iter().enumerate() {
        free_z = free_z + z[i];
        free_p0 = free_p0 + p0[i];
        r = free_z / free_p0;
        if m + 1 == k || r <= ratio[order[m + 1]] {
            break;
        }
    }
    z.iter().zip(p0).map(|(&zi, &qi)| zi.max(r * qi)).collect()
}

pub fn mean_stat<F: Real>(
    poly: &RandomPolytope<F>,
    null: &NullModel<F>,
    n: u64,
    spec: &TestStatisticSpec,
) -> Result<F> {
    check_dims(poly, null)?;
    Ok(spec.eval(&centroid_raw(poly), null.probs(), as_scalar(n)))
}

pub fn envelope<F: Real>(
    poly: &RandomPolytope<F>,
    null: &NullModel<F>,
    n: u64,
    spec: &TestStatisticSpec,
) -> Result<EnvelopeTriple<F>> {
    if !spec.convex_in_p() {
        check_dims(poly, null)?;
        let (lo, hi) = lattice_fallback(poly, null, n, spec)?;
        return Ok(EnvelopeTriple {
            t_lower: lo,
            t_mean: mean_stat(poly, null, n, spec)?,
            t_upper: hi,
        });
    }
    Ok(EnvelopeTriple {
        t_lower: lower_stat(poly, null, n, spec)?,
        t_mean: mean_stat(poly, null, n, spec)?,
        t_upper: upper_stat(poly, null, n, spec)?,
    })
}

fn lattice_fallback<F: Real>(
    poly: &RandomPolytope<F>,
    null: &NullModel<F>,
    n: u64,
    spec: &TestStatisticSpec,
) -> Result<(F, F)> {
    let resolution = spec.lattice_fallback().ok_or(Error::NonConvexStatistic)?;
    brute_force_envelope(poly, null, n, spec, resolution)
}

/// Min and max of the statistic over the lattice `theta_i = m_i / resolution`,
/// `sum m_i = resolution`. Exact over the whole lattice. Intended as a test
/// oracle.
pub fn brute_force_envelope<F: Real>(
    poly: &RandomPolytope<F>,
    null: &NullModel<F>,
    n: u64,
    spec: &TestStatisticSpec,
    resolution: usize,
) -> Result<(F, F)> {
    check_dims(poly, null)?;
    let k = poly.k();
    if k > LATTICE_MAX_K {
        return Err(Error::LatticeTooLarge {
            k,
            max: LATTICE_MAX_K,
        });
    }
    if resolution == 0 {
        return Err(Error::InvalidConfig(
            "lattice resolution must be >= 1".into(),
        ));
    }
    let nf = as_scalar::<F>(n);
    let p0 = null.probs();
    let res = F::from_usize(resolution).expect("resolution fits the scalar");
    let coord =
        |i: usize, m: usize| poly.location()[i] + poly.width() * (F::from_usize(m).unwrap() / res);

    // Separable statistics: per-cell tables and an exact dynamic program.
    let separable = (0..k).all(|i| spec.cell_term(coord(i, 0), p0[i]).is_some());
    if separable {
        let tables: Vec<Vec<F>> = (0..k)
            .map(|i| {
                (0..=resolution)
                    .map(|m| spec.cell_term(coord(i, m), p0[i]).unwrap())
                    .collect()
            })
            .collect();
        let lo = lattice_extreme(&tables, resolution, F::min, F::infinity());
        let hi = lattice_extreme(&tables, resolution, F::max, F::neg_infinity());
        let scale = spec.scale(nf);
        return Ok((scale * lo, scale * hi));
    }

    let mut lo = F::infinity();
    let mut hi = F::neg_infinity();
    let mut m = vec![0usize; k];
    let mut p = vec![F::zero(); k];
    loop {
        let used: usize = m[..k - 1].iter().sum();
        if used <= resolution {
            m[k - 1] = resolution - used;
            for i in 0..k {
                p[i] = coord(i, m[i]);
            }
            let t = spec.eval(&p, p0, nf);
            lo = lo.min(t);
            hi = hi.max(t);
        }
        // Odometer over the first k - 1 coordinates.
        let mut i = 0;
        loop {
            if i == k - 1 {
                return Ok((lo, hi));
            }
            m[i] += 1;
            if m[..k - 1].iter().sum::<usize>() <= resolution {
                break;
            }
            m[i] = 0;
            i += 1;
        }
    }
}

/// Exact optimum of `sum_i tables[i][m_i]` over `sum_i m_i = resolution`.
/// Forward dynamic program over (cell, budget used): partial sums are built
/// left to right from zero, and rounded addition is monotone, so the result
/// is bit-identical to the best direct evaluation.
fn lattice_extreme<F: Real>(
    tables: &[Vec<F>],
    resolution: usize,
    better: fn(F, F) -> F,
    worst: F,
) -> F {
    let mut best = vec![worst; resolution + 1];
    for (m, slot) in best.iter_mut().enumerate() {
        *slot = F::zero() + tables[0][m];
    }
    for table in &tables[1..] {
        let mut next = vec![worst; resolution + 1];
        for (used, &partial) in best.iter().enumerate() {
            for (m, &term) in table[..=resolution - used].iter().enumerate() {
                next[used + m] = better(next[used + m], partial + term);
            }
        }
        best = next;
    }
    best[resolution]
}
