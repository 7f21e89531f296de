//! Empirical moments of colour fields and closed-form moments of the
//! neighbour-confined models.

use serde::{Deserialize, Serialize};

use crate::engine::Counts;
use crate::error::{invalid, Error, Result};
use crate::lattice::{Lattice, Sublattice};
use crate::percolation::{check_probability, ColourField};

/// Per-colour vertex means and adjacent-pair means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    /// Fraction of vertices carrying colour `l`.
    pub ybar: Vec<f64>,
    /// Fraction of adjacent pairs whose endpoints both carry colour `l`.
    pub zbar: Vec<f64>,
    pub n_vertices: usize,
    pub n_pairs: usize,
}

impl MomentVector {
    pub fn n_colours(&self) -> usize {
        self.ybar.len()
    }

    /// `(ybar_1, ..., ybar_nc, zbar_1, ..., zbar_nc)`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.ybar.iter().chain(&self.zbar).copied().collect()
    }

    /// Average of several replicates' counts on the same lattice.
    pub fn from_counts(counts: &[Counts], n_vertices: usize, n_pairs: usize) -> Self {
        let nc = counts.first().map_or(0, |c| c.y.len());
        let reps = counts.len() as f64;
        let mut ysum = vec![0u64; nc];
        let mut zsum = vec![0u64; nc];
        for c in counts {
            for l in 0..nc {
                ysum[l] += c.y[l];
                zsum[l] += c.z[l];
            }
        }
        MomentVector {
            ybar: ysum.iter().map(|&s| s as f64 / (reps * n_vertices as f64)).collect(),
            zbar: zsum.iter().map(|&s| s as f64 / (reps * n_pairs as f64)).collect(),
            n_vertices,
            n_pairs,
        }
    }
}

/// Colour means over all vertices and over all adjacent pairs of the field's lattice.
pub fn empirical_moments(field: &ColourField) -> Result<MomentVector> {
    let lat = &field.lattice;
    if lat.n_edges() == 0 {
        return Err(Error::DegenerateLattice(format!(
            "a {}x{} lattice has no adjacent pairs",
            lat.rows(),
            lat.cols()
        )));
    }
    let nc = field.n_colours;
    let mut y = vec![0u64; nc];
    let mut z = vec![0u64; nc];
    for (l, (ys, zs)) in y.iter_mut().zip(z.iter_mut()).enumerate() {
        *ys = field.masks.iter().filter(|&&m| m >> l & 1 == 1).count() as u64;
        *zs = lat
            .edges()
            .iter()
            .filter(|&&(i, j)| (field.masks[i as usize] & field.masks[j as usize]) >> l & 1 == 1)
            .count() as u64;
    }
    Ok(MomentVector::from_counts(
        &[Counts { y, z }],
        lat.n_vertices(),
        lat.n_edges(),
    ))
}

/// Moments restricted to `sub`: vertices inside it, and pairs with both
/// endpoints inside it.
pub fn sublattice_moments(field: &ColourField, sub: &Sublattice) -> Result<MomentVector> {
    let lat: &Lattice = &field.lattice;
    sub.validate_against(lat)?;
    let nc = field.n_colours;
    let mut y = vec![0u64; nc];
    let mut z = vec![0u64; nc];
    let mut n_pairs = 0usize;
    for v in sub.vertices() {
        let m = field.masks[v];
        for (l, c) in y.iter_mut().enumerate() {
            *c += u64::from(m >> l & 1);
        }
        for w in lat.forward_neighbors(v) {
            let w = w as usize;
            if sub.contains(lat, w) {
                n_pairs += 1;
                let both = m & field.masks[w];
                for (l, c) in z.iter_mut().enumerate() {
                    *c += u64::from(both >> l & 1);
                }
            }
        }
    }
    if n_pairs == 0 {
        return Err(Error::DegenerateLattice("sublattice has no internal pairs".into()));
    }
    Ok(MomentVector::from_counts(
        &[Counts { y, z }],
        sub.n_vertices(),
        n_pairs,
    ))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_degree(degree: usize) -> Result<()> {
    if degree == 0 {
        return Err(invalid("degree must be positive"));
    }
    Ok(())
}

/// `sum_{k=1}^{deg} C(deg,k) mu^k (1-mu)^(deg-k) g(k)`.
fn open_neighbour_sum(mu: f64, degree: usize, g: impl Fn(i32) -> f64) -> f64 {
    (1..=degree)
        .map(|k| {
            binomial(degree, k)
                * mu.powi(k as i32)
                * (1.0 - mu).powi((degree - k) as i32)
                * g(k as i32)
        })
        .sum()
}

/// `E[Y_i^l]` at an interior vertex of the neighbour-confined model.
pub fn confined_first_moment(lambda: f64, mu: f64, degree: usize) -> Result<f64> {
    check_probability("lambda", lambda)?;
    check_probability("mu", mu)?;
    check_degree(degree)?;
    let reach = open_neighbour_sum(mu, degree, |k| 1.0 - (1.0 - lambda).powi(k));
    Ok(lambda + (1.0 - lambda) * reach)
}

/// `E[Y_i^l Y_i^m]`, `l != m`, at an interior vertex of the neighbour-confined model.
pub fn confined_cross_colour_moment(
    lambda_l: f64,
    lambda_m: f64,
    mu: f64,
    degree: usize,
) -> Result<f64> {
    check_probability("lambda_l", lambda_l)?;
    check_probability("lambda_m", lambda_m)?;
    check_probability("mu", mu)?;
    check_degree(degree)?;
    let hit = |lam: f64, k: i32| 1.0 - (1.0 - lam).powi(k);
    let both_seeded = lambda_l * lambda_m;
    let only_l = lambda_l * (1.0 - lambda_m) * open_neighbour_sum(mu, degree, |k| hit(lambda_m, k));
    let only_m = (1.0 - lambda_l) * lambda_m * open_neighbour_sum(mu, degree, |k| hit(lambda_l, k));
    let neither = (1.0 - lambda_l)
        * (1.0 - lambda_m)
        * open_neighbour_sum(mu, degree, |k| hit(lambda_l, k) * hit(lambda_m, k));
    Ok(both_seeded + only_l + only_m + neither)
}

/// Largest `lambda` or `mu` accepted by the truncated series.
pub const SERIES_ENVELOPE: f64 = 0.2;

fn check_envelope(values: &[(&str, f64)]) -> Result<()> {
    for &(name, x) in values {
        check_probability(name, x)?;
        if x > SERIES_ENVELOPE {
            return Err(Error::DomainWarning(format!(
                "{name} = {x} exceeds the series envelope [0, {SERIES_ENVELOPE}]"
            )));
        }
    }
    Ok(())
}

/// Truncation of `E[Y_i^l Y_j^l]` (`i ~ j`, triangular interior) through
/// fourth order; the remainder is fifth order in `max(lambda, mu)`.
pub fn confined_pair_moment(lambda: f64, mu: f64) -> Result<f64> {
    check_envelope(&[("lambda", lambda), ("mu", mu)])?;
    let (l, m) = (lambda, mu);
    Ok(l * l + 2.0 * l * m + 8.0 * l * l * m + 2.0 * l * m * m - 10.0 * l.powi(3) * m
        + 9.0 * l * l * m * m)
}

/// Fourth-order truncation of [`confined_first_moment`] for degree 6.
pub fn confined_first_moment_series(lambda: f64, mu: f64) -> Result<f64> {
    check_envelope(&[("lambda", lambda), ("mu", mu)])?;
    let (l, m) = (lambda, mu);
    Ok(l + 6.0 * l * m - 6.0 * l * l * m - 15.0 * l * l * m * m)
}

/// Fourth-order truncation of [`confined_cross_colour_moment`] for degree 6.
pub fn confined_cross_colour_series(lambda_l: f64, lambda_m: f64, mu: f64) -> Result<f64> {
    check_envelope(&[("lambda_l", lambda_l), ("lambda_m", lambda_m), ("mu", mu)])?;
    let (a, b, m) = (lambda_l, lambda_m, mu);
    Ok(a * b + 18.0 * a * b * m - 12.0 * (a * a * b + a * b * b) * m + 30.0 * a * b * m * m)
}

fn check_subunit(mu: f64) -> Result<()> {
    if !(0.0..1.0).contains(&mu) {
        return Err(invalid(format!("mu = {mu} must lie in [0, 1)")));
    }
    Ok(())
}

/// Upper bound `2 mu n_p` on the expected number of vertices in clusters of
/// size at least two.
pub fn contaminated_count_bound(mu: f64, lat: &Lattice) -> Result<f64> {
    check_subunit(mu)?;
    Ok(2.0 * mu * lat.n_edges() as f64)
}

/// `n_I (1 - (1 - mu)^deg)` with the interior degree of the lattice kind;
/// ignores the boundary correction, so it is biased high near free edges.
pub fn contaminated_count_interior(mu: f64, lat: &Lattice) -> Result<f64> {
    check_subunit(mu)?;
    let deg = lat.kind().interior_degree() as i32;
    Ok(lat.n_vertices() as f64 * (1.0 - (1.0 - mu).powi(deg)))
}
