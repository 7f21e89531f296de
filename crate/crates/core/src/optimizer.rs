//! Derivative-free minimisation over a box.
//!
//! Nelder-Mead (Lagarias et al. coefficients: reflection 1, expansion 2,
//! contraction 1/2, shrink 1/2) in transformed coordinates. A coordinate with
//! bounds `[lb, ub]` is searched as `z` with
//! `x = lb + (ub - lb) * (sin z + 1) / 2`, so every trial point is feasible.
//! Coordinates with `lb == ub` are held fixed and not searched.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Largest coordinate distance (transformed space) from the best vertex.
    pub x_tol: f64,
    /// Largest objective difference from the best vertex.
    pub f_tol: f64,
    /// Evaluation budget per free dimension.
    pub max_evals_per_dim: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            x_tol: 1e-6,
            f_tol: 1e-6,
            max_evals_per_dim: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// False when the evaluation budget ran out first.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
enum Coord {
    Fixed(f64),
    Free { lb: f64, ub: f64 },
}

impl Coord {
    fn to_x(self, z: f64) -> f64 {
        match self {
            Coord::Fixed(v) => v,
            Coord::Free { lb, ub } => (lb + (ub - lb) * (z.sin() + 1.0) / 2.0).clamp(lb, ub),
        }
    }

    fn to_z(self, x: f64) -> f64 {
        match self {
            Coord::Fixed(_) => 0.0,
            Coord::Free { lb, ub } => {
                let s = (2.0 * (x - lb) / (ub - lb) - 1.0).clamp(-1.0, 1.0);
                2.0 * PI + s.asin()
            }
        }
    }
}

struct Transform {
    coords: Vec<Coord>,
    free: Vec<usize>,
}

impl Transform {
    fn new(lower: &[f64], upper: &[f64]) -> Self {
        let coords: Vec<Coord> = lower
            .iter()
            .zip(upper)
            .map(|(&lb, &ub)| if lb == ub { Coord::Fixed(lb) } else { Coord::Free { lb, ub } })
            .collect();
        let free = coords
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c, Coord::Free { .. }))
            .map(|(i, _)| i)
            .collect();
        Transform { coords, free }
    }

    fn to_x(&self, z: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.coords.iter().map(|c| c.to_x(0.0)).collect();
        for (&i, &zi) in self.free.iter().zip(z) {
            x[i] = self.coords[i].to_x(zi);
        }
        x
    }

    fn to_z(&self, x: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| self.coords[i].to_z(x[i])).collect()
    }
}

/// Minimises `f` over `[lower, upper]` starting from `x0`.
pub fn minimize_bounded<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    tol: &Tolerances,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    if x0.len() != lower.len() || x0.len() != upper.len() {
        return Err(invalid("x0 and bounds differ in length"));
    }
    for ((&x, &lb), &ub) in x0.iter().zip(lower).zip(upper) {
        if !lb.is_finite() || !ub.is_finite() || lb > ub {
            return Err(invalid(format!("invalid bounds [{lb}, {ub}]")));
        }
        if !(lb..=ub).contains(&x) {
            return Err(invalid(format!("start {x} outside [{lb}, {ub}]")));
        }
    }

    let tr = Transform::new(lower, upper);
    let n = tr.free.len();
    let evals = std::cell::Cell::new(0usize);
    let mut eval = |z: &[f64]| {
        let x = tr.to_x(z);
        debug_assert!(x.iter().zip(lower).zip(upper).all(|((v, l), u)| l <= v && v <= u));
        evals.set(evals.get() + 1);
        (f(&x), x)
    };

    if n == 0 {
        let (value, x) = eval(&[]);
        return Ok(Minimum {
            x,
            value,
            evals: 1,
            converged: true,
        });
    }
    let max_evals = tol.max_evals_per_dim.saturating_mul(n).max(n + 1);

    // Initial simplex: perturb each coordinate by 5%, or to 0.00025 if zero.
    let z0 = tr.to_z(x0);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let (v0, _) = eval(&z0);
    simplex.push((z0.clone(), v0));
    for j in 0..n {
        let mut z = z0.clone();
        z[j] = if z[j] != 0.0 { 1.05 * z[j] } else { 0.00025 };
        let (v, _) = eval(&z);
        simplex.push((z, v));
    }
    sort(&mut simplex);

    let mut converged = false;
    loop {
        let best = &simplex[0];
        let f_spread = simplex[1..]
            .iter()
            .map(|(_, v)| (v - best.1).abs())
            .fold(0.0, f64::max);
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(z, _)| z.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= tol.f_tol && x_spread <= tol.x_tol {
            converged = true;
            break;
        }
        if evals.get() >= max_evals {
            break;
        }

        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(z, _)| z[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let zr = along(1.0);
        let (fr, _) = eval(&zr);
        if fr < simplex[0].1 {
            let ze = along(2.0);
            let (fe, _) = eval(&ze);
            simplex[n] = if fe < fr { (ze, fe) } else { (zr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (zr, fr);
        } else {
            let shrink = if fr < worst.1 {
                let zc = along(0.5);
                let (fc, _) = eval(&zc);
                if fc <= fr {
                    simplex[n] = (zc, fc);
                    false
                } else {
                    true
                }
            } else {
                let zcc = along(-0.5);
                let (fcc, _) = eval(&zcc);
                if fcc < worst.1 {
                    simplex[n] = (zcc, fcc);
                    false
                } else {
                    true
                }
            };
            if shrink {
                let z_best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let z: Vec<f64> = z_best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    let (v, _) = eval(&z);
                    *vertex = (z, v);
                }
            }
        }
        sort(&mut simplex);
    }

    let (z, value) = simplex.swap_remove(0);
    Ok(Minimum {
        x: tr.to_x(&z),
        value,
        evals: evals.get(),
        converged,
    })
}

// Stable, so ties keep the earlier vertex in front.
fn sort(simplex: &mut [(Vec<f64>, f64)]) {
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
}
