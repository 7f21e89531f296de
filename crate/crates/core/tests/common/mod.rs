#![allow(dead_code)]

use std::collections::VecDeque;

use coloured_percolation::lattice::Lattice;

/// Neumaier-compensated sum.
#[derive(Default)]
pub struct Sum(f64, f64);

impl Sum {
    pub fn add(&mut self, x: f64) {
        let t = self.0 + x;
        if self.0.abs() >= x.abs() {
            self.1 += (self.0 - t) + x;
        } else {
            self.1 += (x - t) + self.0;
        }
        self.0 = t;
    }

    pub fn value(&self) -> f64 {
        self.0 + self.1
    }
}

fn bern(p: f64, bit: u64) -> f64 {
    if bit == 1 {
        p
    } else {
        1.0 - p
    }
}

/// Colour masks after flooding every seed through its open component, by
/// breadth-first search on an adjacency list built from scratch.
pub fn flood_fill(lat: &Lattice, seeds: &[u32], open: &[bool]) -> Vec<u32> {
    let n = lat.n_vertices();
    let mut adj = vec![Vec::new(); n];
    for (&(i, j), &o) in lat.edges().iter().zip(open) {
        if o {
            adj[i as usize].push(j as usize);
            adj[j as usize].push(i as usize);
        }
    }
    let mut out = seeds.to_vec();
    for src in 0..n {
        if seeds[src] == 0 {
            continue;
        }
        let mut seen = vec![false; n];
        let mut q = VecDeque::from([src]);
        seen[src] = true;
        while let Some(v) = q.pop_front() {
            out[v] |= seeds[src];
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
    }
    out
}

/// Exhaustive enumeration around one vertex of degree `deg` in the
/// neighbour-confined model: returns (E[Y^l], E[Y^l Y^m]) for seed
/// probabilities `la`, `lb` and edge probability `mu`.
pub fn vertex_enumeration(la: f64, lb: f64, mu: f64, deg: usize) -> (f64, f64) {
    let bits = 2 + 3 * deg;
    let (mut first, mut cross) = (Sum::default(), Sum::default());
    for state in 0u64..1 << bits {
        let b = |k: usize| state >> k & 1;
        let mut p = bern(la, b(0)) * bern(lb, b(1));
        let (mut yl, mut ym) = (b(0), b(1));
        for k in 0..deg {
            let (sa, sb, e) = (b(2 + 3 * k), b(3 + 3 * k), b(4 + 3 * k));
            p *= bern(la, sa) * bern(lb, sb) * bern(mu, e);
            yl |= sa & e;
            ym |= sb & e;
        }
        first.add(p * yl as f64);
        cross.add(p * (yl & ym) as f64);
    }
    (first.value(), cross.value())
}

/// E[Y_i Y_j] for adjacent interior vertices of the triangular lattice in the
/// neighbour-confined model, by enumerating the ten vertices and eleven edges
/// that can reach `i` or `j`.
pub fn pair_enumeration(l: f64, m: f64) -> f64 {
    // vertices: 0 = i, 1 = j, 2-3 shared neighbours, 4-6 only next to i, 7-9 only next to j
    // edges: 10 = ij, 11-12 i-shared, 13-14 j-shared, 15-17 i-private, 18-20 j-private
    let mut total = Sum::default();
    for state in 0u64..1 << 21 {
        let b = |k: u64| state >> k & 1;
        let mut p = 1.0;
        for v in 0..10 {
            p *= bern(l, b(v));
        }
        for e in 10..21 {
            p *= bern(m, b(e));
        }
        let mut yi = b(0) | (b(10) & b(1)) | (b(11) & b(2)) | (b(12) & b(3));
        let mut yj = b(1) | (b(10) & b(0)) | (b(13) & b(2)) | (b(14) & b(3));
        for k in 0..3 {
            yi |= b(15 + k) & b(4 + k);
            yj |= b(18 + k) & b(7 + k);
        }
        total.add(p * (yi & yj) as f64);
    }
    total.value()
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}
