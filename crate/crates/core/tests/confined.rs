mod common;

use std::sync::Arc;

use coloured_percolation::crn::derive_seed;
use coloured_percolation::lattice::{Lattice, LatticeKind};
use coloured_percolation::moments::{confined_cross_colour_moment, confined_first_moment};
use coloured_percolation::percolation::{ColourField, ModelVariant, ParameterVector};
use coloured_percolation::studies::generate_dataset;

use common::mean_se;

const REPS: u64 = 20;
const SIDE: usize = 230;

/// Per-replicate averages of the four statistics over interior vertices and
/// horizontal interior pairs: E[Y^1], E[Y^1 Y^2], E[Y^1_i Y^1_j] and
/// E[Y^1_i Y^1_j Y^2_i Y^2_j].
fn replicate_stats(theta: &ParameterVector, variant: ModelVariant, seed: u64) -> Vec<[f64; 4]> {
    let lat = Arc::new(Lattice::new(LatticeKind::Triangular, SIDE, SIDE).unwrap());
    (0..REPS)
        .map(|r| {
            let field = generate_dataset(Arc::clone(&lat), theta, derive_seed(seed, r), variant)
                .unwrap()
                .field;
            stats(&field)
        })
        .collect()
}

fn stats(field: &ColourField) -> [f64; 4] {
    let lat = &field.lattice;
    let at = |r, c| field.masks[lat.vertex(r, c)];
    let (mut acc, mut nv, mut np) = ([0u64; 4], 0u64, 0u64);
    for r in 1..lat.rows() - 1 {
        for c in 1..lat.cols() - 1 {
            let a = at(r, c);
            acc[0] += u64::from(a & 1);
            acc[1] += u64::from(a & 3 == 3);
            nv += 1;
            if c + 2 < lat.cols() {
                let b = at(r, c + 1);
                acc[2] += u64::from(a & b & 1);
                acc[3] += u64::from(a & b & 3 == 3);
                np += 1;
            }
        }
    }
    [
        acc[0] as f64 / nv as f64,
        acc[1] as f64 / nv as f64,
        acc[2] as f64 / np as f64,
        acc[3] as f64 / np as f64,
    ]
}

fn column(rows: &[[f64; 4]], k: usize) -> (f64, f64) {
    mean_se(&rows.iter().map(|r| r[k]).collect::<Vec<_>>())
}

#[test]
fn first_moment_matches_monte_carlo() {
    let theta = ParameterVector::new(vec![0.05, 0.05], 0.02).unwrap();
    let rows = replicate_stats(&theta, ModelVariant::ConfinedUndirected, 1);
    let (mean, se) = column(&rows, 0);
    let exact = confined_first_moment(0.05, 0.02, 6).unwrap();
    assert!((mean - exact).abs() <= 3.0 * se, "mc {mean} +- {se}, exact {exact}");

    let (mean, se) = column(&rows, 1);
    let exact = confined_cross_colour_moment(0.05, 0.05, 0.02, 6).unwrap();
    assert!((mean - exact).abs() <= 3.0 * se, "mc {mean} +- {se}, exact {exact}");

    let (mean, se) = column(&rows, 2);
    let exact = common::pair_enumeration(0.05, 0.02);
    assert!((mean - exact).abs() <= 3.0 * se, "mc {mean} +- {se}, exact {exact}");
}

#[test]
fn directed_and_undirected_differ_only_on_joint_pair_moment() {
    let theta = ParameterVector::new(vec![0.3, 0.3], 0.3).unwrap();
    let und = replicate_stats(&theta, ModelVariant::ConfinedUndirected, 2);
    let dir = replicate_stats(&theta, ModelVariant::ConfinedDirected, 3);
    for k in 0..3 {
        let (a, sa) = column(&und, k);
        let (b, sb) = column(&dir, k);
        let se = sa.hypot(sb);
        assert!((a - b).abs() <= 3.0 * se, "moment {k}: {a} vs {b}, se {se}");
    }
    let (a, sa) = column(&und, 3);
    let (b, sb) = column(&dir, 3);
    let se = sa.hypot(sb);
    assert!((a - b).abs() > 3.0 * se, "joint pair moment: {a} vs {b}, se {se}");
}
