//! Seedings, edge configurations and colour propagation.
//!
//! These are the reference, whole-field operations. The estimator runs the
//! same model through the sparse engine in [`crate::engine`], which is checked
//! against these functions in tests.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSets;
use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;

/// Upper limit on the number of colours; masks are `u32`.
pub const MAX_COLOURS: usize = 32;

/// `(lambda_1, ..., lambda_nc, mu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub lambdas: Vec<f64>,
    pub mu: f64,
}

impl ParameterVector {
    pub fn new(lambdas: Vec<f64>, mu: f64) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() > MAX_COLOURS {
            return Err(invalid(format!(
                "number of colours must be in 1..={MAX_COLOURS}, got {}",
                lambdas.len()
            )));
        }
        for (l, &lam) in lambdas.iter().enumerate() {
            check_probability(&format!("lambda_{}", l + 1), lam)?;
        }
        check_probability("mu", mu)?;
        Ok(ParameterVector { lambdas, mu })
    }

    /// Builds from the flat layout `[lambda_1, ..., lambda_nc, mu]`.
    pub fn from_flat(values: &[f64]) -> Result<Self> {
        match values.split_last() {
            Some((&mu, lambdas)) => ParameterVector::new(lambdas.to_vec(), mu),
            None => Err(invalid("empty parameter vector")),
        }
    }

    pub fn n_colours(&self) -> usize {
        self.lambdas.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.lambdas.clone();
        v.push(self.mu);
        v
    }

    /// Coordinatewise `theta <= other`.
    pub fn le(&self, other: &ParameterVector) -> bool {
        self.n_colours() == other.n_colours()
            && self.mu <= other.mu
            && self.lambdas.iter().zip(&other.lambdas).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for ParameterVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for l in &self.lambdas {
            write!(f, "{l}, ")?;
        }
        write!(f, "mu={})", self.mu)
    }
}

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

/// Rounds to the nearest integer, ties away from zero.
pub fn round_half_up(x: f64) -> usize {
    debug_assert!(x >= 0.0);
    (x + 0.5).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    /// Undirected Bernoulli edges, colours spread through whole open clusters.
    Percolation,
    /// Undirected Bernoulli edges, colours cross exactly one open edge.
    ConfinedUndirected,
    /// Two independent directed edges per adjacent pair, one hop only.
    ConfinedDirected,
}

impl ModelVariant {
    pub fn is_directed(self) -> bool {
        self == ModelVariant::ConfinedDirected
    }

    /// Number of edge indicators the variant needs on `lat`.
    pub fn edge_slots(self, lat: &Lattice) -> usize {
        if self.is_directed() {
            2 * lat.n_edges()
        } else {
            lat.n_edges()
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Percolation => "percolation",
            ModelVariant::ConfinedUndirected => "confined-undirected",
            ModelVariant::ConfinedDirected => "confined-directed",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "percolation" => Ok(ModelVariant::Percolation),
            "confined-undirected" | "confined" => Ok(ModelVariant::ConfinedUndirected),
            "confined-directed" => Ok(ModelVariant::ConfinedDirected),
            other => Err(invalid(format!("unknown model variant '{other}'"))),
        }
    }
}

/// How seeds and open edges are drawn from frozen randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SamplingMethod {
    /// Independent thresholds `U < p` (binomial counts).
    Bernoulli,
    /// Exactly `round(p * n)` items chosen through a fixed permutation.
    FixedCount,
}

impl SamplingMethod {
    pub fn number(self) -> u8 {
        match self {
            SamplingMethod::Bernoulli => 1,
            SamplingMethod::FixedCount => 2,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(SamplingMethod::Bernoulli),
            2 => Ok(SamplingMethod::FixedCount),
            other => Err(invalid(format!("method must be 1 or 2, got {other}"))),
        }
    }
}

impl fmt::Display for SamplingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Per-vertex seeding bitmasks; bit `l` set means colour `l + 1` was seeded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedField {
    pub lattice: Arc<Lattice>,
    pub n_colours: usize,
    pub masks: Vec<u32>,
}

/// Open/closed state per edge slot, aligned with [`Lattice::edges`].
///
/// A directed field has two slots per pair: `2e` is `i -> j` and `2e + 1` is
/// `j -> i`, where `(i, j) = edges[e]` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeField {
    pub lattice: Arc<Lattice>,
    pub directed: bool,
    pub open: Vec<bool>,
}

impl EdgeField {
    pub fn n_open(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    /// Fraction of open slots.
    pub fn open_fraction(&self) -> f64 {
        if self.open.is_empty() {
            0.0
        } else {
            self.n_open() as f64 / self.open.len() as f64
        }
    }
}

/// Observed colours after propagation; same layout as [`SeedField`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColourField {
    pub lattice: Arc<Lattice>,
    pub n_colours: usize,
    pub masks: Vec<u32>,
}

impl ColourField {
    pub fn new(lattice: Arc<Lattice>, n_colours: usize, masks: Vec<u32>) -> Result<Self> {
        if n_colours == 0 || n_colours > MAX_COLOURS {
            return Err(invalid(format!("number of colours must be in 1..={MAX_COLOURS}")));
        }
        if masks.len() != lattice.n_vertices() {
            return Err(invalid(format!(
                "{} masks for {} vertices",
                masks.len(),
                lattice.n_vertices()
            )));
        }
        let limit = colour_limit(n_colours);
        if let Some(&bad) = masks.iter().find(|&&m| u64::from(m) >= limit) {
            return Err(invalid(format!("mask {bad} needs more than {n_colours} colours")));
        }
        Ok(ColourField {
            lattice,
            n_colours,
            masks,
        })
    }

    /// Number of vertices carrying colour `l` (0-based).
    pub fn colour_count(&self, l: usize) -> usize {
        self.masks.iter().filter(|&&m| m >> l & 1 == 1).count()
    }
}

impl From<SeedField> for ColourField {
    fn from(s: SeedField) -> Self {
        ColourField {
            lattice: s.lattice,
            n_colours: s.n_colours,
            masks: s.masks,
        }
    }
}

pub(crate) fn colour_limit(n_colours: usize) -> u64 {
    1u64 << n_colours
}

fn check_unit_interval(values: &[f64]) -> Result<()> {
    match values.iter().find(|u| !(0.0..1.0).contains(*u)) {
        Some(u) => Err(invalid(format!("uniform draw {u} not in [0, 1)"))),
        None => Ok(()),
    }
}

fn check_permutation(perm: &[u32], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(invalid(format!("permutation of length {} for {n} items", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        let p = p as usize;
        if p >= n || seen[p] {
            return Err(invalid("input is not a permutation"));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Method 1 seeding: colour `l` at vertex `i` iff `uniforms[l][i] < lambda_l`.
pub fn seed_from_uniforms(
    lat: &Arc<Lattice>,
    theta: &ParameterVector,
    uniforms: &[Vec<f64>],
) -> Result<SeedField> {
    let n = lat.n_vertices();
    if uniforms.len() != theta.n_colours() || uniforms.iter().any(|u| u.len() != n) {
        return Err(invalid(format!(
            "expected {} x {n} uniforms",
            theta.n_colours()
        )));
    }
    let mut masks = vec![0u32; n];
    for (l, (u, &lam)) in uniforms.iter().zip(&theta.lambdas).enumerate() {
        check_unit_interval(u)?;
        for (m, &x) in masks.iter_mut().zip(u) {
            if x < lam {
                *m |= 1 << l;
            }
        }
    }
    Ok(SeedField {
        lattice: Arc::clone(lat),
        n_colours: theta.n_colours(),
        masks,
    })
}

/// Method 2 seeding: colour `l` at vertex `i` iff `ranks[l][i] < round(lambda_l * n_I)`.
///
/// `ranks[l]` is a permutation of `0..n_I` (0-based ranks).
pub fn seed_fixed_count(
    lat: &Arc<Lattice>,
    theta: &ParameterVector,
    ranks: &[Vec<u32>],
) -> Result<SeedField> {
    let n = lat.n_vertices();
    if ranks.len() != theta.n_colours() {
        return Err(invalid(format!(
            "{} permutations for {} colours",
            ranks.len(),
            theta.n_colours()
        )));
    }
    let mut masks = vec![0u32; n];
    for (l, (perm, &lam)) in ranks.iter().zip(&theta.lambdas).enumerate() {
        check_permutation(perm, n)?;
        let k = round_half_up(lam * n as f64);
        for (m, &r) in masks.iter_mut().zip(perm) {
            if (r as usize) < k {
                *m |= 1 << l;
            }
        }
    }
    Ok(SeedField {
        lattice: Arc::clone(lat),
        n_colours: theta.n_colours(),
        masks,
    })
}

fn expected_slots(lat: &Lattice, directed: bool) -> usize {
    if directed {
        2 * lat.n_edges()
    } else {
        lat.n_edges()
    }
}

/// Method 1 edges: slot `e` open iff `uniforms[e] < mu`.
pub fn edges_from_uniforms(
    lat: &Arc<Lattice>,
    mu: f64,
    uniforms: &[f64],
    directed: bool,
) -> Result<EdgeField> {
    check_probability("mu", mu)?;
    if uniforms.len() != expected_slots(lat, directed) {
        return Err(invalid(format!(
            "{} edge draws for {} slots",
            uniforms.len(),
            expected_slots(lat, directed)
        )));
    }
    check_unit_interval(uniforms)?;
    Ok(EdgeField {
        lattice: Arc::clone(lat),
        directed,
        open: uniforms.iter().map(|&v| v < mu).collect(),
    })
}

/// Method 2 edges: exactly `round(mu * slots)` open, chosen by rank.
pub fn edges_fixed_count(
    lat: &Arc<Lattice>,
    mu: f64,
    ranks: &[u32],
    directed: bool,
) -> Result<EdgeField> {
    check_probability("mu", mu)?;
    let slots = expected_slots(lat, directed);
    check_permutation(ranks, slots)?;
    let k = round_half_up(mu * slots as f64);
    Ok(EdgeField {
        lattice: Arc::clone(lat),
        directed,
        open: ranks.iter().map(|&r| (r as usize) < k).collect(),
    })
}

fn check_same_lattice(seeds: &SeedField, edges: &EdgeField) -> Result<()> {
    if !Arc::ptr_eq(&seeds.lattice, &edges.lattice) && seeds.lattice != edges.lattice {
        return Err(invalid("seed and edge fields live on different lattices"));
    }
    if edges.open.len() != expected_slots(&seeds.lattice, edges.directed) {
        return Err(invalid("edge field length does not match its lattice"));
    }
    Ok(())
}

/// Every open cluster takes the union of the seed colours it contains.
pub fn propagate(seeds: &SeedField, edges: &EdgeField) -> Result<ColourField> {
    check_same_lattice(seeds, edges)?;
    if edges.directed {
        return Err(invalid("cluster propagation needs an undirected edge field"));
    }
    let lat = &seeds.lattice;
    let mut dsu = DisjointSets::new(lat.n_vertices());
    for (&(i, j), _) in lat.edges().iter().zip(&edges.open).filter(|(_, &o)| o) {
        dsu.union(i as usize, j as usize);
    }
    let mut root_mask = vec![0u32; lat.n_vertices()];
    for (v, &m) in seeds.masks.iter().enumerate() {
        if m != 0 {
            let r = dsu.find(v);
            root_mask[r] |= m;
        }
    }
    let masks = (0..lat.n_vertices())
        .map(|v| root_mask[dsu.find(v)])
        .collect();
    Ok(ColourField {
        lattice: Arc::clone(lat),
        n_colours: seeds.n_colours,
        masks,
    })
}

/// One-hop contamination: a vertex gains the seeds of neighbours whose edge
/// towards it is open. No chaining.
pub fn propagate_confined(
    seeds: &SeedField,
    edges: &EdgeField,
    variant: ModelVariant,
) -> Result<ColourField> {
    check_same_lattice(seeds, edges)?;
    match (variant, edges.directed) {
        (ModelVariant::ConfinedUndirected, false) | (ModelVariant::ConfinedDirected, true) => {}
        (ModelVariant::Percolation, _) => {
            return Err(invalid("propagate_confined called with the percolation variant"))
        }
        _ => return Err(invalid(format!("{variant} does not match the edge field shape"))),
    }
    let lat = &seeds.lattice;
    let mut masks = seeds.masks.clone();
    for (e, &(i, j)) in lat.edges().iter().enumerate() {
        let (i, j) = (i as usize, j as usize);
        if edges.directed {
            if edges.open[2 * e] {
                masks[j] |= seeds.masks[i];
            }
            if edges.open[2 * e + 1] {
                masks[i] |= seeds.masks[j];
            }
        } else if edges.open[e] {
            masks[i] |= seeds.masks[j];
            masks[j] |= seeds.masks[i];
        }
    }
    Ok(ColourField {
        lattice: Arc::clone(lat),
        n_colours: seeds.n_colours,
        masks,
    })
}

/// Frozen randomness for one simulated field.
#[derive(Debug, Clone, PartialEq)]
pub enum Draws {
    /// Method 1: per-colour vertex uniforms and per-slot edge uniforms.
    Uniforms { seeds: Vec<Vec<f64>>, edges: Vec<f64> },
    /// Method 2: per-colour vertex ranks and per-slot edge ranks.
    Ranks { seeds: Vec<Vec<u32>>, edges: Vec<u32> },
}

impl Draws {
    pub fn method(&self) -> SamplingMethod {
        match self {
            Draws::Uniforms { .. } => SamplingMethod::Bernoulli,
            Draws::Ranks { .. } => SamplingMethod::FixedCount,
        }
    }

    /// Fresh draws from `rng` for `n_colours` colours under `variant`.
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        lat: &Lattice,
        n_colours: usize,
        variant: ModelVariant,
        method: SamplingMethod,
    ) -> Draws {
        let n = lat.n_vertices();
        let slots = variant.edge_slots(lat);
        match method {
            SamplingMethod::Bernoulli => Draws::Uniforms {
                seeds: (0..n_colours)
                    .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
                    .collect(),
                edges: (0..slots).map(|_| rng.random::<f64>()).collect(),
            },
            SamplingMethod::FixedCount => Draws::Ranks {
                seeds: (0..n_colours)
                    .map(|_| crate::crn::random_ranks(rng, n))
                    .collect(),
                edges: crate::crn::random_ranks(rng, slots),
            },
        }
    }
}

/// Seeding, edge draw and propagation under `variant`.
pub fn simulate_with_edges(
    lat: &Arc<Lattice>,
    theta: &ParameterVector,
    draws: &Draws,
    variant: ModelVariant,
) -> Result<(SeedField, EdgeField, ColourField)> {
    let directed = variant.is_directed();
    let (seeds, edges) = match draws {
        Draws::Uniforms { seeds, edges } => (
            seed_from_uniforms(lat, theta, seeds)?,
            edges_from_uniforms(lat, theta.mu, edges, directed)?,
        ),
        Draws::Ranks { seeds, edges } => (
            seed_fixed_count(lat, theta, seeds)?,
            edges_fixed_count(lat, theta.mu, edges, directed)?,
        ),
    };
    let field = match variant {
        ModelVariant::Percolation => propagate(&seeds, &edges)?,
        _ => propagate_confined(&seeds, &edges, variant)?,
    };
    Ok((seeds, edges, field))
}

pub fn simulate(
    lat: &Arc<Lattice>,
    theta: &ParameterVector,
    draws: &Draws,
    variant: ModelVariant,
) -> Result<ColourField> {
    simulate_with_edges(lat, theta, draws, variant).map(|(_, _, f)| f)
}

/// Sizes of the open clusters that contain at least two vertices.
pub fn nontrivial_cluster_sizes(edges: &EdgeField) -> Result<Vec<usize>> {
    if edges.directed {
        return Err(invalid("cluster sizes need an undirected edge field"));
    }
    let lat = &edges.lattice;
    let mut dsu = DisjointSets::new(lat.n_vertices());
    for (&(i, j), _) in lat.edges().iter().zip(&edges.open).filter(|(_, &o)| o) {
        dsu.union(i as usize, j as usize);
    }
    let mut sizes = Vec::new();
    for v in 0..lat.n_vertices() {
        if dsu.find(v) == v && dsu.set_size(v) >= 2 {
            sizes.push(dsu.set_size(v));
        }
    }
    Ok(sizes)
}
