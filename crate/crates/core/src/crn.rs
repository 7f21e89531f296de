//! Common random numbers.
//!
//! Every replicate `s` and role (edges, or seeds of colour `l`) owns its own
//! ChaCha8 stream keyed by the master seed, so the draws do not depend on the
//! order in which they are generated or on the number of threads.
//!
//! Both sampling methods reduce to "take a prefix of a fixed order":
//!
//! * Method 1 sorts the items by their frozen uniforms; `{i : U_i < p}` is
//!   exactly the first `#{U < p}` items of that order.
//! * Method 2 uses a uniformly random order; the first `round(p * n)` items
//!   are the ones with rank below the threshold.
//!
//! A simulation therefore only touches the chosen seeds and open edges.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::{Counts, Workspace};
use crate::error::{invalid, Result};
use crate::lattice::Lattice;
use crate::percolation::{
    round_half_up, ColourField, Draws, ModelVariant, ParameterVector, SamplingMethod, MAX_COLOURS,
};

/// What a substream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Edges,
    Seeds(usize),
}

impl StreamRole {
    fn code(self) -> u64 {
        match self {
            StreamRole::Edges => 0,
            StreamRole::Seeds(l) => 1 + l as u64,
        }
    }
}

/// The generator for replicate `replicate` and `role` under `master_seed`.
pub fn substream(master_seed: u64, replicate: usize, role: StreamRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((replicate as u64) << 32) | role.code());
    rng
}

/// SplitMix64 finaliser; derives independent seeds from a base seed and an index.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniformly random 0-based ranks of `n` items (Fisher-Yates).
pub fn random_ranks<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u32> {
    let mut v: Vec<u32> = (0..n as u32).collect();
    v.shuffle(rng);
    v
}

fn invert(order: &[u32]) -> Vec<u32> {
    let mut ranks = vec![0u32; order.len()];
    for (k, &i) in order.iter().enumerate() {
        ranks[i as usize] = k as u32;
    }
    ranks
}

/// A fixed order over `n` items plus, for Method 1, the sorted keys.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct OrderedDraw {
    order: Vec<u32>,
    keys: Vec<f64>,
}

impl OrderedDraw {
    fn generate(rng: &mut ChaCha8Rng, n: usize, method: SamplingMethod) -> Self {
        match method {
            SamplingMethod::Bernoulli => {
                let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let mut order: Vec<u32> = (0..n as u32).collect();
                order.sort_unstable_by(|&a, &b| {
                    u[a as usize].total_cmp(&u[b as usize]).then(a.cmp(&b))
                });
                let keys = order.iter().map(|&i| u[i as usize]).collect();
                OrderedDraw { order, keys }
            }
            SamplingMethod::FixedCount => {
                let mut order: Vec<u32> = (0..n as u32).collect();
                order.shuffle(rng);
                OrderedDraw {
                    order,
                    keys: Vec::new(),
                }
            }
        }
    }

    /// Items selected at probability `p`.
    fn prefix(&self, p: f64) -> &[u32] {
        let k = if self.keys.is_empty() {
            round_half_up(p * self.order.len() as f64).min(self.order.len())
        } else {
            self.keys.partition_point(|&u| u < p)
        };
        &self.order[..k]
    }

    fn uniforms(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.order.len()];
        for (&i, &k) in self.order.iter().zip(&self.keys) {
            u[i as usize] = k;
        }
        u
    }

    fn hash_into<H: Hasher>(&self, h: &mut H) {
        self.order.hash(h);
        for k in &self.keys {
            k.to_bits().hash(h);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Replicate {
    seeds: Vec<OrderedDraw>,
    edges: OrderedDraw,
}

impl Replicate {
    fn generate(
        master_seed: u64,
        s: usize,
        lat: &Lattice,
        n_colours: usize,
        variant: ModelVariant,
        method: SamplingMethod,
    ) -> Self {
        let seeds = (0..n_colours)
            .map(|l| {
                let mut rng = substream(master_seed, s, StreamRole::Seeds(l));
                OrderedDraw::generate(&mut rng, lat.n_vertices(), method)
            })
            .collect();
        let mut rng = substream(master_seed, s, StreamRole::Edges);
        let edges = OrderedDraw::generate(&mut rng, variant.edge_slots(lat), method);
        Replicate { seeds, edges }
    }

    pub(crate) fn selection<'a>(&'a self, theta: &ParameterVector) -> (Vec<&'a [u32]>, &'a [u32]) {
        let seeds = self
            .seeds
            .iter()
            .zip(&theta.lambdas)
            .map(|(d, &lam)| d.prefix(lam))
            .collect();
        (seeds, self.edges.prefix(theta.mu))
    }
}

/// Frozen simulation randomness shared by every objective evaluation.
#[derive(Debug, Clone)]
pub struct CrnPool {
    method: SamplingMethod,
    master_seed: u64,
    n_colours: usize,
    variant: ModelVariant,
    lattice: Arc<Lattice>,
    replicates: Vec<Replicate>,
}

impl CrnPool {
    pub fn new(
        lattice: Arc<Lattice>,
        n_colours: usize,
        n_s: usize,
        method: SamplingMethod,
        variant: ModelVariant,
        master_seed: u64,
    ) -> Result<Self> {
        if n_s == 0 {
            return Err(invalid("n_s must be at least 1"));
        }
        if n_colours == 0 || n_colours > MAX_COLOURS {
            return Err(invalid(format!("number of colours must be in 1..={MAX_COLOURS}")));
        }
        let replicates = (0..n_s)
            .into_par_iter()
            .map(|s| Replicate::generate(master_seed, s, &lattice, n_colours, variant, method))
            .collect();
        Ok(CrnPool {
            method,
            master_seed,
            n_colours,
            variant,
            lattice,
            replicates,
        })
    }

    pub fn method(&self) -> SamplingMethod {
        self.method
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn n_s(&self) -> usize {
        self.replicates.len()
    }

    pub fn n_colours(&self) -> usize {
        self.n_colours
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    fn check_theta(&self, theta: &ParameterVector) -> Result<()> {
        if theta.n_colours() != self.n_colours {
            return Err(invalid(format!(
                "parameter has {} colours, pool has {}",
                theta.n_colours(),
                self.n_colours
            )));
        }
        Ok(())
    }

    /// The draws of replicate `s` in the plain (unsorted) layout.
    pub fn draws(&self, s: usize) -> Draws {
        let rep = &self.replicates[s];
        match self.method {
            SamplingMethod::Bernoulli => Draws::Uniforms {
                seeds: rep.seeds.iter().map(OrderedDraw::uniforms).collect(),
                edges: rep.edges.uniforms(),
            },
            SamplingMethod::FixedCount => Draws::Ranks {
                seeds: rep.seeds.iter().map(|d| invert(&d.order)).collect(),
                edges: invert(&rep.edges.order),
            },
        }
    }

    /// Colour and pair counts of every replicate at `theta`, in replicate order.
    pub fn counts(&self, theta: &ParameterVector) -> Result<Vec<Counts>> {
        self.check_theta(theta)?;
        let lat = &*self.lattice;
        Ok(self
            .replicates
            .par_iter()
            .map_init(
                || Workspace::new(lat.n_vertices()),
                |ws, rep| {
                    let (seeds, open) = rep.selection(theta);
                    ws.run(lat, self.variant, self.n_colours, &seeds, open)
                },
            )
            .collect())
    }

    /// The full observed field of replicate `s` at `theta`.
    pub fn field(&self, s: usize, theta: &ParameterVector) -> Result<ColourField> {
        self.check_theta(theta)?;
        let lat = &*self.lattice;
        let mut ws = Workspace::new(lat.n_vertices());
        let (seeds, open) = self.replicates[s].selection(theta);
        let masks = ws.run_field(lat, self.variant, &seeds, open);
        ColourField::new(Arc::clone(&self.lattice), self.n_colours, masks)
    }

    /// Fingerprint of all frozen draws.
    pub fn checksum(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for rep in &self.replicates {
            for d in &rep.seeds {
                d.hash_into(&mut h);
            }
            rep.edges.hash_into(&mut h);
        }
        h.finish()
    }
}

/// Indices `i < n` selected independently with probability `p`, ascending.
///
/// Uses geometric gaps, so the cost is proportional to the number selected.
pub fn bernoulli_indices<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Vec<u32> {
    if p <= 0.0 || n == 0 {
        return Vec::new();
    }
    if p >= 1.0 {
        return (0..n as u32).collect();
    }
    let log_q = (-p).ln_1p();
    let mut out = Vec::with_capacity((p * n as f64 * 1.1) as usize + 8);
    let mut i = 0usize;
    loop {
        let u: f64 = rng.random();
        // 1 - u lies in (0, 1], so the logarithm is finite
        let gap = ((1.0 - u).ln() / log_q).floor();
        if !gap.is_finite() || gap >= (n - i) as f64 {
            break;
        }
        i += gap as usize;
        out.push(i as u32);
        i += 1;
        if i >= n {
            break;
        }
    }
    out
}

/// Counts of one simulation with fresh (non-common) randomness.
pub fn fresh_counts<R: Rng + ?Sized>(
    rng: &mut R,
    lat: &Lattice,
    theta: &ParameterVector,
    variant: ModelVariant,
    ws: &mut Workspace,
) -> Counts {
    let seeds: Vec<Vec<u32>> = theta
        .lambdas
        .iter()
        .map(|&lam| bernoulli_indices(rng, lat.n_vertices(), lam))
        .collect();
    let open = bernoulli_indices(rng, variant.edge_slots(lat), theta.mu);
    let refs: Vec<&[u32]> = seeds.iter().map(Vec::as_slice).collect();
    ws.run(lat, variant, theta.n_colours(), &refs, &open)
}
