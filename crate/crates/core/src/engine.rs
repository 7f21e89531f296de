//! Sparse simulation kernel.
//!
//! Given the seeded vertices per colour and the open edge slots, computes the
//! observed colours only where they can be non-zero and counts the colour and
//! adjacent-pair incidences. All scratch state is reset in time proportional
//! to what was touched.

use crate::dsu::DisjointSets;
use crate::lattice::Lattice;
use crate::percolation::ModelVariant;

/// Per-colour incidence counts of one simulated field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    /// Vertices carrying colour `l`.
    pub y: Vec<u64>,
    /// Adjacent pairs `(i, j)` with both endpoints carrying colour `l`.
    pub z: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    dsu: DisjointSets,
    seed_mask: Vec<u32>,
    root_acc: Vec<u32>,
    out: Vec<u32>,
    seeded: Vec<u32>,
    roots: Vec<u32>,
    coloured: Vec<u32>,
}

impl Workspace {
    pub fn new(n_vertices: usize) -> Self {
        Workspace {
            dsu: DisjointSets::new(n_vertices),
            seed_mask: vec![0; n_vertices],
            root_acc: vec![0; n_vertices],
            out: vec![0; n_vertices],
            seeded: Vec::new(),
            roots: Vec::new(),
            coloured: Vec::new(),
        }
    }

    fn mark(&mut self, v: usize, m: u32) {
        if m != 0 {
            if self.out[v] == 0 {
                self.coloured.push(v as u32);
            }
            self.out[v] |= m;
        }
    }

    fn propagate(&mut self, lat: &Lattice, variant: ModelVariant, seeds: &[&[u32]], open: &[u32]) {
        assert_eq!(self.seed_mask.len(), lat.n_vertices(), "workspace sized for another lattice");
        for (l, list) in seeds.iter().enumerate() {
            for &v in *list {
                let v = v as usize;
                if self.seed_mask[v] == 0 {
                    self.seeded.push(v as u32);
                }
                self.seed_mask[v] |= 1 << l;
            }
        }
        let edges = lat.edges();
        match variant {
            ModelVariant::Percolation => {
                for &e in open {
                    let (i, j) = edges[e as usize];
                    self.dsu.union(i as usize, j as usize);
                }
                for k in 0..self.seeded.len() {
                    let v = self.seeded[k] as usize;
                    let r = self.dsu.find(v);
                    if self.root_acc[r] == 0 {
                        self.roots.push(r as u32);
                    }
                    self.root_acc[r] |= self.seed_mask[v];
                }
                for k in 0..self.seeded.len() {
                    let v = self.seeded[k] as usize;
                    let m = self.root_acc[self.dsu.find(v)];
                    self.mark(v, m);
                }
                for k in 0..self.dsu.touched().len() {
                    let v = self.dsu.touched()[k] as usize;
                    let m = self.root_acc[self.dsu.find(v)];
                    self.mark(v, m);
                }
            }
            ModelVariant::ConfinedUndirected => {
                for k in 0..self.seeded.len() {
                    let v = self.seeded[k] as usize;
                    self.mark(v, self.seed_mask[v]);
                }
                for &e in open {
                    let (i, j) = edges[e as usize];
                    let (i, j) = (i as usize, j as usize);
                    self.mark(i, self.seed_mask[j]);
                    self.mark(j, self.seed_mask[i]);
                }
            }
            ModelVariant::ConfinedDirected => {
                for k in 0..self.seeded.len() {
                    let v = self.seeded[k] as usize;
                    self.mark(v, self.seed_mask[v]);
                }
                for &slot in open {
                    let (i, j) = edges[slot as usize / 2];
                    let (from, to) = if slot % 2 == 0 { (i, j) } else { (j, i) };
                    self.mark(to as usize, self.seed_mask[from as usize]);
                }
            }
        }
    }

    fn clear(&mut self) {
        for &v in &self.seeded {
            self.seed_mask[v as usize] = 0;
        }
        for &r in &self.roots {
            self.root_acc[r as usize] = 0;
        }
        for &v in &self.coloured {
            self.out[v as usize] = 0;
        }
        self.seeded.clear();
        self.roots.clear();
        self.coloured.clear();
        self.dsu.reset();
    }

    /// Incidence counts for the given selection.
    pub fn run(
        &mut self,
        lat: &Lattice,
        variant: ModelVariant,
        n_colours: usize,
        seeds: &[&[u32]],
        open: &[u32],
    ) -> Counts {
        self.propagate(lat, variant, seeds, open);
        let mut y = vec![0u64; n_colours];
        let mut z = vec![0u64; n_colours];
        for &v in &self.coloured {
            let m = self.out[v as usize];
            add_bits(&mut y, m);
            for w in lat.forward_neighbors(v as usize) {
                add_bits(&mut z, m & self.out[w as usize]);
            }
        }
        self.clear();
        Counts { y, z }
    }

    /// The full observed field for the given selection.
    pub fn run_field(
        &mut self,
        lat: &Lattice,
        variant: ModelVariant,
        seeds: &[&[u32]],
        open: &[u32],
    ) -> Vec<u32> {
        self.propagate(lat, variant, seeds, open);
        let masks = self.out.clone();
        self.clear();
        masks
    }
}

#[inline]
fn add_bits(acc: &mut [u64], mut m: u32) {
    while m != 0 {
        acc[m.trailing_zeros() as usize] += 1;
        m &= m - 1;
    }
}
