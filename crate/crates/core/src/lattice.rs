//! Finite rectangular patches of the triangular and square lattices.
//!
//! Vertices are numbered row-major, `v = r * cols + c`. The triangular lattice
//! is embedded as the square grid plus the diagonal `(r, c) -- (r + 1, c + 1)`
//! in every cell, so an interior vertex has the six neighbours
//!
//! ```text
//!   (r-1, c-1)  (r-1, c)
//!   (r,   c-1)  (r,   c)  (r,   c+1)
//!               (r+1, c)  (r+1, c+1)
//! ```
//!
//! Edges are stored once as pairs `(i, j)` with `i < j`, sorted
//! lexicographically. That order is the edge indexing used everywhere else
//! (edge draws, permutations, edge fields).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Triangular,
    Square,
}

impl LatticeKind {
    /// Critical probability of bond percolation.
    pub fn critical_probability(self) -> f64 {
        match self {
            LatticeKind::Triangular => 2.0 * (PI / 18.0).sin(),
            LatticeKind::Square => 0.5,
        }
    }

    pub fn interior_degree(self) -> usize {
        match self {
            LatticeKind::Triangular => 6,
            LatticeKind::Square => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Triangular => "triangular",
            LatticeKind::Square => "square",
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangular" => Ok(LatticeKind::Triangular),
            "square" => Ok(LatticeKind::Square),
            other => Err(invalid(format!("unknown lattice kind '{other}'"))),
        }
    }
}

/// Number of potential edges in a `rows x cols` patch.
pub fn edge_count(kind: LatticeKind, rows: usize, cols: usize) -> usize {
    if rows == 0 || cols == 0 {
        return 0;
    }
    let grid = rows * (cols - 1) + cols * (rows - 1);
    match kind {
        LatticeKind::Square => grid,
        LatticeKind::Triangular => grid + (rows - 1) * (cols - 1),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    kind: LatticeKind,
    rows: usize,
    cols: usize,
    edges: Vec<(u32, u32)>,
    // CSR over the forward neighbours (j > i); `forward_start[i]` is also the
    // index of the first edge whose smaller endpoint is i.
    forward_start: Vec<u32>,
}

impl Lattice {
    pub fn new(kind: LatticeKind, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!(
                "lattice dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let n = rows
            .checked_mul(cols)
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or_else(|| invalid(format!("lattice {rows}x{cols} is too large")))?;

        let mut edges = Vec::with_capacity(edge_count(kind, rows, cols));
        let mut forward_start = Vec::with_capacity(n + 1);
        for r in 0..rows {
            for c in 0..cols {
                let v = (r * cols + c) as u32;
                forward_start.push(edges.len() as u32);
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    let below = v + cols as u32;
                    edges.push((v, below));
                    if kind == LatticeKind::Triangular && c + 1 < cols {
                        edges.push((v, below + 1));
                    }
                }
            }
        }
        forward_start.push(edges.len() as u32);
        debug_assert_eq!(edges.len(), edge_count(kind, rows, cols));

        Ok(Lattice {
            kind,
            rows,
            cols,
            edges,
            forward_start,
        })
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of vertices, `n_I`.
    pub fn n_vertices(&self) -> usize {
        self.rows * self.cols
    }

    /// Number of adjacent pairs, `n_p`.
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn critical_probability(&self) -> f64 {
        self.kind.critical_probability()
    }

    pub fn vertex(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v / self.cols, v % self.cols)
    }

    /// Neighbours `j > i`, ascending.
    pub(crate) fn forward_neighbors(&self, i: usize) -> impl Iterator<Item = u32> + '_ {
        let (a, b) = (self.forward_start[i] as usize, self.forward_start[i + 1] as usize);
        self.edges[a..b].iter().map(|&(_, j)| j)
    }

    /// Sorted, duplicate-free neighbour list of `i`.
    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>> {
        if i >= self.n_vertices() {
            return Err(invalid(format!(
                "vertex {i} out of range for {} vertices",
                self.n_vertices()
            )));
        }
        Ok(self.neighbor_iter(i).collect())
    }

    /// Neighbours of `i` in ascending order, without bounds checking.
    pub(crate) fn neighbor_iter(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = self.coords(i);
        let (rows, cols) = (self.rows as isize, self.cols as isize);
        let (r, c) = (r as isize, c as isize);
        let tri = self.kind == LatticeKind::Triangular;
        let candidates: [(isize, isize, bool); 6] = [
            (r - 1, c - 1, tri),
            (r - 1, c, true),
            (r, c - 1, true),
            (r, c + 1, true),
            (r + 1, c, true),
            (r + 1, c + 1, tri),
        ];
        candidates
            .into_iter()
            .filter(move |&(rr, cc, on)| on && rr >= 0 && cc >= 0 && rr < rows && cc < cols)
            .map(move |(rr, cc, _)| (rr * cols + cc) as usize)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbor_iter(i).count()
    }

    /// Whether `i ~ j` in the lattice.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a != b && self.forward_neighbors(a).any(|w| w as usize == b)
    }

    /// Index of edge `(i, j)` in [`Lattice::edges`], if the vertices are adjacent.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if b >= self.n_vertices() {
            return None;
        }
        let start = self.forward_start[a] as usize;
        self.forward_neighbors(a)
            .position(|w| w as usize == b)
            .map(|k| start + k)
    }

    /// The exterior vertex boundary of `sub`: vertices of this lattice outside
    /// `sub` that are adjacent to a vertex of `sub`. Sorted ascending.
    pub fn exterior_boundary(&self, sub: &Sublattice) -> Result<Vec<usize>> {
        sub.check_parent(self)?;
        let mut out: Vec<usize> = sub
            .vertices()
            .flat_map(|v| self.neighbor_iter(v).collect::<Vec<_>>())
            .filter(|&w| !sub.contains(self, w))
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// The `rows x cols` block centred in this lattice (offsets rounded down).
    pub fn centered_sublattice(&self, rows: usize, cols: usize) -> Result<Sublattice> {
        if rows > self.rows || cols > self.cols {
            return Err(invalid(format!(
                "sublattice {rows}x{cols} does not fit in {}x{}",
                self.rows, self.cols
            )));
        }
        Sublattice::new(
            self,
            (self.rows - rows) / 2,
            (self.cols - cols) / 2,
            rows,
            cols,
        )
    }
}

/// A rectangular block of a parent lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sublattice {
    pub row_offset: usize,
    pub col_offset: usize,
    pub rows: usize,
    pub cols: usize,
    parent_rows: usize,
    parent_cols: usize,
}

impl Sublattice {
    pub fn new(
        parent: &Lattice,
        row_offset: usize,
        col_offset: usize,
        rows: usize,
        cols: usize,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("sublattice dimensions must be positive"));
        }
        if row_offset + rows > parent.rows || col_offset + cols > parent.cols {
            return Err(invalid(format!(
                "sublattice {rows}x{cols}+({row_offset},{col_offset}) overhangs parent {}x{}",
                parent.rows, parent.cols
            )));
        }
        Ok(Sublattice {
            row_offset,
            col_offset,
            rows,
            cols,
            parent_rows: parent.rows,
            parent_cols: parent.cols,
        })
    }

    fn check_parent(&self, parent: &Lattice) -> Result<()> {
        if parent.rows != self.parent_rows || parent.cols != self.parent_cols {
            return Err(invalid(format!(
                "sublattice belongs to a {}x{} lattice, not {}x{}",
                self.parent_rows, self.parent_cols, parent.rows, parent.cols
            )));
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, parent: &Lattice, v: usize) -> bool {
        let (r, c) = parent.coords(v);
        r >= self.row_offset
            && r < self.row_offset + self.rows
            && c >= self.col_offset
            && c < self.col_offset + self.cols
    }

    /// Parent indices of the member vertices, in row-major order.
    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (self.row_offset..self.row_offset + self.rows).flat_map(move |r| {
            (self.col_offset..self.col_offset + self.cols).map(move |c| r * self.parent_cols + c)
        })
    }

    /// Fails unless `parent` has the dimensions this block was cut from.
    pub fn validate_against(&self, parent: &Lattice) -> Result<()> {
        self.check_parent(parent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(r: usize, c: usize) -> Lattice {
        Lattice::new(LatticeKind::Triangular, r, c).unwrap()
    }

    #[test]
    fn critical_probabilities() {
        assert!((LatticeKind::Triangular.critical_probability() - 0.347_296_355_333_860_7).abs() < 1e-15);
        assert_eq!(LatticeKind::Square.critical_probability(), 0.5);
    }

    #[test]
    fn published_edge_counts() {
        for (n, np) in [
            (25, 1776),
            (100, 29601),
            (300, 268801),
            (500, 748001),
            (707, 1_496_720),
        ] {
            assert_eq!(tri(n, n).n_edges(), np, "{n}x{n}");
            assert_eq!(tri(n, n).n_vertices(), n * n);
        }
    }

    #[test]
    fn small_cases() {
        assert_eq!(tri(1, 1).n_edges(), 0);
        assert_eq!(tri(2, 2).n_edges(), 5);
        assert_eq!(tri(2, 2).edges(), &[(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]);
        assert!(Lattice::new(LatticeKind::Square, 0, 3).is_err());
    }

    #[test]
    fn degrees_in_3x3() {
        let t = tri(3, 3);
        assert_eq!(t.neighbors(4).unwrap().len(), 6);
        assert_eq!(t.neighbors(0).unwrap(), vec![1, 3, 4]);
        assert_eq!(t.neighbors(2).unwrap(), vec![1, 5]);
        assert_eq!(t.neighbors(6).unwrap(), vec![3, 7]);
        assert_eq!(t.neighbors(8).unwrap(), vec![4, 5, 7]);
        let s = Lattice::new(LatticeKind::Square, 3, 3).unwrap();
        assert_eq!(s.neighbors(4).unwrap(), vec![1, 3, 5, 7]);
        assert!(t.neighbors(9).is_err());
    }

    #[test]
    fn edge_formula_matches_brute_force() {
        for kind in [LatticeKind::Triangular, LatticeKind::Square] {
            for m in 1..=6 {
                for n in 1..=6 {
                    let lat = Lattice::new(kind, m, n).unwrap();
                    // brute force: all vertex pairs at unit "distance" under the embedding
                    let mut brute = Vec::new();
                    for i in 0..m * n {
                        for j in i + 1..m * n {
                            let (ri, ci) = ((i / n) as isize, (i % n) as isize);
                            let (rj, cj) = ((j / n) as isize, (j % n) as isize);
                            let (dr, dc) = (rj - ri, cj - ci);
                            let adj = matches!((dr, dc), (0, 1) | (1, 0) | (0, -1) | (-1, 0))
                                || (kind == LatticeKind::Triangular
                                    && matches!((dr, dc), (1, 1) | (-1, -1)));
                            if adj {
                                brute.push((i as u32, j as u32));
                            }
                        }
                    }
                    assert_eq!(lat.edges(), brute.as_slice(), "{kind} {m}x{n}");
                    assert_eq!(lat.n_edges(), edge_count(kind, m, n));
                    for i in 0..m * n {
                        let nb = lat.neighbors(i).unwrap();
                        assert!(!nb.contains(&i));
                        for &j in &nb {
                            assert!(lat.neighbors(j).unwrap().contains(&i));
                            assert!(lat.adjacent(i, j));
                            let e = lat.edge_index(i, j).unwrap();
                            assert_eq!(lat.edges()[e], (i.min(j) as u32, i.max(j) as u32));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn edge_density_tends_to_coordination_half() {
        let t = tri(400, 400);
        let s = Lattice::new(LatticeKind::Square, 400, 400).unwrap();
        assert!((t.n_edges() as f64 / t.n_vertices() as f64 - 3.0).abs() < 0.01);
        assert!((s.n_edges() as f64 / s.n_vertices() as f64 - 2.0).abs() < 0.01);
    }

    #[test]
    fn boundary_of_whole_lattice_is_empty() {
        let t = tri(4, 5);
        let sub = Sublattice::new(&t, 0, 0, 4, 5).unwrap();
        assert!(t.exterior_boundary(&sub).unwrap().is_empty());
    }

    #[test]
    fn boundary_of_centre_vertex() {
        let t = tri(3, 3);
        let sub = Sublattice::new(&t, 1, 1, 1, 1).unwrap();
        assert_eq!(t.exterior_boundary(&sub).unwrap(), t.neighbors(4).unwrap());
    }

    #[test]
    fn boundary_brute_force_2x2_in_4x4() {
        let t = tri(4, 4);
        let sub = Sublattice::new(&t, 1, 1, 2, 2).unwrap();
        let inside: Vec<usize> = sub.vertices().collect();
        assert_eq!(inside, vec![5, 6, 9, 10]);
        let brute: Vec<usize> = (0..16)
            .filter(|v| !inside.contains(v))
            .filter(|&v| inside.iter().any(|&u| t.adjacent(u, v)))
            .collect();
        assert_eq!(t.exterior_boundary(&sub).unwrap(), brute);
        // (1,1)..(2,2) block: everything except the two corners off the diagonal direction
        assert_eq!(brute, vec![0, 1, 2, 4, 7, 8, 11, 13, 14, 15]);
    }

    #[test]
    fn boundary_fraction_shrinks() {
        let mut last = f64::INFINITY;
        for n in [10, 40, 160] {
            let t = tri(3 * n, 3 * n);
            let sub = t.centered_sublattice(n, n).unwrap();
            let frac = t.exterior_boundary(&sub).unwrap().len() as f64 / sub.n_vertices() as f64;
            assert!(frac < last);
            last = frac;
        }
        assert!(last < 0.03);
    }

    #[test]
    fn sublattice_must_fit() {
        let t = tri(4, 4);
        assert!(Sublattice::new(&t, 3, 0, 2, 2).is_err());
        assert!(t.centered_sublattice(5, 1).is_err());
        let other = tri(5, 5);
        let sub = Sublattice::new(&other, 0, 0, 2, 2).unwrap();
        assert!(t.exterior_boundary(&sub).is_err());
    }
}
