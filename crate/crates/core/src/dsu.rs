/// Disjoint-set forest with union by size and path compression.
///
/// Vertices touched by a union are remembered so that [`DisjointSets::reset`]
/// costs O(touched) rather than O(n); simulations reuse one forest across
/// thousands of replicates.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
    touched: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            touched: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut cur = x;
        while self.parent[cur] as usize != root {
            let next = self.parent[cur] as usize;
            self.parent[cur] = root as u32;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        if self.size[rb] == 1 {
            self.touched.push(rb as u32);
        }
        if self.size[ra] == 1 {
            self.touched.push(ra as u32);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    /// Size of the set containing `x`.
    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }

    /// Vertices that belong to a set of size at least two.
    pub fn touched(&self) -> &[u32] {
        &self.touched
    }

    /// Restores every vertex to a singleton.
    pub fn reset(&mut self) {
        for &v in &self.touched {
            self.parent[v as usize] = v;
            self.size[v as usize] = 1;
        }
        self.touched.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joins_and_sizes() {
        let mut d = DisjointSets::new(6);
        assert!(d.union(0, 1));
        assert!(d.union(2, 1));
        assert!(!d.union(0, 2));
        assert!(d.union(4, 5));
        assert_eq!(d.set_size(2), 3);
        assert_eq!(d.set_size(3), 1);
        assert_eq!(d.find(0), d.find(2));
        assert_ne!(d.find(0), d.find(4));
        let mut t = d.touched().to_vec();
        t.sort();
        assert_eq!(t, vec![0, 1, 2, 4, 5]);
    }

    #[test]
    fn reset_restores_singletons() {
        let mut d = DisjointSets::new(5);
        d.union(0, 4);
        d.union(4, 2);
        d.reset();
        for v in 0..5 {
            assert_eq!(d.find(v), v);
            assert_eq!(d.set_size(v), 1);
        }
        assert!(d.touched().is_empty());
    }
}
