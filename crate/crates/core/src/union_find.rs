/// Disjoint sets over `0..n` with path compression and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parents: Vec<u32>,
    sizes: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parents: (0..n as u32).collect(),
            sizes: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn find(&mut self, i: usize) -> usize {
        let mut root = i as u32;
        while self.parents[root as usize] != root {
            root = self.parents[root as usize];
        }
        let mut i = i as u32;
        while i != root {
            let next = self.parents[i as usize];
            self.parents[i as usize] = root;
            i = next;
        }
        root as usize
    }

    /// Returns false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.sizes[a] < self.sizes[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parents[b] = a as u32;
        self.sizes[a] += self.sizes[b];
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn size_of(&mut self, i: usize) -> usize {
        let r = self.find(i);
        self.sizes[r] as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joins_and_sizes() {
        let mut uf = UnionFind::new(6);
        assert!(uf.union(0, 1));
        assert!(uf.union(2, 3));
        assert!(!uf.union(1, 0));
        assert!(uf.union(1, 3));
        assert!(uf.same(0, 2));
        assert!(!uf.same(0, 4));
        assert_eq!(uf.size_of(3), 4);
        assert_eq!(uf.size_of(5), 1);
    }
}
