//! Connected components of open-edge configurations.

use crate::error::{Error, Result};
use crate::groups::{CayleyWindow, GroupElement};

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.size.fill(1);
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    pub fn same(&mut self, a: u32, b: u32) -> bool {
        self.find(a) == self.find(b)
    }

    /// Unions the endpoints of every open edge of `window`.
    pub fn absorb(&mut self, window: &CayleyWindow, open: &[bool]) {
        for (e, &is_open) in window.edges().iter().zip(open) {
            if is_open {
                self.union(e.a, e.b);
            }
        }
    }
}

/// Canonical component labels: each vertex is labelled by the smallest
/// vertex index in its component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLabeling {
    labels: Vec<u32>,
    /// Indexed by label; zero for indices that are not labels.
    sizes: Vec<u32>,
    /// Sorted labels of components containing a vertex on the outer sphere.
    boundary: Vec<u32>,
}

impl ComponentLabeling {
    pub fn from_union_find(window: &CayleyWindow, uf: &mut UnionFind) -> Self {
        let n = window.vertex_count();
        let mut root_label = vec![u32::MAX; n];
        let mut labels = vec![0u32; n];
        let mut sizes = vec![0u32; n];
        for v in 0..n as u32 {
            let r = uf.find(v) as usize;
            if root_label[r] == u32::MAX {
                root_label[r] = v;
            }
            let label = root_label[r];
            labels[v as usize] = label;
            sizes[label as usize] += 1;
        }
        let mut touches = vec![false; n];
        let radius = window.radius();
        for (v, &l) in window.levels().iter().enumerate() {
            if l == radius {
                touches[labels[v] as usize] = true;
            }
        }
        let boundary = (0..n as u32).filter(|&l| touches[l as usize]).collect();
        Self { labels, sizes, boundary }
    }

    pub fn label(&self, v: usize) -> u32 {
        self.labels[v]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn component_size(&self, v: usize) -> u32 {
        self.sizes[self.labels[v] as usize]
    }

    /// `(label, size)` for every component in label order.
    pub fn components(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.sizes
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0)
            .map(|(l, &s)| (l as u32, s))
    }

    pub fn component_count(&self) -> usize {
        self.sizes.iter().filter(|&&s| s > 0).count()
    }

    pub fn boundary_touching(&self) -> &[u32] {
        &self.boundary
    }

    pub fn connected(&self, g: usize, h: usize) -> Result<bool> {
        let n = self.labels.len();
        if g >= n || h >= n {
            return Err(Error::OutOfWindow(format!("vertex index {} (window has {n})", g.max(h))));
        }
        Ok(self.labels[g] == self.labels[h])
    }

    /// Count and sizes (descending) of boundary-touching components with at
    /// least `min_size` vertices.
    pub fn boundary_component_stats(&self, min_size: u32) -> (usize, Vec<u32>) {
        let mut sizes: Vec<u32> = self
            .boundary
            .iter()
            .map(|&l| self.sizes[l as usize])
            .filter(|&s| s >= min_size.max(1))
            .collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        (sizes.len(), sizes)
    }
}

/// Reusable depth-first explorer for a single cluster. Cheaper than a full
/// labeling when only the cluster of one vertex matters.
#[derive(Debug, Clone)]
pub struct ClusterProbe {
    stamp: Vec<u32>,
    epoch: u32,
    stack: Vec<u32>,
    size: usize,
    max_level: u32,
}

impl ClusterProbe {
    pub fn new(vertex_count: usize) -> Self {
        Self {
            stamp: vec![0; vertex_count],
            epoch: 0,
            stack: Vec::new(),
            size: 0,
            max_level: 0,
        }
    }

    /// Explores the open cluster of `start`; returns its size.
    pub fn explore(&mut self, window: &CayleyWindow, open: &[bool], start: usize) -> usize {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.stamp[start] = epoch;
        self.stack.clear();
        self.stack.push(start as u32);
        self.size = 0;
        self.max_level = 0;
        while let Some(v) = self.stack.pop() {
            self.size += 1;
            self.max_level = self.max_level.max(window.level(v as usize));
            for &(u, e) in window.neighbors(v as usize) {
                if open[e as usize] && self.stamp[u as usize] != epoch {
                    self.stamp[u as usize] = epoch;
                    self.stack.push(u);
                }
            }
        }
        self.size
    }

    /// Membership in the most recently explored cluster.
    pub fn contains(&self, v: usize) -> bool {
        self.stamp[v] == self.epoch
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Largest BFS level reached by the last cluster.
    pub fn max_level(&self) -> u32 {
        self.max_level
    }
}

/// Labels the components of `open` on `window`.
pub fn components(window: &CayleyWindow, open: &[bool]) -> ComponentLabeling {
    let mut uf = UnionFind::new(window.vertex_count());
    uf.absorb(window, open);
    ComponentLabeling::from_union_find(window, &mut uf)
}

/// Whether `g` and `h` lie in the same open cluster.
pub fn connected(window: &CayleyWindow, labels: &ComponentLabeling, g: &GroupElement, h: &GroupElement) -> Result<bool> {
    labels.connected(window.require_index(g)?, window.require_index(h)?)
}
