//! Small containers used by the simulator.

use std::collections::HashMap;
use std::hash::Hash;

/// Complete binary tree of nonnegative weights supporting O(log n) updates
/// and weighted selection. Internal nodes are recomputed from their
/// children on every update, so sums never drift.
#[derive(Clone, Debug)]
pub struct SumTree {
    size: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(n: usize) -> Self {
        let size = n.next_power_of_two().max(1);
        SumTree { size, nodes: vec![0.0; 2 * size] }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.size + i]
    }

    pub fn set(&mut self, i: usize, w: f64) {
        let mut k = self.size + i;
        self.nodes[k] = w;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Index whose cumulative-weight bracket contains `u * total`, `u ∈ [0, 1)`.
    /// Only leaves with positive weight are returned.
    pub fn find(&self, u: f64) -> Option<usize> {
        if !(self.total() > 0.0) {
            return None;
        }
        let mut target = u * self.total();
        let mut k = 1;
        while k < self.size {
            let left = self.nodes[2 * k];
            if target < left || self.nodes[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                target -= left;
                k = 2 * k + 1;
            }
        }
        (self.nodes[k] > 0.0).then_some(k - self.size)
    }
}

/// Set with O(1) insert, remove and uniform indexing.
#[derive(Clone, Debug)]
pub struct IndexedSet<T> {
    items: Vec<T>,
    position: HashMap<T, usize>,
}

impl<T: Copy + Eq + Hash> Default for IndexedSet<T> {
    fn default() -> Self {
        IndexedSet { items: Vec::new(), position: HashMap::new() }
    }
}

impl<T: Copy + Eq + Hash> IndexedSet<T> {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, x: &T) -> bool {
        self.position.contains_key(x)
    }

    pub fn insert(&mut self, x: T) -> bool {
        if self.position.contains_key(&x) {
            return false;
        }
        self.position.insert(x, self.items.len());
        self.items.push(x);
        true
    }

    pub fn remove(&mut self, x: &T) -> bool {
        let Some(pos) = self.position.remove(x) else {
            return false;
        };
        let last = self.items.pop().expect("nonempty");
        if pos < self.items.len() {
            self.items[pos] = last;
            self.position.insert(last, pos);
        }
        true
    }

    pub fn at(&self, k: usize) -> T {
        self.items[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }
}
