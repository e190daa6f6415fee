//! Binary segment trees over a power-of-two number of leaves.

use crate::scalar::Real;

/// Leaves hold non-negative masses; every internal node holds the sum of its children.
#[derive(Debug, Clone)]
pub struct SumTree<T> {
    capacity: usize,
    // nodes[1] is the root, leaves live in nodes[capacity..2 * capacity].
    nodes: Vec<T>,
}

impl<T: Real> SumTree<T> {
    /// A tree with at least `min_capacity` leaves (rounded up to a power of two).
    pub fn new(min_capacity: usize) -> Self {
        let capacity = min_capacity.max(1).next_power_of_two();
        Self { capacity, nodes: vec![T::zero(); 2 * capacity] }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total(&self) -> T {
        self.nodes[1]
    }

    pub fn get(&self, leaf: usize) -> T {
        self.nodes[self.capacity + leaf]
    }

    pub fn leaves(&self) -> &[T] {
        &self.nodes[self.capacity..]
    }

    /// Sets a leaf and recomputes the sums on its path to the root.
    pub fn set(&mut self, leaf: usize, value: T) {
        assert!(leaf < self.capacity, "leaf {leaf} out of range");
        assert!(value >= T::zero(), "negative mass {value}");
        let mut i = self.capacity + leaf;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Leaf whose cumulative mass interval contains `mass`. Only leaves with
    /// positive mass are returned; `mass` at or beyond the total selects the
    /// last such leaf.
    pub fn find(&self, mut mass: T) -> usize {
        assert!(self.total() > T::zero(), "sampling from an empty tree");
        let mut i = 1;
        while i < self.capacity {
            let left = self.nodes[2 * i];
            let right = self.nodes[2 * i + 1];
            if mass < left || right <= T::zero() {
                i *= 2;
            } else {
                mass -= left;
                i = 2 * i + 1;
            }
        }
        i - self.capacity
    }
}

/// Running maximum over leaves; used for the insertion priority.
#[derive(Debug, Clone)]
pub struct MaxTree<T> {
    capacity: usize,
    nodes: Vec<T>,
}

impl<T: Real> MaxTree<T> {
    pub fn new(min_capacity: usize) -> Self {
        let capacity = min_capacity.max(1).next_power_of_two();
        Self { capacity, nodes: vec![T::zero(); 2 * capacity] }
    }

    pub fn set(&mut self, leaf: usize, value: T) {
        let mut i = self.capacity + leaf;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i].max(self.nodes[2 * i + 1]);
        }
    }

    pub fn max(&self) -> T {
        self.nodes[1]
    }
}
