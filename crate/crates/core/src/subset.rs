//! Point subsets as membership bitsets over a space's point ids.

use bitvec::prelude::*;

use crate::error::{Error, Result};
use crate::space::FiniteMetricMeasureSpace;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointSubset {
    bits: BitVec<u64, Lsb0>,
}

impl PointSubset {
    pub fn empty(universe: usize) -> Self {
        Self {
            bits: bitvec![u64, Lsb0; 0; universe],
        }
    }

    pub fn full(universe: usize) -> Self {
        Self {
            bits: bitvec![u64, Lsb0; 1; universe],
        }
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(universe);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn from_predicate(universe: usize, mut pred: impl FnMut(usize) -> bool) -> Self {
        let mut s = Self::empty(universe);
        for i in 0..universe {
            if pred(i) {
                s.bits.set(i, true);
            }
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.get(i).map(|b| *b).unwrap_or(false)
    }

    pub fn insert(&mut self, i: usize) {
        self.bits.set(i, true);
    }

    pub fn remove(&mut self, i: usize) {
        self.bits.set(i, false);
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn first(&self) -> Option<usize> {
        self.bits.first_one()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits |= &other.bits;
        Self { bits }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits &= &other.bits;
        Self { bits }
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.intersection(&other.complement())
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: !self.bits.clone(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }

    pub fn intersects(&self, other: &Self) -> bool {
        !self.intersection(other).is_empty()
    }

    pub(crate) fn check_space(&self, space: &FiniteMetricMeasureSpace) -> Result<()> {
        if self.universe() == space.num_points() {
            Ok(())
        } else {
            Err(Error::SubsetMismatch {
                subset: self.universe(),
                space: space.num_points(),
            })
        }
    }
}
