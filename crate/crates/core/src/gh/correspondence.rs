use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;

/// A relation between the points of two finite spaces that covers both.
///
/// Pairs are kept sorted and unique, so two correspondences with the same
/// relation compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correspondence {
    nx: usize,
    ny: usize,
    pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    pub fn new(nx: usize, ny: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        pairs.sort_unstable();
        pairs.dedup();
        let mut seen_x = vec![false; nx];
        let mut seen_y = vec![false; ny];
        for &(x, y) in &pairs {
            if x >= nx || y >= ny {
                return Err(Error::InvalidCorrespondence(format!(
                    "pair ({x}, {y}) outside {nx} x {ny}"
                )));
            }
            seen_x[x] = true;
            seen_y[y] = true;
        }
        if let Some(x) = seen_x.iter().position(|s| !s) {
            return Err(Error::InvalidCorrespondence(format!("point {x} of X is uncovered")));
        }
        if let Some(y) = seen_y.iter().position(|s| !s) {
            return Err(Error::InvalidCorrespondence(format!("point {y} of Y is uncovered")));
        }
        Ok(Self { nx, ny, pairs })
    }

    /// Graph of `f: X → Y` together with the graph of `g: Y → X`.
    pub fn from_maps(f: &[usize], g: &[usize]) -> Result<Self> {
        let pairs = f
            .iter()
            .enumerate()
            .map(|(x, &y)| (x, y))
            .chain(g.iter().enumerate().map(|(y, &x)| (x, y)))
            .collect();
        Self::new(f.len(), g.len(), pairs)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nx: n,
            ny: n,
            pairs: (0..n).map(|i| (i, i)).collect(),
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn inverse(&self) -> Self {
        let mut pairs: Vec<_> = self.pairs.iter().map(|&(x, y)| (y, x)).collect();
        pairs.sort_unstable();
        Self {
            nx: self.ny,
            ny: self.nx,
            pairs,
        }
    }

    /// Map `X → Y` choosing the lowest corresponded id of `Y`.
    pub fn forward_map(&self) -> Vec<usize> {
        let mut f = vec![usize::MAX; self.nx];
        for &(x, y) in &self.pairs {
            if f[x] == usize::MAX {
                f[x] = y;
            }
        }
        f
    }

    /// Map `Y → X` choosing the lowest corresponded id of `X`.
    pub fn backward_map(&self) -> Vec<usize> {
        let mut g = vec![usize::MAX; self.ny];
        for &(x, y) in &self.pairs {
            g[y] = g[y].min(x);
        }
        g
    }

    /// `sup |d_X(x, x') − d_Y(y, y')|` over pairs of pairs.
    pub fn distortion(&self, dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<f64> {
        if dx.len() != self.nx || dy.len() != self.ny {
            return Err(Error::InvalidCorrespondence(format!(
                "matrices are {} x {}, correspondence is {} x {}",
                dx.len(),
                dy.len(),
                self.nx,
                self.ny
            )));
        }
        let mut worst: f64 = 0.0;
        for (i, &(x, y)) in self.pairs.iter().enumerate() {
            for &(x2, y2) in &self.pairs[i + 1..] {
                worst = worst.max(gap(dx.get(x, x2), dy.get(y, y2)));
            }
        }
        Ok(worst)
    }
}

/// `|a − b|` with `|∞ − ∞| = 0` and `|∞ − finite| = ∞`.
pub fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}
