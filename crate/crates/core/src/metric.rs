//! Shortest-path metric, balls, subset components and set distances.
//!
//! Unreachable points sit at `f64::INFINITY`; disconnected spaces are
//! ordinary inputs. Balls are open: `B(x, r) = { y : d(x, y) < r }`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::FiniteMetricMeasureSpace;
use crate::subset::PointSubset;
use crate::union_find::DisjointSet;

#[derive(Debug, Clone, Copy)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable Dijkstra state. Resetting only touches the entries the last run
/// visited, so bounded searches on large spaces stay cheap.
pub struct Dijkstra {
    dist: Vec<f64>,
    done: Vec<bool>,
    touched: Vec<usize>,
    heap: BinaryHeap<HeapItem>,
}

impl Dijkstra {
    pub fn new(n: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; n],
            done: vec![false; n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        for &i in &self.touched {
            self.dist[i] = f64::INFINITY;
            self.done[i] = false;
        }
        self.touched.clear();
        self.heap.clear();
    }

    /// Settles points in nondecreasing distance from `sources` until the
    /// frontier reaches `bound` (points at distance `>= bound` are not
    /// visited). `allowed` restricts the search to an induced subgraph.
    /// Calls `visit(point, distance)`; returning `false` stops the search.
    pub fn run(
        &mut self,
        space: &FiniteMetricMeasureSpace,
        sources: &[usize],
        bound: f64,
        allowed: Option<&PointSubset>,
        mut visit: impl FnMut(usize, f64) -> bool,
    ) {
        self.reset();
        for &s in sources {
            if self.dist[s] > 0.0 {
                self.dist[s] = 0.0;
                self.touched.push(s);
                self.heap.push(HeapItem { dist: 0.0, node: s });
            }
        }
        while let Some(HeapItem { dist, node }) = self.heap.pop() {
            if self.done[node] {
                continue;
            }
            if dist >= bound {
                break;
            }
            self.done[node] = true;
            if !visit(node, dist) {
                break;
            }
            for (next, len) in space.neighbors(node) {
                if self.done[next] {
                    continue;
                }
                if let Some(mask) = allowed {
                    if !mask.contains(next) {
                        continue;
                    }
                }
                let cand = dist + len;
                if cand < self.dist[next] {
                    if self.dist[next].is_infinite() {
                        self.touched.push(next);
                    }
                    self.dist[next] = cand;
                    self.heap.push(HeapItem {
                        dist: cand,
                        node: next,
                    });
                }
            }
        }
    }
}

/// Single-source shortest-path distances; unreachable points are `+inf`.
pub fn distances_from(space: &FiniteMetricMeasureSpace, x: usize) -> Result<Vec<f64>> {
    space.check_point(x)?;
    let mut out = vec![f64::INFINITY; space.num_points()];
    let mut dj = Dijkstra::new(space.num_points());
    dj.run(space, &[x], f64::INFINITY, None, |p, d| {
        out[p] = d;
        true
    });
    Ok(out)
}

/// Distance from every point to the nearest point of `sources`.
pub fn distances_from_set(space: &FiniteMetricMeasureSpace, sources: &[usize]) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; space.num_points()];
    let mut dj = Dijkstra::new(space.num_points());
    dj.run(space, sources, f64::INFINITY, None, |p, d| {
        out[p] = d;
        true
    });
    out
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveRadius(r))
    }
}

/// Open ball `{ y : d(x, y) < r }`.
pub fn ball(space: &FiniteMetricMeasureSpace, x: usize, r: f64) -> Result<PointSubset> {
    space.check_point(x)?;
    check_radius(r)?;
    let mut out = PointSubset::empty(space.num_points());
    let mut dj = Dijkstra::new(space.num_points());
    dj.run(space, &[x], r, None, |p, _| {
        out.insert(p);
        true
    });
    Ok(out)
}

pub fn ball_volume(space: &FiniteMetricMeasureSpace, x: usize, r: f64) -> Result<f64> {
    let b = ball(space, x, r)?;
    Ok(b.iter().map(|i| space.weight(i)).sum())
}

/// Distances and cumulative mass around one center, out to some radius.
/// Answers `mu(B(x, r))` for any `r` up to that radius in O(log n).
#[derive(Debug, Clone)]
pub struct BallProfile {
    dists: Vec<f64>,
    cumulative: Vec<f64>,
    reach: f64,
}

impl BallProfile {
    pub fn compute(
        space: &FiniteMetricMeasureSpace,
        dj: &mut Dijkstra,
        x: usize,
        reach: f64,
    ) -> Self {
        let mut dists = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        dj.run(space, &[x], reach, None, |p, d| {
            acc += space.weight(p);
            dists.push(d);
            cumulative.push(acc);
            true
        });
        Self {
            dists,
            cumulative,
            reach,
        }
    }

    /// Mass of the open ball of radius `r <= reach`.
    pub fn mass_within(&self, r: f64) -> f64 {
        debug_assert!(r <= self.reach);
        let k = self.dists.partition_point(|&d| d < r);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Ball mass with each sample in the band `|d − r| < width / 2`
    /// counted by the fraction of the band inside the ball. Needs
    /// `r + width / 2 <= reach`.
    pub fn smoothed_mass_within(&self, r: f64, width: f64) -> f64 {
        debug_assert!(r + width / 2.0 <= self.reach);
        if !(width > 0.0) {
            return self.mass_within(r);
        }
        let lo = self.dists.partition_point(|&d| d < r - width / 2.0);
        let hi = self.dists.partition_point(|&d| d < r + width / 2.0);
        let mut mass = if lo == 0 { 0.0 } else { self.cumulative[lo - 1] };
        for i in lo..hi {
            let w = self.cumulative[i] - if i == 0 { 0.0 } else { self.cumulative[i - 1] };
            mass += w * ((r - self.dists[i]) / width + 0.5);
        }
        mass
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }
}

/// Partition of `subset` into chains whose consecutive points are within
/// `hop_radius` of each other, measured along paths that stay in the subset.
/// Parts are ordered by their smallest point id.
pub fn components(
    space: &FiniteMetricMeasureSpace,
    subset: &PointSubset,
    hop_radius: f64,
) -> Result<Vec<PointSubset>> {
    subset.check_space(space)?;
    check_radius(hop_radius)?;
    let n = space.num_points();
    if subset.is_empty() {
        return Ok(Vec::new());
    }
    let members = subset.to_vec();
    let reached: Vec<Vec<usize>> = members
        .par_iter()
        .map_init(
            || Dijkstra::new(n),
            |dj, &p| {
                let mut near = Vec::new();
                // Inclusive bound: chains may use steps of exactly hop_radius.
                dj.run(space, &[p], next_up(hop_radius), Some(subset), |q, _| {
                    if q > p {
                        near.push(q);
                    }
                    true
                });
                near
            },
        )
        .collect();
    let mut ds = DisjointSet::new(n);
    for (&p, near) in members.iter().zip(&reached) {
        for &q in near {
            ds.union(p, q);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut parts: Vec<PointSubset> = Vec::new();
    for &p in &members {
        let root = ds.find(p);
        if label[root] == usize::MAX {
            label[root] = parts.len();
            parts.push(PointSubset::empty(n));
        }
        parts[label[root]].insert(p);
    }
    Ok(parts)
}

/// `inf` of the full-space distance over `U x V`; `+inf` across components.
pub fn set_distance(
    space: &FiniteMetricMeasureSpace,
    u: &PointSubset,
    v: &PointSubset,
) -> Result<f64> {
    u.check_space(space)?;
    v.check_space(space)?;
    if u.is_empty() || v.is_empty() {
        return Err(Error::EmptyOperand("set_distance needs nonempty sets"));
    }
    let sources = u.to_vec();
    let mut best = f64::INFINITY;
    let mut dj = Dijkstra::new(space.num_points());
    dj.run(space, &sources, f64::INFINITY, None, |p, d| {
        if v.contains(p) {
            best = d;
            false
        } else {
            true
        }
    });
    Ok(best)
}

/// `subset` together with every point within `hop_radius` of it.
pub fn closure_approx(
    space: &FiniteMetricMeasureSpace,
    subset: &PointSubset,
    hop_radius: f64,
) -> Result<PointSubset> {
    subset.check_space(space)?;
    check_radius(hop_radius)?;
    let mut out = subset.clone();
    if subset.is_empty() {
        return Ok(out);
    }
    let sources = subset.to_vec();
    let mut dj = Dijkstra::new(space.num_points());
    dj.run(space, &sources, next_up(hop_radius), None, |p, _| {
        out.insert(p);
        true
    });
    Ok(out)
}

/// Smallest float above `x`, turning a strict bound into an inclusive one.
pub(crate) fn next_up(x: f64) -> f64 {
    if x.is_infinite() || x.is_nan() {
        return x;
    }
    let bits = x.to_bits();
    if x >= 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

/// Dense symmetric distance matrix of a finite metric space.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// All-pairs shortest paths, one Dijkstra per row.
    pub fn from_space(space: &FiniteMetricMeasureSpace) -> Self {
        let n = space.num_points();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map_init(
                || Dijkstra::new(n),
                |dj, x| {
                    let mut row = vec![f64::INFINITY; n];
                    dj.run(space, &[x], f64::INFINITY, None, |p, d| {
                        row[p] = d;
                        true
                    });
                    row
                },
            )
            .collect();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            data.extend(row);
        }
        let mut m = Self { n, data };
        m.symmetrize();
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self { n, data }
    }

    /// Rows from independent Dijkstra runs can differ in the last bit; keep
    /// the smaller value on both sides.
    fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.data[i * n + j].min(self.data[j * n + i]);
                self.data[i * n + j] = d;
                self.data[j * n + i] = d;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Largest finite distance.
    pub fn diameter(&self) -> f64 {
        self.data
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }

    /// Induced metric on a subset of points, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let m = indices.len();
        let mut data = vec![0.0; m * m];
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                data[a * m + b] = self.get(i, j);
            }
        }
        Self { n: m, data }
    }
}
