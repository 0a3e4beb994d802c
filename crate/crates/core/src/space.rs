//! Finite metric measure spaces sampled from a manifold.
//!
//! A space is a weighted graph: the metric is the shortest-path length over
//! the edges, the measure is a nonnegative mass per point. Spaces are
//! immutable once built; validation runs at construction and its report is
//! kept with the space.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    /// Chart parameters of the sample, when the generator knows them.
    pub coords: Option<Vec<f64>>,
    pub weight: f64,
    /// Gauss curvature at the sample (1/length²).
    pub curvature: Option<f64>,
}

impl Point {
    pub fn new(weight: f64) -> Self {
        Self {
            coords: None,
            weight,
            curvature: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    NonpositiveEdgeLength,
    NegativeWeight,
    AsymmetricAdjacency,
    UnknownEndpoint,
    SelfLoop,
    InvalidBasepoint,
    NonFiniteMass,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::NonpositiveEdgeLength => "nonpositive edge length",
            ViolationKind::NegativeWeight => "negative weight",
            ViolationKind::AsymmetricAdjacency => "asymmetric adjacency",
            ViolationKind::UnknownEndpoint => "unknown edge endpoint",
            ViolationKind::SelfLoop => "self loop",
            ViolationKind::InvalidBasepoint => "invalid basepoint",
            ViolationKind::NonFiniteMass => "non-finite total mass",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{} ({})", v.kind, v.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FiniteMetricMeasureSpace {
    points: Vec<Point>,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    lengths: Vec<f64>,
    basepoint: Option<usize>,
    mesh_fill_radius: f64,
    report: ValidationReport,
}

impl FiniteMetricMeasureSpace {
    /// Builds a space from raw parts. Never fails: problems are recorded in
    /// [`validate_space`] and analysis operations refuse invalid spaces.
    pub fn new(
        points: Vec<Point>,
        edges: Vec<Edge>,
        basepoint: Option<usize>,
        mesh_fill_radius: f64,
    ) -> Self {
        let n = points.len();
        let report = check(&points, &edges, basepoint);

        let mut degree = vec![0usize; n + 1];
        for e in edges.iter().filter(|e| e.a < n && e.b < n && e.a != e.b) {
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        let mut lengths = vec![0.0; offsets[n]];
        for e in edges.iter().filter(|e| e.a < n && e.b < n && e.a != e.b) {
            targets[fill[e.a]] = e.b as u32;
            lengths[fill[e.a]] = e.length;
            fill[e.a] += 1;
            targets[fill[e.b]] = e.a as u32;
            lengths[fill[e.b]] = e.length;
            fill[e.b] += 1;
        }

        Self {
            points,
            edges,
            offsets,
            targets,
            lengths,
            basepoint,
            mesh_fill_radius,
            report,
        }
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.points[i].weight
    }

    pub fn weights(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.weight).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        self.points[i].coords.as_deref()
    }

    pub fn curvature(&self, i: usize) -> Option<f64> {
        self.points[i].curvature
    }

    /// True when every point carries a curvature value.
    pub fn has_curvature(&self) -> bool {
        !self.points.is_empty() && self.points.iter().all(|p| p.curvature.is_some())
    }

    pub fn basepoint(&self) -> Option<usize> {
        self.basepoint
    }

    pub fn mesh_fill_radius(&self) -> f64 {
        self.mesh_fill_radius
    }

    /// Three mesh fill radii.
    pub fn default_hop_radius(&self) -> f64 {
        3.0 * self.mesh_fill_radius
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.lengths[range])
            .map(|(&t, &l)| (t as usize, l))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.report
    }

    pub fn is_valid(&self) -> bool {
        self.report.is_ok()
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        if self.report.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidSpace(self.report.to_string()))
        }
    }

    pub(crate) fn check_point(&self, x: usize) -> Result<()> {
        if x < self.points.len() {
            Ok(())
        } else {
            Err(Error::UnknownPoint(x))
        }
    }

    /// Same metric, new measure.
    pub fn with_weights(&self, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), self.points.len());
        let points = self
            .points
            .iter()
            .zip(weights)
            .map(|(p, &w)| Point {
                weight: w,
                ..p.clone()
            })
            .collect();
        Self::new(
            points,
            self.edges.clone(),
            self.basepoint,
            self.mesh_fill_radius,
        )
    }

    pub fn with_basepoint(mut self, basepoint: Option<usize>) -> Self {
        self.basepoint = basepoint;
        self.report = check(&self.points, &self.edges, basepoint);
        self
    }

    /// Renames point `i` to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let n = self.points.len();
        assert_eq!(perm.len(), n);
        let mut points = vec![Point::new(0.0); n];
        for (i, p) in self.points.iter().enumerate() {
            points[perm[i]] = p.clone();
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                a: perm[e.a],
                b: perm[e.b],
                length: e.length,
            })
            .collect();
        Self::new(
            points,
            edges,
            self.basepoint.map(|b| perm[b]),
            self.mesh_fill_radius,
        )
    }

    /// Disjoint union; returns the union and the index offset of each part.
    /// The basepoint is taken from the first part that has one.
    pub fn disjoint_union(parts: &[&FiniteMetricMeasureSpace]) -> (Self, Vec<usize>) {
        let mut points = Vec::new();
        let mut edges = Vec::new();
        let mut offsets = Vec::with_capacity(parts.len());
        let mut basepoint = None;
        let mut h0: f64 = 0.0;
        for part in parts {
            let off = points.len();
            offsets.push(off);
            points.extend(part.points.iter().cloned());
            edges.extend(part.edges.iter().map(|e| Edge {
                a: e.a + off,
                b: e.b + off,
                length: e.length,
            }));
            if basepoint.is_none() {
                basepoint = part.basepoint.map(|b| b + off);
            }
            h0 = h0.max(part.mesh_fill_radius);
        }
        (Self::new(points, edges, basepoint, h0), offsets)
    }
}

fn check(points: &[Point], edges: &[Edge], basepoint: Option<usize>) -> ValidationReport {
    let n = points.len();
    let mut violations = Vec::new();
    for e in edges {
        if e.a >= n || e.b >= n {
            violations.push(Violation {
                kind: ViolationKind::UnknownEndpoint,
                detail: format!("edge ({}, {})", e.a, e.b),
            });
            continue;
        }
        if e.a == e.b {
            violations.push(Violation {
                kind: ViolationKind::SelfLoop,
                detail: format!("edge ({}, {})", e.a, e.b),
            });
        }
        // NaN fails this test as well.
        if !(e.length > 0.0 && e.length.is_finite()) {
            violations.push(Violation {
                kind: ViolationKind::NonpositiveEdgeLength,
                detail: format!("edge ({}, {}) has length {}", e.a, e.b, e.length),
            });
        }
    }
    for (i, p) in points.iter().enumerate() {
        if !(p.weight >= 0.0) {
            violations.push(Violation {
                kind: ViolationKind::NegativeWeight,
                detail: format!("point {i} has weight {}", p.weight),
            });
        }
    }
    let total: f64 = points.iter().map(|p| p.weight).sum();
    if !total.is_finite() && points.iter().all(|p| p.weight >= 0.0) {
        violations.push(Violation {
            kind: ViolationKind::NonFiniteMass,
            detail: format!("total mass {total}"),
        });
    }

    // An undirected pair listed twice with different lengths is ambiguous.
    let mut pairs: Vec<(usize, usize, f64)> = edges
        .iter()
        .filter(|e| e.a < n && e.b < n && e.a != e.b)
        .map(|e| (e.a.min(e.b), e.a.max(e.b), e.length))
        .collect();
    pairs.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
    for w in pairs.windows(2) {
        if w[0].0 == w[1].0 && w[0].1 == w[1].1 && w[0].2.to_bits() != w[1].2.to_bits() {
            violations.push(Violation {
                kind: ViolationKind::AsymmetricAdjacency,
                detail: format!(
                    "pair ({}, {}) listed with lengths {} and {}",
                    w[0].0, w[0].1, w[0].2, w[1].2
                ),
            });
        }
    }

    if let Some(b) = basepoint {
        if b >= n {
            violations.push(Violation {
                kind: ViolationKind::InvalidBasepoint,
                detail: format!("basepoint {b} with {n} points"),
            });
        }
    }
    ValidationReport { violations }
}

/// Report of structural problems; empty when the space is usable.
pub fn validate_space(space: &FiniteMetricMeasureSpace) -> ValidationReport {
    space.report.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle4(len: f64, w: f64) -> FiniteMetricMeasureSpace {
        let points = (0..4).map(|_| Point::new(w)).collect();
        let edges = (0..4)
            .map(|i| Edge {
                a: i,
                b: (i + 1) % 4,
                length: len,
            })
            .collect();
        FiniteMetricMeasureSpace::new(points, edges, None, 0.5)
    }

    #[test]
    fn well_formed_cycle_has_no_violations() {
        assert!(validate_space(&cycle4(1.0, 1.0)).is_ok());
    }

    #[test]
    fn negative_edge_length_is_reported_once() {
        let mut s = cycle4(1.0, 1.0);
        let mut edges = s.edges.clone();
        edges[2].length = -1.0;
        s = FiniteMetricMeasureSpace::new(s.points.clone(), edges, None, 0.5);
        let report = validate_space(&s);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::NonpositiveEdgeLength);
        assert_eq!(report.violations[0].kind.to_string(), "nonpositive edge length");
    }

    #[test]
    fn negative_weight_is_reported_once() {
        let s = cycle4(1.0, 1.0);
        let mut w = s.weights();
        w[1] = -0.5;
        let report = validate_space(&s.with_weights(&w));
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::NegativeWeight);
    }

    #[test]
    fn conflicting_duplicate_edge_is_asymmetric() {
        let s = cycle4(1.0, 1.0);
        let mut edges = s.edges.clone();
        edges.push(Edge {
            a: 1,
            b: 0,
            length: 2.0,
        });
        let s = FiniteMetricMeasureSpace::new(s.points.clone(), edges, None, 0.5);
        assert_eq!(
            s.validation().count(ViolationKind::AsymmetricAdjacency),
            1
        );
        assert!(s.ensure_valid().is_err());
    }

    #[test]
    fn disjoint_union_offsets() {
        let a = cycle4(1.0, 1.0);
        let b = cycle4(2.0, 0.5);
        let (u, off) = FiniteMetricMeasureSpace::disjoint_union(&[&a, &b]);
        assert_eq!(off, vec![0, 4]);
        assert_eq!(u.num_points(), 8);
        assert_eq!(u.total_mass(), 6.0);
        assert!(u.neighbors(4).all(|(t, l)| t >= 4 && l == 2.0));
    }
}
