//! Collapsing graphs: thick and thin pieces of a sampled surface at scale
//! `ε`, joined by a strict triangle rule on set distances.
//!
//! With `v(x) = μ(B(x, 1))`:
//!
//! - `B = {v ≤ λ₀ ε}`
//! - `C` = union of the components of `B` with `v_min ≤ λ₋ ε`
//! - `D = C ∪` components of `closure(M ∖ C)` with `v_max ≤ ε`
//! - vertices = components of `D`, plus components of `closure(M ∖ D)`
//!   with `v_max > λ₊ ε`
//!
//! `Z₁Z₂` is an edge iff `δ(Z₁, Z₂) < δ(Z₁, Z₃) + δ(Z₃, Z₂)` for every
//! other vertex `Z₃`, and `δ(Z₁, Z₂) < ∞`. Components and closures use
//! hop chains of length `hop` (see [`crate::metric::components`]).

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::CollapseField;
use crate::error::{Error, Result};
use crate::gh::Correspondence;
use crate::metric::{closure_approx, components, Dijkstra, DistanceMatrix};
use crate::space::FiniteMetricMeasureSpace;
use crate::subset::PointSubset;

pub const GRAPH_SCHEMA: &str = "cls-graph-1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub eps: f64,
    pub lambda_minus: f64,
    pub lambda_zero: f64,
    pub lambda_plus: f64,
    pub hop: f64,
    pub theta_alpha: f64,
}

impl GraphParams {
    /// Defaults `λ₋ = 1/4`, `λ₀ = 1/2`, `λ₊ = 2`, `θ_α = λ₋ ε / 4`.
    pub fn new(eps: f64, hop: f64) -> Self {
        Self::with_lambdas(eps, hop, 0.25, 0.5, 2.0)
    }

    pub fn with_lambdas(eps: f64, hop: f64, minus: f64, zero: f64, plus: f64) -> Self {
        Self {
            eps,
            lambda_minus: minus,
            lambda_zero: zero,
            lambda_plus: plus,
            hop,
            theta_alpha: minus * eps / 4.0,
        }
    }

    /// Defaults with the space's hop radius `3 h₀`.
    pub fn for_space(eps: f64, space: &FiniteMetricMeasureSpace) -> Self {
        Self::new(eps, space.default_hop_radius())
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_plus > 1.0
            && 1.0 > self.lambda_zero
            && self.lambda_zero > self.lambda_minus
            && self.lambda_minus > 0.0;
        if !ok {
            return Err(Error::InvalidParams(format!(
                "need λ₊ > 1 > λ₀ > λ₋ > 0, got {} / {} / {}",
                self.lambda_plus, self.lambda_zero, self.lambda_minus
            )));
        }
        for (name, x) in [
            ("eps", self.eps),
            ("hop", self.hop),
            ("theta_alpha", self.theta_alpha),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {x}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexClass {
    Alpha,
    Omega,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub points: PointSubset,
    pub v_min: f64,
    pub v_max: f64,
    pub class: VertexClass,
    /// Point used to follow this vertex through a correspondence.
    pub marker: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub b: PointSubset,
    pub c: PointSubset,
    pub d: PointSubset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapsingGraph {
    pub params: GraphParams,
    pub vertices: Vec<Vertex>,
    /// Pairs `(a, b)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Set distances `δ` between vertices.
    pub delta: DistanceMatrix,
    pub provenance: Provenance,
}

fn v_range(v: &[f64], part: &PointSubset) -> (f64, f64) {
    part.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
        (lo.min(v[i]), hi.max(v[i]))
    })
}

/// `δ` between every pair of vertices, one multi-source search per vertex.
fn set_distances(space: &FiniteMetricMeasureSpace, parts: &[PointSubset]) -> DistanceMatrix {
    let n = space.num_points();
    let m = parts.len();
    let mut owner: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, p) in parts.iter().enumerate() {
        for i in p.iter() {
            owner[i].push(j);
        }
    }
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map_init(
            || Dijkstra::new(n),
            |dj, i| {
                let mut row = vec![f64::INFINITY; m];
                let mut left = m;
                let sources = parts[i].to_vec();
                dj.run(space, &sources, f64::INFINITY, None, |p, d| {
                    for &j in &owner[p] {
                        if row[j].is_infinite() {
                            row[j] = d;
                            left -= 1;
                        }
                    }
                    left > 0
                });
                row
            },
        )
        .collect();
    DistanceMatrix::from_fn(m, |i, j| rows[i][j].min(rows[j][i]))
}

/// Pairs joined by the strict triangle rule.
pub fn edge_rule(delta: &DistanceMatrix) -> Vec<(usize, usize)> {
    let m = delta.len();
    let mut edges = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let d = delta.get(a, b);
            if d.is_finite()
                && (0..m)
                    .filter(|&c| c != a && c != b)
                    .all(|c| d < delta.get(a, c) + delta.get(c, b))
            {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Points of `part` at distance at least `depth` from its complement.
fn interior(space: &FiniteMetricMeasureSpace, part: &PointSubset, depth: f64) -> PointSubset {
    let outside = part.complement();
    let mut inner = part.clone();
    if outside.is_empty() {
        return inner;
    }
    let mut dj = Dijkstra::new(space.num_points());
    dj.run(space, &outside.to_vec(), depth, None, |p, _| {
        inner.remove(p);
        true
    });
    inner
}

fn pick_marker(
    space: &FiniteMetricMeasureSpace,
    v: &[f64],
    part: &PointSubset,
    class: VertexClass,
    params: &GraphParams,
) -> Option<usize> {
    let inner = interior(space, part, 2.0 * params.hop);
    let pool = if inner.is_empty() { part } else { &inner };
    match class {
        // Largest v, lowest id on ties.
        VertexClass::Alpha => pool
            .iter()
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if v[b] >= v[i] => Some(b),
                _ => Some(i),
            }),
        // A point with v in (λ₋ε/2, λ₋ε), else the one closest to that band.
        VertexClass::Omega => {
            let (lo, hi) = (0.5 * params.lambda_minus * params.eps, params.lambda_minus * params.eps);
            let mid = 0.5 * (lo + hi);
            pool.iter()
                .find(|&i| v[i] > lo && v[i] < hi)
                .or_else(|| {
                    pool.iter().fold(None, |best: Option<usize>, i| match best {
                        Some(b) if (v[b] - mid).abs() <= (v[i] - mid).abs() => Some(b),
                        _ => Some(i),
                    })
                })
        }
    }
}

/// Runs the four-stage construction and the edge rule.
pub fn build_graph(
    space: &FiniteMetricMeasureSpace,
    field: &CollapseField,
    params: &GraphParams,
) -> Result<CollapsingGraph> {
    params.validate()?;
    space.ensure_valid()?;
    if field.len() != space.num_points() {
        return Err(Error::FieldMismatch {
            field: field.len(),
            space: space.num_points(),
        });
    }
    let n = space.num_points();
    let v = &field.v;
    let eps = params.eps;
    let hop = params.hop;

    let b = PointSubset::from_predicate(n, |i| v[i] <= params.lambda_zero * eps);
    let mut c = PointSubset::empty(n);
    for part in components(space, &b, hop)? {
        if v_range(v, &part).0 <= params.lambda_minus * eps {
            c = c.union(&part);
        }
    }
    let mut d = c.clone();
    for part in components(space, &closure_approx(space, &c.complement(), hop)?, hop)? {
        if v_range(v, &part).1 <= eps {
            d = d.union(&part);
        }
    }
    debug_assert!(c.is_subset(&b) && c.is_subset(&d));

    let mut parts: Vec<PointSubset> = components(space, &d, hop)?;
    let thick = components(space, &closure_approx(space, &d.complement(), hop)?, hop)?;
    parts.extend(
        thick
            .into_iter()
            .filter(|p| v_range(v, p).1 > params.lambda_plus * eps),
    );

    let mut vertices: Vec<Vertex> = parts
        .into_iter()
        .map(|points| {
            let (v_min, v_max) = v_range(v, &points);
            let class = if v_min > params.theta_alpha {
                VertexClass::Alpha
            } else {
                VertexClass::Omega
            };
            Vertex {
                points,
                v_min,
                v_max,
                class,
                marker: None,
            }
        })
        .collect();
    vertices.sort_by_key(|z| (z.class, z.points.first()));
    for z in &mut vertices {
        z.marker = pick_marker(space, v, &z.points, z.class, params);
    }

    let parts: Vec<PointSubset> = vertices.iter().map(|z| z.points.clone()).collect();
    let delta = set_distances(space, &parts);
    let edges = edge_rule(&delta);
    Ok(CollapsingGraph {
        params: *params,
        vertices,
        edges,
        delta,
        provenance: Provenance { b, c, d },
    })
}

impl CollapsingGraph {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn alpha_count(&self) -> usize {
        self.vertices
            .iter()
            .filter(|z| z.class == VertexClass::Alpha)
            .count()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn neighbors(&self, a: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(x, y)| {
                if x == a {
                    Some(y)
                } else if y == a {
                    Some(x)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Connected components of the graph, each sorted, ordered by first id.
    pub fn graph_components(&self) -> Vec<Vec<usize>> {
        let m = self.num_vertices();
        let mut ds = crate::union_find::DisjointSet::new(m);
        for &(a, b) in &self.edges {
            ds.union(a, b);
        }
        let mut label = vec![usize::MAX; m];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..m {
            let r = ds.find(i);
            if label[r] == usize::MAX {
                label[r] = out.len();
                out.push(Vec::new());
            }
            out[label[r]].push(i);
        }
        out
    }

    /// Edges whose endpoints lie at infinite distance (always zero for
    /// graphs built here).
    pub fn cross_component_edges(&self) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| self.delta.get(a, b).is_infinite())
            .count()
    }

    /// First vertex (in order) containing point `p`.
    pub fn vertex_of(&self, p: usize) -> Option<usize> {
        self.vertices.iter().position(|z| z.points.contains(p))
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            schema: GRAPH_SCHEMA.to_string(),
            vertices: self
                .vertices
                .iter()
                .enumerate()
                .map(|(id, z)| VertexRecord {
                    id,
                    class: z.class,
                    size: z.points.len(),
                    v_min: z.v_min,
                    v_max: z.v_max,
                })
                .collect(),
            edges: self.edges.iter().map(|&(a, b)| EdgeRecord { a, b }).collect(),
            cross_component_edges: self.cross_component_edges(),
            params: ParamsRecord {
                eps: self.params.eps,
                lambdas: [
                    self.params.lambda_minus,
                    self.params.lambda_zero,
                    self.params.lambda_plus,
                ],
                hop: self.params.hop,
                theta_alpha: self.params.theta_alpha,
            },
            provenance: ProvenanceRecord {
                b: self.provenance.b.len(),
                c: self.provenance.c.len(),
                d: self.provenance.d.len(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: usize,
    pub class: VertexClass,
    pub size: usize,
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub eps: f64,
    /// `[λ₋, λ₀, λ₊]`.
    pub lambdas: [f64; 3],
    pub hop: f64,
    pub theta_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

/// Serialized graph (`cls-graph-1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub schema: String,
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
    /// Edges joining different components of the underlying space.
    #[serde(default)]
    pub cross_component_edges: usize,
    pub params: ParamsRecord,
    pub provenance: ProvenanceRecord,
}

impl GraphDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents are plain data")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.schema != GRAPH_SCHEMA {
            return Err(Error::Schema(format!(
                "expected schema {GRAPH_SCHEMA}, found {}",
                doc.schema
            )));
        }
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarComponent {
    pub vertices: Vec<usize>,
    pub center: Option<usize>,
    pub leaves: usize,
    pub is_star: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    pub components: Vec<StarComponent>,
    pub expected: Vec<usize>,
    pub pass: bool,
    pub message: String,
}

/// Checks that every graph component is a star around its only α vertex
/// and that the leaf counts match `expected` (as multisets).
pub fn star_check(graph: &CollapsingGraph, expected: &[usize]) -> StarReport {
    let mut comps = Vec::new();
    for verts in graph.graph_components() {
        let alphas: Vec<usize> = verts
            .iter()
            .copied()
            .filter(|&i| graph.vertices[i].class == VertexClass::Alpha)
            .collect();
        let mut reason = None;
        let center = if alphas.len() == 1 {
            Some(alphas[0])
        } else {
            reason = Some(format!("{} alpha vertices", alphas.len()));
            None
        };
        if let Some(c) = center {
            for &i in &verts {
                if i == c {
                    continue;
                }
                let nb = graph.neighbors(i);
                if nb != [c] {
                    reason = Some(format!(
                        "leaf {i} is adjacent to {nb:?}, not only to the center {c}"
                    ));
                    break;
                }
            }
        }
        comps.push(StarComponent {
            leaves: verts.len() - 1,
            is_star: reason.is_none(),
            center,
            vertices: verts,
            reason,
        });
    }
    let mut found: Vec<usize> = comps.iter().map(|c| c.leaves).collect();
    let mut want = expected.to_vec();
    found.sort_unstable();
    want.sort_unstable();
    let all_stars = comps.iter().all(|c| c.is_star);
    let pass = all_stars && found == want && !expected.is_empty();
    let message = if !all_stars {
        "not a star".to_string()
    } else if found != want {
        format!("leaf counts {found:?}, expected {want:?}")
    } else if expected.is_empty() {
        "no expected ends given".to_string()
    } else {
        "star".to_string()
    };
    StarReport {
        components: comps,
        expected: expected.to_vec(),
        pass,
        message,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphismReport {
    /// Image of each source vertex; `None` when its marker has no image.
    pub map: Vec<Option<usize>>,
    pub unmapped: Vec<usize>,
    pub edge_preserving: bool,
    pub surjective: bool,
    pub injective_on_alpha: bool,
    pub source_vertices: usize,
    pub source_alpha: usize,
    pub target_vertices: usize,
    pub target_alpha: usize,
}

/// Follows each vertex of `source` through `corr` (source points → target
/// points, lowest id) via its marker point and reports the properties of
/// the induced vertex map. An edge is preserved when its endpoints map to
/// adjacent or equal vertices.
pub fn graph_morphism(
    source: &CollapsingGraph,
    target: &CollapsingGraph,
    corr: &Correspondence,
) -> Result<MorphismReport> {
    let universe = source.provenance.b.universe();
    if corr.nx() != universe || corr.ny() != target.provenance.b.universe() {
        return Err(Error::InvalidCorrespondence(format!(
            "correspondence is {} x {}, graphs cover {} and {} points",
            corr.nx(),
            corr.ny(),
            universe,
            target.provenance.b.universe()
        )));
    }
    let f = corr.forward_map();
    let map: Vec<Option<usize>> = source
        .vertices
        .iter()
        .map(|z| z.marker.and_then(|p| target.vertex_of(f[p])))
        .collect();
    let unmapped: Vec<usize> = (0..map.len()).filter(|&i| map[i].is_none()).collect();
    let edge_preserving = source.edges.iter().all(|&(a, b)| match (map[a], map[b]) {
        (Some(x), Some(y)) => x == y || target.has_edge(x, y),
        _ => false,
    });
    let mut hit = vec![false; target.num_vertices()];
    for y in map.iter().flatten() {
        hit[*y] = true;
    }
    let mut alpha_images: Vec<Option<usize>> = source
        .vertices
        .iter()
        .zip(&map)
        .filter(|(z, _)| z.class == VertexClass::Alpha)
        .map(|(_, m)| *m)
        .collect();
    let alpha_total = alpha_images.len();
    alpha_images.sort_unstable();
    alpha_images.dedup();
    Ok(MorphismReport {
        unmapped,
        edge_preserving,
        surjective: hit.iter().all(|&h| h),
        injective_on_alpha: alpha_images.len() == alpha_total && !alpha_images.contains(&None),
        source_vertices: source.num_vertices(),
        source_alpha: source.alpha_count(),
        target_vertices: target.num_vertices(),
        target_alpha: target.alpha_count(),
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Edge, Point};

    /// Field with prescribed `v` and `ν = v`.
    fn field(v: Vec<f64>) -> CollapseField {
        CollapseField {
            nu: v.clone(),
            v,
            radii: vec![0.5],
            dimension: 2,
            omega: std::f64::consts::PI,
        }
    }

    fn path(n: usize) -> FiniteMetricMeasureSpace {
        let points = (0..n).map(|_| Point::new(1.0)).collect();
        let edges = (0..n - 1)
            .map(|i| Edge {
                a: i,
                b: i + 1,
                length: 1.0,
            })
            .collect();
        FiniteMetricMeasureSpace::new(points, edges, None, 0.4)
    }

    #[test]
    fn invalid_lambdas_rejected() {
        let p = GraphParams::with_lambdas(1.0, 1.0, 0.5, 0.25, 2.0);
        assert!(p.validate().is_err());
        assert!(GraphParams::new(0.0, 1.0).validate().is_err());
    }

    #[test]
    fn field_mismatch() {
        let s = path(4);
        assert!(matches!(
            build_graph(&s, &field(vec![1.0; 3]), &GraphParams::new(1.0, 1.2)),
            Err(Error::FieldMismatch { .. })
        ));
    }

    #[test]
    fn two_vertices_one_edge() {
        // Thin end at 0..2, thick body 3..9.
        let s = path(10);
        let v = vec![0.01, 0.1, 0.4, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0];
        let g = build_graph(&s, &field(v), &GraphParams::new(1.0, 1.2)).unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.edges, vec![(0, 1)]);
        assert_eq!(g.vertices[0].class, VertexClass::Alpha);
        assert_eq!(g.vertices[1].class, VertexClass::Omega);
    }

    #[test]
    fn cusp_cylinder_shape_is_star() {
        let s = path(12);
        let mut v = vec![3.0; 12];
        v[..3].copy_from_slice(&[0.01, 0.1, 0.4]);
        v[9..].copy_from_slice(&[0.4, 0.1, 0.01]);
        let g = build_graph(&s, &field(v), &GraphParams::new(1.0, 1.2)).unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.edges.len(), 2);
        let rep = star_check(&g, &[2]);
        assert!(rep.pass, "{rep:?}");
        assert!(!star_check(&g, &[3]).pass);
        let m = graph_morphism(&g, &g, &Correspondence::identity(12)).unwrap();
        assert!(m.edge_preserving && m.surjective && m.injective_on_alpha);
    }

    #[test]
    fn whole_thick_space_is_single_alpha() {
        let s = path(5);
        let g = build_graph(&s, &field(vec![5.0; 5]), &GraphParams::new(1.0, 1.2)).unwrap();
        assert_eq!(g.num_vertices(), 1);
        assert!(g.edges.is_empty());
        assert!(star_check(&g, &[0]).pass);
    }

    #[test]
    fn disconnected_vertices_are_never_adjacent() {
        let a = path(4);
        let (s, _) = FiniteMetricMeasureSpace::disjoint_union(&[&a, &a]);
        let g = build_graph(&s, &field(vec![5.0; 8]), &GraphParams::new(1.0, 1.2)).unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert!(g.edges.is_empty());
        assert_eq!(g.cross_component_edges(), 0);
    }

    #[test]
    fn edge_rule_infinity_convention() {
        let inf = f64::INFINITY;
        let d = DistanceMatrix::from_fn(3, |i, j| match (i.min(j), i.max(j)) {
            (0, 1) => 1.0,
            (0, 2) | (1, 2) => inf,
            _ => 0.0,
        });
        // 0-1 finite against ∞ detours: kept; pairs at ∞ never join.
        assert_eq!(edge_rule(&d), vec![(0, 1)]);
    }

    #[test]
    fn document_round_trip() {
        let s = path(12);
        let mut v = vec![3.0; 12];
        v[..3].copy_from_slice(&[0.01, 0.1, 0.4]);
        let g = build_graph(&s, &field(v), &GraphParams::new(1.0, 1.2)).unwrap();
        let text = g.to_document().to_json();
        let back = GraphDocument::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(back.vertices.len(), g.num_vertices());
    }
}
