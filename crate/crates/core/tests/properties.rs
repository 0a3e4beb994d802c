use proptest::prelude::*;

use cls_core::collapse::{default_radii, nu};
use cls_core::gh::{
    diameter_bound, epsilon_isometry_check, gh_exact, gh_upper, measured_gh, Correspondence,
};
use cls_core::graph::edge_rule;
use cls_core::io::{space_from_str, space_to_string};
use cls_core::metric::{ball_volume, components};
use cls_core::{DistanceMatrix, Edge, FiniteMetricMeasureSpace, Point, PointSubset};

fn arb_space(max_points: usize, fill: f64) -> impl Strategy<Value = FiniteMetricMeasureSpace> {
    arb_graph(max_points, fill, 1.0)
}

/// Weighted graph: a random spanning tree with each edge kept with
/// probability `keep`, plus extra random edges.
fn arb_graph(
    max_points: usize,
    fill: f64,
    keep: f64,
) -> impl Strategy<Value = FiniteMetricMeasureSpace> {
    (2..=max_points)
        .prop_flat_map(move |n| {
            (
                Just(n),
                prop::collection::vec(0.05f64..1.0, n),
                prop::collection::vec(
                    (any::<prop::sample::Index>(), 0.1f64..2.0, prop::bool::weighted(keep)),
                    n - 1,
                ),
                prop::collection::vec((0..n, 0..n, 0.1f64..2.0), 0..n),
            )
        })
        .prop_map(move |(_, weights, tree, extra)| {
            let points = weights.into_iter().map(Point::new).collect();
            let mut edges: Vec<Edge> = tree
                .into_iter()
                .enumerate()
                .filter(|(_, (_, _, kept))| *kept)
                .map(|(i, (parent, length, _))| Edge {
                    a: parent.index(i + 1),
                    b: i + 1,
                    length,
                })
                .collect();
            edges.extend(extra.into_iter().map(|(a, b, length)| Edge { a, b, length }));
            let mut seen = std::collections::HashSet::new();
            edges.retain(|e| e.a != e.b && seen.insert((e.a.min(e.b), e.a.max(e.b))));
            FiniteMetricMeasureSpace::new(points, edges, Some(0), fill)
        })
}

/// Euclidean distances of random points in the plane.
fn arb_matrix(max_points: usize) -> impl Strategy<Value = DistanceMatrix> {
    prop::collection::vec((0.0f64..3.0, 0.0f64..3.0), 1..=max_points).prop_map(|pts| {
        DistanceMatrix::from_fn(pts.len(), |i, j| {
            (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1)
        })
    })
}

fn connected_count(space: &FiniteMetricMeasureSpace) -> usize {
    let n = space.num_points();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for (v, _) in space.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shortest_paths_form_a_metric(space in arb_space(12, 0.01)) {
        let d = DistanceMatrix::from_space(&space);
        let n = d.len();
        for i in 0..n {
            prop_assert_eq!(d.get(i, i), 0.0);
            for j in 0..n {
                prop_assert_eq!(d.get(i, j), d.get(j, i));
                for k in 0..n {
                    prop_assert!(d.get(i, k) <= d.get(i, j) + d.get(j, k) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn relabeling_preserves_distances(space in arb_space(10, 0.01), seed in any::<u64>()) {
        let n = space.num_points();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left((seed as usize) % n);
        let moved = space.relabel(&perm);
        let (a, b) = (DistanceMatrix::from_space(&space), DistanceMatrix::from_space(&moved));
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(a.get(i, j), b.get(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn ball_volume_grows_with_radius(space in arb_space(10, 0.01), r in 0.01f64..3.0, dr in 0.0f64..2.0) {
        let small = ball_volume(&space, 0, r).unwrap();
        let large = ball_volume(&space, 0, r + dr).unwrap();
        prop_assert!(small <= large);
        prop_assert!(large <= space.total_mass() + 1e-12);
    }

    #[test]
    fn wide_hops_recover_connected_components(space in arb_graph(12, 0.01, 0.6)) {
        let parts = components(&space, &PointSubset::full(space.num_points()), 10.0).unwrap();
        prop_assert_eq!(parts.len(), connected_count(&space));
        let covered: usize = parts.iter().map(|p| p.len()).sum();
        prop_assert_eq!(covered, space.num_points());
    }

    #[test]
    fn nu_is_linear_in_the_measure(space in arb_space(10, 0.01), c in 0.1f64..10.0) {
        let scaled = space.with_weights(&space.weights().iter().map(|w| w * c).collect::<Vec<_>>());
        let radii = default_radii(&space).unwrap();
        for x in 0..space.num_points() {
            let a = nu(&space, x, &radii).unwrap();
            let b = nu(&scaled, x, &radii).unwrap();
            prop_assert!((b - c * a).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn space_documents_round_trip(space in arb_space(10, 0.01)) {
        let text = space_to_string(&space);
        let back = space_from_str(&text).unwrap();
        prop_assert_eq!(space_to_string(&back), text);
    }

    #[test]
    fn unique_nearest_neighbors_are_adjacent(m in arb_matrix(8)) {
        let edges = edge_rule(&m);
        for a in 0..m.len() {
            let mut others: Vec<usize> = (0..m.len()).filter(|&b| b != a).collect();
            others.sort_by(|&i, &j| m.get(a, i).total_cmp(&m.get(a, j)));
            if others.len() >= 2 && m.get(a, others[0]) < m.get(a, others[1]) && m.get(a, others[0]) > 0.0 {
                let b = others[0];
                prop_assert!(edges.contains(&(a.min(b), a.max(b))));
            }
        }
        for &(a, b) in &edges {
            prop_assert!(a < b && m.get(a, b).is_finite());
        }
    }

    #[test]
    fn exact_gh_is_a_certified_symmetric_bound(x in arb_matrix(6), y in arb_matrix(6)) {
        let xy = gh_exact(&x, &y).unwrap();
        let yx = gh_exact(&y, &x).unwrap();
        prop_assert!((xy.upper - yx.upper).abs() <= 1e-12);
        prop_assert!(xy.lower <= xy.upper);
        prop_assert!(xy.upper >= diameter_bound(&x, &y) - 1e-12);
        let half = 0.5 * xy.certificate.distortion(&x, &y).unwrap();
        prop_assert!((half - xy.upper).abs() <= 1e-12);
        prop_assert_eq!(gh_exact(&x, &x).unwrap().upper, 0.0);
    }

    #[test]
    fn exact_gh_obeys_the_triangle_inequality(x in arb_matrix(5), y in arb_matrix(5), z in arb_matrix(5)) {
        let xy = gh_exact(&x, &y).unwrap().upper;
        let yz = gh_exact(&y, &z).unwrap().upper;
        let xz = gh_exact(&x, &z).unwrap().upper;
        prop_assert!(xz <= xy + yz + 1e-12);
    }

    #[test]
    fn heuristic_never_beats_exact(x in arb_matrix(7), y in arb_matrix(7), seed in any::<u64>()) {
        let exact = gh_exact(&x, &y).unwrap();
        let upper = gh_upper(&x, &y, 3, seed).unwrap();
        prop_assert!(upper.upper >= exact.upper - 1e-12);
        let again = gh_upper(&x, &y, 3, seed).unwrap();
        prop_assert_eq!(upper.upper, again.upper);
        let half = 0.5 * upper.certificate.distortion(&x, &y).unwrap();
        prop_assert!((half - upper.upper).abs() <= 1e-12);
    }

    #[test]
    fn identity_is_an_isometry(space in arb_space(10, 0.01)) {
        let d = DistanceMatrix::from_space(&space);
        let id: Vec<usize> = (0..d.len()).collect();
        let v = epsilon_isometry_check(&d, &d, &id, 1e-9).unwrap();
        prop_assert!(v.pass);
        let m = measured_gh(&space, &space, &Correspondence::identity(d.len())).unwrap();
        prop_assert_eq!(m.distortion, 0.0);
        prop_assert!(m.transport_cost.abs() <= 1e-12);
        prop_assert_eq!(m.mass_defect, 0.0);
    }

    #[test]
    fn mass_defect_is_the_mass_difference(space in arb_space(10, 0.01), c in 0.2f64..5.0) {
        let scaled = space.with_weights(&space.weights().iter().map(|w| w * c).collect::<Vec<_>>());
        let m = measured_gh(&space, &scaled, &Correspondence::identity(space.num_points())).unwrap();
        let expected = (space.total_mass() - scaled.total_mass()).abs();
        prop_assert!((m.mass_defect - expected).abs() <= 1e-12 * expected.max(1.0));
        prop_assert!(m.transport_cost.abs() <= 1e-9);
        prop_assert!(m.duality_gap >= -1e-12);
    }
}
