use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gh::{correspondence::gap, Correspondence};
use crate::metric::Dijkstra;
use crate::space::FiniteMetricMeasureSpace;
use crate::union_find::DisjointSet;

/// Components up to this many points are solved exactly.
pub const EXACT_TRANSPORT_CAP: usize = 2000;

/// Source rows used when estimating the distortion of a large correspondence.
pub const DISTORTION_ROWS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMethod {
    Exact,
    Greedy,
    /// Nothing to move.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredReport {
    /// Distortion of the correspondence; a lower estimate when
    /// `distortion_rows < pairs`.
    pub distortion: f64,
    pub distortion_rows: usize,
    pub pairs: usize,
    /// Earth mover cost between the pushforward of `μ_X` and `μ_Y`, each
    /// rescaled per component of `Y` to the smaller of the two masses.
    pub transport_cost: f64,
    pub method: TransportMethod,
    /// Primal cost minus a dual lower bound (0 for exact solves).
    pub duality_gap: f64,
    /// `|Σμ_X − Σμ_Y|`.
    pub mass_defect: f64,
    /// `Σ_c |pushforward(c) − μ_Y(c)|` over components `c` of `Y`.
    pub component_defect: f64,
    pub mass_x: f64,
    pub mass_y: f64,
}

impl MeasuredReport {
    /// Report against an empty target: all mass is lost.
    pub fn against_empty(x: &FiniteMetricMeasureSpace) -> Self {
        let m = x.total_mass();
        Self {
            distortion: 0.0,
            distortion_rows: 0,
            pairs: 0,
            transport_cost: 0.0,
            method: TransportMethod::None,
            duality_gap: 0.0,
            mass_defect: m,
            component_defect: m,
            mass_x: m,
            mass_y: 0.0,
        }
    }
}

/// Distortion of the relation `pairs`, measured from up to `max_rows` source
/// pairs (all of them when there are few enough) against every pair. Pairs
/// whose `X` side lies at infinite distance are skipped when `finite_x_only`.
pub(crate) fn relation_distortion(
    x: &FiniteMetricMeasureSpace,
    y: &FiniteMetricMeasureSpace,
    pairs: &[(usize, usize)],
    max_rows: usize,
    finite_x_only: bool,
) -> (f64, usize) {
    if pairs.is_empty() {
        return (0.0, 0);
    }
    let rows = spread_rows(x, pairs, max_rows);
    let worst = rows
        .iter()
        .map(|&r| {
            let (a, c) = pairs[r];
            let dxa = full_row(x, a);
            let dyc = full_row(y, c);
            pairs
                .iter()
                .filter(|&&(b, _)| !(finite_x_only && dxa[b].is_infinite()))
                .map(|&(b, d)| gap(dxa[b], dyc[d]))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    (worst, rows.len())
}

fn full_row(space: &FiniteMetricMeasureSpace, s: usize) -> Vec<f64> {
    let mut row = vec![f64::INFINITY; space.num_points()];
    Dijkstra::new(space.num_points()).run(space, &[s], f64::INFINITY, None, |p, d| {
        row[p] = d;
        true
    });
    row
}

/// Indices into `pairs` whose `X` points form a farthest-point spread.
fn spread_rows(x: &FiniteMetricMeasureSpace, pairs: &[(usize, usize)], max_rows: usize) -> Vec<usize> {
    if pairs.len() <= max_rows {
        return (0..pairs.len()).collect();
    }
    let mut rows = vec![0usize];
    let mut nearest: Vec<f64> = {
        let d = full_row(x, pairs[0].0);
        pairs.iter().map(|&(b, _)| d[b]).collect()
    };
    while rows.len() < max_rows {
        let next = (0..pairs.len())
            .max_by(|&i, &j| nearest[i].total_cmp(&nearest[j]).then(j.cmp(&i)))
            .expect("pairs are nonempty");
        if nearest[next] == 0.0 {
            break;
        }
        let d = full_row(x, pairs[next].0);
        for (n, &(b, _)) in nearest.iter_mut().zip(pairs) {
            *n = n.min(d[b]);
        }
        rows.push(next);
    }
    rows
}

/// Compares `X` and `Y` as metric measure spaces along `corr`: distortion,
/// transport cost of the pushforward `f_* μ_X` (f picks the lowest
/// corresponded id) against `μ_Y`, and the mass defect.
pub fn measured_gh(
    x: &FiniteMetricMeasureSpace,
    y: &FiniteMetricMeasureSpace,
    corr: &Correspondence,
) -> Result<MeasuredReport> {
    x.ensure_valid()?;
    y.ensure_valid()?;
    if corr.nx() != x.num_points() || corr.ny() != y.num_points() {
        return Err(Error::InvalidCorrespondence(format!(
            "correspondence is {} x {}, spaces have {} and {} points",
            corr.nx(),
            corr.ny(),
            x.num_points(),
            y.num_points()
        )));
    }
    let (distortion, distortion_rows) =
        relation_distortion(x, y, corr.pairs(), DISTORTION_ROWS.max(1), false);

    let ny = y.num_points();
    let mut push = vec![0.0; ny];
    for (p, &t) in corr.forward_map().iter().enumerate() {
        push[t] += x.weight(p);
    }
    let target = y.weights();
    let (mass_x, mass_y) = (x.total_mass(), y.total_mass());

    let mut ds = DisjointSet::new(ny);
    for e in y.edges() {
        ds.union(e.a, e.b);
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut label = vec![usize::MAX; ny];
    for p in 0..ny {
        let r = ds.find(p);
        if label[r] == usize::MAX {
            label[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[label[r]].push(p);
    }

    let mut cost = 0.0;
    let mut gap_total = 0.0;
    let mut component_defect = 0.0;
    let mut used_exact = false;
    let mut used_greedy = false;
    for nodes in &groups {
        let a: f64 = nodes.iter().map(|&p| push[p]).sum();
        let b: f64 = nodes.iter().map(|&p| target[p]).sum();
        component_defect += (a - b).abs();
        let m = a.min(b);
        if !(m > 0.0) {
            continue;
        }
        let excess: Vec<f64> = nodes
            .iter()
            .map(|&p| push[p] * m / a - target[p] * m / b)
            .collect();
        if nodes.len() <= EXACT_TRANSPORT_CAP {
            cost += exact_transport(y, nodes, &label_map(ny, nodes), excess, m);
            used_exact = true;
        } else {
            let (primal, dual) = greedy_transport(y, nodes, &label_map(ny, nodes), excess, m);
            cost += primal;
            gap_total += (primal - dual).max(0.0);
            used_greedy = true;
        }
    }
    let method = match (used_exact, used_greedy) {
        (_, true) => TransportMethod::Greedy,
        (true, false) => TransportMethod::Exact,
        (false, false) => TransportMethod::None,
    };
    Ok(MeasuredReport {
        distortion,
        distortion_rows,
        pairs: corr.len(),
        transport_cost: cost,
        method,
        duality_gap: gap_total,
        mass_defect: (mass_x - mass_y).abs(),
        component_defect,
        mass_x,
        mass_y,
    })
}

fn label_map(n: usize, nodes: &[usize]) -> Vec<usize> {
    let mut local = vec![usize::MAX; n];
    for (i, &p) in nodes.iter().enumerate() {
        local[p] = i;
    }
    local
}

/// Arcs of a component in local ids: `(from, to, length)`, both directions.
fn local_arcs(y: &FiniteMetricMeasureSpace, nodes: &[usize], local: &[usize]) -> Vec<Vec<(usize, usize, f64)>> {
    let mut out = vec![Vec::new(); nodes.len()];
    for (i, &p) in nodes.iter().enumerate() {
        for (q, len) in y.neighbors(p) {
            out[i].push((i, local[q], len));
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
struct Key(f64);
impl Eq for Key {}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Successive shortest paths with potentials on the component's graph.
/// Forward arcs are uncapacitated; the residual of a flow is a reverse arc
/// of negative cost.
fn exact_transport(
    y: &FiniteMetricMeasureSpace,
    nodes: &[usize],
    local: &[usize],
    mut excess: Vec<f64>,
    mass: f64,
) -> f64 {
    let n = nodes.len();
    let arcs = local_arcs(y, nodes, local);
    // flow[(u, v)] on the arc u→v, stored per adjacency slot.
    let mut flow: Vec<Vec<f64>> = arcs.iter().map(|a| vec![0.0; a.len()]).collect();
    // Slot of v→u for each u→v.
    let twin: Vec<Vec<usize>> = arcs
        .iter()
        .enumerate()
        .map(|(u, list)| {
            list.iter()
                .map(|&(_, v, _)| arcs[v].iter().position(|&(_, w, _)| w == u).expect("edges are symmetric"))
                .collect()
        })
        .collect();
    let tol = 1e-13 * mass;
    let mut potential = vec![0.0; n];
    let mut dist = vec![f64::INFINITY; n];
    // (node, slot, backward): the residual arc used to reach each node.
    let mut via: Vec<Option<(usize, usize, bool)>> = vec![None; n];
    let mut cost = 0.0;
    loop {
        if !excess.iter().any(|&e| e > tol) {
            break;
        }
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        via.iter_mut().for_each(|v| *v = None);
        let mut heap = BinaryHeap::new();
        for (i, &e) in excess.iter().enumerate() {
            if e > tol {
                dist[i] = 0.0;
                heap.push(Reverse((Key(0.0), i)));
            }
        }
        let mut sink = None;
        while let Some(Reverse((Key(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if excess[u] < -tol {
                sink = Some(u);
                break;
            }
            for (slot, &(_, v, len)) in arcs[u].iter().enumerate() {
                // Forward arc u→v, and the residual of flow on v→u.
                let back = flow[v][twin[u][slot]] > tol;
                let mut relax = |c: f64, backward: bool, dist: &mut Vec<f64>, heap: &mut BinaryHeap<_>| {
                    let nd = d + (c + potential[u] - potential[v]).max(0.0);
                    if nd < dist[v] {
                        dist[v] = nd;
                        via[v] = Some((u, slot, backward));
                        heap.push(Reverse((Key(nd), v)));
                    }
                };
                relax(len, false, &mut dist, &mut heap);
                if back {
                    relax(-len, true, &mut dist, &mut heap);
                }
            }
        }
        let Some(t) = sink else {
            // Balanced up to rounding.
            break;
        };
        let dt = dist[t];
        for i in 0..n {
            potential[i] += dist[i].min(dt);
        }
        // Bottleneck along the path.
        let mut amount = -excess[t];
        let mut v = t;
        while let Some((u, slot, backward)) = via[v] {
            if backward {
                amount = amount.min(flow[v][twin[u][slot]]);
            }
            v = u;
        }
        amount = amount.min(excess[v]);
        let source = v;
        let mut v = t;
        while let Some((u, slot, backward)) = via[v] {
            let len = arcs[u][slot].2;
            if backward {
                flow[v][twin[u][slot]] -= amount;
                cost -= amount * len;
            } else {
                flow[u][slot] += amount;
                cost += amount * len;
            }
            v = u;
        }
        excess[source] -= amount;
        excess[t] += amount;
    }
    cost
}

/// Moves each surplus, in id order, to the nearest remaining deficits.
/// The dual bound uses the 1-Lipschitz potential `d(·, deficits)`.
fn greedy_transport(
    y: &FiniteMetricMeasureSpace,
    nodes: &[usize],
    local: &[usize],
    excess: Vec<f64>,
    mass: f64,
) -> (f64, f64) {
    let tol = 1e-13 * mass;
    let mut left = excess.clone();
    let mut dj = Dijkstra::new(y.num_points());
    let mut primal = 0.0;
    for (i, &p) in nodes.iter().enumerate() {
        if left[i] <= tol {
            continue;
        }
        let mut supply = left[i];
        dj.run(y, &[p], f64::INFINITY, None, |q, d| {
            let j = local[q];
            if left[j] < -tol {
                let moved = supply.min(-left[j]);
                left[j] += moved;
                supply -= moved;
                primal += moved * d;
            }
            supply > tol
        });
        left[i] = supply;
    }
    let deficits: Vec<usize> = nodes
        .iter()
        .zip(&excess)
        .filter(|(_, &e)| e < -tol)
        .map(|(&p, _)| p)
        .collect();
    let mut to_deficit = vec![f64::INFINITY; y.num_points()];
    if !deficits.is_empty() {
        dj.run(y, &deficits, f64::INFINITY, None, |q, d| {
            to_deficit[q] = d;
            true
        });
    }
    let dual = nodes
        .iter()
        .zip(&excess)
        .filter(|(_, &e)| e > tol)
        .map(|(&p, &e)| e * to_deficit[p])
        .sum();
    (primal, dual)
}
