//! Gromov–Hausdorff estimates between finite metric (measure) spaces.
//!
//! Distances are computed through correspondences: `d_GH = ½ inf dis(R)`.
//! A correspondence of distortion `δ` yields a `δ`-isometry by selecting
//! one partner per point, which is what [`epsilon_isometry_check`] tests.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{distances_from, DistanceMatrix};
use crate::space::FiniteMetricMeasureSpace;

pub mod convergence;
pub mod correspondence;
pub mod exact;
pub mod heuristic;
pub mod measured;

pub use convergence::{volume_exhausted_check, ConvergenceMember, ConvergenceReport, ExhaustionEntry};
pub use correspondence::Correspondence;
pub use exact::{gh_exact, gh_exact_pointed, EXACT_CAP};
pub use heuristic::{gh_upper, gh_upper_pointed};
pub use measured::{measured_gh, MeasuredReport, TransportMethod, EXACT_TRANSPORT_CAP};

pub const GH_SCHEMA: &str = "cls-gh-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhMode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhEstimate {
    pub lower: f64,
    pub upper: f64,
    /// Correspondence whose half-distortion is `upper`.
    pub certificate: Correspondence,
    pub mode: GhMode,
}

/// `½ |diam X − diam Y|`, a lower bound for `d_GH`. If exactly one side has
/// points at infinite distance the bound is infinite; if both do it is 0.
pub fn diameter_bound(dx: &DistanceMatrix, dy: &DistanceMatrix) -> f64 {
    let split = |d: &DistanceMatrix| (0..d.len()).any(|i| d.row(i).iter().any(|v| v.is_infinite()));
    match (split(dx), split(dy)) {
        (false, false) => 0.5 * (dx.diameter() - dy.diameter()).abs(),
        (true, true) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Exact when `|X|·|Y|` is within [`EXACT_CAP`], heuristic otherwise.
pub fn gh_auto(dx: &DistanceMatrix, dy: &DistanceMatrix, effort: usize, seed: u64) -> Result<GhEstimate> {
    if dx.len() * dy.len() <= EXACT_CAP {
        gh_exact(dx, dy)
    } else {
        gh_upper(dx, dy, effort, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointedEstimate {
    pub estimate: GhEstimate,
    /// Points of `B(x, R)`; certificate indices refer to this list.
    pub x_ball: Vec<usize>,
    pub y_ball: Vec<usize>,
}

fn open_ball(d: &DistanceMatrix, center: usize, radius: f64) -> Vec<usize> {
    (0..d.len()).filter(|&j| d.get(center, j) < radius).collect()
}

/// GH estimate between `B(x, R)` and `B(y, R)` with `x` and `y` kept in
/// correspondence.
pub fn pointed_gh(
    dx: &DistanceMatrix,
    x: usize,
    dy: &DistanceMatrix,
    y: usize,
    radius: f64,
    effort: usize,
    seed: u64,
) -> Result<PointedEstimate> {
    if !(radius > 0.0) {
        return Err(Error::NonPositiveRadius(radius));
    }
    if x >= dx.len() {
        return Err(Error::UnknownPoint(x));
    }
    if y >= dy.len() {
        return Err(Error::UnknownPoint(y));
    }
    let x_ball = open_ball(dx, x, radius);
    let y_ball = open_ball(dy, y, radius);
    let bx = dx.restrict(&x_ball);
    let by = dy.restrict(&y_ball);
    let x0 = x_ball.binary_search(&x).expect("center lies in its ball");
    let y0 = y_ball.binary_search(&y).expect("center lies in its ball");
    let estimate = if x_ball.len() * y_ball.len() <= EXACT_CAP {
        gh_exact_pointed(&bx, x0, &by, y0)?
    } else {
        gh_upper_pointed(&bx, x0, &by, y0, effort, seed)?
    };
    Ok(PointedEstimate {
        estimate,
        x_ball,
        y_ball,
    })
}

/// Farthest-point net of `count` points starting from the basepoint (or
/// point 0). Returns the net, its distance matrix and its covering radius.
pub fn landmark_net(
    space: &FiniteMetricMeasureSpace,
    count: usize,
) -> Result<(Vec<usize>, DistanceMatrix, f64)> {
    let n = space.num_points();
    if n == 0 || count == 0 {
        return Err(Error::EmptyOperand("landmark net"));
    }
    let start = space.basepoint().unwrap_or(0);
    let mut net = vec![start];
    let mut rows = vec![distances_from(space, start)?];
    let mut nearest = rows[0].clone();
    while net.len() < count.min(n) {
        // Unreachable points come first, then the farthest one.
        let next = (0..n)
            .max_by(|&i, &j| nearest[i].total_cmp(&nearest[j]).then(j.cmp(&i)))
            .expect("space is nonempty");
        if nearest[next] == 0.0 {
            break;
        }
        let row = distances_from(space, next)?;
        for (a, b) in nearest.iter_mut().zip(&row) {
            *a = a.min(*b);
        }
        net.push(next);
        rows.push(row);
    }
    let radius = nearest.iter().copied().fold(0.0, f64::max);
    let d = DistanceMatrix::from_fn(net.len(), |i, j| rows[i][net[j]].min(rows[j][net[i]]));
    Ok((net, d, radius))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryVerdict {
    pub eps: f64,
    pub pass: bool,
    pub distortion_ok: bool,
    pub dense_ok: bool,
    /// Pair `(a, b)` with the largest `|d(a,b) − d(f a, f b)|`, and that value.
    pub worst_pair: Option<(usize, usize)>,
    pub worst_gap: f64,
    /// Target point farthest from the image, and its distance.
    pub worst_target: Option<usize>,
    pub worst_cover: f64,
}

/// Tests whether `map: X → Y` is an `ε`-isometry: `|d(a,b) − d(f a, f b)| < ε`
/// for all pairs, and every point of `Y` lies within `ε` of the image.
pub fn epsilon_isometry_check(
    dx: &DistanceMatrix,
    dy: &DistanceMatrix,
    map: &[usize],
    eps: f64,
) -> Result<IsometryVerdict> {
    if map.len() != dx.len() {
        return Err(Error::InvalidCorrespondence(format!(
            "map has {} entries for {} points",
            map.len(),
            dx.len()
        )));
    }
    if let Some(&bad) = map.iter().find(|&&y| y >= dy.len()) {
        return Err(Error::UnknownPoint(bad));
    }
    let mut worst_pair = None;
    let mut worst_gap: f64 = 0.0;
    for a in 0..map.len() {
        for b in a + 1..map.len() {
            let g = correspondence::gap(dx.get(a, b), dy.get(map[a], map[b]));
            if g > worst_gap || worst_pair.is_none() {
                worst_gap = worst_gap.max(g);
                worst_pair = Some((a, b));
            }
        }
    }
    let mut worst_target = None;
    let mut worst_cover: f64 = 0.0;
    for y in 0..dy.len() {
        let c = map
            .iter()
            .map(|&fy| dy.get(y, fy))
            .fold(f64::INFINITY, f64::min);
        if c > worst_cover || worst_target.is_none() {
            worst_cover = worst_cover.max(c);
            worst_target = Some(y);
        }
    }
    let distortion_ok = worst_gap < eps;
    let dense_ok = worst_cover < eps;
    Ok(IsometryVerdict {
        eps,
        pass: distortion_ok && dense_ok,
        distortion_ok,
        dense_ok,
        worst_pair,
        worst_gap,
        worst_target,
        worst_cover,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhRecord {
    pub k: Option<usize>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub distortion: Option<f64>,
    pub transport_cost: Option<f64>,
    pub mass_defect: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Report document (`cls-gh-1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhReport {
    pub schema: String,
    pub mode: GhMode,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub distortion: Option<f64>,
    pub transport_cost: Option<f64>,
    pub mass_defect: Option<f64>,
    pub per_k: Vec<GhRecord>,
}

impl GhReport {
    pub fn new(mode: GhMode) -> Self {
        Self {
            schema: GH_SCHEMA.to_string(),
            mode,
            lower: None,
            upper: None,
            distortion: None,
            transport_cost: None,
            mass_defect: None,
            per_k: Vec::new(),
        }
    }

    pub fn from_estimate(est: &GhEstimate, dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<Self> {
        let mut r = Self::new(est.mode);
        r.lower = Some(est.lower);
        r.upper = Some(est.upper);
        r.distortion = Some(est.certificate.distortion(dx, dy)?);
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("gh reports are plain data")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.schema != GH_SCHEMA {
            return Err(Error::Schema(format!(
                "expected schema {GH_SCHEMA}, found {}",
                r.schema
            )));
        }
        Ok(r)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}
