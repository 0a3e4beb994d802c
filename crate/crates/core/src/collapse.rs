//! Volume collapsing function, unit-ball volume field, regular sets and
//! volume comparison diagnostics for two-dimensional samples.
//!
//! `ν(x) = min_r μ(B(x, r)) / (ω₂ r²)` over a geometric grid of radii in
//! `[c h₀, 1)`, where `h₀` is the mesh fill radius and `c` the floor factor
//! (default 10). Caller-supplied grids are cut at `4 h₀`. `v(x) = μ(B(x, 1))`.
//!
//! Below roughly ten fill radii a ball holds only a few dozen samples and
//! its mass fluctuates by ±10% with the lattice position of the center; on
//! a 20k-point round sphere a floor of `4 h₀` puts ν up to 6% below the
//! analytic value, while `10 h₀` keeps it within 1%.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{ball, BallProfile, Dijkstra};
use crate::space::FiniteMetricMeasureSpace;
use crate::subset::PointSubset;

/// Area of the Euclidean unit disk.
pub const OMEGA_2: f64 = PI;
pub const DIMENSION: usize = 2;
pub const NU_GRID_SIZE: usize = 64;
/// The default ν grid starts at this many mesh fill radii.
pub const NU_FLOOR_FACTOR: f64 = 10.0;
/// Radii below this many mesh fill radii are dropped from any ν grid.
pub const NU_HARD_FLOOR_FACTOR: f64 = 4.0;
pub const DEFAULT_BG_SLACK: f64 = 0.02;
/// A zero `k(p, R)` with a deficit above this is reported as a violation.
pub const DEFICIT_TOLERANCE: f64 = 1e-3;

/// Area of the radius-`r` disk in the hyperbolic plane.
pub fn hyperbolic_disk_area(r: f64) -> f64 {
    2.0 * PI * (r.cosh() - 1.0)
}

fn radius_floor(space: &FiniteMetricMeasureSpace) -> f64 {
    NU_HARD_FLOOR_FACTOR * space.mesh_fill_radius()
}

/// 64 geometrically spaced radii in `[10 h₀, 1)`.
pub fn default_radii(space: &FiniteMetricMeasureSpace) -> Result<Vec<f64>> {
    radii_grid(space, NU_FLOOR_FACTOR, NU_GRID_SIZE)
}

/// `size` geometrically spaced radii in `[floor_factor h₀, 1)`.
pub fn radii_grid(
    space: &FiniteMetricMeasureSpace,
    floor_factor: f64,
    size: usize,
) -> Result<Vec<f64>> {
    let floor = floor_factor * space.mesh_fill_radius();
    if !(floor > 0.0 && floor < 1.0) || size == 0 {
        return Err(Error::ResolutionTooCoarse { floor });
    }
    let ratio = (1.0 / floor).powf(1.0 / size as f64);
    Ok((0..size).map(|i| floor * ratio.powi(i as i32)).collect())
}

/// Drops radii outside `[4 h₀, 1)`; the result is sorted.
pub fn floor_radii(space: &FiniteMetricMeasureSpace, radii: &[f64]) -> Result<Vec<f64>> {
    floor_radii_with(space, radii, NU_HARD_FLOOR_FACTOR)
}

pub fn floor_radii_with(
    space: &FiniteMetricMeasureSpace,
    radii: &[f64],
    floor_factor: f64,
) -> Result<Vec<f64>> {
    let floor = floor_factor * space.mesh_fill_radius();
    let mut kept: Vec<f64> = radii
        .iter()
        .copied()
        .filter(|&r| r >= floor && r > 0.0 && r < 1.0)
        .collect();
    if kept.is_empty() {
        return Err(Error::ResolutionTooCoarse { floor });
    }
    kept.sort_by(f64::total_cmp);
    kept.dedup();
    Ok(kept)
}

fn nu_from_profile(profile: &BallProfile, radii: &[f64]) -> f64 {
    radii
        .iter()
        .map(|&r| profile.mass_within(r) / (OMEGA_2 * r * r))
        .fold(f64::INFINITY, f64::min)
}

/// Volume collapsing function at `x` over the floored radii grid.
pub fn nu(space: &FiniteMetricMeasureSpace, x: usize, radii: &[f64]) -> Result<f64> {
    space.ensure_valid()?;
    space.check_point(x)?;
    if radii.is_empty() {
        return Err(Error::EmptyOperand("radii grid"));
    }
    let radii = floor_radii(space, radii)?;
    let mut dj = Dijkstra::new(space.num_points());
    let profile = BallProfile::compute(space, &mut dj, x, 1.0);
    Ok(nu_from_profile(&profile, &radii))
}

/// Per-point `v` and `ν` for one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseField {
    pub v: Vec<f64>,
    pub nu: Vec<f64>,
    pub radii: Vec<f64>,
    pub dimension: usize,
    pub omega: f64,
}

impl CollapseField {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn v_min(&self, subset: &PointSubset) -> f64 {
        subset.iter().map(|i| self.v[i]).fold(f64::INFINITY, f64::min)
    }

    pub fn v_max(&self, subset: &PointSubset) -> f64 {
        subset
            .iter()
            .map(|i| self.v[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn check_space(&self, space: &FiniteMetricMeasureSpace) -> Result<()> {
        if self.len() == space.num_points() {
            Ok(())
        } else {
            Err(Error::FieldMismatch {
                field: self.len(),
                space: space.num_points(),
            })
        }
    }

    /// CSV with columns `point_id,v,nu`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["point_id", "v", "nu"])?;
        for i in 0..self.len() {
            w.write_record([i.to_string(), self.v[i].to_string(), self.nu[i].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `v` and `ν` at every point with the default radii grid.
pub fn collapse_field(space: &FiniteMetricMeasureSpace) -> Result<CollapseField> {
    let radii = default_radii(space)?;
    collapse_field_with(space, &radii)
}

pub fn collapse_field_with(
    space: &FiniteMetricMeasureSpace,
    radii: &[f64],
) -> Result<CollapseField> {
    space.ensure_valid()?;
    let radii = floor_radii(space, radii)?;
    let n = space.num_points();
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map_init(
            || Dijkstra::new(n),
            |dj, x| {
                let profile = BallProfile::compute(space, dj, x, 1.0);
                (profile.mass_within(1.0), nu_from_profile(&profile, &radii))
            },
        )
        .collect();
    let (v, nu) = pairs.into_iter().unzip();
    Ok(CollapseField {
        v,
        nu,
        radii,
        dimension: DIMENSION,
        omega: OMEGA_2,
    })
}

/// `v(x) = μ(B(x, 1))` at every point.
pub fn v_field(space: &FiniteMetricMeasureSpace) -> Result<Vec<f64>> {
    space.ensure_valid()?;
    let n = space.num_points();
    Ok((0..n)
        .into_par_iter()
        .map_init(
            || Dijkstra::new(n),
            |dj, x| BallProfile::compute(space, dj, x, 1.0).mass_within(1.0),
        )
        .collect())
}

/// `{ x : ν(x) > ε }`.
pub fn regular_set(
    space: &FiniteMetricMeasureSpace,
    field: &CollapseField,
    eps: f64,
) -> Result<PointSubset> {
    field.check_space(space)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {eps}")));
    }
    Ok(PointSubset::from_predicate(space.num_points(), |i| {
        field.nu[i] > eps
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonFlag {
    /// Ratios non-increasing within slack.
    Monotone,
    /// Ratios increase by more than the slack somewhere.
    NotMonotone,
    /// `k = 0` and the deficit is at most the tolerance.
    Consistent,
    /// `k = 0` but the deficit is positive beyond the tolerance.
    ComparisonViolated,
    /// `k > 0`; only the ratio `D / k^{1/2p}` is reported.
    RatioOnly,
}

/// Volume comparison diagnostics at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub point: usize,
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    /// `Vol(B(x, r)) / V₂(r)` with `V₂(r) = 2π(cosh r − 1)`.
    pub ratios: Vec<f64>,
    pub flag: ComparisonFlag,
    pub slack: Option<f64>,
    /// Smallest sampled curvature; comparison is only a theorem when ≥ −1.
    pub curvature_floor: Option<f64>,
    pub p: Option<f64>,
    pub k: Option<f64>,
    pub k_root: Option<f64>,
    pub deficit: Option<f64>,
    pub deficit_ratio: Option<f64>,
    pub norm_convention: String,
}

const NORM_CONVENTION: &str = "|Ric + (n-1) g| = sqrt(2) |K + 1| (Frobenius, n = 2)";

fn eccentricity(space: &FiniteMetricMeasureSpace, x: usize) -> f64 {
    let mut ecc: f64 = 0.0;
    let mut dj = Dijkstra::new(space.num_points());
    dj.run(space, &[x], f64::INFINITY, None, |_, d| {
        ecc = ecc.max(d);
        true
    });
    ecc
}

fn curvature_floor(space: &FiniteMetricMeasureSpace) -> Option<f64> {
    if space.has_curvature() {
        Some(
            space
                .points()
                .iter()
                .filter_map(|p| p.curvature)
                .fold(f64::INFINITY, f64::min),
        )
    } else {
        None
    }
}

/// Checks that `Vol(B(x, r)) / V₂(r)` is non-increasing within `slack`
/// (relative) over increasing radii in `(4 h₀, diameter]`. The diameter is
/// bounded by twice the eccentricity of `x`. Ball masses are interpolated
/// across a band of width `h₀` at the boundary.
pub fn bishop_gromov_check(
    space: &FiniteMetricMeasureSpace,
    x: usize,
    radii: &[f64],
    slack: f64,
) -> Result<ComparisonReport> {
    space.ensure_valid()?;
    space.check_point(x)?;
    if radii.is_empty() {
        return Err(Error::EmptyOperand("radii"));
    }
    let floor = radius_floor(space);
    let top = 2.0 * eccentricity(space, x);
    for w in radii.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParams("radii must be increasing".into()));
        }
    }
    if !(radii[0] > floor) || radii[radii.len() - 1] > top {
        return Err(Error::OutOfDomain {
            value: if radii[0] <= floor {
                radii[0]
            } else {
                radii[radii.len() - 1]
            },
            lo: floor,
            hi: top,
        });
    }
    let width = space.mesh_fill_radius();
    let mut dj = Dijkstra::new(space.num_points());
    let reach = (*radii.last().unwrap() + width) * (1.0 + 1e-12);
    let profile = BallProfile::compute(space, &mut dj, x, reach);
    let volumes: Vec<f64> = radii
        .iter()
        .map(|&r| profile.smoothed_mass_within(r, width))
        .collect();
    let ratios: Vec<f64> = volumes
        .iter()
        .zip(radii)
        .map(|(v, &r)| v / hyperbolic_disk_area(r))
        .collect();
    let monotone = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack));
    Ok(ComparisonReport {
        point: x,
        radii: radii.to_vec(),
        volumes,
        ratios,
        flag: if monotone {
            ComparisonFlag::Monotone
        } else {
            ComparisonFlag::NotMonotone
        },
        slack: Some(slack),
        curvature_floor: curvature_floor(space),
        p: None,
        k: None,
        k_root: None,
        deficit: None,
        deficit_ratio: None,
        norm_convention: NORM_CONVENTION.to_string(),
    })
}

/// `k(p, R) = Σ_{y ∈ B(x,R), K(y) < −1} (√2 |K(y) + 1|)^p μ_y`.
pub fn petersen_wei_k(space: &FiniteMetricMeasureSpace, x: usize, p: f64, radius: f64) -> Result<f64> {
    space.ensure_valid()?;
    if !space.has_curvature() {
        return Err(Error::MissingCurvature);
    }
    if !(p > 1.0) {
        return Err(Error::InvalidParams(format!("p must exceed n/2 = 1, got {p}")));
    }
    let b = ball(space, x, radius)?;
    Ok(b.iter()
        .filter_map(|y| {
            let k = space.curvature(y)?;
            (k < -1.0).then(|| (SQRT_2 * (k + 1.0).abs()).powf(p) * space.weight(y))
        })
        .fold(0.0, |a, b| a + b))
}

/// Petersen–Wei deficit `D(r, R)` next to `k(p, R)^{1/2p}`. The constant in
/// the comparison inequality is not known, so only the ratio is reported,
/// plus a violation flag when `k = 0` and `D > 1e-3`. Ball masses are
/// interpolated as in [`bishop_gromov_check`], which removes most of the
/// lattice noise of counting samples.
pub fn petersen_wei_deficit(
    space: &FiniteMetricMeasureSpace,
    x: usize,
    p: f64,
    r: f64,
    radius: f64,
) -> Result<ComparisonReport> {
    if !(r > 0.0 && r < radius) {
        return Err(Error::InvalidParams(format!("need 0 < r < R, got r = {r}, R = {radius}")));
    }
    let k = petersen_wei_k(space, x, p, radius)?;
    let width = space.mesh_fill_radius();
    let mut dj = Dijkstra::new(space.num_points());
    let profile = BallProfile::compute(space, &mut dj, x, (radius + width) * (1.0 + 1e-12));
    let volumes = vec![
        profile.smoothed_mass_within(r, width),
        profile.smoothed_mass_within(radius, width),
    ];
    let ratios = vec![
        volumes[0] / hyperbolic_disk_area(r),
        volumes[1] / hyperbolic_disk_area(radius),
    ];
    let e = 1.0 / (2.0 * p);
    let deficit = ratios[1].powf(e) - ratios[0].powf(e);
    let k_root = k.powf(e);
    let (flag, deficit_ratio) = if k > 0.0 {
        (ComparisonFlag::RatioOnly, Some(deficit / k_root))
    } else if deficit > DEFICIT_TOLERANCE {
        (ComparisonFlag::ComparisonViolated, None)
    } else {
        (ComparisonFlag::Consistent, None)
    };
    Ok(ComparisonReport {
        point: x,
        radii: vec![r, radius],
        volumes,
        ratios,
        flag,
        slack: None,
        curvature_floor: curvature_floor(space),
        p: Some(p),
        k: Some(k),
        k_root: Some(k_root),
        deficit: Some(deficit),
        deficit_ratio,
        norm_convention: NORM_CONVENTION.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub point: usize,
    pub nu_limit: f64,
    pub member_nu: Vec<Option<f64>>,
    pub max_member: f64,
    pub upper_ok: bool,
    /// Smallest ν over the tail of the sequence, for probes with `ν > ε`.
    pub lower_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemicontinuityReport {
    pub eps: f64,
    pub tau: f64,
    pub tail: usize,
    pub probes: Vec<ProbeResult>,
    pub upper_pass: bool,
    /// Every probe above `ε` keeps a strictly positive floor.
    pub lower_pass: bool,
}

/// Probes `limsup ν(x_k) ≤ ν(x)` and the positivity of `liminf ν(x_k)`.
///
/// `maps[k][x]` is the member point corresponding to limit point `x`. The
/// upper check is `max_k ν(x_k) ≤ ν(x) (1 + τ)`; the lower floor is taken
/// over the last `tail` members.
pub fn semicontinuity_probe(
    member_fields: &[CollapseField],
    maps: &[Option<Vec<usize>>],
    limit: &CollapseField,
    probes: &[usize],
    eps: f64,
    tau: f64,
    tail: usize,
) -> Result<SemicontinuityReport> {
    if maps.len() != member_fields.len() {
        return Err(Error::MissingCorrespondence(format!(
            "{} members but {} maps",
            member_fields.len(),
            maps.len()
        )));
    }
    if let Some(k) = maps.iter().position(|m| m.is_none()) {
        return Err(Error::MissingCorrespondence(format!("member {}", k + 1)));
    }
    let tail = tail.clamp(1, member_fields.len().max(1));
    let start = member_fields.len().saturating_sub(tail);
    let mut results = Vec::with_capacity(probes.len());
    for &x in probes {
        if x >= limit.len() {
            return Err(Error::UnknownPoint(x));
        }
        let member_nu: Vec<Option<f64>> = member_fields
            .iter()
            .zip(maps)
            .map(|(f, m)| m.as_ref().and_then(|m| m.get(x)).map(|&y| f.nu[y]))
            .collect();
        let max_member = member_nu
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let nu_limit = limit.nu[x];
        let lower_floor = (nu_limit > eps).then(|| {
            member_nu[start..]
                .iter()
                .flatten()
                .copied()
                .fold(f64::INFINITY, f64::min)
        });
        results.push(ProbeResult {
            point: x,
            nu_limit,
            upper_ok: max_member <= nu_limit * (1.0 + tau),
            max_member,
            member_nu,
            lower_floor,
        });
    }
    Ok(SemicontinuityReport {
        eps,
        tau,
        tail,
        upper_pass: results.iter().all(|r| r.upper_ok),
        lower_pass: results
            .iter()
            .all(|r| r.lower_floor.map(|f| f > 0.0).unwrap_or(true)),
        probes: results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallMeasureProbe {
    pub point: usize,
    pub tail_max_inner: f64,
    pub limit_middle: f64,
    pub tail_min_outer: f64,
    pub holds: bool,
}

/// `limsup μ_k(B(x_k, r₁)) ≤ μ(B(x, r₂)) ≤ liminf μ_k(B(x_k, r₃))` over the
/// last `tail` members, for `r₁ < r₂ < r₃`.
pub fn ball_measure_probe(
    members: &[&FiniteMetricMeasureSpace],
    maps: &[Vec<usize>],
    limit: &FiniteMetricMeasureSpace,
    probes: &[usize],
    radii: [f64; 3],
    tail: usize,
) -> Result<Vec<BallMeasureProbe>> {
    let [r1, r2, r3] = radii;
    if !(0.0 < r1 && r1 < r2 && r2 < r3) {
        return Err(Error::InvalidParams("need 0 < r1 < r2 < r3".into()));
    }
    if maps.len() != members.len() {
        return Err(Error::MissingCorrespondence("one map per member".into()));
    }
    let start = members.len().saturating_sub(tail.max(1));
    probes
        .iter()
        .map(|&x| {
            let mid = crate::metric::ball_volume(limit, x, r2)?;
            let mut inner = f64::NEG_INFINITY;
            let mut outer = f64::INFINITY;
            for (m, map) in members[start..].iter().zip(&maps[start..]) {
                let y = *map.get(x).ok_or(Error::UnknownPoint(x))?;
                inner = inner.max(crate::metric::ball_volume(m, y, r1)?);
                outer = outer.min(crate::metric::ball_volume(m, y, r3)?);
            }
            Ok(BallMeasureProbe {
                point: x,
                tail_max_inner: inner,
                limit_middle: mid,
                tail_min_outer: outer,
                holds: inner <= mid && mid <= outer,
            })
        })
        .collect()
}

/// Smallest `ν(y) / ν(x)` over `y ∈ B(x, r₀)`, minimized over the given
/// centers with `ν(x) > 0`. `None` when no center qualifies.
pub fn local_lower_bound_constant(
    space: &FiniteMetricMeasureSpace,
    field: &CollapseField,
    centers: &[usize],
    r0: f64,
) -> Result<Option<f64>> {
    field.check_space(space)?;
    let mut best: Option<f64> = None;
    for &x in centers {
        let nx = field.nu[x];
        if !(nx > 0.0) {
            continue;
        }
        let b = ball(space, x, r0)?;
        let c = b.iter().map(|y| field.nu[y] / nx).fold(f64::INFINITY, f64::min);
        best = Some(best.map_or(c, |b: f64| b.min(c)));
    }
    Ok(best)
}
