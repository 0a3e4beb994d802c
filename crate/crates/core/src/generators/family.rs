//! Sequences of generated spaces with declared limits and canonical
//! correspondences.
//!
//! Every generated space remembers how its samples were laid out: a torus
//! grid, or one or more revolution charts split into *pieces*. A piece is
//! a stretch of profile with an anchor `t`; points are addressed by
//! `(piece, signed offset from the anchor, θ)`. Two spaces built from
//! related profiles are matched by looking up the same address in the
//! other layout, clamped to the piece's extent there.
//!
//! Family tags and what the schedule means:
//!
//! - `torus`: flat tori `a × b_k`, schedule = `b_k`; the limit is empty.
//! - `revolution`: cusped cylinders `C_{r_k}`, schedule = `r_k`; the
//!   limit is empty since the volume goes to zero.
//! - `cusp_chain`: member `k` chains `C_{r_1} … C_{r_k}` through thin
//!   collars, schedule = `r_i`; the limit is `⊔ C_{r_i}`.
//! - `s2_profile`: dumbbell spheres, schedule = cusp depth `S_k` before
//!   the neck collar; the limit is two cusped spheres. Depths below 1 give
//!   a fat neck.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::profile::{Caps, ProfileSpec, Segment, SegmentShape};
use crate::generators::revolution::{
    build_revolution_with_step, step_for_resolution, RevolutionChart, DEFAULT_STENCIL,
};
use crate::generators::torus::{build_torus_with_grid, TorusGrid, TorusSpec};
use crate::gh::Correspondence;
use crate::space::FiniteMetricMeasureSpace;

pub const FAMILY_SCHEMA: &str = "cls-family-1";
pub const BLEND_WIDTH: f64 = 0.05;
/// Cusp ends are cut where the discarded mass drops below this fraction of
/// the total.
pub const DISCARDED_MASS_FRACTION: f64 = 1e-6;
/// Collar half-length on the thin-neck dumbbells.
pub const DUMBBELL_COLLAR: f64 = 2.0;
/// Bulb of the dumbbell: `sin t` on `[0, 3π/4]`, where `f = f' ·(−1)`.
const BULB_END: f64 = 3.0 * FRAC_PI_4;

pub const PRESETS: [&str; 5] = [
    "tori-collapse",
    "cr-cusp",
    "chain-m3",
    "s2-dumbbell",
    "s2-oscillate",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Torus,
    Revolution,
    CuspChain,
    S2Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub schema: String,
    pub family: FamilyKind,
    pub schedule: Vec<f64>,
    /// Target point count per member.
    pub resolution: usize,
    pub seed: u64,
    /// First torus period `a` (torus family only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

impl FamilyConfig {
    pub fn new(family: FamilyKind, schedule: Vec<f64>, resolution: usize, seed: u64) -> Self {
        Self {
            schema: FAMILY_SCHEMA.to_string(),
            family,
            schedule,
            resolution,
            seed,
            period: None,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        let cfg = match name {
            "tori-collapse" => Self::new(FamilyKind::Torus, vec![0.5, 0.25, 0.125, 0.0625], 1500, 1),
            "cr-cusp" => Self::new(FamilyKind::Revolution, vec![0.16, 0.08, 0.04], 2500, 2),
            "chain-m3" => Self::new(FamilyKind::CuspChain, (1..=3).map(chain_radius).collect(), 5000, 3),
            "s2-dumbbell" => Self::new(
                FamilyKind::S2Profile,
                vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
                10000,
                4,
            ),
            "s2-oscillate" => Self::new(
                FamilyKind::S2Profile,
                vec![0.3, 6.0, 0.3, 7.0, 0.3, 8.0],
                10000,
                5,
            ),
            _ => return None,
        };
        Some(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != FAMILY_SCHEMA {
            return Err(Error::Schema(format!(
                "expected schema {FAMILY_SCHEMA}, found {}",
                self.schema
            )));
        }
        if self.schedule.is_empty() {
            return Err(Error::InvalidParams("schedule is empty".into()));
        }
        if self.resolution < 100 {
            return Err(Error::InvalidParams(format!(
                "resolution {} is below 100",
                self.resolution
            )));
        }
        if let Some(bad) = self.schedule.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "schedule entries must be positive, got {bad}"
            )));
        }
        if let Some(a) = self.period {
            TorusSpec::new(a, 1.0)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.schedule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schedule.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("family configs are plain data")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Radius with `Vol(C_r) = 0.9 · 2^{-i}`.
pub fn chain_radius(i: usize) -> f64 {
    0.9 * 0.5f64.powi(i as i32) / cusped_cylinder_area(1.0)
}

/// Area of the untruncated `C_r`: cylinder, two quarter-arcs, two cusps.
pub fn cusped_cylinder_area(r: f64) -> f64 {
    2.0 * PI * r * (1.0 + 2.0 * SQRT_2)
}

/// Area of the untruncated cusped sphere (one dumbbell bulb plus cusp).
pub fn cusped_sphere_area() -> f64 {
    2.0 * PI * (1.0 + SQRT_2)
}

/// Depth at which cusp ends of the given scales lose less than the allowed
/// fraction of `total`.
pub fn truncation_depth(end_scales: &[f64], total: f64) -> f64 {
    let lost: f64 = end_scales.iter().map(|s| 2.0 * PI * s).sum();
    (lost / (DISCARDED_MASS_FRACTION * total)).ln().max(1.0)
}

/// A stretch of a revolution chart addressed from `anchor` in direction
/// `dir` (±1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PieceRange {
    pub piece: usize,
    pub lo: f64,
    pub hi: f64,
    pub anchor: f64,
    pub dir: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevolutionPart {
    pub profile: ProfileSpec,
    pub chart: RevolutionChart,
    /// Index of the part's first point in the whole space.
    pub offset: usize,
    pub pieces: Vec<PieceRange>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Empty,
    Torus { spec: TorusSpec, grid: TorusGrid },
    Revolution { parts: Vec<RevolutionPart> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Address {
    Torus(f64, f64),
    Piece { piece: usize, s: f64, theta: f64 },
}

/// A generated space with the layout needed to match it against relatives.
#[derive(Debug, Clone)]
pub struct GeneratedSpace {
    pub space: FiniteMetricMeasureSpace,
    pub layout: Layout,
}

impl GeneratedSpace {
    pub fn empty() -> Self {
        Self {
            space: FiniteMetricMeasureSpace::new(Vec::new(), Vec::new(), None, 0.0),
            layout: Layout::Empty,
        }
    }

    pub fn profiles(&self) -> Vec<&ProfileSpec> {
        match &self.layout {
            Layout::Revolution { parts } => parts.iter().map(|p| &p.profile).collect(),
            _ => Vec::new(),
        }
    }

    /// Analytic area of the sampled surface.
    pub fn analytic_area(&self) -> f64 {
        match &self.layout {
            Layout::Empty => 0.0,
            Layout::Torus { spec, .. } => spec.a * spec.b,
            Layout::Revolution { parts } => parts.iter().map(|p| p.profile.area()).sum(),
        }
    }

    fn address(&self, index: usize) -> Address {
        match &self.layout {
            Layout::Empty => unreachable!("empty layouts have no points"),
            Layout::Torus { grid, .. } => {
                let (i, j) = (index / grid.ny, index % grid.ny);
                Address::Torus(i as f64 / grid.nx as f64, j as f64 / grid.ny as f64)
            }
            Layout::Revolution { parts } => {
                let p = parts.partition_point(|p| p.offset + p.chart.num_points() <= index);
                let part = &parts[p];
                let (t, theta) = part.chart.params(index - part.offset);
                let piece = part
                    .pieces
                    .iter()
                    .find(|r| t >= r.lo && t <= r.hi)
                    .unwrap_or(&part.pieces[part.pieces.len() - 1]);
                Address::Piece {
                    piece: piece.piece,
                    s: piece.dir * (t - piece.anchor),
                    theta,
                }
            }
        }
    }

    fn locate(&self, addr: Address) -> Option<usize> {
        match (&self.layout, addr) {
            (Layout::Torus { grid, .. }, Address::Torus(u, v)) => Some(grid.locate(u, v)),
            (Layout::Revolution { parts }, Address::Piece { piece, s, theta }) => {
                // Nearest piece id present here; missing pieces clamp to the
                // closest one.
                let (part, range) = parts
                    .iter()
                    .flat_map(|p| p.pieces.iter().map(move |r| (p, r)))
                    .min_by_key(|(_, r)| (r.piece as i64 - piece as i64).unsigned_abs())?;
                let t = (range.anchor + range.dir * s).clamp(range.lo, range.hi);
                Some(part.offset + part.chart.locate(t, theta))
            }
            _ => None,
        }
    }

    /// Point of `to` sharing each point's parameters. `None` when either
    /// side is empty or the layouts are of different kinds.
    pub fn canonical_map(&self, to: &GeneratedSpace) -> Option<Vec<usize>> {
        if self.space.is_empty() || to.space.is_empty() {
            return None;
        }
        (0..self.space.num_points())
            .map(|i| to.locate(self.address(i)))
            .collect()
    }

    /// Union of the canonical maps in both directions.
    pub fn canonical_correspondence(&self, to: &GeneratedSpace) -> Option<Correspondence> {
        let f = self.canonical_map(to)?;
        let g = to.canonical_map(self)?;
        Correspondence::from_maps(&f, &g).ok()
    }
}

/// One member of a family with its canonical correspondences.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    /// 1-based position in the schedule.
    pub k: usize,
    pub generated: GeneratedSpace,
    pub to_previous: Option<Correspondence>,
    pub to_limit: Option<Correspondence>,
}

impl FamilyMember {
    pub fn space(&self) -> &FiniteMetricMeasureSpace {
        &self.generated.space
    }
}

/// All members plus the declared limit.
#[derive(Debug, Clone)]
pub struct Family {
    pub config: FamilyConfig,
    pub members: Vec<FamilyMember>,
    pub limit: GeneratedSpace,
}

struct ProfileBuilder {
    segments: Vec<Segment>,
    t: f64,
}

impl ProfileBuilder {
    fn new() -> Self {
        Self {
            segments: Vec::new(),
            t: 0.0,
        }
    }

    fn push(&mut self, length: f64, shape: SegmentShape) -> &mut Self {
        self.segments
            .push(Segment::new(self.t, self.t + length, shape));
        self.t += length;
        self
    }

    fn cusp_up(&mut self, top: f64, depth: f64) -> &mut Self {
        self.push(
            depth,
            SegmentShape::Exponential {
                scale: top * (-depth).exp(),
                rate: 1.0,
            },
        )
    }

    fn cusp_down(&mut self, top: f64, depth: f64) -> &mut Self {
        self.push(
            depth,
            SegmentShape::Exponential {
                scale: top,
                rate: -1.0,
            },
        )
    }

    /// Quarter-arc `r sin(s + π/4)` from slope `f' = f` up to the cylinder.
    fn arc_up(&mut self, r: f64) -> &mut Self {
        self.push(
            FRAC_PI_4,
            SegmentShape::Sine {
                amplitude: r,
                rate: 1.0,
                phase: FRAC_PI_4,
            },
        )
    }

    /// `r cos s` from the cylinder down to slope `f' = −f`.
    fn arc_down(&mut self, r: f64, length: f64) -> &mut Self {
        self.push(
            length,
            SegmentShape::Sine {
                amplitude: r,
                rate: 1.0,
                phase: FRAC_PI_2,
            },
        )
    }

    fn cylinder(&mut self, r: f64, length: f64) -> &mut Self {
        self.push(length, SegmentShape::Constant { radius: r })
    }

    /// Curvature-bounded neck from a cylinder of radius `r` to one of
    /// radius `r2` with closed geodesic of length `2π a`: a `K = 1` arc
    /// `r cos s` until `f'/f = −tanh U`, the collar `a cosh u` over
    /// `[−U, U₂]`, and the mirrored arc up to `r2`.
    fn collar(&mut self, r: f64, a: f64, r2: f64) -> &mut Self {
        let s1 = 0.5 * (a / r).powi(2).acos();
        let s2 = 0.5 * (a / r2).powi(2).acos();
        let u1 = s1.tan().atanh();
        let u2 = s2.tan().atanh();
        self.arc_down(r, s1);
        let center = self.t + u1;
        self.push(
            u1 + u2,
            SegmentShape::CoshCollar {
                neck: a,
                center,
                rate: 1.0,
            },
        );
        self.push(
            s2,
            SegmentShape::Sine {
                amplitude: r2,
                rate: 1.0,
                phase: FRAC_PI_2 - s2,
            },
        )
    }

    fn finish(&mut self, caps: Caps) -> Result<ProfileSpec> {
        ProfileSpec::new(std::mem::take(&mut self.segments), caps)?.with_blends(BLEND_WIDTH)
    }
}

/// `C_r` truncated at `depth`; returns the profile and its cylinder start.
pub fn cusped_cylinder(r: f64, depth: f64) -> Result<(ProfileSpec, f64)> {
    let top = r * FRAC_1_SQRT_2;
    let mut b = ProfileBuilder::new();
    b.cusp_up(top, depth).arc_up(r);
    let anchor = b.t;
    b.cylinder(r, 1.0)
        .arc_down(r, FRAC_PI_4)
        .cusp_down(top, depth);
    Ok((b.finish(Caps::default())?, anchor))
}

/// Neck radius between chain pieces `i` and `i + 1` (1-based).
pub fn chain_neck(radii: &[f64], i: usize) -> f64 {
    radii[i - 1].min(radii[i]) * (-(5.0 + i as f64)).exp()
}

/// `C_{r_1} … C_{r_k}` joined by collars; returns the profile, the collar
/// neck positions and the cylinder starts.
pub fn chain_profile(radii: &[f64], depth: f64) -> Result<(ProfileSpec, Vec<f64>, Vec<f64>)> {
    if radii.is_empty() {
        return Err(Error::InvalidParams("chain needs at least one piece".into()));
    }
    let mut b = ProfileBuilder::new();
    let mut anchors = Vec::with_capacity(radii.len());
    let mut necks = Vec::with_capacity(radii.len() - 1);
    b.cusp_up(radii[0] * FRAC_1_SQRT_2, depth).arc_up(radii[0]);
    for (i, &r) in radii.iter().enumerate() {
        anchors.push(b.t);
        b.cylinder(r, 1.0);
        if let Some(&next) = radii.get(i + 1) {
            let a = chain_neck(radii, i + 1);
            let start = b.t;
            b.collar(r, a, next);
            // The neck sits where the collar segment attains `a`.
            let s1 = 0.5 * (a / r).powi(2).acos();
            necks.push(start + s1 + s1.tan().atanh());
        }
    }
    let last = radii[radii.len() - 1];
    b.arc_down(last, FRAC_PI_4)
        .cusp_down(last * FRAC_1_SQRT_2, depth);
    Ok((b.finish(Caps::default())?, necks, anchors))
}

/// Bulb `sin t` on `[0, 3π/4]` followed by the cusp `e^{-s}/√2` to `depth`.
pub fn cusped_sphere(depth: f64) -> Result<ProfileSpec> {
    let mut b = ProfileBuilder::new();
    b.push(
        BULB_END,
        SegmentShape::Sine {
            amplitude: 1.0,
            rate: 1.0,
            phase: 0.0,
        },
    )
    .cusp_down(FRAC_1_SQRT_2, depth);
    b.finish(Caps {
        start_closed: true,
        end_closed: false,
    })
}

/// Dumbbell: bulb, cusp to `depth`, collar of half-length `collar`, and the
/// mirror image. The collar is lengthened slightly so that the total
/// length is a whole number of row steps `dt`, which makes the rows of
/// the two halves mirror images of each other.
pub fn dumbbell(depth: f64, collar: f64, dt: f64) -> Result<ProfileSpec> {
    let half = BULB_END + depth + collar;
    let rows = (2.0 * half / dt).ceil();
    let collar = rows * dt / 2.0 - BULB_END - depth;
    let top = FRAC_1_SQRT_2 * (-depth).exp();
    let neck = top / collar.cosh();
    let mut b = ProfileBuilder::new();
    b.push(
        BULB_END,
        SegmentShape::Sine {
            amplitude: 1.0,
            rate: 1.0,
            phase: 0.0,
        },
    )
    .cusp_down(FRAC_1_SQRT_2, depth);
    let center = b.t + collar;
    b.push(
        2.0 * collar,
        SegmentShape::CoshCollar {
            neck,
            center,
            rate: 1.0,
        },
    )
    .cusp_up(FRAC_1_SQRT_2, depth)
    .push(
        BULB_END,
        SegmentShape::Sine {
            amplitude: 1.0,
            rate: 1.0,
            phase: PI - BULB_END,
        },
    );
    // Pin the far pole exactly at `rows · dt`.
    let end = rows * dt;
    if let Some(last) = b.segments.last_mut() {
        last.end = end;
    }
    let mut p = b.finish(Caps {
        start_closed: true,
        end_closed: true,
    })?;
    p.mirrored = true;
    Ok(p)
}

fn revolution_space(
    profiles: Vec<(ProfileSpec, Vec<PieceRange>)>,
    dt: f64,
) -> Result<GeneratedSpace> {
    let mut built = Vec::with_capacity(profiles.len());
    let mut parts = Vec::with_capacity(profiles.len());
    let mut offset = 0;
    for (profile, pieces) in profiles {
        let (space, chart) = build_revolution_with_step(&profile, dt, DEFAULT_STENCIL)?;
        let n = space.num_points();
        built.push(space);
        parts.push(RevolutionPart {
            profile,
            chart,
            offset,
            pieces,
        });
        offset += n;
    }
    let refs: Vec<&FiniteMetricMeasureSpace> = built.iter().collect();
    let (space, _) = FiniteMetricMeasureSpace::disjoint_union(&refs);
    let first = &parts[0];
    let base = first.offset + first.chart.locate(first.pieces[0].anchor, 0.0);
    Ok(GeneratedSpace {
        space: space.with_basepoint(Some(base)),
        layout: Layout::Revolution { parts },
    })
}

fn whole(piece: usize, profile: &ProfileSpec, anchor: f64) -> PieceRange {
    PieceRange {
        piece,
        lo: 0.0,
        hi: profile.domain_length(),
        anchor,
        dir: 1.0,
    }
}

fn chain_depth(radii: &[f64]) -> f64 {
    let total: f64 = radii.iter().map(|&r| cusped_cylinder_area(r)).sum();
    let scales: Vec<f64> = radii.iter().flat_map(|&r| [r * FRAC_1_SQRT_2; 2]).collect();
    truncation_depth(&scales, total)
}

fn sphere_depth() -> f64 {
    truncation_depth(&[FRAC_1_SQRT_2; 2], 2.0 * cusped_sphere_area())
}

fn chain_member(radii: &[f64], depth: f64, dt: f64) -> Result<GeneratedSpace> {
    let (profile, necks, anchors) = chain_profile(radii, depth)?;
    let len = profile.domain_length();
    let pieces = anchors
        .iter()
        .enumerate()
        .map(|(i, &anchor)| PieceRange {
            piece: i,
            lo: if i == 0 { 0.0 } else { necks[i - 1] },
            hi: necks.get(i).copied().unwrap_or(len),
            anchor,
            dir: 1.0,
        })
        .collect();
    revolution_space(vec![(profile, pieces)], dt)
}

fn chain_limit(radii: &[f64], depth: f64, dt: f64) -> Result<GeneratedSpace> {
    let parts = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let (p, anchor) = cusped_cylinder(r, depth)?;
            let range = whole(i, &p, anchor);
            Ok((p, vec![range]))
        })
        .collect::<Result<Vec<_>>>()?;
    revolution_space(parts, dt)
}

fn sphere_limit(dt: f64) -> Result<GeneratedSpace> {
    let p = cusped_sphere(sphere_depth())?;
    let parts = (0..2).map(|i| (p.clone(), vec![whole(i, &p, 0.0)])).collect();
    revolution_space(parts, dt)
}

fn dumbbell_member(depth: f64, dt: f64) -> Result<GeneratedSpace> {
    let collar = if depth < 1.0 { depth } else { DUMBBELL_COLLAR };
    let p = dumbbell(depth, collar, dt)?;
    let len = p.domain_length();
    let pieces = vec![
        PieceRange {
            piece: 0,
            lo: 0.0,
            hi: 0.5 * len,
            anchor: 0.0,
            dir: 1.0,
        },
        PieceRange {
            piece: 1,
            lo: 0.5 * len,
            hi: len,
            anchor: len,
            dir: -1.0,
        },
    ];
    revolution_space(vec![(p, pieces)], dt)
}

/// Row step shared by all members and the limit, so that samples agree
/// wherever the profiles agree.
fn family_step(config: &FamilyConfig) -> Result<Option<f64>> {
    Ok(match config.family {
        FamilyKind::Torus | FamilyKind::Revolution => None,
        FamilyKind::CuspChain => {
            let (p, _, _) = chain_profile(&config.schedule, chain_depth(&config.schedule))?;
            Some(step_for_resolution(&[&p], config.resolution)?)
        }
        FamilyKind::S2Profile => {
            let p = cusped_sphere(sphere_depth())?;
            Some(step_for_resolution(&[&p, &p], config.resolution)?)
        }
    })
}

fn member_space(config: &FamilyConfig, k: usize, dt: Option<f64>) -> Result<GeneratedSpace> {
    let x = config.schedule[k - 1];
    match config.family {
        FamilyKind::Torus => {
            let spec = TorusSpec::new(config.period.unwrap_or(1.0), x)?;
            let (space, grid) = build_torus_with_grid(&spec, config.resolution, DEFAULT_STENCIL)?;
            Ok(GeneratedSpace {
                space,
                layout: Layout::Torus { spec, grid },
            })
        }
        FamilyKind::Revolution => {
            let depth = truncation_depth(&[x * FRAC_1_SQRT_2; 2], cusped_cylinder_area(x));
            let (p, anchor) = cusped_cylinder(x, depth)?;
            let dt = step_for_resolution(&[&p], config.resolution)?;
            let range = whole(0, &p, anchor);
            revolution_space(vec![(p, vec![range])], dt)
        }
        FamilyKind::CuspChain => {
            let radii = &config.schedule[..k];
            chain_member(radii, chain_depth(radii), dt.expect("chain step"))
        }
        FamilyKind::S2Profile => dumbbell_member(x, dt.expect("s2 step")),
    }
}

fn limit_space(config: &FamilyConfig, dt: Option<f64>) -> Result<GeneratedSpace> {
    match config.family {
        FamilyKind::Torus | FamilyKind::Revolution => Ok(GeneratedSpace::empty()),
        FamilyKind::CuspChain => chain_limit(
            &config.schedule,
            chain_depth(&config.schedule),
            dt.expect("chain step"),
        ),
        FamilyKind::S2Profile => sphere_limit(dt.expect("s2 step")),
    }
}

/// The declared limit of the family; empty for collapsing tori and `C_r`.
pub fn build_family_limit(config: &FamilyConfig) -> Result<GeneratedSpace> {
    config.validate()?;
    limit_space(config, family_step(config)?)
}

/// Member `k` (1-based) with its correspondences to member `k − 1` and to
/// the limit.
pub fn build_family_member(config: &FamilyConfig, k: usize) -> Result<FamilyMember> {
    config.validate()?;
    if k == 0 || k > config.len() {
        return Err(Error::MemberOutOfRange {
            k,
            len: config.len(),
        });
    }
    let dt = family_step(config)?;
    let generated = member_space(config, k, dt)?;
    let to_previous = if k > 1 {
        let prev = member_space(config, k - 1, dt)?;
        generated.canonical_correspondence(&prev)
    } else {
        None
    };
    let limit = limit_space(config, dt)?;
    let to_limit = generated.canonical_correspondence(&limit);
    Ok(FamilyMember {
        k,
        generated,
        to_previous,
        to_limit,
    })
}

/// Every member and the limit, each built once.
pub fn build_family(config: &FamilyConfig) -> Result<Family> {
    config.validate()?;
    let dt = family_step(config)?;
    let limit = limit_space(config, dt)?;
    let mut members: Vec<FamilyMember> = Vec::with_capacity(config.len());
    for k in 1..=config.len() {
        let generated = member_space(config, k, dt)?;
        let to_previous = members
            .last()
            .and_then(|prev| generated.canonical_correspondence(&prev.generated));
        let to_limit = generated.canonical_correspondence(&limit);
        members.push(FamilyMember {
            k,
            generated,
            to_previous,
            to_limit,
        });
    }
    Ok(Family {
        config: config.clone(),
        members,
        limit,
    })
}
