//! Warped-product profiles `g = dt² + f(t)² dθ²` for surfaces of revolution.
//!
//! A profile is a chain of analytic segments over `[0, T]`. Each segment
//! knows `f`, `f'` and `f''`, so the Gauss curvature `K = -f''/f` is exact
//! at every sample.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const JOIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentShape {
    /// `amplitude * sin(rate * (t - start) + phase)`, curvature `rate²`.
    /// A round sphere of radius `R` has `amplitude = R`, `rate = 1 / R`.
    Sine { amplitude: f64, rate: f64, phase: f64 },
    /// Flat cylinder of the given radius.
    Constant { radius: f64 },
    /// `scale * exp(rate * (t - start))`, curvature `-rate²`. A negative
    /// rate is a cusp end.
    Exponential { scale: f64, rate: f64 },
    /// `neck * cosh(rate * (t - center))`, curvature `-rate²`. With rate 1
    /// this is a hyperbolic collar whose closed geodesic has length
    /// `2π neck`.
    CoshCollar {
        neck: f64,
        center: f64,
        #[serde(default = "one")]
        rate: f64,
    },
    /// Hermite cubic through `(start, f0, d0)` and `(end, f1, d1)`.
    CubicBlend { f0: f64, d0: f64, f1: f64, d1: f64 },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub shape: SegmentShape,
}

impl Segment {
    pub fn new(start: f64, end: f64, shape: SegmentShape) -> Self {
        Self { start, end, shape }
    }

    /// `(f, f', f'')` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let s = t - self.start;
        match self.shape {
            SegmentShape::Sine {
                amplitude,
                rate,
                phase,
            } => {
                let u = rate * s + phase;
                (
                    amplitude * u.sin(),
                    amplitude * rate * u.cos(),
                    -amplitude * rate * rate * u.sin(),
                )
            }
            SegmentShape::Constant { radius } => (radius, 0.0, 0.0),
            SegmentShape::Exponential { scale, rate } => {
                let f = scale * (rate * s).exp();
                (f, rate * f, rate * rate * f)
            }
            SegmentShape::CoshCollar { neck, center, rate } => {
                let u = rate * (t - center);
                (
                    neck * u.cosh(),
                    neck * rate * u.sinh(),
                    neck * rate * rate * u.cosh(),
                )
            }
            SegmentShape::CubicBlend { f0, d0, f1, d1 } => {
                let h = self.end - self.start;
                let x = s / h;
                let (x2, x3) = (x * x, x * x * x);
                let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
                let h10 = x3 - 2.0 * x2 + x;
                let h01 = -2.0 * x3 + 3.0 * x2;
                let h11 = x3 - x2;
                let f = h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1;
                let dh00 = (6.0 * x2 - 6.0 * x) / h;
                let dh10 = 3.0 * x2 - 4.0 * x + 1.0;
                let dh01 = (-6.0 * x2 + 6.0 * x) / h;
                let dh11 = 3.0 * x2 - 2.0 * x;
                let df = dh00 * f0 + dh10 * d0 + dh01 * f1 + dh11 * d1;
                let ddh00 = (12.0 * x - 6.0) / (h * h);
                let ddh10 = (6.0 * x - 4.0) / h;
                let ddh01 = (-12.0 * x + 6.0) / (h * h);
                let ddh11 = (6.0 * x - 2.0) / h;
                let ddf = ddh00 * f0 + ddh10 * d0 + ddh01 * f1 + ddh11 * d1;
                (f, df, ddf)
            }
        }
    }
}

/// Which ends of the profile close up at a pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Caps {
    pub start_closed: bool,
    pub end_closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub segments: Vec<Segment>,
    pub caps: Caps,
    /// `f(T - t) = f(t)`. Samplers then copy circle counts from the first
    /// half so both halves get identical rows.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub mirrored: bool,
}

impl ProfileSpec {
    pub fn new(segments: Vec<Segment>, caps: Caps) -> Result<Self> {
        let p = Self {
            segments,
            caps,
            mirrored: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit round sphere, `f = sin t` on `[0, π]`.
    pub fn round_sphere() -> Self {
        Self {
            segments: vec![Segment::new(
                0.0,
                PI,
                SegmentShape::Sine {
                    amplitude: 1.0,
                    rate: 1.0,
                    phase: 0.0,
                },
            )],
            caps: Caps {
                start_closed: true,
                end_closed: true,
            },
            mirrored: true,
        }
    }

    pub fn cylinder(radius: f64, length: f64) -> Self {
        Self {
            segments: vec![Segment::new(0.0, length, SegmentShape::Constant { radius })],
            caps: Caps::default(),
            mirrored: false,
        }
    }

    /// Pure hyperbolic cusp `f = r e^{-t}` on `[0, T]`.
    pub fn cusp(radius: f64, depth: f64) -> Self {
        Self {
            segments: vec![Segment::new(
                0.0,
                depth,
                SegmentShape::Exponential {
                    scale: radius,
                    rate: -1.0,
                },
            )],
            caps: Caps::default(),
            mirrored: false,
        }
    }

    pub fn domain_length(&self) -> f64 {
        self.segments.last().map(|s| s.end).unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProfile(m));
        if self.segments.is_empty() {
            return bad("no segments".into());
        }
        if self.segments[0].start != 0.0 {
            return bad("profile must start at t = 0".into());
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.end > s.start) {
                return bad(format!("segment {i} has empty interval"));
            }
            let params_ok = match s.shape {
                SegmentShape::Sine {
                    amplitude, rate, ..
                } => amplitude > 0.0 && rate > 0.0,
                SegmentShape::Constant { radius } => radius > 0.0,
                SegmentShape::Exponential { scale, .. } => scale > 0.0,
                SegmentShape::CoshCollar { neck, .. } => neck > 0.0,
                SegmentShape::CubicBlend { .. } => true,
            };
            if !params_ok {
                return bad(format!("segment {i} has a nonpositive scale"));
            }
        }
        for (i, w) in self.segments.windows(2).enumerate() {
            if (w[0].end - w[1].start).abs() > JOIN_TOL {
                return bad(format!("gap between segments {i} and {}", i + 1));
            }
            let left = w[0].eval(w[0].end).0;
            let right = w[1].eval(w[1].start).0;
            if (left - right).abs() > JOIN_TOL * left.abs().max(1.0) {
                return bad(format!(
                    "discontinuity at t = {}: {left} vs {right}",
                    w[0].end
                ));
            }
        }
        // Positivity on the open domain, sampled densely inside every segment.
        for (i, s) in self.segments.iter().enumerate() {
            let samples = 64;
            for k in 1..samples {
                let t = s.start + (s.end - s.start) * k as f64 / samples as f64;
                if !(s.eval(t).0 > 0.0) {
                    return bad(format!("f <= 0 inside segment {i} at t = {t}"));
                }
            }
        }
        let check_end = |closed: bool, seg: &Segment, t: f64, name: &str| -> Result<()> {
            let (f, df, _) = seg.eval(t);
            if closed {
                if f.abs() > 1e-9 || (df.abs() - 1.0).abs() > 1e-6 {
                    return bad(format!(
                        "{name} pole is not a smooth cap (f = {f}, f' = {df})"
                    ));
                }
            } else if !(f > 1e-9) {
                return bad(format!("{name} end is open but f = {f}"));
            }
            Ok(())
        };
        let first = &self.segments[0];
        let last = self.segments.last().unwrap();
        check_end(self.caps.start_closed, first, first.start, "start")?;
        check_end(self.caps.end_closed, last, last.end, "end")?;
        Ok(())
    }

    fn segment_at(&self, t: f64) -> Result<&Segment> {
        let len = self.domain_length();
        if !(t >= 0.0 && t <= len) {
            return Err(Error::OutOfDomain {
                value: t,
                lo: 0.0,
                hi: len,
            });
        }
        let idx = self.segments.partition_point(|s| s.end <= t);
        Ok(&self.segments[idx.min(self.segments.len() - 1)])
    }

    /// `(f, f', f'')` at `t`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64, f64)> {
        Ok(self.segment_at(t)?.eval(t))
    }

    pub fn f(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.0)
    }

    /// `∫_a^b f dt`, split at segment joins, composite Simpson per piece.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for s in &self.segments {
            let lo = a.max(s.start);
            let hi = b.min(s.end);
            if hi <= lo {
                continue;
            }
            let n = 16;
            let h = (hi - lo) / n as f64;
            let mut acc = s.eval(lo).0 + s.eval(hi).0;
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * s.eval(lo + h * k as f64).0;
            }
            total += acc * h / 3.0;
        }
        total
    }

    /// Curvature at `t`, lowered to the smallest value of any blend that
    /// overlaps `[a, b]`. Blends are narrow and their curvature can spike
    /// between sample rows.
    pub fn cell_curvature(&self, a: f64, b: f64, t: f64) -> Result<f64> {
        let mut k = gauss_curvature(self, t)?;
        for s in &self.segments {
            let lo = a.max(s.start);
            let hi = b.min(s.end);
            if hi <= lo || !matches!(s.shape, SegmentShape::CubicBlend { .. }) {
                continue;
            }
            for i in 0..=32 {
                let (f, _, ddf) = s.eval(lo + (hi - lo) * i as f64 / 32.0);
                k = k.min(-ddf / f);
            }
        }
        Ok(k)
    }

    /// `2π ∫ f dt` over the whole domain.
    pub fn area(&self) -> f64 {
        let len = self.domain_length();
        let pieces = 256;
        (0..pieces)
            .map(|k| {
                self.integral(
                    len * k as f64 / pieces as f64,
                    len * (k + 1) as f64 / pieces as f64,
                )
            })
            .sum::<f64>()
            * 2.0
            * PI
    }

    /// Replaces every slope discontinuity with a cubic Hermite blend of the
    /// given width centered on the join.
    pub fn with_blends(&self, width: f64) -> Result<Self> {
        let mut segs = self.segments.clone();
        let mut i = 0;
        while i + 1 < segs.len() {
            let join = segs[i].end;
            let (f_l, d_l, _) = segs[i].eval(join);
            let (_, d_r, _) = segs[i + 1].eval(join);
            if (d_l - d_r).abs() <= 1e-12 * f_l.abs().max(1.0) {
                i += 1;
                continue;
            }
            let half = width / 2.0;
            if segs[i].end - segs[i].start <= half || segs[i + 1].end - segs[i + 1].start <= half {
                return Err(Error::InvalidProfile(format!(
                    "segments around t = {join} are shorter than half the blend width"
                )));
            }
            let (lo, hi) = (join - half, join + half);
            let (f0, d0, _) = segs[i].eval(lo);
            let (f1, d1, _) = segs[i + 1].eval(hi);
            // Keep the right segment's parameterization anchored at its
            // original start by rewriting shapes that depend on `start`.
            let right_old_start = segs[i + 1].start;
            segs[i].end = lo;
            segs[i + 1] = shift_start(&segs[i + 1], right_old_start, hi);
            segs.insert(
                i + 1,
                Segment::new(lo, hi, SegmentShape::CubicBlend { f0, d0, f1, d1 }),
            );
            i += 2;
        }
        let mut p = Self::new(segs, self.caps)?;
        p.mirrored = self.mirrored;
        Ok(p)
    }
}

/// Moves a segment's start to `new_start` without changing `f` as a
/// function of `t`.
fn shift_start(seg: &Segment, old_start: f64, new_start: f64) -> Segment {
    let ds = new_start - old_start;
    let shape = match seg.shape {
        SegmentShape::Sine {
            amplitude,
            rate,
            phase,
        } => SegmentShape::Sine {
            amplitude,
            rate,
            phase: phase + rate * ds,
        },
        SegmentShape::Exponential { scale, rate } => SegmentShape::Exponential {
            scale: scale * (rate * ds).exp(),
            rate,
        },
        SegmentShape::CubicBlend { .. } => {
            let (f0, d0, _) = seg.eval(new_start);
            let (f1, d1, _) = seg.eval(seg.end);
            SegmentShape::CubicBlend { f0, d0, f1, d1 }
        }
        ref other => other.clone(),
    };
    Segment::new(new_start, seg.end, shape)
}

/// Gauss curvature `K = -f''/f` of the warped metric at `t`.
pub fn gauss_curvature(profile: &ProfileSpec, t: f64) -> Result<f64> {
    let (f, _, ddf) = profile.eval(t)?;
    if !(f > 0.0) {
        return Err(Error::InvalidProfile(format!("f({t}) = {f} is not positive")));
    }
    Ok(-ddf / f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curvature_of_model_profiles() {
        let k = gauss_curvature(&ProfileSpec::round_sphere(), 1.0).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
        let k = gauss_curvature(&ProfileSpec::cusp(0.3, 10.0), 4.0).unwrap();
        assert!((k + 1.0).abs() < 1e-12);
        let k = gauss_curvature(&ProfileSpec::cylinder(0.3, 1.0), 0.5).unwrap();
        assert_eq!(k, 0.0);
    }

    #[test]
    fn outside_domain_is_error() {
        assert!(matches!(
            gauss_curvature(&ProfileSpec::cylinder(1.0, 1.0), 1.5),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn model_profiles_validate() {
        ProfileSpec::round_sphere().validate().unwrap();
        ProfileSpec::cylinder(1.0, 2.0).validate().unwrap();
        ProfileSpec::cusp(1.0, 5.0).validate().unwrap();
    }

    #[test]
    fn discontinuous_profile_is_rejected() {
        let segs = vec![
            Segment::new(0.0, 1.0, SegmentShape::Constant { radius: 1.0 }),
            Segment::new(1.0, 2.0, SegmentShape::Constant { radius: 2.0 }),
        ];
        assert!(ProfileSpec::new(segs, Caps::default()).is_err());
    }

    #[test]
    fn open_end_with_zero_radius_is_rejected() {
        let mut p = ProfileSpec::round_sphere();
        p.caps.end_closed = false;
        assert!(p.validate().is_err());
    }

    #[test]
    fn areas_match_closed_forms() {
        assert!((ProfileSpec::round_sphere().area() - 4.0 * PI).abs() < 1e-9);
        assert!((ProfileSpec::cylinder(0.5, 1.0).area() - PI).abs() < 1e-12);
        let cusp = ProfileSpec::cusp(0.2, 10.0).area();
        let exact = 2.0 * PI * 0.2 * (1.0 - (-10.0f64).exp());
        assert!((cusp - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn blends_are_c1_and_preserve_far_values() {
        let segs = vec![
            Segment::new(0.0, 1.0, SegmentShape::Constant { radius: 1.0 }),
            Segment::new(
                1.0,
                3.0,
                SegmentShape::Exponential {
                    scale: 1.0,
                    rate: -1.0,
                },
            ),
        ];
        let p = ProfileSpec::new(segs, Caps::default()).unwrap();
        let b = p.with_blends(0.05).unwrap();
        assert_eq!(b.segments.len(), 3);
        for w in b.segments.windows(2) {
            let (f0, d0, _) = w[0].eval(w[0].end);
            let (f1, d1, _) = w[1].eval(w[1].start);
            assert!((f0 - f1).abs() < 1e-12);
            assert!((d0 - d1).abs() < 1e-12);
        }
        for t in [0.5, 1.5, 2.9] {
            assert!((b.f(t).unwrap() - p.f(t).unwrap()).abs() < 1e-12);
        }
    }
}
