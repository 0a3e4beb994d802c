//! Flat tori `R² / (aZ × bZ)` and round circles on regular grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Edge, FiniteMetricMeasureSpace, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub a: f64,
    pub b: f64,
}

impl TorusSpec {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidParams(format!(
                "torus periods must be positive, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }

    /// Flat distance between two points given in fractional coordinates,
    /// minimized over lattice translates.
    pub fn distance(&self, p: [f64; 2], q: [f64; 2]) -> f64 {
        let wrap = |d: f64, period: f64| {
            let d = (d * period).rem_euclid(period);
            d.min(period - d)
        };
        wrap(p[0] - q[0], self.a).hypot(wrap(p[1] - q[1], self.b))
    }
}

/// Grid layout of a sampled torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    pub nx: usize,
    pub ny: usize,
}

impl TorusGrid {
    pub fn index(&self, i: usize, j: usize) -> usize {
        (i % self.nx) * self.ny + (j % self.ny)
    }

    /// Sample nearest to fractional coordinates `(u, v)`.
    pub fn locate(&self, u: f64, v: f64) -> usize {
        let i = (u.rem_euclid(1.0) * self.nx as f64).round() as usize;
        let j = (v.rem_euclid(1.0) * self.ny as f64).round() as usize;
        self.index(i, j)
    }
}

pub fn build_torus(spec: &TorusSpec, resolution: usize) -> Result<FiniteMetricMeasureSpace> {
    Ok(build_torus_with_grid(spec, resolution, super::revolution::DEFAULT_STENCIL)?.0)
}

/// Regular `nx × ny` grid with `nx ny ≈ resolution`; each sample is joined
/// to all samples within `stencil` grid spacings, with the exact flat
/// distance as edge length.
pub fn build_torus_with_grid(
    spec: &TorusSpec,
    resolution: usize,
    stencil: usize,
) -> Result<(FiniteMetricMeasureSpace, TorusGrid)> {
    let spec = TorusSpec::new(spec.a, spec.b)?;
    if resolution < 100 {
        return Err(Error::InvalidParams(format!(
            "resolution {resolution} is below 100"
        )));
    }
    let step = (spec.a * spec.b / resolution as f64).sqrt();
    let nx = ((spec.a / step).round() as usize).max(1);
    let ny = ((spec.b / step).round() as usize).max(1);
    let grid = TorusGrid { nx, ny };
    let (sx, sy) = (spec.a / nx as f64, spec.b / ny as f64);
    let n = nx * ny;
    let weight = spec.a * spec.b / n as f64;

    let frac = |idx: usize| [(idx / ny) as f64 / nx as f64, (idx % ny) as f64 / ny as f64];
    let points: Vec<Point> = (0..n)
        .map(|idx| Point {
            coords: Some(frac(idx).to_vec()),
            weight,
            curvature: Some(0.0),
        })
        .collect();

    let reach = stencil as f64 * sx.max(sy) * (1.0 + 1e-9);
    let mx = (reach / sx).floor() as i64;
    let my = (reach / sy).floor() as i64;
    let mut offsets = Vec::new();
    for di in -mx..=mx {
        for dj in -my..=my {
            let len = ((di as f64) * sx).hypot((dj as f64) * sy);
            if (di, dj) != (0, 0) && len <= reach {
                offsets.push((di, dj));
            }
        }
    }
    let mut edges = Vec::with_capacity(n * offsets.len() / 2);
    for i in 0..nx {
        for j in 0..ny {
            let p = i * ny + j;
            for &(di, dj) in &offsets {
                let qi = (i as i64 + di).rem_euclid(nx as i64) as usize;
                let qj = (j as i64 + dj).rem_euclid(ny as i64) as usize;
                let q = qi * ny + qj;
                if p < q {
                    edges.push(Edge {
                        a: p,
                        b: q,
                        length: spec.distance(frac(p), frac(q)),
                    });
                }
            }
        }
    }
    edges.sort_unstable_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
    edges.dedup_by(|x, y| x.a == y.a && x.b == y.b);

    let h0 = 0.5 * sx.hypot(sy);
    Ok((FiniteMetricMeasureSpace::new(points, edges, Some(0), h0), grid))
}

/// Round circle of the given length sampled at `n` equally spaced points,
/// measure = arc length, coordinate = fraction of a turn.
pub fn build_circle(length: f64, n: usize, stencil: usize) -> Result<FiniteMetricMeasureSpace> {
    if !(length > 0.0) || n < 3 {
        return Err(Error::InvalidParams(format!(
            "circle needs positive length and >= 3 points, got ({length}, {n})"
        )));
    }
    let step = length / n as f64;
    let points = (0..n)
        .map(|j| Point {
            coords: Some(vec![j as f64 / n as f64]),
            weight: step,
            curvature: None,
        })
        .collect();
    let mut edges = Vec::new();
    for j in 0..n {
        for k in 1..=stencil.min(n / 2) {
            let q = (j + k) % n;
            let hops = k.min(n - k);
            let (a, b) = (j.min(q), j.max(q));
            edges.push(Edge {
                a,
                b,
                length: hops as f64 * step,
            });
        }
    }
    edges.sort_unstable_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
    edges.dedup_by(|x, y| x.a == y.a && x.b == y.b);
    Ok(FiniteMetricMeasureSpace::new(points, edges, Some(0), step / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::distances_from;

    #[test]
    fn unit_torus_has_unit_mass() {
        for res in [100, 1000, 4321] {
            let s = build_torus(&TorusSpec { a: 1.0, b: 1.0 }, res).unwrap();
            assert!((s.total_mass() - 1.0).abs() < 1e-12);
            assert!(s.is_valid());
        }
    }

    #[test]
    fn nonpositive_period_rejected() {
        assert!(build_torus(&TorusSpec { a: 1.0, b: 0.0 }, 1000).is_err());
    }

    #[test]
    fn thin_torus_diameter() {
        let spec = TorusSpec { a: 1.0, b: 0.1 };
        let s = build_torus(&spec, 4000).unwrap();
        let d = distances_from(&s, 0).unwrap();
        let diam = d.iter().copied().fold(0.0, f64::max);
        let exact = (0.25f64 + 0.0025).sqrt();
        assert!((diam - exact).abs() <= 2.0 * s.mesh_fill_radius());
    }

    #[test]
    fn circle_distances_are_arc_lengths() {
        let c = build_circle(2.0, 200, 4).unwrap();
        let d = distances_from(&c, 0).unwrap();
        assert!((d[100] - 1.0).abs() < 1e-12);
        assert!((d[150] - 0.5).abs() < 1e-12);
        assert!((c.total_mass() - 2.0).abs() < 1e-12);
    }
}
