//! Space documents (`cls-space-1`).
//!
//! ```json
//! {
//!   "schema": "cls-space-1",
//!   "points": [{"id": 0, "coords": [0.5, 1.0], "weight": 0.01, "curvature": 1.0}],
//!   "edges": [{"a": 0, "b": 1, "length": 0.02}],
//!   "basepoint": 0,
//!   "mesh_fill_radius": 0.015
//! }
//! ```
//!
//! Point ids must equal their position in the array. Floats are written in
//! shortest round-trip form, so save/load/save is byte-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Edge, FiniteMetricMeasureSpace, Point};

pub const SPACE_SCHEMA: &str = "cls-space-1";

#[derive(Debug, Serialize, Deserialize)]
struct PointRecord {
    id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<f64>>,
    weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    curvature: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpaceDocument {
    schema: String,
    points: Vec<PointRecord>,
    edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    basepoint: Option<usize>,
    mesh_fill_radius: f64,
}

pub fn space_to_string(space: &FiniteMetricMeasureSpace) -> String {
    let doc = SpaceDocument {
        schema: SPACE_SCHEMA.to_string(),
        points: space
            .points()
            .iter()
            .enumerate()
            .map(|(id, p)| PointRecord {
                id,
                coords: p.coords.clone(),
                weight: p.weight,
                curvature: p.curvature,
            })
            .collect(),
        edges: space.edges().to_vec(),
        basepoint: space.basepoint(),
        mesh_fill_radius: space.mesh_fill_radius(),
    };
    serde_json::to_string(&doc).expect("space documents contain only finite numbers")
}

pub fn space_from_str(text: &str) -> Result<FiniteMetricMeasureSpace> {
    let doc: SpaceDocument = serde_json::from_str(text)?;
    if doc.schema != SPACE_SCHEMA {
        return Err(Error::Schema(format!(
            "expected schema {SPACE_SCHEMA}, found {}",
            doc.schema
        )));
    }
    let mut points = Vec::with_capacity(doc.points.len());
    for (pos, rec) in doc.points.into_iter().enumerate() {
        if rec.id != pos {
            return Err(Error::Schema(format!(
                "point at position {pos} has id {}",
                rec.id
            )));
        }
        points.push(Point {
            coords: rec.coords,
            weight: rec.weight,
            curvature: rec.curvature,
        });
    }
    Ok(FiniteMetricMeasureSpace::new(
        points,
        doc.edges,
        doc.basepoint,
        doc.mesh_fill_radius,
    ))
}

pub fn save_space(space: &FiniteMetricMeasureSpace, path: &Path) -> Result<()> {
    fs::write(path, space_to_string(space))?;
    Ok(())
}

pub fn load_space(path: &Path) -> Result<FiniteMetricMeasureSpace> {
    space_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn save_load_save_is_byte_identical(
            weights in prop::collection::vec(0.0f64..1e3, 1..20),
            lens in prop::collection::vec(1e-9f64..1e3, 0..19),
            h0 in 1e-6f64..1.0,
        ) {
            let n = weights.len();
            let points: Vec<Point> = weights.iter().enumerate().map(|(i, &w)| Point {
                coords: Some(vec![i as f64 / 7.0, w.sqrt()]),
                weight: w,
                curvature: if i % 2 == 0 { Some(-w / 3.0) } else { None },
            }).collect();
            let edges: Vec<Edge> = lens.iter().enumerate().filter(|(i, _)| i + 1 < n)
                .map(|(i, &l)| Edge { a: i, b: i + 1, length: l }).collect();
            let s = FiniteMetricMeasureSpace::new(points, edges, Some(0), h0);
            let text = space_to_string(&s);
            let back = space_from_str(&text).unwrap();
            prop_assert_eq!(back.points(), s.points());
            prop_assert_eq!(back.edges(), s.edges());
            prop_assert_eq!(space_to_string(&back), text);
        }
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let text = r#"{"schema":"other","points":[],"edges":[],"mesh_fill_radius":1}"#;
        assert!(matches!(space_from_str(text), Err(Error::Schema(_))));
    }
}
