//! Self-contained SVG drawings. Coordinates are printed with two decimals,
//! so equal inputs give byte-equal files.

use std::fmt::Write as _;

use crate::graph::{GraphDocument, VertexClass};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Svg {
    body: String,
}

impl Svg {
    fn new() -> Self {
        Self { body: String::new() }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1.5"/>"#
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str) {
        let mut p = String::new();
        for (x, y) in pts {
            let _ = write!(p, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            p.trim_end()
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" stroke="black" stroke-width="0.5"/>"#
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, filled: bool) {
        let fill = if filled { "black" } else { "white" };
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}" stroke="black" stroke-width="1.5"/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size:.0}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" viewBox=\"0 0 {WIDTH:.0} {HEIGHT:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Axis frame mapping data ranges onto the drawing area.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            f = Frame { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        }
        if f.x1 - f.x0 <= 0.0 {
            f.x1 = f.x0 + 1.0;
        }
        if f.y1 - f.y0 <= 0.0 {
            f.y1 = f.y0 + 1.0;
        }
        f
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, svg: &mut Svg, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r) = (MARGIN, WIDTH - MARGIN);
        let (t, b) = (MARGIN, HEIGHT - MARGIN);
        svg.line(l, b, r, b, "black");
        svg.line(l, b, l, t, "black");
        svg.text(WIDTH / 2.0, 30.0, 16.0, "middle", title);
        svg.text(WIDTH / 2.0, HEIGHT - 12.0, 12.0, "middle", xlabel);
        svg.text(14.0, HEIGHT / 2.0, 12.0, "start", ylabel);
        svg.text(l, b + 16.0, 10.0, "middle", &format!("{:.3}", self.x0));
        svg.text(r, b + 16.0, 10.0, "middle", &format!("{:.3}", self.x1));
        svg.text(l - 4.0, b, 10.0, "end", &format!("{:.3}", self.y0));
        svg.text(l - 4.0, t + 4.0, 10.0, "end", &format!("{:.3}", self.y1));
    }
}

/// Labeled curves on one set of axes.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let frame = Frame::fit(series.iter().flat_map(|(_, pts)| pts.iter().copied()));
    let mut svg = Svg::new();
    frame.axes(&mut svg, title, xlabel, ylabel);
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mapped: Vec<(f64, f64)> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| (frame.px(x), frame.py(y)))
            .collect();
        svg.polyline(&mapped, color);
        let ly = MARGIN + 14.0 * i as f64;
        svg.line(WIDTH - MARGIN - 90.0, ly, WIDTH - MARGIN - 70.0, ly, color);
        svg.text(WIDTH - MARGIN - 66.0, ly + 4.0, 11.0, "start", label);
    }
    svg.finish()
}

/// Histogram of `values` over `bins` equal bins.
pub fn histogram(title: &str, xlabel: &str, values: &[f64], bins: usize) -> String {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = bins.max(1);
    let (lo, hi) = if finite.is_empty() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in &finite {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let frame = Frame { x0: lo, x1: hi, y0: 0.0, y1: top };
    let mut svg = Svg::new();
    frame.axes(&mut svg, title, xlabel, "count");
    for (i, &c) in counts.iter().enumerate() {
        let x = frame.px(lo + i as f64 * width);
        let w = frame.px(lo + (i + 1) as f64 * width) - x;
        let y = frame.py(c as f64);
        svg.rect(x, y, w, frame.py(0.0) - y, "#9ecae1");
    }
    svg.finish()
}

/// Star layout: α vertices filled at component centers, their neighbors
/// hollow on a ring around them.
pub fn graph_drawing(title: &str, doc: &GraphDocument) -> String {
    let n = doc.vertices.len();
    let mut adj = vec![Vec::new(); n];
    for e in &doc.edges {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    // Components in order of their smallest vertex id.
    let mut comp = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = groups.len();
        let mut stack = vec![s];
        let mut members = Vec::new();
        comp[s] = id;
        while let Some(v) = stack.pop() {
            members.push(v);
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }

    let mut svg = Svg::new();
    svg.text(WIDTH / 2.0, 30.0, 16.0, "middle", title);
    let mut pos = vec![(0.0, 0.0); n];
    let cell = (WIDTH - 2.0 * MARGIN) / groups.len().max(1) as f64;
    let cy = HEIGHT / 2.0 + 10.0;
    let ring = (cell * 0.35).min(120.0);
    for (g, members) in groups.iter().enumerate() {
        let cx = MARGIN + cell * (g as f64 + 0.5);
        let center = members
            .iter()
            .copied()
            .find(|&v| doc.vertices[v].class == VertexClass::Alpha)
            .unwrap_or(members[0]);
        pos[center] = (cx, cy);
        let others: Vec<usize> = members.iter().copied().filter(|&v| v != center).collect();
        for (i, &v) in others.iter().enumerate() {
            let angle = std::f64::consts::TAU * i as f64 / others.len() as f64 - std::f64::consts::FRAC_PI_2;
            pos[v] = (cx + ring * angle.cos(), cy + ring * angle.sin());
        }
    }
    for e in &doc.edges {
        let (a, b) = (pos[e.a], pos[e.b]);
        svg.line(a.0, a.1, b.0, b.1, "black");
    }
    for (v, rec) in doc.vertices.iter().enumerate() {
        let (x, y) = pos[v];
        svg.circle(x, y, 9.0, rec.class == VertexClass::Alpha);
        svg.text(x, y - 14.0, 11.0, "middle", &v.to_string());
    }
    if n == 0 {
        svg.text(WIDTH / 2.0, HEIGHT / 2.0, 14.0, "middle", "no vertices");
    }
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeRecord, ParamsRecord, ProvenanceRecord, VertexRecord, GRAPH_SCHEMA};

    fn star() -> GraphDocument {
        let v = |id, class| VertexRecord {
            id,
            class,
            size: 10,
            v_min: 0.1,
            v_max: 1.0,
        };
        GraphDocument {
            schema: GRAPH_SCHEMA.into(),
            vertices: vec![
                v(0, VertexClass::Alpha),
                v(1, VertexClass::Omega),
                v(2, VertexClass::Omega),
            ],
            edges: vec![EdgeRecord { a: 0, b: 1 }, EdgeRecord { a: 0, b: 2 }],
            cross_component_edges: 0,
            params: ParamsRecord {
                eps: 0.1,
                lambdas: [0.25, 0.5, 2.0],
                hop: 0.1,
                theta_alpha: 0.00625,
            },
            provenance: ProvenanceRecord { b: 1, c: 1, d: 1 },
        }
    }

    #[test]
    fn filled_and_hollow_nodes() {
        let s = graph_drawing("g", &star());
        assert_eq!(s.matches(r#"fill="black" stroke"#).count(), 1);
        assert_eq!(s.matches(r#"fill="white" stroke"#).count(), 2);
        assert_eq!(s.matches("<line").count(), 2);
    }

    #[test]
    fn drawings_are_deterministic() {
        let vals: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(histogram("h", "x", &vals, 12), histogram("h", "x", &vals, 12));
        let series = vec![("a".to_string(), vec![(1.0, 0.5), (2.0, f64::NAN), (3.0, 0.1)])];
        let s = line_chart("l", "k", "d", &series);
        assert!(s.contains("<polyline"));
    }
}
