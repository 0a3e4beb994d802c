use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::{collapse_field, regular_set, semicontinuity_probe, CollapseField, SemicontinuityReport};
use crate::error::{Error, Result};
use crate::generators::{build_family, Family, GeneratedSpace};
use crate::gh::convergence::{ConvergenceMember, ConvergenceReport, ExhaustionOptions};
use crate::gh::{
    gh_exact, gh_upper, landmark_net, measured_gh, volume_exhausted_check, Correspondence, GhMode,
    GhRecord, GhReport, MeasuredReport, EXACT_CAP,
};
use crate::graph::{build_graph, graph_morphism, star_check, CollapsingGraph, GraphDocument, MorphismReport, StarReport};
use crate::harness::config::{ExperimentConfig, GhSetting};
use crate::harness::plots;
use crate::metric::Dijkstra;
use crate::space::FiniteMetricMeasureSpace;

pub const MANIFEST_SCHEMA: &str = "cls-manifest-1";

const PROFILE_SAMPLES: usize = 400;
const HISTOGRAM_BINS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub name: String,
    pub complete: bool,
    pub stages: Vec<StageRecord>,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Per-space results kept in memory after a run.
#[derive(Debug, Clone)]
pub struct SpaceArtifacts {
    /// `None` for the limit.
    pub k: Option<usize>,
    pub label: String,
    pub points: usize,
    pub mass: f64,
    pub analytic_area: Option<f64>,
    pub field: CollapseField,
    pub graph: GraphDocument,
    pub star: Option<StarReport>,
    /// Limit graph mapped into this member.
    pub morphism: Option<MorphismReport>,
    pub measured: Option<MeasuredReport>,
    /// Estimate against the previous member.
    pub gh_previous: Option<GhRecord>,
    /// Profile curves `(t, f(t))` for surfaces of revolution.
    pub profile: Vec<Vec<(f64, f64)>>,
}

impl SpaceArtifacts {
    pub fn v_min(&self) -> f64 {
        self.field.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn v_max(&self) -> f64 {
        self.field.v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn nu_max(&self) -> f64 {
        self.field.nu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn regular_count(&self, eps: f64) -> usize {
        self.field.nu.iter().filter(|&&n| n > eps).count()
    }
}

#[derive(Debug, Clone, Default)]
pub struct ArtifactSet {
    pub name: String,
    pub eps_grid: Vec<f64>,
    pub members: Vec<SpaceArtifacts>,
    pub limit: Option<SpaceArtifacts>,
    pub convergence: Option<ConvergenceReport>,
    pub gh: Option<GhReport>,
    pub probes: Option<SemicontinuityReport>,
    pub output: PathBuf,
    /// Files written, relative to `output`, in write order.
    pub files: Vec<String>,
}

impl ArtifactSet {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty() && self.limit.is_none()
    }
}

struct Writer {
    root: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        self.files.push(rel.to_string());
        Ok(p)
    }

    fn text(&mut self, rel: &str, body: &str) -> Result<()> {
        let p = self.path(rel)?;
        fs::write(p, body)?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let body = serde_json::to_string_pretty(value)?;
        self.text(rel, &body)
    }
}

struct Runner {
    stages: Vec<StageRecord>,
}

impl Runner {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        match f() {
            Ok(v) => {
                self.stages.push(StageRecord {
                    name: name.to_string(),
                    status: "ok".into(),
                    error: None,
                });
                Ok(v)
            }
            Err(e) => {
                self.stages.push(StageRecord {
                    name: name.to_string(),
                    status: "failed".into(),
                    error: Some(e.to_string()),
                });
                Err(e.in_stage(name))
            }
        }
    }
}

fn profile_curves(g: &GeneratedSpace) -> Vec<Vec<(f64, f64)>> {
    g.profiles()
        .into_iter()
        .map(|p| {
            let len = p.domain_length();
            (0..=PROFILE_SAMPLES)
                .filter_map(|i| {
                    let t = len * i as f64 / PROFILE_SAMPLES as f64;
                    p.f(t.min(len)).ok().map(|f| (t, f))
                })
                .collect()
        })
        .collect()
}

/// Up to `count` points of `candidates`, spread by farthest-point sampling.
fn spread_points(space: &FiniteMetricMeasureSpace, candidates: &[usize], count: usize) -> Vec<usize> {
    if candidates.is_empty() || count == 0 {
        return Vec::new();
    }
    let n = space.num_points();
    let mut dj = Dijkstra::new(n);
    let mut nearest = vec![f64::INFINITY; n];
    let mut chosen = vec![candidates[0]];
    loop {
        let last = *chosen.last().expect("nonempty");
        dj.run(space, &[last], f64::INFINITY, None, |p, d| {
            if d < nearest[p] {
                nearest[p] = d;
            }
            true
        });
        nearest[last] = 0.0;
        if chosen.len() >= count {
            break;
        }
        let next = candidates
            .iter()
            .copied()
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(b.cmp(&a)))
            .expect("nonempty");
        if nearest[next] == 0.0 {
            break;
        }
        chosen.push(next);
    }
    chosen.sort_unstable();
    chosen
}

fn analyze_space(
    config: &ExperimentConfig,
    generated: &GeneratedSpace,
    field: CollapseField,
    k: Option<usize>,
) -> Result<(SpaceArtifacts, CollapsingGraph)> {
    let space = &generated.space;
    let params = config.graph.params_for(space.default_hop_radius());
    let graph = build_graph(space, &field, &params)?;
    let expected = if k.is_some() { &config.member_ends } else { &config.limit_ends };
    let star = expected.as_ref().map(|e| star_check(&graph, e));
    let area = generated.analytic_area();
    Ok((
        SpaceArtifacts {
            k,
            label: k.map_or("limit".to_string(), |k| format!("member_{k}")),
            points: space.num_points(),
            mass: space.total_mass(),
            analytic_area: (area > 0.0).then_some(area),
            graph: graph.to_document(),
            star,
            morphism: None,
            measured: None,
            gh_previous: None,
            profile: profile_curves(generated),
            field,
        },
        graph,
    ))
}

fn gh_between(
    config: &ExperimentConfig,
    a: &FiniteMetricMeasureSpace,
    b: &FiniteMetricMeasureSpace,
    k: usize,
) -> Result<GhRecord> {
    let (_, da, ra) = landmark_net(a, config.gh.landmarks)?;
    let (_, db, rb) = landmark_net(b, config.gh.landmarks)?;
    let est = if config.gh.mode == GhSetting::Exact && da.len() * db.len() <= EXACT_CAP {
        gh_exact(&da, &db)?
    } else {
        gh_upper(&da, &db, config.gh.effort, config.seed)?
    };
    Ok(GhRecord {
        k: Some(k),
        lower: Some(est.lower),
        // Nets move each space by at most their covering radius.
        upper: Some(est.upper + ra + rb),
        distortion: Some(est.certificate.distortion(&da, &db)?),
        transport_cost: None,
        mass_defect: None,
        note: Some(format!(
            "{:?} estimate on {}-point nets; covering radii {ra} and {rb} added to the upper bound",
            est.mode,
            da.len()
        )
        .to_lowercase()),
    })
}

/// Builds the family, analyzes every member and the limit, and writes all
/// documents under `config.output`. On failure the manifest is still
/// written, marked incomplete, and the error names the failing stage.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ArtifactSet> {
    config.validate()?;
    let mut out = Writer::new(&config.output)?;
    let mut runner = Runner { stages: Vec::new() };
    let result = pipeline(config, &mut out, &mut runner);
    let mut notes = Vec::new();
    let complete = match &result {
        Ok(set) => {
            if config.plots {
                notes.extend(emit_plots_into(set, &mut out)?);
            }
            true
        }
        Err(_) => false,
    };
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.to_string(),
        name: config.name.clone(),
        complete,
        stages: runner.stages,
        files: out.files.clone(),
        notes,
    };
    out.json("manifest.json", &manifest)?;
    result.map(|mut set| {
        set.files = out.files;
        set
    })
}

fn pipeline(config: &ExperimentConfig, out: &mut Writer, runner: &mut Runner) -> Result<ArtifactSet> {
    out.text("config.json", &config.to_json())?;
    let family: Family = runner.stage("generate", || build_family(&config.family))?;
    let has_limit = !family.limit.space.is_empty();

    let fields: Vec<CollapseField> = runner.stage("fields", || {
        let mut spaces: Vec<&FiniteMetricMeasureSpace> = family.members.iter().map(|m| m.space()).collect();
        if has_limit {
            spaces.push(&family.limit.space);
        }
        spaces.par_iter().map(|s| collapse_field(s)).collect()
    })?;
    let mut fields = fields.into_iter();
    let member_fields: Vec<CollapseField> = fields.by_ref().take(family.members.len()).collect();
    let limit_field = fields.next();

    let (mut members, graphs, limit) = runner.stage("graphs", || {
        let analyzed: Vec<(SpaceArtifacts, CollapsingGraph)> = family
            .members
            .par_iter()
            .zip(member_fields.clone())
            .map(|(m, f)| analyze_space(config, &m.generated, f, Some(m.k)))
            .collect::<Result<_>>()?;
        let limit = match &limit_field {
            Some(f) => Some(analyze_space(config, &family.limit, f.clone(), None)?),
            None => None,
        };
        let (members, graphs): (Vec<_>, Vec<_>) = analyzed.into_iter().unzip();
        Ok((members, graphs, limit))
    })?;

    // Limit points × member points.
    let from_limit: Vec<Option<Correspondence>> = family
        .members
        .iter()
        .map(|m| m.to_limit.as_ref().map(Correspondence::inverse))
        .collect();

    if let Some((_, limit_graph)) = &limit {
        runner.stage("morphisms", || {
            for ((art, g), corr) in members.iter_mut().zip(&graphs).zip(&from_limit) {
                let corr = corr.as_ref().ok_or_else(|| {
                    Error::MissingCorrespondence(format!("member {} has no map to the limit", art.k.unwrap_or(0)))
                })?;
                art.morphism = Some(graph_morphism(limit_graph, g, corr)?);
            }
            Ok(())
        })?;
    }

    let empty_space = FiniteMetricMeasureSpace::new(Vec::new(), Vec::new(), None, 0.0);
    let empty_field = CollapseField {
        v: Vec::new(),
        nu: Vec::new(),
        radii: Vec::new(),
        dimension: 2,
        omega: std::f64::consts::PI,
    };
    let convergence = runner.stage("convergence", || {
        let (limit_space, lf) = match &limit_field {
            Some(f) => (&family.limit.space, f),
            None => (&empty_space, &empty_field),
        };
        let conv_members: Vec<ConvergenceMember<'_>> = family
            .members
            .iter()
            .zip(&member_fields)
            .zip(&from_limit)
            .map(|((m, f), c)| ConvergenceMember {
                k: m.k,
                space: m.space(),
                field: f,
                correspondence: c.as_ref(),
            })
            .collect();
        let opts = ExhaustionOptions {
            radius: config.radius,
            ..ExhaustionOptions::default()
        };
        volume_exhausted_check(limit_space, lf, &conv_members, &config.eps_grid, &opts)
    })?;

    let gh = runner.stage("gh", || {
        let mode = if config.gh.mode == GhSetting::Exact {
            GhMode::Exact
        } else {
            GhMode::Heuristic
        };
        let mut report = GhReport::new(mode);
        for (i, (art, m)) in members.iter_mut().zip(&family.members).enumerate() {
            let measured = if has_limit {
                let to_limit = m.to_limit.as_ref().ok_or_else(|| {
                    Error::MissingCorrespondence(format!("member {} has no map to the limit", m.k))
                })?;
                measured_gh(m.space(), &family.limit.space, to_limit)?
            } else {
                MeasuredReport::against_empty(m.space())
            };
            let mut rec = if config.gh.mode != GhSetting::Off && i > 0 {
                gh_between(config, family.members[i - 1].space(), m.space(), m.k)?
            } else {
                GhRecord {
                    k: Some(m.k),
                    lower: None,
                    upper: None,
                    distortion: None,
                    transport_cost: None,
                    mass_defect: None,
                    note: None,
                }
            };
            if i > 0 && config.gh.mode != GhSetting::Off {
                art.gh_previous = Some(rec.clone());
            }
            rec.transport_cost = Some(measured.transport_cost);
            rec.mass_defect = Some(measured.mass_defect);
            art.measured = Some(measured);
            report.per_k.push(rec);
        }
        if let Some(last) = members.last().and_then(|a| a.measured.as_ref()) {
            report.distortion = Some(last.distortion);
            report.transport_cost = Some(last.transport_cost);
            report.mass_defect = Some(last.mass_defect);
        }
        if let Some(last) = members.last().and_then(|a| a.gh_previous.as_ref()) {
            report.lower = last.lower;
            report.upper = last.upper;
        }
        Ok(report)
    })?;

    let probes = match (&config.probes, &limit_field) {
        (Some(p), Some(lf)) => Some(runner.stage("probes", || {
            let eps = config.eps_grid.iter().copied().fold(f64::INFINITY, f64::min);
            let candidates = regular_set(&family.limit.space, lf, eps)?.to_vec();
            let chosen = spread_points(&family.limit.space, &candidates, p.count);
            let maps: Vec<Option<Vec<usize>>> = family
                .members
                .iter()
                .map(|m| family.limit.canonical_map(&m.generated))
                .collect();
            semicontinuity_probe(&member_fields, &maps, lf, &chosen, eps, p.tau, p.tail)
        })?),
        _ => None,
    };

    let limit = limit.map(|(a, _)| a);
    let set = ArtifactSet {
        name: config.name.clone(),
        eps_grid: config.eps_grid.clone(),
        members,
        limit,
        convergence: Some(convergence),
        gh: Some(gh),
        probes,
        output: config.output.clone(),
        files: Vec::new(),
    };
    runner.stage("write", || write_documents(&set, out))?;
    Ok(set)
}

fn write_documents(set: &ArtifactSet, out: &mut Writer) -> Result<()> {
    for art in set.members.iter().chain(&set.limit) {
        let p = out.path(&format!("fields/{}.csv", art.label))?;
        art.field.write_csv(BufWriter::new(fs::File::create(p)?))?;
        out.text(&format!("graphs/{}.json", art.label), &art.graph.to_json())?;
    }
    let stars: Vec<(&str, &StarReport)> = set
        .members
        .iter()
        .chain(&set.limit)
        .filter_map(|a| a.star.as_ref().map(|s| (a.label.as_str(), s)))
        .collect();
    if !stars.is_empty() {
        out.json("stars.json", &stars.into_iter().collect::<std::collections::BTreeMap<_, _>>())?;
    }
    let morphisms: Vec<(usize, &MorphismReport)> = set
        .members
        .iter()
        .filter_map(|a| Some((a.k?, a.morphism.as_ref()?)))
        .collect();
    if !morphisms.is_empty() {
        out.json("morphisms.json", &morphisms)?;
    }
    if let Some(c) = &set.convergence {
        out.json("convergence.json", c)?;
    }
    if let Some(g) = &set.gh {
        out.text("gh.json", &g.to_json())?;
    }
    if let Some(p) = &set.probes {
        out.json("probes.json", p)?;
    }
    let p = out.path("summary.csv")?;
    write_summary(set, fs::File::create(p)?)?;
    Ok(())
}

/// One row per member plus the limit. Every value comes from a field,
/// graph, morphism, convergence or gh document.
pub fn write_summary<W: std::io::Write>(set: &ArtifactSet, w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header: Vec<String> = [
        "space", "points", "mass", "v_min", "v_max", "nu_max", "vertices", "alpha", "edges", "star",
        "edge_preserving", "surjective", "injective_alpha",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for e in &set.eps_grid {
        header.push(format!("regular_{e}"));
        header.push(format!("covered_{e}"));
        header.push(format!("distortion_{e}"));
    }
    header.extend(["transport_cost", "mass_defect", "gh_previous_upper"].map(String::from));
    csv.write_record(&header)?;

    let opt = |v: Option<String>| v.unwrap_or_default();
    for art in set.members.iter().chain(&set.limit) {
        let mut row = vec![
            art.label.clone(),
            art.points.to_string(),
            art.mass.to_string(),
            art.v_min().to_string(),
            art.v_max().to_string(),
            art.nu_max().to_string(),
            art.graph.vertices.len().to_string(),
            art.graph
                .vertices
                .iter()
                .filter(|v| v.class == crate::graph::VertexClass::Alpha)
                .count()
                .to_string(),
            art.graph.edges.len().to_string(),
            opt(art.star.as_ref().map(|s| s.pass.to_string())),
            opt(art.morphism.as_ref().map(|m| m.edge_preserving.to_string())),
            opt(art.morphism.as_ref().map(|m| m.surjective.to_string())),
            opt(art.morphism.as_ref().map(|m| m.injective_on_alpha.to_string())),
        ];
        for &eps in &set.eps_grid {
            row.push(art.regular_count(eps).to_string());
            let entry = art.k.and_then(|k| {
                set.convergence
                    .as_ref()?
                    .entries
                    .iter()
                    .find(|e| e.k == k && e.eps == eps)
            });
            row.push(opt(entry.map(|e| e.covered.to_string())));
            row.push(opt(entry.map(|e| e.distortion.to_string())));
        }
        row.push(opt(art.measured.as_ref().map(|m| m.transport_cost.to_string())));
        row.push(opt(art.measured.as_ref().map(|m| m.mass_defect.to_string())));
        row.push(opt(art.gh_previous.as_ref().and_then(|g| g.upper).map(|u| u.to_string())));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

/// Outcome of [`emit_plots`]: files written and notes for skipped plots.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotOutcome {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

/// Draws profile curves, ν histograms, graph layouts and distortion
/// against `k` into `dir`.
pub fn emit_plots(set: &ArtifactSet, dir: &Path) -> Result<PlotOutcome> {
    let mut w = Writer::new(dir)?;
    let notes = emit_plots_into(set, &mut w)?;
    Ok(PlotOutcome {
        files: w.files.iter().map(|f| dir.join(f)).collect(),
        notes,
    })
}

fn emit_plots_into(set: &ArtifactSet, out: &mut Writer) -> Result<Vec<String>> {
    let mut notes = Vec::new();
    if set.is_empty() {
        notes.push("no spaces in the artifact set; no plots drawn".to_string());
        return Ok(notes);
    }
    for art in set.members.iter().chain(&set.limit) {
        if art.profile.is_empty() {
            notes.push(format!("{}: no profile curve", art.label));
        } else {
            let series: Vec<(String, Vec<(f64, f64)>)> = art
                .profile
                .iter()
                .enumerate()
                .map(|(i, c)| (format!("piece {i}"), c.clone()))
                .collect();
            let svg = plots::line_chart(&format!("{} profile", art.label), "t", "f(t)", &series);
            out.text(&format!("plots/{}_profile.svg", art.label), &svg)?;
        }
        let svg = plots::histogram(&format!("{} nu", art.label), "nu", &art.field.nu, HISTOGRAM_BINS);
        out.text(&format!("plots/{}_nu.svg", art.label), &svg)?;
        let svg = plots::graph_drawing(&format!("{} collapsing graph", art.label), &art.graph);
        out.text(&format!("plots/{}_graph.svg", art.label), &svg)?;
    }
    match &set.convergence {
        Some(c) if !c.entries.is_empty() => {
            let series: Vec<(String, Vec<(f64, f64)>)> = set
                .eps_grid
                .iter()
                .map(|&eps| {
                    let pts = c
                        .entries
                        .iter()
                        .filter(|e| e.eps == eps)
                        .map(|e| (e.k as f64, e.distortion))
                        .collect();
                    (format!("eps {eps}"), pts)
                })
                .collect();
            let svg = plots::line_chart("distortion on the regular set", "k", "distortion", &series);
            out.text("plots/distortion.svg", &svg)?;
        }
        _ => notes.push("no convergence report; distortion plot skipped".to_string()),
    }
    Ok(notes)
}
