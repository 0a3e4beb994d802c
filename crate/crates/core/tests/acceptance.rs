//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::f64::consts::{PI, SQRT_2};
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cls_core::collapse::{
    bishop_gromov_check, collapse_field, default_radii, nu, petersen_wei_deficit, petersen_wei_k,
    ComparisonFlag,
};
use cls_core::generators::{
    build_family, build_revolution, build_torus, Caps, ProfileSpec, Segment, SegmentShape,
    TorusSpec, PRESETS,
};
use cls_core::gh::{diameter_bound, gh_exact, gh_upper};
use cls_core::graph::{edge_rule, VertexClass};
use cls_core::harness::{run_experiment, ArtifactSet, ExperimentConfig};
use cls_core::metric::distances_from;
use cls_core::{DistanceMatrix, FiniteMetricMeasureSpace};

struct Outcome {
    failed: Vec<usize>,
}

impl Outcome {
    fn record(&mut self, n: usize, pass: bool, detail: String) {
        println!("{} criterion {n:>2}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(n);
        }
    }
}

fn main() {
    let started = Instant::now();
    let mut out = Outcome { failed: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let sphere = build_revolution(&ProfileSpec::round_sphere(), 20_000).expect("sphere");
    let flat = build_torus(&TorusSpec::new(1.0, 1.0).unwrap(), 10_000).expect("torus");

    metric_axioms(&mut out, &mut rng);
    generator_fidelity(&mut out, &mut rng, &sphere, &flat);
    nu_oracle(&mut out, &mut rng, &sphere);
    bishop_gromov(&mut out, &mut rng, &sphere, &flat);
    petersen_wei(&mut out, &mut rng, &sphere, &flat);
    gh_certification(&mut out, &mut rng);

    let root = tempfile::tempdir().expect("tempdir");
    let suite_start = Instant::now();
    let runs: Vec<ArtifactSet> = PRESETS
        .iter()
        .map(|name| {
            let cfg = ExperimentConfig::preset(name, root.path().join("a").join(name)).unwrap();
            run_experiment(&cfg).unwrap_or_else(|e| panic!("preset {name}: {e}"))
        })
        .collect();
    let suite_secs = suite_start.elapsed().as_secs_f64();
    let find = |name: &str| runs.iter().find(|r| r.name == name).expect("preset ran");

    graph_structure(&mut out, &runs, find("cr-cusp"), find("chain-m3"));
    morphisms(&mut out, find("s2-dumbbell"), find("s2-oscillate"));
    convergence(&mut out, find("tori-collapse"), find("s2-dumbbell"));
    probes(&mut out, find("s2-dumbbell"));
    determinism(&mut out, &runs, root.path(), suite_secs);

    println!("total {:.1}s", started.elapsed().as_secs_f64());
    if !out.failed.is_empty() {
        println!("failed criteria: {:?}", out.failed);
        std::process::exit(1);
    }
}

fn sample(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<usize> {
    (0..count).map(|_| rng.gen_range(0..n)).collect()
}

fn metric_axioms(out: &mut Outcome, rng: &mut ChaCha8Rng) {
    const TRIPLES: usize = 100_000;
    const SOURCES: usize = 64;
    let mut spaces = 0;
    let mut violations = 0;
    let mut slowest: f64 = 0.0;
    let mut worst_excess: f64 = 0.0;
    for name in PRESETS {
        let family = build_family(&cls_core::generators::FamilyConfig::preset(name).unwrap()).unwrap();
        let all: Vec<&FiniteMetricMeasureSpace> = family
            .members
            .iter()
            .map(|m| m.space())
            .chain((!family.limit.space.is_empty()).then_some(&family.limit.space))
            .collect();
        for space in all {
            assert!(space.num_points() <= 50_000);
            let t = Instant::now();
            let n = space.num_points();
            let sources = sample(rng, n, SOURCES);
            let rows: Vec<Vec<f64>> = sources.iter().map(|&s| distances_from(space, s).unwrap()).collect();
            for _ in 0..TRIPLES {
                let (i, j) = (rng.gen_range(0..SOURCES), rng.gen_range(0..SOURCES));
                let c = rng.gen_range(0..n);
                let (ab, ac, bc) = (rows[i][sources[j]], rows[i][c], rows[j][c]);
                for (lhs, r1, r2) in [(ab, ac, bc), (ac, ab, bc), (bc, ab, ac)] {
                    let excess = lhs - (r1 + r2);
                    if lhs.is_finite() && excess > 1e-12 {
                        violations += 1;
                        worst_excess = worst_excess.max(excess);
                    }
                    if lhs.is_infinite() && (r1 + r2).is_finite() {
                        violations += 1;
                    }
                }
            }
            slowest = slowest.max(t.elapsed().as_secs_f64());
            spaces += 1;
        }
    }
    out.record(
        1,
        violations == 0 && slowest < 30.0,
        format!(
            "{spaces} preset spaces x {TRIPLES} triples: {violations} triangle violations \
             (worst excess {worst_excess:.2e}), slowest space {slowest:.2}s"
        ),
    );
}

fn sphere_distance(a: &[f64], b: &[f64]) -> f64 {
    let c = a[0].cos() * b[0].cos() + a[0].sin() * b[0].sin() * (a[1] - b[1]).cos();
    c.clamp(-1.0, 1.0).acos()
}

fn flat_torus_distance(a: &[f64], b: &[f64]) -> f64 {
    let wrap = |d: f64| {
        let d = d.abs();
        d.min(1.0 - d)
    };
    wrap(a[0] - b[0]).hypot(wrap(a[1] - b[1]))
}

/// Largest `|d_graph − d_exact|` over `sources × targets` random pairs.
fn distance_error(
    rng: &mut ChaCha8Rng,
    space: &FiniteMetricMeasureSpace,
    exact: fn(&[f64], &[f64]) -> f64,
    sources: usize,
    targets: usize,
) -> f64 {
    let n = space.num_points();
    let mut worst: f64 = 0.0;
    for s in sample(rng, n, sources) {
        let row = distances_from(space, s).unwrap();
        for t in sample(rng, n, targets) {
            let d = exact(space.coords(s).unwrap(), space.coords(t).unwrap());
            worst = worst.max((row[t] - d).abs());
        }
    }
    worst
}

fn generator_fidelity(
    out: &mut Outcome,
    rng: &mut ChaCha8Rng,
    sphere: &FiniteMetricMeasureSpace,
    flat: &FiniteMetricMeasureSpace,
) {
    let rel = |mass: f64, area: f64| (mass - area).abs() / area;
    let mut cases: Vec<(String, f64)> = Vec::new();
    cases.push(("sphere".into(), rel(sphere.total_mass(), 4.0 * PI)));
    let cyl = build_revolution(&ProfileSpec::cylinder(0.5, 1.0), 5_000).unwrap();
    cases.push(("cylinder r=0.5".into(), rel(cyl.total_mass(), PI)));
    let cusp = build_revolution(&ProfileSpec::cusp(1.0, 4.0), 5_000).unwrap();
    cases.push(("cusp r=1 T=4".into(), rel(cusp.total_mass(), 2.0 * PI * (1.0 - (-4.0f64).exp()))));
    for name in PRESETS {
        let family = build_family(&cls_core::generators::FamilyConfig::preset(name).unwrap()).unwrap();
        for m in &family.members {
            cases.push((
                format!("{name} k={}", m.k),
                rel(m.space().total_mass(), m.generated.analytic_area()),
            ));
        }
    }
    let (worst_name, worst_mass) = cases
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .unwrap();

    let sphere_err = distance_error(rng, sphere, sphere_distance, 40, 25);
    let torus_err = distance_error(rng, flat, flat_torus_distance, 40, 25);
    let (hs, ht) = (sphere.mesh_fill_radius(), flat.mesh_fill_radius());
    out.record(
        2,
        worst_mass <= 0.01 && sphere_err <= 2.0 * hs && torus_err <= 2.0 * ht,
        format!(
            "worst mass error {:.3}% ({worst_name}, {} spaces); distance error sphere {sphere_err:.4} \
             <= 2h0 = {:.4}, torus {torus_err:.4} <= 2h0 = {:.4} on 1000 pairs each",
            100.0 * worst_mass,
            cases.len(),
            2.0 * hs,
            2.0 * ht
        ),
    );
}

fn nu_oracle(out: &mut Outcome, rng: &mut ChaCha8Rng, sphere: &FiniteMetricMeasureSpace) {
    let radii = default_radii(sphere).unwrap();
    // Cap area 2π(1 − cos r) over π r².
    let oracle = radii
        .iter()
        .map(|&r| 2.0 * (1.0 - r.cos()) / (r * r))
        .fold(f64::INFINITY, f64::min);
    let mut worst_rel: f64 = 0.0;
    let mut worst_target: f64 = 0.0;
    for x in sample(rng, sphere.num_points(), 20) {
        let v = nu(sphere, x, &radii).unwrap();
        worst_rel = worst_rel.max((v - oracle).abs() / oracle);
        worst_target = worst_target.max((v - 0.9194).abs() / 0.9194);
    }
    let thin = build_torus(&TorusSpec::new(1.0, 0.05).unwrap(), 5_000).unwrap();
    let thin_max = collapse_field(&thin)
        .unwrap()
        .nu
        .iter()
        .copied()
        .fold(0.0, f64::max);
    out.record(
        3,
        worst_rel <= 0.02 && worst_target <= 0.02 && thin_max <= 0.018,
        format!(
            "sphere ({} pts) 20 probes: worst error {:.3}% vs grid oracle {oracle:.4}, {:.3}% vs 0.9194; \
             thin torus max nu {thin_max:.4} <= 0.018",
            sphere.num_points(),
            100.0 * worst_rel,
            100.0 * worst_target
        ),
    );
}

fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

fn bishop_gromov(
    out: &mut Outcome,
    rng: &mut ChaCha8Rng,
    sphere: &FiniteMetricMeasureSpace,
    flat: &FiniteMetricMeasureSpace,
) {
    let mut failures = Vec::new();
    let cases = [(sphere, "sphere", geometric(0.1, 3.0, 16)), (flat, "torus", geometric(0.1, 1.4, 16))];
    for (space, label, radii) in &cases {
        for x in sample(rng, space.num_points(), 10) {
            let rep = bishop_gromov_check(space, x, radii, 0.02).unwrap();
            if rep.flag != ComparisonFlag::Monotone {
                failures.push(format!("{label}@{x}"));
            }
        }
    }
    // Doubling the weights outside a small ball breaks monotonicity.
    let x = 0;
    let row = distances_from(sphere, x).unwrap();
    let weights: Vec<f64> = (0..sphere.num_points())
        .map(|i| if row[i] < 0.5 { sphere.weight(i) } else { 2.0 * sphere.weight(i) })
        .collect();
    let broken = sphere.with_weights(&weights);
    let control = bishop_gromov_check(&broken, x, &geometric(0.1, 3.0, 16), 0.02).unwrap();
    let control_fails = control.flag == ComparisonFlag::NotMonotone;
    out.record(
        4,
        failures.is_empty() && control_fails,
        format!(
            "20 points x 16 radii, non-monotone: {:?}; doubled-weight control flagged {:?}",
            failures, control.flag
        ),
    );
}

/// Cusp (K = −1), collar of rate √2 (K = −2) and a flaring cusp (K = −1).
/// The joins sit where `f'/f = ∓1`, so `f` is C¹ without blending. Returns
/// the profile and the band area `2π √2 neck`.
fn k_dip_profile(neck: f64) -> (ProfileSpec, f64) {
    let s0 = (1.0 / SQRT_2).atanh() / SQRT_2;
    let edge = neck * SQRT_2;
    let (a, b) = (1.0, 1.0 + 2.0 * s0);
    let segments = vec![
        Segment::new(0.0, a, SegmentShape::Exponential { scale: edge * a.exp(), rate: -1.0 }),
        Segment::new(a, b, SegmentShape::CoshCollar { neck, center: a + s0, rate: SQRT_2 }),
        Segment::new(b, b + 1.0, SegmentShape::Exponential { scale: edge, rate: 1.0 }),
    ];
    let profile = ProfileSpec::new(segments, Caps::default()).unwrap();
    (profile, 2.0 * PI * SQRT_2 * neck)
}

fn petersen_wei(
    out: &mut Outcome,
    rng: &mut ChaCha8Rng,
    sphere: &FiniteMetricMeasureSpace,
    flat: &FiniteMetricMeasureSpace,
) {
    let p = 2.0;
    let mut spaces: Vec<(String, FiniteMetricMeasureSpace)> = vec![
        ("sphere".into(), sphere.clone()),
        ("torus".into(), flat.clone()),
    ];
    for name in PRESETS {
        let family = build_family(&cls_core::generators::FamilyConfig::preset(name).unwrap()).unwrap();
        for m in family.members {
            spaces.push((format!("{name} k={}", m.k), m.generated.space));
        }
    }
    let mut nonzero = Vec::new();
    let mut checked = 0;
    let mut deficit_checks = 0;
    let mut worst_deficit = f64::NEG_INFINITY;
    for (label, space) in &spaces {
        let floor = space.points().iter().filter_map(|q| q.curvature).fold(f64::INFINITY, f64::min);
        for x in sample(rng, space.num_points(), 5) {
            let k = petersen_wei_k(space, x, p, 1.0).unwrap();
            if floor >= -1.0 {
                checked += 1;
                if k != 0.0 {
                    nonzero.push(label.clone());
                }
            }
            if k == 0.0 {
                let rep = petersen_wei_deficit(space, x, p, 0.5, 1.0).unwrap();
                deficit_checks += 1;
                worst_deficit = worst_deficit.max(rep.deficit.unwrap());
            }
        }
    }
    let (dip, band) = k_dip_profile(0.5);
    let dip_space = build_revolution(&dip, 20_000).unwrap();
    let center = (0..dip_space.num_points())
        .min_by(|&i, &j| {
            let t = |q: usize| (dip_space.coords(q).unwrap()[0] - dip.domain_length() / 2.0).abs();
            t(i).total_cmp(&t(j))
        })
        .unwrap();
    let k_dip = petersen_wei_k(&dip_space, center, p, 100.0).unwrap();
    let expected = SQRT_2.powf(p) * band;
    let dip_rel = (k_dip - expected).abs() / expected;
    out.record(
        5,
        nonzero.is_empty() && dip_rel <= 0.05 && worst_deficit <= 1e-3,
        format!(
            "k = 0 at {checked} points on spaces with K >= -1 (nonzero: {nonzero:?}); dip k {k_dip:.4} \
             vs analytic {expected:.4} ({:.2}%); worst deficit with k = 0 {worst_deficit:.2e} over \
             {deficit_checks} points",
            100.0 * dip_rel
        ),
    );
}

fn random_space(rng: &mut ChaCha8Rng, max_points: usize) -> DistanceMatrix {
    let n = rng.gen_range(1..=max_points);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 3.0)).collect();
    DistanceMatrix::from_fn(n, |i, j| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1))
}

fn gh_certification(out: &mut Outcome, rng: &mut ChaCha8Rng) {
    let mut notes = Vec::new();
    let mut pass = true;
    for (a, b) in [(1.0, 3.0), (0.25, 0.25), (2.5, 0.5)] {
        let x = DistanceMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { a });
        let y = DistanceMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { b });
        let e = gh_exact(&x, &y).unwrap();
        pass &= e.upper == (a - b).abs() / 2.0 && e.lower == e.upper;
    }
    notes.push(format!("two-point formula {}", if pass { "exact" } else { "wrong" }));

    let mut self_max: f64 = 0.0;
    let mut tri_worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let (x, y, z) = (random_space(rng, 8), random_space(rng, 8), random_space(rng, 8));
        self_max = self_max.max(gh_exact(&x, &x).unwrap().upper);
        let xy = gh_exact(&x, &y).unwrap().upper;
        let yz = gh_exact(&y, &z).unwrap().upper;
        let xz = gh_exact(&x, &z).unwrap().upper;
        tri_worst = tri_worst.max(xz - (xy + yz));
    }
    pass &= self_max == 0.0 && tri_worst <= 1e-12;
    notes.push(format!("gh(X,X) max {self_max}, worst triangle excess {tri_worst:.2e} over 20 triples"));

    let mut below = 0;
    let mut bound_ok = true;
    for i in 0..50 {
        let (x, y) = (random_space(rng, 8), random_space(rng, 8));
        let exact = gh_exact(&x, &y).unwrap();
        let upper = gh_upper(&x, &y, 4, i).unwrap();
        if upper.upper < exact.upper - 1e-12 {
            below += 1;
        }
        bound_ok &= exact.lower >= diameter_bound(&x, &y) - 1e-12;
    }
    pass &= below == 0 && bound_ok;
    notes.push(format!("gh_upper below gh_exact on {below}/50 instances"));
    out.record(6, pass, notes.join("; "));
}

fn graph_structure(out: &mut Outcome, runs: &[ArtifactSet], cusp: &ArtifactSet, chain: &ArtifactSet) {
    let mut pass = true;
    let mut notes = Vec::new();
    for m in &cusp.members {
        let g = &m.graph;
        let alpha = g.vertices.iter().filter(|v| v.class == VertexClass::Alpha).count();
        let ok = alpha == 1
            && g.vertices.len() == 3
            && g.edges.len() == 2
            && m.star.as_ref().is_some_and(|s| s.pass && s.components.len() == 1);
        pass &= ok;
        notes.push(format!("cr-cusp {}: {alpha}a/{}v/{}e", m.label, g.vertices.len(), g.edges.len()));
    }
    let limit = chain.limit.as_ref().expect("chain limit");
    let star = limit.star.as_ref().expect("chain limit star check");
    let stars = star.components.iter().filter(|c| c.is_star).count();
    pass &= star.pass
        && star.components.len() == 3
        && stars == 3
        && limit.graph.vertices.len() == 9
        && limit.graph.edges.len() == 6;
    notes.push(format!(
        "chain limit: {stars} stars, {} vertices, {} edges",
        limit.graph.vertices.len(),
        limit.graph.edges.len()
    ));
    let pair = DistanceMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { 1.5 });
    let two = edge_rule(&pair);
    pass &= two == vec![(0, 1)];
    notes.push(format!("two-vertex case: {} edge", two.len()));
    let cross: usize = runs
        .iter()
        .flat_map(|r| r.members.iter().chain(r.limit.iter()))
        .map(|a| a.graph.cross_component_edges)
        .sum();
    pass &= cross == 0;
    notes.push(format!("cross-component edges on all presets: {cross}"));
    out.record(7, pass, notes.join("; "));
}

fn morphisms(out: &mut Outcome, dumbbell: &ArtifactSet, oscillate: &ArtifactSet) {
    let tail = &dumbbell.members[dumbbell.members.len().saturating_sub(3)..];
    let mut bad = Vec::new();
    for m in tail {
        match &m.morphism {
            Some(r) if r.edge_preserving && r.surjective && r.injective_on_alpha => {}
            _ => bad.push(m.label.clone()),
        }
    }
    let alphas: Vec<usize> = oscillate
        .members
        .iter()
        .map(|m| m.graph.vertices.iter().filter(|v| v.class == VertexClass::Alpha).count())
        .collect();
    let alternates = alphas.iter().all(|&a| a == 1 || a == 2)
        && alphas.windows(2).all(|w| w[0] != w[1]);
    out.record(
        8,
        bad.is_empty() && tail.len() == 3 && alternates,
        format!("dumbbell last 3 members failing: {bad:?}; oscillate alpha counts {alphas:?}"),
    );
}

fn convergence(out: &mut Outcome, tori: &ArtifactSet, dumbbell: &ArtifactSet) {
    let t = tori.convergence.as_ref().expect("tori convergence");
    let last = tori.members.last().expect("tori members");
    let tori_ok = t.pass && t.vacuous && last.regular_count(0.1) == 0;
    let d = dumbbell.convergence.as_ref().expect("dumbbell convergence");
    let mut notes = vec![format!(
        "tori vacuous {} (final nu max {:.4})",
        t.vacuous,
        last.nu_max()
    )];
    let mut ok = tori_ok && !d.vacuous;
    let final_k = dumbbell.members.len();
    for eps in [0.05, 0.1, 0.2] {
        let entries: Vec<_> = d.entries.iter().filter(|e| e.eps == eps).collect();
        let k0 = entries.iter().rev().take_while(|e| e.covered).last().map(|e| e.k);
        let covered_tail = k0.is_some();
        let final_dist = entries.iter().find(|e| e.k == final_k).map(|e| e.distortion);
        let last4: Vec<f64> = entries.iter().rev().take(4).rev().map(|e| e.distortion).collect();
        let shown: Vec<String> = last4.iter().map(|v| format!("{v:.2e}")).collect();
        let monotone = last4.len() == 4 && last4.windows(2).all(|w| w[1] <= w[0] + 1e-6);
        let eps_ok = covered_tail && final_dist.is_some_and(|v| v < 1e-2) && monotone;
        ok &= eps_ok;
        notes.push(format!(
            "eps {eps}: k0 {k0:?}, final distortion {:.2e}, last 4 [{}]",
            final_dist.unwrap_or(f64::NAN),
            shown.join(", ")
        ));
    }
    out.record(9, ok, notes.join("; "));
}

fn probes(out: &mut Outcome, dumbbell: &ArtifactSet) {
    let rep = dumbbell.probes.as_ref().expect("dumbbell probes");
    let floors: Vec<f64> = rep.probes.iter().filter_map(|p| p.lower_floor).collect();
    let min_floor = floors.iter().copied().fold(f64::INFINITY, f64::min);
    let worst_upper = rep
        .probes
        .iter()
        .map(|p| p.max_member / p.nu_limit - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    out.record(
        10,
        rep.probes.len() == 20 && rep.upper_pass && rep.tau == 0.05 && rep.lower_pass && min_floor > 0.0,
        format!(
            "{} probes, worst max_k nu / nu - 1 = {:.3}%; {} bulb probes, smallest floor {min_floor:.4}",
            rep.probes.len(),
            100.0 * worst_upper,
            floors.len()
        ),
    );
}

fn determinism(out: &mut Outcome, runs: &[ArtifactSet], root: &Path, suite_secs: f64) {
    let mut differing = Vec::new();
    let mut compared = 0;
    for first in runs {
        let cfg = ExperimentConfig::preset(&first.name, root.join("b").join(&first.name)).unwrap();
        let second = run_experiment(&cfg).unwrap();
        if second.files != first.files {
            differing.push(format!("{}: file lists", first.name));
        }
        for f in &first.files {
            if f == "config.json" {
                // Records the output directory, which differs by design.
                continue;
            }
            compared += 1;
            if fs::read(first.output.join(f)).ok() != fs::read(second.output.join(f)).ok() {
                differing.push(format!("{}/{f}", first.name));
            }
        }
    }
    out.record(
        11,
        differing.is_empty() && suite_secs < 600.0,
        format!(
            "{compared} artifacts compared across two runs, differing: {differing:?}; \
             preset suite {suite_secs:.1}s"
        ),
    );
}
