use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use cls_core::collapse::{collapse_field, regular_set};
use cls_core::generators::{build_family_member, FamilyConfig};
use cls_core::gh::{gh_exact, gh_upper, pointed_gh, GhReport};
use cls_core::graph::{build_graph, GraphParams};
use cls_core::harness::{run_experiment, ExperimentConfig};
use cls_core::io::{load_space, save_space};
use cls_core::{DistanceMatrix, Error, FiniteMetricMeasureSpace};

#[derive(Parser)]
#[command(name = "cls", version, about = "Volume collapse, collapsing graphs and GH estimates on sampled surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample member K of a family and write it as a space document.
    Generate {
        /// Preset name or path to a family config.
        #[arg(long)]
        family: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the family's target point count.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Compute v and ν and count the regular points at each ε.
    Analyze {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        eps_grid: Vec<f64>,
        /// Also write the field as CSV.
        #[arg(long)]
        field_out: Option<PathBuf>,
    },
    /// Build the collapsing graph and print its document.
    Graph {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.25)]
        lambda_minus: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda_zero: f64,
        #[arg(long, default_value_t = 2.0)]
        lambda_plus: f64,
        /// Hop radius for coarsening; defaults to 3 h₀.
        #[arg(long)]
        hop: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gromov–Hausdorff estimate between two spaces.
    Gh {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Compare the balls of this radius around the basepoints. Exact
        /// when the balls fit under the cap, upper bound otherwise.
        #[arg(long)]
        pointed: Option<f64>,
        #[arg(long, default_value_t = 4)]
        effort: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full experiment from a config file or a preset.
    Run {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output directory; overrides the config's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Upper,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn input(path: &Path) -> Result<FiniteMetricMeasureSpace, Error> {
    if !path.is_file() {
        return Err(Error::InvalidParams(format!("no such file: {}", path.display())));
    }
    load_space(path)
}

fn print(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("plain json"));
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Generate {
            family,
            k,
            out,
            resolution,
        } => {
            let mut cfg = match FamilyConfig::preset(&family) {
                Some(c) => c,
                None if Path::new(&family).is_file() => FamilyConfig::load(Path::new(&family))?,
                None => {
                    return Err(Error::InvalidParams(format!(
                        "`{family}` is neither a preset nor a config file"
                    )))
                }
            };
            if let Some(r) = resolution {
                cfg.resolution = r;
            }
            let member = build_family_member(&cfg, k)?;
            fs::create_dir_all(&out)?;
            let path = out.join(format!("member-{k}.json"));
            save_space(member.space(), &path)?;
            print(&json!({
                "path": path,
                "k": k,
                "points": member.space().num_points(),
                "mass": member.space().total_mass(),
                "analytic_area": member.generated.analytic_area(),
            }));
        }
        Command::Analyze {
            space,
            eps_grid,
            field_out,
        } => {
            if let Some(bad) = eps_grid.iter().find(|e| !(**e > 0.0)) {
                return Err(Error::InvalidParams(format!("eps must be positive, got {bad}")));
            }
            let s = input(&space)?;
            let field = collapse_field(&s)?;
            let fold = |xs: &[f64], init: f64, f: fn(f64, f64) -> f64| xs.iter().copied().fold(init, f);
            let mut regular = Vec::new();
            for &eps in &eps_grid {
                regular.push(json!({"eps": eps, "regular": regular_set(&s, &field, eps)?.len()}));
            }
            if let Some(path) = field_out {
                field.write_csv(fs::File::create(path)?)?;
            }
            print(&json!({
                "points": s.num_points(),
                "mass": s.total_mass(),
                "v_min": fold(&field.v, f64::INFINITY, f64::min),
                "v_max": fold(&field.v, 0.0, f64::max),
                "nu_min": fold(&field.nu, f64::INFINITY, f64::min),
                "nu_max": fold(&field.nu, 0.0, f64::max),
                "regular": regular,
            }));
        }
        Command::Graph {
            space,
            eps,
            lambda_minus,
            lambda_zero,
            lambda_plus,
            hop,
            out,
        } => {
            let s = input(&space)?;
            let params = GraphParams::with_lambdas(
                eps,
                hop.unwrap_or_else(|| s.default_hop_radius()),
                lambda_minus,
                lambda_zero,
                lambda_plus,
            );
            params.validate()?;
            let field = collapse_field(&s)?;
            let doc = build_graph(&s, &field, &params)?.to_document();
            match out {
                Some(path) => doc.save(&path)?,
                None => println!("{}", doc.to_json()),
            }
        }
        Command::Gh {
            x,
            y,
            mode,
            pointed,
            effort,
            seed,
            out,
        } => {
            let (sx, sy) = (input(&x)?, input(&y)?);
            let (dx, dy) = (DistanceMatrix::from_space(&sx), DistanceMatrix::from_space(&sy));
            let report = match pointed {
                Some(radius) => {
                    let px = sx.basepoint().unwrap_or(0);
                    let py = sy.basepoint().unwrap_or(0);
                    let p = pointed_gh(&dx, px, &dy, py, radius, effort, seed)?;
                    let (bx, by) = (dx.restrict(&p.x_ball), dy.restrict(&p.y_ball));
                    GhReport::from_estimate(&p.estimate, &bx, &by)?
                }
                None => {
                    let est = match mode {
                        Mode::Exact => gh_exact(&dx, &dy)?,
                        Mode::Upper => gh_upper(&dx, &dy, effort, seed)?,
                    };
                    GhReport::from_estimate(&est, &dx, &dy)?
                }
            };
            match out {
                Some(path) => report.save(&path)?,
                None => println!("{}", report.to_json()),
            }
        }
        Command::Run {
            config,
            preset,
            out,
        } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => {
                    if !path.is_file() {
                        return Err(Error::InvalidParams(format!("no such file: {}", path.display())));
                    }
                    ExperimentConfig::load(&path)?
                }
                (None, Some(name)) => {
                    let dir = out.clone().unwrap_or_else(|| PathBuf::from(format!("runs/{name}")));
                    ExperimentConfig::preset(&name, dir)
                        .ok_or_else(|| Error::InvalidParams(format!("unknown preset `{name}`")))?
                }
                (None, None) => unreachable!("clap requires one of --config and --preset"),
            };
            if let Some(dir) = out {
                cfg.output = dir;
                cfg.validate()?;
            }
            let set = run_experiment(&cfg)?;
            print(&json!({
                "name": set.name,
                "output": set.output,
                "members": set.members.len(),
                "files": set.files.len(),
                "convergence_pass": set.convergence.as_ref().map(|c| c.pass),
            }));
        }
    }
    Ok(())
}
