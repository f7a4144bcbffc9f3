use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use endmodel::builders::{self, build, FamilyParams};
use endmodel::ray::{classify, trace_ray, Strategy};
use endmodel::report::build_report;
use endmodel::{discretize, validate, MetricGraph, ModelEnd};

#[derive(Parser)]
#[command(name = "endmodel", version, about = "Build, measure and classify model ends")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Serialize)]
struct ClassifyOpts {
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    /// Almost-minimizing constant; defaults to 4·D.
    #[arg(long = "C")]
    c: Option<f64>,
    /// Thin threshold; defaults to ε₀·e⁻⁵.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the model file of an example family.
    Build {
        #[arg(long)]
        family: String,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check model invariants.
    Validate { model: PathBuf },
    /// Discretize and write the node table.
    Discretize {
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the graph as DOT or a CSV edge list.
    ExportGraph {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shortest distance and path between two node ids.
    Distance { model: PathBuf, a: String, b: String },
    /// Per-block thickness as CSV.
    Thickness {
        model: PathBuf,
        #[arg(long, conflicts_with = "block")]
        all: bool,
        #[arg(long)]
        block: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace and classify one ray.
    Classify {
        model: PathBuf,
        #[arg(long, value_enum)]
        strategy: StrategyName,
        /// Component followed by the vertical strategy (default: first at level 0).
        #[arg(long)]
        component: Option<String>,
        /// Node ids of an explicit ray, one per line.
        #[arg(long)]
        nodes: Option<PathBuf>,
        #[command(flatten)]
        opts: ClassifyOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a family and write the full report bundle.
    Report {
        #[arg(long)]
        family: String,
        #[arg(long)]
        params: Option<PathBuf>,
        #[command(flatten)]
        opts: ClassifyOpts,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Csv,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum StrategyName {
    Vertical,
    Minimizing,
    Winding,
    Explicit,
}

enum Failure {
    Input(String),
    Runtime(String),
}

impl From<endmodel::Error> for Failure {
    fn from(e: endmodel::Error) -> Self {
        if e.is_invalid_input() {
            Failure::Input(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {}", path.display(), e)))
}

fn write(dir: &Path, name: &str, contents: &str) -> Outcome<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {}", dir.display(), e)))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {}", path.display(), e)))?;
    Ok(path)
}

fn load_model(path: &Path) -> Outcome<ModelEnd> {
    Ok(ModelEnd::from_json(&read(path)?)?)
}

fn load_graph(path: &Path) -> Outcome<(ModelEnd, MetricGraph)> {
    let model = load_model(path)?;
    let graph = discretize(&model)?;
    Ok((model, graph))
}

fn family_params(family: &str, params: Option<&Path>, seed: u64) -> Outcome<FamilyParams> {
    let overrides = match params {
        Some(path) => Some(
            serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(&read(path)?)
                .map_err(|e| Failure::Input(format!("params file: {}", e)))?,
        ),
        None => None,
    };
    Ok(builders::family_params(family, overrides.as_ref(), seed)?)
}

fn defaults(model: &ModelEnd, opts: &ClassifyOpts) -> (f64, f64) {
    let c = opts.c.unwrap_or(4.0 * model.constants.diameter_bound);
    let eps = opts.eps.unwrap_or(model.constants.epsilon0 * (-5.0f64).exp());
    (c, eps)
}

#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<&'a FamilyParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    strategy: Option<StrategyName>,
    horizon: usize,
    #[serde(rename = "C")]
    c: f64,
    eps: f64,
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Build { family, params, out, seed } => {
            let params = family_params(&family, params.as_deref(), seed)?;
            let model = build(&params)?;
            let path = write(&out, "model.json", &(model.to_json()? + "\n"))?;
            println!("{}", path.display());
        }
        Command::Validate { model } => {
            let m = load_model(&model)?;
            let report = validate(&m);
            if !report.is_valid() {
                return Err(Failure::Input(report.to_string()));
            }
            println!("valid: {} blocks", m.blocks.len());
        }
        Command::Discretize { model, out } => {
            let (_, g) = load_graph(&model)?;
            println!("nodes {} edges {} levels {}", g.node_count(), g.edge_count(), g.level_count());
            if let Some(dir) = out {
                let mut table = String::from("node_id,level,depth,inj\n");
                for n in g.nodes() {
                    table.push_str(&format!("{},{},{},{}\n", n.id, n.level(), n.depth, endmodel::graph::sig9(n.inj)));
                }
                write(&dir, "nodes.csv", &table)?;
            }
        }
        Command::ExportGraph { model, format, out } => {
            let (_, g) = load_graph(&model)?;
            let path = match format {
                Format::Dot => write(&out, "graph.dot", &g.to_dot())?,
                Format::Csv => write(&out, "edges.csv", &g.to_csv())?,
            };
            println!("{}", path.display());
        }
        Command::Distance { model, a, b } => {
            let (_, g) = load_graph(&model)?;
            let (d, path) = g.shortest_distance(&a, &b)?;
            println!("{}", endmodel::graph::sig9(d));
            println!("{}", path.join(" "));
        }
        Command::Thickness { model, all, block, out } => {
            let (_, g) = load_graph(&model)?;
            let blocks: Vec<usize> = match (all, block) {
                (_, Some(i)) => vec![i],
                (true, None) => (0..g.block_count()).collect(),
                (false, None) => return Err(Failure::Input("thickness needs --all or --block".into())),
            };
            let mut csv = String::from("block,thickness\n");
            for i in blocks {
                csv.push_str(&format!("{},{}\n", i, endmodel::graph::sig9(g.block_thickness(i)?)));
            }
            print!("{}", csv);
            if let Some(dir) = out {
                write(&dir, "thickness.csv", &csv)?;
            }
        }
        Command::Classify { model, strategy, component, nodes, opts, out } => {
            let (m, g) = load_graph(&model)?;
            let (c, eps) = defaults(&m, &opts);
            let s = match strategy {
                StrategyName::Minimizing => Strategy::Minimizing,
                StrategyName::Vertical => {
                    let component = match component {
                        Some(c) => c.as_str().into(),
                        None => m.surface(0).map(|s| s.components[0].id.clone()).ok_or_else(|| {
                            Failure::Input("model has no level 0".into())
                        })?,
                    };
                    Strategy::Vertical { component }
                }
                StrategyName::Winding => Strategy::Winding { loops: builders::winding_loops(&m) },
                StrategyName::Explicit => {
                    let path = nodes.ok_or_else(|| Failure::Input("explicit strategy needs --nodes".into()))?;
                    let ids = read(&path)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
                    Strategy::Explicit { nodes: ids }
                }
            };
            let ray = trace_ray(&g, &s, opts.horizon.min(g.level_count()))?;
            let cls = classify(&g, &ray, c, eps)?;
            let config = RunConfig {
                command: "classify",
                model: Some(model.display().to_string()),
                params: None,
                strategy: Some(strategy),
                horizon: opts.horizon,
                c,
                eps,
            };
            let line = format!("{}: {}", s.name(), cls.verdict_line());
            if let Some(dir) = out {
                let config = serde_json::to_string_pretty(&config).map_err(|e| Failure::Runtime(e.to_string()))?;
                let trend = serde_json::to_string(&cls.profile.trend).map_err(|e| Failure::Runtime(e.to_string()))?;
                let text = format!(
                    "# config\n{}\n\n# profile\n{}\n# trend\n{}\n\n# verdict\n{}\n",
                    config,
                    cls.profile.to_csv(),
                    trend,
                    line
                );
                let stem = s.name().to_lowercase();
                write(&dir, &format!("{}.txt", stem), &text)?;
                write(&dir, &format!("{}.csv", stem), &cls.profile.to_csv())?;
            }
            println!("{}", line);
        }
        Command::Report { family, params, opts, out, seed } => {
            let params = family_params(&family, params.as_deref(), seed)?;
            let model = build(&params)?;
            let g = discretize(&model)?;
            let (c, eps) = defaults(&model, &opts);
            let report = build_report(&model, &g, opts.horizon, c, eps)?;
            let config = RunConfig {
                command: "report",
                model: None,
                params: Some(&params),
                strategy: None,
                horizon: opts.horizon,
                c,
                eps,
            };
            let config = serde_json::to_string_pretty(&config).map_err(|e| Failure::Runtime(e.to_string()))?;
            let text = report.render(&config);
            if let Some(dir) = out {
                write(&dir, "report.txt", &text)?;
                write(&dir, "thickness.csv", &report.thickness_csv())?;
                write(&dir, "model.json", &(model.to_json()? + "\n"))?;
            }
            print!("{}", text);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
