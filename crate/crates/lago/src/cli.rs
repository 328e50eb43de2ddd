//! `lago` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lago_core::align::NodeData;
use lago_core::graph::build_graph;
use lago_core::metrics::{evaluate, rouge_l, whitespace_tokens};
use lago_core::noise::NoiseMechanism;
use lago_core::synth::{generate, DeviationMode};
use lago_core::AlignmentMap;

use crate::config::{ExperimentConfig, Method, SweepConfig, SweepParam, Topology};
use crate::dataset::{write_dataset, Dataset};
use crate::error::{Error, Result};
use crate::io;
use crate::runner::{resolve_graph, run_experiment, synth_spec, write_outputs};

#[derive(Debug, Parser)]
#[command(name = "lago", version, about = "Graph-constrained few-shot embedding alignment")]
pub struct Cli {
    /// Worker threads for seeds and per-node work (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a language graph from a distance matrix.
    Graph(GraphArgs),
    /// Generate a synthetic instance and write it to disk.
    Synth(SynthArgs),
    /// Fit alignment maps for every seed and write a report.
    Solve(SolveArgs),
    /// Score alignment maps or decoded text.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Repeat `solve` over a list of values for one parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Distance matrix CSV.
    #[arg(long)]
    pub dist: PathBuf,
    /// Edge threshold: languages closer than this are connected.
    #[arg(long)]
    pub r: f64,
    /// Graph JSON destination [default: <output dir>/graph.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

/// Settings shared by `synth`, `solve` and `sweep`. Flags override the
/// config file.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,

    /// Distance matrix CSV (needs --r).
    #[arg(long, help_heading = "Graph")]
    pub dist: Option<PathBuf>,
    #[arg(long, help_heading = "Graph")]
    pub r: Option<f64>,
    #[arg(long, value_enum, help_heading = "Graph")]
    pub topology: Option<Topology>,
    #[arg(long, help_heading = "Graph")]
    pub nodes: Option<usize>,
    /// Graph JSON as written by `lago graph`.
    #[arg(long, help_heading = "Graph")]
    pub graph_file: Option<PathBuf>,

    /// Instance manifest written by `lago synth`.
    #[arg(long, help_heading = "Data")]
    pub manifest: Option<PathBuf>,
    #[arg(long, help_heading = "Data")]
    pub m: Option<usize>,
    #[arg(long, help_heading = "Data")]
    pub n: Option<usize>,
    #[arg(long, help_heading = "Data")]
    pub b_train: Option<usize>,
    #[arg(long, help_heading = "Data")]
    pub b_test: Option<usize>,
    #[arg(long, help_heading = "Data")]
    pub delta: Option<f64>,
    #[arg(long, help_heading = "Data")]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = parse_mode, help_heading = "Data")]
    pub mode: Option<DeviationMode>,

    #[arg(long, help_heading = "Solver")]
    pub c: Option<f64>,
    #[arg(long, help_heading = "Solver")]
    pub lambda: Option<f64>,
    #[arg(long, help_heading = "Solver")]
    pub epsilon: Option<f64>,
    #[arg(long, help_heading = "Solver")]
    pub eta: Option<f64>,
    #[arg(long, help_heading = "Solver")]
    pub alpha: Option<f64>,
    #[arg(long, help_heading = "Solver")]
    pub max_iters: Option<usize>,
    /// Write per-iteration solver traces.
    #[arg(long, help_heading = "Solver")]
    pub trace: bool,

    /// none, gaussian or laplace.
    #[arg(long, value_parser = parse_noise, help_heading = "Noise")]
    pub noise: Option<NoiseMechanism>,
    #[arg(long, help_heading = "Noise")]
    pub noise_scale: Option<f64>,
}

fn set<T: Copy>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = *v;
    }
}

fn parse_noise(s: &str) -> std::result::Result<NoiseMechanism, String> {
    s.parse().map_err(|e: lago_core::Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<DeviationMode, String> {
    s.parse().map_err(|e: lago_core::Error| e.to_string())
}

impl RunArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        set(&mut cfg.method, &self.method);
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if self.output_dir.is_some() {
            cfg.output_dir = self.output_dir.clone();
        }

        let g = &mut cfg.graph;
        if self.dist.is_some() || self.topology.is_some() || self.graph_file.is_some() {
            *g = Default::default();
        }
        if self.dist.is_some() {
            g.distance = self.dist.clone();
        }
        if self.graph_file.is_some() {
            g.file = self.graph_file.clone();
        }
        if self.topology.is_some() {
            g.topology = self.topology;
        }
        if self.r.is_some() {
            g.threshold = self.r;
        }
        if self.nodes.is_some() {
            g.nodes = self.nodes;
        }
        if self.manifest.is_some() {
            cfg.data.manifest = self.manifest.clone();
            if self.dist.is_none() && self.topology.is_none() && self.graph_file.is_none() && self.config.is_none() {
                cfg.graph = Default::default();
            }
        }

        let d = &mut cfg.data;
        set(&mut d.m, &self.m);
        set(&mut d.n, &self.n);
        set(&mut d.b_train, &self.b_train);
        set(&mut d.b_test, &self.b_test);
        set(&mut d.delta, &self.delta);
        set(&mut d.sigma, &self.sigma);
        set(&mut d.mode, &self.mode);

        let s = &mut cfg.solver;
        set(&mut s.c, &self.c);
        set(&mut s.lambda, &self.lambda);
        set(&mut s.epsilon, &self.epsilon);
        set(&mut s.eta, &self.eta);
        set(&mut s.alpha, &self.alpha);
        set(&mut s.max_iters, &self.max_iters);
        s.trace |= self.trace;

        set(&mut cfg.noise.mechanism, &self.noise);
        set(&mut cfg.noise.scale, &self.noise_scale);
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Csv,
    Bin,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Seed of the instance [default: first configured seed].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the manifest and embedding files [default: <output dir>/instance].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bin")]
    pub format: FileFormat,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Skip writing the fitted maps.
    #[arg(long)]
    pub no_maps: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum)]
    pub param: Option<SweepParam>,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    /// Also write the fitted maps.
    #[arg(long)]
    pub save_maps: bool,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Mean cosine and relative error of `victim × map` against `attack`.
    Cosine {
        #[arg(long)]
        victim: PathBuf,
        #[arg(long)]
        attack: PathBuf,
        /// Map in the LAGOMAP1 format.
        #[arg(long)]
        map: PathBuf,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Rouge-L between line-aligned candidate and reference text files.
    Rouge {
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Graph(a) => cmd_graph(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Solve(a) => cmd_solve(a, cli.threads),
        Command::Eval(c) => cmd_eval(c),
        Command::Sweep(a) => cmd_sweep(a, cli.threads),
    }
}

fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    ExperimentConfig {
        output_dir: flag,
        ..ExperimentConfig::default()
    }
    .resolved_output_dir()
}

fn cmd_graph(a: GraphArgs) -> Result<()> {
    let d = io::load_distance_matrix(&a.dist)?;
    let g = build_graph(&d, a.r)?;
    let out = a.out.unwrap_or_else(|| output_dir(a.output_dir).join("graph.json"));
    io::write_graph_json(&g, &out)?;
    let mut stdout = std::io::stdout().lock();
    let _ = write!(stdout, "{}", io::edge_list(&g));
    let _ = writeln!(stdout, "{} edges; wrote {}", g.edges().len(), out.display());
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let cfg = a.run.resolve()?;
    cfg.validate()?;
    let graph = resolve_graph(&cfg)?.ok_or_else(|| Error::Usage("synth needs a graph".into()))?;
    let seed = a.seed.unwrap_or(cfg.seeds[0]);
    let spec = synth_spec(&cfg, graph.clone(), seed);
    let inst = generate(&spec).map_err(|e| Error::in_stage("generate", e))?;
    let dir = a.out.unwrap_or_else(|| cfg.resolved_output_dir().join("instance"));
    let ext = match a.format {
        FileFormat::Csv => "csv",
        FileFormat::Bin => "bin",
    };
    let path = write_dataset(&dir, &Dataset::from_synth(graph, inst), Some(&spec), ext)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn finish(cfg: &ExperimentConfig, threads: usize, save_maps: bool) -> Result<()> {
    let exp = run_experiment(cfg, threads)?;
    let dir = cfg.resolved_output_dir();
    write_outputs(&exp, &dir, save_maps)?;
    let mut stdout = std::io::stdout().lock();
    for a in &exp.report.aggregates {
        let sweep = match (a.sweep_param, a.sweep_value) {
            (Some(p), Some(v)) => format!(" {p}={v}"),
            _ => String::new(),
        };
        let _ = writeln!(
            stdout,
            "{}{sweep}: mean cosine {:.4} ± {:.4}, test error {:.4} ± {:.4} over {} seeds",
            a.method, a.mean_cosine_mean, a.mean_cosine_std, a.test_rel_error_mean, a.test_rel_error_std, a.runs
        );
    }
    let _ = writeln!(stdout, "wrote {}", dir.join("report.json").display());
    Ok(())
}

fn cmd_solve(a: SolveArgs, threads: usize) -> Result<()> {
    let cfg = a.run.resolve()?;
    finish(&cfg, threads, !a.no_maps)
}

fn cmd_sweep(a: SweepArgs, threads: usize) -> Result<()> {
    let mut cfg = a.run.resolve()?;
    let param = a.param.or(cfg.sweep.as_ref().map(|s| s.param));
    let values = if a.values.is_empty() {
        cfg.sweep.as_ref().map(|s| s.values.clone()).unwrap_or_default()
    } else {
        a.values
    };
    let Some(param) = param else {
        return Err(Error::Usage("sweep needs --param (or a [sweep] table in the config)".into()));
    };
    if values.is_empty() {
        return Err(Error::Usage("sweep needs --values".into()));
    }
    cfg.sweep = Some(SweepConfig { param, values });
    finish(&cfg, threads, a.save_maps)
}

fn cmd_eval(c: EvalCommand) -> Result<()> {
    match c {
        EvalCommand::Cosine {
            victim,
            attack,
            map,
            json,
        } => {
            let test = NodeData::new(0, io::load_embeddings(&victim)?, io::load_embeddings(&attack)?)?;
            let w = AlignmentMap::new(vec![io::load_map(&map)?])?;
            let r = evaluate(std::slice::from_ref(&test), &w, f64::NAN, 0.0)?;
            if json {
                #[derive(serde::Serialize)]
                struct Out {
                    mean_cosine: f64,
                    test_rel_error: f64,
                    degenerate_rows: usize,
                }
                let out = Out {
                    mean_cosine: r.mean_cosine,
                    test_rel_error: r.test_rel_error[0],
                    degenerate_rows: r.degenerate_rows,
                };
                println!("{}", serde_json::to_string_pretty(&out).map_err(|e| Error::format("eval", e))?);
            } else {
                println!("mean cosine      {:.6}", r.mean_cosine);
                println!("test rel. error  {:.6}", r.test_rel_error[0]);
                println!("degenerate rows  {}", r.degenerate_rows);
            }
        }
        EvalCommand::Rouge { candidate, reference } => {
            let cand = io::read_text(&candidate)?;
            let refs = io::read_text(&reference)?;
            let (cand, refs): (Vec<&str>, Vec<&str>) = (cand.lines().collect(), refs.lines().collect());
            if cand.len() != refs.len() {
                return Err(Error::format(
                    "rouge",
                    format!("{} candidate lines but {} reference lines", cand.len(), refs.len()),
                ));
            }
            let n = cand.len().max(1) as f64;
            let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
            for (c, rf) in cand.iter().zip(&refs) {
                let s = rouge_l(&whitespace_tokens(c), &whitespace_tokens(rf));
                p += s.precision;
                r += s.recall;
                f += s.f1;
            }
            println!("pairs                {}", cand.len());
            println!("Rouge-L F1 (x100)    {:.2}", 100.0 * f / n);
            println!("Rouge-L P  (x100)    {:.2}", 100.0 * p / n);
            println!("Rouge-L R  (x100)    {:.2}", 100.0 * r / n);
        }
    }
    Ok(())
}
