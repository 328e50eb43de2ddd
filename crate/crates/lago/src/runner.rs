//! Runs configured experiments and assembles reports.

use std::path::Path;
use std::time::Instant;

use lago_core::align::{independent_ridge, ridge_objective, AlignmentMap, NodeData};
use lago_core::graph::build_graph;
use lago_core::metrics::{evaluate, EvalResult};
use lago_core::noise::{inject_noise, NoiseMechanism};
use lago_core::pdmm::{max_violation, pdmm_solve_with, PdmmTraceRow};
use lago_core::rng::derive;
use lago_core::synth::{generate, SynthSpec};
use lago_core::tv::{tv_objective, tv_solve_with, TvTraceRow};
use lago_core::{LanguageGraph, RoundExecutor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method, SweepParam, Topology};
use crate::dataset::{load_dataset, Dataset};
use crate::error::{Error, Result};
use crate::io;

const NOISE_STREAM: u64 = 0x006e_6f69_7365;

/// Runs each phase of a solver round on the rayon pool.
#[derive(Debug, Default, Clone, Copy)]
pub struct RayonExecutor;

impl RoundExecutor for RayonExecutor {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).into_par_iter().map(f).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_param: Option<SweepParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_value: Option<f64>,
    pub labels: Vec<String>,
    pub iterations: usize,
    pub eval: EvalResult,
}

impl RunRecord {
    pub fn mean_test_error(&self) -> f64 {
        let e = &self.eval.test_rel_error;
        e.iter().sum::<f64>() / e.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_param: Option<SweepParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_value: Option<f64>,
    pub runs: usize,
    pub mean_cosine_mean: f64,
    pub mean_cosine_std: f64,
    pub test_rel_error_mean: f64,
    pub test_rel_error_std: f64,
}

/// Everything that depends only on the config and seeds. Wall-clock timings
/// live in [`StageTimings`] so this serializes identically on every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_value: Option<f64>,
    pub prepare_s: f64,
    pub noise_s: f64,
    pub solve_s: f64,
    pub evaluate_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    Pdmm(Vec<PdmmTraceRow>),
    Tv(Vec<TvTraceRow>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub map: AlignmentMap,
    pub trace: Option<Trace>,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub report: ExperimentReport,
    /// Parallel to `report.runs`.
    pub artifacts: Vec<RunArtifacts>,
}

/// Result of solving one training problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub map: AlignmentMap,
    pub iterations: usize,
    pub objective: f64,
    pub max_violation: f64,
    pub trace: Option<Trace>,
}

/// Builds the graph named by the config, or returns `None` when it should be
/// taken from the data manifest.
pub fn resolve_graph(cfg: &ExperimentConfig) -> Result<Option<LanguageGraph>> {
    let g = &cfg.graph;
    if let Some(path) = &g.distance {
        let d = io::load_distance_matrix(path)?;
        let r = g.threshold.ok_or_else(|| Error::Usage("graph `distance` needs a `threshold`".into()))?;
        return Ok(Some(build_graph(&d, r)?));
    }
    if let Some(path) = &g.file {
        return io::load_graph_json(path).map(Some);
    }
    if let Some(t) = g.topology {
        let n = g.nodes.ok_or_else(|| Error::Usage("graph `topology` needs `nodes`".into()))?;
        return Ok(Some(match t {
            Topology::Empty => LanguageGraph::empty(n),
            Topology::Path => LanguageGraph::path(n),
            Topology::Complete => LanguageGraph::complete(n),
        }));
    }
    Ok(None)
}

pub fn synth_spec(cfg: &ExperimentConfig, graph: LanguageGraph, seed: u64) -> SynthSpec {
    let d = &cfg.data;
    SynthSpec {
        graph,
        m: d.m,
        n: d.n,
        b_train: d.b_train,
        b_test: d.b_test,
        delta: d.delta,
        sigma: d.sigma,
        seed,
        mode: d.mode,
    }
}

/// Adds noise to the victim embeddings of every node, train and test alike.
pub fn noisy_victims(
    data: &[NodeData],
    mechanism: NoiseMechanism,
    scale: f64,
    seed: u64,
    split: u64,
) -> lago_core::Result<Vec<NodeData>> {
    let base = derive(seed, NOISE_STREAM);
    data.iter()
        .map(|d| {
            let s = derive(base, 2 * d.node as u64 + split);
            d.with_victim(inject_noise(d.victim(), mechanism, scale, s)?)
        })
        .collect()
}

pub fn solve<E: RoundExecutor>(
    cfg: &ExperimentConfig,
    graph: &LanguageGraph,
    train: &[NodeData],
    exec: &E,
) -> lago_core::Result<Solution> {
    let s = &cfg.solver;
    let (map, iterations, trace) = match cfg.method {
        Method::Closed => (independent_ridge(train, s.lambda)?, 0, None),
        Method::Pdmm => {
            let out = pdmm_solve_with(graph, train, &s.pdmm(), exec)?;
            (out.map, out.iterations, out.trace.map(Trace::Pdmm))
        }
        Method::Tv => {
            let out = tv_solve_with(graph, train, &s.tv(), exec)?;
            (out.map, s.max_iters, out.trace.map(Trace::Tv))
        }
    };
    let objective = match cfg.method {
        Method::Tv => tv_objective(graph, train, map.as_slice(), s.lambda, s.eta)?,
        _ => ridge_objective(train, &map, s.lambda)?,
    };
    let max_violation = max_violation(graph, map.as_slice())?;
    Ok(Solution {
        map,
        iterations,
        objective,
        max_violation,
        trace,
    })
}

struct Job {
    seed: u64,
    sweep: Option<(SweepParam, f64)>,
}

fn run_job(
    base: &ExperimentConfig,
    graph: Option<&LanguageGraph>,
    fixed: Option<&Dataset>,
    job: &Job,
) -> Result<(RunRecord, RunArtifacts)> {
    let cfg = match job.sweep {
        Some((p, v)) => base.with_sweep_value(p, v),
        None => base.clone(),
    };
    let tag = match job.sweep {
        Some((p, v)) => format!("seed {} ({p} = {v})", job.seed),
        None => format!("seed {}", job.seed),
    };
    let clock = Instant::now();
    let data = match fixed {
        Some(d) => d.clone(),
        None => {
            let g = graph.cloned().ok_or_else(|| Error::Usage("no graph configured".into()))?;
            let inst = generate(&synth_spec(&cfg, g.clone(), job.seed))
                .map_err(|e| Error::in_stage(format!("{tag}: generate"), e))?;
            Dataset::from_synth(g, inst)
        }
    };
    let graph = graph.unwrap_or(&data.graph);
    let prepare_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (train, test) = if cfg.noise.mechanism == NoiseMechanism::None || cfg.noise.scale == 0.0 {
        (data.train, data.test)
    } else {
        let (mech, scale) = (cfg.noise.mechanism, cfg.noise.scale);
        let noisy = |d: &[NodeData], split| {
            noisy_victims(d, mech, scale, job.seed, split).map_err(|e| Error::in_stage(format!("{tag}: noise"), e))
        };
        (noisy(&data.train, 0)?, noisy(&data.test, 1)?)
    };
    let noise_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let sol = solve(&cfg, graph, &train, &RayonExecutor)
        .map_err(|e| Error::in_stage(format!("{tag}: solve ({})", cfg.method), e))?;
    let solve_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let eval = evaluate(&test, &sol.map, sol.objective, sol.max_violation)
        .map_err(|e| Error::in_stage(format!("{tag}: evaluate"), e))?;
    let evaluate_s = clock.elapsed().as_secs_f64();

    let record = RunRecord {
        seed: job.seed,
        method: cfg.method,
        sweep_param: job.sweep.map(|s| s.0),
        sweep_value: job.sweep.map(|s| s.1),
        labels: graph.labels().to_vec(),
        iterations: sol.iterations,
        eval,
    };
    let artifacts = RunArtifacts {
        map: sol.map,
        trace: sol.trace,
        timings: StageTimings {
            seed: job.seed,
            sweep_value: job.sweep.map(|s| s.1),
            prepare_s,
            noise_s,
            solve_s,
            evaluate_s,
        },
    };
    Ok((record, artifacts))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-(method, sweep value) means and sample standard deviations across
/// seeds, in first-appearance order.
pub fn aggregate(runs: &[RunRecord]) -> Vec<Aggregate> {
    let mut keys: Vec<(Method, Option<SweepParam>, Option<f64>)> = Vec::new();
    for r in runs {
        let k = (r.method, r.sweep_param, r.sweep_value);
        if !keys.iter().any(|x| x.0 == k.0 && x.1 == k.1 && x.2.map(f64::to_bits) == k.2.map(f64::to_bits)) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(method, sweep_param, sweep_value)| {
            let group: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| {
                    r.method == method
                        && r.sweep_param == sweep_param
                        && r.sweep_value.map(f64::to_bits) == sweep_value.map(f64::to_bits)
                })
                .collect();
            let cos: Vec<f64> = group.iter().map(|r| r.eval.mean_cosine).collect();
            let err: Vec<f64> = group.iter().map(|r| r.mean_test_error()).collect();
            let (mean_cosine_mean, mean_cosine_std) = mean_std(&cos);
            let (test_rel_error_mean, test_rel_error_std) = mean_std(&err);
            Aggregate {
                method,
                sweep_param,
                sweep_value,
                runs: group.len(),
                mean_cosine_mean,
                mean_cosine_std,
                test_rel_error_mean,
                test_rel_error_std,
            }
        })
        .collect()
}

/// Runs every (sweep value, seed) pair of `cfg` on a pool of `threads`
/// workers (0 picks the rayon default). Output order and contents do not
/// depend on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<Experiment> {
    cfg.validate()?;
    let graph = resolve_graph(cfg)?;
    let fixed = cfg.data.manifest.as_deref().map(load_dataset).transpose()?;
    if let (Some(g), Some(d)) = (&graph, &fixed) {
        if g.len() != d.graph.len() {
            return Err(Error::format(
                "config",
                format!("graph has {} nodes but the data has {}", g.len(), d.graph.len()),
            ));
        }
    }
    let sweep: Vec<Option<(SweepParam, f64)>> = match &cfg.sweep {
        Some(s) => s.values.iter().map(|&v| Some((s.param, v))).collect(),
        None => vec![None],
    };
    let jobs: Vec<Job> = sweep
        .iter()
        .flat_map(|&sw| cfg.seeds.iter().map(move |&seed| Job { seed, sweep: sw }))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    let results: Vec<Result<(RunRecord, RunArtifacts)>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_job(cfg, graph.as_ref(), fixed.as_ref(), job))
            .collect()
    });
    let mut runs = Vec::with_capacity(results.len());
    let mut artifacts = Vec::with_capacity(results.len());
    for r in results {
        let (rec, art) = r?;
        runs.push(rec);
        artifacts.push(art);
    }
    let aggregates = aggregate(&runs);
    Ok(Experiment {
        report: ExperimentReport {
            // the destination is not part of the experiment
            config: ExperimentConfig {
                output_dir: None,
                ..cfg.clone()
            },
            runs,
            aggregates,
        },
        artifacts,
    })
}

pub const REPORT_CSV_HEADER: [&str; 10] = [
    "seed",
    "method",
    "sweep_param",
    "sweep_value",
    "node",
    "label",
    "cosine",
    "test_rel_error",
    "objective",
    "max_violation",
];

pub fn report_json(report: &ExperimentReport) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map(|s| s + "\n")
        .map_err(|e| Error::format("report", e))
}

/// One row per (run, node). `objective` and `max_violation` belong to the
/// whole run and repeat on each of its rows.
pub fn report_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::format("report csv", e);
    w.write_record(REPORT_CSV_HEADER).map_err(err)?;
    for r in &report.runs {
        let param = r.sweep_param.map(|p| p.to_string()).unwrap_or_default();
        let value = r.sweep_value.map(|v| v.to_string()).unwrap_or_default();
        for (node, label) in r.labels.iter().enumerate() {
            w.write_record([
                r.seed.to_string(),
                r.method.to_string(),
                param.clone(),
                value.clone(),
                node.to_string(),
                label.clone(),
                r.eval.per_node_cosine[node].to_string(),
                r.eval.test_rel_error[node].to_string(),
                r.eval.objective.to_string(),
                r.eval.max_violation.to_string(),
            ])
            .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::format("report csv", e))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn run_dir(rec: &RunRecord, index: usize) -> String {
    match (rec.sweep_param, rec.sweep_value) {
        (Some(p), Some(_)) => format!("{p}_{index}_seed{}", rec.seed),
        _ => format!("seed{}", rec.seed),
    }
}

/// Writes `report.json`, `report.csv`, `config.toml`, `timings.json`, and,
/// when present, traces and (if `save_maps`) the solved maps.
pub fn write_outputs(exp: &Experiment, dir: &Path, save_maps: bool) -> Result<()> {
    let report = &exp.report;
    io::write_text(&dir.join("report.json"), &report_json(report)?)?;
    io::write_text(&dir.join("report.csv"), &report_csv(report)?)?;
    io::write_text(&dir.join("config.toml"), &report.config.to_toml()?)?;
    let timings: Vec<&StageTimings> = exp.artifacts.iter().map(|a| &a.timings).collect();
    let json = serde_json::to_string_pretty(&timings).map_err(|e| Error::format("timings", e))?;
    io::write_text(&dir.join("timings.json"), &(json + "\n"))?;

    let per_sweep = report.config.seeds.len();
    for (k, (rec, art)) in report.runs.iter().zip(&exp.artifacts).enumerate() {
        let name = run_dir(rec, k / per_sweep);
        if let Some(trace) = &art.trace {
            let path = dir.join("traces").join(format!("{name}.csv"));
            let mut buf = Vec::new();
            match trace {
                Trace::Pdmm(rows) => io::write_pdmm_trace(rows, &mut buf)?,
                Trace::Tv(rows) => io::write_tv_trace(rows, &mut buf)?,
            }
            io::write_text(&path, &String::from_utf8(buf).expect("csv output is utf-8"))?;
        }
        if save_maps {
            for (label, w) in rec.labels.iter().zip(art.map.iter()) {
                io::save_map(w, &dir.join("maps").join(&name).join(format!("{label}.bin")))?;
            }
        }
    }
    Ok(())
}
