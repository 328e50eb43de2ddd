//! Experiment configuration, read from TOML and overridable from flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lago_core::noise::NoiseMechanism;
use lago_core::pdmm::PdmmConfig;
use lago_core::synth::DeviationMode;
use lago_core::tv::TvConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const OUTPUT_DIR_ENV: &str = "LAGO_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "lago-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Independent per-node ridge regression.
    Closed,
    /// Hard bound on pairwise map differences, solved with IEQ-PDMM.
    Pdmm,
    /// Total-variation penalty, solved by subgradient descent.
    Tv,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Closed => "closed",
            Method::Pdmm => "pdmm",
            Method::Tv => "tv",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Empty,
    Path,
    Complete,
}

/// Where the language graph comes from. Exactly one of `distance` (with
/// `threshold`), `topology` (with `nodes`) or `file` is set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

/// Training and test data: a synthetic instance regenerated per seed, or the
/// files listed in a manifest written by `lago synth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    pub m: usize,
    pub n: usize,
    pub b_train: usize,
    pub b_test: usize,
    pub delta: f64,
    pub sigma: f64,
    pub mode: DeviationMode,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            manifest: None,
            m: 32,
            n: 16,
            b_train: 10,
            b_test: 200,
            delta: 0.05,
            sigma: 0.1,
            mode: DeviationMode::Independent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub c: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub alpha: f64,
    pub max_iters: usize,
    /// Write per-iteration traces next to the report.
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c: 0.4,
            lambda: 0.01,
            epsilon: 0.01,
            eta: 0.01,
            alpha: 0.01,
            max_iters: 500,
            trace: false,
        }
    }
}

impl SolverConfig {
    pub fn pdmm(&self) -> PdmmConfig {
        PdmmConfig {
            c: self.c,
            lambda: self.lambda,
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            stop_tol: None,
            record_trace: self.trace,
        }
    }

    pub fn tv(&self) -> TvConfig {
        TvConfig {
            lambda: self.lambda,
            eta: self.eta,
            alpha: self.alpha,
            max_iters: self.max_iters,
            record_trace: self.trace,
            ..TvConfig::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub mechanism: NoiseMechanism,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Epsilon,
    Eta,
    BTrain,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::Eta => "eta",
            SweepParam::BTrain => "b_train",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: Method::Pdmm,
            seeds: vec![1],
            output_dir: None,
            graph: GraphConfig {
                topology: Some(Topology::Complete),
                nodes: Some(4),
                ..GraphConfig::default()
            },
            data: DataConfig::default(),
            solver: SolverConfig::default(),
            noise: NoiseConfig::default(),
            sweep: None,
        }
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::format("config", e))
    }
}

impl ExperimentConfig {
    /// Loads a TOML config. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        let mut cfg: ExperimentConfig = text
            .parse()
            .map_err(|e: Error| Error::format(path.display().to_string(), e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.graph.distance,
            &mut self.graph.file,
            &mut self.data.manifest,
            &mut self.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::format("config", e))
    }

    /// Output directory: config, then the environment, then the built-in
    /// default.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Usage(format!("invalid config: {msg}")));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        let g = &self.graph;
        let sources = [g.distance.is_some(), g.topology.is_some(), g.file.is_some()];
        match sources.iter().filter(|&&s| s).count() {
            0 if self.data.manifest.is_some() => {}
            1 => {}
            0 => return bad("graph needs one of `distance`, `topology` or `file`".into()),
            _ => return bad("graph sources `distance`, `topology` and `file` are exclusive".into()),
        }
        if g.distance.is_some() && g.threshold.is_none() {
            return bad("graph `distance` needs a `threshold`".into());
        }
        if g.topology.is_some() && g.nodes.is_none() {
            return bad("graph `topology` needs `nodes`".into());
        }
        if !(self.noise.scale >= 0.0 && self.noise.scale.is_finite()) {
            return bad(format!("noise scale must be finite and >= 0, got {}", self.noise.scale));
        }
        match self.method {
            Method::Closed => {}
            Method::Pdmm => self.solver.pdmm().validate()?,
            Method::Tv => self.solver.tv().validate()?,
        }
        if !(self.solver.lambda >= 0.0) {
            return bad(format!("lambda must be >= 0, got {}", self.solver.lambda));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return bad("sweep needs at least one value".into());
            }
            match (s.param, self.method) {
                (SweepParam::Epsilon, Method::Pdmm) | (SweepParam::Eta, Method::Tv) => {}
                (SweepParam::BTrain, _) => {
                    if self.data.manifest.is_some() {
                        return bad("a b_train sweep needs synthetic data".into());
                    }
                    if s.values.iter().any(|v| !(v.fract() == 0.0 && *v >= 1.0)) {
                        return bad("b_train sweep values must be positive integers".into());
                    }
                }
                (p, m) => return bad(format!("cannot sweep {p} with method {m}")),
            }
        }
        Ok(())
    }

    /// Copy of the config with one sweep value applied.
    pub fn with_sweep_value(&self, param: SweepParam, value: f64) -> ExperimentConfig {
        let mut cfg = self.clone();
        match param {
            SweepParam::Epsilon => cfg.solver.epsilon = value,
            SweepParam::Eta => cfg.solver.eta = value,
            SweepParam::BTrain => cfg.data.b_train = value as usize,
        }
        cfg
    }
}
