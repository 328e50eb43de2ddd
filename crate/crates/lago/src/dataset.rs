//! Instances on disk: a JSON manifest pointing at per-node embedding files.

use std::path::{Path, PathBuf};

use lago_core::align::{AlignmentMap, NodeData};
use lago_core::synth::{SynthInstance, SynthSpec};
use lago_core::{LanguageGraph, Matrix};
use serde::{Deserialize, Serialize};

use crate::config::DataConfig;
use crate::error::{Error, Result};
use crate::io::{self, GraphJson};

/// Training and held-out pairs for every node of `graph`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: LanguageGraph,
    pub train: Vec<NodeData>,
    pub test: Vec<NodeData>,
    pub truth: Option<AlignmentMap>,
}

impl Dataset {
    pub fn from_synth(graph: LanguageGraph, inst: SynthInstance) -> Dataset {
        Dataset {
            graph,
            train: inst.train,
            test: inst.test,
            truth: Some(inst.truth),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFiles {
    pub label: String,
    pub train_victim: PathBuf,
    pub train_attack: PathBuf,
    pub test_victim: PathBuf,
    pub test_attack: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
}

/// Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<DataConfig>,
    pub graph: GraphJson,
    pub nodes: Vec<NodeFiles>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes every matrix of `data` under `dir` with extension `ext` (`csv` or
/// `bin`) plus `manifest.json`, and returns the manifest path.
pub fn write_dataset(
    dir: &Path,
    data: &Dataset,
    spec: Option<&SynthSpec>,
    ext: &str,
) -> Result<PathBuf> {
    let labels = data.graph.labels();
    let mut nodes = Vec::with_capacity(labels.len());
    for (i, label) in labels.iter().enumerate() {
        let name = |part: &str| PathBuf::from(format!("{part}/{label}.{ext}"));
        let files = NodeFiles {
            label: label.clone(),
            train_victim: name("train_victim"),
            train_attack: name("train_attack"),
            test_victim: name("test_victim"),
            test_attack: name("test_attack"),
            truth: data.truth.as_ref().map(|_| PathBuf::from(format!("truth/{label}.bin"))),
        };
        io::save_embeddings(data.train[i].victim(), &dir.join(&files.train_victim))?;
        io::save_embeddings(data.train[i].attack(), &dir.join(&files.train_attack))?;
        io::save_embeddings(data.test[i].victim(), &dir.join(&files.test_victim))?;
        io::save_embeddings(data.test[i].attack(), &dir.join(&files.test_attack))?;
        if let (Some(t), Some(p)) = (&data.truth, &files.truth) {
            io::save_map(t.get(i), &dir.join(p))?;
        }
        nodes.push(files);
    }
    let manifest = Manifest {
        seed: spec.map(|s| s.seed),
        spec: spec.map(|s| DataConfig {
            manifest: None,
            m: s.m,
            n: s.n,
            b_train: s.b_train,
            b_test: s.b_test,
            delta: s.delta,
            sigma: s.sigma,
            mode: s.mode,
        }),
        graph: GraphJson::from(&data.graph),
        nodes,
    };
    let path = dir.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::format("manifest", e))?;
    io::write_text(&path, &(json + "\n"))?;
    Ok(path)
}

pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = io::read_text(manifest_path)?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::format(manifest_path.display().to_string(), e))?;
    let dir = manifest_path.parent().unwrap_or(Path::new(""));
    let graph = LanguageGraph::try_from(manifest.graph)?;
    if manifest.nodes.len() != graph.len() {
        return Err(Error::format(
            "manifest",
            format!("{} node entries for {} graph nodes", manifest.nodes.len(), graph.len()),
        ));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut truth: Option<Vec<Matrix>> = Some(Vec::new());
    for (i, files) in manifest.nodes.iter().enumerate() {
        if files.label != graph.labels()[i] {
            return Err(Error::format(
                "manifest",
                format!("node {i} is `{}` but the graph has `{}`", files.label, graph.labels()[i]),
            ));
        }
        let load = |p: &PathBuf| io::load_embeddings(&dir.join(p));
        train.push(NodeData::new(i, load(&files.train_victim)?, load(&files.train_attack)?)?);
        test.push(NodeData::new(i, load(&files.test_victim)?, load(&files.test_attack)?)?);
        truth = match (truth, &files.truth) {
            (Some(mut v), Some(p)) => {
                v.push(io::load_map(&dir.join(p))?);
                Some(v)
            }
            _ => None,
        };
    }
    Ok(Dataset {
        graph,
        train,
        test,
        truth: truth.map(AlignmentMap::new).transpose()?,
    })
}
