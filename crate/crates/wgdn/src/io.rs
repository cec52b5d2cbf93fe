//! File formats and dataset assembly for the command-line tools.
//!
//! Edge lists are plain text (two whitespace-separated 0-based ids per line,
//! `#` comments). Features and embeddings are headerless CSV with one row of
//! decimal floats per node. Labels are one integer per line. Checkpoints are
//! JSON.

use crate::graph::{build_graph, FeatureMatrix, Graph};
use crate::linalg::{gaussian_matrix, DenseMatrix, SeededRng};
use crate::model::{AdamState, ModelConfig, Params};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

/// Parses an edge-list file; returns edges and the implied node count
/// (max id + 1).
pub fn read_edge_list(path: &Path) -> Result<(Vec<(usize, usize)>, usize)> {
    let file = std::fs::File::open(path)?;
    let mut edges = Vec::new();
    let mut max_id = None::<usize>;
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.ok_or_else(|| bad_line(path, line_no))?
                .parse::<usize>()
                .map_err(|_| bad_line(path, line_no))
        };
        let u = parse(parts.next())?;
        let v = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(bad_line(path, line_no));
        }
        max_id = Some(max_id.map_or(u.max(v), |m: usize| m.max(u).max(v)));
        edges.push((u, v));
    }
    let num_nodes = max_id.map_or(0, |m| m + 1);
    Ok((edges, num_nodes))
}

fn bad_line(path: &Path, line_no: usize) -> Error {
    Error::InvalidInput(format!(
        "{}:{}: expected two whitespace-separated node ids",
        path.display(),
        line_no + 1
    ))
}

/// Headerless CSV of decimal floats, one row per node.
pub fn read_features_csv(path: &Path) -> Result<FeatureMatrix> {
    let file = std::fs::File::open(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
        let row = row.map_err(|_| {
            Error::InvalidInput(format!("{}:{}: malformed float", path.display(), line_no + 1))
        })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::InvalidInput(format!(
                    "{}:{}: expected {} columns, found {}",
                    path.display(),
                    line_no + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: empty feature file",
            path.display()
        )));
    }
    Ok(FeatureMatrix::from_rows(&rows))
}

pub fn write_features_csv(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    for i in 0..m.rows {
        let row: Vec<String> = m.row(i).iter().map(f64::to_string).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// One integer label per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let file = std::fs::File::open(path)?;
    let mut labels = Vec::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        labels.push(trimmed.parse::<usize>().map_err(|_| {
            Error::InvalidInput(format!(
                "{}:{}: malformed label",
                path.display(),
                line_no + 1
            ))
        })?);
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    for l in labels {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

/// CSV with header `epoch,loss`.
pub fn write_loss_history_csv(path: &Path, history: &[f64]) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "epoch,loss")?;
    for (epoch, loss) in history.iter().enumerate() {
        writeln!(out, "{epoch},{loss}")?;
    }
    Ok(())
}

/// Trained-model snapshot: config, weights (nested arrays), PReLU slopes,
/// and optionally the optimizer state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam_state: Option<AdamState>,
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let json = serde_json::to_string_pretty(checkpoint)?;
    std::fs::write(path, json.as_bytes())?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// CSV with header `check,instance,status,detail`.
pub fn write_verify_csv(path: &Path, rows: &[crate::eval::CheckRow]) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "check,instance,status,detail")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.check,
            row.instance,
            row.status,
            row.detail.replace(',', ";")
        )?;
    }
    Ok(())
}

/// CSV with header `beta,decoder_mode,final_loss,probe_accuracy`.
pub fn write_sweep_csv(path: &Path, rows: &[crate::eval::SweepRow]) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "beta,decoder_mode,final_loss,probe_accuracy")?;
    for row in rows {
        let mode = match row.decoder_mode {
            crate::model::DecoderMode::Wiener => "wiener",
            crate::model::DecoderMode::Inverse => "inverse",
        };
        writeln!(
            out,
            "{},{},{},{}",
            row.beta, mode, row.final_loss, row.probe_accuracy
        )?;
    }
    Ok(())
}

/// Seeded standard-normal features for the built-in dataset sources.
pub fn gaussian_features(num_nodes: usize, dim: usize, seed: u64) -> FeatureMatrix {
    let mut rng = SeededRng::derive(seed, 0xfea7);
    gaussian_matrix(&mut rng, num_nodes, dim)
}

/// Identity (one-hot) features.
pub fn identity_features(num_nodes: usize) -> FeatureMatrix {
    DenseMatrix::identity(num_nodes)
}

/// Default synthetic feature dimension for karate/SBM sources.
pub const DEFAULT_FEATURE_DIM: usize = 8;

/// Where a run's graph and labels come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSpec {
    Karate,
    Sbm {
        block_sizes: Vec<usize>,
        p_in: f64,
        p_out: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Files {
        edges: PathBuf,
        #[serde(default)]
        features: Option<PathBuf>,
        #[serde(default)]
        labels: Option<PathBuf>,
        #[serde(default)]
        num_nodes: Option<usize>,
    },
}

/// Feature generation for sources without a feature file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FeatureSpec {
    Identity,
    Gaussian { dim: usize },
}

/// Assembled dataset: graph, features, labels where the source has them.
pub struct Dataset {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: Option<Vec<usize>>,
}

/// Materializes a dataset spec. `seed` drives SBM generation (unless the
/// spec pins its own) and synthetic feature draws.
pub fn load_dataset(
    dataset: &DatasetSpec,
    features: Option<&FeatureSpec>,
    seed: u64,
) -> Result<Dataset> {
    let (graph, labels, file_features) = match dataset {
        DatasetSpec::Karate => {
            let (g, labels) = crate::graph::karate_graph();
            (g, Some(labels), None)
        }
        DatasetSpec::Sbm {
            block_sizes,
            p_in,
            p_out,
            seed: sbm_seed,
        } => {
            let (g, labels) =
                crate::graph::generate_sbm(block_sizes, *p_in, *p_out, sbm_seed.unwrap_or(seed))?;
            (g, Some(labels), None)
        }
        DatasetSpec::Files {
            edges,
            features,
            labels,
            num_nodes,
        } => {
            let (edge_list, implied) = read_edge_list(edges)?;
            let n = num_nodes.unwrap_or(implied);
            let g = build_graph(&edge_list, n)?;
            let feats = features.as_deref().map(read_features_csv).transpose()?;
            let labs = labels.as_deref().map(read_labels).transpose()?;
            if let Some(l) = &labs {
                if l.len() != g.num_nodes {
                    return Err(Error::InvalidInput(format!(
                        "{} labels for {} nodes",
                        l.len(),
                        g.num_nodes
                    )));
                }
            }
            (g, labs, feats)
        }
    };

    let features = match (file_features, features) {
        (Some(f), None) => f,
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput(
                "both a feature file and a feature spec were given".into(),
            ))
        }
        (None, Some(FeatureSpec::Identity)) => identity_features(graph.num_nodes),
        (None, Some(FeatureSpec::Gaussian { dim })) => {
            gaussian_features(graph.num_nodes, *dim, seed)
        }
        (None, None) => gaussian_features(graph.num_nodes, DEFAULT_FEATURE_DIM, seed),
    };
    if features.rows != graph.num_nodes {
        return Err(Error::InvalidInput(format!(
            "{} feature rows for {} nodes",
            features.rows, graph.num_nodes
        )));
    }

    Ok(Dataset {
        graph,
        features,
        labels,
    })
}
