//! Versioned JSON dataset files.
//!
//! Schema (version 1):
//!
//! ```json
//! {
//!   "version": 1,
//!   "graphs": [
//!     {
//!       "id": "c0_g0",
//!       "class": "0",
//!       "n_inliers": 10,
//!       "points": [[0.1, 0.2], [0.3, 0.4]],
//!       "edges": [[0, 1]],
//!       "node_labels": [3, -1, 0]
//!     }
//!   ]
//! }
//! ```
//!
//! Only `id` and `points` are required. Missing `edges` trigger Delaunay
//! construction on load. Ground-truth correspondences come from
//! `node_labels` (keypoint id per node, -1 for outliers); when absent but
//! `n_inliers` is given, the first `n_inliers` nodes are taken as keypoints
//! 0..n_inliers in order, which matches keypoint-annotated data where
//! outliers are appended after the annotated points.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assignment::MatchingSet;
use crate::delaunay::delaunay;
use crate::error::{Error, Result};
use crate::graph::PointGraph;
use crate::indicator::ClusterDivision;
use crate::synth::{matchings_from_labels, SynthOutput};

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct DatasetFile {
    version: u32,
    graphs: Vec<GraphRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphRecord {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_inliers: Option<usize>,
    #[serde(default)]
    points: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    node_labels: Option<Vec<i64>>,
}

/// A loaded dataset with whatever ground truth the file provides.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graphs: Vec<PointGraph>,
    /// Keypoint label per node when known; `None` per node marks outliers.
    pub node_labels: Option<Vec<Vec<Option<usize>>>>,
    pub gt_matchings: Option<MatchingSet>,
    pub gt_division: Option<ClusterDivision>,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let text = fs::read_to_string(&path)?;
    let file: DatasetFile =
        serde_json::from_str(&text).map_err(|e| Error::parse(e.to_string()))?;
    if file.version != DATASET_VERSION {
        return Err(Error::parse(format!(
            "unsupported dataset version {} (expected {DATASET_VERSION})",
            file.version
        )));
    }
    if file.graphs.is_empty() {
        return Err(Error::parse("dataset contains no graphs"));
    }

    let mut graphs = Vec::with_capacity(file.graphs.len());
    let mut labels: Vec<Option<Vec<Option<usize>>>> = Vec::with_capacity(file.graphs.len());
    for rec in &file.graphs {
        let points = rec
            .points
            .clone()
            .ok_or_else(|| Error::parse(format!("graph '{}': missing points", rec.id)))?;
        let edges = match &rec.edges {
            Some(e) => e.clone(),
            None => delaunay(&points)
                .map_err(|e| Error::parse(format!("graph '{}': {e}", rec.id)))?,
        };
        let mut g = PointGraph::new(rec.id.clone(), points, edges)
            .map_err(|e| Error::parse(format!("{e}")))?;
        if let Some(class) = &rec.class {
            g = g.with_class(class.clone());
        }
        if let Some(n) = rec.n_inliers {
            g = g.with_inlier_count(n).map_err(|e| Error::parse(format!("{e}")))?;
        }
        let node_count = g.n_nodes();
        let lab = match &rec.node_labels {
            Some(raw) => {
                if raw.len() != node_count {
                    return Err(Error::parse(format!(
                        "graph '{}': node_labels length {} != node count {node_count}",
                        rec.id,
                        raw.len()
                    )));
                }
                Some(
                    raw.iter()
                        .map(|&v| {
                            if v < -1 {
                                Err(Error::parse(format!(
                                    "graph '{}': node label {v} below -1",
                                    rec.id
                                )))
                            } else if v == -1 {
                                Ok(None)
                            } else {
                                Ok(Some(v as usize))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            None => rec.n_inliers.map(|n| {
                (0..node_count)
                    .map(|i| if i < n { Some(i) } else { None })
                    .collect()
            }),
        };
        labels.push(lab);
        graphs.push(g);
    }

    let gt_division = if graphs.iter().all(|g| g.class_label.is_some()) {
        let mut seen: Vec<&str> = Vec::new();
        let ids: Vec<usize> = graphs
            .iter()
            .map(|g| {
                let c = g.class_label.as_deref().unwrap();
                match seen.iter().position(|&s| s == c) {
                    Some(p) => p,
                    None => {
                        seen.push(c);
                        seen.len() - 1
                    }
                }
            })
            .collect();
        Some(ClusterDivision::from_labels(ids)?)
    } else {
        None
    };

    let all_labels: Option<Vec<Vec<Option<usize>>>> = labels.into_iter().collect();
    let gt_matchings = match (&all_labels, &gt_division) {
        (Some(lab), Some(_)) => Some(matchings_from_labels(&graphs, lab)?),
        _ => None,
    };
    Ok(Dataset { graphs, node_labels: all_labels, gt_matchings, gt_division })
}

/// Saves graphs (optionally with per-node ground-truth labels) as pretty
/// JSON. Coordinates round-trip bit-exactly.
pub fn save_dataset(
    path: impl AsRef<Path>,
    graphs: &[PointGraph],
    node_labels: Option<&[Vec<Option<usize>>]>,
) -> Result<()> {
    if let Some(l) = node_labels {
        if l.len() != graphs.len() {
            return Err(Error::contract("save_dataset: node_labels length mismatch"));
        }
    }
    let records: Vec<GraphRecord> = graphs
        .iter()
        .enumerate()
        .map(|(idx, g)| GraphRecord {
            id: g.id.clone(),
            class: g.class_label.clone(),
            n_inliers: g.inlier_count,
            points: Some(g.points.clone()),
            edges: Some(g.edges.clone()),
            node_labels: node_labels.map(|l| {
                l[idx]
                    .iter()
                    .map(|v| v.map_or(-1, |k| k as i64))
                    .collect()
            }),
        })
        .collect();
    let file = DatasetFile { version: DATASET_VERSION, graphs: records };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Saves a synthetic dataset with its planted ground truth.
pub fn save_synth(path: impl AsRef<Path>, out: &SynthOutput) -> Result<()> {
    save_dataset(path, &out.graphs, Some(&out.node_labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_generate, SynthConfig};

    #[test]
    fn round_trip_is_exact() {
        let cfg = SynthConfig {
            n_classes: 2,
            graphs_per_class: vec![2],
            n_inliers: 5,
            n_outliers: 1,
            deform_sigma: 0.013,
            seed: 5,
        };
        let out = synth_generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.json");
        save_synth(&path, &out).unwrap();

        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.graphs, out.graphs);
        assert_eq!(loaded.gt_division.as_ref(), Some(&out.gt_division));
        assert_eq!(loaded.gt_matchings.as_ref(), Some(&out.gt_matchings));

        // Bytes are stable across saves.
        let path2 = dir.path().join("data2.json");
        save_synth(&path2, &out).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn missing_points_names_the_graph() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(
            &path,
            r#"{"version":1,"graphs":[{"id":"g7","edges":[[0,1]]}]}"#,
        )
        .unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("g7"), "{err}");
        assert!(err.to_string().contains("points"), "{err}");
    }

    #[test]
    fn version_and_syntax_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v9.json");
        fs::write(&path, r#"{"version":9,"graphs":[]}"#).unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");

        let path = dir.path().join("syntax.json");
        fs::write(&path, "{not json").unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn gtless_file_loads_without_ground_truth() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plain.json");
        fs::write(
            &path,
            r#"{"version":1,"graphs":[
                {"id":"a","points":[[0.0,0.0],[1.0,0.0],[0.0,1.0]]},
                {"id":"b","points":[[0.1,0.0],[0.9,0.1],[0.1,0.9]]}
            ]}"#,
        )
        .unwrap();
        let d = load_dataset(&path).unwrap();
        assert!(d.gt_division.is_none());
        assert!(d.gt_matchings.is_none());
        // Absent edges triggered Delaunay construction.
        assert_eq!(d.graphs[0].edges, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn inlier_prefix_convention_builds_matchings() {
        // Annotated-keypoint convention: first n_inliers nodes correspond in
        // order; trailing nodes are outliers.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prefix.json");
        fs::write(
            &path,
            r#"{"version":1,"graphs":[
                {"id":"a","class":"car","n_inliers":2,
                 "points":[[0.0,0.0],[1.0,0.0],[0.4,0.9]]},
                {"id":"b","class":"car","n_inliers":2,
                 "points":[[0.0,0.1],[1.0,0.1],[0.6,0.8]]}
            ]}"#,
        )
        .unwrap();
        let d = load_dataset(&path).unwrap();
        let x = d.gt_matchings.unwrap();
        assert_eq!(x.get(0, 1).pairs().collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
    }
}
