//! Cohort manifests, subject CSV files and `atlas.json`.
//!
//! Time-series CSV: a header row of ROI names, then one row per timepoint.
//! Adjacency CSV: N rows of N values, no header. Paths in a manifest are
//! relative to the manifest's directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use pathograph_core::graph::pearson_graph;
use pathograph_core::partition::{partition_from_atlas, AtlasFile};
use pathograph_core::{BrainGraph, Cohort, DenseMatrix, Partition, TimeSeries};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// Raw adjacency asymmetry above this is reported in the load report.
pub const ASYMMETRY_WARNING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Timeseries,
    Adjacency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub id: String,
    pub label: usize,
    pub group: usize,
    pub path: String,
    pub kind: DataKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortManifest {
    pub class_names: Vec<String>,
    #[serde(default)]
    pub atlas: Option<String>,
    pub subjects: Vec<SubjectEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoadReport {
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct LoadedCohort {
    pub cohort: Cohort,
    pub partition: Option<Partition>,
    pub report: LoadReport,
}

pub(crate) fn read_text(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> AppResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn parse_number(field: &str, path: &Path, row: usize) -> AppResult<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| AppError::Data(format!("{}: row {row}: `{field}` is not a number", path.display())))
}

fn csv_rows(path: &Path, has_header: bool) -> AppResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => AppError::io(path, io),
            other => AppError::Data(format!("{}: {other:?}", path.display())),
        })?;
    let header = if has_header {
        let h = reader.headers().map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
        h.iter().map(str::to_string).collect()
    } else {
        Vec::new()
    };
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
        rows.push(record.iter().map(|f| parse_number(f, path, i + 1)).collect::<AppResult<Vec<f64>>>()?);
    }
    Ok((header, rows))
}

pub fn read_timeseries_csv(path: &Path, subject_id: &str) -> AppResult<TimeSeries> {
    let (header, rows) = csv_rows(path, true)?;
    if rows.is_empty() {
        return Err(AppError::Data(format!("{}: no timepoints", path.display())));
    }
    if header.len() != rows[0].len() {
        return Err(AppError::Data(format!(
            "{}: header names {} ROIs but rows have {} values",
            path.display(),
            header.len(),
            rows[0].len()
        )));
    }
    let data = DenseMatrix::from_rows(&rows)?;
    Ok(TimeSeries::new(subject_id.to_string(), data)?)
}

pub fn read_adjacency_csv(path: &Path) -> AppResult<DenseMatrix> {
    let (_, rows) = csv_rows(path, false)?;
    let m = DenseMatrix::from_rows(&rows)?;
    if !m.is_square() {
        return Err(AppError::Data(format!("{}: adjacency is {}x{}", path.display(), m.rows(), m.cols())));
    }
    Ok(m)
}

/// Shortest round-trip decimal form, one row per line.
pub fn write_adjacency_csv(path: &Path, m: &DenseMatrix) -> AppResult<()> {
    let mut text = String::with_capacity(m.rows() * m.cols() * 20);
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn read_atlas(path: &Path) -> AppResult<AtlasFile> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Raw {
        subgraphs: serde_json::Map<String, serde_json::Value>,
    }
    let raw: Raw = serde_json::from_str(&read_text(path)?)
        .map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
    let subgraphs = raw
        .subgraphs
        .into_iter()
        .map(|(name, v)| {
            let nodes: Vec<usize> = serde_json::from_value(v)
                .map_err(|e| AppError::Data(format!("{}: subgraph `{name}`: {e}", path.display())))?;
            Ok((name, nodes))
        })
        .collect::<AppResult<Vec<_>>>()?;
    Ok(AtlasFile { subgraphs })
}

pub fn atlas_of(partition: &Partition) -> AtlasFile {
    AtlasFile {
        subgraphs: (0..partition.m()).map(|s| (partition.subgraph_names[s].clone(), partition.nodes_of(s))).collect(),
    }
}

pub fn write_atlas(path: &Path, atlas: &AtlasFile) -> AppResult<()> {
    let mut map = serde_json::Map::new();
    for (name, nodes) in &atlas.subgraphs {
        map.insert(name.clone(), serde_json::json!(nodes));
    }
    let text = serde_json::to_string_pretty(&serde_json::json!({ "subgraphs": map })).expect("plain json");
    write_text(path, &(text + "\n"))
}

pub fn read_manifest(path: &Path) -> AppResult<CohortManifest> {
    serde_json::from_str(&read_text(path)?).map_err(|e| AppError::Data(format!("{}: {e}", path.display())))
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_cohort(manifest_path: &Path) -> AppResult<LoadedCohort> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut seen = HashSet::new();
    if let Some(dup) = manifest.subjects.iter().find(|s| !seen.insert(s.id.as_str())) {
        return Err(AppError::Data(format!("duplicate subject id `{}`", dup.id)));
    }
    if manifest.subjects.is_empty() {
        return Err(AppError::Data("manifest lists no subjects".into()));
    }

    let mut report = LoadReport::default();
    let mut graphs: Vec<BrainGraph> = Vec::with_capacity(manifest.subjects.len());
    for s in &manifest.subjects {
        let path = resolve(base, &s.path);
        let graph = match s.kind {
            DataKind::Timeseries => pearson_graph(&read_timeseries_csv(&path, &s.id)?, s.label, s.group)?,
            DataKind::Adjacency => {
                let raw = read_adjacency_csv(&path)?;
                let (g, asym) = BrainGraph::from_raw_adjacency(s.id.clone(), s.label, s.group, &raw)?;
                if asym > ASYMMETRY_WARNING {
                    report.warnings.push(format!("subject `{}`: asymmetry {asym:.3e} symmetrized", s.id));
                }
                g
            }
        };
        let mut g = graph;
        g.subject_id = s.id.clone();
        graphs.push(g);
    }
    let group_count = manifest.subjects.iter().map(|s| s.group + 1).max().unwrap_or(1);
    let cohort = Cohort::new(graphs, manifest.class_names.clone(), group_count)?;
    let partition = match &manifest.atlas {
        Some(rel) => Some(partition_from_atlas(&read_atlas(&resolve(base, rel))?, cohort.node_count())?),
        None => None,
    };
    Ok(LoadedCohort { cohort, partition, report })
}

/// Writes `manifest.json`, one adjacency CSV per subject under `subjects/`
/// and, with a partition, `atlas.json`.
pub fn write_cohort(dir: &Path, cohort: &Cohort, partition: Option<&Partition>) -> AppResult<()> {
    let mut subjects = Vec::with_capacity(cohort.len());
    for g in &cohort.graphs {
        let rel = format!("subjects/{}.csv", g.subject_id);
        write_adjacency_csv(&dir.join(&rel), g.adjacency())?;
        subjects.push(SubjectEntry { id: g.subject_id.clone(), label: g.label, group: g.group, path: rel, kind: DataKind::Adjacency });
    }
    let atlas = match partition {
        Some(p) => {
            write_atlas(&dir.join("atlas.json"), &atlas_of(p))?;
            Some("atlas.json".to_string())
        }
        None => None,
    };
    let manifest = CohortManifest { class_names: cohort.class_names.clone(), atlas, subjects };
    let text = serde_json::to_string_pretty(&manifest).expect("plain json");
    write_text(&dir.join("manifest.json"), &(text + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atlas_preserves_key_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("atlas.json");
        write_text(&path, r#"{"subgraphs": {"Zeta": [0, 1], "Alpha": [2], "Mid": [3]}}"#).unwrap();
        let atlas = read_atlas(&path).unwrap();
        let names: Vec<&str> = atlas.subgraphs.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["Zeta", "Alpha", "Mid"]);
        write_atlas(&path, &atlas).unwrap();
        assert_eq!(read_atlas(&path).unwrap(), atlas);
    }

    #[test]
    fn adjacency_csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let m = DenseMatrix::from_rows(&[[1.0, 0.1 + 0.2], [0.1 + 0.2, 1.0]]).unwrap();
        write_adjacency_csv(&path, &m).unwrap();
        assert_eq!(read_adjacency_csv(&path).unwrap(), m);
    }

    #[test]
    fn bad_numbers_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_text(&path, "1,x\n0,1\n").unwrap();
        assert!(matches!(read_adjacency_csv(&path), Err(AppError::Data(_))));
        assert!(matches!(read_adjacency_csv(&dir.path().join("missing.csv")), Err(AppError::Io { .. })));
    }
}
