//! Pathological pattern filter.
//!
//! An RBF-SVM is cross-validated on whole-graph vectors to get the score α,
//! then on subgraph-only samples to get one patho-score β per subgraph.
//! Subgraphs with β < α are dropped and the remaining nodes form the
//! PathoGraph.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::eval::stratified_folds;
use crate::graph::{BrainGraph, Cohort};
use crate::partition::Partition;
use crate::svm::{train_svm, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionScope {
    /// Scores computed inside each outer fold's training split.
    #[default]
    TrainOnly,
    /// Scores computed once on every subject.
    FullCohort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub svm: SvmParams,
    pub folds: usize,
    pub seed: u64,
    pub scope: SelectionScope,
    /// Score subgraphs on compact subgraph-only vectors instead of
    /// zero-masked full-length vectors.
    pub retrain_per_subgraph: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            svm: SvmParams::default(),
            folds: 5,
            seed: 0,
            scope: SelectionScope::TrainOnly,
            retrain_per_subgraph: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathoScoreReport {
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub subgraph_names: Vec<String>,
    /// `{ i : betas[i] >= alpha }`, ascending.
    pub retained: Vec<usize>,
    pub scope: SelectionScope,
    pub seed: u64,
}

impl PathoScoreReport {
    pub fn new(alpha: f64, betas: Vec<f64>, subgraph_names: Vec<String>, scope: SelectionScope, seed: u64) -> Self {
        let retained = retained_subgraphs(alpha, &betas);
        Self { alpha, betas, subgraph_names, retained, scope, seed }
    }

    pub fn retained_names(&self) -> Vec<String> {
        self.retained.iter().map(|&i| self.subgraph_names[i].clone()).collect()
    }
}

pub fn retained_subgraphs(alpha: f64, betas: &[f64]) -> Vec<usize> {
    betas.iter().enumerate().filter(|(_, &b)| b >= alpha).map(|(i, _)| i).collect()
}

/// Strict upper triangle of the adjacency, row by row. With `keep`, entries
/// whose endpoints are not both kept are zeroed; the length never changes.
pub fn graph_to_svm_vector(g: &BrainGraph, keep: Option<&[bool]>) -> Vec<f64> {
    let n = g.node_count();
    let a = g.adjacency();
    let mut v = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let on = keep.is_none_or(|k| k[i] && k[j]);
            v.push(if on { a[(i, j)] } else { 0.0 });
        }
    }
    v
}

/// Strict upper triangle restricted to `nodes` (compact form).
pub fn subgraph_vector(g: &BrainGraph, nodes: &[usize]) -> Vec<f64> {
    let a = g.adjacency();
    let mut v = Vec::with_capacity(nodes.len() * nodes.len().saturating_sub(1) / 2);
    for (p, &i) in nodes.iter().enumerate() {
        for &j in &nodes[p + 1..] {
            v.push(a[(i, j)]);
        }
    }
    v
}

pub fn node_mask(nodes: &[usize], n: usize) -> Vec<bool> {
    let mut keep = vec![false; n];
    nodes.iter().for_each(|&i| keep[i] = true);
    keep
}

/// Pooled stratified k-fold accuracy of the SVM on the given vectors.
pub fn cv_accuracy(vectors: &[Vec<f64>], labels: &[usize], fold_of: &[usize], folds: usize, svm: &SvmParams) -> Result<f64> {
    let mut correct = 0usize;
    for f in 0..folds {
        let (mut tr_x, mut tr_y, mut te_x, mut te_y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (i, &fi) in fold_of.iter().enumerate() {
            if fi == f {
                te_x.push(vectors[i].clone());
                te_y.push(labels[i]);
            } else {
                tr_x.push(vectors[i].clone());
                tr_y.push(labels[i]);
            }
        }
        let model = train_svm(&tr_x, &tr_y, svm)?;
        correct += te_x.iter().zip(&te_y).filter(|(x, &y)| model.predict(x) == y).count();
    }
    Ok(correct as f64 / vectors.len() as f64)
}

/// Computes α and every β on `cohort` with one shared fold assignment.
pub fn patho_scores(cohort: &Cohort, partition: &Partition, cfg: &FilterConfig) -> Result<PathoScoreReport> {
    let n = cohort.node_count();
    if partition.node_count() != n {
        return Err(Error::ShapeMismatch(alloc::format!(
            "partition covers {} nodes, cohort has {n}",
            partition.node_count()
        )));
    }
    let labels = cohort.labels();
    let mut counts = vec![0usize; cohort.class_count()];
    labels.iter().for_each(|&l| counts[l] += 1);
    let smallest = counts.iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(invalid!("patho-scoring needs at least two classes"));
    }
    if smallest < 2 {
        return Err(invalid!("patho-scoring needs at least two subjects per class"));
    }
    // small training splits get fewer inner folds rather than failing
    let folds = cfg.folds.min(smallest).max(2);
    let plan = stratified_folds(&labels, folds, cfg.seed)?;

    let full: Vec<Vec<f64>> = cohort.graphs.iter().map(|g| graph_to_svm_vector(g, None)).collect();
    let alpha = cv_accuracy(&full, &labels, &plan.fold_of, folds, &cfg.svm)?;

    let mut betas = Vec::with_capacity(partition.m());
    for s in 0..partition.m() {
        let nodes = partition.nodes_of(s);
        let vectors: Vec<Vec<f64>> = if cfg.retrain_per_subgraph {
            cohort.graphs.iter().map(|g| subgraph_vector(g, &nodes)).collect()
        } else {
            let keep = node_mask(&nodes, n);
            cohort.graphs.iter().map(|g| graph_to_svm_vector(g, Some(&keep))).collect()
        };
        betas.push(cv_accuracy(&vectors, &labels, &plan.fold_of, folds, &cfg.svm)?);
    }
    Ok(PathoScoreReport::new(alpha, betas, partition.subgraph_names.clone(), cfg.scope, cfg.seed))
}

/// Cohort of PathoGraphs: induced subgraphs on the retained nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathoGraphCohort {
    /// Original node index of each PathoGraph node, ascending.
    pub node_index_map: Vec<usize>,
    pub cohort: Cohort,
    pub report: PathoScoreReport,
}

impl PathoGraphCohort {
    pub fn node_count(&self) -> usize {
        self.node_index_map.len()
    }
}

pub fn build_pathograph_cohort(cohort: &Cohort, partition: &Partition, report: &PathoScoreReport) -> Result<PathoGraphCohort> {
    if report.retained.is_empty() {
        return Err(Error::EmptyPathoGraph);
    }
    if let Some(&bad) = report.retained.iter().find(|&&s| s >= partition.m()) {
        return Err(invalid!("retained subgraph {bad} does not exist"));
    }
    let nodes = partition.nodes_of_many(&report.retained);
    let graphs = cohort.graphs.iter().map(|g| g.induced(&nodes)).collect();
    Ok(PathoGraphCohort {
        node_index_map: nodes,
        cohort: Cohort::new(graphs, cohort.class_names.clone(), cohort.group_count)?,
        report: report.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use alloc::string::ToString;

    fn graph3() -> BrainGraph {
        let a = DenseMatrix::from_rows(&[[1.0, 0.1, 0.2], [0.1, 1.0, 0.3], [0.2, 0.3, 1.0]]).unwrap();
        BrainGraph::new("g".into(), 0, 0, a).unwrap()
    }

    #[test]
    fn vectorization() {
        let g = graph3();
        assert_eq!(graph_to_svm_vector(&g, None), vec![0.1, 0.2, 0.3]);
        let keep = node_mask(&[0, 1], 3);
        assert_eq!(graph_to_svm_vector(&g, Some(&keep)), vec![0.1, 0.0, 0.0]);
        let big = BrainGraph::new("b".into(), 0, 0, DenseMatrix::identity(90)).unwrap();
        assert_eq!(graph_to_svm_vector(&big, None).len(), 4005);
        assert_eq!(subgraph_vector(&g, &[1, 2]), vec![0.3]);
    }

    #[test]
    fn retained_is_exactly_beta_at_least_alpha() {
        assert_eq!(retained_subgraphs(0.7, &[0.7, 0.69, 0.9, 0.1]), vec![0, 2]);
    }

    #[test]
    fn pathograph_of_single_subject() {
        let mut a = DenseMatrix::identity(4);
        for (i, j, v) in [(0, 1, 0.1), (0, 2, 0.2), (0, 3, 0.3), (1, 2, 0.4), (1, 3, 0.5), (2, 3, 0.6)] {
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        let cohort = Cohort::new(
            vec![BrainGraph::new("s".into(), 0, 0, a).unwrap()],
            vec!["c".to_string()],
            1,
        )
        .unwrap();
        let partition = Partition::new(vec!["A".into(), "B".into()], vec![1, 0, 1, 0]).unwrap();
        let report = PathoScoreReport::new(0.5, vec![0.9, 0.1], partition.subgraph_names.clone(), SelectionScope::FullCohort, 0);
        let pg = build_pathograph_cohort(&cohort, &partition, &report).unwrap();
        assert_eq!(pg.node_index_map, vec![1, 3]);
        let sub = pg.cohort.graphs[0].adjacency();
        assert_eq!(sub.data(), &[1.0, 0.5, 0.5, 1.0]);

        let all = PathoScoreReport::new(0.0, vec![0.9, 0.1], partition.subgraph_names.clone(), SelectionScope::FullCohort, 0);
        let same = build_pathograph_cohort(&cohort, &partition, &all).unwrap();
        assert_eq!(same.cohort, cohort);

        let none = PathoScoreReport::new(1.0, vec![0.9, 0.1], partition.subgraph_names.clone(), SelectionScope::FullCohort, 0);
        assert_eq!(build_pathograph_cohort(&cohort, &partition, &none).unwrap_err(), Error::EmptyPathoGraph);
    }
}
