//! Stratified evaluation: fold plans, classification metrics, the staged
//! pipeline driver and hyperparameter sweeps.
//!
//! The pipeline is split into [`Pipeline::prepare`], [`Pipeline::run_fold`]
//! and [`assemble`] so callers can run folds on separate threads; the
//! sequential [`run_pipeline`] is just the composition of the three.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::distill::{distill, DistillReport};
use crate::error::{invalid, Error, Result};
use crate::gcn::{train, GcnModel, GraphSample, TrainHistory};
use crate::graph::Cohort;
use crate::partition::{partition_by_spectral_clustering, Partition};
use crate::pathofilter::{build_pathograph_cohort, patho_scores, PathoScoreReport, SelectionScope};
use crate::{rng, Clock};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Fold assignment plus the train/validation/test roles within each fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: usize,
    pub seed: u64,
    pub fold_of: Vec<usize>,
    pub splits: Vec<FoldSplit>,
}

impl FoldPlan {
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }
}

fn class_members(labels: &[usize]) -> Vec<Vec<usize>> {
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); classes];
    labels.iter().enumerate().for_each(|(i, &l)| members[l].push(i));
    members
}

/// Per-class round-robin after a seeded shuffle. Fold `f` is the test set of
/// split `f`; a stratified eighth of the remaining subjects is validation
/// and the rest is training (≈ 70/10/20).
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<FoldPlan> {
    if folds < 2 {
        return Err(invalid!("need at least 2 folds, got {folds}"));
    }
    let members = class_members(labels);
    if let Some((c, m)) = members.iter().enumerate().find(|(_, m)| !m.is_empty() && m.len() < folds) {
        return Err(invalid!("class {c} has {} members, fewer than {folds} folds", m.len()));
    }
    let mut fold_of = vec![0usize; labels.len()];
    let mut offset = 0;
    for (c, m) in members.iter().enumerate() {
        let mut order = m.clone();
        order.shuffle(&mut rng::stream(seed, "folds", c as u64));
        for (p, &i) in order.iter().enumerate() {
            fold_of[i] = (offset + p) % folds;
        }
        offset = (offset + order.len()) % folds;
    }

    let splits = (0..folds)
        .map(|f| {
            let mut split = FoldSplit { train: Vec::new(), validation: Vec::new(), test: Vec::new() };
            for (c, m) in members.iter().enumerate() {
                let mut rest: Vec<usize> = m.iter().copied().filter(|&i| fold_of[i] != f).collect();
                split.test.extend(m.iter().copied().filter(|&i| fold_of[i] == f));
                rest.shuffle(&mut rng::stream(seed, "validation", (f * members.len() + c) as u64));
                let n_val = (rest.len() + 4) / 8;
                split.validation.extend_from_slice(&rest[..n_val]);
                split.train.extend_from_slice(&rest[n_val..]);
            }
            split.train.sort_unstable();
            split.validation.sort_unstable();
            split.test.sort_unstable();
            split
        })
        .collect();
    Ok(FoldPlan { folds, seed, fold_of, splits })
}

pub fn accuracy(truth: &[usize], predicted: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    truth.iter().zip(predicted).filter(|(t, p)| t == p).count() as f64 / truth.len() as f64
}

/// Unweighted mean of per-class F1 over `classes` classes; a class with no
/// true and no predicted members scores 0.
pub fn macro_f1(truth: &[usize], predicted: &[usize], classes: usize) -> f64 {
    if classes == 0 {
        return 0.0;
    }
    let total: f64 = (0..classes)
        .map(|c| {
            let tp = truth.iter().zip(predicted).filter(|(&t, &p)| t == c && p == c).count() as f64;
            let fp = truth.iter().zip(predicted).filter(|(&t, &p)| t != c && p == c).count() as f64;
            let fn_ = truth.iter().zip(predicted).filter(|(&t, &p)| t == c && p != c).count() as f64;
            if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (2.0 * tp + fp + fn_)
            }
        })
        .sum();
    total / classes as f64
}

/// Mann–Whitney AUC with midranks; `None` when either side is empty.
pub fn auc_binary(positive: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += order[i..=j].iter().filter(|&&k| positive[k]).count() as f64 * mid;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    pub auc: f64,
    pub f1: f64,
    /// Classes left out of the one-vs-rest AUC mean.
    pub auc_skipped: Vec<usize>,
}

/// ACC, macro-F1 and one-vs-rest AUC from per-class probability rows.
pub fn compute_metrics(truth: &[usize], predicted: &[usize], scores: &[Vec<f64>], classes: usize) -> Result<Metrics> {
    if truth.len() != predicted.len() || truth.len() != scores.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels, {} predictions, {} score rows",
            truth.len(),
            predicted.len(),
            scores.len()
        )));
    }
    for (i, row) in scores.iter().enumerate() {
        if row.len() != classes {
            return Err(Error::ShapeMismatch(format!("score row {i} has {} entries for {classes} classes", row.len())));
        }
        if (row.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(invalid!("score row {i} does not sum to 1"));
        }
    }
    if truth.iter().chain(predicted).any(|&l| l >= classes) {
        return Err(invalid!("label out of range for {classes} classes"));
    }
    let mut aucs = Vec::new();
    let mut skipped = Vec::new();
    for c in 0..classes {
        let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let s: Vec<f64> = scores.iter().map(|r| r[c]).collect();
        match auc_binary(&positive, &s) {
            Some(a) => aucs.push(a),
            None => skipped.push(c),
        }
    }
    if aucs.is_empty() {
        return Err(Error::AucUndefined);
    }
    Ok(Metrics {
        acc: accuracy(truth, predicted),
        auc: aucs.iter().sum::<f64>() / aucs.len() as f64,
        f1: macro_f1(truth, predicted, classes),
        auc_skipped: skipped,
    })
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub metrics: Metrics,
    /// Nodes fed to the GCN.
    pub nodes: usize,
    pub feature_width: usize,
    pub retained: Vec<String>,
    pub parameter_count: usize,
    pub epoch_seconds: f64,
    pub peak_bytes: usize,
    pub best_epoch: usize,
    pub warnings: Vec<String>,
}

/// Everything one fold produces.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub result: FoldResult,
    pub patho: Option<PathoScoreReport>,
    pub distill: Option<DistillReport>,
    pub model: GcnModel,
    pub history: TrainHistory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub variant: String,
    pub folds: Vec<FoldResult>,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub parameter_count: f64,
    pub epoch_seconds: f64,
    pub peak_bytes: usize,
}

/// Fold-independent state of one pipeline run.
#[derive(Debug, Clone)]
pub struct Pipeline<'a> {
    pub cohort: &'a Cohort,
    pub partition: Option<&'a Partition>,
    pub config: RunConfig,
    pub plan: FoldPlan,
    /// Scores and partition fixed once for the whole cohort, when the
    /// filter runs at full-cohort scope.
    pub shared_scores: Option<(Partition, PathoScoreReport)>,
}

impl<'a> Pipeline<'a> {
    pub fn prepare(cohort: &'a Cohort, partition: Option<&'a Partition>, config: &RunConfig) -> Result<Self> {
        config.validate()?;
        if cohort.class_count() < 2 {
            return Err(invalid!("classification needs at least two classes"));
        }
        let plan = stratified_folds(&cohort.labels(), config.folds, config.seed)?;
        let shared_scores = if config.filter && config.selection_scope == SelectionScope::FullCohort {
            Some(score_subgraphs(cohort, partition, config, 0)?)
        } else {
            None
        };
        Ok(Self { cohort, partition, config: config.clone(), plan, shared_scores })
    }

    pub fn fold_count(&self) -> usize {
        self.plan.folds
    }

    pub fn run_fold(&self, fold: usize, clock: &dyn Clock) -> Result<FoldOutcome> {
        let cfg = &self.config;
        let split = self.plan.splits.get(fold).ok_or_else(|| invalid!("fold {fold} out of range"))?;
        let mut warnings = Vec::new();

        let (patho, working) = if cfg.filter {
            let (partition, report) = match &self.shared_scores {
                Some(s) => s.clone(),
                None => score_subgraphs(&self.cohort.subset(&split.train), self.partition, cfg, fold)?,
            };
            match build_pathograph_cohort(self.cohort, &partition, &report) {
                Ok(pg) => (Some(report), pg.cohort),
                Err(Error::EmptyPathoGraph) => {
                    warnings.push(String::from("no subgraph reached alpha; falling back to the full graph"));
                    (Some(report), self.cohort.clone())
                }
                Err(e) => return Err(e),
            }
        } else {
            (None, self.cohort.clone())
        };

        let raw: Vec<_> = working.graphs.iter().map(|g| g.node_features().clone()).collect();
        let (features, distill_report) = if cfg.distill {
            let ids: Vec<String> = working.graphs.iter().map(|g| g.subject_id.clone()).collect();
            let (f, r) = distill(
                &raw,
                &working.groups(),
                working.group_count,
                &ids,
                &split.train,
                &cfg.distill_config(cfg.stage_seed("masks", fold)),
            )?;
            (f, Some(r))
        } else {
            (raw, None)
        };

        let samples = working
            .graphs
            .iter()
            .zip(features)
            .map(|(g, x)| GraphSample::new(g.adjacency(), x))
            .collect::<Result<Vec<_>>>()?;
        let retained = patho.as_ref().map(|r| r.retained_names()).unwrap_or_default();
        let (mut result, model, history) =
            train_and_evaluate(&samples, &working.labels(), working.class_count(), split, cfg, fold, clock)?;
        result.retained = retained;
        result.warnings = warnings;
        Ok(FoldOutcome { result, patho, distill: distill_report, model, history })
    }
}

fn score_subgraphs(
    cohort: &Cohort,
    partition: Option<&Partition>,
    cfg: &RunConfig,
    fold: usize,
) -> Result<(Partition, PathoScoreReport)> {
    let partition = match partition {
        Some(p) => p.clone(),
        None => partition_by_spectral_clustering(cohort, cfg.communities, cfg.stage_seed("kmeans", fold))?,
    };
    let report = patho_scores(cohort, &partition, &cfg.filter_config(cfg.stage_seed("svm", fold)))?;
    Ok((partition, report))
}

fn train_and_evaluate(
    samples: &[GraphSample],
    labels: &[usize],
    classes: usize,
    split: &FoldSplit,
    cfg: &RunConfig,
    fold: usize,
    clock: &dyn Clock,
) -> Result<(FoldResult, GcnModel, TrainHistory)> {
    let pick = |idx: &[usize]| -> (Vec<GraphSample>, Vec<usize>) {
        (idx.iter().map(|&i| samples[i].clone()).collect(), idx.iter().map(|&i| labels[i]).collect())
    };
    let (tr_x, tr_y) = pick(&split.train);
    let (va_x, va_y) = pick(&split.validation);
    let (te_x, te_y) = pick(&split.test);
    let gcn_cfg = cfg.gcn_config(cfg.stage_seed("init", fold));
    let (model, history) = train(&tr_x, &tr_y, classes, &gcn_cfg, Some((&va_x, &va_y)), clock)?;

    let scores = te_x.iter().map(|s| model.predict_proba(s)).collect::<Result<Vec<_>>>()?;
    let predicted: Vec<usize> = scores.iter().map(|p| crate::gcn::argmax(p)).collect();
    let metrics = compute_metrics(&te_y, &predicted, &scores, classes)?;
    let result = FoldResult {
        fold,
        metrics,
        nodes: samples[0].node_count(),
        feature_width: samples[0].feature_width(),
        retained: Vec::new(),
        parameter_count: model.parameter_count(),
        epoch_seconds: history.mean_epoch_seconds(),
        peak_bytes: history.peak_bytes,
        best_epoch: history.best_epoch,
        warnings: Vec::new(),
    };
    Ok((result, model, history))
}

/// Aggregates fold results (in fold order) into a report.
pub fn assemble(variant: &str, mut folds: Vec<FoldResult>) -> Result<MetricsReport> {
    if folds.is_empty() {
        return Err(invalid!("no fold results to assemble"));
    }
    folds.sort_by_key(|f| f.fold);
    let col = |get: fn(&FoldResult) -> f64| mean_std(&folds.iter().map(get).collect::<Vec<_>>());
    let (acc_mean, acc_std) = col(|f| f.metrics.acc);
    let (auc_mean, auc_std) = col(|f| f.metrics.auc);
    let (f1_mean, f1_std) = col(|f| f.metrics.f1);
    let (parameter_count, _) = col(|f| f.parameter_count as f64);
    let (epoch_seconds, _) = col(|f| f.epoch_seconds);
    let peak_bytes = folds.iter().map(|f| f.peak_bytes).max().unwrap_or(0);
    Ok(MetricsReport {
        variant: variant.to_string(),
        folds,
        acc_mean,
        acc_std,
        auc_mean,
        auc_std,
        f1_mean,
        f1_std,
        parameter_count,
        epoch_seconds,
        peak_bytes,
    })
}

pub fn run_pipeline(cohort: &Cohort, partition: Option<&Partition>, config: &RunConfig, clock: &dyn Clock) -> Result<MetricsReport> {
    let pipeline = Pipeline::prepare(cohort, partition, config)?;
    let folds = (0..pipeline.fold_count())
        .map(|f| pipeline.run_fold(f, clock).map(|o| o.result))
        .collect::<Result<Vec<_>>>()?;
    assemble(&config.variant(), folds)
}

/// Full-graph GCN on raw adjacency rows, with the pipeline's folds and seeds.
pub fn plain_gcn_baseline(cohort: &Cohort, config: &RunConfig, clock: &dyn Clock) -> Result<MetricsReport> {
    config.validate()?;
    let plan = stratified_folds(&cohort.labels(), config.folds, config.seed)?;
    let samples = cohort
        .graphs
        .iter()
        .map(|g| GraphSample::new(g.adjacency(), g.node_features().clone()))
        .collect::<Result<Vec<_>>>()?;
    let labels = cohort.labels();
    let folds = plan
        .splits
        .iter()
        .enumerate()
        .map(|(f, split)| {
            train_and_evaluate(&samples, &labels, cohort.class_count(), split, config, f, clock).map(|r| r.0)
        })
        .collect::<Result<Vec<_>>>()?;
    assemble("plain", folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    K,
    Rho,
    Communities,
    LayersNeurons,
}

impl SweepParameter {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "k" => Some(Self::K),
            "rho" => Some(Self::Rho),
            "communities" => Some(Self::Communities),
            "layers_neurons" => Some(Self::LayersNeurons),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::K => "k",
            Self::Rho => "rho",
            Self::Communities => "communities",
            Self::LayersNeurons => "layers_neurons",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    LayersNeurons { layers: usize, neurons: usize },
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(v) => write!(f, "{v}"),
            SweepValue::LayersNeurons { layers, neurons } => write!(f, "{layers}x{neurons}"),
        }
    }
}

fn as_count(v: f64, what: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
        Ok(v as usize)
    } else {
        Err(invalid!("{what} must be a whole number, got {v}"))
    }
}

/// `base` with `parameter` set to `value`.
pub fn apply_sweep_value(base: &RunConfig, parameter: SweepParameter, value: SweepValue) -> Result<RunConfig> {
    let mut cfg = base.clone();
    match (parameter, value) {
        (SweepParameter::K, SweepValue::Number(v)) => cfg.k = as_count(v, "k")?,
        (SweepParameter::Rho, SweepValue::Number(v)) => cfg.rho = v,
        (SweepParameter::Communities, SweepValue::Number(v)) => cfg.communities = as_count(v, "communities")?,
        (SweepParameter::LayersNeurons, SweepValue::LayersNeurons { layers, neurons }) => {
            cfg.gcn.layers = layers;
            cfg.gcn.hidden = neurons;
        }
        (p, v) => return Err(invalid!("value {v} does not fit parameter {}", p.name())),
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter_value: String,
    pub report: MetricsReport,
}

/// The sweep's configurations, validated up front so a bad value fails
/// before any training.
pub fn sweep_configs(
    partition: Option<&Partition>,
    parameter: SweepParameter,
    values: &[SweepValue],
    base: &RunConfig,
) -> Result<Vec<RunConfig>> {
    if values.is_empty() {
        return Err(invalid!("sweep needs at least one value"));
    }
    if parameter == SweepParameter::Communities && partition.is_some() {
        return Err(invalid!("a communities sweep needs a cohort without an atlas"));
    }
    values.iter().map(|&v| apply_sweep_value(base, parameter, v)).collect()
}

/// One pipeline run per value, all sharing the base seed and thus the folds.
pub fn sweep(
    cohort: &Cohort,
    partition: Option<&Partition>,
    parameter: SweepParameter,
    values: &[SweepValue],
    base: &RunConfig,
    clock: &dyn Clock,
) -> Result<Vec<SweepRow>> {
    let configs = sweep_configs(partition, parameter, values, base)?;
    configs
        .iter()
        .zip(values)
        .map(|(cfg, v)| {
            Ok(SweepRow { parameter_value: v.to_string(), report: run_pipeline(cohort, partition, cfg, clock)? })
        })
        .collect()
}
