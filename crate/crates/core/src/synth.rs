//! Synthetic cohorts with a known plant.
//!
//! A modular factor model gives every subject a correlation-like baseline
//! (module factors plus one global factor, loadings jittered per subject).
//! Class `c` adds `δ·c/(C−1)` to every intra-subgraph edge of the planted
//! subgraphs, then symmetric Gaussian edge noise is added and the matrix is
//! clipped to [-1, 1] with a unit diagonal.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BrainGraph, Cohort};
use crate::linalg::DenseMatrix;
use crate::partition::Partition;
use crate::rng;

/// Clip rates above this make the spec infeasible.
pub const MAX_CLIP_RATE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub subjects_per_class: usize,
    pub classes: usize,
    /// Node count of each subgraph; nodes are assigned in contiguous blocks.
    pub subgraph_sizes: Vec<usize>,
    pub planted: Vec<usize>,
    /// Correlation shift δ on planted intra-subgraph edges.
    pub signal_strength: f64,
    pub noise_sigma: f64,
    /// Standard deviation of the per-subject jitter on factor loadings.
    pub subject_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            subjects_per_class: 30,
            classes: 2,
            subgraph_sizes: vec![6; 5],
            planted: vec![0, 1],
            signal_strength: 0.4,
            noise_sigma: 0.05,
            subject_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn node_count(&self) -> usize {
        self.subgraph_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.classes < 2 || self.subjects_per_class == 0 {
            return bad("need >= 2 classes and >= 1 subject per class".into());
        }
        if self.subgraph_sizes.is_empty() || self.subgraph_sizes.contains(&0) {
            return bad("subgraph sizes must be nonempty and positive".into());
        }
        if let Some(&p) = self.planted.iter().find(|&&p| p >= self.subgraph_sizes.len()) {
            return bad(format!("planted subgraph {p} does not exist"));
        }
        if !(0.0..1.0).contains(&self.signal_strength) {
            return bad(format!("signal strength must lie in [0, 1), got {}", self.signal_strength));
        }
        if !(self.noise_sigma >= 0.0) || !(self.subject_sigma >= 0.0) {
            return bad("noise scales must be nonnegative".into());
        }
        Ok(())
    }

    pub fn partition(&self) -> Partition {
        let names = (1..=self.subgraph_sizes.len()).map(|i| format!("SG {i}")).collect();
        let assignment = self.subgraph_sizes.iter().enumerate().flat_map(|(s, &n)| core::iter::repeat_n(s, n)).collect();
        Partition::new(names, assignment).expect("sizes are positive")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub planted: Vec<usize>,
    pub planted_names: Vec<String>,
    pub signal_strength: f64,
    pub seed: u64,
    /// `group_directions[g][s]`: shift applied to subgraph `s` for group `g`.
    pub group_directions: Vec<Vec<f64>>,
    /// Fraction of off-diagonal entries that needed clipping.
    pub clip_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCohort {
    pub cohort: Cohort,
    pub partition: Partition,
    pub truth: GroundTruth,
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn factor_correlation(module: &[usize], a: &[f64], g: &[f64]) -> DenseMatrix {
    const UNIQUENESS: f64 = 0.5;
    let n = module.len();
    let var: Vec<f64> = (0..n).map(|i| a[i] * a[i] + g[i] * g[i] + UNIQUENESS).collect();
    let mut r = DenseMatrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            let shared = if module[i] == module[j] { a[i] * a[j] } else { 0.0 };
            let v = (shared + g[i] * g[j]) / (var[i] * var[j]).sqrt();
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    r
}

pub fn generate(spec: &SynthSpec) -> Result<SynthCohort> {
    spec.validate()?;
    let partition = spec.partition();
    let n = spec.node_count();
    let module = &partition.assignment;

    let mut base_rng = rng::stream(spec.seed, "synth", 0);
    let loadings: Vec<f64> = (0..n).map(|_| base_rng.random_range(0.4..0.8)).collect();
    let global: Vec<f64> = (0..n).map(|_| base_rng.random_range(-0.3..0.3)).collect();

    let shift_of = |class: usize| spec.signal_strength * class as f64 / (spec.classes - 1) as f64;
    let group_directions = (0..spec.classes)
        .map(|c| (0..partition.m()).map(|s| if spec.planted.contains(&s) { shift_of(c) } else { 0.0 }).collect())
        .collect();

    let mut graphs = Vec::with_capacity(spec.classes * spec.subjects_per_class);
    let mut clipped = 0usize;
    for c in 0..spec.classes {
        for k in 0..spec.subjects_per_class {
            let index = graphs.len();
            let mut r = rng::stream(spec.seed, "subject", index as u64);
            let a: Vec<f64> = loadings.iter().map(|&l| l + spec.subject_sigma * normal(&mut r)).collect();
            let g: Vec<f64> = global.iter().map(|&l| l + spec.subject_sigma * normal(&mut r)).collect();
            let mut m = factor_correlation(module, &a, &g);
            let shift = shift_of(c);
            for i in 0..n {
                for j in i + 1..n {
                    let planted = module[i] == module[j] && spec.planted.contains(&module[i]);
                    let mut v = m[(i, j)] + if planted { shift } else { 0.0 } + spec.noise_sigma * normal(&mut r);
                    if v.abs() > 1.0 {
                        clipped += 1;
                        v = v.clamp(-1.0, 1.0);
                    }
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            let id = format!("sub-{c}-{k:03}");
            graphs.push(BrainGraph::new(id, c, c, m)?);
        }
    }
    let pairs = graphs.len() * n * n.saturating_sub(1) / 2;
    let clip_rate = if pairs == 0 { 0.0 } else { clipped as f64 / pairs as f64 };
    if clip_rate > MAX_CLIP_RATE {
        return Err(Error::InvalidSpec(format!("clip rate {clip_rate:.3} exceeds {MAX_CLIP_RATE}")));
    }
    let class_names = (0..spec.classes).map(|c| format!("class{c}")).collect();
    let cohort = Cohort::new(graphs, class_names, spec.classes)?;
    let truth = GroundTruth {
        planted: spec.planted.clone(),
        planted_names: spec.planted.iter().map(|&s| partition.subgraph_names[s].clone()).collect(),
        signal_strength: spec.signal_strength,
        seed: spec.seed,
        group_directions,
        clip_rate,
    };
    Ok(SynthCohort { cohort, partition, truth })
}
