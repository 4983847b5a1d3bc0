//! Pathological feature distillation.
//!
//! Per node, the node's feature vectors from all subjects are stacked into
//! a cross-subject matrix whose first left singular vector scores every
//! feature dimension. The `k` highest-|score| (communal) and `k`
//! lowest-|score| dimensions are dropped. Group-specific scores of the
//! remaining dimensions then drive per-group Bernoulli masks.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{svd, DenseMatrix};
use crate::rng;

pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistillMode {
    /// Scores and masks fit on the training split; evaluation subjects are
    /// distilled but left unmasked.
    #[default]
    Inductive,
    /// Scores and masks fit on every subject and applied to every subject.
    Transductive,
}

/// Row `i` is the leading left singular vector of node `i`'s
/// cross-subject matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunalScoreMatrix {
    pub scores: DenseMatrix,
    /// Nodes whose cross-subject matrix was all zero; their row is zero.
    pub zero_rows: Vec<usize>,
}

fn check_features(features: &[&DenseMatrix]) -> Result<(usize, usize)> {
    let first = features.first().ok_or_else(|| invalid!("feature scoring needs at least one subject"))?;
    let (n, f) = (first.rows(), first.cols());
    if let Some(bad) = features.iter().position(|m| m.rows() != n || m.cols() != f) {
        return Err(Error::ShapeMismatch(format!(
            "subject {bad} has {}x{} features, expected {n}x{f}",
            features[bad].rows(),
            features[bad].cols()
        )));
    }
    Ok((n, f))
}

/// SVD scoring on an arbitrary set of subjects' node-feature matrices.
pub fn score_nodes(features: &[&DenseMatrix]) -> Result<CommunalScoreMatrix> {
    let (n, f) = check_features(features)?;
    let d = features.len();
    let mut scores = DenseMatrix::zeros(n, f);
    let mut zero_rows = Vec::new();
    let mut stack = DenseMatrix::zeros(f, d);
    for i in 0..n {
        for (s, m) in features.iter().enumerate() {
            for (j, &v) in m.row(i).iter().enumerate() {
                stack[(j, s)] = v;
            }
        }
        if stack.data().iter().all(|&v| v == 0.0) {
            zero_rows.push(i);
            continue;
        }
        let dec = svd(&stack)?;
        for j in 0..f {
            scores[(i, j)] = dec.left[(j, 0)];
        }
    }
    Ok(CommunalScoreMatrix { scores, zero_rows })
}

/// Communal feature scores over every given subject (needs D ≥ 2).
pub fn communal_scores(features: &[&DenseMatrix]) -> Result<CommunalScoreMatrix> {
    if features.len() < 2 {
        return Err(invalid!("communal scoring needs at least two subjects, got {}", features.len()));
    }
    score_nodes(features)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDrop {
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
    /// Surviving feature indices, ascending.
    pub kept: Vec<usize>,
}

/// Per-node dropped/kept feature indices; ragged index sets, uniform width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropPlan {
    pub k: usize,
    pub input_width: usize,
    pub nodes: Vec<NodeDrop>,
}

impl DropPlan {
    /// Ranks `|S[i, ·]|`; ties go to the lower index in both directions.
    pub fn from_scores(scores: &DenseMatrix, k: usize) -> Result<Self> {
        let width = scores.cols();
        if 2 * k >= width {
            return Err(invalid!("2k = {} must be below the feature width {width}", 2 * k));
        }
        let nodes = (0..scores.rows())
            .map(|i| {
                let row = scores.row(i);
                let mut desc: Vec<usize> = (0..width).collect();
                desc.sort_by(|&a, &b| row[b].abs().total_cmp(&row[a].abs()).then(a.cmp(&b)));
                let top: Vec<usize> = desc[..k].to_vec();
                let mut asc: Vec<usize> = (0..width).filter(|j| !top.contains(j)).collect();
                asc.sort_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()).then(a.cmp(&b)));
                let bottom: Vec<usize> = asc[..k].to_vec();
                let kept = (0..width).filter(|j| !top.contains(j) && !bottom.contains(j)).collect();
                NodeDrop { top, bottom, kept }
            })
            .collect();
        Ok(Self { k, input_width: width, nodes })
    }

    pub fn output_width(&self) -> usize {
        self.input_width - 2 * self.k
    }

    pub fn apply(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        if features.rows() != self.nodes.len() || features.cols() != self.input_width {
            return Err(Error::ShapeMismatch(format!(
                "drop plan is for {}x{} features, got {}x{}",
                self.nodes.len(),
                self.input_width,
                features.rows(),
                features.cols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.nodes.len(), self.output_width());
        for (i, node) in self.nodes.iter().enumerate() {
            let src = features.row(i);
            for (dst, &j) in out.row_mut(i).iter_mut().zip(&node.kept) {
                *dst = src[j];
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistilledCohort {
    pub features: Vec<DenseMatrix>,
    pub plan: DropPlan,
}

impl DistilledCohort {
    pub fn width(&self) -> usize {
        self.plan.output_width()
    }
}

pub fn drop_noise_features(features: &[DenseMatrix], scores: &CommunalScoreMatrix, k: usize) -> Result<DistilledCohort> {
    let plan = DropPlan::from_scores(&scores.scores, k)?;
    let features = features.iter().map(|m| plan.apply(m)).collect::<Result<Vec<_>>>()?;
    Ok(DistilledCohort { features, plan })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScorePack {
    /// `F_y` for every group that has subjects; `None` for absent groups.
    pub matrices: Vec<Option<DenseMatrix>>,
    pub fitted_on: Vec<String>,
}

/// Group-specific scoring of distilled features. Every group that appears
/// must have at least two subjects.
pub fn group_scores(features: &[DenseMatrix], groups: &[usize], group_count: usize, subject_ids: &[String]) -> Result<GroupScorePack> {
    if features.len() != groups.len() {
        return Err(Error::ShapeMismatch(format!("{} feature sets, {} groups", features.len(), groups.len())));
    }
    let mut matrices = Vec::with_capacity(group_count);
    for y in 0..group_count {
        let members: Vec<&DenseMatrix> = features.iter().zip(groups).filter(|(_, &g)| g == y).map(|(m, _)| m).collect();
        match members.len() {
            0 => matrices.push(None),
            1 => return Err(invalid!("group {y} has a single subject; group scoring needs two")),
            _ => matrices.push(Some(score_nodes(&members)?.scores)),
        }
    }
    Ok(GroupScorePack { matrices, fitted_on: subject_ids.to_vec() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub group: usize,
    pub weights: Vec<f64>,
    pub w_max: f64,
    pub lambda_w: f64,
    pub probabilities: Vec<f64>,
    /// 1 keeps the feature, 0 masks it. Shared by every subject of the group.
    pub mask: Vec<u8>,
    pub rho: f64,
    pub p_t: f64,
    pub seed: u64,
}

/// Masking probabilities from feature weights:
/// `p_j = clamp(ρ (log w_max − log w_j) / (log w_max − log λ_w), 0, p_t)`
/// with weights floored at [`WEIGHT_FLOOR`] and `λ_w` their mean.
/// Returns `(p, w_max, λ_w)`.
pub fn probabilities_from_weights(weights: &[f64], rho: f64, p_t: f64) -> Result<(Vec<f64>, f64, f64)> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(invalid!("rho must be positive, got {rho}"));
    }
    if !(p_t > 0.0 && p_t < 1.0) {
        return Err(invalid!("p_t must lie in (0, 1), got {p_t}"));
    }
    if weights.is_empty() {
        return Err(invalid!("no feature weights"));
    }
    let w: Vec<f64> = weights.iter().map(|&x| x.max(WEIGHT_FLOOR)).collect();
    let w_max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lambda = w.iter().sum::<f64>() / w.len() as f64;
    let denom = w_max.ln() - lambda.ln();
    let p = if denom > 0.0 {
        w.iter().map(|&wj| (rho * (w_max.ln() - wj.ln()) / denom).clamp(0.0, p_t)).collect()
    } else {
        vec![0.0; w.len()]
    };
    Ok((p, w_max, lambda))
}

/// `b_j ~ Bernoulli(1 − p_j)`.
pub fn sample_mask<R: Rng>(probabilities: &[f64], rng: &mut R) -> Vec<u8> {
    probabilities.iter().map(|&p| u8::from(rng.random::<f64>() < 1.0 - p)).collect()
}

/// Feature weights of one group: the mean over the group's subjects of
/// `(1/N̂) Σ_i |x̃_i| ⊙ |F_{y,i}|`.
pub fn group_weights(members: &[&DenseMatrix], group_scores: &DenseMatrix) -> Vec<f64> {
    let (n, f) = (group_scores.rows(), group_scores.cols());
    let mut w = vec![0.0; f];
    for m in members {
        for i in 0..n {
            for ((wj, x), s) in w.iter_mut().zip(m.row(i)).zip(group_scores.row(i)) {
                *wj += x.abs() * s.abs();
            }
        }
    }
    let scale = (n * members.len().max(1)) as f64;
    w.iter_mut().for_each(|v| *v /= scale);
    w
}

pub fn masking_probabilities(
    features: &[DenseMatrix],
    groups: &[usize],
    pack: &GroupScorePack,
    group: usize,
    rho: f64,
    p_t: f64,
    seed: u64,
) -> Result<AugmentationPlan> {
    let scores = pack
        .matrices
        .get(group)
        .and_then(Option::as_ref)
        .ok_or(Error::MissingPlan(group))?;
    let members: Vec<&DenseMatrix> = features.iter().zip(groups).filter(|(_, &g)| g == group).map(|(m, _)| m).collect();
    let weights = group_weights(&members, scores);
    let (probabilities, w_max, lambda_w) = probabilities_from_weights(&weights, rho, p_t)?;
    let mut rng = rng::stream(seed, "masks", group as u64);
    let mask = sample_mask(&probabilities, &mut rng);
    Ok(AugmentationPlan { group, weights, w_max, lambda_w, probabilities, mask, rho, p_t, seed })
}

pub fn apply_mask(features: &DenseMatrix, mask: &[u8]) -> DenseMatrix {
    let mut out = features.clone();
    for i in 0..out.rows() {
        for (v, &b) in out.row_mut(i).iter_mut().zip(mask) {
            if b == 0 {
                *v = 0.0;
            }
        }
    }
    out
}

/// Multiplies every node of each subject flagged in `masked` by its
/// group's mask; other subjects pass through.
pub fn apply_masks(features: &[DenseMatrix], groups: &[usize], plans: &[AugmentationPlan], masked: &[bool]) -> Result<Vec<DenseMatrix>> {
    features
        .iter()
        .zip(groups)
        .zip(masked)
        .map(|((m, &g), &on)| {
            if !on {
                return Ok(m.clone());
            }
            let plan = plans.iter().find(|p| p.group == g).ok_or(Error::MissingPlan(g))?;
            Ok(apply_mask(m, &plan.mask))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub k: usize,
    pub rho: f64,
    pub p_t: f64,
    pub mode: DistillMode,
    pub seed: u64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self { k: 1, rho: 0.6, p_t: 0.7, mode: DistillMode::Inductive, seed: 0 }
    }
}

/// Everything needed to audit one distillation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillReport {
    pub config: DistillConfig,
    pub fitted_on: Vec<String>,
    pub drop_plan: DropPlan,
    pub zero_score_nodes: Vec<usize>,
    pub plans: Vec<AugmentationPlan>,
}

/// Full distillation. Statistics are fit on the subjects in `fit_on`
/// (all of them in transductive mode); masks are applied to `fit_on`
/// subjects only in inductive mode and to everyone in transductive mode.
pub fn distill(
    features: &[DenseMatrix],
    groups: &[usize],
    group_count: usize,
    subject_ids: &[String],
    fit_on: &[usize],
    cfg: &DistillConfig,
) -> Result<(Vec<DenseMatrix>, DistillReport)> {
    let all: Vec<usize> = (0..features.len()).collect();
    let fit: &[usize] = match cfg.mode {
        DistillMode::Transductive => &all,
        DistillMode::Inductive => fit_on,
    };
    let fit_features: Vec<&DenseMatrix> = fit.iter().map(|&i| &features[i]).collect();
    let communal = communal_scores(&fit_features)?;
    let distilled = drop_noise_features(features, &communal, cfg.k)?;

    let fit_distilled: Vec<DenseMatrix> = fit.iter().map(|&i| distilled.features[i].clone()).collect();
    let fit_groups: Vec<usize> = fit.iter().map(|&i| groups[i]).collect();
    let fit_ids: Vec<String> = fit.iter().map(|&i| subject_ids[i].clone()).collect();
    let pack = group_scores(&fit_distilled, &fit_groups, group_count, &fit_ids)?;
    let plans = (0..group_count)
        .filter(|&y| pack.matrices[y].is_some())
        .map(|y| masking_probabilities(&fit_distilled, &fit_groups, &pack, y, cfg.rho, cfg.p_t, cfg.seed))
        .collect::<Result<Vec<_>>>()?;

    let mut masked = vec![false; features.len()];
    fit.iter().for_each(|&i| masked[i] = true);
    let out = apply_masks(&distilled.features, groups, &plans, &masked)?;
    let report = DistillReport {
        config: *cfg,
        fitted_on: fit_ids,
        drop_plan: distilled.plan,
        zero_score_nodes: communal.zero_rows,
        plans,
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_features(d: usize, n: usize, f: usize, seed: u64) -> Vec<DenseMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..d)
            .map(|_| DenseMatrix::from_vec(n, f, (0..n * f).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
            .collect()
    }

    #[test]
    fn identical_subjects_give_normalized_feature_vector() {
        let x = DenseMatrix::from_rows(&[[3.0, -4.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 1.0]]).unwrap();
        let s = communal_scores(&[&x, &x]).unwrap();
        // row 0 is ±(3,-4,0)/5, sign fixed so the max-|.| entry is positive
        let r = s.scores.row(0);
        assert!((r[0] + 0.6).abs() < 1e-12 && (r[1] - 0.8).abs() < 1e-12 && r[2].abs() < 1e-12);
        assert!((s.scores.row(1)[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_node_gives_flagged_zero_row() {
        let mut x = DenseMatrix::identity(3);
        x.row_mut(1).iter_mut().for_each(|v| *v = 0.0);
        let s = communal_scores(&[&x, &x]).unwrap();
        assert_eq!(s.zero_rows, vec![1]);
        assert!(s.scores.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rows_match_gram_eigenvector_oracle() {
        let feats = random_features(4, 6, 6, 21);
        let refs: Vec<&DenseMatrix> = feats.iter().collect();
        let s = communal_scores(&refs).unwrap();
        for i in 0..6 {
            // C Cᵀ = Σ_d x_d x_dᵀ; power iteration for its dominant eigenvector
            let mut g = DenseMatrix::zeros(6, 6);
            for m in &feats {
                let x = m.row(i);
                for a in 0..6 {
                    for b in 0..6 {
                        g[(a, b)] += x[a] * x[b];
                    }
                }
            }
            let mut v = vec![1.0; 6];
            for _ in 0..5000 {
                let mut w = [0.0; 6];
                for a in 0..6 {
                    for b in 0..6 {
                        w[a] += g[(a, b)] * v[b];
                    }
                }
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                v = w.iter().map(|x| x / norm).collect();
            }
            let dot: f64 = v.iter().zip(s.scores.row(i)).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8, "node {i}: |cos| = {}", dot.abs());
            let norm: f64 = s.scores.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn drop_ranking_example() {
        let scores = DenseMatrix::from_rows(&[[0.9, 0.1, 0.4, 0.05, 0.3]]).unwrap();
        let plan = DropPlan::from_scores(&scores, 1).unwrap();
        assert_eq!(plan.nodes[0].top, vec![0]);
        assert_eq!(plan.nodes[0].bottom, vec![3]);
        assert_eq!(plan.nodes[0].kept, vec![1, 2, 4]);
        let x = DenseMatrix::from_rows(&[[10.0, 11.0, 12.0, 13.0, 14.0]]).unwrap();
        assert_eq!(plan.apply(&x).unwrap().data(), &[11.0, 12.0, 14.0]);
    }

    #[test]
    fn k_zero_is_identity_and_large_k_rejected() {
        let feats = random_features(3, 4, 4, 2);
        let refs: Vec<&DenseMatrix> = feats.iter().collect();
        let s = communal_scores(&refs).unwrap();
        let d = drop_noise_features(&feats, &s, 0).unwrap();
        assert_eq!(d.features, feats);
        assert!(matches!(drop_noise_features(&feats, &s, 2), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn ties_never_overlap() {
        let scores = DenseMatrix::from_rows(&[[0.5; 6]]).unwrap();
        let plan = DropPlan::from_scores(&scores, 2).unwrap();
        assert_eq!(plan.nodes[0].top, vec![0, 1]);
        assert_eq!(plan.nodes[0].bottom, vec![2, 3]);
        assert_eq!(plan.nodes[0].kept, vec![4, 5]);
    }

    #[test]
    fn single_group_matches_communal_scoring() {
        let feats = random_features(5, 4, 4, 8);
        let ids: Vec<String> = (0..5).map(|i| format!("s{i}")).collect();
        let pack = group_scores(&feats, &[0; 5], 1, &ids).unwrap();
        let refs: Vec<&DenseMatrix> = feats.iter().collect();
        assert_eq!(pack.matrices[0].as_ref().unwrap(), &communal_scores(&refs).unwrap().scores);
    }

    #[test]
    fn three_groups_three_matrices_and_singletons_rejected() {
        let feats = random_features(6, 4, 4, 8);
        let ids: Vec<String> = (0..6).map(|i| format!("s{i}")).collect();
        let pack = group_scores(&feats, &[0, 1, 2, 0, 1, 2], 3, &ids).unwrap();
        assert_eq!(pack.matrices.iter().filter(|m| m.is_some()).count(), 3);
        assert!(group_scores(&feats, &[0, 1, 1, 1, 1, 1], 2, &ids).is_err());
    }

    #[test]
    fn disjoint_group_patterns_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pa = [1.0, 0.5, 0.0, 0.0, 0.2];
        let pb = [0.0, 0.1, 1.0, 0.7, 0.0];
        let mut feats = Vec::new();
        let mut groups = Vec::new();
        for s in 0..10 {
            let p = if s % 2 == 0 { &pa } else { &pb };
            let rows: Vec<Vec<f64>> = (0..3).map(|_| {
                let amp = rng.random_range(0.5..2.0);
                p.iter().map(|v| v * amp).collect()
            }).collect();
            feats.push(DenseMatrix::from_rows(&rows).unwrap());
            groups.push(s % 2);
        }
        let ids: Vec<String> = (0..10).map(|i| format!("s{i}")).collect();
        let pack = group_scores(&feats, &groups, 2, &ids).unwrap();
        for (y, p) in [pa, pb].iter().enumerate() {
            let norm: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            let f = pack.matrices[y].as_ref().unwrap();
            for i in 0..3 {
                let cos: f64 = f.row(i).iter().zip(p.iter()).map(|(a, b)| a * b / norm).sum();
                assert!(cos.abs() >= 0.99, "group {y} node {i}: {cos}");
            }
        }
    }

    #[test]
    fn probability_examples() {
        let (p, w_max, lambda) = probabilities_from_weights(&[4.0, 2.0, 1.0], 0.6, 0.7).unwrap();
        assert_eq!(w_max, 4.0);
        assert!((lambda - 7.0 / 3.0).abs() < 1e-15);
        let denom = libm::log(4.0) - libm::log(7.0 / 3.0);
        assert_eq!(p[0], 0.0);
        // 0.6 · ln 2 / ln(12/7) ≈ 0.772 and 0.6 · ln 4 / ln(12/7) ≈ 1.54, both clamp
        assert_eq!(p[1], (0.6 * libm::log(2.0) / denom).min(0.7));
        assert_eq!(p[1], 0.7);
        assert_eq!(p[2], 0.7);
        let (p, _, _) = probabilities_from_weights(&[4.0, 2.0, 1.0], 0.3, 0.7).unwrap();
        assert!((p[1] - 0.3 * libm::log(2.0) / denom).abs() < 1e-12);

        // w_j = λ_w gives exactly ρ
        let (p, _, _) = probabilities_from_weights(&[3.0, 2.0, 1.0], 0.4, 0.7).unwrap();
        assert!((p[1] - 0.4).abs() < 1e-12);

        let (p, _, _) = probabilities_from_weights(&[0.5; 4], 0.6, 0.7).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
        assert!(probabilities_from_weights(&[1.0], 0.0, 0.7).is_err());
        assert!(probabilities_from_weights(&[1.0], 0.5, 1.0).is_err());
    }

    #[test]
    fn zero_probabilities_give_identity_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_mask(&[0.0; 16], &mut rng), vec![1; 16]);
    }

    #[test]
    fn transductive_masks_zero_columns_exactly_and_reproducibly() {
        let feats = random_features(8, 6, 6, 5);
        let groups = vec![0, 1, 0, 1, 0, 1, 0, 1];
        let ids: Vec<String> = (0..8).map(|i| format!("s{i}")).collect();
        let cfg = DistillConfig { k: 1, rho: 0.6, p_t: 0.7, mode: DistillMode::Transductive, seed: 3 };
        let (a, report) = distill(&feats, &groups, 2, &ids, &[], &cfg).unwrap();
        let (b, _) = distill(&feats, &groups, 2, &ids, &[], &cfg).unwrap();
        assert_eq!(a, b);
        for (m, &g) in a.iter().zip(&groups) {
            assert_eq!(m.cols(), 4);
            let mask = &report.plans[g].mask;
            for i in 0..m.rows() {
                for (j, &bit) in mask.iter().enumerate() {
                    if bit == 0 {
                        assert_eq!(m[(i, j)].to_bits(), 0.0f64.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn inductive_leaves_held_out_subjects_unmasked() {
        let feats = random_features(8, 6, 6, 6);
        let groups = vec![0, 1, 0, 1, 0, 1, 0, 1];
        let ids: Vec<String> = (0..8).map(|i| format!("s{i}")).collect();
        let cfg = DistillConfig { k: 1, rho: 0.6, p_t: 0.7, mode: DistillMode::Inductive, seed: 3 };
        let fit = [0, 1, 2, 3, 4, 5];
        let (out, report) = distill(&feats, &groups, 2, &ids, &fit, &cfg).unwrap();
        assert_eq!(report.fitted_on.len(), 6);
        for s in [6, 7] {
            assert_eq!(out[s], report.drop_plan.apply(&feats[s]).unwrap());
        }
    }

    #[test]
    fn missing_plan_is_reported() {
        let feats = random_features(2, 3, 3, 1);
        assert_eq!(apply_masks(&feats, &[0, 4], &[], &[false, true]).unwrap_err(), Error::MissingPlan(4));
    }

    proptest! {
        #[test]
        fn probabilities_are_bounded_monotone_and_scale_free(
            w in proptest::collection::vec(1e-6f64..10.0, 2..20),
            rho in 0.05f64..1.0,
            p_t in 0.05f64..0.95,
            scale in 0.01f64..100.0,
        ) {
            let (p, _, _) = probabilities_from_weights(&w, rho, p_t).unwrap();
            prop_assert!(p.iter().all(|&v| (0.0..=p_t).contains(&v)));
            for a in 0..w.len() {
                for b in 0..w.len() {
                    if w[a] <= w[b] {
                        prop_assert!(p[a] >= p[b] - 1e-12);
                    }
                }
            }
            let scaled: Vec<f64> = w.iter().map(|v| v * scale).collect();
            let (q, _, _) = probabilities_from_weights(&scaled, rho, p_t).unwrap();
            for (x, y) in p.iter().zip(&q) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        /// Zeroing the top-k |l| coordinates removes at least as much of the
        /// rank-one component as zeroing any other k coordinates.
        #[test]
        fn top_scores_carry_the_rank_one_component(
            data in proptest::collection::vec(-1.0f64..1.0, 6 * 4),
            k in 1usize..3,
            other in proptest::collection::vec(0usize..6, 3),
        ) {
            let m = DenseMatrix::from_vec(6, 4, data).unwrap();
            let dec = svd(&m).unwrap();
            let l = dec.left.column(0);
            let s1 = dec.singular_values[0];
            let norm_without = |set: &[usize]| -> f64 {
                // ‖σ₁ l' rᵀ‖_F = σ₁ ‖l'‖ since ‖r‖ = 1
                let rest: f64 = l.iter().enumerate().filter(|(i, _)| !set.contains(i)).map(|(_, v)| v * v).sum();
                s1 * rest.sqrt()
            };
            let mut order: Vec<usize> = (0..6).collect();
            order.sort_by(|&a, &b| l[b].abs().total_cmp(&l[a].abs()).then(a.cmp(&b)));
            let top = &order[..k];
            let mut alt: Vec<usize> = other.clone();
            alt.sort_unstable();
            alt.dedup();
            alt.truncate(k);
            if alt.len() == k {
                prop_assert!(norm_without(top) <= norm_without(&alt) + 1e-12);
            }
            let residual = crate::linalg::rank_one_residual(&m, &dec).unwrap();
            let tail: f64 = dec.singular_values[1..].iter().map(|s| s * s).sum::<f64>().sqrt();
            prop_assert!((residual - tail).abs() <= 1e-8 * tail.max(1e-12));
        }
    }
}
