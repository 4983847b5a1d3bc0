//! Splitting the ROI set into named subgraphs (functional modules), either
//! from an atlas or by spectral clustering of the cohort-mean affinity.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::Cohort;
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub subgraph_names: Vec<String>,
    /// Subgraph index per node.
    pub assignment: Vec<usize>,
}

impl Partition {
    pub fn new(subgraph_names: Vec<String>, assignment: Vec<usize>) -> Result<Self> {
        let p = Self { subgraph_names, assignment };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.subgraph_names.len();
        let mut sizes = vec![0usize; m];
        for (node, &s) in self.assignment.iter().enumerate() {
            if s >= m {
                return Err(invalid!("node {node} assigned to subgraph {s} of {m}"));
            }
            sizes[s] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&c| c == 0) {
            return Err(invalid!("subgraph {} is empty", self.subgraph_names[empty]));
        }
        Ok(())
    }

    /// Number of subgraphs.
    pub fn m(&self) -> usize {
        self.subgraph_names.len()
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    /// Nodes of subgraph `s`, ascending.
    pub fn nodes_of(&self, s: usize) -> Vec<usize> {
        self.assignment.iter().enumerate().filter(|(_, &a)| a == s).map(|(i, _)| i).collect()
    }

    /// Union of the given subgraphs' nodes, ascending.
    pub fn nodes_of_many(&self, subgraphs: &[usize]) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, a)| subgraphs.contains(a))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Named node lists in file order. Later entries may repeat nodes already
/// listed; the first listing wins.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AtlasFile {
    pub subgraphs: Vec<(String, Vec<usize>)>,
}

pub fn partition_from_atlas(atlas: &AtlasFile, n: usize) -> Result<Partition> {
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    for (s, (name, nodes)) in atlas.subgraphs.iter().enumerate() {
        for &node in nodes {
            if node >= n {
                return Err(invalid!("atlas subgraph {name} lists node {node}, graph has {n}"));
            }
            if assignment[node].is_none() {
                assignment[node] = Some(s);
            }
        }
    }
    let assignment = assignment
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or(Error::UncoveredNode(i)))
        .collect::<Result<Vec<_>>>()?;
    let names = atlas.subgraphs.iter().map(|(name, _)| name.clone()).collect();
    Partition::new(names, assignment)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { restarts: 100, max_iter: 300 }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeded k-means with k-means++ initialisation; best inertia over restarts.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, cfg: KMeansConfig) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(invalid!("k-means with k={k} on {n} points"));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..cfg.restarts.max(1) {
        let mut rng = rng::stream(seed, "kmeans", restart as u64);
        let (inertia, labels) = kmeans_once(points, k, &mut rng, cfg.max_iter);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn kmeans_once<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R, max_iter: usize) -> (f64, Vec<usize>) {
    let n = points.len();
    let dim = points[0].len();

    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        repair_empty_clusters(points, &mut labels, &mut centers);
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
        if !changed {
            break;
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
    (inertia, labels)
}

/// Moves the point farthest from the largest cluster's centroid into each
/// empty cluster.
fn repair_empty_clusters(points: &[Vec<f64>], labels: &mut [usize], centers: &mut [Vec<f64>]) {
    let k = centers.len();
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else { return };
        let largest = (0..k).max_by_key(|&c| (counts[c], usize::MAX - c)).expect("k >= 1");
        if counts[largest] < 2 {
            return;
        }
        let dim = points[0].len();
        let mut centroid = vec![0.0; dim];
        for (p, _) in points.iter().zip(labels.iter()).filter(|(_, &l)| l == largest) {
            centroid.iter_mut().zip(p).for_each(|(c, x)| *c += x);
        }
        centroid.iter_mut().for_each(|c| *c /= counts[largest] as f64);
        let far = (0..points.len())
            .filter(|&i| labels[i] == largest)
            .max_by(|&i, &j| sq_dist(&points[i], &centroid).total_cmp(&sq_dist(&points[j], &centroid)).then(j.cmp(&i)))
            .expect("largest cluster nonempty");
        labels[far] = empty;
        centers[empty] = points[far].clone();
    }
}

/// Relabels clusters in order of their smallest member index.
fn canonical_labels(labels: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for &l in labels {
        if map[l] == usize::MAX {
            map[l] = next;
            next += 1;
        }
    }
    labels.iter().map(|&l| map[l]).collect()
}

/// Normalized Laplacian `I − D^{-1/2} W D^{-1/2}` of a nonnegative affinity.
pub fn normalized_laplacian(w: &DenseMatrix) -> DenseMatrix {
    let n = w.rows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = w.row(i).iter().sum();
            1.0 / (d + 1e-12).sqrt()
        })
        .collect();
    let mut l = DenseMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            l[(i, j)] -= inv_sqrt[i] * w[(i, j)] * inv_sqrt[j];
        }
    }
    l
}

/// Spectral clustering of the affinity `|mean adjacency|` (zero diagonal).
pub fn partition_by_spectral_clustering(cohort: &Cohort, communities: usize, seed: u64) -> Result<Partition> {
    partition_by_spectral_clustering_with(cohort, communities, seed, KMeansConfig::default())
}

pub fn partition_by_spectral_clustering_with(
    cohort: &Cohort,
    communities: usize,
    seed: u64,
    kmeans_cfg: KMeansConfig,
) -> Result<Partition> {
    if cohort.is_empty() {
        return Err(invalid!("spectral clustering of an empty cohort"));
    }
    let n = cohort.node_count();
    if communities < 2 || communities > n {
        return Err(invalid!("{communities} communities requested for {n} nodes"));
    }
    let mut w = cohort.mean_adjacency();
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] = if i == j { 0.0 } else { w[(i, j)].abs() };
        }
    }
    let lap = normalized_laplacian(&w);
    let eig = symmetric_eigen(&lap, communities)?;
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row = eig.vectors.row(i).to_vec();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|x| x / norm).collect()
            } else {
                row
            }
        })
        .collect();
    let labels = kmeans(&points, communities, seed, kmeans_cfg)?;
    let assignment = canonical_labels(&labels, communities);
    let names = (1..=communities).map(|i| format!("SG {i}")).collect();
    Partition::new(names, assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BrainGraph;
    use alloc::string::ToString;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn block_cohort(sizes: &[usize], intra: f64, inter: f64, subjects: usize, noise: f64, seed: u64) -> (Cohort, Vec<usize>) {
        let n: usize = sizes.iter().sum();
        let mut truth = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            truth.extend(std::iter::repeat_n(b, s));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut graphs = Vec::new();
        for s in 0..subjects {
            let mut a = DenseMatrix::identity(n);
            for i in 0..n {
                for j in i + 1..n {
                    let base = if truth[i] == truth[j] { intra } else { inter };
                    let v = (base + noise * rng.random_range(-1.0..1.0)).clamp(-1.0, 1.0);
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            graphs.push(BrainGraph::new(s.to_string(), 0, 0, a).unwrap());
        }
        (Cohort::new(graphs, vec!["c".to_string()], 1).unwrap(), truth)
    }

    fn agreement(a: &[usize], b: &[usize], k: usize) -> f64 {
        // best label permutation, brute force
        fn perms(k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(k - 1) {
                for pos in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(pos, k - 1);
                    out.push(q);
                }
            }
            out
        }
        perms(k)
            .iter()
            .map(|p| a.iter().zip(b).filter(|(x, y)| p[**x] == **y).count())
            .max()
            .unwrap() as f64
            / a.len() as f64
    }

    #[test]
    fn atlas_with_single_subgraph() {
        let atlas = AtlasFile { subgraphs: vec![("All".into(), (0..5).collect())] };
        let p = partition_from_atlas(&atlas, 5).unwrap();
        assert_eq!(p.m(), 1);
        assert_eq!(p.assignment, vec![0; 5]);
    }

    #[test]
    fn atlas_overlap_goes_to_first_listing() {
        let atlas = AtlasFile {
            subgraphs: vec![("A".into(), vec![0, 1, 5]), ("B".into(), vec![2, 3, 4, 5])],
        };
        let p = partition_from_atlas(&atlas, 6).unwrap();
        assert_eq!(p.assignment[5], 0);
        assert_eq!(p.nodes_of(1), vec![2, 3, 4]);
    }

    #[test]
    fn atlas_errors() {
        let atlas = AtlasFile { subgraphs: vec![("A".into(), vec![0, 1])] };
        assert_eq!(partition_from_atlas(&atlas, 3).unwrap_err(), Error::UncoveredNode(2));
        let atlas = AtlasFile { subgraphs: vec![("A".into(), vec![0, 1, 7])] };
        assert!(matches!(partition_from_atlas(&atlas, 3), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn aal_style_nine_subgraphs() {
        let sizes = [12usize, 6, 4, 8, 10, 10, 6, 8, 26];
        let mut next = 0;
        let subgraphs = sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let nodes = (next..next + s).collect();
                next += s;
                (format!("M{i}"), nodes)
            })
            .collect();
        let p = partition_from_atlas(&AtlasFile { subgraphs }, 90).unwrap();
        assert_eq!(p.m(), 9);
        assert_eq!(p.node_count(), 90);
    }

    #[test]
    fn disconnected_blocks_are_recovered_exactly() {
        let (cohort, truth) = block_cohort(&[5, 7], 0.6, 0.0, 4, 0.1, 1);
        let p = partition_by_spectral_clustering(&cohort, 2, 3).unwrap();
        assert_eq!(agreement(&p.assignment, &truth, 2), 1.0);
        assert_eq!(p.subgraph_names, vec!["SG 1".to_string(), "SG 2".to_string()]);
    }

    #[test]
    fn planted_three_blocks_over_twenty_seeds() {
        let mut total = 0.0;
        for seed in 0..20 {
            let (cohort, truth) = block_cohort(&[6, 8, 10], 0.9, 0.1, 10, 0.2, seed);
            let p = partition_by_spectral_clustering(&cohort, 3, seed).unwrap();
            total += agreement(&p.assignment, &truth, 3);
        }
        assert!(total / 20.0 >= 0.95, "mean agreement {}", total / 20.0);
    }

    #[test]
    fn seven_communities_on_two_hundred_nodes() {
        let (cohort, _) = block_cohort(&[30, 25, 35, 20, 40, 25, 25], 0.5, 0.05, 3, 0.3, 5);
        let p = partition_by_spectral_clustering_with(&cohort, 7, 1, KMeansConfig { restarts: 10, max_iter: 300 }).unwrap();
        assert_eq!(p.m(), 7);
        assert!((0..7).all(|s| !p.nodes_of(s).is_empty()));
    }

    #[test]
    fn isolated_node_gets_a_community() {
        let (mut cohort, _) = block_cohort(&[4, 4, 1], 0.7, 0.0, 3, 0.0, 2);
        // node 8 has zero correlation with everything
        for g in &mut cohort.graphs {
            let mut a = g.adjacency().clone();
            for j in 0..8 {
                a[(8, j)] = 0.0;
                a[(j, 8)] = 0.0;
            }
            *g = BrainGraph::new(g.subject_id.clone(), 0, 0, a).unwrap();
        }
        let p = partition_by_spectral_clustering(&cohort, 2, 0).unwrap();
        assert_eq!(p.assignment.len(), 9);
        p.validate().unwrap();
    }

    #[test]
    fn spectral_is_deterministic_and_validates_k() {
        let (cohort, _) = block_cohort(&[5, 5, 5], 0.8, 0.1, 4, 0.2, 9);
        let a = partition_by_spectral_clustering(&cohort, 3, 17).unwrap();
        let b = partition_by_spectral_clustering(&cohort, 3, 17).unwrap();
        assert_eq!(a, b);
        assert!(partition_by_spectral_clustering(&cohort, 16, 0).is_err());
        assert!(partition_by_spectral_clustering(&cohort, 1, 0).is_err());
    }
}
