use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;


#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{invalid, Error, Result};
use crate::linalg::DenseMatrix;

pub const SYMMETRY_TOL: f64 = 1e-9;

/// One subject's ROI correlation graph. Node features are the adjacency
/// rows, so they are not stored twice.
#[derive(Debug, Clone, PartialEq)]
pub struct BrainGraph {
    pub subject_id: String,
    pub label: usize,
    pub group: usize,
    adjacency: DenseMatrix,
}

impl BrainGraph {
    /// Validates symmetry, unit diagonal, finiteness and the [-1, 1] range.
    pub fn new(subject_id: String, label: usize, group: usize, adjacency: DenseMatrix) -> Result<Self> {
        if !adjacency.is_square() || adjacency.rows() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "adjacency of {subject_id} is {}x{}",
                adjacency.rows(),
                adjacency.cols()
            )));
        }
        if !adjacency.is_finite() {
            return Err(invalid!("adjacency of {subject_id} has non-finite entries"));
        }
        if !adjacency.is_symmetric(SYMMETRY_TOL) {
            return Err(invalid!("adjacency of {subject_id} is not symmetric"));
        }
        let n = adjacency.rows();
        for i in 0..n {
            if adjacency[(i, i)] != 1.0 {
                return Err(invalid!("adjacency of {subject_id} has diagonal {} at {i}", adjacency[(i, i)]));
            }
        }
        if adjacency.data().iter().any(|v| v.abs() > 1.0) {
            return Err(invalid!("adjacency of {subject_id} has entries outside [-1, 1]"));
        }
        Ok(Self { subject_id, label, group, adjacency })
    }

    /// Symmetrizes as (M + Mᵀ)/2, clips to [-1, 1] and forces a unit
    /// diagonal. Returns the graph and the largest asymmetry seen before
    /// symmetrization.
    pub fn from_raw_adjacency(
        subject_id: String,
        label: usize,
        group: usize,
        raw: &DenseMatrix,
    ) -> Result<(Self, f64)> {
        if !raw.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "adjacency of {subject_id} is {}x{}",
                raw.rows(),
                raw.cols()
            )));
        }
        if !raw.is_finite() {
            return Err(invalid!("adjacency of {subject_id} has non-finite entries"));
        }
        let n = raw.rows();
        let mut m = DenseMatrix::zeros(n, n);
        let mut asym: f64 = 0.0;
        for i in 0..n {
            m[(i, i)] = 1.0;
            for j in i + 1..n {
                asym = asym.max((raw[(i, j)] - raw[(j, i)]).abs());
                let v = (0.5 * (raw[(i, j)] + raw[(j, i)])).clamp(-1.0, 1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok((Self::new(subject_id, label, group, m)?, asym))
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adjacency.rows()
    }

    #[inline]
    pub fn adjacency(&self) -> &DenseMatrix {
        &self.adjacency
    }

    #[inline]
    pub fn node_features(&self) -> &DenseMatrix {
        &self.adjacency
    }

    /// Induced subgraph on `nodes` (kept in the given order).
    pub fn induced(&self, nodes: &[usize]) -> Self {
        Self {
            subject_id: self.subject_id.clone(),
            label: self.label,
            group: self.group,
            adjacency: self.adjacency.induced(nodes),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub graphs: Vec<BrainGraph>,
    pub class_names: Vec<String>,
    pub group_count: usize,
}

impl Cohort {
    pub fn new(graphs: Vec<BrainGraph>, class_names: Vec<String>, group_count: usize) -> Result<Self> {
        if let Some(first) = graphs.first() {
            let n = first.node_count();
            if let Some(bad) = graphs.iter().find(|g| g.node_count() != n) {
                return Err(Error::ShapeMismatch(format!(
                    "subject {} has {} nodes, expected {n}",
                    bad.subject_id,
                    bad.node_count()
                )));
            }
        }
        for g in &graphs {
            if g.label >= class_names.len() {
                return Err(invalid!("subject {} has label {} but only {} classes", g.subject_id, g.label, class_names.len()));
            }
            if g.group >= group_count {
                return Err(invalid!("subject {} has group {} but only {group_count} groups", g.subject_id, g.group));
            }
        }
        Ok(Self { graphs, class_names, group_count })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.graphs.first().map_or(0, BrainGraph::node_count)
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.label).collect()
    }

    pub fn groups(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.group).collect()
    }

    /// Cohort restricted to the given subject indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            graphs: indices.iter().map(|&i| self.graphs[i].clone()).collect(),
            class_names: self.class_names.clone(),
            group_count: self.group_count,
        }
    }

    /// Elementwise mean adjacency over all subjects.
    pub fn mean_adjacency(&self) -> DenseMatrix {
        let n = self.node_count();
        let mut acc = DenseMatrix::zeros(n, n);
        for g in &self.graphs {
            acc.data_mut().iter_mut().zip(g.adjacency().data()).for_each(|(a, b)| *a += b);
        }
        let d = self.graphs.len().max(1) as f64;
        acc.data_mut().iter_mut().for_each(|a| *a /= d);
        acc
    }
}

/// Raw BOLD signal, one column per ROI.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub subject_id: String,
    /// T × N.
    pub data: DenseMatrix,
}

impl TimeSeries {
    pub fn new(subject_id: String, data: DenseMatrix) -> Result<Self> {
        let ts = Self { subject_id, data };
        ts.validate()?;
        Ok(ts)
    }

    pub fn timepoints(&self) -> usize {
        self.data.rows()
    }

    pub fn node_count(&self) -> usize {
        self.data.cols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.timepoints() < 3 {
            return Err(invalid!("{} has {} timepoints, need at least 3", self.subject_id, self.timepoints()));
        }
        if self.node_count() == 0 {
            return Err(invalid!("{} has no ROI columns", self.subject_id));
        }
        if !self.data.is_finite() {
            return Err(invalid!("{} has non-finite samples", self.subject_id));
        }
        for j in 0..self.node_count() {
            let col = self.data.column(j);
            if col.iter().all(|&v| v == col[0]) {
                return Err(Error::DegenerateSignal(j));
            }
        }
        Ok(())
    }
}

/// Pearson correlation between every pair of columns (population
/// normalization). Diagonal is exactly 1.
pub fn pearson_adjacency(ts: &TimeSeries) -> Result<DenseMatrix> {
    ts.validate()?;
    let t = ts.timepoints() as f64;
    let n = ts.node_count();
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut sd = Vec::with_capacity(n);
    for j in 0..n {
        let col = ts.data.column(j);
        let mean = col.iter().sum::<f64>() / t;
        let c: Vec<f64> = col.iter().map(|v| v - mean).collect();
        let var = c.iter().map(|v| v * v).sum::<f64>() / t;
        if var <= 0.0 {
            return Err(Error::DegenerateSignal(j));
        }
        sd.push(var.sqrt());
        centered.push(c);
    }
    let mut a = DenseMatrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            let cov = centered[i].iter().zip(&centered[j]).map(|(x, y)| x * y).sum::<f64>() / t;
            let r = (cov / (sd[i] * sd[j])).clamp(-1.0, 1.0);
            a[(i, j)] = r;
            a[(j, i)] = r;
        }
    }
    Ok(a)
}

pub fn pearson_graph(ts: &TimeSeries, label: usize, group: usize) -> Result<BrainGraph> {
    BrainGraph::new(ts.subject_id.clone(), label, group, pearson_adjacency(ts)?)
}
