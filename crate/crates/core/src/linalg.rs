//! Dense row-major matrices plus the two decompositions the pipeline needs:
//! a one-sided Jacobi SVD and a cyclic Jacobi symmetric eigensolver.
//!
//! Both decompositions fix the sign of every singular/eigen vector so that
//! its largest-magnitude entry is positive. Without that, downstream feature
//! scores would flip sign between otherwise identical runs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (i + 1..self.cols).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        matmul_into(self, other, &mut out);
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} minus {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    /// Submatrix on the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (p, &i) in rows.iter().enumerate() {
            let src = self.row(i);
            let dst = out.row_mut(p);
            for (q, &j) in cols.iter().enumerate() {
                dst[q] = src[j];
            }
        }
        out
    }

    /// Induced principal submatrix on `nodes`.
    pub fn induced(&self, nodes: &[usize]) -> Self {
        self.select(nodes, nodes)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `out = a * b`, shapes assumed compatible.
pub(crate) fn matmul_into(a: &DenseMatrix, b: &DenseMatrix, out: &mut DenseMatrix) {
    out.data.iter_mut().for_each(|v| *v = 0.0);
    let n = b.cols;
    for i in 0..a.rows {
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let b_row = &b.data[k * n..(k + 1) * n];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
}

/// Thin SVD `m = left * diag(singular_values) * rightᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdResult {
    pub left: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut scaled = self.left.clone();
        for i in 0..scaled.rows {
            for (v, s) in scaled.row_mut(i).iter_mut().zip(&self.singular_values) {
                *v *= s;
            }
        }
        scaled
            .matmul(&self.right.transpose())
            .expect("svd factors have matching inner dimension")
    }

    /// First left singular vector.
    pub fn leading_left(&self) -> Vec<f64> {
        self.left.column(0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs_index(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Extends `basis` (orthonormal vectors of length `dim`) by one unit vector
/// orthogonal to all of them, trying standard basis vectors in order.
fn orthonormal_completion(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..dim {
        let mut v = vec![0.0; dim];
        v[e] = 1.0;
        // two Gram-Schmidt passes
        for _ in 0..2 {
            for b in basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 0.5 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
        if best.as_ref().is_none_or(|(n, _)| norm > *n) {
            best = Some((norm, v));
        }
    }
    let (norm, mut v) = best.expect("dim >= 1");
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// One-sided Jacobi on the columns of a tall matrix (`rows >= cols`).
/// Returns (left columns, singular values, right columns), unsorted.
fn jacobi_tall(m: &DenseMatrix) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>)> {
    let (rows, cols) = (m.rows, m.cols);
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * rows as f64;
    // columns below this squared norm are numerically zero and never rotated
    let frob2: f64 = a.iter().map(|c| dot(c, c)).sum();
    let negligible = frob2 * (f64::EPSILON * f64::EPSILON);

    let mut converged = cols < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == 0.0 || alpha <= negligible || beta <= negligible || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = a.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
                let (lo, hi) = v.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let sigma: Vec<f64> = a.iter().map(|c| dot(c, c).sqrt()).collect();
    Ok((a, sigma, v))
}

/// Thin SVD by one-sided Jacobi.
///
/// Left singular vectors whose singular value is numerically zero are
/// replaced by an orthonormal completion so `left` always has orthonormal
/// columns.
pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    if m.rows == 0 || m.cols == 0 {
        return Err(invalid!("svd of an empty {}x{} matrix", m.rows, m.cols));
    }
    if !m.is_finite() {
        return Err(invalid!("svd input contains non-finite entries"));
    }
    let wide = m.rows < m.cols;
    let tall = if wide { m.transpose() } else { m.clone() };
    let (cols_a, sigma, cols_v) = jacobi_tall(&tall)?;
    let (big, small) = (tall.rows, tall.cols);

    let mut order: Vec<usize> = (0..small).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    let sigma_max = sigma[order[0]];
    let cutoff = sigma_max * 1e-13;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(small);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(small);
    let mut values = Vec::with_capacity(small);
    let mut pending = Vec::new();
    for &j in &order {
        let s = sigma[j];
        if s > cutoff && s > 0.0 {
            u_cols.push(cols_a[j].iter().map(|x| x / s).collect());
        } else {
            pending.push(u_cols.len());
            u_cols.push(Vec::new());
        }
        v_cols.push(cols_v[j].clone());
        values.push(s);
    }
    for idx in pending {
        let basis: Vec<Vec<f64>> = u_cols.iter().filter(|c| !c.is_empty()).cloned().collect();
        u_cols[idx] = orthonormal_completion(&basis, big);
    }

    // after un-transposing, the "left" side is whichever belongs to m's rows
    let (mut left_cols, mut right_cols) = if wide { (v_cols, u_cols) } else { (u_cols, v_cols) };
    for (l, r) in left_cols.iter_mut().zip(right_cols.iter_mut()) {
        if l[max_abs_index(l)] < 0.0 {
            l.iter_mut().for_each(|x| *x = -*x);
            r.iter_mut().for_each(|x| *x = -*x);
        }
    }

    Ok(SvdResult {
        left: columns_to_matrix(&left_cols, m.rows),
        singular_values: values,
        right: columns_to_matrix(&right_cols, m.cols),
    })
}

fn columns_to_matrix(cols: &[Vec<f64>], rows: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (i, &x) in c.iter().enumerate() {
            out[(i, j)] = x;
        }
    }
    out
}

/// `‖m − σ₁ l₁ r₁ᵀ‖_F`, computed directly from the matrix.
pub fn rank_one_residual(m: &DenseMatrix, s: &SvdResult) -> Result<f64> {
    if s.left.rows != m.rows || s.right.rows != m.cols {
        return Err(Error::ShapeMismatch(format!(
            "svd factors do not match a {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let s1 = s.singular_values[0];
    let mut acc = 0.0;
    for i in 0..m.rows {
        let li = s.left[(i, 0)] * s1;
        for j in 0..m.cols {
            let d = m[(i, j)] - li * s.right[(j, 0)];
            acc += d * d;
        }
    }
    Ok(acc.sqrt())
}

/// Eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` pairs with `values[j]`.
    pub vectors: DenseMatrix,
}

/// The `k` smallest eigenpairs of a symmetric matrix (cyclic Jacobi).
pub fn symmetric_eigen(m: &DenseMatrix, k: usize) -> Result<SymmetricEigen> {
    if !m.is_square() || m.rows == 0 {
        return Err(invalid!("eigendecomposition needs a nonempty square matrix"));
    }
    if !m.is_finite() {
        return Err(invalid!("eigendecomposition input contains non-finite entries"));
    }
    if !m.is_symmetric(1e-9) {
        return Err(invalid!("matrix is not symmetric within 1e-9"));
    }
    let n = m.rows;
    if k == 0 || k > n {
        return Err(invalid!("requested {k} eigenpairs of a {n}x{n} matrix"));
    }

    let mut a = m.clone();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut vecs = DenseMatrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    let off = |a: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += a[(i, j)] * a[(i, j)];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = off(&a) <= 1e-14 * scale;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = c * arp - s * arq;
                    a[(r, q)] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[(p, r)];
                    let aqr = a[(q, r)];
                    a[(p, r)] = c * apr - s * aqr;
                    a[(q, r)] = s * apr + c * aqr;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    let vrp = vecs[(r, p)];
                    let vrq = vecs[(r, q)];
                    vecs[(r, p)] = c * vrp - s * vrq;
                    vecs[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
        converged = off(&a) <= 1e-14 * scale;
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let mut values = Vec::with_capacity(k);
    let mut out = DenseMatrix::zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        values.push(a[(idx, idx)]);
        let mut v = vecs.column(idx);
        if v[max_abs_index(&v)] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for (r, x) in v.into_iter().enumerate() {
            out[(r, col)] = x;
        }
    }
    Ok(SymmetricEigen { values, vectors: out })
}

/// Combinatorial graph Laplacian `D − W`.
pub fn laplacian(w: &DenseMatrix) -> DenseMatrix {
    let n = w.rows;
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let deg: f64 = w.row(i).iter().sum();
        for j in 0..n {
            l[(i, j)] = -w[(i, j)];
        }
        l[(i, i)] += deg;
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        DenseMatrix::from_vec(rows, cols, data).unwrap()
    }

    fn gram(m: &DenseMatrix) -> DenseMatrix {
        m.transpose().matmul(m).unwrap()
    }

    fn assert_orthonormal_columns(m: &DenseMatrix, tol: f64) {
        let g = gram(m);
        let err = g.sub(&DenseMatrix::identity(m.cols())).unwrap().frobenius_norm();
        assert!(err < tol, "orthonormality error {err}");
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let s = svd(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn rank_one_product() {
        // ‖u‖ = 2, ‖v‖ = 3
        let u = [2.0 / 3.0_f64.sqrt(); 3];
        let v = [0.0, 3.0 / 2.0_f64.sqrt(), -3.0 / 2.0_f64.sqrt()];
        let rows: Vec<Vec<f64>> = u.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
        let m = DenseMatrix::from_rows(&rows).unwrap();
        let s = svd(&m).unwrap();
        assert!((s.singular_values[0] - 6.0).abs() < 1e-10);
        assert!(s.singular_values[1].abs() < 1e-10);
        assert!(s.singular_values[2].abs() < 1e-10);
        assert_orthonormal_columns(&s.left, 1e-10);
        assert_orthonormal_columns(&s.right, 1e-10);
        assert!(rank_one_residual(&m, &s).unwrap() < 1e-10);
    }

    #[test]
    fn random_5x4_against_gram_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random(5, 4, &mut rng);
        let s = svd(&m).unwrap();
        let rec = s.reconstruct().sub(&m).unwrap().frobenius_norm();
        assert!(rec < 1e-10, "reconstruction {rec}");
        assert_orthonormal_columns(&s.left, 1e-10);
        // σ² are the eigenvalues of mᵀm; the oracle uses the eigensolver path
        let eig = symmetric_eigen(&gram(&m), 4).unwrap();
        let mut from_gram: Vec<f64> = eig.values.iter().map(|l| l.max(0.0).sqrt()).collect();
        from_gram.reverse();
        for (a, b) in s.singular_values.iter().zip(&from_gram) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn wide_matrix_is_handled_by_transposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random(3, 7, &mut rng);
        let s = svd(&m).unwrap();
        assert_eq!(s.left.rows(), 3);
        assert_eq!(s.right.rows(), 7);
        assert_eq!(s.singular_values.len(), 3);
        assert!(s.reconstruct().sub(&m).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn sign_convention_max_abs_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random(6, 4, &mut rng);
        let s = svd(&m).unwrap();
        for j in 0..s.left.cols() {
            let c = s.left.column(j);
            assert!(c[max_abs_index(&c)] > 0.0);
        }
    }

    #[test]
    fn zero_matrix_still_has_orthonormal_factors() {
        let m = DenseMatrix::zeros(4, 3);
        let s = svd(&m).unwrap();
        assert!(s.singular_values.iter().all(|&v| v == 0.0));
        assert_orthonormal_columns(&s.left, 1e-12);
        assert_orthonormal_columns(&s.right, 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        let m = DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(svd(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn diagonal_residual_is_tail_energy() {
        let m = DenseMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        let s = svd(&m).unwrap();
        let r = rank_one_residual(&m, &s).unwrap();
        assert!((r - 5.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn eckart_young_against_random_rank_one_competitors() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let m = random(6, 4, &mut rng);
        let s = svd(&m).unwrap();
        let best = rank_one_residual(&m, &s).unwrap();
        let scale = s.singular_values[0];
        for _ in 0..1000 {
            let u: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nu = dot(&u, &u).sqrt();
            let nv = dot(&v, &v).sqrt();
            let amp = scale * rng.random_range(0.0..1.5);
            let mut diff = m.clone();
            for i in 0..6 {
                for j in 0..4 {
                    diff[(i, j)] -= amp * u[i] * v[j] / (nu * nv);
                }
            }
            assert!(best <= diff.frobenius_norm() + 1e-12);
        }
    }

    #[test]
    fn eigen_of_diagonal() {
        let m = DenseMatrix::from_diagonal(&[1.0, 3.0]);
        let e = symmetric_eigen(&m, 1).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.vectors[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(e.vectors[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn connected_laplacian_has_zero_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 7;
        let mut w = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let x = rng.random_range(0.1..1.0);
                w[(i, j)] = x;
                w[(j, i)] = x;
            }
        }
        let e = symmetric_eigen(&laplacian(&w), 1).unwrap();
        assert!(e.values[0].abs() < 1e-10);
    }

    /// Characteristic polynomial of the 6x6 two-clique Laplacian, evaluated
    /// through a determinant by Gaussian elimination, vanishes to second
    /// order at zero: p(0) = p'(0) = 0 but p''(0) != 0.
    #[test]
    fn two_cliques_have_two_zero_eigenvalues() {
        let mut w = DenseMatrix::zeros(6, 6);
        for block in [0usize, 3] {
            for i in block..block + 3 {
                for j in block..block + 3 {
                    if i != j {
                        w[(i, j)] = 1.0;
                    }
                }
            }
        }
        let l = laplacian(&w);
        let det = |x: f64| -> f64 {
            let mut a = l.clone();
            for i in 0..6 {
                a[(i, i)] -= x;
            }
            let mut d = 1.0;
            for c in 0..6 {
                let p = (c..6).max_by(|&i, &j| a[(i, c)].abs().total_cmp(&a[(j, c)].abs())).unwrap();
                if a[(p, c)] == 0.0 {
                    return 0.0;
                }
                if p != c {
                    for k in 0..6 {
                        let t = a[(c, k)];
                        a[(c, k)] = a[(p, k)];
                        a[(p, k)] = t;
                    }
                    d = -d;
                }
                d *= a[(c, c)];
                for r in c + 1..6 {
                    let f = a[(r, c)] / a[(c, c)];
                    for k in c..6 {
                        a[(r, k)] -= f * a[(c, k)];
                    }
                }
            }
            d
        };
        let h = 1e-3;
        // p(x) = x² (x−3)⁴ for two K3 blocks
        assert!((det(h) - h * h * (h - 3.0).powi(4)).abs() < 1e-9);
        assert!(det(0.0).abs() < 1e-9);
        let e = symmetric_eigen(&l, 3).unwrap();
        assert!(e.values[0].abs() < 1e-10 && e.values[1].abs() < 1e-10);
        assert!((e.values[2] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&m, 1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn svd_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random(8, 5, &mut rng);
        assert_eq!(svd(&m).unwrap(), svd(&m).unwrap());
    }
}
