use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NeuralError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("tape node {0} refers to a later node")]
    GraphCycle(usize),
}

/// Dense row-major tensor. Everything here is a matrix; vectors are 1 x n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Tensor {
        Tensor {
            shape: vec![rows, cols],
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Tensor, NeuralError> {
        if data.len() != rows * cols {
            return Err(NeuralError::ShapeMismatch {
                op: "from_vec",
                left: vec![rows, cols],
                right: vec![data.len()],
            });
        }
        Ok(Tensor {
            shape: vec![rows, cols],
            data,
        })
    }

    pub fn row_vector(data: Vec<f64>) -> Tensor {
        Tensor {
            shape: vec![1, data.len()],
            data,
        }
    }

    pub fn scalar(x: f64) -> Tensor {
        Tensor::row_vector(vec![x])
    }

    pub fn identity(n: usize) -> Tensor {
        let mut t = Tensor::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn fill(&mut self, x: f64) {
        self.data.iter_mut().for_each(|v| *v = x);
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, other: &Tensor, alpha: f64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }
}

/// `c = a * b + beta * c` with explicit strides, so transposes are free.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|x| *x *= beta);
        return;
    }
    assert!(c.len() >= m * n);
    // SAFETY: the strides describe matrices that lie inside the given
    // slices, which the callers derive from checked tensor shapes.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Plain dense product of row-major matrices.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor, NeuralError> {
    if a.cols() != b.rows() {
        return Err(NeuralError::ShapeMismatch {
            op: "matmul",
            left: a.shape.clone(),
            right: b.shape.clone(),
        });
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = Tensor::zeros(m, n);
    gemm(
        m,
        k,
        n,
        &a.data,
        k as isize,
        1,
        &b.data,
        n as isize,
        1,
        0.0,
        &mut out.data,
    );
    Ok(out)
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> SparseMatrix {
        let mut t: Vec<(usize, usize, f64)> = triplets.to_vec();
        t.sort_by_key(|e| (e.0, e.1));
        let mut indptr = vec![0; n_rows + 1];
        let mut indices: Vec<usize> = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            indptr[r + 1] += indptr[r];
        }
        SparseMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// `out += self * x` where x is n_cols x d.
    pub(crate) fn mul_dense_into(&self, x: &[f64], d: usize, out: &mut [f64]) {
        for r in 0..self.n_rows {
            let o = &mut out[r * d..(r + 1) * d];
            for (c, v) in self.row(r) {
                for (oi, xi) in o.iter_mut().zip(&x[c * d..(c + 1) * d]) {
                    *oi += v * xi;
                }
            }
        }
    }

    /// `out += self^T * g` where g is n_rows x d.
    pub(crate) fn mul_t_dense_into(&self, g: &[f64], d: usize, out: &mut [f64]) {
        for r in 0..self.n_rows {
            let gr = &g[r * d..(r + 1) * d];
            for (c, v) in self.row(r) {
                for (oi, gi) in out[c * d..(c + 1) * d].iter_mut().zip(gr) {
                    *oi += v * gi;
                }
            }
        }
    }

    pub fn to_dense(&self) -> Tensor {
        let mut t = Tensor::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                t.data[r * self.n_cols + c] += v;
            }
        }
        t
    }
}

/// `D^-1/2 (A + I) D^-1/2` for a symmetric weighted edge list over `n`
/// nodes, with degrees taken from the weights plus the unit self-loop.
pub fn gcn_normalized_adjacency(n: usize, edges: &[(usize, usize, f64)]) -> SparseMatrix {
    let mut deg = vec![1.0; n];
    for &(i, j, w) in edges {
        deg[i] += w;
        if i != j {
            deg[j] += w;
        }
    }
    let mut t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0 / deg[i])).collect();
    for &(i, j, w) in edges {
        let v = w / (deg[i] * deg[j]).sqrt();
        t.push((i, j, v));
        if i != j {
            t.push((j, i, v));
        }
    }
    SparseMatrix::from_triplets(n, n, &t)
}

/// Symmetric weighted adjacency without self-loops.
pub fn adjacency(n: usize, edges: &[(usize, usize, f64)]) -> SparseMatrix {
    let mut t = Vec::with_capacity(edges.len() * 2);
    for &(i, j, w) in edges {
        t.push((i, j, w));
        if i != j {
            t.push((j, i, w));
        }
    }
    SparseMatrix::from_triplets(n, n, &t)
}

/// Weighted adjacency with each row scaled to sum to 1, so aggregation is
/// a weighted mean. Rows without positive weight stay empty.
pub fn mean_adjacency(n: usize, edges: &[(usize, usize, f64)]) -> SparseMatrix {
    let mut total = vec![0.0; n];
    for &(i, j, w) in edges {
        total[i] += w;
        if i != j {
            total[j] += w;
        }
    }
    let mut t = Vec::with_capacity(edges.len() * 2);
    for &(i, j, w) in edges {
        if total[i] > 0.0 {
            t.push((i, j, w / total[i]));
        }
        if i != j && total[j] > 0.0 {
            t.push((j, i, w / total[j]));
        }
    }
    SparseMatrix::from_triplets(n, n, &t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_adjacency_rows() {
        let a = mean_adjacency(3, &[(0, 1, 1.0), (0, 2, 3.0)]).to_dense();
        assert_eq!(a.row(0), &[0.0, 0.25, 0.75]);
        assert_eq!(a.row(1), &[1.0, 0.0, 0.0]);
        assert_eq!(a.row(2), &[1.0, 0.0, 0.0]);
        let lone = mean_adjacency(2, &[(0, 1, 0.0)]).to_dense();
        assert!(lone.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn matmul_small() {
        let a = Tensor::from_vec(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Tensor::from_vec(3, 2, vec![7., 8., 9., 10., 11., 12.]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[58., 64., 139., 154.]);
        assert!(matmul(&a, &a).is_err());
    }

    #[test]
    fn normalized_adjacency_two_nodes() {
        let a = gcn_normalized_adjacency(2, &[(0, 1, 1.0)]).to_dense();
        assert_eq!(a.data(), &[0.5, 0.5, 0.5, 0.5]);
        let single = gcn_normalized_adjacency(1, &[]).to_dense();
        assert_eq!(single.data(), &[1.0]);
    }

    #[test]
    fn sparse_products_match_dense() {
        let s = SparseMatrix::from_triplets(2, 3, &[(0, 2, 2.0), (1, 0, -1.0), (0, 2, 1.0)]);
        assert_eq!(s.nnz(), 2);
        let x = [1., 2., 3., 4., 5., 6.];
        let mut out = vec![0.0; 4];
        s.mul_dense_into(&x, 2, &mut out);
        let dense = matmul(&s.to_dense(), &Tensor::from_vec(3, 2, x.to_vec()).unwrap()).unwrap();
        assert_eq!(out, dense.data());
        let g = [1., 1., 2., 0.];
        let mut back = vec![0.0; 6];
        s.mul_t_dense_into(&g, 2, &mut back);
        assert_eq!(back, vec![-2., 0., 0., 0., 3., 3.]);
    }
}
