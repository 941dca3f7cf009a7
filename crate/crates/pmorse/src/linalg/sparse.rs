//! Compressed sparse row storage for the symmetric FEM matrices.
//!
//! All matrices assembled in this crate (stiffness, mass, the quadratic-form
//! matrices) share one adjacency pattern per mesh, which lets the direct
//! solver reuse a single symbolic factorization.

use nalgebra::DMatrix;

/// Square sparse matrix in CSR format with sorted column indices per row.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Build from unsorted (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &mut Vec<(usize, usize, f64)>) -> Csr {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut counts = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(i, j, v) in triplets.iter() {
            debug_assert!(i < n && j < n);
            if prev == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                counts[i + 1] += 1;
                prev = Some((i, j));
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        Csr { n, indptr: counts, indices, data }
    }

    /// Same sparsity pattern, all values zero.
    pub fn zeros_like(&self) -> Csr {
        Csr { n: self.n, indptr: self.indptr.clone(), indices: self.indices.clone(), data: vec![0.0; self.data.len()] }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// x' A y
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut row_acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                row_acc += v * y[j];
            }
            acc += x[i] * row_acc;
        }
        acc
    }

    /// self + t * other, requiring the exact same pattern.
    pub fn add_scaled(&self, other: &Csr, t: f64) -> Csr {
        assert_eq!(self.indptr, other.indptr, "pattern mismatch");
        assert_eq!(self.indices, other.indices, "pattern mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + t * b).collect();
        Csr { n: self.n, indptr: self.indptr.clone(), indices: self.indices.clone(), data }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Largest absolute diagonal entry; used to scale tolerances.
    pub fn max_abs_diag(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    m = m.max(v.abs());
                }
            }
        }
        m
    }

    /// Maximum asymmetry |A - A'| over present entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let vt = self.get(j, i);
                worst = worst.max((v - vt).abs());
            }
        }
        worst
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// P A P' for a permutation `perm` (new index -> old index).
    pub fn permuted(&self, perm: &[usize]) -> Csr {
        let n = self.n;
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut trips: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz());
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                trips.push((iperm[i], iperm[j], v));
            }
        }
        Csr::from_triplets(n, &mut trips)
    }
}
