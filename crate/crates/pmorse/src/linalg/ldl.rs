//! Sparse LDL' factorization (up-looking, elimination-tree based) with a
//! reusable symbolic phase.
//!
//! Works for symmetric indefinite matrices without pivoting, which is what
//! the inertia counts for the Morse index need: the number of negative
//! entries of D equals the number of eigenvalues of `A` below zero
//! (Sylvester's law), and shifting `A - sigma S` moves the count to any
//! target `sigma` of the pencil.

use super::rcm::reverse_cuthill_mckee;
use super::sparse::Csr;
use crate::error::{Error, Result};

/// Elimination tree and column counts for a fixed sparsity pattern, computed
/// on the RCM-permuted matrix. One instance serves every matrix with the
/// same adjacency (stiffness, mass, quadratic forms, shifted pencils).
#[derive(Debug, Clone)]
pub struct SymbolicLdl {
    pub n: usize,
    /// new index -> old index
    pub perm: Vec<usize>,
    /// old index -> new index
    pub iperm: Vec<usize>,
    parent: Vec<isize>,
    lp: Vec<usize>,
    /// pattern of the permuted matrix
    pattern: Csr,
}

impl SymbolicLdl {
    pub fn analyze(pattern: &Csr) -> SymbolicLdl {
        let n = pattern.n;
        let perm = reverse_cuthill_mckee(pattern);
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let p = pattern.permuted(&perm);

        let mut parent = vec![-1isize; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            let (cols, _) = p.row(k);
            for &j in cols {
                if j >= k {
                    continue;
                }
                let mut i = j;
                while flag[i] != k {
                    if parent[i] == -1 {
                        parent[i] = k as isize;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i] as usize;
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        SymbolicLdl { n, perm, iperm, parent, lp, pattern: p }
    }

    /// Numeric factorization of a matrix sharing the analyzed pattern.
    /// `matrix` is given in the ORIGINAL (unpermuted) ordering.
    pub fn factor(&self, matrix: &Csr) -> Result<LdlFactor> {
        assert_eq!(matrix.n, self.n);
        let n = self.n;
        let mut li = vec![0usize; self.lp[n]];
        let mut lx = vec![0.0f64; self.lp[n]];
        let mut d = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        let mut pattern_stack = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz_used = vec![0usize; n];

        for k in 0..n {
            // scatter row k of the permuted matrix (upper part) into y
            let mut top = n;
            flag[k] = k;
            y[k] = 0.0;
            let old_row = self.perm[k];
            let (cols, vals) = matrix.row(old_row);
            for (&cj, &v) in cols.iter().zip(vals) {
                let j = self.iperm[cj];
                if j > k {
                    continue;
                }
                y[j] += v;
                // walk up the etree, collecting the pattern in reverse
                let mut len = 0usize;
                let mut i = j;
                while flag[i] != k {
                    pattern_stack[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = self.parent[i] as usize;
                }
                // move collected chain to the top of the stack (topological order)
                for l in (0..len).rev() {
                    top -= 1;
                    pattern_stack[top] = pattern_stack[l];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern_stack[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let p0 = self.lp[i];
                let p1 = self.lp[i] + lnz_used[i];
                let mut yk_update = yi;
                // y -= L(:,i) * yi  restricted to rows below i
                for p in p0..p1 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                yk_update *= l_ki;
                d[k] -= yk_update;
                li[p1] = k;
                lx[p1] = l_ki;
                lnz_used[i] += 1;
            }
            if d[k] == 0.0 {
                return Err(Error::Linalg(format!("zero pivot at column {k} during LDL")));
            }
        }
        Ok(LdlFactor { n, lp: self.lp.clone(), li, lx, d, perm: self.perm.clone() })
    }

    pub fn pattern(&self) -> &Csr {
        &self.pattern
    }
}

/// Numeric LDL' factor with the permutation baked in.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    pub d: Vec<f64>,
    perm: Vec<usize>,
}

impl LdlFactor {
    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[k] = b[self.perm[k]];
        }
        for k in 0..n {
            let xk = x[k];
            for p in self.lp[k]..self.lp[k + 1] {
                x[self.li[p]] -= self.lx[p] * xk;
            }
        }
        for k in 0..n {
            x[k] /= self.d[k];
        }
        for k in (0..n).rev() {
            let mut xk = x[k];
            for p in self.lp[k]..self.lp[k + 1] {
                xk -= self.lx[p] * x[self.li[p]];
            }
            x[k] = xk;
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.perm[k]] = x[k];
        }
        out
    }

    /// (negative, near-zero, positive) counts of D against `zero_tol`.
    pub fn inertia(&self, zero_tol: f64) -> (usize, usize, usize) {
        let mut neg = 0;
        let mut zero = 0;
        let mut pos = 0;
        for &di in &self.d {
            if di < -zero_tol {
                neg += 1;
            } else if di > zero_tol {
                pos += 1;
            } else {
                zero += 1;
            }
        }
        (neg, zero, pos)
    }

    /// Smallest |d_k|, as a conditioning indicator for shifted factorizations.
    pub fn min_abs_pivot(&self) -> f64 {
        self.d.iter().fold(f64::INFINITY, |m, &v| m.min(v.abs()))
    }
}
