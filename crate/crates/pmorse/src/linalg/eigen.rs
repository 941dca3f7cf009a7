//! Generalized symmetric eigenvalue machinery for pencils (B, S) with S
//! positive definite.
//!
//! Production path: inertia counts from shifted LDL' factorizations plus
//! shift-invert Lanczos in the S-inner product for the lowest eigenpairs.
//! Oracle path: dense reduction via Cholesky of S, used as the independent
//! route on small meshes.

use super::ldl::{LdlFactor, SymbolicLdl};
use super::sparse::Csr;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Eigenvalues (ascending) and S-orthonormal eigenvectors of B z = lambda S z,
/// by dense Cholesky reduction. The independent oracle route.
pub fn dense_generalized(b: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = b.nrows();
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Linalg("S not positive definite in dense reduction".into()))?;
    let l = chol.l();
    // C = L^{-1} B L^{-T}
    let x = l
        .solve_lower_triangular(b)
        .ok_or_else(|| Error::Linalg("singular triangular factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Linalg("singular triangular factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let lt = l.transpose();
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &k in &order {
        values.push(eig.eigenvalues[k]);
        let y = eig.eigenvectors.column(k).into_owned();
        let z = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Linalg("singular triangular factor".into()))?;
        vectors.push(z.iter().copied().collect());
    }
    Ok((values, vectors))
}

/// Count eigenvalues of the pencil strictly below `sigma` via the inertia of
/// B - sigma S. Exact modulo pivot conditioning; a breakdown is retried with
/// a slightly moved shift.
pub fn count_below(b: &Csr, s: &Csr, symb: &SymbolicLdl, sigma: f64, scale: f64) -> Result<usize> {
    let mut shift = sigma;
    let mut last_err = None;
    for attempt in 0..6 {
        let shifted = b.add_scaled(s, -shift);
        match symb.factor(&shifted) {
            Ok(f) => {
                if f.min_abs_pivot() > 1e-13 * scale.max(1e-300) {
                    let (neg, _, _) = f.inertia(0.0);
                    return Ok(neg);
                }
            }
            Err(e) => last_err = Some(e),
        }
        // nudge away from a near-singular shift, keeping the same side
        let step = scale * 1e-10 * 4f64.powi(attempt + 1);
        shift = sigma + if sigma <= 0.0 { -step } else { step };
    }
    Err(last_err.unwrap_or_else(|| Error::Linalg("inertia count failed: persistent tiny pivots".into())))
}

/// The `k` algebraically smallest eigenpairs of B z = lambda S z.
///
/// A shift below the bottom of the spectrum is located by inertia probing,
/// then shift-invert Lanczos in the S-inner product makes the smallest
/// eigenvalues the extreme (largest) ones of the inverted operator.
pub fn lowest_eigenpairs(
    b: &Csr,
    s: &Csr,
    symb: &SymbolicLdl,
    k: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = b.n;
    let k = k.min(n);
    if k == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let scale = b.max_abs_diag().max(s.max_abs_diag()).max(1e-300);

    // probe downward until no eigenvalue lies below the shift
    let mut sigma = -1e-8 * scale;
    let mut factor: Option<LdlFactor> = None;
    for _ in 0..60 {
        let shifted = b.add_scaled(s, -sigma);
        if let Ok(f) = symb.factor(&shifted) {
            if f.min_abs_pivot() > 1e-13 * scale {
                let (neg, _, _) = f.inertia(0.0);
                if neg == 0 {
                    factor = Some(f);
                    break;
                }
            }
        }
        sigma *= 4.0;
    }
    let factor = factor.ok_or_else(|| Error::Linalg("no shift below the spectrum found".into()))?;

    lanczos_shift_invert(b, s, &factor, sigma, k, seed, n.min(320))
}

/// S-inner-product Lanczos on (B - sigma S)^{-1} S with full
/// reorthogonalization. Assumes sigma is strictly below the spectrum, so the
/// wanted eigenvalues map to the largest of the inverted operator.
fn lanczos_shift_invert(
    b: &Csr,
    s: &Csr,
    factor: &LdlFactor,
    sigma: f64,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    use rand::prelude::*;
    let n = b.n;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();

    let mut qs: Vec<Vec<f64>> = Vec::new();
    let mut sqs: Vec<Vec<f64>> = Vec::new(); // S * q_j cached
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let s_norm = |x: &[f64], sx: &[f64]| -> f64 { x.iter().zip(sx).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt() };

    let mut sv = s.matvec(&v);
    let nrm = s_norm(&v, &sv);
    if nrm <= 0.0 {
        return Err(Error::Linalg("degenerate start vector".into()));
    }
    for x in v.iter_mut() {
        *x /= nrm;
    }
    for x in sv.iter_mut() {
        *x /= nrm;
    }
    qs.push(v.clone());
    sqs.push(sv.clone());

    let m_target = k + 1;
    let mut tri_vals: Option<(Vec<f64>, DMatrix<f64>)> = None;
    for j in 0..max_iter {
        // w = (B - sigma S)^{-1} S q_j
        let mut w = factor.solve(&sqs[j]);
        let alpha: f64 = w.iter().zip(&sqs[j]).map(|(a, b)| a * b).sum();
        alphas.push(alpha);
        // full reorthogonalization in the S-inner product (twice for safety)
        for _ in 0..2 {
            for (q, sq) in qs.iter().zip(&sqs) {
                let c: f64 = w.iter().zip(sq).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let sw = s.matvec(&w);
        let beta = s_norm(&w, &sw);
        // convergence test on the tridiagonal Ritz pairs
        let m = alphas.len();
        if m >= m_target || beta <= 1e-14 {
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alphas[i];
                if i + 1 < m {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = t.symmetric_eigen();
            let mut order: Vec<usize> = (0..m).collect();
            // largest nu of the inverted operator = smallest lambda
            order.sort_by(|&a, &c| eig.eigenvalues[c].partial_cmp(&eig.eigenvalues[a]).unwrap());
            let converged = order
                .iter()
                .take(k)
                .all(|&idx| {
                    let nu = eig.eigenvalues[idx];
                    let bound = beta * eig.eigenvectors[(m - 1, idx)].abs();
                    nu > 0.0 && bound <= 1e-11 * nu.abs().max(1e-30)
                });
            if (converged && m >= k) || beta <= 1e-14 || m == max_iter {
                tri_vals = Some((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.clone()));
                break;
            }
        }
        betas.push(beta);
        if beta <= 1e-14 {
            break;
        }
        for x in w.iter_mut() {
            *x /= beta;
        }
        let swn: Vec<f64> = sw.iter().map(|x| x / beta).collect();
        qs.push(w);
        sqs.push(swn);
    }

    let (tvals, tvecs) = match tri_vals {
        Some(tv) => tv,
        None => {
            // assemble from whatever Krylov space we have
            let m = alphas.len();
            if m == 0 {
                return Err(Error::Linalg("Lanczos failed to start".into()));
            }
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alphas[i];
                if i + 1 < m {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = t.symmetric_eigen();
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.clone())
        }
    };

    let m = tvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &c| tvals[c].partial_cmp(&tvals[a]).unwrap());
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let nu = tvals[idx];
        if nu <= 0.0 {
            // shift was below the spectrum, so every Ritz value should be
            // positive; a nonpositive one is a failed direction
            continue;
        }
        let lambda = sigma + 1.0 / nu;
        let mut z = vec![0.0; b.n];
        for (j, q) in qs.iter().enumerate().take(m) {
            let c = tvecs[(j, idx)];
            for (zi, qi) in z.iter_mut().zip(q) {
                *zi += c * qi;
            }
        }
        // normalize in S
        let sz = s.matvec(&z);
        let nz = z.iter().zip(&sz).map(|(a, b)| a * b).sum::<f64>().max(1e-300).sqrt();
        for zi in z.iter_mut() {
            *zi /= nz;
        }
        values.push(lambda);
        vectors.push(z);
    }
    if values.len() < k {
        return Err(Error::Linalg(format!(
            "Lanczos returned {} of {} requested eigenpairs",
            values.len(),
            k
        )));
    }
    Ok((values, vectors))
}

/// Smallest Rayleigh quotient z'Bz / z'Sz subject to the linear constraints
/// C' z = 0 (columns of `constraints`), by a projected three-term recurrence
/// (LOBPCG with block size one) preconditioned with (B - sigma S)^{-1} for a
/// shift strictly below the spectrum, which keeps the preconditioner
/// positive definite.
pub fn constrained_smallest(
    b: &Csr,
    s: &Csr,
    constraints: &[Vec<f64>],
    symb: &SymbolicLdl,
    seed: u64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>)> {
    use rand::prelude::*;
    let n = b.n;
    let k = constraints.len();
    let scale_probe = b.max_abs_diag().max(s.max_abs_diag()).max(1e-300);
    let mut sigma = -1e-8 * scale_probe;
    let mut precond: Option<LdlFactor> = None;
    for _ in 0..60 {
        let shifted = b.add_scaled(s, -sigma);
        if let Ok(f) = symb.factor(&shifted) {
            if f.min_abs_pivot() > 1e-13 * scale_probe {
                let (neg, _, _) = f.inertia(0.0);
                if neg == 0 {
                    precond = Some(f);
                    break;
                }
            }
        }
        sigma *= 4.0;
    }
    let precond =
        precond.ok_or_else(|| Error::Linalg("no shift below the spectrum found".into()))?;

    // Euclidean-orthonormalize the constraint columns once
    let mut cbasis: Vec<Vec<f64>> = Vec::with_capacity(k);
    for c in constraints {
        let mut v = c.clone();
        for q in &cbasis {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= d * qi;
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv > 1e-14 {
            for vi in v.iter_mut() {
                *vi /= nv;
            }
            cbasis.push(v);
        }
    }
    let project = |x: &mut Vec<f64>| {
        for q in &cbasis {
            let d: f64 = x.iter().zip(q).map(|(a, b)| a * b).sum();
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi -= d * qi;
            }
        }
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    project(&mut x);
    let s_dot = |a: &[f64], m: &Csr, c: &[f64]| -> f64 { m.bilinear(a, c) };
    let nx = s_dot(&x, s, &x).sqrt();
    if !(nx > 0.0) {
        return Err(Error::Linalg("constraint set spans the whole space".into()));
    }
    for xi in x.iter_mut() {
        *xi /= nx;
    }

    let mut prev: Option<Vec<f64>> = None;
    let mut rho = s_dot(&x, b, &x);
    let scale = b.max_abs_diag().max(1.0);
    let mut stall_count = 0;
    for _ in 0..max_iter {
        // constrained stationarity: the projected residual must vanish
        let bx = b.matvec(&x);
        let sx = s.matvec(&x);
        let mut r: Vec<f64> = bx.iter().zip(&sx).map(|(bi, si)| bi - rho * si).collect();
        project(&mut r);
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= 1e-11 * scale {
            break;
        }
        let mut d = precond.solve(&r);
        project(&mut d);

        // Rayleigh-Ritz over span{x, d, prev}
        let mut basis: Vec<Vec<f64>> = vec![x.clone(), d];
        if let Some(p) = &prev {
            basis.push(p.clone());
        }
        // S-orthonormalize the basis
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        let mut s_ortho: Vec<Vec<f64>> = Vec::new();
        for mut v in basis {
            for _ in 0..2 {
                for (q, sq) in ortho.iter().zip(&s_ortho) {
                    let c: f64 = v.iter().zip(sq.iter()).map(|(a, b)| a * b).sum();
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let sv = s.matvec(&v);
            let nv = v.iter().zip(&sv).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
            if nv > 1e-12 {
                let inv = 1.0 / nv;
                ortho.push(v.iter().map(|a| a * inv).collect());
                s_ortho.push(sv.iter().map(|a| a * inv).collect());
            }
        }
        let m = ortho.len();
        if m == 0 {
            break;
        }
        let mut tb = DMatrix::zeros(m, m);
        let bva: Vec<Vec<f64>> = ortho.iter().map(|v| b.matvec(v)).collect();
        for i in 0..m {
            for j in 0..m {
                tb[(i, j)] = ortho[i].iter().zip(&bva[j]).map(|(a, c)| a * c).sum();
            }
        }
        let tb = (&tb + tb.transpose()) * 0.5;
        let eig = tb.symmetric_eigen();
        let mut best = 0;
        for i in 1..m {
            if eig.eigenvalues[i] < eig.eigenvalues[best] {
                best = i;
            }
        }
        let y: DVector<f64> = eig.eigenvectors.column(best).into_owned();
        let mut xn = vec![0.0; n];
        for (j, q) in ortho.iter().enumerate() {
            for (xi, qi) in xn.iter_mut().zip(q) {
                *xi += y[j] * qi;
            }
        }
        project(&mut xn);
        let nxn = s_dot(&xn, s, &xn).sqrt();
        if !(nxn > 1e-14) {
            break;
        }
        for v in xn.iter_mut() {
            *v /= nxn;
        }
        let rho_new = s_dot(&xn, b, &xn);
        if (rho - rho_new).abs() <= 1e-14 * rho.abs().max(scale * 1e-10) {
            stall_count += 1;
        } else {
            stall_count = 0;
        }
        prev = Some(x);
        x = xn;
        rho = rho_new;
        if stall_count >= 5 {
            break;
        }
    }
    Ok((rho, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn pencil(n: usize, seed: u64) -> (Csr, Csr) {
        // B: 1D Laplacian minus a potential well; S: diagonal-dominant SPD
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tb = Vec::new();
        let mut ts = Vec::new();
        for i in 0..n {
            let well = if i > n / 3 && i < 2 * n / 3 { -1.3 } else { 0.0 };
            tb.push((i, i, 2.0 + well));
            ts.push((i, i, 1.0 + 0.3 * rng.gen::<f64>()));
            if i + 1 < n {
                tb.push((i, i + 1, -1.0));
                tb.push((i + 1, i, -1.0));
                let c = 0.1 * rng.gen::<f64>();
                ts.push((i, i + 1, c));
                ts.push((i + 1, i, c));
            }
        }
        (Csr::from_triplets(n, &mut tb), Csr::from_triplets(n, &mut ts))
    }

    #[test]
    fn lanczos_matches_dense_lowest() {
        let (b, s) = pencil(80, 3);
        let symb = SymbolicLdl::analyze(&b);
        let (vals, vecs) = lowest_eigenpairs(&b, &s, &symb, 4, 11).unwrap();
        let (dvals, _) = dense_generalized(&b.to_dense(), &s.to_dense()).unwrap();
        for i in 0..4 {
            assert!(
                (vals[i] - dvals[i]).abs() <= 1e-8 * (1.0 + dvals[i].abs()),
                "i={i}: {} vs {}",
                vals[i],
                dvals[i]
            );
        }
        // residual check on the first vector
        let r: Vec<f64> = b
            .matvec(&vecs[0])
            .iter()
            .zip(s.matvec(&vecs[0]).iter())
            .map(|(bi, si)| bi - vals[0] * si)
            .collect();
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(rn < 1e-7, "residual {rn}");
    }

    #[test]
    fn inertia_counts_match_dense() {
        let (b, s) = pencil(60, 5);
        let symb = SymbolicLdl::analyze(&b);
        let scale = b.max_abs_diag();
        let (dvals, _) = dense_generalized(&b.to_dense(), &s.to_dense()).unwrap();
        for sigma in [-0.5, 0.0, 0.3, 1.0] {
            let count = count_below(&b, &s, &symb, sigma, scale).unwrap();
            let dense_count = dvals.iter().filter(|&&l| l < sigma).count();
            assert_eq!(count, dense_count, "sigma={sigma}");
        }
    }

    #[test]
    fn constrained_min_matches_dense_on_complement() {
        let (b, s) = pencil(50, 9);
        let symb = SymbolicLdl::analyze(&b);
        // constrain against the two lowest eigenvectors in a synthetic metric
        let (_, vecs) = lowest_eigenpairs(&b, &s, &symb, 2, 1).unwrap();
        let cons: Vec<Vec<f64>> = vecs.iter().map(|v| s.matvec(v)).collect();
        let (rho, x) = constrained_smallest(&b, &s, &cons, &symb, 4, 400).unwrap();
        // dense oracle: build an orthonormal basis of the nullspace of C'.
        // The constraint columns are not mutually orthogonal, so they are
        // orthonormalized before projecting.
        let n = b.n;
        let mut cortho: Vec<Vec<f64>> = Vec::new();
        for c in &cons {
            let mut v = c.clone();
            for q in &cortho {
                let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= d * qi;
                }
            }
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            for vi in v.iter_mut() {
                *vi /= nv;
            }
            cortho.push(v);
        }
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for i in 0..n {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            // two Gram-Schmidt passes, or the last candidates keep junk
            // components along the constrained directions
            for _ in 0..2 {
                for c in cortho.iter().chain(basis.iter()) {
                    let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
                    for (vi, ci) in v.iter_mut().zip(c) {
                        *vi -= d * ci;
                    }
                }
            }
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if nv > 1e-6 {
                for vi in v.iter_mut() {
                    *vi /= nv;
                }
                basis.push(v);
            }
        }
        assert_eq!(basis.len(), n - cons.len());
        let m = basis.len();
        let mut qb = DMatrix::zeros(m, m);
        let mut qs = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                qb[(i, j)] = b.bilinear(&basis[i], &basis[j]);
                qs[(i, j)] = s.bilinear(&basis[i], &basis[j]);
            }
        }
        let (dv, _) = dense_generalized(&qb, &qs).unwrap();
        assert!((rho - dv[0]).abs() <= 1e-6 * (1.0 + dv[0].abs()), "{rho} vs {}", dv[0]);
        // returned vector satisfies the constraints
        for c in &cons {
            let d: f64 = x.iter().zip(c).map(|(a, b)| a * b).sum();
            let cn: f64 = c.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(d.abs() <= 1e-8 * cn.max(1.0));
        }
    }
}
