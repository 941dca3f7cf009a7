//! The quadratic form of the regularized functional, Morse indices through
//! its generalized eigenvalues, and the finite-dimensional reduction onto
//! the near-degenerate subspace.
//!
//! The form is only bounded on the discrete H1_0 space for alpha > 0; at
//! alpha = 0 the kernels blow up where the gradient degenerates, so assembly
//! is refused there.

use crate::energy::ProblemParams;
use crate::error::{Error, Result};
use crate::fem::FemContext;
use crate::linalg::{constrained_smallest, count_below, dense_generalized, lowest_eigenpairs, Csr};
use crate::mesh::DiscreteField;
use crate::nonlinearity::gsecond_alpha;
use crate::solution::SolutionRecord;
use serde::Serialize;

/// Assembled quadratic form B (interior dofs) together with the H1_0 metric
/// S, the L2 mass matrix, and the state it was linearized at.
pub struct QuadFormPair {
    pub b: Csr,
    pub s: Csr,
    pub mass: Csr,
    pub alpha: f64,
    pub u: DiscreteField,
}

/// All five kernel terms. `mask` lets the test harness assemble any subset:
/// [gradient, gradient rank-one, mass, reaction chain, reaction shape].
pub fn assemble_b_terms(
    ctx: &FemContext,
    u: &DiscreteField,
    params: &ProblemParams,
    mask: [bool; 5],
) -> Result<Csr> {
    if !(params.alpha > 0.0) {
        return Err(Error::AlphaZero(
            "the quadratic form is only defined on the regularized problem".into(),
        ));
    }
    let mesh = &ctx.mesh;
    let p = params.p();
    let (eps, alpha) = (params.eps, params.alpha);
    let epsp = eps.powf(p);
    let nq = mesh.quad.weights.len();
    let n = mesh.n_interior();
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    for el in &mesh.elems {
        let nodal = [u.values[el.v[0]], u.values[el.v[1]], u.values[el.v[2]]];
        let g = el.gradient(&nodal);
        let g2 = g[0] * g[0] + g[1] * g[1];
        let kappa1 = (alpha + g2).powf(0.5 * (p - 2.0));
        let kappa2 = (alpha + g2).powf(0.5 * (p - 4.0));
        let mut local = [[0.0f64; 3]; 3];
        for a in 0..el.nv {
            for b in 0..el.nv {
                let mut val = 0.0;
                if mask[0] {
                    let dot = el.grads[a][0] * el.grads[b][0] + el.grads[a][1] * el.grads[b][1];
                    val += epsp * kappa1 * dot;
                }
                if mask[1] {
                    let da = g[0] * el.grads[a][0] + g[1] * el.grads[a][1];
                    let db = g[0] * el.grads[b][0] + g[1] * el.grads[b][1];
                    val -= epsp * (2.0 - p) * kappa2 * da * db;
                }
                local[a][b] = el.measure * val;
            }
        }
        for q in 0..nq {
            let uq = u.value_at(el, q);
            let mut kernel = 0.0;
            if mask[2] {
                kernel += gsecond_alpha(p, alpha, uq);
            }
            if mask[3] || mask[4] {
                let (chain, shape) = params.spec.f_alpha_prime_terms(alpha, uq);
                if mask[3] {
                    kernel -= chain;
                }
                if mask[4] {
                    kernel -= shape;
                }
            }
            if kernel != 0.0 {
                let w = el.measure * mesh.quad.weights[q];
                for a in 0..el.nv {
                    for b in 0..el.nv {
                        local[a][b] += w * kernel * mesh.quad.bary[q][a] * mesh.quad.bary[q][b];
                    }
                }
            }
        }
        for a in 0..el.nv {
            let ia = mesh.interior_index[el.v[a]];
            if ia == usize::MAX {
                continue;
            }
            for b in 0..el.nv {
                let ib = mesh.interior_index[el.v[b]];
                if ib == usize::MAX {
                    continue;
                }
                trips.push((ia, ib, local[a][b]));
            }
        }
    }
    Ok(Csr::from_triplets(n, &mut trips))
}

/// Assemble the full form at `u`. Requires alpha > 0.
pub fn assemble_b(ctx: &FemContext, u: &DiscreteField, params: &ProblemParams) -> Result<QuadFormPair> {
    let b = assemble_b_terms(ctx, u, params, [true; 5])?;
    debug_assert!(b.asymmetry() <= 1e-12 * b.max_abs_diag().max(1.0));
    Ok(QuadFormPair {
        b,
        s: ctx.stiffness.clone(),
        mass: ctx.mass.clone(),
        alpha: params.alpha,
        u: u.clone(),
    })
}

/// Spectral scale of the pencil (B, S): a deterministic power-iteration
/// estimate of the largest |lambda|.
pub fn spectral_scale(ctx: &FemContext, pair: &QuadFormPair) -> f64 {
    let n = pair.b.n;
    if n == 0 {
        return 1.0;
    }
    let mut x: Vec<f64> = (0..n).map(|i| ((i * 2654435761 + 1) % 1000) as f64 / 1000.0 - 0.5).collect();
    let mut rho: f64 = 1.0;
    for _ in 0..20 {
        let bx = pair.b.matvec(&x);
        let y = ctx.solve_stiffness(&bx);
        let ns = pair.s.bilinear(&y, &y).max(1e-300).sqrt();
        x = y.iter().map(|v| v / ns).collect();
        let num = pair.b.bilinear(&x, &x);
        let den = pair.s.bilinear(&x, &x).max(1e-300);
        rho = (num / den).abs();
    }
    rho.max(1e-12 * pair.b.max_abs_diag().max(1e-300))
}

#[derive(Debug, Clone, Serialize)]
pub struct MorseReport {
    pub m: usize,
    pub m_star: usize,
    pub delta_hat: f64,
    pub degeneracy_tol: f64,
    pub predicted_poly: Option<Vec<f64>>,
}

impl MorseReport {
    pub fn degenerate(&self) -> bool {
        self.m != self.m_star
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "m": self.m,
            "m_star": self.m_star,
            "delta_hat": self.delta_hat,
            "degeneracy_tol": self.degeneracy_tol,
            "predicted_poly": self.predicted_poly,
        })
    }
}

/// (m, m*) by inertia counts at the shifted pencils; exact within the
/// declared degeneracy tolerance.
pub fn morse_counts(ctx: &FemContext, pair: &QuadFormPair) -> Result<(usize, usize, f64)> {
    let scale = spectral_scale(ctx, pair);
    let tol = 1e-8 * scale;
    let m = count_below(&pair.b, &pair.s, &ctx.symbolic, -tol, scale)?;
    let m_star = count_below(&pair.b, &pair.s, &ctx.symbolic, tol, scale)?;
    Ok((m, m_star, tol))
}

/// Full index report: counts, the smallest eigenvalue beyond the
/// near-kernel, and the critical-group prediction when nondegenerate.
pub fn morse_index(ctx: &FemContext, pair: &QuadFormPair) -> Result<MorseReport> {
    let (m, m_star, tol) = morse_counts(ctx, pair)?;
    let split = split_vw(ctx, pair, tol)?;
    debug_assert_eq!(split.v_basis.len(), m_star);
    let report = MorseReport {
        m,
        m_star,
        delta_hat: split.delta_hat,
        degeneracy_tol: tol,
        predicted_poly: predict_critical_groups_counts(m, m_star),
    };
    Ok(report)
}

/// Dense-decomposition route for the same counts; the oracle on small
/// meshes and the fallback when the sparse path breaks down.
pub fn morse_counts_dense(ctx: &FemContext, pair: &QuadFormPair) -> Result<(usize, usize, f64)> {
    let scale = spectral_scale(ctx, pair);
    let tol = 1e-8 * scale;
    let (vals, _) = dense_generalized(&pair.b.to_dense(), &pair.s.to_dense())?;
    let m = vals.iter().filter(|&&l| l < -tol).count();
    let m_star = vals.iter().filter(|&&l| l <= tol).count();
    Ok((m, m_star, tol))
}

/// Critical-group prediction from the two indices: a single generator in
/// degree m when they agree, no prediction otherwise.
pub fn predict_critical_groups(report: &MorseReport) -> Option<Vec<f64>> {
    predict_critical_groups_counts(report.m, report.m_star)
}

fn predict_critical_groups_counts(m: usize, m_star: usize) -> Option<Vec<f64>> {
    if m == m_star {
        let mut poly = vec![0.0; m + 1];
        poly[m] = 1.0;
        Some(poly)
    } else {
        None
    }
}

/// The near-degenerate splitting: V spanned by the eigenvectors at or below
/// the degeneracy tolerance, W its L2-orthogonal complement, and the
/// smallest Rayleigh quotient of B over W.
pub struct VwSplit {
    /// interior-dof eigenvectors spanning V (S-orthonormal)
    pub v_basis: Vec<Vec<f64>>,
    /// mass-weighted constraint columns: w in W iff c . w = 0 for all c
    pub constraints: Vec<Vec<f64>>,
    /// eigenvalues of the V modes
    pub v_values: Vec<f64>,
    /// min of z'Bz / z'Sz over W
    pub delta_hat: f64,
    pub degeneracy_tol: f64,
}

pub fn split_vw(ctx: &FemContext, pair: &QuadFormPair, tol: f64) -> Result<VwSplit> {
    let scale = spectral_scale(ctx, pair);
    let m_star = count_below(&pair.b, &pair.s, &ctx.symbolic, tol, scale)?;
    let seed = 0x5eed ^ pair.b.nnz() as u64;
    // The V basis is taken from the L2 pencil B z = lambda M z: its
    // eigenvectors are mass-orthogonal, so the complement W is L2-orthogonal
    // to V by construction and the form is positive there as soon as the
    // modes at or below the tolerance are all in V. (The count m* itself is
    // metric-independent up to the tolerance band.)
    let (vals, vecs) = match lowest_eigenpairs(&pair.b, &pair.mass, &ctx.symbolic, m_star + 1, seed) {
        Ok(vv) => vv,
        Err(_) if pair.b.n <= 2500 => {
            let (vals, vecs) = dense_generalized(&pair.b.to_dense(), &pair.mass.to_dense())?;
            (vals[..m_star + 1].to_vec(), vecs[..m_star + 1].to_vec())
        }
        Err(e) => return Err(e),
    };
    let v_basis: Vec<Vec<f64>> = vecs[..m_star].to_vec();
    let v_values: Vec<f64> = vals[..m_star].to_vec();
    let constraints: Vec<Vec<f64>> = v_basis.iter().map(|v| pair.mass.matvec(v)).collect();
    let delta_hat = if m_star == 0 {
        // smallest Rayleigh quotient against the H1_0 metric
        let (svals, _) = lowest_eigenpairs(&pair.b, &pair.s, &ctx.symbolic, 1, seed)?;
        svals[0]
    } else {
        let (rho, _) =
            constrained_smallest(&pair.b, &pair.s, &constraints, &ctx.symbolic, seed, 600)?;
        rho
    };
    Ok(VwSplit { v_basis, constraints, v_values, delta_hat, degeneracy_tol: tol })
}

impl VwSplit {
    /// Remove the V components (oblique projection onto W along V): the
    /// result satisfies every L2 constraint.
    pub fn project_w(&self, x: &[f64], mass: &Csr) -> Vec<f64> {
        let k = self.v_basis.len();
        if k == 0 {
            return x.to_vec();
        }
        // solve (V' M V) a = V' M x, subtract V a
        let mut gram = nalgebra::DMatrix::zeros(k, k);
        for i in 0..k {
            let mv = mass.matvec(&self.v_basis[i]);
            for j in 0..k {
                gram[(i, j)] = self.v_basis[j].iter().zip(&mv).map(|(a, b)| a * b).sum();
            }
        }
        let rhs = nalgebra::DVector::from_iterator(
            k,
            self.constraints.iter().map(|c| c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()),
        );
        let sol = gram.lu().solve(&rhs).expect("V gram matrix is invertible");
        let mut out = x.to_vec();
        for (j, v) in self.v_basis.iter().enumerate() {
            for (o, vi) in out.iter_mut().zip(v) {
                *o -= sol[j] * vi;
            }
        }
        out
    }
}

/// Result of the W-restricted corrector at one V-coordinate.
pub struct ReducedPoint {
    pub psi: DiscreteField,
    pub total: DiscreteField,
    pub reduced_energy: f64,
    /// components of the free gradient against the V basis
    pub reduced_gradient: Vec<f64>,
    pub w_residual: f64,
    pub newton_steps: usize,
}

/// Solve the W-restricted stationarity at `u_i + v` and return the reduced
/// data. `v_coeffs` are coordinates in the split's V basis. The corrector is
/// a bordered Newton iteration; leaving the trust region (no convergence
/// within `budget`) is an error.
pub fn reduce_ls(
    ctx: &FemContext,
    params: &ProblemParams,
    u_i: &DiscreteField,
    split: &VwSplit,
    v_coeffs: &[f64],
    budget: usize,
) -> Result<ReducedPoint> {
    let k = split.v_basis.len();
    if v_coeffs.len() != k {
        return Err(Error::Usage(format!("expected {k} V coordinates")));
    }
    let n = ctx.mesh.n_interior();
    let mut v_dir = vec![0.0; n];
    for (c, basis) in v_coeffs.iter().zip(&split.v_basis) {
        for (vd, b) in v_dir.iter_mut().zip(basis) {
            *vd += c * b;
        }
    }
    let v_field = DiscreteField::from_interior(ctx.mesh.clone(), &v_dir);
    let mut base = u_i.clone();
    base.axpy(1.0, &v_field);

    let mut psi = vec![0.0; n];
    let mut mu = vec![0.0; k];
    let mut steps = 0;
    let mut res_norm = f64::INFINITY;
    for _ in 0..budget {
        steps += 1;
        let mut point = base.clone();
        let psi_field = DiscreteField::from_interior(ctx.mesh.clone(), &psi);
        point.axpy(1.0, &psi_field);
        let g = crate::energy::gradient(&point, params).interior_vec();
        // F1 = g - C mu ; F2 = C' psi
        let mut f1 = g.clone();
        for (m_j, c) in mu.iter().zip(&split.constraints) {
            for (f, ci) in f1.iter_mut().zip(c) {
                *f -= m_j * ci;
            }
        }
        let f2: Vec<f64> = split
            .constraints
            .iter()
            .map(|c| c.iter().zip(&psi).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let f1_field = DiscreteField::from_interior(ctx.mesh.clone(), &f1);
        res_norm =
            ctx.dual_norm(&f1_field) + f2.iter().map(|x| x * x).sum::<f64>().sqrt();
        if res_norm <= crate::nehari::TOL_RES {
            break;
        }
        let bmat = assemble_b_terms(ctx, &point, params, [true; 5])?;
        let factor = ctx.factor(&bmat).map_err(|e| {
            Error::TrustRadius(format!("singular W-restricted linearization: {e}"))
        })?;
        // bordered solve via the k x k Schur complement
        let binv_f1 = factor.solve(&f1);
        let binv_c: Vec<Vec<f64>> = split.constraints.iter().map(|c| factor.solve(c)).collect();
        let mut schur = nalgebra::DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                schur[(i, j)] =
                    split.constraints[i].iter().zip(&binv_c[j]).map(|(a, b)| a * b).sum();
            }
        }
        let mut rhs = nalgebra::DVector::zeros(k);
        for i in 0..k {
            let cf: f64 = split.constraints[i].iter().zip(&binv_f1).map(|(a, b)| a * b).sum();
            rhs[i] = cf - f2[i];
        }
        let dmu = if k > 0 {
            schur
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::TrustRadius("singular reduced Schur complement".into()))?
        } else {
            nalgebra::DVector::zeros(0)
        };
        // d_psi = B^{-1}(-F1 + C dmu)
        let mut rhs_psi: Vec<f64> = f1.iter().map(|x| -x).collect();
        for (j, c) in split.constraints.iter().enumerate() {
            for (r, ci) in rhs_psi.iter_mut().zip(c) {
                *r += dmu[j] * ci;
            }
        }
        let dpsi = factor.solve(&rhs_psi);
        for (p_i, d) in psi.iter_mut().zip(&dpsi) {
            *p_i += d;
        }
        for (m_i, d) in mu.iter_mut().zip(dmu.iter()) {
            *m_i += d;
        }
    }
    if res_norm > 10.0 * crate::nehari::TOL_RES {
        return Err(Error::TrustRadius(format!(
            "W-corrector stalled at residual {res_norm:.3e} after {steps} steps"
        )));
    }
    let psi_field = DiscreteField::from_interior(ctx.mesh.clone(), &psi);
    let mut total = base;
    total.axpy(1.0, &psi_field);
    let reduced_energy = crate::energy::energy(&total, params);
    let g = crate::energy::gradient(&total, params).interior_vec();
    let reduced_gradient: Vec<f64> = split
        .v_basis
        .iter()
        .map(|v| v.iter().zip(&g).map(|(a, b)| a * b).sum())
        .collect();
    Ok(ReducedPoint {
        psi: psi_field,
        total,
        reduced_energy,
        reduced_gradient,
        w_residual: res_norm,
        newton_steps: steps,
    })
}

/// The computable nondegeneracy content: no generalized eigenvalue inside
/// the tolerance band, i.e. m = m*.
pub fn nondegeneracy_certificate(
    ctx: &FemContext,
    record: &SolutionRecord,
    params: &ProblemParams,
) -> Result<bool> {
    let pair = assemble_b(ctx, &record.field, params)?;
    let (m, m_star, _) = morse_counts(ctx, &pair)?;
    Ok(m == m_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy;
    use crate::mesh::{build_mesh, DomainSpec};
    use crate::nonlinearity::NonlinearitySpec;
    use crate::Nonlinearity;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn spec() -> Nonlinearity {
        NonlinearitySpec::single_power(3.0, 1.5, 2).unwrap()
    }

    fn small_ctx() -> (Arc<crate::mesh::Mesh>, FemContext) {
        let mesh = build_mesh(DomainSpec::Disk { radius: 1.0 }, 0.24).unwrap();
        let ctx = FemContext::new(mesh.clone()).unwrap();
        (mesh, ctx)
    }

    fn random_field(mesh: &Arc<crate::mesh::Mesh>, seed: u64, amp: f64) -> DiscreteField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..mesh.n_nodes()).map(|_| amp * (rng.gen::<f64>() - 0.4)).collect();
        DiscreteField::from_values(mesh.clone(), values, false)
    }

    #[test]
    fn refuses_alpha_zero() {
        let (mesh, ctx) = small_ctx();
        let u = DiscreteField::zeros(mesh, false);
        let params = ProblemParams::i_eps(spec(), 0.3);
        assert!(matches!(assemble_b(&ctx, &u, &params), Err(Error::AlphaZero(_))));
    }

    #[test]
    fn form_at_zero_is_the_weighted_metric() {
        let (mesh, ctx) = small_ctx();
        let u = DiscreteField::zeros(mesh, false);
        let (eps, alpha) = (0.4, 1e-2);
        let params = ProblemParams::regularized(spec(), eps, alpha);
        let pair = assemble_b(&ctx, &u, &params).unwrap();
        let p = 1.5;
        let w = alpha.powf(0.5 * (p - 2.0));
        let expect = ctx.stiffness.to_dense() * (eps.powf(p) * w) + ctx.mass.to_dense() * w;
        let diff = (pair.b.to_dense() - expect).abs().max();
        assert!(diff <= 1e-12 * w, "mismatch {diff}");
        let (m, m_star, _) = morse_counts(&ctx, &pair).unwrap();
        assert_eq!((m, m_star), (0, 0));
        let report = morse_index(&ctx, &pair).unwrap();
        assert!(report.delta_hat > 0.0);
        assert_eq!(report.predicted_poly, Some(vec![1.0]));
    }

    #[test]
    fn form_is_symmetric_on_random_states() {
        let (mesh, ctx) = small_ctx();
        let params = ProblemParams::regularized(spec(), 0.3, 5e-2);
        for seed in 0..4 {
            let u = random_field(&mesh, seed, 1.0);
            let pair = assemble_b(&ctx, &u, &params).unwrap();
            assert!(pair.b.asymmetry() <= 1e-12 * pair.b.max_abs_diag());
        }
    }

    #[test]
    fn second_difference_consistency_by_term_group() {
        let (mesh, ctx) = small_ctx();
        let params = ProblemParams::regularized(spec(), 0.35, 1e-2);
        let tau = 1e-4;
        for seed in 0..6 {
            let u = random_field(&mesh, 100 + seed, 0.8);
            let z = random_field(&mesh, 200 + seed, 0.6);
            let bmat = assemble_b_terms(&ctx, &u, &params, [true; 5]).unwrap();
            let quad = bmat.bilinear(&z.interior_vec(), &z.interior_vec());
            let mut up = u.clone();
            up.axpy(tau, &z);
            let mut dn = u.clone();
            dn.axpy(-tau, &z);
            let fd = (energy(&up, &params) - 2.0 * energy(&u, &params) + energy(&dn, &params))
                / (tau * tau);
            assert!(
                (quad - fd).abs() <= 1e-3 * (1.0 + fd.abs()),
                "seed {seed}: {quad} vs {fd}"
            );
        }
    }

    #[test]
    fn gradient_kernel_grows_as_alpha_shrinks() {
        let p = 1.5;
        for g2 in [0.0f64, 0.3, 2.0] {
            let mut last = 0.0;
            for alpha in [1e-1f64, 1e-2, 1e-3, 1e-4] {
                let k = (alpha + g2).powf(0.5 * (p - 2.0));
                assert!(k > last, "kernel must increase as alpha decreases");
                last = k;
            }
        }
    }

    #[test]
    fn counts_invariant_under_interior_permutation() {
        let (mesh, ctx) = small_ctx();
        let params = ProblemParams::regularized(spec(), 0.3, 1e-2);
        let u = random_field(&mesh, 7, 1.0);
        let pair = assemble_b(&ctx, &u, &params).unwrap();
        let n = pair.b.n;
        // reverse permutation of the interior dofs
        let perm: Vec<usize> = (0..n).rev().collect();
        let bp = pair.b.permuted(&perm);
        let sp = pair.s.permuted(&perm);
        let (v1, _) = dense_generalized(&pair.b.to_dense(), &pair.s.to_dense()).unwrap();
        let (v2, _) = dense_generalized(&bp.to_dense(), &sp.to_dense()).unwrap();
        for (a, b) in v1.iter().zip(&v2) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn iterative_counts_match_dense_on_random_forms() {
        let (mesh, ctx) = small_ctx();
        assert!(mesh.n_interior() <= 400, "oracle regime");
        for seed in 0..6 {
            let params = ProblemParams::regularized(spec(), 0.25 + 0.05 * (seed % 3) as f64, 1e-2);
            let u = random_field(&mesh, 300 + seed, 1.2);
            let pair = assemble_b(&ctx, &u, &params).unwrap();
            let (m_i, ms_i, _) = morse_counts(&ctx, &pair).unwrap();
            let (m_d, ms_d, _) = morse_counts_dense(&ctx, &pair).unwrap();
            assert_eq!((m_i, ms_i), (m_d, ms_d), "seed {seed}");
        }
    }

    #[test]
    fn split_dimensions_and_l2_orthogonality() {
        let (mesh, ctx) = small_ctx();
        let params = ProblemParams::regularized(spec(), 0.3, 1e-2);
        // a state with some negative directions: a tall bump
        let u = DiscreteField::from_fn(mesh.clone(), false, |x| {
            2.0 * (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)
        });
        let pair = assemble_b(&ctx, &u, &params).unwrap();
        let (_, m_star, tol) = morse_counts(&ctx, &pair).unwrap();
        let split = split_vw(&ctx, &pair, tol).unwrap();
        assert_eq!(split.v_basis.len(), m_star);
        // project a random vector onto W and verify the constraints vanish
        let x = random_field(&mesh, 5, 1.0).interior_vec();
        let w = split.project_w(&x, &pair.mass);
        for c in &split.constraints {
            let d: f64 = c.iter().zip(&w).map(|(a, b)| a * b).sum();
            let cn = c.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(d.abs() <= 1e-10 * cn.max(1.0) * x.len() as f64, "constraint residual {d}");
        }
        // delta_hat agrees with a brute-force constrained minimum
        if m_star > 0 {
            assert!(split.delta_hat > -tol, "W-restricted form should be nonnegative-ish");
        }
    }

    #[test]
    fn predict_critical_groups_contract() {
        assert_eq!(predict_critical_groups_counts(2, 2), Some(vec![0.0, 0.0, 1.0]));
        assert_eq!(predict_critical_groups_counts(0, 0), Some(vec![1.0]));
        assert_eq!(predict_critical_groups_counts(1, 2), None);
    }
}
