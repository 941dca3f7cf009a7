//! The energy functionals and their first variations on discrete fields.
//!
//! `energy` evaluates I_eps (alpha = 0, no perturbation) or the regularized
//! J_{eps,alpha,h}; `gradient` assembles the weak form of the corresponding
//! operator. Both use the same quadrature rule, so central differences of
//! the energy match the assembled gradient to floating-point accuracy rather
//! than quadrature mismatch.

use crate::mesh::{norm_eps_pow, DiscreteField};
use crate::nonlinearity::{g_alpha, gprime_alpha};
use crate::Nonlinearity;

/// Which functional is in force: (p, eps) always, alpha >= 0 selecting the
/// regularization, and an optional free-boundary linear perturbation h.
#[derive(Debug, Clone)]
pub struct ProblemParams {
    pub spec: Nonlinearity,
    pub eps: f64,
    pub alpha: f64,
    pub h: Option<DiscreteField>,
}

impl ProblemParams {
    /// The limit functional I_eps.
    pub fn i_eps(spec: Nonlinearity, eps: f64) -> Self {
        ProblemParams { spec, eps, alpha: 0.0, h: None }
    }

    /// The regularized functional J_{eps,alpha}.
    pub fn regularized(spec: Nonlinearity, eps: f64, alpha: f64) -> Self {
        ProblemParams { spec, eps, alpha, h: None }
    }

    pub fn with_perturbation(mut self, h: DiscreteField) -> Self {
        self.h = Some(h);
        self
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        let mut p = self.clone();
        p.alpha = alpha;
        p
    }

    pub fn p(&self) -> f64 {
        self.spec.p
    }
}

/// p-Laplace flux kernel (alpha + |g|^2)^((p-2)/2), continuously extended by
/// zero at a degenerate gradient when alpha = 0 (valid for p > 1).
#[inline]
pub fn grad_kernel(p: f64, alpha: f64, g2: f64) -> f64 {
    if alpha == 0.0 {
        if g2 == 0.0 {
            return 0.0;
        }
        return g2.powf(0.5 * (p - 2.0));
    }
    (alpha + g2).powf(0.5 * (p - 2.0))
}

/// Discrete I_eps(u) or J_{eps,alpha,h}(u).
pub fn energy(u: &DiscreteField, params: &ProblemParams) -> f64 {
    let mesh = &u.mesh;
    let p = params.p();
    let (eps, alpha) = (params.eps, params.alpha);
    let epsp = eps.powf(p);
    let nq = mesh.quad.weights.len();
    let mut acc = 0.0;
    for el in &mesh.elems {
        let nodal = [u.values[el.v[0]], u.values[el.v[1]], u.values[el.v[2]]];
        let g = el.gradient(&nodal);
        let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let mut e = epsp * g_alpha(p, alpha, gnorm);
        for q in 0..nq {
            let uq = u.value_at(el, q);
            let mut point = g_alpha(p, alpha, uq) - params.spec.cap_f_alpha(alpha, uq);
            if let Some(h) = &params.h {
                point -= h.value_at(el, q) * uq;
            }
            e += mesh.quad.weights[q] * point;
        }
        acc += el.measure * e;
    }
    acc
}

/// Weak-form assembly of the first variation: the returned field carries
/// <J'(u), phi_i> on interior nodes and zeros on the boundary.
pub fn gradient(u: &DiscreteField, params: &ProblemParams) -> DiscreteField {
    let mesh = u.mesh.clone();
    let p = params.p();
    let (eps, alpha) = (params.eps, params.alpha);
    let epsp = eps.powf(p);
    let nq = mesh.quad.weights.len();
    let mut out = vec![0.0; mesh.n_nodes()];
    for el in &mesh.elems {
        let nodal = [u.values[el.v[0]], u.values[el.v[1]], u.values[el.v[2]]];
        let g = el.gradient(&nodal);
        let g2 = g[0] * g[0] + g[1] * g[1];
        let kappa = epsp * grad_kernel(p, alpha, g2);
        let flux = [kappa * g[0], kappa * g[1]];
        for a in 0..el.nv {
            out[el.v[a]] += el.measure * (flux[0] * el.grads[a][0] + flux[1] * el.grads[a][1]);
        }
        for q in 0..nq {
            let uq = u.value_at(el, q);
            let mut react = gprime_alpha(p, alpha, uq) - params.spec.f_alpha(alpha, uq);
            if let Some(h) = &params.h {
                react -= h.value_at(el, q);
            }
            let w = el.measure * mesh.quad.weights[q];
            for a in 0..el.nv {
                out[el.v[a]] += w * react * mesh.quad.bary[q][a];
            }
        }
    }
    let mut field = DiscreteField { mesh, values: out, free_boundary: false };
    field.enforce_bc();
    field
}

/// Nodal duality pairing of an assembled gradient with a test field.
pub fn pairing(g: &DiscreteField, v: &DiscreteField) -> f64 {
    g.values.iter().zip(&v.values).map(|(a, b)| a * b).sum()
}

/// The Nehari constraint functional A_eps(u) = |u|_eps^p - int f(u) u,
/// always taken for the limit functional.
pub fn a_eps(u: &DiscreteField, params: &ProblemParams) -> f64 {
    let mesh = &u.mesh;
    let p = params.p();
    let mut reaction = 0.0;
    let nq = mesh.quad.weights.len();
    for el in &mesh.elems {
        let mut e = 0.0;
        for q in 0..nq {
            let uq = u.value_at(el, q);
            e += mesh.quad.weights[q] * params.spec.f(uq) * uq;
        }
        reaction += el.measure * e;
    }
    norm_eps_pow(u, p, params.eps) - reaction
}

/// <A_eps'(u), v>. The reaction derivative is evaluated only where u > 0 at
/// the quadrature points; the cutoff makes its continuous extension zero
/// elsewhere.
pub fn a_grad_pairing(u: &DiscreteField, v: &DiscreteField, params: &ProblemParams) -> f64 {
    let mesh = &u.mesh;
    let p = params.p();
    let epsp = params.eps.powf(p);
    let nq = mesh.quad.weights.len();
    let mut acc = 0.0;
    for el in &mesh.elems {
        let un = [u.values[el.v[0]], u.values[el.v[1]], u.values[el.v[2]]];
        let vn = [v.values[el.v[0]], v.values[el.v[1]], v.values[el.v[2]]];
        let gu = el.gradient(&un);
        let gv = el.gradient(&vn);
        let g2 = gu[0] * gu[0] + gu[1] * gu[1];
        let mut e = p * epsp * grad_kernel(p, 0.0, g2) * (gu[0] * gv[0] + gu[1] * gv[1]);
        for q in 0..nq {
            let uq = u.value_at(el, q);
            let vq = v.value_at(el, q);
            let mass = if uq == 0.0 { 0.0 } else { uq.abs().powf(p - 2.0) * uq };
            let mut point = p * mass * vq - params.spec.f(uq) * vq;
            if uq > 0.0 {
                point -= params.spec.fprime_pos(uq) * uq * vq;
            }
            e += mesh.quad.weights[q] * point;
        }
        acc += el.measure * e;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::FemContext;
    use crate::mesh::{build_mesh, c1_norm, norm_eps, DomainSpec};
    use crate::nonlinearity::NonlinearitySpec;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn spec() -> Nonlinearity {
        NonlinearitySpec::single_power(3.0, 1.5, 2).unwrap()
    }

    fn disk_ctx() -> (Arc<crate::mesh::Mesh>, FemContext) {
        let mesh = build_mesh(DomainSpec::Disk { radius: 1.0 }, 0.2).unwrap();
        let ctx = FemContext::new(mesh.clone()).unwrap();
        (mesh, ctx)
    }

    fn random_dirichlet(mesh: &Arc<crate::mesh::Mesh>, rng: &mut ChaCha8Rng, amp: f64) -> DiscreteField {
        let values: Vec<f64> = (0..mesh.n_nodes()).map(|_| amp * (rng.gen::<f64>() - 0.5)).collect();
        DiscreteField::from_values(mesh.clone(), values, false)
    }

    #[test]
    fn energy_vanishes_at_zero() {
        let (mesh, _) = disk_ctx();
        let u = DiscreteField::zeros(mesh, false);
        let params = ProblemParams::i_eps(spec(), 0.3);
        assert_eq!(energy(&u, &params), 0.0);
    }

    #[test]
    fn nonpositive_fields_see_no_reaction() {
        let (mesh, _) = disk_ctx();
        let u = DiscreteField::from_fn(mesh, false, |x| -(1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0));
        let params = ProblemParams::i_eps(spec(), 0.4);
        let p = params.p();
        let expect = norm_eps_pow(&u, p, params.eps) / p;
        let got = energy(&u, &params);
        assert!((got - expect).abs() <= 1e-13 * expect.abs().max(1.0), "{got} vs {expect}");
    }

    #[test]
    fn regularized_energy_at_zero_matches_formula() {
        let (mesh, _) = disk_ctx();
        let u = DiscreteField::zeros(mesh.clone(), false);
        let s = spec();
        let (eps, alpha) = (0.25, 1e-2);
        let params = ProblemParams::regularized(s.clone(), eps, alpha);
        let omega = mesh.measure();
        let p = 1.5;
        let expect = (1.0 + eps.powf(p)) * omega * alpha.powf(p / 2.0) / p
            - omega * s.cap_f(alpha.powf(1.0 / s.s));
        let got = energy(&u, &params);
        assert!((got - expect).abs() < 1e-12 * expect.abs().max(1.0), "{got} vs {expect}");
    }

    #[test]
    fn gradient_of_zero_field() {
        let (mesh, ctx) = disk_ctx();
        let u = DiscreteField::zeros(mesh.clone(), false);
        let params = ProblemParams::i_eps(spec(), 0.3);
        let g = gradient(&u, &params);
        assert_eq!(g.linf(), 0.0, "zero is critical for I_eps");

        // with a perturbation the gradient at zero is minus the weighted h
        let h = DiscreteField::from_fn(mesh.clone(), true, |x| 0.3 + x[0]);
        let params = ProblemParams::regularized(spec(), 0.3, 1e-2).with_perturbation(h);
        let g = gradient(&u, &params);
        assert!(ctx.dual_norm(&g) > 0.0);
        // finite-difference oracle on a few interior nodes
        let tau = 1e-7;
        for &node in mesh.interior.iter().step_by(7) {
            let mut up = u.clone();
            up.values[node] = tau;
            let mut dn = u.clone();
            dn.values[node] = -tau;
            let fd = (energy(&up, &params) - energy(&dn, &params)) / (2.0 * tau);
            assert!((fd - g.values[node]).abs() <= 1e-6 * (1.0 + fd.abs()), "node {node}");
        }
    }

    #[test]
    fn directional_derivative_matches_central_difference() {
        let (mesh, _) = disk_ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let params = ProblemParams::regularized(spec(), 0.35, 1e-2);
        for _ in 0..12 {
            let u = random_dirichlet(&mesh, &mut rng, 1.0);
            let v = random_dirichlet(&mesh, &mut rng, 1.0);
            let tau = 1e-6;
            let mut up = u.clone();
            up.axpy(tau, &v);
            let mut dn = u.clone();
            dn.axpy(-tau, &v);
            let fd = (energy(&up, &params) - energy(&dn, &params)) / (2.0 * tau);
            let gp = pairing(&gradient(&u, &params), &v);
            assert!(
                (fd - gp).abs() <= 1e-5 * (1.0 + fd.abs().max(gp.abs())),
                "{fd} vs {gp}"
            );
        }
    }

    #[test]
    fn a_eps_homogeneous_scaling_and_sign_change() {
        let (mesh, _) = disk_ctx();
        let params = ProblemParams::i_eps(spec(), 0.3);
        let v = DiscreteField::from_fn(mesh, false, |x| (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0));
        let zero = DiscreteField::zeros(v.mesh.clone(), false);
        assert_eq!(a_eps(&zero, &params), 0.0);
        // A(tv) = t^p |v|^p - t^q int (v+)^q for f = (t+)^(q-1)
        let p = 1.5;
        let q = 3.0;
        let norm_p = norm_eps_pow(&v, p, params.eps);
        let int_q = crate::mesh::integrate(&v.mesh, |_| 0.0) + {
            let mut acc = 0.0;
            for el in &v.mesh.elems {
                for qq in 0..v.mesh.quad.weights.len() {
                    let vq = v.value_at(el, qq).max(0.0);
                    acc += el.measure * v.mesh.quad.weights[qq] * vq.powf(q);
                }
            }
            acc
        };
        let mut signs = Vec::new();
        for k in -20..=20 {
            let t = 10f64.powf(k as f64 / 5.0);
            let closed = t.powf(p) * norm_p - t.powf(q) * int_q;
            let got = a_eps(&v.scaled(t), &params);
            assert!((got - closed).abs() <= 1e-9 * closed.abs().max(1.0), "t={t}");
            signs.push(got > 0.0);
        }
        let flips = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(flips, 1, "single sign change along the ray");
    }

    #[test]
    fn a_grad_pairing_matches_difference_quotient() {
        let (mesh, _) = disk_ctx();
        let params = ProblemParams::i_eps(spec(), 0.4);
        // positive bump: quadrature points stay away from the kink at 0
        let u = DiscreteField::from_fn(mesh.clone(), false, |x| {
            (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0) + 0.0
        });
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_dirichlet(&mesh, &mut rng, 0.3);
        let tau = 1e-6;
        let mut up = u.clone();
        up.axpy(tau, &v);
        let mut dn = u.clone();
        dn.axpy(-tau, &v);
        let fd = (a_eps(&up, &params) - a_eps(&dn, &params)) / (2.0 * tau);
        let got = a_grad_pairing(&u, &v, &params);
        assert!((fd - got).abs() <= 1e-4 * (1.0 + fd.abs()), "{fd} vs {got}");
    }

    #[test]
    fn local_minimum_envelope_near_zero() {
        // I(u) >= |u|^p/(2p) - c_eps |u|^q with the measured embedding constant
        let (mesh, _) = disk_ctx();
        let s = spec();
        let params = ProblemParams::i_eps(s.clone(), 0.3);
        let c = crate::nonlinearity::growth_constant(&s);
        let (p, q) = (1.5, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // measure the discrete q-embedding constant on the same family
        let mut s_q: f64 = 0.0;
        let mut fields = Vec::new();
        for _ in 0..40 {
            let u = random_dirichlet(&mesh, &mut rng, 1.0);
            let nrm = norm_eps(&u, p, params.eps);
            let mut int_q = 0.0;
            for el in &mesh.elems {
                for qq in 0..mesh.quad.weights.len() {
                    int_q += el.measure * mesh.quad.weights[qq] * u.value_at(el, qq).abs().powf(q);
                }
            }
            s_q = s_q.max(int_q.powf(1.0 / q) / nrm);
            fields.push(u);
        }
        let c_eps = c * (2.0 * s_q).powf(q);
        for u in &fields {
            let small = u.scaled(0.05 / norm_eps(u, p, params.eps));
            let nrm = norm_eps(&small, p, params.eps);
            let lhs = energy(&small, &params);
            let rhs = nrm.powf(p) / (2.0 * p) - c_eps * nrm.powf(q);
            assert!(lhs >= rhs - 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn c1_closeness_decreases_with_alpha() {
        let (mesh, ctx) = disk_ctx();
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fields: Vec<DiscreteField> = (0..30)
            .map(|_| {
                let u = random_dirichlet(&mesh, &mut rng, 1.0);
                let n = norm_eps(&u, 1.5, 0.3);
                u.scaled(rng.gen::<f64>() * 10.0 / n)
            })
            .collect();
        let i_params = ProblemParams::i_eps(s.clone(), 0.3);
        let mut last_e = f64::INFINITY;
        let mut last_g = f64::INFINITY;
        for alpha in [1e-1, 1e-2, 1e-3, 1e-4] {
            let j_params = ProblemParams::regularized(s.clone(), 0.3, alpha);
            let mut sup_e: f64 = 0.0;
            let mut sup_g: f64 = 0.0;
            for u in &fields {
                sup_e = sup_e.max((energy(u, &j_params) - energy(u, &i_params)).abs());
                let diff = gradient(u, &j_params).sub(&gradient(u, &i_params));
                sup_g = sup_g.max(ctx.dual_norm(&diff));
            }
            assert!(sup_e < last_e, "energy closeness not monotone at alpha={alpha}");
            assert!(sup_g < last_g, "gradient closeness not monotone at alpha={alpha}");
            last_e = sup_e;
            last_g = sup_g;
        }
        assert!(last_e < 1e-2 && last_g < 1.0, "closeness should be small at alpha=1e-4");
    }

    #[test]
    fn coercivity_inequality_on_random_fields() {
        let (mesh, _) = disk_ctx();
        let s = spec();
        let theta = s.theta;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = DiscreteField::from_fn(mesh.clone(), true, |x| 0.05 * (x[0] + 0.3));
        for &alpha in &[0.0, 1e-3, 1e-1] {
            let params = ProblemParams::regularized(s.clone(), 0.3, alpha).with_perturbation(h.clone());
            // measured dual constant of h over the sample
            let mut fields = Vec::new();
            let mut c1: f64 = 0.0;
            for _ in 0..25 {
                let u = random_dirichlet(&mesh, &mut rng, 2.0);
                let mut hu = 0.0;
                for el in &mesh.elems {
                    for q in 0..mesh.quad.weights.len() {
                        hu += el.measure * mesh.quad.weights[q] * h.value_at(el, q) * u.value_at(el, q);
                    }
                }
                c1 = c1.max(hu / norm_eps(&u, 1.5, params.eps));
                fields.push(u);
            }
            let a1s = alpha.powf(1.0 / s.s);
            let omega = mesh.measure();
            for u in &fields {
                let nrm = norm_eps(u, 1.5, params.eps);
                let lhs = (1.0 / 1.5 - theta) * nrm.powf(1.5);
                let rhs = energy(u, &params) - theta * pairing(&gradient(u, &params), u)
                    + theta * a1s * s.f(a1s) * omega
                    + (1.0 - theta) * c1 * nrm;
                assert!(lhs <= rhs + 1e-10, "alpha={alpha}: {lhs} vs {rhs}");
            }
        }
        let _ = c1_norm(&h);
    }
}
