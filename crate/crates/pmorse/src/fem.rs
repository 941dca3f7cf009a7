//! Per-mesh assembled operators shared by the solvers: the H1_0 stiffness
//! matrix (preconditioner and dual-norm surrogate), the mass matrix, and one
//! symbolic factorization reused by every matrix with the FEM adjacency.

use crate::error::Result;
use crate::linalg::{Csr, LdlFactor, SymbolicLdl};
use crate::mesh::{DiscreteField, Mesh};
use std::sync::Arc;

pub struct FemContext {
    pub mesh: Arc<Mesh>,
    /// interior-dof stiffness int grad phi_i . grad phi_j
    pub stiffness: Csr,
    /// interior-dof mass int phi_i phi_j
    pub mass: Csr,
    pub symbolic: SymbolicLdl,
    stiff_factor: LdlFactor,
}

impl FemContext {
    pub fn new(mesh: Arc<Mesh>) -> Result<FemContext> {
        let n = mesh.n_interior();
        let nq = mesh.quad.weights.len();
        let mut st = Vec::new();
        let mut ms = Vec::new();
        for el in &mesh.elems {
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
                    let dot = el.grads[a][0] * el.grads[b][0] + el.grads[a][1] * el.grads[b][1];
                    st.push((ia, ib, el.measure * dot));
                    let mut mass_ab = 0.0;
                    for q in 0..nq {
                        mass_ab += mesh.quad.weights[q] * mesh.quad.bary[q][a] * mesh.quad.bary[q][b];
                    }
                    ms.push((ia, ib, el.measure * mass_ab));
                }
            }
        }
        let stiffness = Csr::from_triplets(n, &mut st);
        let mass = Csr::from_triplets(n, &mut ms);
        let symbolic = SymbolicLdl::analyze(&stiffness);
        let stiff_factor = symbolic.factor(&stiffness)?;
        Ok(FemContext { mesh, stiffness, mass, symbolic, stiff_factor })
    }

    /// Factor a matrix sharing the FEM adjacency (quadratic forms, shifts).
    pub fn factor(&self, matrix: &Csr) -> Result<LdlFactor> {
        self.symbolic.factor(matrix)
    }

    pub fn solve_stiffness(&self, rhs: &[f64]) -> Vec<f64> {
        self.stiff_factor.solve(rhs)
    }

    pub fn stiffness_factor(&self) -> &LdlFactor {
        &self.stiff_factor
    }

    /// Dual surrogate norm of a nodal residual: sqrt(r' S^{-1} r) over the
    /// interior dofs, with S the H1_0 stiffness. The computable stand-in for
    /// the negative-order norm of the continuous setting.
    pub fn dual_norm(&self, residual: &DiscreteField) -> f64 {
        let r = residual.interior_vec();
        let x = self.solve_stiffness(&r);
        r.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    /// H1_0 inner product of two Dirichlet fields.
    pub fn h10_inner(&self, u: &DiscreteField, v: &DiscreteField) -> f64 {
        self.stiffness.bilinear(&u.interior_vec(), &v.interior_vec())
    }

    /// L2 inner product via the mass matrix.
    pub fn l2_inner(&self, u: &DiscreteField, v: &DiscreteField) -> f64 {
        self.mass.bilinear(&u.interior_vec(), &v.interior_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DiscreteField, DomainSpec};

    #[test]
    fn stiffness_against_linear_fields() {
        let mesh = build_mesh(DomainSpec::Rectangle { width: 1.0, height: 1.0 }, 0.2).unwrap();
        let ctx = FemContext::new(mesh.clone()).unwrap();
        // bubble-like interior field: check S is SPD by solving a system
        let mut rhs = vec![0.0; mesh.n_interior()];
        rhs[0] = 1.0;
        let x = ctx.solve_stiffness(&rhs);
        let back = ctx.stiffness.matvec(&x);
        for i in 0..rhs.len() {
            assert!((back[i] - rhs[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn mass_matrix_total_is_integral() {
        let mesh = build_mesh(DomainSpec::Interval { a: 0.0, b: 1.0 }, 0.1).unwrap();
        let ctx = FemContext::new(mesh.clone()).unwrap();
        let u = DiscreteField::from_fn(mesh.clone(), false, |x| x[0] * (1.0 - x[0]));
        // int u^2 for the P1 interpolant, quadrature-exact (degree 2 < 5)
        let mut exact = 0.0;
        for el in &mesh.elems {
            for q in 0..mesh.quad.weights.len() {
                let v = u.value_at(el, q);
                exact += el.measure * mesh.quad.weights[q] * v * v;
            }
        }
        let viam = ctx.l2_inner(&u, &u);
        assert!((viam - exact).abs() < 1e-14, "{viam} vs {exact}");
    }
}
