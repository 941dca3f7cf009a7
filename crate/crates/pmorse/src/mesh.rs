//! Conforming piecewise-linear discretizations of the supported domains.
//!
//! 2D domains are triangulated deterministically: rectangles by diagonal
//! splits, disks by hexagonal polar rings, annuli by structured polar grids
//! with boundary nodes snapped onto the exact circles. A 1D interval mode
//! exists as a fast smoke target; the multiplicity experiments all run in 2D.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Rectangle { width: f64, height: f64 },
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::Interval { a, b } => b > a,
            DomainSpec::Rectangle { width, height } => width > 0.0 && height > 0.0,
            DomainSpec::Disk { radius } => radius > 0.0,
            DomainSpec::Annulus { inner, outer } => inner > 0.0 && outer > inner,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!("{self:?}")))
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Rectangle { width, height } => (width * width + height * height).sqrt(),
            DomainSpec::Disk { radius } => 2.0 * radius,
            DomainSpec::Annulus { outer, .. } => 2.0 * outer,
        }
    }

    /// Exact measure, used as a quadrature oracle in tests.
    pub fn measure(&self) -> f64 {
        match *self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Rectangle { width, height } => width * height,
            DomainSpec::Disk { radius } => PI * radius * radius,
            DomainSpec::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }
}

/// One simplex with its P1 geometry. 1D segments pad the third slot with the
/// first vertex and a zero gradient so the 2D loops apply unchanged.
#[derive(Debug, Clone)]
pub struct Element {
    pub v: [usize; 3],
    pub nv: usize,
    pub measure: f64,
    pub grads: [[f64; 2]; 3],
}

impl Element {
    pub fn gradient(&self, nodal: &[f64; 3]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for a in 0..self.nv {
            g[0] += nodal[a] * self.grads[a][0];
            g[1] += nodal[a] * self.grads[a][1];
        }
        g
    }
}

/// Quadrature rule in barycentric coordinates; weights sum to one and are
/// multiplied by the element measure. Degree 4 on triangles (the energies
/// integrate non-polynomial kernels), degree 5 on segments.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    fn triangle_deg4() -> QuadRule {
        let w1 = 0.223_381_589_678_011;
        let a1 = 0.445_948_490_915_965;
        let b1 = 0.108_103_018_168_070;
        let w2 = 0.109_951_743_655_322;
        let a2 = 0.091_576_213_509_771;
        let b2 = 0.816_847_572_980_459;
        QuadRule {
            bary: vec![
                [a1, a1, b1],
                [a1, b1, a1],
                [b1, a1, a1],
                [a2, a2, b2],
                [a2, b2, a2],
                [b2, a2, a2],
            ],
            weights: vec![w1, w1, w1, w2, w2, w2],
        }
    }

    fn segment_gauss3() -> QuadRule {
        let x = 0.5 * (3.0f64 / 5.0).sqrt();
        let pts = [0.5 - x, 0.5, 0.5 + x];
        let w = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
        QuadRule {
            bary: pts.iter().map(|&t| [1.0 - t, t, 0.0]).collect(),
            weights: w.to_vec(),
        }
    }
}

#[derive(Debug)]
pub struct Mesh {
    pub domain: DomainSpec,
    pub dim: usize,
    pub nodes: Vec<[f64; 2]>,
    pub elems: Vec<Element>,
    pub boundary: Vec<bool>,
    /// interior node ids in ascending order
    pub interior: Vec<usize>,
    /// node id -> interior dof index (usize::MAX on the boundary)
    pub interior_index: Vec<usize>,
    pub quad: QuadRule,
    /// largest element diameter actually realized
    pub h_mesh: f64,
    pub target_h: f64,
    /// content hash over geometry and connectivity
    pub content_hash: String,
    /// angular node count per ring for polar meshes (rotation symmetry tests)
    pub angular_period: Option<usize>,
}

/// Build a conforming mesh of `domain` with elements no larger than
/// 1.5 * `target_h`. Deterministic: identical inputs give identical meshes.
pub fn build_mesh(domain: DomainSpec, target_h: f64) -> Result<Arc<Mesh>> {
    domain.validate()?;
    if !(target_h > 0.0) || target_h >= domain.diameter() {
        return Err(Error::Usage(format!(
            "target_h must lie in (0, diam); got {target_h}"
        )));
    }
    let (nodes, conn, boundary, angular_period) = match domain {
        DomainSpec::Interval { a, b } => {
            let (nodes, conn, bnd) = mesh_interval(a, b, target_h);
            (nodes, conn, bnd, None)
        }
        DomainSpec::Rectangle { width, height } => {
            let (nodes, conn, bnd) = mesh_rectangle(width, height, target_h);
            (nodes, conn, bnd, None)
        }
        DomainSpec::Disk { radius } => {
            let (nodes, conn, bnd) = mesh_disk(radius, target_h);
            (nodes, conn, bnd, None)
        }
        DomainSpec::Annulus { inner, outer } => {
            let (nodes, conn, bnd, m) = mesh_annulus(inner, outer, target_h);
            (nodes, conn, bnd, Some(m))
        }
    };
    Ok(Arc::new(assemble_mesh(domain, target_h, nodes, conn, boundary, angular_period)))
}

fn assemble_mesh(
    domain: DomainSpec,
    target_h: f64,
    nodes: Vec<[f64; 2]>,
    conn: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    angular_period: Option<usize>,
) -> Mesh {
    let dim = domain.dim();
    let mut elems = Vec::with_capacity(conn.len());
    let mut h_mesh = 0.0f64;
    for mut vs in conn {
        let el = if dim == 1 {
            let (i, j) = (vs[0], vs[1]);
            let len = (nodes[j][0] - nodes[i][0]).abs();
            h_mesh = h_mesh.max(len);
            Element {
                v: [i, j, i],
                nv: 2,
                measure: len,
                grads: [[-1.0 / len, 0.0], [1.0 / len, 0.0], [0.0, 0.0]],
            }
        } else {
            let signed = signed_area(&nodes, &vs);
            if signed < 0.0 {
                vs.swap(1, 2);
            }
            let area = signed.abs();
            let [p0, p1, p2] = [nodes[vs[0]], nodes[vs[1]], nodes[vs[2]]];
            for (a, b) in [(p0, p1), (p1, p2), (p2, p0)] {
                h_mesh = h_mesh.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
            let inv = 1.0 / (2.0 * area);
            Element {
                v: vs,
                nv: 3,
                measure: area,
                grads: [
                    [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
                    [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
                    [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
                ],
            }
        };
        debug_assert!(el.measure > 0.0);
        elems.push(el);
    }
    let interior: Vec<usize> = (0..nodes.len()).filter(|&i| !boundary[i]).collect();
    let mut interior_index = vec![usize::MAX; nodes.len()];
    for (dof, &node) in interior.iter().enumerate() {
        interior_index[node] = dof;
    }
    let quad = if dim == 1 { QuadRule::segment_gauss3() } else { QuadRule::triangle_deg4() };
    let content_hash = hash_mesh(dim, &nodes, &elems, &boundary);
    Mesh {
        domain,
        dim,
        nodes,
        elems,
        boundary,
        interior,
        interior_index,
        quad,
        h_mesh,
        target_h,
        content_hash,
        angular_period,
    }
}

fn signed_area(nodes: &[[f64; 2]], v: &[usize; 3]) -> f64 {
    let [p0, p1, p2] = [nodes[v[0]], nodes[v[1]], nodes[v[2]]];
    0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
}

fn mesh_interval(a: f64, b: f64, h: f64) -> (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<bool>) {
    let n = ((b - a) / h).ceil().max(1.0) as usize;
    let nodes: Vec<[f64; 2]> = (0..=n).map(|i| [a + (b - a) * i as f64 / n as f64, 0.0]).collect();
    let conn: Vec<[usize; 3]> = (0..n).map(|i| [i, i + 1, i]).collect();
    let mut boundary = vec![false; n + 1];
    boundary[0] = true;
    boundary[n] = true;
    (nodes, conn, boundary)
}

fn mesh_rectangle(w: f64, h: f64, target: f64) -> (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<bool>) {
    let nx = (w / target).ceil().max(1.0) as usize;
    let ny = (h / target).ceil().max(1.0) as usize;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([w * i as f64 / nx as f64, h * j as f64 / ny as f64]);
            boundary.push(i == 0 || i == nx || j == 0 || j == ny);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut conn = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            conn.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            conn.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (nodes, conn, boundary)
}

/// Boundary arcs are kept below this fraction of target_h so the inscribed
/// polygon area stays within first-order reach of the curved domain.
const ANGULAR_FACTOR: f64 = 0.75;

fn mesh_disk(radius: f64, target: f64) -> (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<bool>) {
    let n_r = (radius / target).ceil().max(1.0) as usize;
    let ring_count = |r: f64| ((2.0 * PI * r) / (ANGULAR_FACTOR * target)).ceil().max(6.0) as usize;
    let mut nodes = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize; n_r + 1]; // ring k starts here, ring 0 = center
    let mut ring_len = vec![1usize; n_r + 1];
    for k in 1..=n_r {
        ring_start[k] = nodes.len();
        let r = radius * k as f64 / n_r as f64;
        let m = ring_count(r);
        ring_len[k] = m;
        for j in 0..m {
            let th = 2.0 * PI * j as f64 / m as f64;
            nodes.push([r * th.cos(), r * th.sin()]);
        }
    }
    let mut conn = Vec::new();
    // center fan
    let m1 = ring_len[1];
    for j in 0..m1 {
        conn.push([0, ring_start[1] + j, ring_start[1] + (j + 1) % m1]);
    }
    // merged strips between consecutive rings
    for k in 1..n_r {
        let (na, nb) = (ring_len[k], ring_len[k + 1]);
        let (sa, sb) = (ring_start[k], ring_start[k + 1]);
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            let angle_a = (i + 1) as f64 / na as f64;
            let angle_b = (j + 1) as f64 / nb as f64;
            if j == nb || (i < na && angle_a <= angle_b) {
                conn.push([sa + i % na, sb + j % nb, sa + (i + 1) % na]);
                i += 1;
            } else {
                conn.push([sa + i % na, sb + j % nb, sb + (j + 1) % nb]);
                j += 1;
            }
        }
    }
    let mut boundary = vec![false; nodes.len()];
    for j in 0..ring_len[n_r] {
        boundary[ring_start[n_r] + j] = true;
    }
    (nodes, conn, boundary)
}

fn mesh_annulus(r0: f64, r1: f64, target: f64) -> (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<bool>, usize) {
    let n_r = ((r1 - r0) / target).ceil().max(1.0) as usize;
    let m = ((2.0 * PI * r1) / (ANGULAR_FACTOR * target)).ceil().max(8.0) as usize;
    let mut nodes = Vec::with_capacity((n_r + 1) * m);
    for k in 0..=n_r {
        let r = r0 + (r1 - r0) * k as f64 / n_r as f64;
        for j in 0..m {
            let th = 2.0 * PI * j as f64 / m as f64;
            nodes.push([r * th.cos(), r * th.sin()]);
        }
    }
    let id = |k: usize, j: usize| k * m + j % m;
    let mut conn = Vec::with_capacity(2 * n_r * m);
    for k in 0..n_r {
        for j in 0..m {
            conn.push([id(k, j), id(k, j + 1), id(k + 1, j + 1)]);
            conn.push([id(k, j), id(k + 1, j + 1), id(k + 1, j)]);
        }
    }
    let mut boundary = vec![false; nodes.len()];
    for j in 0..m {
        boundary[id(0, j)] = true;
        boundary[id(n_r, j)] = true;
    }
    (nodes, conn, boundary, m)
}

fn hash_mesh(dim: usize, nodes: &[[f64; 2]], elems: &[Element], boundary: &[bool]) -> String {
    let mut h = Fnv64::new();
    h.write_u64(dim as u64);
    h.write_u64(nodes.len() as u64);
    for n in nodes {
        h.write_u64(n[0].to_bits());
        h.write_u64(n[1].to_bits());
    }
    for e in elems {
        for &v in &e.v[..e.nv] {
            h.write_u64(v as u64);
        }
    }
    for (i, &b) in boundary.iter().enumerate() {
        if b {
            h.write_u64(i as u64);
        }
    }
    format!("{:016x}", h.finish())
}

/// FNV-1a, enough to key field dumps against their mesh.
struct Fnv64(u64);

impl Fnv64 {
    fn new() -> Self {
        Fnv64(0xcbf29ce484222325)
    }
    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn measure(&self) -> f64 {
        self.elems.iter().map(|e| e.measure).sum()
    }

    /// Physical coordinates of a quadrature point.
    pub fn quad_point(&self, el: &Element, q: usize) -> [f64; 2] {
        let b = self.quad.bary[q];
        let mut x = [0.0; 2];
        for a in 0..el.nv {
            let p = self.nodes[el.v[a]];
            x[0] += b[a] * p[0];
            x[1] += b[a] * p[1];
        }
        x
    }

    /// Copy with all nodes shifted; geometry is rebuilt from the shifted
    /// coordinates.
    pub fn translated(&self, dx: f64, dy: f64) -> Arc<Mesh> {
        let nodes: Vec<[f64; 2]> = self.nodes.iter().map(|p| [p[0] + dx, p[1] + dy]).collect();
        let conn: Vec<[usize; 3]> = self
            .elems
            .iter()
            .map(|e| if e.nv == 2 { [e.v[0], e.v[1], e.v[0]] } else { e.v })
            .collect();
        Arc::new(assemble_mesh(
            self.domain,
            self.target_h,
            nodes,
            conn,
            self.boundary.clone(),
            self.angular_period,
        ))
    }

    /// Node permutation for one angular step of a polar annulus mesh:
    /// `perm[i]` is the node onto which node `i` lands after rotating the
    /// domain by its angular period.
    pub fn rotation_permutation(&self) -> Option<Vec<usize>> {
        let m = self.angular_period?;
        let n = self.n_nodes();
        let mut perm = vec![0usize; n];
        for i in 0..n {
            let (ring, j) = (i / m, i % m);
            perm[i] = ring * m + (j + 1) % m;
        }
        Some(perm)
    }

    /// Interior-dof adjacency pattern shared by every assembled matrix.
    pub fn interior_pattern(&self) -> crate::linalg::Csr {
        let n = self.n_interior();
        let mut trips = Vec::new();
        for el in &self.elems {
            for a in 0..el.nv {
                let ia = self.interior_index[el.v[a]];
                if ia == usize::MAX {
                    continue;
                }
                for b in 0..el.nv {
                    let ib = self.interior_index[el.v[b]];
                    if ib == usize::MAX {
                        continue;
                    }
                    trips.push((ia, ib, 0.0));
                }
            }
        }
        crate::linalg::Csr::from_triplets(n, &mut trips)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<Vec<f64>> = self.nodes.iter().map(|p| vec![p[0], p[1]]).collect();
        let elements: Vec<Vec<usize>> = self.elems.iter().map(|e| e.v[..e.nv].to_vec()).collect();
        let boundary: Vec<usize> =
            (0..self.n_nodes()).filter(|&i| self.boundary[i]).collect();
        serde_json::json!({ "nodes": nodes, "elements": elements, "boundary": boundary })
    }
}

/// Element-wise quadrature of a pointwise integrand.
pub fn integrate<F: Fn([f64; 2]) -> f64>(mesh: &Mesh, f: F) -> f64 {
    let mut acc = 0.0;
    for el in &mesh.elems {
        let mut e_acc = 0.0;
        for q in 0..mesh.quad.weights.len() {
            e_acc += mesh.quad.weights[q] * f(mesh.quad_point(el, q));
        }
        acc += el.measure * e_acc;
    }
    acc
}

/// Nodal coefficient vector on a mesh. Dirichlet-constrained fields keep
/// exact zeros on the boundary; `free_boundary` fields (the perturbations h)
/// do not.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
    pub free_boundary: bool,
}

impl DiscreteField {
    pub fn zeros(mesh: Arc<Mesh>, free_boundary: bool) -> Self {
        let n = mesh.n_nodes();
        DiscreteField { mesh, values: vec![0.0; n], free_boundary }
    }

    pub fn from_fn<F: Fn([f64; 2]) -> f64>(mesh: Arc<Mesh>, free_boundary: bool, f: F) -> Self {
        let values: Vec<f64> = mesh.nodes.iter().map(|&p| f(p)).collect();
        let mut field = DiscreteField { mesh, values, free_boundary };
        field.enforce_bc();
        field
    }

    pub fn from_values(mesh: Arc<Mesh>, values: Vec<f64>, free_boundary: bool) -> Self {
        assert_eq!(values.len(), mesh.n_nodes());
        let mut field = DiscreteField { mesh, values, free_boundary };
        field.enforce_bc();
        field
    }

    pub fn enforce_bc(&mut self) {
        if !self.free_boundary {
            for i in 0..self.values.len() {
                if self.mesh.boundary[i] {
                    self.values[i] = 0.0;
                }
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let values = self.values.iter().map(|v| v * s).collect();
        DiscreteField { mesh: self.mesh.clone(), values, free_boundary: self.free_boundary }
    }

    pub fn axpy(&mut self, a: f64, other: &DiscreteField) {
        debug_assert_eq!(self.mesh.content_hash, other.mesh.content_hash);
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += a * o;
        }
    }

    pub fn sub(&self, other: &DiscreteField) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        DiscreteField { mesh: self.mesh.clone(), values, free_boundary: self.free_boundary }
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Positive part is nonzero somewhere.
    pub fn has_positive_part(&self) -> bool {
        self.values.iter().any(|&v| v > 0.0)
    }

    pub fn interior_vec(&self) -> Vec<f64> {
        self.mesh.interior.iter().map(|&i| self.values[i]).collect()
    }

    pub fn from_interior(mesh: Arc<Mesh>, interior: &[f64]) -> Self {
        let mut values = vec![0.0; mesh.n_nodes()];
        for (dof, &node) in mesh.interior.iter().enumerate() {
            values[node] = interior[dof];
        }
        DiscreteField { mesh, values, free_boundary: false }
    }

    pub fn value_at(&self, el: &Element, q: usize) -> f64 {
        let b = self.mesh.quad.bary[q];
        let mut acc = 0.0;
        for a in 0..el.nv {
            acc += b[a] * self.values[el.v[a]];
        }
        acc
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "mesh_hash": self.mesh.content_hash, "values": self.values })
    }
}

/// The parameter-weighted norm (eps^p |grad u|_p^p + |u|_p^p)^(1/p) evaluated
/// with the shared quadrature rule.
pub fn norm_eps(u: &DiscreteField, p: f64, eps: f64) -> f64 {
    norm_eps_pow(u, p, eps).powf(1.0 / p)
}

/// Same without the outer root; the solvers track the p-th power directly.
pub fn norm_eps_pow(u: &DiscreteField, p: f64, eps: f64) -> f64 {
    let mesh = &u.mesh;
    let epsp = eps.powf(p);
    let mut acc = 0.0;
    for el in &mesh.elems {
        let nodal = [u.values[el.v[0]], u.values[el.v[1]], u.values[el.v[2]]];
        let g = el.gradient(&nodal);
        let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let grad_term = epsp * gnorm.powf(p);
        let mut mass = 0.0;
        for q in 0..mesh.quad.weights.len() {
            mass += mesh.quad.weights[q] * u.value_at(el, q).abs().powf(p);
        }
        acc += el.measure * (grad_term + mass);
    }
    acc
}

/// Discrete C1 norm: nodal max plus element-gradient max. An
/// upper-consistent surrogate for the continuous one on piecewise-linear
/// fields.
pub fn c1_norm(h: &DiscreteField) -> f64 {
    let mesh = &h.mesh;
    let sup = h.linf();
    let mut gsup = 0.0f64;
    for el in &mesh.elems {
        let nodal = [h.values[el.v[0]], h.values[el.v[1]], h.values[el.v[2]]];
        let g = el.gradient(&nodal);
        gsup = gsup.max((g[0] * g[0] + g[1] * g[1]).sqrt());
    }
    sup + gsup
}
