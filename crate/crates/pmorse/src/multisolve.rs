//! Multiple critical points: damped Newton on the regularized operator,
//! deflation against already-found solutions, continuation of each solution
//! down the smoothing parameter to the limit problem, random low-mode
//! perturbations and the perturbed-problem study, and discrete positivity
//! certificates.

use crate::energy::{a_eps, energy, gradient, ProblemParams};
use crate::error::{Error, Result};
use crate::fem::FemContext;
use crate::linalg::{lowest_eigenpairs, LdlFactor};
use crate::mesh::{c1_norm, norm_eps, DiscreteField, DomainSpec};
use crate::morse::assemble_b_terms;
use crate::nehari::{energy_floor, project, TOL_RES};
use crate::solution::{ContinuationStage, PositivityCertificate, Provenance, SolutionRecord, SolveStatus};
use serde::{Deserialize, Serialize};

/// Decreasing smoothing parameters ending at the exact problem. The default
/// halves twenty times from 1e-2 and finishes with the alpha = 0 polish.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    pub alphas: Vec<f64>,
    pub newton_budget: usize,
}

impl ContinuationSchedule {
    pub fn standard() -> ContinuationSchedule {
        let mut alphas: Vec<f64> = (0..20).map(|k| 1e-2 * 0.5f64.powi(k)).collect();
        alphas.push(0.0);
        ContinuationSchedule { alphas, newton_budget: 60 }
    }

    pub fn head(&self) -> f64 {
        self.alphas[0]
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::Usage("empty continuation schedule".into()));
        }
        if self.alphas[0] > 1.0 {
            return Err(Error::Usage("schedule head must satisfy alpha <= 1".into()));
        }
        if self.alphas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Usage("schedule must be strictly decreasing".into()));
        }
        if *self.alphas.last().unwrap() < 0.0 {
            return Err(Error::Usage("alphas must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Multiplicative deflation against known solutions: each anchor contributes
/// a factor 1 + 1/d^2 in the H1_0 surrogate distance, steering Newton away
/// without moving the root set.
pub struct Deflator<'a> {
    ctx: &'a FemContext,
    anchors: Vec<Vec<f64>>,
}

impl<'a> Deflator<'a> {
    pub fn new(ctx: &'a FemContext) -> Self {
        Deflator { ctx, anchors: Vec::new() }
    }

    pub fn push(&mut self, field: &DiscreteField) {
        self.anchors.push(field.interior_vec());
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    /// Deflation factor and the pairing of its gradient with a step.
    fn factor_and_slope(&self, u: &[f64], step: &[f64]) -> (f64, f64) {
        let mut m = 1.0f64;
        let mut slope_over_m = 0.0f64;
        for anchor in &self.anchors {
            let diff: Vec<f64> = u.iter().zip(anchor).map(|(a, b)| a - b).collect();
            let s_diff = self.ctx.stiffness.matvec(&diff);
            let d2 = diff.iter().zip(&s_diff).map(|(a, b)| a * b).sum::<f64>().max(1e-30);
            let mu = 1.0 / d2 + 1.0;
            m *= mu;
            // grad mu . step = -2 (S diff . step) / d2^2
            let sd: f64 = s_diff.iter().zip(step).map(|(a, b)| a * b).sum();
            slope_over_m += (-2.0 * sd / (d2 * d2)) / mu;
        }
        (m, m * slope_over_m)
    }

    fn factor(&self, u: &[f64]) -> f64 {
        self.factor_and_slope(u, &vec![0.0; u.len()]).0
    }
}

pub struct NewtonOptions<'a> {
    pub budget: usize,
    /// reuse this factorization instead of reassembling (chord mode)
    pub frozen: Option<&'a LdlFactor>,
    pub deflator: Option<&'a Deflator<'a>>,
}

impl<'a> NewtonOptions<'a> {
    pub fn plain(budget: usize) -> Self {
        NewtonOptions { budget, frozen: None, deflator: None }
    }
}

/// Damped Newton on the weak form of the regularized operator, with a line
/// search on the dual residual norm. A singular linearization falls back to
/// a preconditioned gradient step; an exhausted budget returns a
/// `Budget`-status record rather than an error.
pub fn newton_solve(
    ctx: &FemContext,
    u0: &DiscreteField,
    params: &ProblemParams,
    budget: usize,
) -> Result<SolutionRecord> {
    if !(params.alpha > 0.0) {
        return Err(Error::AlphaZero("newton_solve linearizes the regularized kernels".into()));
    }
    Ok(damped_newton(ctx, u0, params, &NewtonOptions::plain(budget)))
}

/// Shared engine for plain, deflated and chord (frozen-Jacobian) iterations.
pub fn damped_newton(
    ctx: &FemContext,
    u0: &DiscreteField,
    params: &ProblemParams,
    opts: &NewtonOptions,
) -> SolutionRecord {
    let mut u = u0.clone();
    let mut trace = Vec::new();
    let mut status = SolveStatus::Budget;
    let mut iterations = 0;
    while iterations < opts.budget {
        iterations += 1;
        let g = gradient(&u, params);
        let res = ctx.dual_norm(&g);
        trace.push(res);
        if res <= TOL_RES {
            status = SolveStatus::Converged;
            break;
        }
        let g_int = g.interior_vec();
        // Newton direction, or preconditioned gradient when singular
        let mut factor_opt = None;
        let delta: Option<Vec<f64>> = if let Some(frozen) = opts.frozen {
            Some(frozen.solve(&g_int).iter().map(|x| -x).collect())
        } else if let Ok(bmat) = assemble_b_terms(ctx, &u, params, [true; 5]) {
            match ctx.factor(&bmat) {
                Ok(factor) => {
                    let d = factor.solve(&g_int).iter().map(|x| -x).collect();
                    factor_opt = Some(factor);
                    Some(d)
                }
                Err(_) => None,
            }
        } else {
            None
        };
        let fallback: Vec<f64> = ctx.solve_stiffness(&g_int).iter().map(|x| -x).collect();
        let mut step = delta.unwrap_or_else(|| fallback.clone());
        // keep near-singular linearizations from proposing absurd steps
        let u_norm_s = ctx.stiffness.bilinear(&u.interior_vec(), &u.interior_vec()).sqrt();
        let step_cap = 50.0 * u_norm_s.max(1.0);
        let step_norm = ctx.stiffness.bilinear(&step, &step).max(0.0).sqrt();
        if step_norm > step_cap {
            let sc = step_cap / step_norm;
            for s in step.iter_mut() {
                *s *= sc;
            }
        }

        // deflation rescales the Newton step (exact step on the deflated
        // residual via the rank-one structure of its Jacobian)
        let u_int = u.interior_vec();
        if let Some(defl) = opts.deflator {
            if defl.len() > 0 {
                let (m, slope) = defl.factor_and_slope(&u_int, &step);
                let denom = 1.0 - slope / m;
                let tau = if denom.abs() < 1e-8 { denom.signum() * 1e8 } else { 1.0 / denom };
                let tau = tau.clamp(-1e2, 1e2);
                for s in step.iter_mut() {
                    *s *= tau;
                }
            }
        }

        // Natural (affine-covariant) level function where a factorization
        // is at hand: ||F_k^{-1} r(w)||, which stays honest inside curved
        // valleys where the raw residual norm forces creeping steps. The
        // dual norm remains the convergence measure above.
        let solver: Option<&LdlFactor> = opts.frozen.or(factor_opt.as_ref());
        let defl_factor = |w: &[f64]| -> f64 {
            match opts.deflator {
                Some(defl) if defl.len() > 0 => defl.factor(w),
                _ => 1.0,
            }
        };
        let merit = |w: &DiscreteField| -> f64 {
            let r = gradient(w, params);
            let base = match solver {
                Some(f) => {
                    let z = f.solve(&r.interior_vec());
                    z.iter().map(|v| v * v).sum::<f64>().sqrt()
                }
                None => ctx.dual_norm(&r),
            };
            defl_factor(&w.interior_vec()) * base
        };
        let merit_now = {
            let base = match solver {
                Some(f) => {
                    let z = f.solve(&g_int);
                    z.iter().map(|v| v * v).sum::<f64>().sqrt()
                }
                None => res,
            };
            defl_factor(&u_int) * base
        };

        let try_direction = |dir: &[f64], u: &mut DiscreteField| -> bool {
            let mut lambda = 1.0;
            let mut best: Option<(f64, DiscreteField)> = None;
            for _ in 0..20 {
                let cand_int: Vec<f64> =
                    u_int.iter().zip(dir).map(|(a, b)| a + lambda * b).collect();
                let cand = DiscreteField::from_interior(ctx.mesh.clone(), &cand_int);
                let m = merit(&cand);
                if m <= (1.0 - 1e-4 * lambda) * merit_now {
                    *u = cand;
                    return true;
                }
                if best.as_ref().map_or(true, |(bm, _)| m < *bm) {
                    best = Some((m, cand));
                }
                lambda *= 0.5;
            }
            // no sufficient decrease anywhere: take the best simple decrease
            // rather than failing outright
            if let Some((bm, cand)) = best {
                if bm < merit_now * (1.0 - 1e-12) {
                    *u = cand;
                    return true;
                }
            }
            false
        };
        let mut accepted = try_direction(&step, &mut u);
        if !accepted {
            accepted = try_direction(&fallback, &mut u);
        }
        if !accepted {
            break;
        }
        // stagnation guard: flat valleys produce endless accepted
        // micro-steps; give the budget back to the caller instead
        let w = 30;
        if trace.len() > w && trace[trace.len() - 1] > 0.99 * trace[trace.len() - 1 - w] {
            break;
        }
        // wander watchdog: the natural level function tolerates transient
        // residual growth, but two orders of magnitude above the start
        // means the iteration left every basin worth keeping
        if trace[trace.len() - 1] > 100.0 * trace[0] && trace.len() > 3 {
            break;
        }
    }
    let residual = *trace.last().unwrap_or(&f64::INFINITY);
    SolutionRecord {
        energy: energy(&u, params),
        residual,
        constraint: a_eps(&u, params),
        iterations,
        status,
        alpha: params.alpha,
        trace,
        provenance: Provenance::NewtonSeed { seed_index: 0, deflation_rank: 0 },
        field: u,
    }
}

/// Outcome of a deflated multistart search.
pub struct SearchReport {
    pub set: crate::solution::SolutionSet,
    /// smallest Nehari-type norm among accepted solutions
    pub sigma_floor: f64,
    /// energy floor used for the trivial-solution cut
    pub k_eps: f64,
    pub trivial_hits: usize,
    pub failed_seeds: usize,
}

/// Deflated Newton from every seed, collecting distinct nontrivial
/// solutions until `k_max` of them are found. The trivial critical point is
/// deflated from the start (it always exists for h = 0) and is excluded from
/// the output by the norm and energy floors.
pub fn deflated_search(
    ctx: &FemContext,
    params: &ProblemParams,
    k_max: usize,
    seeds: &[DiscreteField],
) -> Result<SearchReport> {
    if !(params.alpha > 0.0) {
        return Err(Error::AlphaZero("deflated search runs on the regularized problem".into()));
    }
    let p = params.p();
    let limit_params = ProblemParams::i_eps(params.spec.clone(), params.eps);
    let floor = energy_floor(&ctx.mesh, &limit_params, 40, 0x5eed);
    let mut deflator = Deflator::new(ctx);
    let mut set = crate::solution::SolutionSet::default();
    let mut trivial_hits = 0;
    let mut failed_seeds = 0;
    if params.h.is_none() {
        deflator.push(&DiscreteField::zeros(ctx.mesh.clone(), false));
    }
    let mut norm_scale: f64 = 0.0;
    for seed in seeds {
        norm_scale = norm_scale.max(norm_eps(seed, p, params.eps));
    }
    // the constrained minimizer of the limit functional is the canonical
    // first solution: compute it by Nehari descent, lift it to the
    // regularized problem, and deflate against it before exploring
    if params.h.is_none() {
        if let Some(first) = seeds.first() {
            if let Ok(ground) = crate::nehari::minimize_on_nehari(ctx, &limit_params, first, 4000) {
                if ground.converged() {
                    let mut rec =
                        damped_newton(ctx, &ground.field, params, &NewtonOptions::plain(60));
                    if rec.converged() {
                        rec.provenance =
                            Provenance::NewtonSeed { seed_index: usize::MAX, deflation_rank: 0 };
                        let field = rec.field.clone();
                        let (_, new) = set.insert(rec);
                        if new {
                            deflator.push(&field);
                        }
                    }
                }
            }
        }
    }
    for (seed_index, seed) in seeds.iter().enumerate() {
        if set.len() >= k_max {
            break;
        }
        let opts = NewtonOptions { budget: 60, frozen: None, deflator: Some(&deflator) };
        let mut rec = damped_newton(ctx, seed, params, &opts);
        if !rec.converged() {
            failed_seeds += 1;
            continue;
        }
        let nrm = norm_eps(&rec.field, p, params.eps);
        let i_energy = energy(&rec.field, &limit_params);
        let nontrivial = nrm >= 1e-3 * norm_scale.max(1e-12) && i_energy >= floor.k_eps * (1.0 - 1e-3);
        if !nontrivial {
            trivial_hits += 1;
            deflator.push(&rec.field);
            continue;
        }
        rec.provenance = Provenance::NewtonSeed { seed_index, deflation_rank: deflator.len() };
        let field = rec.field.clone();
        let (_, new) = set.insert(rec);
        if new {
            deflator.push(&field);
        }
    }
    let sigma_floor = set
        .records
        .iter()
        .map(|r| norm_eps(&r.field, p, params.eps))
        .fold(f64::INFINITY, f64::min);
    Ok(SearchReport { set, sigma_floor, k_eps: floor.k_eps, trivial_hits, failed_seeds })
}

/// Follow one solution down the schedule, warm-starting each stage. The
/// final alpha = 0 stage polishes by preconditioned residual descent with
/// the last positive-stage linearization frozen (the singular limit kernels
/// are never factorized). On a mid-path failure the partial path is
/// returned, the failed stage tagged by its `Budget` status.
pub fn continue_alpha(
    ctx: &FemContext,
    record: &SolutionRecord,
    params: &ProblemParams,
    schedule: &ContinuationSchedule,
) -> Result<Vec<SolutionRecord>> {
    schedule.validate()?;
    if (record.alpha - schedule.head()).abs() > 1e-14 * schedule.head().max(1e-300) {
        return Err(Error::Usage(format!(
            "record solved at alpha = {}, schedule head is {}",
            record.alpha,
            schedule.head()
        )));
    }
    let mut path: Vec<SolutionRecord> = Vec::with_capacity(schedule.alphas.len());
    let mut stages: Vec<ContinuationStage> = vec![ContinuationStage {
        alpha: record.alpha,
        residual: record.residual,
        c1_increment: 0.0,
    }];
    let mut current = record.clone();
    let mut last_positive_alpha = record.alpha;
    path.push(current.clone());
    for &alpha in &schedule.alphas[1..] {
        let stage_params = params.with_alpha(alpha);
        let mut rec = if alpha > 0.0 {
            let r = damped_newton(ctx, &current.field, &stage_params, &NewtonOptions::plain(schedule.newton_budget));
            last_positive_alpha = alpha;
            r
        } else {
            // freeze the linearization at the last positive stage
            let pre_params = params.with_alpha(last_positive_alpha);
            let bmat = assemble_b_terms(ctx, &current.field, &pre_params, [true; 5])?;
            let frozen_factor = ctx.factor(&bmat).ok();
            let opts = NewtonOptions {
                budget: schedule.newton_budget * 10,
                frozen: frozen_factor.as_ref(),
                deflator: None,
            };
            damped_newton(ctx, &current.field, &stage_params, &opts)
        };
        let inc = c1_norm(&rec.field.sub(&current.field));
        stages.push(ContinuationStage { alpha, residual: rec.residual, c1_increment: inc });
        rec.provenance = Provenance::Continuation { stages: stages.clone() };
        let converged = rec.converged();
        path.push(rec.clone());
        current = rec;
        if !converged {
            break;
        }
    }
    Ok(path)
}

/// Random perturbation with C1 norm exactly 1/(2n): a seeded combination of
/// the lowest Dirichlet Laplace eigenfields, rescaled.
pub fn gen_perturbation(ctx: &FemContext, n: usize, seed: u64, basis_dim: usize) -> Result<DiscreteField> {
    use rand::prelude::*;
    if basis_dim == 0 {
        return Err(Error::Usage("basis_dim must be >= 1".into()));
    }
    if n == 0 {
        return Err(Error::Usage("perturbation index must be >= 1".into()));
    }
    let (_, modes) = lowest_eigenpairs(&ctx.stiffness, &ctx.mass, &ctx.symbolic, basis_dim, 0xbead)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n_int = ctx.mesh.n_interior();
    let mut combo = vec![0.0; n_int];
    for mode in &modes {
        let c = 2.0 * rng.gen::<f64>() - 1.0;
        for (acc, m) in combo.iter_mut().zip(mode) {
            *acc += c * m;
        }
    }
    let mut field = DiscreteField::from_interior(ctx.mesh.clone(), &combo);
    field.free_boundary = true;
    let norm = c1_norm(&field);
    if !(norm > 0.0) {
        return Err(Error::Linalg("degenerate perturbation combination".into()));
    }
    let target = 1.0 / (2.0 * n as f64);
    Ok(field.scaled(target / norm))
}

#[derive(Debug, Clone, Serialize)]
pub struct PnMatch {
    pub baseline: usize,
    pub dist: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PnEntry {
    pub n: usize,
    pub alpha: f64,
    pub h_c1norm: f64,
    pub count: usize,
    pub target: usize,
    pub matches: Vec<PnMatch>,
}

impl PnEntry {
    pub fn all_within(&self, r: f64) -> bool {
        self.matches.iter().all(|m| m.dist <= r)
    }
}

#[derive(Debug, Serialize)]
pub struct PerturbationReport {
    pub r_match: f64,
    pub baseline_count: usize,
    pub entries: Vec<PnEntry>,
}

/// Per-entry solution sets of the perturbed problems, kept alongside the
/// wire-format report for downstream certification.
pub struct PnStudy {
    pub report: PerturbationReport,
    pub solution_sets: Vec<crate::solution::SolutionSet>,
    pub perturbations: Vec<DiscreteField>,
}

/// For each n: set alpha_n = 1e-2 / n^2, draw the perturbation, search, and
/// match every found solution to its nearest baseline solution in the
/// amplitude-scaled nodal distance.
pub fn pn_study(
    ctx: &FemContext,
    params: &ProblemParams,
    n_list: &[usize],
    r_match: f64,
    target: usize,
    seeds: &[DiscreteField],
    baseline: &crate::solution::SolutionSet,
    seed: u64,
) -> Result<PnStudy> {
    if baseline.is_empty() {
        return Err(Error::Usage("perturbation study needs a baseline solution set".into()));
    }
    let mut entries = Vec::new();
    let mut sets = Vec::new();
    let mut perturbations = Vec::new();
    for &n in n_list {
        let alpha_n = 1e-2 / (n as f64 * n as f64);
        let h = gen_perturbation(ctx, n, seed ^ (n as u64).wrapping_mul(0x9e37), 6)?;
        let h_c1norm = c1_norm(&h);
        let stage = params.with_alpha(alpha_n).with_perturbation(h.clone());
        // warm seeds: the baseline solutions first, then the caller's
        let mut all_seeds: Vec<DiscreteField> =
            baseline.records.iter().map(|r| r.field.clone()).collect();
        all_seeds.extend(seeds.iter().cloned());
        let report = deflated_search(ctx, &stage, usize::MAX, &all_seeds)?;
        let mut matches = Vec::new();
        for rec in &report.set.records {
            let mut best = (0usize, f64::INFINITY);
            for (bi, base) in baseline.records.iter().enumerate() {
                let amp = base.field.linf().max(1e-300);
                let d = rec.field.sub(&base.field).linf() / amp;
                if d < best.1 {
                    best = (bi, d);
                }
            }
            matches.push(PnMatch { baseline: best.0, dist: best.1 });
        }
        entries.push(PnEntry {
            n,
            alpha: alpha_n,
            h_c1norm,
            count: report.set.len(),
            target,
            matches,
        });
        sets.push(report.set);
        perturbations.push(h);
    }
    Ok(PnStudy {
        report: PerturbationReport { r_match, baseline_count: baseline.len(), entries },
        solution_sets: sets,
        perturbations,
    })
}

/// Interior minimum plus the inward boundary difference quotients. Both must
/// be strictly positive for the certificate to pass.
pub fn positivity_check(record: &SolutionRecord) -> PositivityCertificate {
    let u = &record.field;
    let mesh = &u.mesh;
    let mut min_interior = f64::INFINITY;
    let mut witness = None;
    for &i in &mesh.interior {
        if u.values[i] < min_interior {
            min_interior = u.values[i];
            witness = Some(i);
        }
    }
    if mesh.interior.is_empty() {
        min_interior = 0.0;
    }
    let mut min_quot = f64::INFINITY;
    for el in &mesh.elems {
        for a in 0..el.nv {
            let na = el.v[a];
            if !mesh.boundary[na] {
                continue;
            }
            for b in 0..el.nv {
                let nb = el.v[b];
                if b == a || mesh.boundary[nb] {
                    continue;
                }
                let pa = mesh.nodes[na];
                let pb = mesh.nodes[nb];
                let dist = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
                let quot = (u.values[nb] - u.values[na]) / dist;
                if quot < min_quot {
                    min_quot = quot;
                    if quot <= 0.0 {
                        witness = Some(nb);
                    }
                }
            }
        }
    }
    let pass = min_interior > 0.0 && min_quot > 0.0;
    PositivityCertificate {
        min_interior,
        min_boundary_quotient: min_quot,
        pass,
        witness_node: if pass { None } else { witness },
    }
}

/// Domain-aware starting fields: localized bumps at the topologically
/// meaningful spots (annulus: four angles at two radii; disk and rectangle:
/// the center) plus seeded random low-mode fields, each projected onto the
/// Nehari set of the limit functional for scale.
pub fn default_seeds(
    ctx: &FemContext,
    params: &ProblemParams,
    n_random: usize,
    seed: u64,
) -> Result<Vec<DiscreteField>> {
    use rand::prelude::*;
    let mesh = &ctx.mesh;
    let limit = ProblemParams::i_eps(params.spec.clone(), params.eps);
    let width = params.eps.max(2.0 * mesh.target_h);
    let mut raw: Vec<DiscreteField> = Vec::new();
    // bumps are centered on actual mesh nodes; off-lattice centers make the
    // iteration creep along the nearly flat rotational valley of symmetric
    // domains
    let snap = |cx: f64, cy: f64| -> [f64; 2] {
        let mut best = [cx, cy];
        let mut best_d = f64::INFINITY;
        for (i, p) in mesh.nodes.iter().enumerate() {
            if mesh.boundary[i] {
                continue;
            }
            let d = (p[0] - cx).powi(2) + (p[1] - cy).powi(2);
            if d < best_d {
                best_d = d;
                best = *p;
            }
        }
        best
    };
    let bump = |cx: f64, cy: f64, w: f64| {
        let mesh = mesh.clone();
        let c = snap(cx, cy);
        DiscreteField::from_fn(mesh, false, move |x| {
            let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
            (-d2 / (2.0 * w * w)).exp()
        })
    };
    match mesh.domain {
        DomainSpec::Annulus { inner, outer } => {
            let radii = [
                inner + 0.35 * (outer - inner),
                inner + 0.65 * (outer - inner),
            ];
            for &r in &radii {
                for k in 0..4 {
                    let th = std::f64::consts::FRAC_PI_2 * k as f64;
                    raw.push(bump(r * th.cos(), r * th.sin(), width));
                }
            }
            // a delocalized ring profile reaches the radial branch; its
            // radius is snapped onto a mesh ring
            let mid = snap(0.5 * (inner + outer), 0.0);
            let mid = (mid[0] * mid[0] + mid[1] * mid[1]).sqrt();
            raw.push(DiscreteField::from_fn(mesh.clone(), false, move |x| {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                (-(r - mid).powi(2) / (2.0 * width * width)).exp()
            }));
        }
        DomainSpec::Rectangle { width: w, height } => {
            raw.push(bump(w / 2.0, height / 2.0, width));
        }
        _ => {
            raw.push(bump(0.0, 0.0, width));
        }
    }
    if n_random > 0 {
        let dim = 8.min(mesh.n_interior());
        let (_, modes) = lowest_eigenpairs(&ctx.stiffness, &ctx.mass, &ctx.symbolic, dim, 0xbead)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_random {
            let mut combo = vec![0.0; mesh.n_interior()];
            for mode in &modes {
                let c = 2.0 * rng.gen::<f64>() - 1.0;
                for (acc, m) in combo.iter_mut().zip(mode) {
                    *acc += c * m;
                }
            }
            for v in combo.iter_mut() {
                *v = v.abs();
            }
            raw.push(DiscreteField::from_interior(mesh.clone(), &combo));
        }
    }
    let mut seeds = Vec::with_capacity(raw.len());
    for field in raw {
        if let Ok(point) = project(&field, &limit) {
            seeds.push(point.field);
        }
    }
    if seeds.is_empty() {
        return Err(Error::ConstraintInfeasible("no feasible seed could be projected".into()));
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use crate::nonlinearity::NonlinearitySpec;
    use crate::Nonlinearity;
    use std::sync::Arc;

    fn spec() -> Nonlinearity {
        NonlinearitySpec::single_power(3.0, 1.5, 2).unwrap()
    }

    fn coarse() -> (Arc<crate::mesh::Mesh>, FemContext) {
        let mesh = build_mesh(DomainSpec::Disk { radius: 1.0 }, 0.16).unwrap();
        let ctx = FemContext::new(mesh.clone()).unwrap();
        (mesh, ctx)
    }

    #[test]
    fn newton_refuses_alpha_zero() {
        let (mesh, ctx) = coarse();
        let u = DiscreteField::zeros(mesh, false);
        let params = ProblemParams::i_eps(spec(), 0.3);
        assert!(matches!(newton_solve(&ctx, &u, &params, 10), Err(Error::AlphaZero(_))));
    }

    #[test]
    fn newton_finds_the_trivial_point_from_zero() {
        let (mesh, ctx) = coarse();
        let u = DiscreteField::zeros(mesh, false);
        let params = ProblemParams::regularized(spec(), 0.3, 1e-2);
        let rec = newton_solve(&ctx, &u, &params, 30).unwrap();
        assert!(rec.converged());
        assert!(rec.field.linf() <= 1e-6, "stays at the trivial critical point");
    }

    #[test]
    fn newton_converges_from_the_ground_state_with_quadratic_tail() {
        let (_, ctx) = coarse();
        let params0 = ProblemParams::i_eps(spec(), 0.3);
        let base = crate::nehari::ground_state(&ctx, &params0, 6000).unwrap();
        assert!(base.converged());
        let params = ProblemParams::regularized(spec(), 0.3, 1e-2);
        let rec = newton_solve(&ctx, &base.field, &params, 30).unwrap();
        assert!(rec.converged());
        assert!(rec.iterations <= 15, "took {}", rec.iterations);
        // tail contraction: the last drops should be superlinear-ish
        let t: Vec<f64> = rec.trace.iter().copied().filter(|&r| r > 0.0).collect();
        if t.len() >= 3 {
            let k = t.len();
            let c = t[k - 1] / t[k - 2].powf(1.5);
            assert!(c <= 1e3, "no quadratic-type tail: {:?}", &t[k.saturating_sub(4)..]);
        }
        // the regularized solution stays near the limit ground state
        let dist = rec.field.sub(&base.field).linf();
        assert!(dist <= 0.2 * base.field.linf(), "moved {dist}");
    }

    #[test]
    fn deflation_finds_a_second_point_or_reports_honestly() {
        // on the disk the deflated search must at least recover the ground
        // state and never return duplicates
        let (_, ctx) = coarse();
        let params = ProblemParams::regularized(spec(), 0.35, 1e-2);
        let seeds = default_seeds(&ctx, &params, 6, 42).unwrap();
        let report = deflated_search(&ctx, &params, 8, &seeds).unwrap();
        assert!(!report.set.is_empty(), "ground state must be found");
        if report.set.len() > 1 {
            assert!(report.set.min_pairwise_distance() > report.set.distinct_tol());
        }
        for rec in &report.set.records {
            assert!(rec.residual <= TOL_RES, "undeflated residual bound");
        }
    }

    #[test]
    fn k_max_one_stops_after_first() {
        let (_, ctx) = coarse();
        let params = ProblemParams::regularized(spec(), 0.35, 1e-2);
        let seeds = default_seeds(&ctx, &params, 4, 7).unwrap();
        let report = deflated_search(&ctx, &params, 1, &seeds).unwrap();
        assert_eq!(report.set.len(), 1);
    }

    #[test]
    fn perturbations_scale_and_reproduce() {
        let (_, ctx) = coarse();
        let h10 = gen_perturbation(&ctx, 10, 5, 4).unwrap();
        assert!((c1_norm(&h10) - 0.05).abs() <= 1e-12);
        let h10b = gen_perturbation(&ctx, 10, 5, 4).unwrap();
        assert_eq!(h10.values, h10b.values, "fixed seed reproducibility");
        let mut last = f64::INFINITY;
        for n in [1, 2, 4, 8, 32] {
            let h = gen_perturbation(&ctx, n, 5, 4).unwrap();
            let c = c1_norm(&h);
            assert!((c - 1.0 / (2.0 * n as f64)).abs() <= 1e-12);
            assert!(c < last);
            last = c;
        }
    }

    #[test]
    fn continuation_schedule_contract() {
        let sched = ContinuationSchedule::standard();
        sched.validate().unwrap();
        assert_eq!(sched.alphas.len(), 21);
        assert_eq!(*sched.alphas.last().unwrap(), 0.0);
        let bad = ContinuationSchedule { alphas: vec![1e-2, 1e-2], newton_budget: 10 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_stage_alpha_zero_schedule_is_identity_like() {
        let (_, ctx) = coarse();
        let params0 = ProblemParams::i_eps(spec(), 0.3);
        let base = crate::nehari::ground_state(&ctx, &params0, 6000).unwrap();
        // a 2-stage schedule: tiny positive alpha, then the exact problem
        let alpha = 1e-9;
        let params = ProblemParams::regularized(spec(), 0.3, alpha);
        let warm = newton_solve(&ctx, &base.field, &params, 40).unwrap();
        assert!(warm.converged());
        let sched = ContinuationSchedule { alphas: vec![alpha, 0.0], newton_budget: 50 };
        let path = continue_alpha(&ctx, &warm, &params, &sched).unwrap();
        assert_eq!(path.len(), 2);
        let last = path.last().unwrap();
        assert!(last.converged(), "polish residual {}", last.residual);
        let moved = last.field.sub(&warm.field).linf();
        assert!(moved <= 1e-4 * warm.field.linf().max(1.0), "moved {moved}");
    }

    #[test]
    fn positivity_certificate_cases() {
        let (mesh, ctx) = coarse();
        let params0 = ProblemParams::i_eps(spec(), 0.3);
        let ground = crate::nehari::ground_state(&ctx, &params0, 6000).unwrap();
        let cert = positivity_check(&ground);
        assert!(cert.pass, "{cert:?}");
        assert!(cert.min_interior > 0.0);

        let mut bad = ground.clone();
        let node = mesh.interior[mesh.n_interior() / 2];
        bad.field.values[node] = -0.1;
        let cert = positivity_check(&bad);
        assert!(!cert.pass);
        // the witness names a node with a nonpositive value or quotient
        assert!(cert.witness_node.is_some());

        let zero = SolutionRecord {
            field: DiscreteField::zeros(mesh.clone(), false),
            energy: 0.0,
            residual: 0.0,
            constraint: 0.0,
            iterations: 0,
            status: SolveStatus::Converged,
            alpha: 0.0,
            trace: vec![],
            provenance: Provenance::NehariDescent,
        };
        assert!(!positivity_check(&zero).pass, "zero is not positive");
    }

    #[test]
    fn pn_study_empty_list_gives_empty_report() {
        let (_, ctx) = coarse();
        let params = ProblemParams::regularized(spec(), 0.35, 1e-2);
        let seeds = default_seeds(&ctx, &params, 2, 3).unwrap();
        let report = deflated_search(&ctx, &params, 4, &seeds).unwrap();
        let study = pn_study(&ctx, &params, &[], 0.5, 1, &seeds, &report.set, 9).unwrap();
        assert!(study.report.entries.is_empty());
    }
}
