//! Machine verification of the operator monotonicity and coercivity
//! inequalities with their explicit constants.
//!
//! Every item reports the minimal slack over the sample and the worst
//! witness; slack items tolerate -1e-12 of floating-point noise, the strict
//! monotonicity item must stay positive.

use crate::energy::{energy, gradient, pairing, ProblemParams};
use crate::error::Result;
use crate::mesh::{build_mesh, norm_eps, DiscreteField, DomainSpec};
use crate::nonlinearity::{b_alpha, growth_constant};
use crate::Nonlinearity;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CertItem {
    pub label: String,
    /// minimal slack (or minimal value for strict items) over the sample
    pub min_value: f64,
    pub witness: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub name: String,
    pub p: f64,
    pub eps: f64,
    pub alpha: f64,
    pub samples: usize,
    pub seed: u64,
    pub items: Vec<CertItem>,
}

impl CertificateReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn print_lines(&self) {
        for item in &self.items {
            println!(
                "[{}] {:<28} min {:+.6e} at {:+.4e}  {}",
                self.name,
                item.label,
                item.min_value,
                item.witness,
                if item.pass { "PASS" } else { "FAIL" }
            );
        }
    }
}

const SLACK_TOL: f64 = -1e-12;

struct Tracker {
    label: &'static str,
    min: f64,
    witness: f64,
}

impl Tracker {
    fn new(label: &'static str) -> Self {
        Tracker { label, min: f64::INFINITY, witness: f64::NAN }
    }
    fn update(&mut self, value: f64, witness: f64) {
        if value < self.min {
            self.min = value;
            self.witness = witness;
        }
    }
    fn slack_item(self) -> CertItem {
        CertItem {
            label: self.label.into(),
            min_value: self.min,
            witness: self.witness,
            pass: self.min >= SLACK_TOL,
        }
    }
    fn strict_item(self) -> CertItem {
        CertItem {
            label: self.label.into(),
            min_value: self.min,
            witness: self.witness,
            pass: self.min > 0.0,
        }
    }
}

/// gamma_alpha = (alpha / (2^(2/(2-p)) - 1))^(1/2), the gradient magnitude
/// above which the regularized flux keeps at least half of the p-Laplace one.
pub fn gamma_alpha(p: f64, alpha: f64) -> f64 {
    (alpha / (2f64.powf(2.0 / (2.0 - p)) - 1.0)).sqrt()
}

fn flux(p: f64, eps_p: f64, alpha: f64, xi: [f64; 2]) -> [f64; 2] {
    let n2 = xi[0] * xi[0] + xi[1] * xi[1];
    let k = eps_p * (alpha + n2).powf(0.5 * (p - 2.0));
    if alpha == 0.0 && n2 == 0.0 {
        return [0.0, 0.0];
    }
    [k * xi[0], k * xi[1]]
}

/// Explicit growth constant for |b_alpha| against 1 + |t|^(p*-1) and for
/// |t b_alpha| against 1 + |t|^p + |t|^q, derived from the polynomial
/// envelope of f with the stored growth constant.
fn b_envelope_constant(spec: &Nonlinearity) -> f64 {
    let c = growth_constant(spec);
    1.0 + 2f64.powf(spec.p - 1.0) + c * 2f64.powf(spec.q)
}

/// c(delta) = min_{t >= 0} (delta t^p* - c1 (1 + t^p + t^q)), by coarse
/// log sampling plus golden-section refinement.
pub fn c_of_delta(delta: f64, c1: f64, p: f64, q: f64, p_star: f64) -> f64 {
    let g = |t: f64| delta * t.powf(p_star) - c1 * (1.0 + t.powf(p) + t.powf(q));
    // bracket the minimizer: g(0) = -c1, g decreases first and grows like t^p*
    let mut t_hi = 1.0;
    while !(g(t_hi) > 0.0 && g(t_hi) > g(0.5 * t_hi)) && t_hi < 1e12 {
        t_hi *= 2.0;
    }
    let mut best_t = 0.0;
    let mut best = g(0.0);
    let n = 400;
    for i in 0..=n {
        let t = 1e-8 * (t_hi / 1e-8).powf(i as f64 / n as f64);
        let v = g(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    // golden refinement around the best sample
    let (mut a, mut b) = (best_t / 4.0, best_t * 4.0 + 1e-8);
    let phi = 0.5 * (3.0 - 5f64.sqrt());
    for _ in 0..120 {
        let x1 = a + phi * (b - a);
        let x2 = b - phi * (b - a);
        if g(x1) < g(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best.min(g(0.5 * (a + b)))
}

/// Sample-based certificates for the structural inequalities of the
/// regularized flux and reaction: flux bound, reaction growth, flux
/// coercivity with C = (eps^p/2) gamma_1^p, reaction sign bound with c(delta)
/// from the explicit one-dimensional minimization, and strict monotonicity.
pub fn verify_splus(
    spec: &Nonlinearity,
    eps: f64,
    alpha: f64,
    sample_count: usize,
    seed: u64,
) -> Result<CertificateReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(crate::error::Error::Usage("certificates are stated for alpha in [0,1]".into()));
    }
    let p = spec.p;
    let q = spec.q;
    let p_star = spec.p_star();
    let eps_p = eps.powf(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let c_u3 = 0.5 * eps_p * gamma_alpha(p, 1.0).powf(p);
    let c_env = b_envelope_constant(spec);
    let deltas = [1e-2, 1e-1, 1.0];
    let c_delta: Vec<f64> = deltas.iter().map(|&d| c_of_delta(d, c_env, p, q, p_star)).collect();

    let mut u1 = Tracker::new("flux bound (u1)");
    let mut u2 = Tracker::new("reaction growth (u2)");
    let mut u3 = Tracker::new("flux coercivity (u3)");
    let mut u4 = vec![
        Tracker::new("reaction sign (u4) d=1e-2"),
        Tracker::new("reaction sign (u4) d=1e-1"),
        Tracker::new("reaction sign (u4) d=1"),
    ];
    let mut u4_env = Tracker::new("reaction envelope (u4 premise)");
    let mut u5 = Tracker::new("strict monotonicity (u5)");

    let sample_mag = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen::<f64>() * 9.0 - 6.0);
    let sample_vec = |rng: &mut ChaCha8Rng| {
        let m = 10f64.powf(rng.gen::<f64>() * 9.0 - 6.0);
        let th = rng.gen::<f64>() * std::f64::consts::TAU;
        [m * th.cos(), m * th.sin()]
    };

    for k in 0..sample_count {
        let xi = sample_vec(&mut rng);
        let nxi = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let fx = flux(p, eps_p, alpha, xi);
        let nfx = (fx[0] * fx[0] + fx[1] * fx[1]).sqrt();
        u1.update(eps_p * nxi.powf(p - 1.0) - nfx, nxi);

        let s = sample_mag(&mut rng) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let b = b_alpha(spec, alpha, s);
        u2.update(c_env * (1.0 + s.abs().powf(p_star - 1.0)) - b.abs(), s);
        u4_env.update(c_env * (1.0 + s.abs().powf(p) + s.abs().powf(q)) - (s * b).abs(), s);
        for (i, &d) in deltas.iter().enumerate() {
            u4[i].update(b * s + d * s.abs().powf(p_star) - c_delta[i], s);
        }

        u3.update(fx[0] * xi[0] + fx[1] * xi[1] - 0.5 * eps_p * nxi.powf(p) + c_u3, nxi);

        // monotonicity pairs: independent, plus equal-norm rotations which
        // exercise the tight case of the proof
        let eta = if k % 8 == 0 {
            let th = 1e-3 * (1.0 + rng.gen::<f64>());
            [xi[0] * th.cos() - xi[1] * th.sin(), xi[0] * th.sin() + xi[1] * th.cos()]
        } else {
            sample_vec(&mut rng)
        };
        if eta != xi {
            let fy = flux(p, eps_p, alpha, eta);
            let dot = (fx[0] - fy[0]) * (xi[0] - eta[0]) + (fx[1] - fy[1]) * (xi[1] - eta[1]);
            u5.update(dot, nxi);
        }
    }

    let mut items = vec![u1.slack_item(), u2.slack_item(), u3.slack_item(), u4_env.slack_item()];
    for t in u4 {
        items.push(t.slack_item());
    }
    items.push(u5.strict_item());
    Ok(CertificateReport {
        name: "splus".into(),
        p,
        eps,
        alpha,
        samples: sample_count,
        seed,
        items,
    })
}

/// Coercivity certificates: the pointwise reaction inequality
/// F_alpha(t) - theta t F_alpha'(t) <= theta alpha^(1/s) f(alpha^(1/s)) on a
/// grid, and the full coercivity estimate on random discrete fields (h = 0,
/// so the measured dual constant vanishes).
pub fn verify_ps(
    spec: &Nonlinearity,
    eps: f64,
    alpha: f64,
    field_count: usize,
    seed: u64,
) -> Result<CertificateReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(crate::error::Error::Usage("certificates are stated for alpha in [0,1]".into()));
    }
    let p = spec.p;
    let theta = spec.theta;
    let bound = theta * alpha.powf(1.0 / spec.s) * spec.f(alpha.powf(1.0 / spec.s));

    let mut pointwise = Tracker::new("reaction coercivity grid");
    for i in 0..2001 {
        let t = -10.0 + 0.01 * i as f64;
        let lhs = spec.cap_f_alpha(alpha, t) - theta * spec.f_alpha(alpha, t) * t;
        pointwise.update(bound - lhs, t);
    }

    // random-field estimate on a fixed coarse disk
    let mesh = build_mesh(DomainSpec::Disk { radius: 1.0 }, 0.2)?;
    let params = ProblemParams::regularized(spec.clone(), eps, alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields = Tracker::new("coercivity on fields (disps)");
    let omega = mesh.measure();
    for k in 0..field_count {
        let amp = 10f64.powf(rng.gen::<f64>() * 2.0 - 1.0);
        let values: Vec<f64> = (0..mesh.n_nodes()).map(|_| amp * (rng.gen::<f64>() - 0.5)).collect();
        let u = DiscreteField::from_values(mesh.clone(), values, false);
        let nrm = norm_eps(&u, p, eps);
        let lhs = (1.0 / p - theta) * nrm.powf(p);
        // c1 = 0 since h = 0; `bound` already carries the theta factor
        let rhs = energy(&u, &params) - theta * pairing(&gradient(&u, &params), &u) + omega * bound;
        fields.update(rhs - lhs, k as f64);
    }

    let items = vec![
        CertItem {
            pass: pointwise.min >= -1e-10,
            label: pointwise.label.into(),
            min_value: pointwise.min,
            witness: pointwise.witness,
        },
        CertItem {
            pass: fields.min >= -1e-10,
            label: fields.label.into(),
            min_value: fields.min,
            witness: fields.witness,
        },
    ];
    Ok(CertificateReport {
        name: "coercivity".into(),
        p,
        eps,
        alpha,
        samples: field_count,
        seed,
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::NonlinearitySpec;

    fn spec_p(p: f64) -> Nonlinearity {
        let q = if 2.0 * p / (2.0 - p) <= 3.0 { 2.5 } else { 3.0 };
        NonlinearitySpec::single_power(q, p, 2).unwrap()
    }

    #[test]
    fn gamma_one_reference_value() {
        // p = 3/2: 2^(2/(1/2)) - 1 = 15
        let g = gamma_alpha(1.5, 1.0);
        assert!((g - (1.0f64 / 15.0).sqrt()).abs() < 1e-15);
        assert!((g - 0.258199).abs() < 1e-6);
    }

    #[test]
    fn splus_certificates_pass_across_p() {
        for p in [1.2, 1.5, 1.8] {
            for alpha in [0.0, 1e-3, 1.0] {
                let rep = verify_splus(&spec_p(p), 0.7, alpha, 3000, 7).unwrap();
                assert!(rep.all_pass(), "p={p} alpha={alpha}: {:#?}", rep.items);
            }
        }
    }

    #[test]
    fn u1_is_tight_at_alpha_zero() {
        let rep = verify_splus(&spec_p(1.5), 1.0, 0.0, 2000, 3).unwrap();
        let u1 = &rep.items[0];
        assert!(u1.min_value.abs() <= 1e-12, "equality case: {}", u1.min_value);
    }

    #[test]
    fn coercivity_certificates_pass() {
        for alpha in [0.0, 1e-3, 1e-1] {
            let rep = verify_ps(&spec_p(1.5), 0.3, alpha, 25, 11).unwrap();
            assert!(rep.all_pass(), "alpha={alpha}: {:#?}", rep.items);
        }
    }

    #[test]
    fn c_of_delta_is_the_true_minimum() {
        let (p, q, ps) = (1.5, 3.0, 6.0);
        let c1 = 2.3;
        for delta in [1e-2, 1.0] {
            let c = c_of_delta(delta, c1, p, q, ps);
            // dense scan oracle
            let mut best = -c1;
            for i in 0..200000 {
                let t = i as f64 * 1e-3;
                best = best.min(delta * t.powf(ps) - c1 * (1.0 + t.powf(p) + t.powf(q)));
            }
            assert!(c <= best + 1e-9 * best.abs().max(1.0), "{c} vs {best}");
            assert!(c >= best - 1e-6 * best.abs().max(1.0), "refinement too loose: {c} vs {best}");
        }
    }
}
