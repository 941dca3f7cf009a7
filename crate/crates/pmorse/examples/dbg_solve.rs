// debug: counts across eps on the annulus after the watchdog fix
use pmorse::energy::ProblemParams;
use pmorse::fem::FemContext;
use pmorse::mesh::{build_mesh, DomainSpec};
use pmorse::multisolve::*;
use pmorse::nonlinearity::NonlinearitySpec;

fn main() {
    let dom = DomainSpec::Annulus { inner: 1.0, outer: 2.0 };
    let mesh = build_mesh(dom, 1.0 / 12.0).unwrap();
    let ctx = FemContext::new(mesh.clone()).unwrap();
    let spec = NonlinearitySpec::single_power(3.0, 1.5, 2).unwrap();
    for eps in [0.4, 0.2, 0.1, 0.05] {
        let params = ProblemParams::regularized(spec.clone(), eps, 1e-2);
        let seeds = default_seeds(&ctx, &params, 8, 7).unwrap();
        let t = std::time::Instant::now();
        let rep = deflated_search(&ctx, &params, 12, &seeds).unwrap();
        print!("eps {eps}: {} distinct ({} failed) in {:.1?} |", rep.set.len(), rep.failed_seeds, t.elapsed());
        for rec in &rep.set.records {
            let mut peak = 0;
            for (j, &v) in rec.field.values.iter().enumerate() {
                if v > rec.field.values[peak] { peak = j; }
            }
            let p = mesh.nodes[peak];
            print!(" E{:.4}@({:+.2},{:+.2})", rec.energy, p[0], p[1]);
        }
        println!();
    }
}
