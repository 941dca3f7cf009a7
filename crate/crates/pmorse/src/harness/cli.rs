//! Command-line entry point.
//!
//! Subcommands: `solve`, `sweep`, `morse`, `perturb`, `verify`, `mesh-dump`.
//! Configuration comes from an optional JSON file mirroring
//! `ExperimentConfig`, with flags overriding file values. Exit codes: 0 on
//! success, 2 on validation/usage errors, 3 when a mandatory stage fails to
//! converge (or a certificate fails).

use super::experiment::{
    perturbation_experiment, solve_experiment, topology_experiment, ExperimentConfig,
};
use super::verify::{verify_ps, verify_splus};
use crate::error::{Error, Result};
use crate::mesh::{build_mesh, DomainSpec};
use crate::nonlinearity::{default_check_grid, verify_approx_bounds, NonlinearitySpec};
use crate::Nonlinearity;
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "pmorse",
    about = "Ground states, deflated continuation and Morse certificates for singularly perturbed p-Laplace problems",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem instance and certify the solutions found
    Solve(RunArgs),
    /// Sweep the epsilon list and emit the topology-count table
    Sweep(RunArgs),
    /// Solve, then print the Morse report of each solution
    Morse(RunArgs),
    /// Run the perturbed-problem study against the baseline solutions
    Perturb(RunArgs),
    /// Verify the inequality certificates
    Verify(VerifyArgs),
    /// Build a mesh and dump it as JSON
    MeshDump(MeshDumpArgs),
}

#[derive(Args, Clone)]
struct DomainArgs {
    /// disk | annulus | rectangle | interval
    #[arg(long)]
    domain: Option<String>,
    /// disk radius
    #[arg(long = "R")]
    radius: Option<f64>,
    /// annulus inner radius
    #[arg(long)]
    r0: Option<f64>,
    /// annulus outer radius
    #[arg(long)]
    r1: Option<f64>,
    /// interval endpoints
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// rectangle size
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
}

impl DomainArgs {
    fn build(&self) -> Result<Option<DomainSpec>> {
        let Some(kind) = &self.domain else { return Ok(None) };
        let d = match kind.as_str() {
            "disk" => DomainSpec::Disk { radius: self.radius.unwrap_or(1.0) },
            "annulus" => DomainSpec::Annulus {
                inner: self.r0.unwrap_or(1.0),
                outer: self.r1.unwrap_or(2.0),
            },
            "rectangle" => DomainSpec::Rectangle {
                width: self.width.unwrap_or(1.0),
                height: self.height.unwrap_or(1.0),
            },
            "interval" => DomainSpec::Interval { a: self.a.unwrap_or(0.0), b: self.b.unwrap_or(1.0) },
            other => return Err(Error::Usage(format!("unknown domain kind '{other}'"))),
        };
        d.validate()?;
        Ok(Some(d))
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file mirroring the experiment configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    domain: DomainArgs,
    /// epsilon values, comma separated
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// subcritical exponent of the homogeneous reaction (t+)^(q-1)
    #[arg(long)]
    q: Option<f64>,
    #[arg(long = "h-mesh")]
    h_mesh: Option<f64>,
    /// number of random seeds added to the structured ones
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// head of the continuation schedule
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long = "k-max")]
    k_max: Option<usize>,
    /// perturbation indices, comma separated
    #[arg(long = "n-list", value_delimiter = ',')]
    n_list: Vec<usize>,
    #[arg(long = "r-match")]
    r_match: Option<f64>,
    #[arg(long)]
    p1: Option<usize>,
    #[arg(long)]
    cat: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut config = if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            let domain = self
                .domain
                .build()?
                .ok_or_else(|| Error::Usage("either --config or --domain is required".into()))?;
            let p = self.p.unwrap_or(1.5);
            let q = self.q.unwrap_or(3.0);
            let spec = NonlinearitySpec::single_power(q, p, 2)?;
            ExperimentConfig::standard(domain, spec)
        };
        // flag overrides
        if let Some(d) = self.domain.build()? {
            config.domain = d;
        }
        if self.config.is_some() && (self.p.is_some() || self.q.is_some()) {
            let p = self.p.unwrap_or(config.nonlinearity.p);
            let q = self.q.unwrap_or(config.nonlinearity.q);
            config.nonlinearity = NonlinearitySpec::single_power(q, p, 2)?;
        }
        if !self.eps.is_empty() {
            config.eps_list = self.eps;
        }
        if let Some(h) = self.h_mesh {
            config.mesh_h = h;
        }
        if let Some(s) = self.seeds {
            config.random_seeds = s;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(a0) = self.alpha0 {
            let mut alphas: Vec<f64> = (0..20).map(|k| a0 * 0.5f64.powi(k)).collect();
            alphas.push(0.0);
            config.schedule.alphas = alphas;
        }
        if let Some(k) = self.k_max {
            config.k_max = k;
        }
        if !self.n_list.is_empty() {
            config.n_list = self.n_list;
        }
        if let Some(r) = self.r_match {
            config.r_match = r;
        }
        if let Some(v) = self.p1 {
            config.p1 = v;
        }
        if let Some(v) = self.cat {
            config.cat = v;
        }
        if let Some(out) = self.out {
            config.out_dir = Some(out);
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1.5)]
    p: f64,
    #[arg(long, default_value_t = 3.0)]
    q: f64,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1e-3)]
    alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MeshDumpArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long = "h-mesh", default_value_t = 0.1)]
    h_mesh: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NonConverged(_) => 3,
                _ => 2,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Command::Solve(args) => {
            let config = args.into_config()?;
            let (cell, _) = solve_experiment(&config)?;
            let solutions: Vec<serde_json::Value> = cell
                .solutions
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut obj = s.record.to_json(&format!("field_{i}.json"));
                    if let Some(map) = obj.as_object_mut() {
                        if let Some(m) = &s.morse {
                            map.insert("morse".into(), m.to_json());
                        }
                        map.insert("positive".into(), serde_json::Value::Bool(s.positivity.pass));
                    }
                    obj
                })
                .collect();
            let out = serde_json::json!({
                "config_hash": config.content_hash(),
                "eps": cell.eps,
                "count": solutions.len(),
                "solutions": solutions,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(0)
        }
        Command::Sweep(args) => {
            let config = args.into_config()?;
            let (report, cells) = topology_experiment(&config)?;
            print!("{}", report.to_csv());
            let all_have_solutions = cells.iter().all(|c| !c.solutions.is_empty());
            Ok(if all_have_solutions { 0 } else { 3 })
        }
        Command::Morse(args) => {
            let config = args.into_config()?;
            let (cell, _) = solve_experiment(&config)?;
            let reports: Vec<serde_json::Value> = cell
                .solutions
                .iter()
                .filter_map(|s| s.morse.as_ref().map(|m| m.to_json()))
                .collect();
            println!("{}", serde_json::to_string_pretty(&serde_json::Value::Array(reports))?);
            Ok(0)
        }
        Command::Perturb(args) => {
            let config = args.into_config()?;
            let study = perturbation_experiment(&config)?;
            println!("{}", serde_json::to_string_pretty(&study.report)?);
            Ok(0)
        }
        Command::Verify(args) => {
            let spec: Nonlinearity = NonlinearitySpec::single_power(args.q, args.p, 2)?;
            let splus = verify_splus(&spec, args.eps, args.alpha, args.samples, args.seed)?;
            let coercive = verify_ps(&spec, args.eps.min(0.5), args.alpha, 50, args.seed)?;
            let grid: Vec<f64> = (0..2001).map(|i| -10.0 + 0.01 * i as f64).collect();
            let bounds = verify_approx_bounds(&spec, args.alpha, &grid)?;
            let assumptions = crate::nonlinearity::check_assumptions(&spec, &default_check_grid())?;
            splus.print_lines();
            coercive.print_lines();
            println!(
                "[closeness] min slack {:+.6e} (branch {})  {}",
                bounds.min_slack(),
                bounds.g1a_branch,
                if bounds.min_slack() >= -1e-12 { "PASS" } else { "FAIL" }
            );
            println!(
                "[assumptions] growth conditions  {}",
                if assumptions.all_pass() { "PASS" } else { "FAIL" }
            );
            let all = splus.all_pass()
                && coercive.all_pass()
                && bounds.min_slack() >= -1e-12
                && assumptions.all_pass();
            if let Some(out) = args.out {
                let report = serde_json::json!({
                    "splus": splus,
                    "coercivity": coercive,
                    "closeness": bounds,
                    "assumptions": assumptions,
                });
                std::fs::create_dir_all(out.parent().unwrap_or(std::path::Path::new(".")))?;
                std::fs::write(&out, serde_json::to_string_pretty(&report)? + "\n")?;
            }
            Ok(if all { 0 } else { 3 })
        }
        Command::MeshDump(args) => {
            let domain = args
                .domain
                .build()?
                .ok_or_else(|| Error::Usage("--domain is required".into()))?;
            let mesh = build_mesh(domain, args.h_mesh)?;
            let json = serde_json::to_string(&mesh.to_json())?;
            match args.out {
                Some(path) => std::fs::write(path, json + "\n")?,
                None => println!("{json}"),
            }
            Ok(0)
        }
    }
}
