//! Experiment orchestration: the topology-vs-count studies, the epsilon
//! sweep, the perturbed-problem study, and report/plot-data emission.
//!
//! Expected counts are configuration inputs: cohomology is not computed
//! here. For the shipped domains the standard values are disk -> P1 = 1,
//! cat = 1 and annulus -> P1 = 2, cat = 2.

use crate::energy::ProblemParams;
use crate::error::{Error, Result};
use crate::fem::FemContext;
use crate::mesh::{build_mesh, DiscreteField, Mesh};
use crate::morse::{assemble_b, morse_index, MorseReport};
use crate::multisolve::{
    continue_alpha, default_seeds, deflated_search, pn_study, ContinuationSchedule, PnStudy,
};
use crate::nehari::TOL_RES;
use crate::solution::{PositivityCertificate, SolutionRecord, SolutionSet};
use crate::{mesh::DomainSpec, Nonlinearity};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub nonlinearity: Nonlinearity,
    pub eps_list: Vec<f64>,
    pub mesh_h: f64,
    pub schedule: ContinuationSchedule,
    /// maximum number of distinct solutions kept per cell
    pub k_max: usize,
    pub random_seeds: usize,
    pub n_list: Vec<usize>,
    pub r_match: f64,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Poincare polynomial of the domain at t = 1 (configuration input)
    pub p1: usize,
    /// Ljusternik-Schnirelmann category of the domain (configuration input)
    pub cat: usize,
}

impl ExperimentConfig {
    pub fn standard(domain: DomainSpec, nonlinearity: Nonlinearity) -> ExperimentConfig {
        let (p1, cat) = match domain {
            DomainSpec::Annulus { .. } => (2, 2),
            _ => (1, 1),
        };
        ExperimentConfig {
            domain,
            nonlinearity,
            eps_list: vec![0.2],
            mesh_h: 1.0 / 16.0,
            schedule: ContinuationSchedule::standard(),
            k_max: 12,
            random_seeds: 20,
            n_list: vec![2, 4, 8, 16],
            r_match: 0.5,
            seed: 7,
            out_dir: None,
            p1,
            cat,
        }
    }

    pub fn target_2p1(&self) -> usize {
        2 * self.p1 - 1
    }

    pub fn target_cat(&self) -> usize {
        self.cat + 1
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.nonlinearity.validate()?;
        self.schedule.validate()?;
        if self.eps_list.is_empty() {
            return Err(Error::Config("eps_list must be nonempty".into()));
        }
        if !(self.mesh_h > 0.0) {
            return Err(Error::Config("mesh_h must be positive".into()));
        }
        Ok(())
    }

    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in json.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// One solution after continuation to the limit problem.
pub struct CertifiedSolution {
    /// final record at alpha = 0
    pub record: SolutionRecord,
    /// record at the last positive alpha, where the quadratic form lives
    pub record_positive: SolutionRecord,
    pub positivity: PositivityCertificate,
    pub morse: Option<MorseReport>,
    pub nondegenerate: Option<bool>,
    pub c1_increments: Vec<f64>,
}

pub struct CellOutcome {
    pub eps: f64,
    pub solutions: Vec<CertifiedSolution>,
    pub failures: Vec<String>,
    pub sigma_floor: f64,
    pub k_eps: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopologyRow {
    pub eps: f64,
    pub count: usize,
    pub multiplicity_sum: usize,
    pub degenerate: usize,
    pub target_2p1: usize,
    pub target_cat1: usize,
    pub pass: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct TopologyReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub rows: Vec<TopologyRow>,
}

impl TopologyReport {
    /// CSV with '.' decimals, ',' separators and LF endings; columns shared
    /// with the JSON rows field-for-field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,count,multiplicity_sum,degenerate,target_2p1,target_cat1,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.eps, r.count, r.multiplicity_sum, r.degenerate, r.target_2p1, r.target_cat1, r.pass
            ));
        }
        out
    }
}

/// Run one epsilon cell: deflated search at the schedule head, continuation
/// of every distinct solution to alpha = 0, positivity and nondegeneracy
/// certification.
pub fn run_cell(ctx: &FemContext, config: &ExperimentConfig, eps: f64) -> Result<CellOutcome> {
    let spec = config.nonlinearity.clone();
    let head = config.schedule.head();
    let params = ProblemParams::regularized(spec, eps, head);
    let seeds = default_seeds(ctx, &params, config.random_seeds, config.seed)?;
    let search = deflated_search(ctx, &params, config.k_max, &seeds)?;
    let mut solutions = Vec::new();
    let mut failures = Vec::new();
    for (i, rec) in search.set.records.iter().enumerate() {
        match continue_alpha(ctx, rec, &params, &config.schedule) {
            Ok(path) => {
                let last = path.last().expect("nonempty path").clone();
                if !last.converged() {
                    failures.push(format!("solution {i}: continuation stalled at alpha {}", last.alpha));
                    continue;
                }
                // the last positive stage hosts the quadratic form
                let positive = path[path.len() - 2].clone();
                let c1_increments: Vec<f64> = match &last.provenance {
                    crate::solution::Provenance::Continuation { stages } => {
                        stages.iter().skip(1).map(|s| s.c1_increment).collect()
                    }
                    _ => Vec::new(),
                };
                let positivity = crate::multisolve::positivity_check(&last);
                let pos_params = params.with_alpha(positive.alpha);
                let (morse, nondegenerate) = match assemble_b(ctx, &positive.field, &pos_params)
                    .and_then(|pair| morse_index(ctx, &pair))
                {
                    Ok(report) => {
                        let nd = report.m == report.m_star;
                        (Some(report), Some(nd))
                    }
                    Err(e) => {
                        failures.push(format!("solution {i}: index computation failed: {e}"));
                        (None, None)
                    }
                };
                solutions.push(CertifiedSolution {
                    record: last,
                    record_positive: positive,
                    positivity,
                    morse,
                    nondegenerate,
                    c1_increments,
                });
            }
            Err(e) => failures.push(format!("solution {i}: {e}")),
        }
    }
    Ok(CellOutcome { eps, solutions, failures, sigma_floor: search.sigma_floor, k_eps: search.k_eps })
}

fn worker_pool() -> rayon::ThreadPool {
    let threads = std::env::var("PMORSE_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| rayon::current_num_threads().min(8));
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("worker pool")
}

/// The counting experiment over the epsilon list. Cells run concurrently up
/// to the PMORSE_WORKERS cap; emission is serialized afterwards.
pub fn topology_experiment(config: &ExperimentConfig) -> Result<(TopologyReport, Vec<CellOutcome>)> {
    config.validate()?;
    let mesh = build_mesh(config.domain, config.mesh_h)?;
    let ctx = FemContext::new(mesh)?;
    let pool = worker_pool();
    let outcomes: Vec<Result<CellOutcome>> = pool.install(|| {
        use rayon::prelude::*;
        config.eps_list.par_iter().map(|&eps| run_cell(&ctx, config, eps)).collect()
    });
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for outcome in outcomes {
        let cell = outcome?;
        let positive: Vec<&CertifiedSolution> =
            cell.solutions.iter().filter(|s| s.positivity.pass).collect();
        let count = positive.len();
        let nondeg = positive.iter().filter(|s| s.nondegenerate == Some(true)).count();
        let degenerate = count - nondeg;
        rows.push(TopologyRow {
            eps: cell.eps,
            count,
            multiplicity_sum: nondeg,
            degenerate,
            target_2p1: config.target_2p1(),
            target_cat1: config.target_cat(),
            pass: count >= config.target_2p1().max(config.target_cat()),
            failures: cell.failures.clone(),
        });
        cells.push(cell);
    }
    let report = TopologyReport {
        config: config.clone(),
        config_hash: config.content_hash(),
        rows,
    };
    if let Some(dir) = &config.out_dir {
        emit_topology(dir, &report, &cells)?;
    }
    Ok((report, cells))
}

fn emit_topology(dir: &Path, report: &TopologyReport, cells: &[CellOutcome]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    std::fs::write(dir.join("table.csv"), report.to_csv())?;
    let mut mesh_written: Option<&Arc<Mesh>> = None;
    for cell in cells {
        for (i, sol) in cell.solutions.iter().enumerate() {
            let name = format!("solution_eps{}_{}.json", cell.eps, i);
            let field = &sol.record.field;
            if mesh_written.is_none() {
                std::fs::write(
                    dir.join("mesh.json"),
                    serde_json::to_string(&field.mesh.to_json())? + "\n",
                )?;
                mesh_written = Some(&field.mesh);
            }
            let mut obj = sol.record.to_json(&name);
            if let Some(map) = obj.as_object_mut() {
                map.insert("field".into(), field.to_json());
                if let Some(m) = &sol.morse {
                    map.insert("morse".into(), m.to_json());
                }
                map.insert("positivity".into(), serde_json::to_value(&sol.positivity)?);
            }
            std::fs::write(dir.join(&name), serde_json::to_string(&obj)? + "\n")?;
        }
    }
    Ok(())
}

/// Ground solve + perturbation study on one domain (the disk in the shipped
/// experiments).
pub fn perturbation_experiment(config: &ExperimentConfig) -> Result<PnStudy> {
    config.validate()?;
    let eps = config.eps_list[0];
    let mesh = build_mesh(config.domain, config.mesh_h)?;
    let ctx = FemContext::new(mesh)?;
    let head = config.schedule.head();
    let params = ProblemParams::regularized(config.nonlinearity.clone(), eps, head);
    let seeds = default_seeds(&ctx, &params, config.random_seeds, config.seed)?;
    let search = deflated_search(&ctx, &params, config.k_max, &seeds)?;
    if search.set.is_empty() {
        return Err(Error::NonConverged("no baseline solution found for the perturbation study".into()));
    }
    let study = pn_study(
        &ctx,
        &params,
        &config.n_list,
        config.r_match,
        config.target_2p1(),
        &seeds,
        &search.set,
        config.seed,
    )?;
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("perturbation.json"),
            serde_json::to_string_pretty(&study.report)? + "\n",
        )?;
    }
    Ok(study)
}

/// Single ground-state solve, returning the certified solution and its
/// Morse report. Exit-code 3 material when the mandatory stage fails.
pub fn solve_experiment(config: &ExperimentConfig) -> Result<(CellOutcome, SolutionSet)> {
    config.validate()?;
    let eps = config.eps_list[0];
    let mesh = build_mesh(config.domain, config.mesh_h)?;
    let ctx = FemContext::new(mesh)?;
    let cell = run_cell(&ctx, config, eps)?;
    if cell.solutions.is_empty() {
        return Err(Error::NonConverged(format!(
            "no converged solution at eps = {eps} (residual target {TOL_RES:.1e})"
        )));
    }
    let mut set = SolutionSet::default();
    for s in &cell.solutions {
        set.insert(s.record.clone());
    }
    if let Some(dir) = &config.out_dir {
        emit_solve(dir, config, &cell)?;
    }
    Ok((cell, set))
}

fn emit_solve(dir: &Path, config: &ExperimentConfig, cell: &CellOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut solutions = Vec::new();
    for (i, sol) in cell.solutions.iter().enumerate() {
        let field_name = format!("field_{i}.json");
        std::fs::write(
            dir.join(&field_name),
            serde_json::to_string(&sol.record.field.to_json())? + "\n",
        )?;
        let mut obj = sol.record.to_json(&field_name);
        if let Some(map) = obj.as_object_mut() {
            if let Some(m) = &sol.morse {
                map.insert("morse".into(), m.to_json());
            }
            map.insert("positivity".into(), serde_json::to_value(&sol.positivity)?);
        }
        solutions.push(obj);
    }
    let report = serde_json::json!({
        "config": config,
        "config_hash": config.content_hash(),
        "eps": cell.eps,
        "sigma_floor": cell.sigma_floor,
        "k_eps": cell.k_eps,
        "solutions": solutions,
        "failures": cell.failures,
    });
    std::fs::write(dir.join("solve.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(())
}

/// Field dump for external plotting.
pub fn dump_field(dir: &Path, name: &str, field: &DiscreteField) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), serde_json::to_string(&field.to_json())? + "\n")?;
    Ok(())
}
