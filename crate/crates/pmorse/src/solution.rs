//! Converged critical points and collections of distinct ones.

use crate::mesh::DiscreteField;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Converged,
    Budget,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::Budget => "budget",
        }
    }
}

/// How a record came to exist; kept for run logs.
#[derive(Debug, Clone, Serialize)]
pub enum Provenance {
    NehariDescent,
    NewtonSeed { seed_index: usize, deflation_rank: usize },
    Continuation { stages: Vec<ContinuationStage> },
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationStage {
    pub alpha: f64,
    pub residual: f64,
    /// discrete C1 distance to the previous stage
    pub c1_increment: f64,
}

/// A converged (or budget-exhausted) critical point candidate.
#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub field: DiscreteField,
    /// energy of the functional the record was solved for
    pub energy: f64,
    /// dual-surrogate norm of the free gradient
    pub residual: f64,
    /// Nehari constraint value A_eps(u)
    pub constraint: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// alpha of the functional this record solves
    pub alpha: f64,
    /// residual history of the final solve
    pub trace: Vec<f64>,
    pub provenance: Provenance,
}

impl SolutionRecord {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// The exact wire format for a solution record; `field_ref` points at the
    /// separately dumped field file (or carries a content hash).
    pub fn to_json(&self, field_ref: &str) -> serde_json::Value {
        serde_json::json!({
            "energy": self.energy,
            "residual": self.residual,
            "constraint": self.constraint,
            "iterations": self.iterations,
            "field_ref": field_ref,
            "status": self.status.as_str(),
        })
    }
}

/// Distinct solutions with the scale-free separation certificate: two fields
/// are the same solution when their nodal max distance stays below
/// `tol_factor` times the largest amplitude in the set.
#[derive(Debug)]
pub struct SolutionSet {
    pub records: Vec<SolutionRecord>,
    pub hits: Vec<usize>,
    pub tol_factor: f64,
}

impl Default for SolutionSet {
    fn default() -> Self {
        SolutionSet { records: Vec::new(), hits: Vec::new(), tol_factor: 1e-3 }
    }
}

impl SolutionSet {
    pub fn amplitude(&self) -> f64 {
        self.records.iter().map(|r| r.field.linf()).fold(0.0, f64::max)
    }

    pub fn distinct_tol(&self) -> f64 {
        self.tol_factor * self.amplitude()
    }

    /// Index of the member matching `field`, if any.
    pub fn find_match(&self, field: &DiscreteField) -> Option<usize> {
        let tol = self.distinct_tol().max(1e-14);
        (0..self.records.len()).find(|&i| self.records[i].field.sub(field).linf() <= tol)
    }

    /// Insert if distinct; returns the index and whether it was new.
    pub fn insert(&mut self, record: SolutionRecord) -> (usize, bool) {
        if let Some(i) = self.find_match(&record.field) {
            self.hits[i] += 1;
            // keep the sharper representative
            if record.residual < self.records[i].residual {
                self.records[i] = record;
            }
            (i, false)
        } else {
            self.records.push(record);
            self.hits.push(1);
            (self.records.len() - 1, true)
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Smallest pairwise nodal distance, as a distinctness certificate.
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.records.len() {
            for j in i + 1..self.records.len() {
                best = best.min(self.records[i].field.sub(&self.records[j].field).linf());
            }
        }
        best
    }
}

/// Discrete positivity certificate: interior nodal minimum and the inward
/// boundary difference quotients (a Hopf-type check).
#[derive(Debug, Clone, Serialize)]
pub struct PositivityCertificate {
    pub min_interior: f64,
    pub min_boundary_quotient: f64,
    pub pass: bool,
    pub witness_node: Option<usize>,
}
