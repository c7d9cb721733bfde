//! Experiment harness: sweep (length factor × classical load × HCF budget
//! × repetition), one GA run per cell, seeded so the whole grid is
//! reproducible, with CSV emission.
//!
//! Seeding: every cell derives its GA seed from the base seed and the full
//! cell coordinates; demand realizations derive from (factor, load,
//! repetition) only, so all budgets of a repetition optimize the same
//! demand set. Cells run in parallel and are merged in grid order, so the
//! output never depends on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{fnv1a64, Config};
use crate::ga::evolve;
use crate::net::{generate_demands, Topology};
use crate::phys::ClassicalLoad;
use crate::provision::Evaluator;
use crate::{Error, Result};

/// Classical-load level of a sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadLevel {
    Half,
    Full,
}

impl LoadLevel {
    pub fn fraction(self) -> f64 {
        match self {
            LoadLevel::Half => 0.5,
            LoadLevel::Full => 1.0,
        }
    }

    pub fn classical_load(self) -> ClassicalLoad {
        ClassicalLoad::new(self.fraction())
    }

    pub fn name(self) -> &'static str {
        match self {
            LoadLevel::Half => "half",
            LoadLevel::Full => "full",
        }
    }
}

impl std::fmt::Display for LoadLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Topology file; empty means the bundled Tokyo network.
    pub topology_path: String,
    pub budgets: Vec<f64>,
    pub length_factors: Vec<f64>,
    pub loads: Vec<LoadLevel>,
    pub repetitions: usize,
    pub demand_count: usize,
    pub rate_range: (f64, f64),
    pub base_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            topology_path: String::new(),
            budgets: (0..=10).map(|i| i as f64 / 10.0).collect(),
            length_factors: vec![1.0, 2.0, 4.0, 8.0],
            loads: vec![LoadLevel::Half, LoadLevel::Full],
            repetitions: 50,
            demand_count: 10,
            rate_range: (2.0, 20.0),
            base_seed: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.budgets.is_empty() || self.budgets.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::Config("budgets must lie in [0,1]".into()));
        }
        if self.length_factors.iter().any(|&f| f <= 0.0) {
            return Err(Error::Config("length factors must be positive".into()));
        }
        if self.loads.is_empty() {
            return Err(Error::Config("need at least one load level".into()));
        }
        if self.demand_count < 1 {
            return Err(Error::Config("need at least one demand".into()));
        }
        if self.rate_range.0 >= self.rate_range.1 {
            return Err(Error::Config("rate range must be non-empty".into()));
        }
        Ok(())
    }
}

/// Apply the desk-scale preset: quick full sweeps on a laptop.
pub fn apply_desk_preset(cfg: &mut Config) {
    cfg.sweep.repetitions = 10;
    cfg.ga.population = 60;
}

/// One optimized sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub length_factor: f64,
    pub load: LoadLevel,
    pub budget: f64,
    pub repetition: usize,
    /// GA seed of this cell.
    pub seed: u64,
    /// Quantum-module cost of the best placement.
    pub cost: usize,
    /// Unserved key rate, percent of requested.
    pub unserved_pct: f64,
    /// C-band share of allocated channels, percent.
    pub cband_pct: f64,
    pub best_placement: String,
    /// Wall-clock seconds; informational only, never written to CSV.
    pub runtime_s: f64,
}

/// Mean ± sample standard deviation over the repetitions of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub length_factor: f64,
    pub load: LoadLevel,
    pub budget: f64,
    pub repetitions: usize,
    pub mean_cost: f64,
    pub std_cost: f64,
    pub mean_unserved_pct: f64,
    pub std_unserved_pct: f64,
    pub mean_cband_pct: f64,
    pub std_cband_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub aggregates: Vec<AggregateRow>,
}

fn hash_parts(parts: &[u64]) -> u64 {
    let mut bytes = Vec::with_capacity(parts.len() * 8);
    for p in parts {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    fnv1a64(&bytes)
}

/// GA seed for one cell.
pub fn cell_seed(base: u64, factor: f64, load: LoadLevel, budget_index: usize, repetition: usize) -> u64 {
    base ^ hash_parts(&[factor.to_bits(), load.fraction().to_bits(), budget_index as u64, repetition as u64])
}

/// Demand seed for one repetition; independent of budget so every budget
/// of a repetition sees the same demand set.
pub fn demand_seed(base: u64, factor: f64, load: LoadLevel, repetition: usize) -> u64 {
    base ^ hash_parts(&[factor.to_bits(), load.fraction().to_bits(), u64::MAX, repetition as u64])
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run the full sweep grid. Deterministic for a fixed config.
///
/// Work is parallelized over (factor, load, repetition) jobs; the budgets
/// of one repetition run sequentially inside a job so they share a demand
/// set and an SKR cache. Results merge in grid order regardless of
/// scheduling.
pub fn run_sweep(config: &Config, topo: &Topology) -> Result<SweepOutput> {
    config.validate()?;
    let sweep = &config.sweep;
    let catalog = config.catalog();

    let scaled_topos: Vec<Topology> =
        sweep.length_factors.iter().map(|&f| topo.scale_lengths(f)).collect();
    let class_loads: Vec<ClassicalLoad> =
        sweep.loads.iter().map(|&l| l.classical_load()).collect();

    struct Job {
        factor_idx: usize,
        load_idx: usize,
        repetition: usize,
    }
    let mut jobs = Vec::new();
    for factor_idx in 0..sweep.length_factors.len() {
        for load_idx in 0..sweep.loads.len() {
            for repetition in 0..sweep.repetitions {
                jobs.push(Job { factor_idx, load_idx, repetition });
            }
        }
    }

    let per_job: Result<Vec<Vec<SweepRecord>>> = jobs
        .par_iter()
        .map(|job| {
            let factor = sweep.length_factors[job.factor_idx];
            let load = sweep.loads[job.load_idx];
            let scaled = &scaled_topos[job.factor_idx];
            let demands = generate_demands(
                scaled,
                sweep.demand_count,
                sweep.rate_range,
                demand_seed(sweep.base_seed, factor, load, job.repetition),
            );
            let requested: f64 = demands.iter().map(|d| d.rate_kbps).sum();
            let evaluator = Evaluator::new(
                &catalog,
                &config.qkd,
                &class_loads[job.load_idx],
                config.ga.weights,
            );
            sweep
                .budgets
                .iter()
                .enumerate()
                .map(|(budget_index, &budget)| {
                    let started = std::time::Instant::now();
                    let mut ga = config.ga.clone();
                    ga.budget_fraction = budget;
                    ga.seed =
                        cell_seed(sweep.base_seed, factor, load, budget_index, job.repetition);
                    // the grid endpoint is a forced placement, not a
                    // search: a full budget means every link upgraded (the
                    // cost lower bound), and upgrading weakly dominates,
                    // so all-ones is optimal there
                    let full_budget = crate::net::budget_links(budget, scaled.num_links())
                        == scaled.num_links();
                    let (placement, breakdown) = if full_budget {
                        let p = crate::net::PlacementVector::all_one(scaled.num_links());
                        let b = evaluator.evaluate_placement(scaled, &p, &demands)?;
                        (p, b)
                    } else {
                        let (best, _history) = evolve(&ga, scaled, &demands, &evaluator)?;
                        let b = best.fitness.clone().expect("evaluated");
                        (best.placement, b)
                    };
                    Ok(SweepRecord {
                        length_factor: factor,
                        load,
                        budget,
                        repetition: job.repetition,
                        seed: ga.seed,
                        cost: breakdown.total_cost,
                        unserved_pct: 100.0 * breakdown.total_unserved_kbps / requested,
                        cband_pct: 100.0 * breakdown.c_band_share,
                        best_placement: placement.bit_string(),
                        runtime_s: started.elapsed().as_secs_f64(),
                    })
                })
                .collect()
        })
        .collect();
    let per_job = per_job?;

    // flatten to grid order: factor, load, budget, repetition
    let mut records = Vec::with_capacity(jobs.len() * sweep.budgets.len());
    for factor_idx in 0..sweep.length_factors.len() {
        for load_idx in 0..sweep.loads.len() {
            for budget_index in 0..sweep.budgets.len() {
                for repetition in 0..sweep.repetitions {
                    let job_idx = (factor_idx * sweep.loads.len() + load_idx) * sweep.repetitions
                        + repetition;
                    records.push(per_job[job_idx][budget_index].clone());
                }
            }
        }
    }

    let mut aggregates = Vec::new();
    for &factor in &sweep.length_factors {
        for &load in &sweep.loads {
            for &budget in &sweep.budgets {
                let group: Vec<&SweepRecord> = records
                    .iter()
                    .filter(|r| r.length_factor == factor && r.load == load && r.budget == budget)
                    .collect();
                let costs: Vec<f64> = group.iter().map(|r| r.cost as f64).collect();
                let unserved: Vec<f64> = group.iter().map(|r| r.unserved_pct).collect();
                let cband: Vec<f64> = group.iter().map(|r| r.cband_pct).collect();
                let (mean_cost, std_cost) = mean_std(&costs);
                let (mean_unserved_pct, std_unserved_pct) = mean_std(&unserved);
                let (mean_cband_pct, std_cband_pct) = mean_std(&cband);
                aggregates.push(AggregateRow {
                    length_factor: factor,
                    load,
                    budget,
                    repetitions: group.len(),
                    mean_cost,
                    std_cost,
                    mean_unserved_pct,
                    std_unserved_pct,
                    mean_cband_pct,
                    std_cband_pct,
                });
            }
        }
    }

    Ok(SweepOutput { records, aggregates })
}

/// Per-budget mean C-band share (percent) averaged across every length
/// factor present in `records` (and all loads and repetitions).
pub fn cband_share(records: &[SweepRecord]) -> Result<Vec<(f64, f64)>> {
    let mut factors: Vec<f64> = Vec::new();
    let mut budgets: Vec<f64> = Vec::new();
    for r in records {
        if !factors.contains(&r.length_factor) {
            factors.push(r.length_factor);
        }
        if !budgets.contains(&r.budget) {
            budgets.push(r.budget);
        }
    }
    budgets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::with_capacity(budgets.len());
    for &budget in &budgets {
        let group: Vec<&SweepRecord> = records.iter().filter(|r| r.budget == budget).collect();
        for &factor in &factors {
            if !group.iter().any(|r| r.length_factor == factor) {
                return Err(Error::MissingFactor { factor });
            }
        }
        let mean = group.iter().map(|r| r.cband_pct).sum::<f64>() / group.len() as f64;
        out.push((budget, mean));
    }
    Ok(out)
}

fn csv_header(config_hash: &str, base_seed: u64) -> String {
    format!("# config_hash={config_hash}\n# base_seed={base_seed}\n")
}

/// Per-run records as CSV with a provenance header.
pub fn records_csv(records: &[SweepRecord], config_hash: &str, base_seed: u64) -> String {
    let mut out = csv_header(config_hash, base_seed);
    out.push_str("factor,load,budget,repetition,seed,cost,unserved_pct,cband_pct,best_placement\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{:.6},{}\n",
            r.length_factor,
            r.load,
            r.budget,
            r.repetition,
            r.seed,
            r.cost,
            r.unserved_pct,
            r.cband_pct,
            r.best_placement
        ));
    }
    out
}

/// Aggregates as CSV with a provenance header.
pub fn aggregates_csv(aggregates: &[AggregateRow], config_hash: &str, base_seed: u64) -> String {
    let mut out = csv_header(config_hash, base_seed);
    out.push_str(
        "factor,load,budget,repetitions,mean_cost,std_cost,mean_unserved_pct,std_unserved_pct,mean_cband_pct,std_cband_pct\n",
    );
    for a in aggregates {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            a.length_factor,
            a.load,
            a.budget,
            a.repetitions,
            a.mean_cost,
            a.std_cost,
            a.mean_unserved_pct,
            a.std_unserved_pct,
            a.mean_cband_pct,
            a.std_cband_pct
        ));
    }
    out
}
