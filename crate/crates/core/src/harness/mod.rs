//! Seeded Monte Carlo estimation of rejection probabilities.
//!
//! Run `r` of cell `c` draws its data from the stream
//! `(master_seed, c, r, 0)` and seeds its bootstrap with
//! `derive_seed(master_seed, [c, r, 1])`. All `(cell, run)` pairs are
//! mapped in one flat batch and aggregated as integer counts in run order,
//! so reports are bit-identical for any thread count.

mod report;

pub use report::{emit_report, ReportFormat};

use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_test, BootstrapConfig, SmoothingConfig, TestOutcome, DEFAULT_ALPHAS};
use crate::error::{Error, Result};
use crate::exec::{with_threads, Execution};
use crate::generators::{generate, ModelId, ModelSpec};
use crate::rng;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_RUNS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub model: ModelSpec,
    pub alphas: Vec<f64>,
}

impl CellSpec {
    pub fn new(model: ModelSpec) -> Self {
        CellSpec { model, alphas: DEFAULT_ALPHAS.to_vec() }
    }
}

#[derive(Debug, Clone)]
pub struct McPlan {
    pub cells: Vec<CellSpec>,
    pub runs: usize,
    /// Replicate count and `v`; the seed is replaced per run.
    pub bootstrap: BootstrapConfig,
    pub smoothing: SmoothingConfig,
    pub weighted: bool,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub parallelism: Option<usize>,
    pub execution: Execution,
}

impl McPlan {
    pub fn new(cells: Vec<CellSpec>, runs: usize, master_seed: u64) -> Self {
        McPlan {
            cells,
            runs,
            bootstrap: BootstrapConfig::default(),
            smoothing: SmoothingConfig::default(),
            weighted: false,
            master_seed,
            parallelism: None,
            execution: Execution::Parallel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidParameter("need at least one Monte Carlo run".into()));
        }
        for cell in &self.cells {
            cell.model.validate()?;
            BootstrapConfig { alphas: cell.alphas.clone(), ..self.bootstrap.clone() }.validate()?;
        }
        Ok(())
    }
}

/// Table-1 grid: S6-S8 × c ∈ {0.5, 1, 1.5} × `n_list`.
pub fn table1_cells(n_list: &[usize]) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for id in [ModelId::S6, ModelId::S7, ModelId::S8] {
        for c in [0.5, 1.0, 1.5] {
            for &n in n_list {
                cells.push(CellSpec::new(ModelSpec::regression(id, c, n)));
            }
        }
    }
    cells
}

/// Table-2 grid: STA1-STA4 × `n_list`.
pub fn table2_cells(n_list: &[usize]) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for id in [ModelId::Sta1, ModelId::Sta2, ModelId::Sta3, ModelId::Sta4] {
        for &n in n_list {
            cells.push(CellSpec::new(ModelSpec::series(id, n)));
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub index: usize,
    pub label: String,
    pub model: ModelSpec,
    pub runs: usize,
    pub completed: usize,
    pub failures: usize,
    pub alphas: Vec<f64>,
    pub rejections: Vec<u64>,
    pub frequencies: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub mean_c2_hat: Option<f64>,
    /// Message of the first aborted run, if any.
    pub first_failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub schema: u32,
    pub master_seed: u64,
    pub runs: usize,
    pub replicates: usize,
    pub smoothing_v: f64,
    pub weighted: bool,
    pub kernel: String,
    pub cells: Vec<CellReport>,
}

impl McReport {
    /// `CellFailure` for the first cell where more than 1% of runs aborted.
    pub fn check_failures(&self) -> Result<()> {
        match self.cells.iter().find(|c| c.failures * 100 > c.runs) {
            Some(c) => Err(Error::CellFailure {
                cell: c.index,
                label: format!("{} n={}", c.label, c.model.n),
                failures: c.failures,
                runs: c.runs,
            }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
struct RunResult {
    rejects: Vec<bool>,
    c2_hat: f64,
}

fn one_run<F>(plan: &McPlan, cell_index: usize, run: usize, observe: &F) -> std::result::Result<RunResult, String>
where
    F: Fn(usize, usize, &TestOutcome) + Sync,
{
    let cell = &plan.cells[cell_index];
    let (c, r) = (cell_index as u64, run as u64);
    let mut data_rng = rng::stream(plan.master_seed, &[c, r, 0]);
    let sample = generate(&cell.model, &mut data_rng).map_err(|e| e.to_string())?.into_sample();
    let cfg = BootstrapConfig {
        alphas: cell.alphas.clone(),
        seed: rng::derive_seed(plan.master_seed, &[c, r, 1]),
        ..plan.bootstrap.clone()
    };
    let out = bootstrap_test(&sample, &cfg, &plan.smoothing, plan.weighted, Execution::Sequential)
        .map_err(|e| e.to_string())?;
    observe(cell_index, run, &out);
    Ok(RunResult {
        rejects: out.rejections.iter().map(|d| d.reject).collect(),
        c2_hat: out.c2_hat,
    })
}

/// Runs every cell and aggregates, without enforcing the failure budget.
pub fn execute(plan: &McPlan) -> Result<McReport> {
    execute_observed(plan, |_, _, _| {})
}

/// Like [`execute`], calling `observe(cell, run, outcome)` on every completed
/// test. Calls arrive in no particular order.
pub fn execute_observed<F>(plan: &McPlan, observe: F) -> Result<McReport>
where
    F: Fn(usize, usize, &TestOutcome) + Sync,
{
    plan.validate()?;
    let jobs = plan.cells.len() * plan.runs;
    let results = with_threads(plan.parallelism, || {
        plan.execution
            .map_indexed(jobs, |k| one_run(plan, k / plan.runs, k % plan.runs, &observe))
    });
    let cells = plan
        .cells
        .iter()
        .enumerate()
        .map(|(ci, cell)| {
            let chunk = &results[ci * plan.runs..(ci + 1) * plan.runs];
            aggregate(ci, cell, plan.runs, chunk)
        })
        .collect();
    Ok(McReport {
        schema: SCHEMA_VERSION,
        master_seed: plan.master_seed,
        runs: plan.runs,
        replicates: plan.bootstrap.replicates,
        smoothing_v: plan.bootstrap.smoothing_v,
        weighted: plan.weighted,
        kernel: plan.smoothing.kernel.name().to_string(),
        cells,
    })
}

fn aggregate(
    index: usize,
    cell: &CellSpec,
    runs: usize,
    chunk: &[std::result::Result<RunResult, String>],
) -> CellReport {
    let mut rejections = vec![0u64; cell.alphas.len()];
    let mut completed = 0usize;
    let mut c2_sum = 0.0;
    let mut first_failure = None;
    for r in chunk {
        match r {
            Ok(res) => {
                completed += 1;
                c2_sum += res.c2_hat;
                for (count, &rej) in rejections.iter_mut().zip(&res.rejects) {
                    *count += u64::from(rej);
                }
            }
            Err(msg) => {
                first_failure.get_or_insert_with(|| msg.clone());
            }
        }
    }
    let (frequencies, std_errors) = rejections
        .iter()
        .map(|&k| {
            if completed == 0 {
                return (0.0, 0.0);
            }
            let p = k as f64 / completed as f64;
            (p, (p * (1.0 - p) / completed as f64).sqrt())
        })
        .unzip();
    CellReport {
        index,
        label: cell.model.label(),
        model: cell.model,
        runs,
        completed,
        failures: runs - completed,
        alphas: cell.alphas.clone(),
        rejections,
        frequencies,
        std_errors,
        mean_c2_hat: (completed > 0).then(|| c2_sum / completed as f64),
        first_failure,
    }
}

/// [`execute`] followed by the 1% failure budget check.
pub fn run_plan(plan: &McPlan) -> Result<McReport> {
    let report = execute(plan)?;
    report.check_failures()?;
    Ok(report)
}
