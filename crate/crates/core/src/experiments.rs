//! Parameter sweeps, convergence traces and cost tables written as CSV.
//!
//! Raw rows only; averaging over seeds is left to [`summarize`] or to
//! downstream analysis. Numbers are written in Rust's shortest
//! round-trip form, so identical inputs give identical bytes.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcd::{solve, Algorithm, SolveReport, SolverConfig};
use crate::config::Config;
use crate::error::{config_err, Error, Result};
use crate::nn_cost::{compressed_shape, TaskCosts};
use crate::scenario::{generate_scenario, Scenario, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Number of terminals.
    Terminals,
    /// Multiplier of the configured edge capacity.
    EdgeCapacity,
    /// Subcarrier bandwidth in MHz.
    Bandwidth,
    /// Multiplier of every compression ratio, clamped at 1.
    CompressionScale,
    /// Number of retained exit points.
    ExitPoints,
}

impl Axis {
    pub const ALL: [Axis; 5] = [
        Axis::Terminals,
        Axis::EdgeCapacity,
        Axis::Bandwidth,
        Axis::CompressionScale,
        Axis::ExitPoints,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Terminals => "terminals",
            Axis::EdgeCapacity => "edge_capacity",
            Axis::Bandwidth => "bandwidth",
            Axis::CompressionScale => "compression_scale",
            Axis::ExitPoints => "exit_points",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            Axis::Terminals => vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            Axis::EdgeCapacity => vec![0.25, 0.5, 1.0, 2.0, 4.0],
            Axis::Bandwidth => vec![0.5, 1.0, 2.0, 4.0],
            Axis::CompressionScale => vec![1.0, 1.5, 2.0, 2.5],
            Axis::ExitPoints => vec![1.0, 3.0],
        }
    }

    fn integral(self) -> bool {
        matches!(self, Axis::Terminals | Axis::ExitPoints)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                config_err(
                    "axis",
                    format!("unknown axis `{s}` (expected terminals, edge_capacity, bandwidth, compression_scale or exit_points)"),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Seeds `0..replications`.
    pub replications: usize,
    pub algorithms: Vec<Algorithm>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(config_err("values", "must not be empty"));
        }
        if self.algorithms.is_empty() {
            return Err(config_err("algorithms", "must not be empty"));
        }
        if self.replications < 1 {
            return Err(config_err("reps", "must be at least 1"));
        }
        for &v in &self.values {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err("values", format!("must be finite and > 0, got {v}")));
            }
            if self.axis.integral() && v.fract() != 0.0 {
                return Err(config_err("values", format!("{} takes integers, got {v}", self.axis)));
            }
        }
        Ok(())
    }
}

/// Scenario of one sweep cell.
pub fn cell_scenario(base: &ScenarioConfig, axis: Axis, value: f64, seed: u64) -> Result<Scenario> {
    let mut cfg = base.clone();
    match axis {
        Axis::Terminals => cfg.params.num_terminals = value as usize,
        Axis::EdgeCapacity => cfg.params.edge_capacity *= value,
        Axis::Bandwidth => cfg.params.subcarrier_bandwidth = value * 1e6,
        Axis::CompressionScale | Axis::ExitPoints => {}
    }
    let s = generate_scenario(&cfg, seed)?;
    match axis {
        Axis::CompressionScale => s.with_compression_scale(value),
        Axis::ExitPoints => s.with_exit_points(value as usize),
        _ => Ok(s),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub total_reward: f64,
    pub mean_reward: f64,
    pub feasible_fraction: f64,
    pub rounds: usize,
    pub allocation_iterations: usize,
    pub association_swaps: usize,
    pub subcarrier_swaps: usize,
    /// Empty unless the cell failed.
    pub error: String,
    pub wall_ms: f64,
}

fn run_cell(base: &Config, axis: Axis, value: f64, seed: u64, algorithm: Algorithm) -> SweepRow {
    let mut row = SweepRow {
        axis,
        value,
        seed,
        algorithm,
        total_reward: f64::NAN,
        mean_reward: f64::NAN,
        feasible_fraction: f64::NAN,
        rounds: 0,
        allocation_iterations: 0,
        association_swaps: 0,
        subcarrier_swaps: 0,
        error: String::new(),
        wall_ms: 0.0,
    };
    let result = cell_scenario(&base.scenario_config(), axis, value, seed)
        .and_then(|s| solve(&s, algorithm, &base.solver, seed));
    match result {
        Ok(r) => {
            row.total_reward = r.reward;
            row.mean_reward = r.mean_reward();
            row.feasible_fraction = r.feasibility.feasible_fraction();
            row.rounds = r.counters.rounds;
            row.allocation_iterations = r.counters.allocation_iterations;
            row.association_swaps = r.counters.association_swaps;
            row.subcarrier_swaps = r.counters.subcarrier_swaps;
            row.wall_ms = r.wall_time.as_secs_f64() * 1e3;
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

/// Runs every (value, seed, algorithm) cell on a pool of `jobs` workers
/// (all cores when `None`). Rows come back ordered by value index, seed
/// and algorithm position in `spec.algorithms`.
pub fn run_sweep(spec: &SweepSpec, base: &Config, jobs: Option<usize>) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    base.validate()?;
    let mut cells = Vec::new();
    for (vi, &value) in spec.values.iter().enumerate() {
        for seed in 0..spec.replications as u64 {
            for (ai, &alg) in spec.algorithms.iter().enumerate() {
                cells.push(((vi, seed, ai), value, alg));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| config_err("jobs", e.to_string()))?;
    let mut rows: Vec<((usize, u64, usize), SweepRow)> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(key, value, alg)| (key, run_cell(base, spec.axis, value, key.1, alg)))
            .collect()
    });
    rows.sort_by_key(|(key, _)| *key);
    Ok(rows.into_iter().map(|(_, row)| row).collect())
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "axis",
        "value",
        "seed",
        "algorithm",
        "total_reward",
        "mean_reward",
        "feasible_fraction",
        "rounds",
        "allocation_iterations",
        "association_swaps",
        "subcarrier_swaps",
        "error",
    ];
    if timing {
        header.push("wall_ms");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.axis.name().to_string(),
            num(r.value),
            r.seed.to_string(),
            r.algorithm.name().to_string(),
            num(r.total_reward),
            num(r.mean_reward),
            num(r.feasible_fraction),
            r.rounds.to_string(),
            r.allocation_iterations.to_string(),
            r.association_swaps.to_string(),
            r.subcarrier_swaps.to_string(),
            r.error.clone(),
        ];
        if timing {
            rec.push(num(r.wall_ms));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-terminal outcome table of one solve.
pub fn write_terminal_csv<W: Write>(report: &SolveReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "terminal",
        "serving",
        "subcarriers",
        "rate",
        "semantic",
        "capacity",
        "transmission_delay",
        "edge_delay",
        "local_delay",
        "total_delay",
        "reward",
        "deadline_slack",
    ])?;
    for (u, t) in report.terminals.iter().enumerate() {
        w.write_record([
            u.to_string(),
            t.serving.map(|k| k.to_string()).unwrap_or_default(),
            t.subcarriers.to_string(),
            num(t.rate),
            (t.semantic as u8).to_string(),
            num(t.capacity),
            num(t.delay.transmission),
            num(t.delay.edge),
            num(t.delay.local),
            num(t.delay.total()),
            num(t.reward),
            num(t.deadline_slack),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean over seeds of one (value, algorithm) group; failed cells are
/// counted but excluded from the means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub value: f64,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub failures: usize,
    pub mean_reward: f64,
    pub feasible_fraction: f64,
}

pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    for r in rows {
        let idx = match out
            .iter()
            .position(|s| s.value == r.value && s.algorithm == r.algorithm)
        {
            Some(i) => i,
            None => {
                out.push(SummaryRow {
                    value: r.value,
                    algorithm: r.algorithm,
                    runs: 0,
                    failures: 0,
                    mean_reward: 0.0,
                    feasible_fraction: 0.0,
                });
                out.len() - 1
            }
        };
        let s = &mut out[idx];
        s.runs += 1;
        if r.error.is_empty() {
            s.mean_reward += r.mean_reward;
            s.feasible_fraction += r.feasible_fraction;
        } else {
            s.failures += 1;
        }
    }
    for s in &mut out {
        let ok = (s.runs - s.failures) as f64;
        s.mean_reward /= ok;
        s.feasible_fraction /= ok;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub algorithm: Algorithm,
    pub round: usize,
    /// Sum of `ln(M t)` under the algorithm's own cost model.
    pub objective: f64,
}

/// Objective per BCD round (round 0 is the initial state) for each
/// algorithm.
pub fn trace_convergence(
    scenario: &Scenario,
    algorithms: &[Algorithm],
    solver: &SolverConfig,
    seed: u64,
) -> Result<Vec<TracePoint>> {
    let mut out = Vec::new();
    for &alg in algorithms {
        let r = solve(scenario, alg, solver, seed)?;
        out.extend(r.trace.iter().enumerate().map(|(round, &objective)| TracePoint {
            algorithm: alg,
            round,
            objective,
        }));
    }
    Ok(out)
}

pub fn write_trace_csv<W: Write>(points: &[TracePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "round", "objective"])?;
    for p in points {
        w.write_record([p.algorithm.name().to_string(), p.round.to_string(), num(p.objective)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub task: usize,
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    pub data_bits: u64,
    pub compression_ratio: f64,
    pub exit_point: usize,
    pub compressed_width: u32,
    pub compressed_height: u32,
    pub costs: TaskCosts,
    /// Recognition cost at every exit point.
    pub recognition_by_exit: Vec<u64>,
}

pub fn cost_report(scenario: &Scenario) -> Result<Vec<CostRow>> {
    scenario
        .tasks
        .iter()
        .map(|t| {
            let compressed = compressed_shape(t.shape, &scenario.arch)?;
            let recognition_by_exit = (0..scenario.arch.num_exits())
                .map(|m| TaskCosts::evaluate(t.shape, m, &scenario.arch).map(|c| c.recognition))
                .collect::<Result<Vec<_>>>()?;
            Ok(CostRow {
                task: t.id,
                width: t.shape.width,
                height: t.shape.height,
                channels: t.shape.channels,
                data_bits: t.data_bits,
                compression_ratio: t.compression_ratio,
                exit_point: t.exit_point,
                compressed_width: compressed.width,
                compressed_height: compressed.height,
                costs: t.costs,
                recognition_by_exit,
            })
        })
        .collect()
}

pub fn write_cost_csv<W: Write>(rows: &[CostRow], exits: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "task",
        "width",
        "height",
        "channels",
        "data_bits",
        "compression_ratio",
        "exit_point",
        "compressed_width",
        "compressed_height",
        "recognition_flops",
        "extraction_flops",
        "reconstruction_flops",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..exits).map(|m| format!("recognition_exit_{m}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.task.to_string(),
            r.width.to_string(),
            r.height.to_string(),
            r.channels.to_string(),
            r.data_bits.to_string(),
            num(r.compression_ratio),
            r.exit_point.to_string(),
            r.compressed_width.to_string(),
            r.compressed_height.to_string(),
            r.costs.recognition.to_string(),
            r.costs.extraction.to_string(),
            r.costs.reconstruction.to_string(),
        ];
        rec.extend(r.recognition_by_exit.iter().map(|c| c.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
