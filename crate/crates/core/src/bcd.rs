//! Block coordinate descent over association, subcarriers and
//! semantic / capacity decisions, plus the baseline variants.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{run_allocation, AllocationOptions, CapacityRule};
use crate::error::{config_err, Error, Result};
use crate::matching::{
    nearest_association, random_association, round_robin_subcarriers, run_association_matching,
    run_subcarrier_matching, verify_stability, Layer, SwapEvent,
};
use crate::nn_cost::linear_density;
use crate::perf::{self, check_constraints, workloads, Assignment, DelayBreakdown, FeasibilityReport, Workload};
use crate::scenario::{validate_scenario, Scenario};
use crate::state::{Evaluator, NetworkState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Proposed,
    /// Plans with a linear recognition-cost model.
    Linear,
    /// Semantic extraction decided by a fair coin.
    Ftm,
    /// Association fixed to the nearest MEC.
    Fa,
    /// Edge capacity split evenly.
    Uc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Proposed,
        Algorithm::Linear,
        Algorithm::Fa,
        Algorithm::Uc,
        Algorithm::Ftm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::Linear => "linear",
            Algorithm::Ftm => "ftm",
            Algorithm::Fa => "fa",
            Algorithm::Uc => "uc",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| config_err("algorithm", format!("unknown algorithm `{s}` (expected proposed, linear, ftm, fa or uc)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Outer stop: change of the objective between rounds.
    pub tolerance: f64,
    pub max_rounds: usize,
    pub allocation_tolerance: f64,
    pub allocation_max_iterations: usize,
    /// Random initial associations tried in search of one meeting every
    /// deadline.
    pub init_attempts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_rounds: 50,
            allocation_tolerance: 1e-6,
            allocation_max_iterations: 20,
            init_attempts: 32,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 0.0) {
            return Err(config_err("solver.tolerance", "must be >= 0"));
        }
        if !(self.allocation_tolerance >= 0.0) {
            return Err(config_err("solver.allocation_tolerance", "must be >= 0"));
        }
        if self.max_rounds < 1 {
            return Err(config_err("solver.max_rounds", "must be at least 1"));
        }
        if self.allocation_max_iterations < 1 {
            return Err(config_err("solver.allocation_max_iterations", "must be at least 1"));
        }
        if self.init_attempts < 1 {
            return Err(config_err("solver.init_attempts", "must be at least 1"));
        }
        Ok(())
    }
}

/// Objective after each step of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub after_association: f64,
    pub after_subcarriers: f64,
    pub after_allocation: f64,
    pub allocation_trace: Vec<f64>,
    pub association_swaps: usize,
    pub subcarrier_swaps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub rounds: usize,
    pub association_passes: usize,
    pub subcarrier_passes: usize,
    pub allocation_iterations: usize,
    pub association_swaps: usize,
    pub subcarrier_swaps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalOutcome {
    pub serving: Option<usize>,
    pub subcarriers: usize,
    pub rate: f64,
    pub semantic: bool,
    pub capacity: f64,
    pub delay: DelayBreakdown,
    pub reward: f64,
    pub deadline_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub assignment: Assignment,
    /// Planner objective (sum of `ln(M t)`) at the start and after every
    /// round.
    pub trace: Vec<f64>,
    pub rounds: Vec<RoundRecord>,
    /// True-cost total reward of the final assignment.
    pub reward: f64,
    /// True-cost sum of `ln(M t)`.
    pub weighted_delay: f64,
    pub terminals: Vec<TerminalOutcome>,
    pub counters: Counters,
    pub feasibility: FeasibilityReport,
    /// `None` when the association is fixed by the algorithm.
    pub association_stable: Option<bool>,
    pub subcarrier_stable: bool,
    /// MECs that fell back to scaled deadline bounds in the last round.
    pub infeasible_mecs: Vec<usize>,
    #[serde(skip)]
    pub swap_trace: Vec<SwapEvent>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn mean_reward(&self) -> f64 {
        self.reward / self.terminals.len() as f64
    }

    /// Deterministic text form (wall time and swap trace excluded).
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Workloads with the recognition cost replaced by the per-exit average
/// density of the task table times the data size.
pub fn linear_workloads(scenario: &Scenario) -> Vec<Workload> {
    let density = linear_density(
        scenario
            .tasks
            .iter()
            .map(|t| (t.exit_point, t.costs.recognition as f64, t.data_bits as f64)),
        scenario.arch.num_exits(),
    );
    (0..scenario.num_terminals())
        .map(|u| {
            let task = scenario.task_of(u);
            let mut w = Workload::of(scenario, u);
            w.recognition = density[&task.exit_point] * w.data_bits;
            w
        })
        .collect()
}

const STREAM_ASSOCIATION: u64 = 1;
const STREAM_COIN: u64 = 2;

fn rng_stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn initial_state(scenario: &Scenario, serving: Vec<Option<usize>>, semantic: &[bool]) -> NetworkState {
    let mut st = NetworkState::new(scenario.num_terminals(), scenario.num_mecs(), scenario.num_subcarriers());
    st.serving = serving;
    round_robin_subcarriers(&mut st);
    st.semantic = semantic.to_vec();
    for k in 0..scenario.num_mecs() {
        let members = st.members(k);
        for &u in &members {
            st.capacity[u] = scenario.mecs[k].capacity / members.len() as f64;
        }
    }
    st
}

fn misses(ev: &Evaluator) -> usize {
    ev.deadline_mask().iter().filter(|&&ok| !ok).count()
}

pub fn solve_bcd(scenario: &Scenario, config: &SolverConfig, seed: u64) -> Result<SolveReport> {
    solve(scenario, Algorithm::Proposed, config, seed)
}

pub fn solve_baseline(scenario: &Scenario, which: Algorithm, config: &SolverConfig, seed: u64) -> Result<SolveReport> {
    solve(scenario, which, config, seed)
}

pub fn solve(scenario: &Scenario, algorithm: Algorithm, config: &SolverConfig, seed: u64) -> Result<SolveReport> {
    solve_traced(scenario, algorithm, config, seed, false)
}

/// As [`solve`]; with `record_swaps` every accepted swap is kept in
/// [`SolveReport::swap_trace`].
pub fn solve_traced(
    scenario: &Scenario,
    algorithm: Algorithm,
    config: &SolverConfig,
    seed: u64,
    record_swaps: bool,
) -> Result<SolveReport> {
    config.validate()?;
    let issues = validate_scenario(scenario);
    if !issues.is_empty() {
        return Err(Error::InvalidScenario(issues));
    }
    let started = Instant::now();
    let planner = match algorithm {
        Algorithm::Linear => linear_workloads(scenario),
        _ => workloads(scenario),
    };
    let semantic: Vec<bool> = match algorithm {
        Algorithm::Ftm => {
            let mut coin = rng_stream(seed, STREAM_COIN);
            (0..scenario.num_terminals()).map(|_| coin.gen_bool(0.5)).collect()
        }
        _ => vec![false; scenario.num_terminals()],
    };

    let mut ev = if algorithm == Algorithm::Fa {
        let st = initial_state(scenario, nearest_association(scenario)?, &semantic);
        Evaluator::new(scenario, planner.clone(), st)
    } else {
        let mut rng = rng_stream(seed, STREAM_ASSOCIATION);
        let mut best: Option<(usize, Evaluator)> = None;
        for _ in 0..config.init_attempts {
            let st = initial_state(scenario, random_association(scenario, &mut rng)?, &semantic);
            let ev = Evaluator::new(scenario, planner.clone(), st);
            let missed = misses(&ev);
            if best.as_ref().map_or(true, |(m, _)| missed < *m) {
                best = Some((missed, ev));
            }
            if missed == 0 {
                break;
            }
        }
        let (missed, ev) = best.expect("at least one attempt");
        if missed > 0 {
            log::debug!("no initial association meets every deadline; best misses {missed}");
        }
        ev
    };

    let allocation_options = AllocationOptions {
        tolerance: config.allocation_tolerance,
        max_iterations: config.allocation_max_iterations,
        decide_semantic: algorithm != Algorithm::Ftm,
        capacity: if algorithm == Algorithm::Uc {
            CapacityRule::Uniform
        } else {
            CapacityRule::Optimal
        },
    };

    let mut swaps = Vec::new();
    let mut counters = Counters::default();
    let mut rounds = Vec::new();
    let mut trace = vec![ev.objective()];
    let mut infeasible_mecs = Vec::new();
    for _ in 0..config.max_rounds {
        let mut record = RoundRecord {
            after_association: f64::NAN,
            after_subcarriers: f64::NAN,
            after_allocation: f64::NAN,
            allocation_trace: Vec::new(),
            association_swaps: 0,
            subcarrier_swaps: 0,
        };
        if algorithm != Algorithm::Fa {
            let stats = run_association_matching(&mut ev, record_swaps.then_some(&mut swaps));
            counters.association_passes += stats.passes;
            counters.association_swaps += stats.swaps;
            record.association_swaps = stats.swaps;
        }
        record.after_association = ev.objective();
        let stats = run_subcarrier_matching(&mut ev, record_swaps.then_some(&mut swaps));
        counters.subcarrier_passes += stats.passes;
        counters.subcarrier_swaps += stats.swaps;
        record.subcarrier_swaps = stats.swaps;
        record.after_subcarriers = ev.objective();
        let out = run_allocation(&mut ev, &allocation_options);
        counters.allocation_iterations += out.iterations;
        infeasible_mecs = out.infeasible_mecs;
        record.allocation_trace = out.trace;
        record.after_allocation = ev.objective();
        counters.rounds += 1;

        let prev = *trace.last().unwrap();
        let v = ev.objective();
        trace.push(v);
        rounds.push(record);
        if (v - prev).abs() <= config.tolerance || v == prev {
            break;
        }
    }

    let association_stable =
        (algorithm != Algorithm::Fa).then(|| verify_stability(&ev, Layer::Association).is_stable());
    let subcarrier_stable = verify_stability(&ev, Layer::Subcarrier).is_stable();

    let assignment = ev.state().to_assignment();
    let feasibility = check_constraints(&assignment, scenario);
    let objective = perf::system_objective(&assignment, scenario);
    let terminals = (0..scenario.num_terminals())
        .map(|u| {
            let delay = perf::delay_breakdown(u, &assignment, scenario);
            TerminalOutcome {
                serving: assignment.serving(u),
                subcarriers: assignment.serving(u).map_or(0, |k| assignment.subcarriers_of(u, k).len()),
                rate: crate::channel::uplink_rate(u, &assignment, scenario),
                semantic: assignment.semantic[u],
                capacity: assignment.capacity[u],
                delay,
                reward: perf::reward_for_delay(&scenario.params, scenario.task_of(u).priority as f64, delay.total()),
                deadline_slack: feasibility.deadline_slack[u],
            }
        })
        .collect();

    Ok(SolveReport {
        algorithm,
        seed,
        assignment,
        trace,
        rounds,
        reward: objective.reward,
        weighted_delay: objective.weighted_delay,
        terminals,
        counters,
        feasibility,
        association_stable,
        subcarrier_stable,
        infeasible_mecs,
        swap_trace: swaps,
        wall_time: started.elapsed(),
    })
}
