//! Delay, reward and constraint evaluation of a complete assignment.
//!
//! Infinite delays are legal values: a terminal without subcarriers, or
//! with edge work but no capacity, has delay `+inf` and reward `-inf`.

use serde::{Deserialize, Serialize};

use crate::channel;
use crate::error::{Error, Result};
use crate::scenario::{GlobalParams, Scenario};

/// Dense decision variables: association `x[u][k]`, subcarriers
/// `rho[u][k][n]`, semantic flag `e[u]` and edge capacity `f[u]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "AssignmentRepr", try_from = "AssignmentRepr")]
pub struct Assignment {
    pub association: Vec<Vec<bool>>,
    pub subcarriers: Vec<Vec<Vec<bool>>>,
    pub semantic: Vec<bool>,
    /// cycles/s granted by the serving MEC.
    pub capacity: Vec<f64>,
}

impl Assignment {
    pub fn empty(terminals: usize, mecs: usize, subcarriers: usize) -> Self {
        Self {
            association: vec![vec![false; mecs]; terminals],
            subcarriers: vec![vec![vec![false; subcarriers]; mecs]; terminals],
            semantic: vec![false; terminals],
            capacity: vec![0.0; terminals],
        }
    }

    pub fn num_terminals(&self) -> usize {
        self.association.len()
    }

    pub fn num_mecs(&self) -> usize {
        self.association.first().map_or(0, Vec::len)
    }

    pub fn num_subcarriers(&self) -> usize {
        self.subcarriers
            .first()
            .and_then(|per_mec| per_mec.first())
            .map_or(0, Vec::len)
    }

    pub fn associate(&mut self, u: usize, k: usize) {
        self.association[u][k] = true;
    }

    /// First MEC `u` is associated with.
    pub fn serving(&self, u: usize) -> Option<usize> {
        self.association[u].iter().position(|&x| x)
    }

    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.num_terminals()).filter(|&u| self.association[u][k]).collect()
    }

    pub fn subcarriers_of(&self, u: usize, k: usize) -> Vec<usize> {
        (0..self.num_subcarriers()).filter(|&n| self.subcarriers[u][k][n]).collect()
    }
}

/// Sparse serialized form of [`Assignment`].
#[derive(Serialize, Deserialize)]
struct AssignmentRepr {
    mecs: usize,
    subcarriers: usize,
    association: Vec<Vec<usize>>,
    /// `(k, n)` pairs held by each terminal.
    allocation: Vec<Vec<(usize, usize)>>,
    semantic: Vec<bool>,
    capacity: Vec<f64>,
}

impl From<Assignment> for AssignmentRepr {
    fn from(a: Assignment) -> Self {
        let (mecs, subcarriers) = (a.num_mecs(), a.num_subcarriers());
        let association = a
            .association
            .iter()
            .map(|row| (0..mecs).filter(|&k| row[k]).collect())
            .collect();
        let allocation = a
            .subcarriers
            .iter()
            .map(|per_mec| {
                let mut held = Vec::new();
                for (k, row) in per_mec.iter().enumerate() {
                    held.extend((0..subcarriers).filter(|&n| row[n]).map(|n| (k, n)));
                }
                held
            })
            .collect();
        Self {
            mecs,
            subcarriers,
            association,
            allocation,
            semantic: a.semantic,
            capacity: a.capacity,
        }
    }
}

impl TryFrom<AssignmentRepr> for Assignment {
    type Error = Error;

    fn try_from(r: AssignmentRepr) -> Result<Self> {
        let terminals = r.association.len();
        if r.allocation.len() != terminals || r.semantic.len() != terminals || r.capacity.len() != terminals {
            return Err(Error::Parse("assignment vectors disagree in length".into()));
        }
        let mut a = Assignment::empty(terminals, r.mecs, r.subcarriers);
        for (u, ks) in r.association.iter().enumerate() {
            for &k in ks {
                if k >= r.mecs {
                    return Err(Error::Parse(format!("terminal {u}: MEC {k} out of range")));
                }
                a.association[u][k] = true;
            }
        }
        for (u, held) in r.allocation.iter().enumerate() {
            for &(k, n) in held {
                if k >= r.mecs || n >= r.subcarriers {
                    return Err(Error::Parse(format!("terminal {u}: subcarrier ({k}, {n}) out of range")));
                }
                a.subcarriers[u][k][n] = true;
            }
        }
        a.semantic = r.semantic;
        a.capacity = r.capacity;
        Ok(a)
    }
}

/// Per-terminal task figures as seen by a planner. Normally the true
/// costs of the terminal's task; the linear baseline substitutes an
/// approximate recognition cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workload {
    pub data_bits: f64,
    pub compression_ratio: f64,
    /// FLOP
    pub recognition: f64,
    pub extraction: f64,
    pub reconstruction: f64,
    pub priority: f64,
    pub deadline: f64,
    pub local_capacity: f64,
}

impl Workload {
    pub fn of(scenario: &Scenario, u: usize) -> Self {
        let task = scenario.task_of(u);
        Self {
            data_bits: task.data_bits as f64,
            compression_ratio: task.compression_ratio,
            recognition: task.costs.recognition as f64,
            extraction: task.costs.extraction as f64,
            reconstruction: task.costs.reconstruction as f64,
            priority: task.priority as f64,
            deadline: task.deadline,
            local_capacity: scenario.terminals[u].local_capacity,
        }
    }

    pub fn sent_bits(&self, semantic: bool) -> f64 {
        if semantic {
            self.data_bits / self.compression_ratio
        } else {
            self.data_bits
        }
    }

    /// FLOP executed on the MEC.
    pub fn edge_flops(&self, semantic: bool) -> f64 {
        if semantic {
            self.recognition + self.reconstruction
        } else {
            self.recognition
        }
    }

    /// FLOP executed on the terminal.
    pub fn local_flops(&self, semantic: bool) -> f64 {
        if semantic {
            self.extraction
        } else {
            0.0
        }
    }
}

pub fn workloads(scenario: &Scenario) -> Vec<Workload> {
    (0..scenario.num_terminals()).map(|u| Workload::of(scenario, u)).collect()
}

/// `amount / speed`, zero when there is nothing to do and `+inf` when
/// there is work but no speed.
pub fn service_time(amount: f64, speed: f64) -> f64 {
    if amount == 0.0 {
        0.0
    } else if speed > 0.0 {
        amount / speed
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayBreakdown {
    pub transmission: f64,
    pub edge: f64,
    pub local: f64,
}

impl DelayBreakdown {
    pub fn compute(w: &Workload, semantic: bool, rate: f64, capacity: f64, psi: f64) -> Self {
        Self {
            transmission: service_time(w.sent_bits(semantic), rate),
            edge: service_time(w.edge_flops(semantic), psi * capacity),
            local: service_time(w.local_flops(semantic), psi * w.local_capacity),
        }
    }

    pub fn computation(&self) -> f64 {
        self.edge + self.local
    }

    pub fn total(&self) -> f64 {
        self.transmission + self.edge + self.local
    }
}

/// `ln(M t)`, the quantity the solvers minimize.
pub fn log_weighted_delay(priority: f64, delay: f64) -> f64 {
    (priority * delay).ln()
}

/// `C1 ln(1 / (M t)) + C2`.
pub fn reward_for_delay(params: &GlobalParams, priority: f64, delay: f64) -> f64 {
    params.reward_c1 * (1.0 / (priority * delay)).ln() + params.reward_c2
}

pub fn transmission_delay(u: usize, a: &Assignment, s: &Scenario) -> f64 {
    let w = Workload::of(s, u);
    service_time(w.sent_bits(a.semantic[u]), channel::uplink_rate(u, a, s))
}

pub fn computation_delay(u: usize, a: &Assignment, s: &Scenario) -> f64 {
    let w = Workload::of(s, u);
    let d = DelayBreakdown::compute(&w, a.semantic[u], 0.0, a.capacity[u], s.params.flops_per_cycle);
    d.computation()
}

pub fn delay_breakdown(u: usize, a: &Assignment, s: &Scenario) -> DelayBreakdown {
    DelayBreakdown::compute(
        &Workload::of(s, u),
        a.semantic[u],
        channel::uplink_rate(u, a, s),
        a.capacity[u],
        s.params.flops_per_cycle,
    )
}

pub fn terminal_delay(u: usize, a: &Assignment, s: &Scenario) -> f64 {
    delay_breakdown(u, a, s).total()
}

pub fn terminal_reward(u: usize, a: &Assignment, s: &Scenario) -> f64 {
    reward_for_delay(&s.params, s.task_of(u).priority as f64, terminal_delay(u, a, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    /// Sum of rewards, to be maximized.
    pub reward: f64,
    /// Sum of `ln(M t)`, to be minimized.
    pub weighted_delay: f64,
}

pub fn system_objective(a: &Assignment, s: &Scenario) -> Objective {
    let mut reward = 0.0;
    let mut weighted_delay = 0.0;
    for u in 0..s.num_terminals() {
        let t = terminal_delay(u, a, s);
        let m = s.task_of(u).priority as f64;
        reward += reward_for_delay(&s.params, m, t);
        weighted_delay += log_weighted_delay(m, t);
    }
    Objective { reward, weighted_delay }
}

/// Constants of the per-block subproblems for one terminal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayCoefficients {
    /// Transmitted bits.
    pub a_alpha: f64,
    /// Edge FLOP.
    pub a_beta: f64,
    /// Local extraction time, s.
    pub a_gamma: f64,
    /// Delay without semantic extraction, s.
    pub b_alpha: f64,
    /// Raw-data transmission time, s.
    pub beta: f64,
    /// Delay part independent of the edge capacity, s.
    pub c_alpha: f64,
}

impl DelayCoefficients {
    pub fn compute(w: &Workload, semantic: bool, rate: f64, capacity: f64, psi: f64) -> Self {
        let a_alpha = w.sent_bits(semantic);
        let a_gamma = service_time(w.local_flops(semantic), psi * w.local_capacity);
        let beta = service_time(w.data_bits, rate);
        Self {
            a_alpha,
            a_beta: w.edge_flops(semantic),
            a_gamma,
            b_alpha: beta + service_time(w.recognition, psi * capacity),
            beta,
            c_alpha: service_time(a_alpha, rate) + a_gamma,
        }
    }
}

pub fn delay_coefficients(u: usize, a: &Assignment, s: &Scenario) -> DelayCoefficients {
    DelayCoefficients::compute(
        &Workload::of(s, u),
        a.semantic[u],
        channel::uplink_rate(u, a, s),
        a.capacity[u],
        s.params.flops_per_cycle,
    )
}

/// Relative slack allowed on capacity budgets.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Terminals associated with more than one MEC.
    pub multi_association: Vec<usize>,
    /// `(k, n)` held by more than one terminal.
    pub shared_subcarriers: Vec<(usize, usize)>,
    /// `(u, k, n)` held without being associated with `k`.
    pub orphan_subcarriers: Vec<(usize, usize, usize)>,
    /// Terminals with negative or non-finite capacity.
    pub bad_capacity: Vec<usize>,
    /// MECs whose granted capacity exceeds their budget.
    pub over_budget: Vec<usize>,
    /// `deadline - delay` per terminal.
    pub deadline_slack: Vec<f64>,
    pub missed_deadlines: Vec<usize>,
}

impl FeasibilityReport {
    /// Every constraint except the deadlines holds.
    pub fn structurally_valid(&self) -> bool {
        self.multi_association.is_empty()
            && self.shared_subcarriers.is_empty()
            && self.orphan_subcarriers.is_empty()
            && self.bad_capacity.is_empty()
            && self.over_budget.is_empty()
    }

    pub fn deadlines_met(&self) -> bool {
        self.missed_deadlines.is_empty()
    }

    pub fn feasible(&self) -> bool {
        self.structurally_valid() && self.deadlines_met()
    }

    pub fn feasible_fraction(&self) -> f64 {
        if self.deadline_slack.is_empty() {
            return 1.0;
        }
        let met = self.deadline_slack.len() - self.missed_deadlines.len();
        met as f64 / self.deadline_slack.len() as f64
    }
}

pub fn check_constraints(a: &Assignment, s: &Scenario) -> FeasibilityReport {
    let (terminals, mecs, subcarriers) = (s.num_terminals(), s.num_mecs(), s.num_subcarriers());
    let mut report = FeasibilityReport::default();
    for u in 0..terminals {
        if a.association[u].iter().filter(|&&x| x).count() > 1 {
            report.multi_association.push(u);
        }
        if !(a.capacity[u].is_finite() && a.capacity[u] >= 0.0) {
            report.bad_capacity.push(u);
        }
        for k in 0..mecs {
            for n in 0..subcarriers {
                if a.subcarriers[u][k][n] && !a.association[u][k] {
                    report.orphan_subcarriers.push((u, k, n));
                }
            }
        }
    }
    for k in 0..mecs {
        for n in 0..subcarriers {
            if (0..terminals).filter(|&u| a.subcarriers[u][k][n]).count() > 1 {
                report.shared_subcarriers.push((k, n));
            }
        }
        let granted: f64 = (0..terminals)
            .filter(|&u| a.association[u][k])
            .map(|u| a.capacity[u])
            .sum();
        let budget = s.mecs[k].capacity;
        if granted > budget * (1.0 + BUDGET_TOLERANCE) {
            report.over_budget.push(k);
        }
    }
    for u in 0..terminals {
        let slack = s.task_of(u).deadline - terminal_delay(u, a, s);
        if !(slack >= 0.0) {
            report.missed_deadlines.push(u);
        }
        report.deadline_slack.push(slack);
    }
    report
}
