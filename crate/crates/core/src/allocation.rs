//! Semantic-transmission decisions and edge capacity allocation.
//!
//! With the communication layer fixed, terminal `u` on MEC `k` has delay
//! `a_u + b_u / f_u`, where `a_u` collects everything independent of the
//! edge capacity and `b_u` is its edge work in cycles. Each MEC solves
//!
//! ```text
//! min  sum_u ln(a_u + b_u / f_u)   s.t.  sum_u f_u <= F_k,  f_u >= f_min_u
//! ```
//!
//! which is convex in `f`. Stationarity of the Lagrangian gives
//! `f_u(lambda)` in closed form, and the multiplier is found by bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perf::{service_time, Assignment, Workload};
use crate::scenario::Scenario;
use crate::state::Evaluator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityUser {
    pub terminal: usize,
    /// Delay that does not depend on the edge capacity, s.
    pub fixed_delay: f64,
    /// Edge work, cycles.
    pub work: f64,
    pub priority: f64,
    pub deadline: f64,
}

impl CapacityUser {
    /// Smallest capacity meeting the deadline; `None` when no capacity can.
    pub fn min_capacity(&self) -> Option<f64> {
        if self.work == 0.0 {
            Some(0.0)
        } else if self.deadline > self.fixed_delay {
            Some(self.work / (self.deadline - self.fixed_delay))
        } else {
            None
        }
    }

    pub fn delay(&self, capacity: f64) -> f64 {
        self.fixed_delay + service_time(self.work, capacity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityProblem {
    pub mec: usize,
    /// cycles/s
    pub budget: f64,
    pub users: Vec<CapacityUser>,
}

impl CapacityProblem {
    /// `sum_u ln(M_u (a_u + b_u / f_u))`.
    pub fn objective(&self, capacity: &[f64]) -> f64 {
        self.users
            .iter()
            .zip(capacity)
            .map(|(user, &f)| (user.priority * user.delay(f)).ln())
            .sum()
    }

    pub fn bounds(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.min_capacity().unwrap_or(0.0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySolution {
    pub capacity: Vec<f64>,
    pub multiplier: f64,
    /// Terminals whose deadline no capacity can meet; their lower bound
    /// was dropped.
    pub unattainable: Vec<usize>,
}

/// Minimizer of `ln(a + b/f) + lambda f`, strictly decreasing in `lambda`.
/// Written in rationalized form so that it is exact for `a = 0`
/// (`1 / lambda`) and free of cancellation for small `a`.
pub fn stationary_capacity(fixed_delay: f64, work: f64, lambda: f64) -> f64 {
    let (a, b) = (fixed_delay, work);
    (2.0 * b / lambda) / (b + (b * b + 4.0 * a * b / lambda).sqrt())
}

const BISECTION_REL_WIDTH: f64 = 1e-14;
const MAX_BISECTION_STEPS: usize = 400;

/// Capacities that exhaust the budget while respecting the deadline
/// bounds. Users without edge work get zero.
pub fn solve_capacity_allocation(problem: &CapacityProblem) -> Result<CapacitySolution> {
    let users = &problem.users;
    let mut unattainable = Vec::new();
    let mut lower = Vec::with_capacity(users.len());
    for u in users {
        match u.min_capacity() {
            Some(f) => lower.push(f),
            None => {
                unattainable.push(u.terminal);
                lower.push(0.0);
            }
        }
    }
    let required: f64 = lower.iter().sum();
    if required > problem.budget {
        return Err(Error::InfeasibleDeadline {
            mec: problem.mec,
            required,
            budget: problem.budget,
            terminals: users
                .iter()
                .zip(&lower)
                .filter(|(_, &f)| f > 0.0)
                .map(|(u, _)| u.terminal)
                .collect(),
        });
    }
    let active = users.iter().filter(|u| u.work > 0.0).count();
    if active == 0 {
        return Ok(CapacitySolution {
            capacity: vec![0.0; users.len()],
            multiplier: 0.0,
            unattainable,
        });
    }

    if active == 1 {
        // the whole budget, exactly
        let f = problem.budget;
        let only = users.iter().find(|u| u.work > 0.0).unwrap();
        return Ok(CapacitySolution {
            capacity: users.iter().map(|u| if u.work > 0.0 { f } else { 0.0 }).collect(),
            multiplier: only.work / (f * (only.fixed_delay * f + only.work)),
            unattainable,
        });
    }

    let at = |lambda: f64| -> Vec<f64> {
        users
            .iter()
            .zip(&lower)
            .map(|(u, &lo)| {
                if u.work > 0.0 {
                    stationary_capacity(u.fixed_delay, u.work, lambda).max(lo)
                } else {
                    0.0
                }
            })
            .collect()
    };
    let total = |lambda: f64| -> f64 { at(lambda).iter().sum() };

    // for a = 0 the answer is exactly active / budget
    let guess = active as f64 / problem.budget;
    let (mut lo, mut hi) = (guess, guess);
    let mut steps = 0;
    while total(lo) < problem.budget && steps < MAX_BISECTION_STEPS {
        lo /= 2.0;
        steps += 1;
    }
    steps = 0;
    while total(hi) > problem.budget && steps < MAX_BISECTION_STEPS {
        hi *= 2.0;
        steps += 1;
    }
    for _ in 0..MAX_BISECTION_STEPS {
        if hi <= lo * (1.0 + BISECTION_REL_WIDTH) {
            break;
        }
        let mid = (lo * hi).sqrt();
        if total(mid) > problem.budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CapacitySolution {
        capacity: at(hi),
        multiplier: hi,
        unattainable,
    })
}

/// Used when the deadline bounds exceed the budget: the bounds are scaled
/// down to 99.9% of the budget and the problem re-solved, so that users
/// without a bound keep a nonzero share.
pub fn fallback_allocation(problem: &CapacityProblem) -> Vec<f64> {
    let bounds = problem.bounds();
    let required: f64 = bounds.iter().sum();
    let scale = 0.999 * problem.budget / required;
    let relaxed = CapacityProblem {
        users: problem
            .users
            .iter()
            .zip(&bounds)
            .map(|(u, &lo)| {
                let mut u = *u;
                // a deadline that yields bound `scale * lo`
                if lo > 0.0 {
                    u.deadline = u.fixed_delay + u.work / (scale * lo);
                } else {
                    u.deadline = f64::INFINITY;
                }
                u
            })
            .collect(),
        ..problem.clone()
    };
    match solve_capacity_allocation(&relaxed) {
        Ok(sol) => sol.capacity,
        Err(_) => bounds.iter().map(|&lo| lo * problem.budget / required).collect(),
    }
}

/// `t(e = 1) - t(e = 0)` at fixed rate and capacities.
pub fn semantic_delta(w: &Workload, rate: f64, capacity: f64, psi: f64) -> f64 {
    (w.data_bits / w.compression_ratio - w.data_bits) / rate
        + service_time(w.reconstruction, psi * capacity)
        + service_time(w.extraction, psi * w.local_capacity)
}

/// Extract semantics iff that strictly shortens the delay; zero rate or
/// capacity yields `false`.
pub fn semantic_choice(w: &Workload, rate: f64, capacity: f64, psi: f64) -> bool {
    if !(rate > 0.0 && capacity > 0.0 && w.local_capacity > 0.0) {
        return false;
    }
    semantic_delta(w, rate, capacity, psi) < 0.0
}

pub fn semantic_decision(u: usize, a: &Assignment, s: &Scenario) -> bool {
    semantic_choice(
        &Workload::of(s, u),
        crate::channel::uplink_rate(u, a, s),
        a.capacity[u],
        s.params.flops_per_cycle,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityRule {
    Optimal,
    /// `F_k / |members|` for every member.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub decide_semantic: bool,
    pub capacity: CapacityRule,
}

impl Default for AllocationOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 20,
            decide_semantic: true,
            capacity: CapacityRule::Optimal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AllocationOutcome {
    /// Objective before the first iteration and after each one.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// MECs whose deadline bounds exceeded the budget in the last iteration.
    pub infeasible_mecs: Vec<usize>,
    pub unattainable: Vec<usize>,
}

/// Builds the capacity problem of MEC `k` from the cached state.
pub fn capacity_problem(ev: &Evaluator, k: usize) -> CapacityProblem {
    let psi = ev.scenario().params.flops_per_cycle;
    let users = ev
        .state()
        .members(k)
        .into_iter()
        .map(|u| {
            let w = &ev.workloads()[u];
            let e = ev.state().semantic[u];
            CapacityUser {
                terminal: u,
                fixed_delay: service_time(w.sent_bits(e), ev.rate(u)) + service_time(w.local_flops(e), psi * w.local_capacity),
                work: w.edge_flops(e) / psi,
                priority: w.priority,
                deadline: w.deadline,
            }
        })
        .collect();
    CapacityProblem {
        mec: k,
        budget: ev.scenario().mecs[k].capacity,
        users,
    }
}

fn allocate(ev: &mut Evaluator, rule: CapacityRule, outcome: &mut AllocationOutcome) {
    outcome.infeasible_mecs.clear();
    outcome.unattainable.clear();
    for k in 0..ev.state().num_mecs() {
        let members = ev.state().members(k);
        if members.is_empty() {
            continue;
        }
        let capacity = match rule {
            CapacityRule::Uniform => vec![ev.scenario().mecs[k].capacity / members.len() as f64; members.len()],
            CapacityRule::Optimal => {
                // unserved terminals cannot use capacity
                let mut problem = capacity_problem(ev, k);
                let served: Vec<bool> = problem.users.iter().map(|u| u.fixed_delay.is_finite()).collect();
                for (user, &ok) in problem.users.iter_mut().zip(&served) {
                    if !ok {
                        user.work = 0.0;
                    }
                }
                match solve_capacity_allocation(&problem) {
                    Ok(sol) => {
                        outcome.unattainable.extend(sol.unattainable);
                        sol.capacity
                    }
                    Err(e) => {
                        log::debug!("{e}; scaling the deadline bounds to the budget");
                        outcome.infeasible_mecs.push(k);
                        fallback_allocation(&problem)
                    }
                }
            }
        };
        for (u, f) in members.into_iter().zip(capacity) {
            ev.set_capacity(u, f);
        }
    }
}

/// Alternates semantic decisions and capacity allocation until the
/// objective moves by at most `tolerance`.
pub fn run_allocation(ev: &mut Evaluator, options: &AllocationOptions) -> AllocationOutcome {
    let psi = ev.scenario().params.flops_per_cycle;
    let mut outcome = AllocationOutcome {
        trace: vec![ev.objective()],
        ..Default::default()
    };
    for _ in 0..options.max_iterations {
        if options.decide_semantic {
            for u in 0..ev.state().num_terminals() {
                let e = semantic_choice(&ev.workloads()[u], ev.rate(u), ev.state().capacity[u], psi);
                ev.set_semantic(u, e);
            }
        }
        allocate(ev, options.capacity, &mut outcome);
        outcome.iterations += 1;
        let v = ev.objective();
        let prev = *outcome.trace.last().unwrap();
        outcome.trace.push(v);
        if (v - prev).abs() <= options.tolerance || v == prev {
            break;
        }
    }
    outcome
}
