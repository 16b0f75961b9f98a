//! Compact solution state and a cached evaluator used by the search
//! algorithms.
//!
//! [`Evaluator`] caches per-cell subcarrier rates, per-terminal rates and
//! delays. A [`Move`] only touches a few subcarrier columns, so only those
//! columns and the terminals occupying them are recomputed. Every cached
//! value is a pure function of the state computed in a fixed summation
//! order, which makes the incremental values equal to a full recomputation
//! bit for bit (and undoing a move restores them exactly).

use serde::{Deserialize, Serialize};

use crate::channel;
use crate::error::{Error, Result};
use crate::perf::{log_weighted_delay, Assignment, DelayBreakdown, Workload};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    /// Serving MEC of each terminal.
    pub serving: Vec<Option<usize>>,
    /// `occupant[k][n]`: terminal holding subcarrier `n` of MEC `k`.
    pub occupant: Vec<Vec<Option<usize>>>,
    pub semantic: Vec<bool>,
    pub capacity: Vec<f64>,
}

impl NetworkState {
    pub fn new(terminals: usize, mecs: usize, subcarriers: usize) -> Self {
        Self {
            serving: vec![None; terminals],
            occupant: vec![vec![None; subcarriers]; mecs],
            semantic: vec![false; terminals],
            capacity: vec![0.0; terminals],
        }
    }

    pub fn num_terminals(&self) -> usize {
        self.serving.len()
    }

    pub fn num_mecs(&self) -> usize {
        self.occupant.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.occupant.first().map_or(0, Vec::len)
    }

    /// Terminals served by `k`, ascending.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.num_terminals()).filter(|&u| self.serving[u] == Some(k)).collect()
    }

    /// Subcarriers held by `u` at its serving MEC, ascending.
    pub fn held(&self, u: usize) -> Vec<usize> {
        match self.serving[u] {
            Some(k) => (0..self.num_subcarriers())
                .filter(|&n| self.occupant[k][n] == Some(u))
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn holes(&self, k: usize) -> Vec<usize> {
        (0..self.num_subcarriers()).filter(|&n| self.occupant[k][n].is_none()).collect()
    }

    pub fn column(&self, n: usize) -> Vec<Option<usize>> {
        self.occupant.iter().map(|row| row[n]).collect()
    }

    /// Every occupant is served by the MEC whose subcarrier it holds.
    pub fn consistency_errors(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, row) in self.occupant.iter().enumerate() {
            for (n, occ) in row.iter().enumerate() {
                if let Some(u) = *occ {
                    if u >= self.num_terminals() {
                        out.push(format!("({k}, {n}) held by unknown terminal {u}"));
                    } else if self.serving[u] != Some(k) {
                        out.push(format!("terminal {u} holds ({k}, {n}) but is not served by MEC {k}"));
                    }
                }
            }
        }
        for (u, s) in self.serving.iter().enumerate() {
            if matches!(s, Some(k) if *k >= self.num_mecs()) {
                out.push(format!("terminal {u} served by unknown MEC"));
            }
        }
        out
    }

    pub fn to_assignment(&self) -> Assignment {
        let (terminals, mecs, subcarriers) = (self.num_terminals(), self.num_mecs(), self.num_subcarriers());
        let mut a = Assignment::empty(terminals, mecs, subcarriers);
        for (u, s) in self.serving.iter().enumerate() {
            if let Some(k) = *s {
                a.associate(u, k);
            }
        }
        for (k, row) in self.occupant.iter().enumerate() {
            for (n, occ) in row.iter().enumerate() {
                if let Some(u) = *occ {
                    a.subcarriers[u][k][n] = true;
                }
            }
        }
        a.semantic = self.semantic.clone();
        a.capacity = self.capacity.clone();
        a
    }

    /// Fails unless the assignment satisfies single association and
    /// subcarrier exclusivity.
    pub fn from_assignment(a: &Assignment) -> Result<Self> {
        let (terminals, mecs, subcarriers) = (a.num_terminals(), a.num_mecs(), a.num_subcarriers());
        let mut s = Self::new(terminals, mecs, subcarriers);
        for u in 0..terminals {
            let ks: Vec<usize> = (0..mecs).filter(|&k| a.association[u][k]).collect();
            if ks.len() > 1 {
                return Err(Error::Domain(format!("terminal {u} is associated with {ks:?}")));
            }
            s.serving[u] = ks.first().copied();
            for k in 0..mecs {
                for n in 0..subcarriers {
                    if !a.subcarriers[u][k][n] {
                        continue;
                    }
                    if s.occupant[k][n].is_some() {
                        return Err(Error::Domain(format!("subcarrier ({k}, {n}) is shared")));
                    }
                    s.occupant[k][n] = Some(u);
                }
            }
        }
        s.semantic = a.semantic.clone();
        s.capacity = a.capacity.clone();
        match s.consistency_errors().into_iter().next() {
            Some(e) => Err(Error::Domain(e)),
            None => Ok(s),
        }
    }
}

/// A local modification of the communication layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    /// Two terminals of different MECs exchange MEC, subcarriers and
    /// capacity.
    Exchange { u: usize, v: usize },
    /// Inside `mec`, `u` gives subcarrier `n` to `v` and takes `m`.
    Swap { mec: usize, u: usize, n: usize, v: usize, m: usize },
    /// `u` moves from subcarrier `from` to the hole `to`.
    Relocate { mec: usize, u: usize, from: usize, to: usize },
    /// `u` takes the hole `hole`.
    Absorb { mec: usize, u: usize, hole: usize },
    /// `u` frees subcarrier `n`.
    Release { mec: usize, u: usize, n: usize },
}

impl Move {
    pub fn inverse(self) -> Move {
        match self {
            Move::Swap { mec, u, n, v, m } => Move::Swap { mec, u, n: m, v, m: n },
            Move::Relocate { mec, u, from, to } => Move::Relocate { mec, u, from: to, to: from },
            Move::Absorb { mec, u, hole } => Move::Release { mec, u, n: hole },
            Move::Release { mec, u, n } => Move::Absorb { mec, u, hole: n },
            other => other,
        }
    }

    /// Terminals whose own decision changes.
    pub fn movers(self) -> Vec<usize> {
        match self {
            Move::Exchange { u, v } | Move::Swap { u, v, .. } => vec![u, v],
            Move::Relocate { u, .. } | Move::Absorb { u, .. } | Move::Release { u, .. } => vec![u],
        }
    }
}

/// Number of terminals with infinite delay, then the sum of the finite
/// weighted-delay logs; compared lexicographically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub unserved: usize,
    pub finite: f64,
}

#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    scenario: &'a Scenario,
    workloads: Vec<Workload>,
    state: NetworkState,
    cell_rate: Vec<Vec<f64>>,
    rate: Vec<f64>,
    delay: Vec<f64>,
    phi: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario, workloads: Vec<Workload>, state: NetworkState) -> Self {
        let (terminals, mecs, subcarriers) = (state.num_terminals(), state.num_mecs(), state.num_subcarriers());
        assert_eq!(workloads.len(), terminals, "one workload per terminal");
        let mut ev = Self {
            scenario,
            workloads,
            state,
            cell_rate: vec![vec![0.0; subcarriers]; mecs],
            rate: vec![0.0; terminals],
            delay: vec![0.0; terminals],
            phi: vec![0.0; terminals],
        };
        ev.refresh_all();
        ev
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn workloads(&self) -> &[Workload] {
        &self.workloads
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn into_state(self) -> NetworkState {
        self.state
    }

    pub fn refresh_all(&mut self) {
        for n in 0..self.state.num_subcarriers() {
            self.refresh_column(n);
        }
        for u in 0..self.state.num_terminals() {
            self.refresh_terminal(u);
        }
    }

    fn refresh_column(&mut self, n: usize) {
        let column = self.state.column(n);
        for k in 0..column.len() {
            self.cell_rate[k][n] = channel::column_rate(self.scenario, k, &column);
        }
    }

    fn refresh_terminal(&mut self, u: usize) {
        let mut rate = 0.0;
        if let Some(k) = self.state.serving[u] {
            for n in 0..self.state.num_subcarriers() {
                if self.state.occupant[k][n] == Some(u) {
                    rate += self.cell_rate[k][n];
                }
            }
        }
        self.rate[u] = rate;
        self.refresh_delay(u);
    }

    fn refresh_delay(&mut self, u: usize) {
        let w = &self.workloads[u];
        let d = DelayBreakdown::compute(
            w,
            self.state.semantic[u],
            self.rate[u],
            self.state.capacity[u],
            self.scenario.params.flops_per_cycle,
        );
        self.delay[u] = d.total();
        self.phi[u] = log_weighted_delay(w.priority, self.delay[u]);
    }

    pub fn rate(&self, u: usize) -> f64 {
        self.rate[u]
    }

    pub fn delay(&self, u: usize) -> f64 {
        self.delay[u]
    }

    /// `ln(M t)` of terminal `u`.
    pub fn phi(&self, u: usize) -> f64 {
        self.phi[u]
    }

    pub fn cell_rate(&self, k: usize, n: usize) -> f64 {
        self.cell_rate[k][n]
    }

    /// Sum of the members' `ln(M t)`; lower is better for the MEC.
    pub fn mec_value(&self, k: usize) -> f64 {
        let mut total = 0.0;
        for u in 0..self.state.num_terminals() {
            if self.state.serving[u] == Some(k) {
                total += self.phi[u];
            }
        }
        total
    }

    /// Total rate carried by subcarrier `n` over all cells.
    pub fn subcarrier_value(&self, n: usize) -> f64 {
        let mut total = 0.0;
        for row in &self.cell_rate {
            total += row[n];
        }
        total
    }

    /// Sum of `ln(M t)` over all terminals.
    pub fn objective(&self) -> f64 {
        let mut total = 0.0;
        for &phi in &self.phi {
            total += phi;
        }
        total
    }

    pub fn potential(&self) -> Potential {
        let mut p = Potential {
            unserved: 0,
            finite: 0.0,
        };
        for &phi in &self.phi {
            if phi.is_finite() {
                p.finite += phi;
            } else {
                p.unserved += 1;
            }
        }
        p
    }

    pub fn meets_deadline(&self, u: usize) -> bool {
        self.delay[u] <= self.workloads[u].deadline
    }

    pub fn deadline_mask(&self) -> Vec<bool> {
        (0..self.state.num_terminals()).map(|u| self.meets_deadline(u)).collect()
    }

    pub fn set_semantic(&mut self, u: usize, semantic: bool) {
        if self.state.semantic[u] != semantic {
            self.state.semantic[u] = semantic;
            self.refresh_delay(u);
        }
    }

    pub fn set_capacity(&mut self, u: usize, capacity: f64) {
        self.state.capacity[u] = capacity;
        self.refresh_delay(u);
    }

    /// Whether `mv` is applicable to the current state.
    pub fn is_applicable(&self, mv: Move) -> bool {
        let s = &self.state;
        let holds = |k: usize, n: usize, u: usize| n < s.num_subcarriers() && s.occupant[k][n] == Some(u);
        let serves = |k: usize, u: usize| k < s.num_mecs() && s.serving[u] == Some(k);
        match mv {
            Move::Exchange { u, v } => matches!((s.serving[u], s.serving[v]), (Some(a), Some(b)) if a != b),
            Move::Swap { mec, u, n, v, m } => u != v && serves(mec, u) && holds(mec, n, u) && holds(mec, m, v),
            Move::Relocate { mec, u, from, to } => {
                serves(mec, u) && holds(mec, from, u) && to < s.num_subcarriers() && s.occupant[mec][to].is_none()
            }
            Move::Absorb { mec, u, hole } => {
                serves(mec, u) && hole < s.num_subcarriers() && s.occupant[mec][hole].is_none()
            }
            Move::Release { mec, u, n } => serves(mec, u) && holds(mec, n, u),
        }
    }

    /// Applies `mv` and refreshes the affected caches. Panics when the
    /// move is not applicable.
    pub fn apply(&mut self, mv: Move) {
        assert!(self.is_applicable(mv), "move {mv:?} not applicable");
        let mut touched = Vec::new();
        match mv {
            Move::Exchange { u, v } => {
                let (ku, kv) = (self.state.serving[u].unwrap(), self.state.serving[v].unwrap());
                for n in 0..self.state.num_subcarriers() {
                    if self.state.occupant[ku][n] == Some(u) {
                        self.state.occupant[ku][n] = Some(v);
                        touched.push(n);
                    }
                    if self.state.occupant[kv][n] == Some(v) {
                        self.state.occupant[kv][n] = Some(u);
                        touched.push(n);
                    }
                }
                self.state.serving[u] = Some(kv);
                self.state.serving[v] = Some(ku);
                self.state.capacity.swap(u, v);
            }
            Move::Swap { mec, u, n, v, m } => {
                self.state.occupant[mec][n] = Some(v);
                self.state.occupant[mec][m] = Some(u);
                touched.extend([n, m]);
            }
            Move::Relocate { mec, u, from, to } => {
                self.state.occupant[mec][from] = None;
                self.state.occupant[mec][to] = Some(u);
                touched.extend([from, to]);
            }
            Move::Absorb { mec, u, hole } => {
                self.state.occupant[mec][hole] = Some(u);
                touched.push(hole);
            }
            Move::Release { mec, n, .. } => {
                self.state.occupant[mec][n] = None;
                touched.push(n);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let mut affected = mv.movers();
        for &n in &touched {
            self.refresh_column(n);
            for row in &self.state.occupant {
                if let Some(w) = row[n] {
                    affected.push(w);
                }
            }
        }
        affected.sort_unstable();
        affected.dedup();
        for u in affected {
            self.refresh_terminal(u);
        }
    }
}
