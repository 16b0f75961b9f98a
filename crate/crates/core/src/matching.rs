//! Swap matching for terminal association and subcarrier allocation.
//!
//! Preferences are weighted-delay logs (`ln(M t)`, lower preferred) for
//! terminals and MECs, and carried rate (higher preferred) for subcarriers.
//! They depend on the whole state through interference, so every candidate
//! swap is applied to an [`Evaluator`], judged, and undone when rejected.
//!
//! A swap is accepted when
//! * no involved party is worse off and at least one is strictly better,
//! * the global potential (unserved count, then sum of `ln(M t)`) strictly
//!   decreases, which rules out cycles through externalities, and
//! * no terminal that met its deadline stops meeting it.
//!
//! `verify_stability` scans with the same predicate, so a run that stops
//! because a full pass accepted nothing is stable by construction.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::state::{Evaluator, Move, NetworkState, Potential};

/// Relative tolerance separating a strict improvement from float noise.
pub const STRICT_TOLERANCE: f64 = 1e-12;

/// Safety bound on full scan passes of one matching run.
pub const MAX_PASSES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Association,
    Subcarrier,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Association => "association",
            Layer::Subcarrier => "subcarrier",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Terminal(usize),
    Mec(usize),
    Subcarrier(usize),
}

impl Party {
    fn lower_is_better(self) -> bool {
        !matches!(self, Party::Subcarrier(_))
    }

    fn value(self, ev: &Evaluator) -> f64 {
        match self {
            Party::Terminal(u) => terminal_pref(ev, u),
            Party::Mec(k) => mec_pref(ev, k),
            Party::Subcarrier(n) => subcarrier_pref(ev, n),
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Terminal(u) => write!(f, "u{u}"),
            Party::Mec(k) => write!(f, "k{k}"),
            Party::Subcarrier(n) => write!(f, "n{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartyChange {
    pub party: Party,
    pub before: f64,
    pub after: f64,
}

/// An accepted (or, from `verify_stability`, a blocking) swap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapEvent {
    pub layer: Layer,
    pub mv: Move,
    pub changes: Vec<PartyChange>,
}

impl fmt::Display for SwapEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.layer)?;
        match self.mv {
            Move::Exchange { u, v } => write!(f, "exchange u{u} u{v}")?,
            Move::Swap { mec, u, n, v, m } => write!(f, "swap k{mec} u{u}:n{n} u{v}:n{m}")?,
            Move::Relocate { mec, u, from, to } => write!(f, "relocate k{mec} u{u} n{from}->n{to}")?,
            Move::Absorb { mec, u, hole } => write!(f, "absorb k{mec} u{u} n{hole}")?,
            Move::Release { mec, u, n } => write!(f, "release k{mec} u{u} n{n}")?,
        }
        for c in &self.changes {
            write!(f, " {}:{:+e}", c.party, c.after - c.before)?;
        }
        Ok(())
    }
}

/// `ln(M t)` of terminal `u` under the current state.
pub fn terminal_pref(ev: &Evaluator, u: usize) -> f64 {
    ev.phi(u)
}

/// Sum of `ln(M t)` over the members of MEC `k`.
pub fn mec_pref(ev: &Evaluator, k: usize) -> f64 {
    ev.mec_value(k)
}

/// Total rate subcarrier `n` carries over all cells; zero when it is a
/// hole everywhere.
pub fn subcarrier_pref(ev: &Evaluator, n: usize) -> f64 {
    ev.subcarrier_value(n)
}

fn tolerance(x: f64) -> f64 {
    STRICT_TOLERANCE * x.abs().max(1.0)
}

/// `after` is not worse than `before` for a lower-is-better value.
fn not_worse(before: f64, after: f64) -> bool {
    if after.is_nan() {
        return false;
    }
    before == f64::INFINITY || after <= before + tolerance(before)
}

fn strictly_better(before: f64, after: f64) -> bool {
    if after.is_nan() || after == f64::INFINITY {
        return false;
    }
    before == f64::INFINITY || after < before - tolerance(before)
}

fn potential_decreases(before: Potential, after: Potential) -> bool {
    after.unserved < before.unserved
        || (after.unserved == before.unserved && after.finite < before.finite - tolerance(before.finite))
}

fn parties(ev: &Evaluator, mv: Move) -> Vec<Party> {
    let s = ev.state();
    match mv {
        Move::Exchange { u, v } => vec![
            Party::Terminal(u),
            Party::Terminal(v),
            Party::Mec(s.serving[u].expect("served")),
            Party::Mec(s.serving[v].expect("served")),
        ],
        Move::Swap { u, n, v, m, .. } => vec![
            Party::Terminal(u),
            Party::Terminal(v),
            Party::Subcarrier(n),
            Party::Subcarrier(m),
        ],
        Move::Relocate { u, from, to, .. } => vec![Party::Terminal(u), Party::Subcarrier(from), Party::Subcarrier(to)],
        Move::Absorb { u, hole, .. } | Move::Release { u, n: hole, .. } => vec![Party::Terminal(u), Party::Subcarrier(hole)],
    }
}

/// Applies `mv`, keeps it if it is a blocking swap and returns the event;
/// otherwise restores the state and returns `None`.
fn try_move(ev: &mut Evaluator, mv: Move, layer: Layer, commit: bool) -> Option<SwapEvent> {
    if !ev.is_applicable(mv) {
        return None;
    }
    let who = parties(ev, mv);
    let before: Vec<f64> = who.iter().map(|p| p.value(ev)).collect();
    let potential = ev.potential();
    let deadlines = ev.deadline_mask();
    ev.apply(mv);
    let after: Vec<f64> = who.iter().map(|p| p.value(ev)).collect();

    let mut weak = true;
    let mut strict = false;
    for ((p, &b), &a) in who.iter().zip(&before).zip(&after) {
        let (b, a) = if p.lower_is_better() { (b, a) } else { (-b, -a) };
        weak &= not_worse(b, a);
        strict |= strictly_better(b, a);
    }
    let accepted = weak
        && strict
        && potential_decreases(potential, ev.potential())
        && deadlines.iter().enumerate().all(|(w, &met)| !met || ev.meets_deadline(w));

    if !accepted || !commit {
        ev.apply(mv.inverse());
    }
    accepted.then(|| SwapEvent {
        layer,
        mv,
        changes: who
            .into_iter()
            .zip(before.into_iter().zip(after))
            .map(|(party, (before, after))| PartyChange { party, before, after })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchingStats {
    pub swaps: usize,
    pub passes: usize,
}

fn association_candidates(state: &NetworkState) -> Vec<Move> {
    let t = state.num_terminals();
    let mut out = Vec::new();
    for u in 0..t {
        for v in u + 1..t {
            if let (Some(a), Some(b)) = (state.serving[u], state.serving[v]) {
                if a != b {
                    out.push(Move::Exchange { u, v });
                }
            }
        }
    }
    out
}

/// Candidate moves of terminal `u` inside its cell: swaps with terminals
/// of higher index, then relocations to holes, then absorptions.
fn subcarrier_candidates(state: &NetworkState, k: usize, u: usize) -> Vec<Move> {
    let held = state.held(u);
    let holes = state.holes(k);
    let mut out = Vec::new();
    for &n in &held {
        for m in 0..state.num_subcarriers() {
            if let Some(v) = state.occupant[k][m] {
                if v > u {
                    out.push(Move::Swap { mec: k, u, n, v, m });
                }
            }
        }
    }
    for &from in &held {
        for &to in &holes {
            out.push(Move::Relocate { mec: k, u, from, to });
        }
    }
    for &hole in &holes {
        out.push(Move::Absorb { mec: k, u, hole });
    }
    out
}

/// Repeated first-improvement passes over terminal pairs in ascending
/// order until a full pass accepts no exchange.
pub fn run_association_matching(ev: &mut Evaluator, mut trace: Option<&mut Vec<SwapEvent>>) -> MatchingStats {
    let mut stats = MatchingStats::default();
    let t = ev.state().num_terminals();
    loop {
        stats.passes += 1;
        let mut accepted = false;
        for u in 0..t {
            for v in u + 1..t {
                if let Some(event) = try_move(ev, Move::Exchange { u, v }, Layer::Association, true) {
                    stats.swaps += 1;
                    accepted = true;
                    log::trace!("{event}");
                    if let Some(trace) = trace.as_deref_mut() {
                        trace.push(event);
                    }
                }
            }
        }
        if !accepted {
            break;
        }
        if stats.passes >= MAX_PASSES {
            log::warn!("association matching stopped after {MAX_PASSES} passes");
            break;
        }
    }
    stats
}

/// Repeated passes over every cell: each member in ascending index tries
/// its candidate moves in order, rescanning after every accepted swap.
pub fn run_subcarrier_matching(ev: &mut Evaluator, mut trace: Option<&mut Vec<SwapEvent>>) -> MatchingStats {
    let mut stats = MatchingStats::default();
    loop {
        stats.passes += 1;
        let mut accepted = false;
        for k in 0..ev.state().num_mecs() {
            for u in ev.state().members(k) {
                // candidates go stale once a move is accepted
                'rescan: loop {
                    for mv in subcarrier_candidates(ev.state(), k, u) {
                        if let Some(event) = try_move(ev, mv, Layer::Subcarrier, true) {
                            stats.swaps += 1;
                            accepted = true;
                            log::trace!("{event}");
                            if let Some(trace) = trace.as_deref_mut() {
                                trace.push(event);
                            }
                            continue 'rescan;
                        }
                    }
                    break;
                }
            }
        }
        if !accepted {
            break;
        }
        if stats.passes >= MAX_PASSES {
            log::warn!("subcarrier matching stopped after {MAX_PASSES} passes");
            break;
        }
    }
    stats
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Blocked(SwapEvent),
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::Stable)
    }
}

/// Exhaustive scan for a blocking swap on one layer.
pub fn verify_stability(ev: &Evaluator, layer: Layer) -> Stability {
    let mut probe = ev.clone();
    let candidates: Vec<Move> = match layer {
        Layer::Association => association_candidates(ev.state()),
        Layer::Subcarrier => (0..ev.state().num_mecs())
            .flat_map(|k| {
                ev.state()
                    .members(k)
                    .into_iter()
                    .flat_map(move |u| subcarrier_candidates(ev.state(), k, u))
            })
            .collect(),
    };
    for mv in candidates {
        if let Some(event) = try_move(&mut probe, mv, layer, false) {
            return Stability::Blocked(event);
        }
    }
    Stability::Stable
}

fn check_room(scenario: &Scenario) -> Result<()> {
    let (t, k, n) = (scenario.num_terminals(), scenario.num_mecs(), scenario.num_subcarriers());
    if t > k * n {
        return Err(Error::InfeasibleInit(format!(
            "{t} terminals cannot each hold a subcarrier on {k} MECs x {n} subcarriers"
        )));
    }
    Ok(())
}

/// Shuffled terminals dealt round-robin over the MECs.
pub fn random_association(scenario: &Scenario, rng: &mut impl Rng) -> Result<Vec<Option<usize>>> {
    check_room(scenario)?;
    let mut order: Vec<usize> = (0..scenario.num_terminals()).collect();
    order.shuffle(rng);
    let mut serving = vec![None; order.len()];
    for (i, u) in order.into_iter().enumerate() {
        serving[u] = Some(i % scenario.num_mecs());
    }
    Ok(serving)
}

/// Nearest MEC with fewer than `N` members, terminals in ascending index.
pub fn nearest_association(scenario: &Scenario) -> Result<Vec<Option<usize>>> {
    check_room(scenario)?;
    let mut load = vec![0usize; scenario.num_mecs()];
    let mut serving = Vec::with_capacity(scenario.num_terminals());
    for u in 0..scenario.num_terminals() {
        let mut ks: Vec<usize> = (0..scenario.num_mecs()).collect();
        ks.sort_by(|&a, &b| scenario.distance(u, a).total_cmp(&scenario.distance(u, b)).then(a.cmp(&b)));
        let k = ks
            .into_iter()
            .find(|&k| load[k] < scenario.num_subcarriers())
            .expect("room checked");
        load[k] += 1;
        serving.push(Some(k));
    }
    Ok(serving)
}

/// Deals every subcarrier of each MEC round-robin over its members.
pub fn round_robin_subcarriers(state: &mut NetworkState) {
    for k in 0..state.num_mecs() {
        let members = state.members(k);
        for n in 0..state.num_subcarriers() {
            state.occupant[k][n] = if members.is_empty() {
                None
            } else {
                Some(members[n % members.len()])
            };
        }
    }
}
