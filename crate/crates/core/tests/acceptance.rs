//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 5 and 6 are known to fail on this model (see the README); they
//! are reported as FAIL but do not fail the process unless
//! `ACCEPTANCE_STRICT` is set. Any other failure exits nonzero.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semoff_core::allocation::{solve_capacity_allocation, CapacityProblem, CapacityUser};
use semoff_core::channel;
use semoff_core::experiments::{run_sweep, write_sweep_csv, Axis, SweepSpec};
use semoff_core::matching::{verify_stability, Layer};
use semoff_core::nn_cost::{
    extraction_flops, recognition_flops, reconstruction_flops, ArchitectureDescriptor, ConvLayer,
    FcHead, FeatureShape, TaskCosts,
};
use semoff_core::perf::{terminal_delay, workloads};
use semoff_core::{
    generate_scenario, solve, Algorithm, Assignment, Config, Evaluator, NetworkState, Scenario,
    ScenarioConfig, SolveReport, SolverConfig,
};

const SEEDS: u64 = 20;
const DESCENT_SLACK: f64 = 1e-9;
const CAPACITY_OBJECTIVE_REL: f64 = 1e-5;
const BUDGET_RESIDUAL_REL: f64 = 1e-10;
const ORDERING_FTM_GAIN: f64 = 0.10;
const EXIT_GAIN: f64 = 0.05;
const SATURATION_SLACK: f64 = 0.01;
const KNOWN_RED: [usize; 2] = [5, 6];

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
}

fn timed(limit: Duration, started: Instant, pass: bool, detail: String) -> (bool, String) {
    let took = started.elapsed();
    let within = took <= limit;
    (
        pass && within,
        format!("{detail}; {:.2} s (limit {} s)", took.as_secs_f64(), limit.as_secs()),
    )
}

fn default_runs(algorithm: Algorithm, scenario_cfg: &ScenarioConfig) -> Vec<(Scenario, SolveReport)> {
    let solver = SolverConfig::default();
    (0..SEEDS)
        .map(|seed| {
            let s = generate_scenario(scenario_cfg, seed).expect("default scenario");
            let r = solve(&s, algorithm, &solver, seed).expect("default solve");
            (s, r)
        })
        .collect()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn non_increasing(series: &[f64]) -> bool {
    series.windows(2).all(|w| w[1] <= w[0] + DESCENT_SLACK)
}

// 1
fn descent() -> (bool, String) {
    let t0 = Instant::now();
    let cfg = ScenarioConfig::default();
    let mut bad = Vec::new();
    let mut rounds = 0;
    for alg in Algorithm::ALL {
        for (_, r) in default_runs(alg, &cfg) {
            rounds += r.rounds.len();
            let mut steps = vec![r.trace[0]];
            for rec in &r.rounds {
                steps.extend([rec.after_association, rec.after_subcarriers, rec.after_allocation]);
                if !non_increasing(&rec.allocation_trace) {
                    bad.push(format!("{alg}/seed{} allocation_options", r.seed));
                }
            }
            if !non_increasing(&r.trace) || !non_increasing(&steps) {
                bad.push(format!("{alg}/seed{} bcd", r.seed));
            }
        }
    }
    let detail = format!("{} algorithms x {SEEDS} seeds, {rounds} rounds, violations {:?}", Algorithm::ALL.len(), bad);
    timed(Duration::from_secs(60), t0, bad.is_empty(), detail)
}

// 2
fn stability() -> (bool, String) {
    let t0 = Instant::now();
    let mut bad = Vec::new();
    for (s, r) in default_runs(Algorithm::Proposed, &ScenarioConfig::default()) {
        let st = NetworkState::from_assignment(&r.assignment).expect("solver output is consistent");
        let ev = Evaluator::new(&s, workloads(&s), st);
        for layer in [Layer::Association, Layer::Subcarrier] {
            if !verify_stability(&ev, layer).is_stable() {
                bad.push(format!("seed{} {layer}", r.seed));
            }
        }
    }
    timed(Duration::from_secs(30), t0, bad.is_empty(), format!("{SEEDS} runs, blocked {:?}", bad))
}

/// Pairwise transfer descent: for every pair of active users, golden
/// section on the split of their combined capacity, until a sweep no
/// longer moves the objective.
fn capacity_oracle(p: &CapacityProblem) -> f64 {
    let lo: Vec<f64> = p
        .users
        .iter()
        .map(|u| {
            if u.work > 0.0 && u.deadline > u.fixed_delay {
                u.work / (u.deadline - u.fixed_delay)
            } else {
                0.0
            }
        })
        .collect();
    let active: Vec<usize> = (0..p.users.len()).filter(|&i| p.users[i].work > 0.0).collect();
    let mut f = vec![0.0; p.users.len()];
    let spare = p.budget - active.iter().map(|&i| lo[i]).sum::<f64>();
    for &i in &active {
        f[i] = lo[i] + spare / active.len() as f64;
    }
    let term = |i: usize, x: f64| -> f64 {
        let u = &p.users[i];
        (u.priority * (u.fixed_delay + u.work / x)).ln()
    };
    let total = |f: &[f64]| -> f64 { p.objective(f) };
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut prev = total(&f);
    for _ in 0..2000 {
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                let pair = f[i] + f[j];
                let (mut a, mut b) = (lo[i], pair - lo[j]);
                let g = |x: f64| term(i, x) + term(j, pair - x);
                let mut c = b - golden * (b - a);
                let mut d = a + golden * (b - a);
                for _ in 0..200 {
                    if g(c) < g(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                    c = b - golden * (b - a);
                    d = a + golden * (b - a);
                }
                let x = 0.5 * (a + b);
                if g(x) < g(f[i]) {
                    f[i] = x;
                    f[j] = pair - x;
                }
            }
        }
        let now = total(&f);
        if prev - now <= 1e-15 * now.abs().max(1.0) {
            break;
        }
        prev = now;
    }
    total(&f)
}

fn random_problem(rng: &mut ChaCha8Rng) -> CapacityProblem {
    loop {
        let budget = 10f64.powf(rng.gen_range(9.0..10.7));
        let count = rng.gen_range(1..=6);
        let users: Vec<CapacityUser> = (0..count)
            .map(|i| {
                let work = if rng.gen_bool(0.1) { 0.0 } else { 10f64.powf(rng.gen_range(7.0..10.0)) };
                let fixed_delay = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..0.5) };
                let deadline = match rng.gen_range(0..4) {
                    0 => f64::INFINITY,
                    1 => fixed_delay * rng.gen_range(0.5..1.0),
                    _ => fixed_delay + work / (budget * rng.gen_range(0.02..0.3)),
                };
                CapacityUser {
                    terminal: i,
                    fixed_delay,
                    work,
                    priority: rng.gen_range(1..=3) as f64,
                    deadline,
                }
            })
            .collect();
        let p = CapacityProblem { mec: 0, budget, users };
        if p.bounds().iter().sum::<f64>() <= p.budget {
            return p;
        }
    }
}

// 3
fn capacity_solver() -> (bool, String) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_obj, mut worst_residual) = (0f64, 0f64);
    let mut rescale_mismatch = 0;
    for _ in 0..100 {
        let p = random_problem(&mut rng);
        let sol = solve_capacity_allocation(&p).expect("bounded problems are feasible");
        let got = p.objective(&sol.capacity);
        let want = capacity_oracle(&p);
        worst_obj = worst_obj.max((got - want) / want.abs().max(1.0));
        if p.users.iter().any(|u| u.work > 0.0) {
            let used: f64 = sol.capacity.iter().sum();
            worst_residual = worst_residual.max((p.budget - used).abs() / p.budget);
        }
        let mut scaled = p.clone();
        let factor = rng.gen_range(0.5..8.0);
        for u in &mut scaled.users {
            u.priority *= factor;
        }
        let again = solve_capacity_allocation(&scaled).unwrap();
        let same = again.capacity.iter().zip(&sol.capacity).all(|(a, b)| a.to_bits() == b.to_bits());
        rescale_mismatch += usize::from(!same);
    }
    let pass = worst_obj <= CAPACITY_OBJECTIVE_REL && worst_residual <= BUDGET_RESIDUAL_REL && rescale_mismatch == 0;
    let detail = format!(
        "100 instances, worst objective excess {worst_obj:.2e} (tol {CAPACITY_OBJECTIVE_REL:e}), worst budget residual {worst_residual:.2e} (tol {BUDGET_RESIDUAL_REL:e}), rescale mismatches {rescale_mismatch}"
    );
    timed(Duration::from_secs(10), t0, pass, detail)
}

/// Dense, from-scratch evaluation of the quantities the matching compares.
struct Dense<'a> {
    s: &'a Scenario,
}

impl Dense<'_> {
    fn phi(&self, a: &Assignment, u: usize) -> f64 {
        let m = self.s.task_of(u).priority as f64;
        (m * terminal_delay(u, a, self.s)).ln()
    }

    fn mec(&self, a: &Assignment, k: usize) -> f64 {
        (0..a.num_terminals()).filter(|&u| a.association[u][k]).map(|u| self.phi(a, u)).sum()
    }

    fn carried(&self, a: &Assignment, n: usize) -> f64 {
        let b = self.s.params.subcarrier_bandwidth;
        let mut total = 0.0;
        for k in 0..a.num_mecs() {
            for u in 0..a.num_terminals() {
                if a.subcarriers[u][k][n] {
                    total += b * (1.0 + channel::sinr(u, k, n, a, self.s)).log2();
                }
            }
        }
        total
    }

    fn potential(&self, a: &Assignment) -> (usize, f64) {
        let phis: Vec<f64> = (0..a.num_terminals()).map(|u| self.phi(a, u)).collect();
        (
            phis.iter().filter(|p| !p.is_finite()).count(),
            phis.iter().filter(|p| p.is_finite()).sum(),
        )
    }

    fn on_time(&self, a: &Assignment) -> Vec<bool> {
        (0..a.num_terminals())
            .map(|u| terminal_delay(u, a, self.s) <= self.s.task_of(u).deadline)
            .collect()
    }
}

#[derive(Clone, Copy)]
enum Who {
    T(usize),
    K(usize),
    N(usize),
}

fn tol(x: f64) -> f64 {
    1e-12 * x.abs().max(1.0)
}

/// Returns (party rule holds, party rule and both guards hold).
fn blocks(d: &Dense, before: &Assignment, after: &Assignment, who: &[Who]) -> (bool, bool) {
    let mut weak = true;
    let mut strict = false;
    for &w in who {
        let (b, a) = match w {
            Who::T(u) => (d.phi(before, u), d.phi(after, u)),
            Who::K(k) => (d.mec(before, k), d.mec(after, k)),
            Who::N(n) => (-d.carried(before, n), -d.carried(after, n)),
        };
        weak &= !a.is_nan() && (b == f64::INFINITY || a <= b + tol(b));
        strict |= a.is_finite() && (b == f64::INFINITY || a < b - tol(b));
    }
    let party = weak && strict;
    let (pu, pf) = d.potential(before);
    let (qu, qf) = d.potential(after);
    let descends = qu < pu || (qu == pu && qf < pf - tol(pf));
    let late = d.on_time(before).iter().zip(d.on_time(after)).any(|(&was, now)| was && !now);
    (party, party && descends && !late)
}

fn serving(a: &Assignment, u: usize) -> Option<usize> {
    a.association[u].iter().position(|&x| x)
}

fn holder(a: &Assignment, k: usize, n: usize) -> Option<usize> {
    (0..a.num_terminals()).find(|&u| a.subcarriers[u][k][n])
}

#[derive(Default)]
struct OracleCounts {
    association: usize,
    subcarrier: usize,
    /// Moves meeting the party rule that a descent guard excludes.
    guarded: usize,
    examined: usize,
}

impl OracleCounts {
    fn tally(&mut self, layer: Layer, r: (bool, bool)) {
        self.examined += 1;
        self.guarded += usize::from(r.0 && !r.1);
        if r.1 {
            match layer {
                Layer::Association => self.association += 1,
                Layer::Subcarrier => self.subcarrier += 1,
            }
        }
    }
}

/// Every pairwise exchange, intra-cell subcarrier swap, move to a hole and
/// hole absorption, judged from scratch.
fn brute_force_blocking(s: &Scenario, a: &Assignment) -> OracleCounts {
    let d = Dense { s };
    let (t, kk, nn) = (a.num_terminals(), a.num_mecs(), a.num_subcarriers());
    let mut counts = OracleCounts::default();
    for u in 0..t {
        for v in u + 1..t {
            let (Some(ku), Some(kv)) = (serving(a, u), serving(a, v)) else { continue };
            if ku == kv {
                continue;
            }
            let mut b = a.clone();
            b.association.swap(u, v);
            b.subcarriers.swap(u, v);
            b.capacity.swap(u, v);
            let who = [Who::T(u), Who::T(v), Who::K(ku), Who::K(kv)];
            counts.tally(Layer::Association, blocks(&d, a, &b, &who));
        }
    }
    for k in 0..kk {
        for n in 0..nn {
            for m in 0..nn {
                if n == m {
                    continue;
                }
                match (holder(a, k, n), holder(a, k, m)) {
                    (Some(u), Some(v)) if u < v => {
                        let mut b = a.clone();
                        b.subcarriers[u][k][n] = false;
                        b.subcarriers[v][k][m] = false;
                        b.subcarriers[u][k][m] = true;
                        b.subcarriers[v][k][n] = true;
                        let who = [Who::T(u), Who::T(v), Who::N(n), Who::N(m)];
                        counts.tally(Layer::Subcarrier, blocks(&d, a, &b, &who));
                    }
                    (Some(u), None) => {
                        let mut b = a.clone();
                        b.subcarriers[u][k][n] = false;
                        b.subcarriers[u][k][m] = true;
                        counts.tally(Layer::Subcarrier, blocks(&d, a, &b, &[Who::T(u), Who::N(n), Who::N(m)]));
                    }
                    _ => {}
                }
            }
            if holder(a, k, n).is_none() {
                for u in (0..t).filter(|&u| a.association[u][k]) {
                    let mut b = a.clone();
                    b.subcarriers[u][k][n] = true;
                    counts.tally(Layer::Subcarrier, blocks(&d, a, &b, &[Who::T(u), Who::N(n)]));
                }
            }
        }
    }
    counts
}

// 4
fn matching_oracle() -> (bool, String) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let solver = SolverConfig::default();
    let mut blocked = Vec::new();
    let (mut guarded, mut examined) = (0, 0);
    // FA never runs the association layer, so its outputs exercise the
    // oracle on states that may be blocked; it must agree with the
    // solver's own certificate there.
    let (mut fa_blocked, mut disagreements) = (0, 0);
    for seed in 1..=50u64 {
        let mut cfg = ScenarioConfig::default();
        cfg.params.num_mec = if rng.gen_bool(0.8) { 2 } else { 1 };
        cfg.params.num_subcarriers = rng.gen_range(1..=3);
        let cap = cfg.params.num_mec * cfg.params.num_subcarriers;
        cfg.params.num_terminals = rng.gen_range(2.min(cap)..=4usize.min(cap));
        let s = generate_scenario(&cfg, seed).expect("tiny scenario");
        let r = solve(&s, Algorithm::Proposed, &solver, seed).expect("tiny solve");
        let c = brute_force_blocking(&s, &r.assignment);
        guarded += c.guarded;
        examined += c.examined;
        if c.association + c.subcarrier > 0 {
            blocked.push(seed);
        }

        let fa = solve(&s, Algorithm::Fa, &solver, seed).expect("tiny solve");
        let c = brute_force_blocking(&s, &fa.assignment);
        let ev = Evaluator::new(&s, workloads(&s), NetworkState::from_assignment(&fa.assignment).unwrap());
        let certified = verify_stability(&ev, Layer::Association).is_stable();
        fa_blocked += usize::from(c.association > 0);
        disagreements += usize::from(certified != (c.association == 0));
    }
    let detail = format!(
        "50 instances (U<=4, K<=2, N<=3), {examined} moves examined, blocked {:?}; {guarded} moves meet the party rule but break a descent guard; oracle finds blocked associations in {fa_blocked} fixed-association runs, {disagreements} disagreements with the certificate",
        blocked
    );
    timed(Duration::from_secs(30), t0, blocked.is_empty() && disagreements == 0, detail)
}

// 5
fn ordering() -> (bool, String) {
    let t0 = Instant::now();
    let cfg = ScenarioConfig::default();
    let order = [Algorithm::Proposed, Algorithm::Linear, Algorithm::Fa, Algorithm::Uc, Algorithm::Ftm];
    let means: Vec<f64> = order
        .iter()
        .map(|&alg| mean(default_runs(alg, &cfg).iter().map(|(_, r)| r.mean_reward())))
        .collect();
    let ordered = means.windows(2).all(|w| w[0] >= w[1]);
    let ftm_gain = (means[0] - means[4]) / means[4].abs();
    let listing: Vec<String> = order.iter().zip(&means).map(|(a, m)| format!("{a} {m:.5}")).collect();
    let detail = format!(
        "mean reward per terminal: {}; ordering {}; gain over ftm {:.1}% (need >= {:.0}%)",
        listing.join(", "),
        if ordered { "holds" } else { "broken" },
        100.0 * ftm_gain,
        100.0 * ORDERING_FTM_GAIN
    );
    timed(Duration::from_secs(300), t0, ordered && ftm_gain >= ORDERING_FTM_GAIN, detail)
}

// 6
fn exit_points() -> (bool, String) {
    let t0 = Instant::now();
    let solver = SolverConfig::default();
    let cfg = ScenarioConfig::default();
    let (mut three, mut one) = (Vec::new(), Vec::new());
    for seed in 0..SEEDS {
        let s = generate_scenario(&cfg, seed).unwrap();
        let single = s.with_exit_points(1).unwrap();
        three.push(solve(&s, Algorithm::Proposed, &solver, seed).unwrap().mean_reward());
        one.push(solve(&single, Algorithm::Proposed, &solver, seed).unwrap().mean_reward());
    }
    let (m3, m1) = (mean(three), mean(one));
    let gain = (m3 - m1) / m1.abs();
    let detail = format!(
        "M=3 {m3:.5}, M=1 {m1:.5}, gain {:.2}% (need >= {:.0}%)",
        100.0 * gain,
        100.0 * EXIT_GAIN
    );
    timed(Duration::from_secs(300), t0, gain >= EXIT_GAIN, detail)
}

// 7
fn saturation() -> (bool, String) {
    let t0 = Instant::now();
    let spec = SweepSpec {
        axis: Axis::EdgeCapacity,
        values: Axis::EdgeCapacity.default_values(),
        replications: SEEDS as usize,
        algorithms: vec![Algorithm::Proposed],
    };
    let rows = run_sweep(&spec, &Config::default(), None).expect("sweep");
    let failures = rows.iter().filter(|r| !r.error.is_empty()).count();
    let curve: Vec<f64> = spec
        .values
        .iter()
        .map(|&v| mean(rows.iter().filter(|r| r.value == v).map(|r| r.mean_reward)))
        .collect();
    let monotone = curve.windows(2).all(|w| w[1] >= w[0] - SATURATION_SLACK * w[0].abs());
    let n = curve.len();
    let first = curve[1] - curve[0];
    let last = curve[n - 1] - curve[n - 2];
    let points: Vec<String> = spec.values.iter().zip(&curve).map(|(v, c)| format!("{v}x {c:.5}")).collect();
    let detail = format!(
        "{}; first doubling +{first:.5}, last +{last:.5}; failed cells {failures}",
        points.join(", ")
    );
    timed(Duration::from_secs(300), t0, failures == 0 && monotone && last < first, detail)
}

/// Independent recount in u128: walk the shape through each conv layer
/// and add 2 A L C kw kh per output pixel.
fn oracle_chain(mut shape: (u128, u128, u128, u128), chain: &[ConvLayer]) -> (u128, (u128, u128, u128, u128)) {
    let mut flops = 0u128;
    for layer in chain {
        let (a, w, h, c) = shape;
        let (kw, kh) = (layer.kernel_w as u128, layer.kernel_h as u128);
        let (ow, oh) = (w + 1 - kw, h + 1 - kh);
        let per_pixel = 2 * a * layer.filters as u128 * c * kw * kh;
        let mut layer_total = 0u128;
        for _ in 0..ow * oh {
            layer_total += per_pixel;
        }
        flops += layer_total;
        shape = (a, ow, oh, c);
    }
    (flops, shape)
}

fn oracle_head(shape: (u128, u128, u128, u128), head: &FcHead) -> u128 {
    let (a, w, h, c) = shape;
    a * c * w * h * head.first_outputs as u128
        + head.extra.iter().map(|l| l.inputs as u128 * l.outputs as u128).sum::<u128>()
}

fn oracle_costs(input: FeatureShape, exit: usize, arch: &ArchitectureDescriptor) -> (u128, u128, u128) {
    let shape = (input.maps as u128, input.width as u128, input.height as u128, input.channels as u128);
    let (rc, rs) = oracle_chain(shape, &arch.recognition_chains[exit]);
    let (ec, es) = oracle_chain(shape, &arch.extraction_chain);
    let (cc, cs) = oracle_chain(es, &arch.reconstruction_chain);
    (rc + oracle_head(rs, &arch.recognition_fc), ec, cc + oracle_head(cs, &arch.reconstruction_fc))
}

// 8
fn cost_model() -> (bool, String) {
    let tiny = FeatureShape::new(1, 4, 4, 1);
    let one3 = vec![ConvLayer::new(1, 3, 3)];
    let hand_arch = ArchitectureDescriptor {
        recognition_chains: vec![one3.clone()],
        recognition_fc: FcHead { first_outputs: 10, extra: vec![] },
        extraction_chain: one3.clone(),
        reconstruction_chain: vec![],
        reconstruction_fc: FcHead { first_outputs: 10, extra: vec![] },
    };
    let hand = [
        semoff_core::nn_cost::conv_chain_flops("check", tiny, &one3).unwrap().0.total_flops,
        recognition_flops(tiny, 0, &hand_arch).unwrap().total_flops,
        extraction_flops(tiny, &hand_arch).unwrap().total_flops,
        reconstruction_flops(tiny, &hand_arch).unwrap().total_flops,
    ];
    let hand_ok = hand == [72, 112, 72, 40];

    let (mut tasks, mut mismatches, mut non_monotone) = (0, 0, 0);
    for seed in 0..SEEDS {
        let s = generate_scenario(&ScenarioConfig::default(), seed).unwrap();
        for task in &s.tasks {
            tasks += 1;
            let by_exit: Vec<u64> = (0..s.arch.num_exits())
                .map(|m| TaskCosts::evaluate(task.shape, m, &s.arch).unwrap().recognition)
                .collect();
            non_monotone += usize::from(!by_exit.windows(2).all(|w| w[0] <= w[1]));
            let (r, e, c) = oracle_costs(task.shape, task.exit_point, &s.arch);
            let got = (task.costs.recognition as u128, task.costs.extraction as u128, task.costs.reconstruction as u128);
            mismatches += usize::from(got != (r, e, c));
        }
    }
    let detail = format!(
        "hand examples {:?} (want [72, 112, 72, 40]); {tasks} generated tasks, {mismatches} oracle mismatches, {non_monotone} non-monotone exits",
        hand
    );
    (hand_ok && mismatches == 0 && non_monotone == 0, detail)
}

// 9
fn determinism() -> (bool, String) {
    let spec = SweepSpec {
        axis: Axis::Bandwidth,
        values: vec![0.5, 2.0],
        replications: 3,
        algorithms: Algorithm::ALL.to_vec(),
    };
    let csv = |jobs| {
        let rows = run_sweep(&spec, &Config::default(), Some(jobs)).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf, false).unwrap();
        buf
    };
    let (a, b) = (csv(1), csv(4));
    (a == b, format!("{} bytes, {} lines, identical {}", a.len(), a.split(|&c| c == b'\n').count() - 1, a == b))
}

fn main() {
    let checks: [(usize, &str, fn() -> (bool, String)); 9] = [
        (1, "descent", descent),
        (2, "stability certificates", stability),
        (3, "capacity solver oracle", capacity_solver),
        (4, "matching oracle", matching_oracle),
        (5, "benchmark ordering", ordering),
        (6, "exit-point effect", exit_points),
        (7, "capacity saturation", saturation),
        (8, "cost model", cost_model),
        (9, "sweep determinism", determinism),
    ];
    let mut outcomes = Vec::new();
    for (id, name, check) in checks {
        let (pass, detail) = check();
        println!("{} criterion {id} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
        outcomes.push(Outcome { id, pass, detail });
    }
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some();
    let failed: Vec<&Outcome> = outcomes.iter().filter(|o| !o.pass).collect();
    let unexpected: Vec<usize> = failed
        .iter()
        .filter(|o| strict || !KNOWN_RED.contains(&o.id))
        .map(|o| o.id)
        .collect();
    let known: Vec<usize> = failed.iter().map(|o| o.id).filter(|id| KNOWN_RED.contains(id)).collect();
    println!(
        "acceptance: {} of {} pass; known failures {:?}{}",
        outcomes.len() - failed.len(),
        outcomes.len(),
        known,
        if strict { " (strict mode)" } else { "" }
    );
    for o in &outcomes {
        if KNOWN_RED.contains(&o.id) && o.pass {
            println!("note: criterion {} listed as known failure but passed: {}", o.id, o.detail);
        }
    }
    if !unexpected.is_empty() {
        println!("acceptance failed: criteria {:?}", unexpected);
        std::process::exit(1);
    }
}
