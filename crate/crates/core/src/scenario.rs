//! Problem instances: global parameters, task table, network geometry and
//! link gains.
//!
//! A [`Scenario`] is a deterministic function of its [`ScenarioConfig`] and a
//! 64-bit seed. Each random component (architecture kernels, task table,
//! terminal placement, shadowing) draws from its own ChaCha stream, so
//! changing the number of terminals keeps the task table and the first
//! terminals unchanged.

use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::channel;
use crate::error::{config_err, Result};
pub use crate::nn_cost::{ArchitectureDescriptor, ConvLayer, FcHead, FcLayer, FeatureShape, TaskCosts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalParams {
    pub num_terminals: usize,
    pub num_mec: usize,
    pub num_subcarriers: usize,
    /// Hz per subcarrier.
    pub subcarrier_bandwidth: f64,
    /// W per subcarrier.
    pub tx_power: f64,
    /// W/Hz.
    pub noise_psd: f64,
    /// MHz.
    pub carrier_freq: f64,
    /// cycles/s per MEC server.
    pub edge_capacity: f64,
    /// cycles/s per terminal.
    pub local_capacity: f64,
    pub flops_per_cycle: f64,
    pub reward_c1: f64,
    pub reward_c2: f64,
    /// Side of the square deployment area, m.
    pub area_side: f64,
    /// Log-normal shadowing standard deviation, dB.
    pub shadowing_std: f64,
}

impl Default for GlobalParams {
    fn default() -> Self {
        Self {
            num_terminals: 20,
            num_mec: 4,
            num_subcarriers: 32,
            subcarrier_bandwidth: 1e6,
            tx_power: 0.1,
            // -174 dBm/Hz
            noise_psd: 10f64.powf(-17.4) * 1e-3,
            carrier_freq: 2400.0,
            edge_capacity: 2048.0 * 0.96e9,
            local_capacity: 256.0 * 0.96e9,
            flops_per_cycle: 8.0,
            reward_c1: 1.0,
            reward_c2: 0.0,
            area_side: 500.0,
            shadowing_std: 8.0,
        }
    }
}

impl GlobalParams {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for (name, count) in [
            ("num_terminals", self.num_terminals),
            ("num_mec", self.num_mec),
            ("num_subcarriers", self.num_subcarriers),
        ] {
            if count < 1 {
                out.push((name, "must be at least 1".to_string()));
            }
        }
        for (name, value) in [
            ("subcarrier_bandwidth", self.subcarrier_bandwidth),
            ("tx_power", self.tx_power),
            ("noise_psd", self.noise_psd),
            ("carrier_freq", self.carrier_freq),
            ("edge_capacity", self.edge_capacity),
            ("local_capacity", self.local_capacity),
            ("flops_per_cycle", self.flops_per_cycle),
            ("reward_c1", self.reward_c1),
            ("area_side", self.area_side),
        ] {
            if !(value.is_finite() && value > 0.0) {
                out.push((name, format!("must be finite and > 0, got {value}")));
            }
        }
        if !self.reward_c2.is_finite() {
            out.push(("reward_c2", "must be finite".to_string()));
        }
        if !(self.shadowing_std.is_finite() && self.shadowing_std >= 0.0) {
            out.push(("shadowing_std", "must be finite and >= 0".to_string()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some((field, reason)) => Err(config_err(field, reason)),
            None => Ok(()),
        }
    }

    /// Noise power over one subcarrier, W.
    pub fn noise_power(&self) -> f64 {
        self.subcarrier_bandwidth * self.noise_psd
    }
}

/// Distribution ranges of the generated task table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskRanges {
    pub num_task_types: usize,
    pub side_min: u32,
    pub side_max: u32,
    /// Square feature maps (`H = W`); otherwise both sides are drawn.
    pub square: bool,
    pub maps: u32,
    pub channels: u32,
    pub bits_per_element: u32,
    /// Compression ratios are drawn from `(1, ratio_max]`.
    pub ratio_max: f64,
    pub deadline_min: f64,
    pub deadline_max: f64,
    /// Priorities are drawn from `1..=priority_max`.
    pub priority_max: u32,
}

impl Default for TaskRanges {
    fn default() -> Self {
        Self {
            num_task_types: 15,
            side_min: 224,
            side_max: 448,
            square: true,
            maps: 1,
            channels: 3,
            bits_per_element: 8,
            ratio_max: 5.0,
            deadline_min: 0.5,
            deadline_max: 1.0,
            priority_max: 5,
        }
    }
}

impl TaskRanges {
    pub fn validate(&self) -> Result<()> {
        if self.num_task_types < 1 {
            return Err(config_err("tasks.num_task_types", "must be at least 1"));
        }
        if self.side_min < 1 || self.side_min > self.side_max {
            return Err(config_err("tasks.side_min", "must satisfy 1 <= side_min <= side_max"));
        }
        if self.maps < 1 {
            return Err(config_err("tasks.maps", "must be at least 1"));
        }
        if self.channels < 1 {
            return Err(config_err("tasks.channels", "must be at least 1"));
        }
        if self.bits_per_element < 1 {
            return Err(config_err("tasks.bits_per_element", "must be at least 1"));
        }
        if !(self.ratio_max.is_finite() && self.ratio_max > 1.0) {
            return Err(config_err("tasks.ratio_max", "must be finite and > 1"));
        }
        if !(self.deadline_min > 0.0 && self.deadline_min <= self.deadline_max && self.deadline_max.is_finite()) {
            return Err(config_err(
                "tasks.deadline_min",
                "must satisfy 0 < deadline_min <= deadline_max",
            ));
        }
        if self.priority_max < 1 {
            return Err(config_err("tasks.priority_max", "must be at least 1"));
        }
        Ok(())
    }
}

/// How the shared CNN architecture is built for a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureSpec {
    pub filters: u32,
    /// Square kernel sides, one drawn uniformly per layer.
    pub kernel_choices: Vec<u32>,
    pub extraction_layers: usize,
    pub reconstruction_layers: usize,
    /// Conv depth in front of each exit point, strictly increasing.
    pub exit_depths: Vec<usize>,
    pub recognition_fc: FcHead,
    pub reconstruction_fc: FcHead,
    /// Explicit descriptor; when present the fields above are ignored.
    pub descriptor: Option<ArchitectureDescriptor>,
}

impl Default for ArchitectureSpec {
    fn default() -> Self {
        let head = FcHead {
            first_outputs: 128,
            extra: vec![FcLayer {
                inputs: 128,
                outputs: 10,
            }],
        };
        Self {
            filters: 96,
            kernel_choices: vec![3, 5],
            extraction_layers: 4,
            reconstruction_layers: 1,
            exit_depths: vec![3, 4, 5],
            recognition_fc: head.clone(),
            reconstruction_fc: head,
            descriptor: None,
        }
    }
}

impl ArchitectureSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = &self.descriptor {
            return match d.violations().into_iter().next() {
                Some(v) => Err(config_err("architecture.descriptor", v)),
                None => Ok(()),
            };
        }
        if self.kernel_choices.is_empty() || self.kernel_choices.contains(&0) {
            return Err(config_err("architecture.kernel_choices", "must be nonempty with sides >= 1"));
        }
        if self.exit_depths.is_empty() || self.exit_depths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("architecture.exit_depths", "must be nonempty and strictly increasing"));
        }
        Ok(())
    }

    fn build(&self, rng: &mut ChaCha8Rng) -> ArchitectureDescriptor {
        if let Some(d) = &self.descriptor {
            return d.clone();
        }
        let pick = Uniform::new(0, self.kernel_choices.len());
        let layers = |n: usize, rng: &mut ChaCha8Rng| -> Vec<ConvLayer> {
            (0..n)
                .map(|_| {
                    let k = self.kernel_choices[rng.sample(pick)];
                    ConvLayer::new(self.filters, k, k)
                })
                .collect()
        };
        let depth = self.exit_depths.last().copied().unwrap_or(0);
        let base = layers(depth, rng);
        let extraction_chain = layers(self.extraction_layers, rng);
        let reconstruction_chain = layers(self.reconstruction_layers, rng);
        ArchitectureDescriptor {
            recognition_chains: self.exit_depths.iter().map(|&d| base[..d].to_vec()).collect(),
            recognition_fc: self.recognition_fc.clone(),
            extraction_chain,
            reconstruction_chain,
            reconstruction_fc: self.reconstruction_fc.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub params: GlobalParams,
    pub tasks: TaskRanges,
    pub architecture: ArchitectureSpec,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.tasks.validate()?;
        self.architecture.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    pub shape: FeatureShape,
    pub data_bits: u64,
    pub compression_ratio: f64,
    pub deadline: f64,
    pub priority: u32,
    pub exit_point: usize,
    pub costs: TaskCosts,
}

impl Task {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: usize,
        shape: FeatureShape,
        bits_per_element: u32,
        compression_ratio: f64,
        deadline: f64,
        priority: u32,
        exit_point: usize,
        arch: &ArchitectureDescriptor,
    ) -> Result<Self> {
        Ok(Self {
            id,
            shape,
            data_bits: bits_per_element as u64 * shape.elements(),
            compression_ratio,
            deadline,
            priority,
            exit_point,
            costs: TaskCosts::evaluate(shape, exit_point, arch)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    /// m
    pub position: [f64; 2],
    pub local_capacity: f64,
    /// Index into [`Scenario::tasks`].
    pub task: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mec {
    pub position: [f64; 2],
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: GlobalParams,
    pub arch: ArchitectureDescriptor,
    pub bits_per_element: u32,
    pub side_bounds: (u32, u32),
    pub tasks: Vec<Task>,
    pub terminals: Vec<Terminal>,
    pub mecs: Vec<Mec>,
    /// Linear power gain `gain[u][k]`, frequency flat.
    pub gain: Vec<Vec<f64>>,
    /// Links whose distance was clamped to the 1 m minimum.
    pub clamped_links: Vec<(usize, usize)>,
    pub seed: u64,
}

const STREAM_ARCH: u64 = 1;
const STREAM_TASKS: u64 = 2;
const STREAM_TERMINALS: u64 = 3;
const STREAM_SHADOWING: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Centres of a `g x g` grid over the area, row-major, first `count` kept.
pub fn grid_positions(count: usize, side: f64) -> Vec<[f64; 2]> {
    let g = (count as f64).sqrt().ceil().max(1.0) as usize;
    let cell = side / g as f64;
    (0..count)
        .map(|i| {
            let (row, col) = (i / g, i % g);
            [cell * (row as f64 + 0.5), cell * (col as f64 + 0.5)]
        })
        .collect()
}

pub fn generate_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let p = &config.params;
    let t = &config.tasks;

    let arch = config.architecture.build(&mut stream(seed, STREAM_ARCH));

    let mut rng = stream(seed, STREAM_TASKS);
    let sides = Uniform::new_inclusive(t.side_min, t.side_max);
    let unit = Uniform::new(0.0f64, 1.0);
    let deadlines = Uniform::new_inclusive(t.deadline_min, t.deadline_max);
    let priorities = Uniform::new_inclusive(1, t.priority_max);
    let exits = Uniform::new(0, arch.num_exits());
    let mut tasks = Vec::with_capacity(t.num_task_types);
    for id in 0..t.num_task_types {
        let width = rng.sample(sides);
        let height = if t.square { width } else { rng.sample(sides) };
        // (1, ratio_max]: 1 - U maps [0, 1) onto (0, 1]
        let ratio = 1.0 + (t.ratio_max - 1.0) * (1.0 - rng.sample(unit));
        let deadline = rng.sample(deadlines);
        let priority = rng.sample(priorities);
        let exit = rng.sample(exits);
        let shape = FeatureShape::new(t.maps, width, height, t.channels);
        tasks.push(Task::new(id, shape, t.bits_per_element, ratio, deadline, priority, exit, &arch)?);
    }

    let mut rng = stream(seed, STREAM_TERMINALS);
    let coord = Uniform::new_inclusive(0.0, p.area_side);
    let task_pick = Uniform::new(0, tasks.len());
    let terminals: Vec<Terminal> = (0..p.num_terminals)
        .map(|_| {
            let position = [rng.sample(coord), rng.sample(coord)];
            Terminal {
                position,
                local_capacity: p.local_capacity,
                task: rng.sample(task_pick),
            }
        })
        .collect();

    let mecs: Vec<Mec> = grid_positions(p.num_mec, p.area_side)
        .into_iter()
        .map(|position| Mec {
            position,
            capacity: p.edge_capacity,
        })
        .collect();

    let mut rng = stream(seed, STREAM_SHADOWING);
    let shadowing = Normal::new(0.0, p.shadowing_std).map_err(|e| config_err("shadowing_std", e.to_string()))?;
    let mut gain = Vec::with_capacity(terminals.len());
    let mut clamped_links = Vec::new();
    for (u, term) in terminals.iter().enumerate() {
        let mut row = Vec::with_capacity(mecs.len());
        for (k, mec) in mecs.iter().enumerate() {
            let draw: f64 = rng.sample(shadowing);
            let link = channel::link_gain(term.position, mec.position, p.carrier_freq, draw)?;
            if link.clamped {
                log::warn!("terminal {u} coincides with MEC {k}; distance clamped to 1 m");
                clamped_links.push((u, k));
            }
            row.push(link.gain);
        }
        gain.push(row);
    }

    Ok(Scenario {
        params: p.clone(),
        arch,
        bits_per_element: t.bits_per_element,
        side_bounds: (t.side_min, t.side_max),
        tasks,
        terminals,
        mecs,
        gain,
        clamped_links,
        seed,
    })
}

impl Scenario {
    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn num_mecs(&self) -> usize {
        self.mecs.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.params.num_subcarriers
    }

    pub fn task_of(&self, u: usize) -> &Task {
        &self.tasks[self.terminals[u].task]
    }

    pub fn distance(&self, u: usize, k: usize) -> f64 {
        let (a, b) = (self.terminals[u].position, self.mecs[k].position);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    /// Deterministic text form; floats are written in shortest round-trip
    /// notation.
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Keeps only the `count` deepest exit points; every task moves to the
    /// shallowest retained exit at or after its own. `count = 1` disables
    /// early exit.
    pub fn with_exit_points(&self, count: usize) -> Result<Scenario> {
        let total = self.arch.num_exits();
        if count < 1 || count > total {
            return Err(config_err("exit_points", format!("must be in 1..={total}, got {count}")));
        }
        let first_kept = total - count;
        let mut out = self.clone();
        for task in &mut out.tasks {
            task.exit_point = task.exit_point.max(first_kept);
            task.costs = TaskCosts::evaluate(task.shape, task.exit_point, &out.arch)?;
        }
        Ok(out)
    }

    /// Scales every compression ratio, clamped to at least 1.
    pub fn with_compression_scale(&self, scale: f64) -> Result<Scenario> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(config_err("compression_scale", format!("must be finite and > 0, got {scale}")));
        }
        let mut out = self.clone();
        for task in &mut out.tasks {
            task.compression_ratio = (task.compression_ratio * scale).max(1.0);
        }
        Ok(out)
    }
}

/// Lists every violated invariant; empty means valid.
pub fn validate_scenario(s: &Scenario) -> Vec<String> {
    let mut out: Vec<String> = s
        .params
        .violations()
        .into_iter()
        .map(|(f, r)| format!("params.{f} {r}"))
        .collect();
    out.extend(s.arch.violations());

    if s.terminals.len() != s.params.num_terminals {
        out.push(format!(
            "{} terminals but num_terminals = {}",
            s.terminals.len(),
            s.params.num_terminals
        ));
    }
    if s.mecs.len() != s.params.num_mec {
        out.push(format!("{} MECs but num_mec = {}", s.mecs.len(), s.params.num_mec));
    }

    for task in &s.tasks {
        let i = task.id;
        if !(task.compression_ratio >= 1.0) {
            out.push(format!("task {i}: compression_ratio < 1 ({})", task.compression_ratio));
        }
        if !(task.deadline > 0.0) {
            out.push(format!("task {i}: deadline must be > 0"));
        }
        if task.priority < 1 {
            out.push(format!("task {i}: priority must be >= 1"));
        }
        if task.data_bits != s.bits_per_element as u64 * task.shape.elements() {
            out.push(format!("task {i}: data_bits disagrees with its shape"));
        }
        let (lo, hi) = s.side_bounds;
        for side in [task.shape.width, task.shape.height] {
            if side < lo || side > hi {
                out.push(format!("task {i}: side {side} outside [{lo}, {hi}]"));
            }
        }
        if task.exit_point >= s.arch.num_exits() {
            out.push(format!("task {i}: exit point {} out of range", task.exit_point));
        } else {
            match TaskCosts::evaluate(task.shape, task.exit_point, &s.arch) {
                Ok(c) if c == task.costs => {}
                Ok(_) => out.push(format!("task {i}: cached costs are stale")),
                Err(e) => out.push(format!("task {i}: {e}")),
            }
        }
    }

    for (u, term) in s.terminals.iter().enumerate() {
        if term.task >= s.tasks.len() {
            out.push(format!("terminal {u} maps to no task"));
        }
        if !(term.local_capacity > 0.0) {
            out.push(format!("terminal {u}: local capacity must be > 0"));
        }
    }
    for (k, mec) in s.mecs.iter().enumerate() {
        if !(mec.capacity > 0.0) {
            out.push(format!("MEC {k}: capacity must be > 0"));
        }
    }

    if s.gain.len() != s.terminals.len() || s.gain.iter().any(|row| row.len() != s.mecs.len()) {
        out.push("gain table does not match terminals x MECs".to_string());
    } else {
        for (u, row) in s.gain.iter().enumerate() {
            for (k, g) in row.iter().enumerate() {
                if !(g.is_finite() && *g > 0.0) {
                    out.push(format!("gain[{u}][{k}] must be finite and > 0"));
                }
            }
        }
    }
    out
}
