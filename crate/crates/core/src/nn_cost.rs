//! FLOP-count cost model for the three CNN stages of a task.
//!
//! Every convolution runs with stride 1 and no padding, so a `k_w x k_h`
//! kernel shrinks a `W x H` input to `(W - k_w + 1) x (H - k_h + 1)`. A layer
//! with `L` filters on `A` maps of `C` channels costs
//! `2 * A * L * W_out * H_out * C * k_w * k_h` FLOP. The channel count `C` of
//! the task input is used in every layer of a chain, not the filter count of
//! the previous layer.
//!
//! Recognition and reconstruction add a fully connected head: the first FC
//! layer costs `A * C * W * H * k_out` on the last conv output, every further
//! FC layer costs `inputs * outputs`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureShape {
    pub maps: u32,
    pub width: u32,
    pub height: u32,
    pub channels: u32,
}

impl FeatureShape {
    pub fn new(maps: u32, width: u32, height: u32, channels: u32) -> Self {
        Self {
            maps,
            width,
            height,
            channels,
        }
    }

    pub fn elements(&self) -> u64 {
        self.maps as u64 * self.width as u64 * self.height as u64 * self.channels as u64
    }

    /// Output shape after one stride-1, unpadded convolution.
    pub fn convolved(&self, layer: &ConvLayer) -> Option<FeatureShape> {
        if layer.kernel_w == 0
            || layer.kernel_h == 0
            || self.width < layer.kernel_w
            || self.height < layer.kernel_h
        {
            return None;
        }
        Some(FeatureShape {
            width: self.width - layer.kernel_w + 1,
            height: self.height - layer.kernel_h + 1,
            ..*self
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub filters: u32,
    pub kernel_w: u32,
    pub kernel_h: u32,
}

impl ConvLayer {
    pub fn new(filters: u32, kernel_w: u32, kernel_h: u32) -> Self {
        Self {
            filters,
            kernel_w,
            kernel_h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcLayer {
    pub inputs: u64,
    pub outputs: u64,
}

/// Fully connected head: output width of the first layer plus the
/// remaining layers, whose cost does not depend on the input shape.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FcHead {
    pub first_outputs: u64,
    #[serde(default)]
    pub extra: Vec<FcLayer>,
}

impl FcHead {
    pub fn flops(&self, input: &FeatureShape) -> u64 {
        let first = input.maps as u64
            * input.channels as u64
            * input.width as u64
            * input.height as u64
            * self.first_outputs;
        first
            + self
                .extra
                .iter()
                .map(|l| l.inputs * l.outputs)
                .sum::<u64>()
    }
}

/// Layer structure shared by every task (one deployed model family).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureDescriptor {
    /// Conv chain in front of each exit point; exit `m + 1` extends exit `m`.
    pub recognition_chains: Vec<Vec<ConvLayer>>,
    pub recognition_fc: FcHead,
    pub extraction_chain: Vec<ConvLayer>,
    pub reconstruction_chain: Vec<ConvLayer>,
    pub reconstruction_fc: FcHead,
}

impl ArchitectureDescriptor {
    pub fn num_exits(&self) -> usize {
        self.recognition_chains.len()
    }

    pub fn deepest_exit(&self) -> usize {
        self.recognition_chains.len().saturating_sub(1)
    }

    /// Invariant violations, empty when the descriptor is well formed.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.recognition_chains.is_empty() {
            out.push("architecture has no recognition exit".to_string());
        }
        for (m, pair) in self.recognition_chains.windows(2).enumerate() {
            let (shallow, deep) = (&pair[0], &pair[1]);
            if deep.len() < shallow.len() || deep[..shallow.len()] != shallow[..] {
                out.push(format!(
                    "recognition chain of exit {} is not a prefix of exit {}",
                    m,
                    m + 1
                ));
            }
        }
        let chains = self
            .recognition_chains
            .iter()
            .flatten()
            .chain(&self.extraction_chain)
            .chain(&self.reconstruction_chain);
        if chains.into_iter().any(|l| l.kernel_w == 0 || l.kernel_h == 0) {
            out.push("kernel size < 1".to_string());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerTrace {
    pub input: FeatureShape,
    pub output: FeatureShape,
    pub flops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub conv_flops: u64,
    pub fc_flops: u64,
    pub total_flops: u64,
    pub layers: Vec<LayerTrace>,
}

/// Runs `input` through a conv chain, returning the per-layer cost trace and
/// the final shape.
pub fn conv_chain_flops(
    stage: &'static str,
    input: FeatureShape,
    chain: &[ConvLayer],
) -> Result<(CostBreakdown, FeatureShape)> {
    let mut shape = input;
    let mut layers = Vec::with_capacity(chain.len());
    for (index, layer) in chain.iter().enumerate() {
        let out = shape.convolved(layer).ok_or(Error::ShapeUnderflow {
            stage,
            layer: index,
            kernel_w: layer.kernel_w,
            kernel_h: layer.kernel_h,
            width: shape.width,
            height: shape.height,
        })?;
        let flops = 2
            * shape.maps as u64
            * layer.filters as u64
            * out.width as u64
            * out.height as u64
            * shape.channels as u64
            * layer.kernel_w as u64
            * layer.kernel_h as u64;
        layers.push(LayerTrace {
            input: shape,
            output: out,
            flops,
        });
        shape = out;
    }
    let conv_flops = layers.iter().map(|l| l.flops).sum();
    Ok((
        CostBreakdown {
            conv_flops,
            fc_flops: 0,
            total_flops: conv_flops,
            layers,
        },
        shape,
    ))
}

fn with_head(
    stage: &'static str,
    input: FeatureShape,
    chain: &[ConvLayer],
    head: &FcHead,
) -> Result<CostBreakdown> {
    let (mut cost, out) = conv_chain_flops(stage, input, chain)?;
    cost.fc_flops = head.flops(&out);
    cost.total_flops = cost.conv_flops + cost.fc_flops;
    Ok(cost)
}

/// Recognition cost `c_i` for an input of shape `input` leaving at `exit`.
pub fn recognition_flops(
    input: FeatureShape,
    exit: usize,
    arch: &ArchitectureDescriptor,
) -> Result<CostBreakdown> {
    let chain = arch
        .recognition_chains
        .get(exit)
        .ok_or(Error::ExitOutOfRange {
            exit,
            available: arch.num_exits(),
        })?;
    with_head("recognition", input, chain, &arch.recognition_fc)
}

/// Terminal-side semantic extraction and compression cost.
pub fn extraction_flops(input: FeatureShape, arch: &ArchitectureDescriptor) -> Result<CostBreakdown> {
    conv_chain_flops("extraction", input, &arch.extraction_chain).map(|(c, _)| c)
}

/// Edge-side reconstruction cost; takes the original task shape and starts
/// from its compressed shape.
pub fn reconstruction_flops(
    input: FeatureShape,
    arch: &ArchitectureDescriptor,
) -> Result<CostBreakdown> {
    let compressed = compressed_shape(input, arch)?;
    with_head(
        "reconstruction",
        compressed,
        &arch.reconstruction_chain,
        &arch.reconstruction_fc,
    )
}

pub fn compressed_shape(input: FeatureShape, arch: &ArchitectureDescriptor) -> Result<FeatureShape> {
    conv_chain_flops("extraction", input, &arch.extraction_chain).map(|(_, s)| s)
}

/// Reconstruction restores the transmitted task to its original shape, so
/// recognition sees the same input whether or not extraction ran.
pub fn reconstructed_shape(input: FeatureShape, arch: &ArchitectureDescriptor) -> Result<FeatureShape> {
    compressed_shape(input, arch)?;
    Ok(input)
}

/// Per-task FLOP totals of the three stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCosts {
    pub recognition: u64,
    pub extraction: u64,
    pub reconstruction: u64,
}

impl TaskCosts {
    pub fn evaluate(input: FeatureShape, exit: usize, arch: &ArchitectureDescriptor) -> Result<Self> {
        let recognition_input = reconstructed_shape(input, arch)?;
        Ok(Self {
            recognition: recognition_flops(recognition_input, exit, arch)?.total_flops,
            extraction: extraction_flops(input, arch)?.total_flops,
            reconstruction: reconstruction_flops(input, arch)?.total_flops,
        })
    }
}

/// Average computation density (FLOP per bit) of each exit group, from
/// `(exit, recognition_flops, data_bits)` samples.
///
/// Exits in `0..num_exits` without any sample are left out of the map.
pub fn linear_density(
    samples: impl IntoIterator<Item = (usize, f64, f64)>,
    num_exits: usize,
) -> BTreeMap<usize, f64> {
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (exit, flops, bits) in samples {
        let entry = sums.entry(exit).or_insert((0.0, 0));
        entry.0 += flops / bits;
        entry.1 += 1;
    }
    for exit in 0..num_exits {
        if !sums.contains_key(&exit) {
            log::warn!("exit point {exit} has no tasks; excluded from the linear model");
        }
    }
    sums.into_iter()
        .map(|(exit, (sum, n))| (exit, sum / n as f64))
        .collect()
}
