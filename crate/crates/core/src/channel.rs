//! Path loss, shadowing and uplink SINR / rate.
//!
//! Every BS reuses the same `N` subcarriers, so a subcarrier index `n` is
//! shared by all cells: the terminal occupying `(k, n)` hears the occupants
//! of `(c, n)` for every other cell `c` as interference, through their
//! cross-gain towards BS `k`.

use crate::error::{Error, Result};
use crate::perf::Assignment;
use crate::scenario::Scenario;

pub const MIN_DISTANCE_M: f64 = 1.0;

/// `42.6 + 26 log10(d) + 20 log10(f)` with `d` in km and `f` in MHz.
pub fn pathloss_db(distance_km: f64, carrier_mhz: f64) -> Result<f64> {
    if !(distance_km > 0.0 && carrier_mhz > 0.0) {
        return Err(Error::Domain(format!(
            "path loss needs positive distance and frequency, got d = {distance_km} km, f = {carrier_mhz} MHz"
        )));
    }
    Ok(42.6 + 26.0 * distance_km.log10() + 20.0 * carrier_mhz.log10())
}

/// Linear gain of a link with total attenuation `loss_db`.
pub fn db_to_gain(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    pub gain: f64,
    pub pathloss_db: f64,
    pub distance_km: f64,
    /// Distance was below [`MIN_DISTANCE_M`] and got clamped.
    pub clamped: bool,
}

pub fn link_gain(terminal: [f64; 2], mec: [f64; 2], carrier_mhz: f64, shadowing_db: f64) -> Result<LinkGain> {
    let d = ((terminal[0] - mec[0]).powi(2) + (terminal[1] - mec[1]).powi(2)).sqrt();
    let clamped = d < MIN_DISTANCE_M;
    let distance_km = d.max(MIN_DISTANCE_M) / 1000.0;
    let pathloss_db = pathloss_db(distance_km, carrier_mhz)?;
    Ok(LinkGain {
        gain: db_to_gain(pathloss_db + shadowing_db),
        pathloss_db,
        distance_km,
        clamped,
    })
}

pub fn sinr_value(signal: f64, interference: f64, noise: f64) -> f64 {
    signal / (interference + noise)
}

/// Shannon rate in bit/s.
pub fn shannon_rate(bandwidth: f64, sinr: f64) -> f64 {
    bandwidth * (1.0 + sinr).log2()
}

/// SINR at BS `k` of terminal `u` on a subcarrier whose occupants in every
/// cell are `column[c]`. Interference is summed in ascending cell order.
pub fn column_sinr(scenario: &Scenario, u: usize, k: usize, column: &[Option<usize>]) -> f64 {
    let p = &scenario.params;
    let mut interference = 0.0;
    for (c, occupant) in column.iter().enumerate() {
        if c == k {
            continue;
        }
        if let Some(v) = occupant {
            interference += p.tx_power * scenario.gain[*v][k];
        }
    }
    sinr_value(p.tx_power * scenario.gain[u][k], interference, p.noise_power())
}

/// Rate delivered by `(k, n)` to its occupant, zero for a hole.
pub fn column_rate(scenario: &Scenario, k: usize, column: &[Option<usize>]) -> f64 {
    match column[k] {
        Some(u) => shannon_rate(
            scenario.params.subcarrier_bandwidth,
            column_sinr(scenario, u, k, column),
        ),
        None => 0.0,
    }
}

/// SINR of terminal `u` towards BS `k` on subcarrier `n` under `assignment`.
pub fn sinr(u: usize, k: usize, n: usize, assignment: &Assignment, scenario: &Scenario) -> f64 {
    let p = &scenario.params;
    let mut interference = 0.0;
    for c in 0..scenario.num_mecs() {
        if c == k {
            continue;
        }
        for v in 0..scenario.num_terminals() {
            if assignment.subcarriers[v][c][n] {
                interference += p.tx_power * scenario.gain[v][k];
            }
        }
    }
    sinr_value(p.tx_power * scenario.gain[u][k], interference, p.noise_power())
}

/// Uplink rate of terminal `u`, bit/s. Zero when it holds no subcarrier.
pub fn uplink_rate(u: usize, assignment: &Assignment, scenario: &Scenario) -> f64 {
    let bandwidth = scenario.params.subcarrier_bandwidth;
    let mut rate = 0.0;
    for k in 0..scenario.num_mecs() {
        if !assignment.association[u][k] {
            continue;
        }
        for n in 0..scenario.num_subcarriers() {
            if assignment.subcarriers[u][k][n] {
                rate += shannon_rate(bandwidth, sinr(u, k, n, assignment, scenario));
            }
        }
    }
    rate
}
