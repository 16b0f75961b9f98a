//! Hand-built scenarios for unit tests.

use crate::nn_cost::{ArchitectureDescriptor, FcHead, FeatureShape, TaskCosts};
use crate::perf::Assignment;
use crate::scenario::{GlobalParams, Mec, Scenario, Task, Terminal};

/// `terminals x mecs` scenario with the given gains, one task per
/// terminal (16x16x1, 8 bits per element, no compute cost).
pub fn tiny_scenario<const K: usize>(terminals: usize, mecs: usize, subcarriers: usize, gains: &[[f64; K]]) -> Scenario {
    assert_eq!(K, mecs);
    assert_eq!(gains.len(), terminals);
    let params = GlobalParams {
        num_terminals: terminals,
        num_mec: mecs,
        num_subcarriers: subcarriers,
        ..GlobalParams::default()
    };
    let arch = ArchitectureDescriptor {
        recognition_chains: vec![vec![]],
        recognition_fc: FcHead::default(),
        extraction_chain: vec![],
        reconstruction_chain: vec![],
        reconstruction_fc: FcHead::default(),
    };
    let tasks = (0..terminals)
        .map(|id| Task {
            id,
            shape: FeatureShape::new(1, 16, 16, 1),
            data_bits: 8 * 256,
            compression_ratio: 1.0,
            deadline: 1.0,
            priority: 1,
            exit_point: 0,
            costs: TaskCosts {
                recognition: 0,
                extraction: 0,
                reconstruction: 0,
            },
        })
        .collect();
    let terminals_v = (0..terminals)
        .map(|u| Terminal {
            position: [u as f64, 0.0],
            local_capacity: params.local_capacity,
            task: u,
        })
        .collect();
    let mecs_v = (0..mecs)
        .map(|k| Mec {
            position: [k as f64 * 100.0, 50.0],
            capacity: params.edge_capacity,
        })
        .collect();
    Scenario {
        arch,
        bits_per_element: 8,
        side_bounds: (16, 16),
        tasks,
        terminals: terminals_v,
        mecs: mecs_v,
        gain: gains.iter().map(|row| row.to_vec()).collect(),
        clamped_links: vec![],
        seed: 0,
        params,
    }
}

/// Overrides the task of terminal `u` with raw figures.
pub fn set_task(s: &mut Scenario, u: usize, bits: f64, ratio: f64, recognition: f64, priority: u32) {
    let i = s.terminals[u].task;
    let task = &mut s.tasks[i];
    task.data_bits = bits as u64;
    task.compression_ratio = ratio;
    task.costs.recognition = recognition as u64;
    task.priority = priority;
}

/// Terminal `u` on MEC `u % K`, subcarriers dealt round-robin inside each
/// cell, capacity split evenly.
pub fn round_robin_assignment(s: &Scenario) -> Assignment {
    let (terminals, mecs, subcarriers) = (s.num_terminals(), s.num_mecs(), s.num_subcarriers());
    let mut a = Assignment::empty(terminals, mecs, subcarriers);
    for u in 0..terminals {
        a.associate(u, u % mecs);
    }
    for k in 0..mecs {
        let members = a.members(k);
        if members.is_empty() {
            continue;
        }
        for n in 0..subcarriers {
            a.subcarriers[members[n % members.len()]][k][n] = true;
        }
        for &u in &members {
            a.capacity[u] = s.mecs[k].capacity / members.len() as f64;
        }
    }
    a
}
