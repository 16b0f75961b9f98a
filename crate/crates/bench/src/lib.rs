//! Fixtures shared by the benchmarks.

use semoff_core::matching::{nearest_association, round_robin_subcarriers};
use semoff_core::{generate_scenario, NetworkState, Scenario, ScenarioConfig};

pub fn scenario_with(terminals: usize, seed: u64) -> Scenario {
    let mut cfg = ScenarioConfig::default();
    cfg.params.num_terminals = terminals;
    generate_scenario(&cfg, seed).expect("default-derived scenario is valid")
}

/// Nearest-MEC association, round-robin subcarriers, uniform capacity.
pub fn starting_state(s: &Scenario) -> NetworkState {
    let mut st = NetworkState::new(s.num_terminals(), s.num_mecs(), s.num_subcarriers());
    st.serving = nearest_association(s).expect("loads fit");
    round_robin_subcarriers(&mut st);
    for k in 0..s.num_mecs() {
        let members = st.members(k);
        for &u in &members {
            st.capacity[u] = s.mecs[k].capacity / members.len() as f64;
        }
    }
    st
}
