//! Example scenarios shipped with the crate.

use beds_core::Scenario;

pub const DISSIPATION_ONLY: &str = include_str!("../scenarios/dissipation_only.json");
pub const STEADY_STATE: &str = include_str!("../scenarios/steady_state.json");
pub const POWER_LAW: &str = include_str!("../scenarios/power_law.json");
pub const STATIC_CRYSTALLIZING: &str = include_str!("../scenarios/static_crystallizing.json");
pub const DRIFTING_TRACKING: &str = include_str!("../scenarios/drifting_tracking.json");
pub const TRACKING_SWEEP: &str = include_str!("../scenarios/tracking_sweep.json");

pub const ALL: [(&str, &str); 6] = [
    ("dissipation_only", DISSIPATION_ONLY),
    ("steady_state", STEADY_STATE),
    ("power_law", POWER_LAW),
    ("static_crystallizing", STATIC_CRYSTALLIZING),
    ("drifting_tracking", DRIFTING_TRACKING),
    ("tracking_sweep", TRACKING_SWEEP),
];

pub fn load(text: &str) -> Scenario {
    Scenario::from_json(text).expect("shipped scenario parses")
}
