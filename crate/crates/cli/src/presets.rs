//! Descriptions compiled into the binary.

pub const NAMES: [&str; 6] = [
    "consensus-drift",
    "alpha-beta",
    "asymmetric",
    "asymmetric-controller",
    "cancellation-static",
    "disconnected",
];

/// JSON text of a preset.
pub fn get(name: &str) -> Option<&'static str> {
    Some(match name {
        "consensus-drift" => include_str!("../presets/consensus-drift.json"),
        "alpha-beta" => include_str!("../presets/alpha-beta.json"),
        "asymmetric" => include_str!("../presets/asymmetric.json"),
        "asymmetric-controller" => include_str!("../presets/asymmetric-controller.json"),
        "cancellation-static" => include_str!("../presets/cancellation-static.json"),
        "disconnected" => include_str!("../presets/disconnected.json"),
        _ => return None,
    })
}
