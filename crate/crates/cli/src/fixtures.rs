//! Scenario files bundled into the binary.

use std::path::Path;

use crate::scenario::{parse_scenario, LoadedScenario};

pub const PAPER_K4: &str = include_str!("../fixtures/paper_k4.toml");
pub const TWO_NODE: &str = include_str!("../fixtures/two_node.toml");
pub const PATH3: &str = include_str!("../fixtures/path3.toml");
pub const CONSENSUS_K4: &str = include_str!("../fixtures/consensus_k4.toml");
pub const PAPER_K4_NOISE: &str = include_str!("../fixtures/paper_k4_noise.toml");

pub const ALL: [(&str, &str); 5] = [
    ("paper_k4", PAPER_K4),
    ("paper_k4_noise", PAPER_K4_NOISE),
    ("two_node", TWO_NODE),
    ("path3", PATH3),
    ("consensus_k4", CONSENSUS_K4),
];

/// Parses a bundled fixture by name.
pub fn fixture(name: &str) -> Option<LoadedScenario> {
    let (_, text) = ALL.iter().find(|(n, _)| *n == name)?;
    Some(
        parse_scenario(text, &format!("<fixture {name}>"), Path::new("."))
            .expect("bundled fixtures are valid"),
    )
}

pub fn paper_k4() -> LoadedScenario {
    fixture("paper_k4").expect("bundled")
}
