//! Experiment config file.
//!
//! TOML with one optional section per consumer:
//!
//! ```toml
//! [geometry]            # read by `validate`
//! scheme = "genuine"
//! delta_l = 0.3
//! coherence_time = 1e-12
//! coincidence_window = 5e-10
//! dead_time = 1e-9
//! source_distance = 1000.0
//! switch_frequency = 3e5
//! pair_rate = 1e5
//!
//! [simulation]          # defaults for `simulate`; flags override
//! scheme = "franson"
//! source = "lhv"
//! p = 0.85
//! trials = 100000
//! seed = 1
//! ```
//!
//! Unknown keys and sections are errors. Phases are radians.

use serde::{Deserialize, Serialize};

use crate::config_validator::GeometryConfig;
use crate::error::{Error, Result};
use crate::postselect::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Qm,
    Lhv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub scheme: Option<Scheme>,
    pub source: Option<SourceKind>,
    pub phases: Option<[f64; 4]>,
    pub p: Option<f64>,
    pub model_file: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub setting_probs: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub geometry: Option<GeometryConfig>,
    pub simulation: Option<SimulationSection>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_sections() {
        let cfg = parse_config(
            r#"
[geometry]
scheme = "genuine"
delta_l = 0.3
coherence_time = 1e-12
coincidence_window = 5e-10
dead_time = 1e-9
source_distance = 1000.0
switch_frequency = 3e5
pair_rate = 1e5

[simulation]
scheme = "franson"
source = "lhv"
p = 1.0
trials = 10
"#,
        )
        .unwrap();
        assert_eq!(cfg.geometry.unwrap().scheme, Scheme::Genuine);
        let sim = cfg.simulation.unwrap();
        assert_eq!(sim.source, Some(SourceKind::Lhv));
        assert_eq!(sim.trials, Some(10));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(parse_config("[geometry]\nscheme = \"genuine\"\n").is_err());
        assert!(parse_config("[simulation]\nbogus = 1\n").is_err());
        assert!(parse_config("[other]\n").is_err());
        assert!(parse_config("[simulation]\nscheme = \"nope\"\n").is_err());
        assert!(parse_config("[simulation\n").is_err());
        assert_eq!(parse_config("").unwrap(), ConfigFile::default());
    }
}
