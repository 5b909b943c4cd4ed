//! Run configuration files.
//!
//! A config is TOML with a required `[protocol]` table (a [`Scenario`]), an
//! optional `[sweep]` table and an optional `[output]` table. Unknown keys
//! anywhere are rejected.
//!
//! ```toml
//! [protocol]
//! total_users = 12
//! # mu = 1e4            # omit to optimize the modulation
//! tau = 1.0
//! xi = 1.0
//! relay = "joint"       # or "switch"
//!
//! [[protocol.groups]]
//! share = 0.5
//! distance_km = 170.0
//!
//! [[protocol.groups]]   # no size given: takes the remaining users
//! distance_km = 0.0
//!
//! [sweep]
//! axis = "groups[0].distance_km"
//! from = 0.0
//! to = 200.0
//! points = 200
//!
//! [output]
//! path = "fig3.csv"
//! plob = true
//! ```

use std::path::{Path, PathBuf};

use qss_core::schemes::{Scenario, SweepSpec};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub plob: bool,
}

impl OutputSection {
    fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "OutputSection::is_default")]
    pub output: OutputSection,
}

impl RunConfig {
    /// Parses and checks a config. Parse errors carry the TOML line and column.
    pub fn parse(text: &str, origin: &str) -> Result<Self, Failure> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Failure::Validation(format!("{origin}: {e}")))?;
        cfg.check().map_err(|e| Failure::Validation(format!("{origin}: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn check(&self) -> qss_core::Result<()> {
        self.protocol.to_config()?;
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        Ok(())
    }

    /// The parameters that determine the numbers, as canonical TOML.
    /// Output settings are left out so the echo only changes with the physics.
    pub fn echo(&self) -> String {
        let canonical = RunConfig { output: OutputSection::default(), ..self.clone() };
        toml::to_string(&canonical).expect("config always serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[protocol]
total_users = 4

[[protocol.groups]]
share = 0.5
distance_km = 5.0

[[protocol.groups]]
distance_km = 0.1

[sweep]
axis = "xi"
from = 1.0
to = 0.9
points = 2
"#;

    #[test]
    fn echo_round_trips() {
        let cfg = RunConfig::parse(SAMPLE, "sample").unwrap();
        let echo = cfg.echo();
        assert_eq!(RunConfig::parse(&echo, "echo").unwrap().echo(), echo);
    }

    #[test]
    fn unknown_key_names_line() {
        let bad = SAMPLE.replace("points = 2", "points = 2\nstep = 3");
        let Failure::Validation(msg) = RunConfig::parse(&bad, "bad").unwrap_err() else { panic!() };
        assert!(msg.contains("line 17") && msg.contains("step"), "{msg}");
    }

    #[test]
    fn semantic_errors_are_validation() {
        let bad = SAMPLE.replace("share = 0.5", "share = 1.5");
        assert!(matches!(RunConfig::parse(&bad, "bad"), Err(Failure::Validation(_))));
    }
}
