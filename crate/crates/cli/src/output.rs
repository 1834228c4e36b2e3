//! Structured output files written next to the CSVs.

use std::path::{Path, PathBuf};

use ris_atomic::sim::{PointSummary, SimConfig};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = concat!("ris-atomic ", env!("CARGO_PKG_VERSION"));

/// Everything needed to reproduce a BER run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: String,
    /// RFC 3339 / ISO-8601, UTC.
    pub timestamp: String,
    pub command: String,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub config: SimConfig,
    /// Trials used per Eb/N0 point and which bound ended it.
    #[serde(default)]
    pub points: Vec<PointSummary>,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Optimized RIS phases for one channel realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSolution {
    pub version: String,
    pub seed: u64,
    pub trial: u64,
    #[serde(rename = "M")]
    pub cells: usize,
    #[serde(rename = "N")]
    pub ris_elements: usize,
    #[serde(rename = "K")]
    pub users: usize,
    /// `J` at the start of the optimization.
    pub initial_objective: f64,
    /// `J(theta)` on the LO-referenced channels.
    pub objective: f64,
    pub gradient_evals: u64,
    /// Channel and LO realization the phases were optimized for.
    pub channels: String,
    pub theta: Vec<f64>,
}

impl PhaseSolution {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// `<out>` with its extension replaced, e.g. `ber.csv` → `ber.manifest.toml`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ris_atomic::sim::StopReason;

    #[test]
    fn manifest_round_trip() {
        let mut config = SimConfig::new(5, 0, 2, 8);
        config.campaign.eb_n0_db = vec![-3.25, 0.1, 1e-7];
        config.lo.hbar = Some(1.054_571_817e-34);
        config.adam.early_stop_grad_inf = Some(1e-9);
        let m = RunManifest {
            version: VERSION.into(),
            timestamp: "2026-01-02T03:04:05Z".into(),
            command: "ber".into(),
            threads: 4,
            outputs: vec!["a.csv".into(), "a.manifest.toml".into()],
            config,
            points: vec![PointSummary { eb_n0_db: 0.1, trials: 32, stop: StopReason::ErrorTarget }],
        };
        let text = m.to_toml();
        assert_eq!(RunManifest::from_toml(&text).unwrap(), m);
        assert_eq!(RunManifest::from_toml(&text).unwrap().to_toml(), text);
    }

    #[test]
    fn solution_round_trip_is_exact() {
        let s = PhaseSolution {
            version: VERSION.into(),
            seed: u64::MAX,
            trial: 3,
            cells: 2,
            ris_elements: 3,
            users: 1,
            initial_objective: 12.5,
            objective: 0.1 + 0.2,
            gradient_evals: 100,
            channels: "x.channels.txt".into(),
            theta: vec![0.0, std::f64::consts::PI, 6.283185307179585],
        };
        assert_eq!(PhaseSolution::from_toml(&s.to_toml()).unwrap(), s);
        let empty = PhaseSolution { theta: vec![], ..s };
        assert_eq!(PhaseSolution::from_toml(&empty.to_toml()).unwrap(), empty);
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("out/ber.csv"), "manifest.toml"), PathBuf::from("out/ber.manifest.toml"));
        assert_eq!(sibling(Path::new("theta"), "channels.txt"), PathBuf::from("theta.channels.txt"));
    }
}
