//! Experiment configuration.
//!
//! The file is a flat list of `key = value` lines (a TOML subset: numbers,
//! quoted strings, `#` comments; no tables). Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::ensemble::STEP_GUARD;
use crate::entropy::MIN_N_MAX;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Quasistatic,
    DynamicCycle,
    Quench,
    SweepSqueezing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub omega_c: f64,
    pub omega_h: f64,
    #[serde(rename = "T_c")]
    pub t_c: f64,
    #[serde(rename = "T_h")]
    pub t_h: f64,
    #[serde(default = "defaults::gamma")]
    pub gamma_c: f64,
    #[serde(default = "defaults::gamma")]
    pub gamma_h: f64,
    #[serde(default = "defaults::ramp_duration")]
    pub ramp_duration: f64,
    #[serde(default = "defaults::hold_duration")]
    pub hold_duration: f64,
    #[serde(default = "defaults::particles")]
    pub particles: usize,
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::n_max")]
    pub n_max: usize,
    #[serde(default = "defaults::cell_side")]
    pub cell_side: f64,
    #[serde(default = "defaults::output_prefix")]
    pub output_prefix: String,
    /// Full cycles to run; the last one is reported.
    #[serde(default = "defaults::cycles")]
    pub cycles: usize,
    /// Time between recorded snapshots.
    #[serde(default = "defaults::snapshot_interval")]
    pub snapshot_interval: f64,
}

mod defaults {
    pub fn gamma() -> f64 {
        1.0
    }
    pub fn ramp_duration() -> f64 {
        50.0
    }
    pub fn hold_duration() -> f64 {
        15.0
    }
    pub fn particles() -> usize {
        20_000
    }
    pub fn dt() -> f64 {
        0.005
    }
    pub fn seed() -> u64 {
        1
    }
    pub fn n_max() -> usize {
        crate::entropy::DEFAULT_N_MAX
    }
    pub fn cell_side() -> f64 {
        1.0
    }
    pub fn output_prefix() -> String {
        "otto".into()
    }
    pub fn cycles() -> usize {
        2
    }
    pub fn snapshot_interval() -> f64 {
        1.0
    }
}

fn invalid(key: &str, detail: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{key}`: {detail}"))
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format_args!("must be a finite number > 0, got {v}")))
    }
}

impl ExperimentConfig {
    /// Checks every invariant; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        positive("omega_c", self.omega_c)?;
        positive("omega_h", self.omega_h)?;
        if self.omega_h <= self.omega_c {
            return Err(invalid(
                "omega_h",
                format_args!("must exceed omega_c ({} <= {})", self.omega_h, self.omega_c),
            ));
        }
        positive("T_c", self.t_c)?;
        positive("T_h", self.t_h)?;
        for (key, g) in [("gamma_c", self.gamma_c), ("gamma_h", self.gamma_h)] {
            if self.mode == Mode::DynamicCycle {
                positive(key, g)?;
            } else if !(g >= 0.0 && g.is_finite()) {
                return Err(invalid(key, format_args!("must be >= 0, got {g}")));
            }
        }
        positive("ramp_duration", self.ramp_duration)?;
        positive("hold_duration", self.hold_duration)?;
        positive("dt", self.dt)?;
        positive("snapshot_interval", self.snapshot_interval)?;
        if self.particles == 0 {
            return Err(invalid("particles", "must be >= 1"));
        }
        if self.n_max < MIN_N_MAX {
            return Err(invalid("n_max", format_args!("must be >= {MIN_N_MAX}, got {}", self.n_max)));
        }
        if !(self.cell_side >= 1.0) || !self.cell_side.is_finite() {
            return Err(invalid("cell_side", format_args!("must be >= 1, got {}", self.cell_side)));
        }
        if self.cycles == 0 {
            return Err(invalid("cycles", "must be >= 1"));
        }
        if self.output_prefix.is_empty() {
            return Err(invalid("output_prefix", "must not be empty"));
        }
        let limit = STEP_GUARD * (1.0 + 1e-9);
        if self.mode != Mode::Quasistatic && self.mode != Mode::SweepSqueezing {
            if self.omega_h * self.dt > limit {
                return Err(invalid(
                    "dt",
                    format_args!("omega_h*dt = {} exceeds {STEP_GUARD}", self.omega_h * self.dt),
                ));
            }
            let gamma = self.gamma_c.max(self.gamma_h);
            if gamma * self.dt > limit {
                return Err(invalid(
                    "dt",
                    format_args!("gamma*dt = {} exceeds {STEP_GUARD}", gamma * self.dt),
                ));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    /// Steps between snapshots.
    pub fn observer_stride(&self) -> usize {
        ((self.snapshot_interval / self.dt).round() as usize).max(1)
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "mode = \"quasistatic\"\nomega_c = 1\nomega_h = 2.0\nT_c = 1.0\nT_h = 4.0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.mode, Mode::Quasistatic);
        assert_eq!(cfg.omega_c, 1.0);
        assert_eq!(cfg.gamma_c, 1.0);
        assert_eq!(cfg.particles, 20_000);
        assert_eq!(cfg.dt, 0.005);
        assert_eq!(cfg.n_max, 64);
        assert_eq!(cfg.cycles, 2);
        assert_eq!(cfg.output_prefix, "otto");
        assert_eq!(cfg.observer_stride(), 200);
    }

    #[test]
    fn round_trip() {
        let text = format!("{MINIMAL}# comment\nseed = 99\ncell_side = 1.5\noutput_prefix = \"out/run\"\n");
        let cfg = parse_config(&text).unwrap();
        let again = parse_config(&cfg.to_text()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.seed, 99);
    }

    fn err(text: &str) -> String {
        parse_config(text).unwrap_err().to_string()
    }

    #[test]
    fn errors_name_the_key() {
        assert!(err("mode = \"quasistatic\"\nomega_c = 1\nT_c = 1\nT_h = 4\n").contains("omega_h"));
        assert!(err(&format!("{MINIMAL}bogus = 3\n")).contains("bogus"));
        assert!(err(&MINIMAL.replace("omega_h = 2.0", "omega_h = 0.5")).contains("omega_h"));
        assert!(err(&MINIMAL.replace("T_c = 1.0", "T_c = \"cold\"")).contains("T_c"));
        assert!(err(&MINIMAL.replace("quasistatic", "warp")).contains("mode"));
        assert!(err(&format!("{MINIMAL}n_max = 8\n")).contains("n_max"));
        assert!(err(&format!("{MINIMAL}cell_side = 0.5\n")).contains("cell_side"));
        let dynamic = MINIMAL.replace("quasistatic", "dynamic_cycle");
        assert!(err(&format!("{dynamic}dt = 0.1\n")).contains("dt"));
        assert!(err(&format!("{dynamic}gamma_h = 0\n")).contains("gamma_h"));
        assert!(err(&format!("{dynamic}ramp_duration = -1\n")).contains("ramp_duration"));
    }
}
