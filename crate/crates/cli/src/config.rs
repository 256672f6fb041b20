//! Run configuration, read from a TOML file.
//!
//! ```toml
//! [network]
//! mass = 1.0
//! hooke = [1.0, 0.2, 10.0, 1.0]   # outer oscillators first, hub last
//! couplings = [1.0, 1.0, 1.0]
//!
//! [dissipation]                    # optional, defaults to a closed system
//! gamma0 = 1.0
//! temperature = 0.0
//! # gamma_plus = 0.8               # optional per-mode overrides
//! # gamma_minus = 0.2
//!
//! [initial_state]                  # evolve / oracle
//! frame = "physical"               # or "normal"
//! modes = [{ kind = "coherent", re = 1.0 }, { kind = "vacuum" }, { kind = "thermal", nbar = 0.5 }, { kind = "vacuum" }]
//!
//! [time]                           # evolve / oracle
//! t_max = 100.0
//! samples = 4001
//! window = 0.25                    # late fraction used for sync metrics
//! observables = ["x_1", "x_2"]     # optional, defaults to every x_l
//!
//! [sweep]                          # sweep
//! g_min = 1.0
//! g_max = 100.0
//! steps = 50
//! offsets = [0.9, 1.0, 1.1]
//! spacing = "log"                  # or "linear"
//! fit_min_g = 20.0                 # optional lower end of the scaling fit
//!
//! [oracle]                         # oracle
//! cutoff = 8
//! max_dim = 10000
//!
//! [dynamics]
//! basis = "perturbative"           # or "exact"
//!
//! [output]
//! directory = "out"
//! formats = ["csv", "json"]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use starsync::dynamics::{Frame, Preparation};
use starsync::sweep::{Spacing, SweepSpec};
use starsync::NetworkParams;

use crate::report::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkSection,
    #[serde(default)]
    pub dissipation: DissipationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub mass: f64,
    pub hooke: Vec<f64>,
    pub couplings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationSection {
    #[serde(default)]
    pub gamma0: f64,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_minus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub frame: Frame,
    /// One preparation per oscillator (physical frame) or per mode in
    /// `(plus, minus, zero_1, ..)` order (normal frame).
    pub modes: Vec<Preparation>,
}

fn default_window() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_max: f64,
    pub samples: usize,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default)]
    pub observables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub g_min: f64,
    pub g_max: f64,
    pub steps: usize,
    pub offsets: Vec<f64>,
    #[serde(default)]
    pub spacing: Spacing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_min_g: Option<f64>,
}

impl SweepSection {
    pub fn spec(&self) -> SweepSpec {
        SweepSpec {
            g_min: self.g_min,
            g_max: self.g_max,
            steps: self.steps,
            offsets: self.offsets.clone(),
            spacing: self.spacing,
        }
    }
}

fn default_max_dim() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub cutoff: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Closed-form modes with first-order corrections.
    #[default]
    Perturbative,
    /// Exact eigenvectors, labelled by overlap with the perturbative ones.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default)]
    pub basis: Basis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn default_directory() -> String {
    "starsync-out".into()
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

/// Prefix a library field name with its config section.
fn in_section(section: &str, e: starsync::Error) -> Failure {
    match e {
        starsync::Error::Parameter { field, reason } => {
            let field = match field.as_str() {
                "bath_rate" => "dissipation.gamma0".to_string(),
                "bath_temp" => "dissipation.temperature".to_string(),
                f if f.contains('.') => f.to_string(),
                f => format!("{section}.{f}"),
            };
            Failure::Core(starsync::Error::Parameter { field, reason })
        }
        other => Failure::Core(other),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Failure::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        self.network_params()?;
        for (name, rate) in [("gamma_plus", self.dissipation.gamma_plus), ("gamma_minus", self.dissipation.gamma_minus)] {
            if let Some(r) = rate {
                if !(r.is_finite() && r >= 0.0) {
                    return Err(param(format!("dissipation.{name}"), format!("must be >= 0, got {r}")));
                }
            }
        }
        if let Some(t) = &self.time {
            if !(t.t_max.is_finite() && t.t_max > 0.0) {
                return Err(param("time.t_max", format!("must be > 0, got {}", t.t_max)));
            }
            if t.samples < 2 {
                return Err(param("time.samples", "need at least two samples"));
            }
            if !(t.window > 0.0 && t.window <= 1.0) {
                return Err(param("time.window", format!("must lie in (0, 1], got {}", t.window)));
            }
        }
        if let Some(s) = &self.initial_state {
            if s.modes.len() != self.network.hooke.len() {
                return Err(param(
                    "initial_state.modes",
                    format!("expected {} entries, got {}", self.network.hooke.len(), s.modes.len()),
                ));
            }
        }
        if let Some(o) = &self.oracle {
            if o.cutoff < 2 {
                return Err(param("oracle.cutoff", "need at least two Fock levels per mode"));
            }
        }
        if self.output.formats.is_empty() {
            return Err(param("output.formats", "choose at least one of \"csv\", \"json\""));
        }
        Ok(())
    }

    /// Network parameters including the bath.
    pub fn network_params(&self) -> Result<NetworkParams, Failure> {
        let n = &self.network;
        NetworkParams::new(n.mass, n.hooke.clone(), n.couplings.clone())
            .and_then(|p| p.with_bath(self.dissipation.gamma0, self.dissipation.temperature))
            .map_err(|e| in_section("network", e))
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }

    pub fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T, Failure> {
        value
            .as_ref()
            .ok_or_else(|| Failure::Config(format!("missing section `[{name}]`")))
    }
}

fn param(field: impl Into<String>, reason: impl Into<String>) -> Failure {
    Failure::Core(starsync::Error::parameter(field, reason))
}

pub fn section_error(section: &str, e: starsync::Error) -> Failure {
    in_section(section, e)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[network]\nmass = 1.0\nhooke = [1.0, 1.0, 1.0]\ncouplings = [1.0, 1.0]\n";

    #[test]
    fn defaults_fill_optional_sections() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.dissipation, DissipationSection::default());
        assert_eq!(cfg.dynamics.basis, Basis::Perturbative);
        assert_eq!(cfg.output.formats, vec![Format::Csv, Format::Json]);
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn json_echo_round_trips() {
        let text = format!(
            "{MINIMAL}[dissipation]\ngamma0 = 0.5\n[initial_state]\nframe = \"normal\"\n\
             modes = [{{ kind = \"coherent\", re = 0.5 }}, {{ kind = \"vacuum\" }}, {{ kind = \"thermal\", nbar = 0.1 }}]\n\
             [time]\nt_max = 10.0\nsamples = 11\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let echoed = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&echoed).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_values_name_their_field() {
        let text = MINIMAL.replace("hooke = [1.0, 1.0, 1.0]", "hooke = [1.0, -1.0, 1.0]");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("network.hooke[1]"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse(&format!("{MINIMAL}colour = \"red\"\n")).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }
}
