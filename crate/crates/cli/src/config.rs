//! Simulation configuration. Every field has a documented default and can
//! be set from a TOML file or overridden on the command line.

use std::path::Path;

use rpurity_core::vibronic::{LaserPulse, PropagationSettings, SshParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Ground state plus a single HOMO→LUMO excitation.
    #[value(name = "type1")]
    Type1,
    /// Ground state plus the double HOMO→LUMO excitation.
    #[value(name = "type2")]
    Type2,
    /// Ground state driven by a resonant laser.
    #[value(name = "photoexcitation")]
    Photoexcitation,
}

/// `[chain]`: SSH parameters in eV, Å and fs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub n_sites: usize,
    pub hopping: f64,
    pub coupling: f64,
    pub spring: f64,
    pub mass: f64,
    pub lattice_spacing: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        let p = SshParams::default();
        Self {
            n_sites: p.n_sites,
            hopping: p.hopping,
            coupling: p.coupling,
            spring: p.spring,
            mass: p.mass,
            lattice_spacing: p.lattice_spacing,
        }
    }
}

impl ChainConfig {
    pub fn params(&self) -> SshParams {
        SshParams {
            n_sites: self.n_sites,
            hopping: self.hopping,
            coupling: self.coupling,
            spring: self.spring,
            mass: self.mass,
            lattice_spacing: self.lattice_spacing,
        }
    }
}

/// `[ensemble]`: trajectory count and sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub n_trajectories: usize,
    pub seed: u64,
    /// Start every trajectory at rest at the relaxed geometry.
    pub zero_width: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_trajectories: 1000,
            seed: 1,
            zero_width: false,
        }
    }
}

/// `[propagation]`: time grid in fs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    pub t_final: f64,
    pub dt: f64,
    pub output_every: usize,
    pub label_every: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            t_final: 400.0,
            dt: 0.01,
            output_every: 200,
            label_every: 10,
        }
    }
}

impl PropagationConfig {
    pub fn settings(&self) -> PropagationSettings {
        PropagationSettings {
            t_final: self.t_final,
            dt: self.dt,
            output_every: self.output_every,
            label_every: self.label_every,
        }
    }
}

/// `[initial]`: weight of the ground determinant in the type1 and type2 superpositions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub ground_weight: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            ground_weight: 0.75,
        }
    }
}

/// `[laser]`: used by the photoexcitation preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserConfig {
    /// Photon energy in eV. Absent means resonant with the computed HOMO-LUMO gap.
    pub photon_energy: Option<f64>,
    /// Peak field in V/Å.
    pub amplitude: f64,
    /// Time (fs) at which the envelope reaches its plateau.
    pub t_on: f64,
    /// Gaussian width (fs) of the turn-on.
    pub width: f64,
}

impl Default for LaserConfig {
    fn default() -> Self {
        Self {
            photon_energy: None,
            amplitude: 8.7e-3,
            t_on: 300.0,
            width: 100.0,
        }
    }
}

impl LaserConfig {
    pub fn pulse(&self, gap: f64) -> CliResult<LaserPulse> {
        Ok(LaserPulse::new(
            self.photon_energy.unwrap_or(gap),
            self.amplitude,
            self.t_on,
            self.width,
        )?)
    }
}

/// `[bootstrap]`: trajectory resampling for purity error bars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 100,
            seed: 2,
        }
    }
}

/// Full description of a `simulate` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub preset: Preset,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub laser: LaserConfig,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
}

impl SimulationConfig {
    /// Defaults of a preset. Type 1 runs 400 fs, type 2 runs 300 fs and
    /// photoexcitation runs 500 fs.
    pub fn preset(preset: Preset) -> Self {
        let t_final = match preset {
            Preset::Type1 => 400.0,
            Preset::Type2 => 300.0,
            Preset::Photoexcitation => 500.0,
        };
        Self {
            preset,
            chain: ChainConfig::default(),
            ensemble: EnsembleConfig::default(),
            propagation: PropagationConfig {
                t_final,
                ..PropagationConfig::default()
            },
            initial: InitialConfig::default(),
            laser: LaserConfig::default(),
            bootstrap: BootstrapConfig::default(),
        }
    }

    /// Parses TOML. Sections left out take the defaults of the named preset.
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let bad = |e: toml::de::Error| CliError::Input(format!("config: {e}"));
        let overlay: toml::Table = toml::from_str(text).map_err(bad)?;
        let preset: Preset = overlay
            .get("preset")
            .cloned()
            .ok_or_else(|| CliError::Input("config: missing field `preset`".into()))?
            .try_into()
            .map_err(bad)?;
        let base = toml::Value::try_from(Self::preset(preset))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let overlay = toml::Value::Table(overlay);
        let merged = merge(base, overlay);
        merged.try_into().map_err(bad)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        Self::from_toml(&text).map_err(|e| e.context(&path.display().to_string()))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Runtime(format!("config: {e}")))
    }
}

fn merge(base: toml::Value, overlay: toml::Value) -> toml::Value {
    match (base, overlay) {
        (toml::Value::Table(mut b), toml::Value::Table(o)) => {
            for (k, v) in o {
                let merged = match b.remove(&k) {
                    Some(old) => merge(old, v),
                    None => v,
                };
                b.insert(k, merged);
            }
            toml::Value::Table(b)
        }
        (_, o) => o,
    }
}
