//! Run configuration: a small TOML file with one section per domain object.
//!
//! ```toml
//! mode = "ensemble:10000"   # trajectory | ensemble:N | master | reconstruct:FILE | steer
//! output_dir = "out"
//!
//! [hamiltonian]
//! epsilon = 1.0
//! h_tunnel = 1.0
//! hbar = 1.0                # optional, default 1
//!
//! [detector]
//! i1 = 10.0
//! i2 = 11.0
//! s_i = 1.0                 # or `transparency = 0.0` for S_I = 2 e I0 (1 - T)
//! e_charge = 0.01           # optional, default 1
//! gamma_d_extra = 0.0       # optional, default 0
//!
//! [initial]
//! s11 = 1.0
//! s12_re = 0.0              # optional, default 0
//! s12_im = 0.0              # optional, default 0
//!
//! [grid]
//! dt = 0.002
//! t_final = 20.0
//! window = 0.02
//! seed = 1
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use dqdmeas_core::model::schottky_s_i;
use dqdmeas_core::{ConditionedState, DetectorModel, QubitHamiltonian, SimulationGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Trajectory,
    Ensemble { n_traj: usize },
    Master,
    Reconstruct { record_file: PathBuf },
    Steer,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Trajectory => write!(f, "trajectory"),
            Mode::Ensemble { n_traj } => write!(f, "ensemble:{n_traj}"),
            Mode::Master => write!(f, "master"),
            Mode::Reconstruct { record_file } => write!(f, "reconstruct:{}", record_file.display()),
            Mode::Steer => write!(f, "steer"),
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("trajectory", None) => Ok(Mode::Trajectory),
            ("master", None) => Ok(Mode::Master),
            ("steer", None) => Ok(Mode::Steer),
            ("ensemble", Some(n)) => match n.parse() {
                Ok(n_traj) if n_traj > 0 => Ok(Mode::Ensemble { n_traj }),
                _ => Err(format!("ensemble size `{n}` is not a positive integer")),
            },
            ("reconstruct", Some(f)) if !f.is_empty() => Ok(Mode::Reconstruct {
                record_file: PathBuf::from(f),
            }),
            _ => Err(format!(
                "unknown mode `{s}` (expected trajectory, ensemble:N, master, reconstruct:FILE or steer)"
            )),
        }
    }
}

impl Serialize for Mode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Mode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn one() -> f64 {
    1.0
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    pub epsilon: f64,
    pub h_tunnel: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub i1: f64,
    pub i2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_i: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transparency: Option<f64>,
    #[serde(default = "one")]
    pub e_charge: f64,
    #[serde(default)]
    pub gamma_d_extra: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub s11: f64,
    #[serde(default)]
    pub s12_re: f64,
    #[serde(default)]
    pub s12_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dt: f64,
    pub t_final: f64,
    pub window: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub hamiltonian: HamiltonianSection,
    pub detector: DetectorSection,
    pub initial: InitialSection,
    pub grid: GridSection,
}

/// Domain objects built from a validated config.
#[derive(Debug, Clone)]
pub struct Physics {
    pub ham: QubitHamiltonian,
    pub det: DetectorModel,
    pub initial: ConditionedState,
    pub grid: SimulationGrid,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Read a config file. Relative record paths are resolved against the
    /// directory holding the config.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg =
            Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Mode::Reconstruct { record_file } = &mut cfg.mode {
            if record_file.is_relative() {
                if let Some(dir) = path.parent() {
                    *record_file = dir.join(&*record_file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn detector(&self) -> anyhow::Result<DetectorModel> {
        let d = &self.detector;
        let s_i = match (d.s_i, d.transparency) {
            (Some(s), None) => s,
            (None, Some(t)) => schottky_s_i(0.5 * (d.i1 + d.i2), d.e_charge, t)?,
            (Some(_), Some(_)) => bail!("detector: give either `s_i` or `transparency`, not both"),
            (None, None) => bail!("detector: missing key `s_i` (or `transparency`)"),
        };
        Ok(DetectorModel::new(
            d.i1,
            d.i2,
            s_i,
            d.e_charge,
            d.gamma_d_extra,
        )?)
    }

    /// Check every invariant and build the domain objects.
    pub fn physics(&self) -> anyhow::Result<Physics> {
        let h = &self.hamiltonian;
        let ham = QubitHamiltonian::new(h.epsilon, h.h_tunnel, h.hbar).context("hamiltonian")?;
        let det = self.detector().context("detector")?;
        let i = &self.initial;
        let initial = ConditionedState::new(i.s11, i.s12_re, i.s12_im).context("initial")?;
        let g = &self.grid;
        let grid = SimulationGrid::new(g.dt, g.t_final, g.window, g.seed).context("grid")?;
        if let Mode::Reconstruct { record_file } = &self.mode {
            if !record_file.exists() {
                bail!("record file {} does not exist", record_file.display());
            }
        }
        Ok(Physics {
            ham,
            det,
            initial,
            grid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
mode = "ensemble:250"
output_dir = "runs/a"

[hamiltonian]
epsilon = 1.0
h_tunnel = 1.0

[detector]
i1 = 10.0
i2 = 11.0
s_i = 0.3333333333333333
e_charge = 0.01

[initial]
s11 = 1.0

[grid]
dt = 0.002
t_final = 2.0
window = 0.02
seed = 9
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.mode, Mode::Ensemble { n_traj: 250 });
        assert_eq!(cfg.hamiltonian.hbar, 1.0);
        assert_eq!(cfg.detector.gamma_d_extra, 0.0);
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        cfg.physics().unwrap();
    }

    #[test]
    fn modes_parse() {
        for s in [
            "trajectory",
            "master",
            "steer",
            "ensemble:3",
            "reconstruct:rec.csv",
        ] {
            assert_eq!(s.parse::<Mode>().unwrap().to_string(), s);
        }
        for s in [
            "ensemble",
            "ensemble:0",
            "ensemble:x",
            "reconstruct:",
            "fly",
            "master:2",
        ] {
            assert!(s.parse::<Mode>().is_err(), "{s}");
        }
    }

    #[test]
    fn missing_key_is_named() {
        let text = SAMPLE.replace("dt = 0.002\n", "");
        let err = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("dt"), "{err}");
        let text = SAMPLE.replace("s_i = 0.3333333333333333\n", "");
        let err = RunConfig::from_toml(&text).unwrap().physics().unwrap_err();
        assert!(format!("{err:#}").contains("s_i"));
    }

    #[test]
    fn schottky_detector() {
        let text = SAMPLE.replace("s_i = 0.3333333333333333", "transparency = 0.5");
        let det = RunConfig::from_toml(&text).unwrap().detector().unwrap();
        assert!((det.s_i - 2.0 * 0.01 * 10.5 * 0.5).abs() < 1e-15);
        let both = SAMPLE.replace("s_i = 0.3333333333333333", "s_i = 1.0\ntransparency = 0.5");
        assert!(RunConfig::from_toml(&both).unwrap().detector().is_err());
    }

    #[test]
    fn rejects_invalid_values() {
        let text = SAMPLE.replace("s11 = 1.0", "s11 = 1.5");
        assert!(RunConfig::from_toml(&text).unwrap().physics().is_err());
        let text = SAMPLE.replace("window = 0.02", "window = 0.003");
        assert!(RunConfig::from_toml(&text).unwrap().physics().is_err());
        let text = SAMPLE.replace(
            "mode = \"ensemble:250\"",
            "mode = \"reconstruct:/no/such/file.csv\"",
        );
        assert!(RunConfig::from_toml(&text).unwrap().physics().is_err());
        let text = SAMPLE.replace("[grid]", "[grid]\nbogus = 1");
        assert!(RunConfig::from_toml(&text).is_err());
    }
}
