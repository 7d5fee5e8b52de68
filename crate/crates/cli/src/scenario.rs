//! Preset configurations for the standard demonstrations.
//!
//! All presets share a weakly responding detector (`I1 = 10`, `I2 = 11`,
//! `ΔI = 1`) and `ħ = 1`. The charge is small enough that the low-frequency
//! check passes for every preset.

use std::path::PathBuf;

use anyhow::bail;

use crate::config::{
    DetectorSection, GridSection, HamiltonianSection, InitialSection, Mode, RunConfig,
};

pub const NAMES: [&str; 6] = ["fig1", "fig2a", "fig2b", "fig2c", "purify", "steer-demo"];

const I1: f64 = 10.0;
const I2: f64 = 11.0;
const CHARGE: f64 = 0.01;

fn config(
    name: &str,
    mode: Mode,
    (epsilon, h_tunnel): (f64, f64),
    s_i: f64,
    (s11, s12_re): (f64, f64),
    (dt, t_final, window): (f64, f64, f64),
) -> RunConfig {
    RunConfig {
        mode,
        output_dir: PathBuf::from("out").join(name),
        hamiltonian: HamiltonianSection {
            epsilon,
            h_tunnel,
            hbar: 1.0,
        },
        detector: DetectorSection {
            i1: I1,
            i2: I2,
            s_i: Some(s_i),
            transparency: None,
            e_charge: CHARGE,
            gamma_d_extra: 0.0,
        },
        initial: InitialSection {
            s11,
            s12_re,
            s12_im: 0.0,
        },
        grid: GridSection {
            dt,
            t_final,
            window,
            seed: 1,
        },
    }
}

/// Asymmetric dots (`ε = H = 1`) starting in dot 1 with coupling `𝒞`.
/// `S_I = ħ(ΔI)²/(𝒞 H) = 1/𝒞`.
fn fig2(name: &str, coupling: f64, dt: f64) -> RunConfig {
    config(
        name,
        Mode::Trajectory,
        (1.0, 1.0),
        1.0 / coupling,
        (1.0, 0.0),
        (dt, 20.0, 0.02),
    )
}

pub fn scenario(name: &str) -> anyhow::Result<RunConfig> {
    Ok(match name {
        // Uncoupled symmetric dots; τ_loc = 2 S_I/(ΔI)² = 2, run for 10 τ_loc.
        "fig1" => config(
            name,
            Mode::Trajectory,
            (0.0, 0.0),
            1.0,
            (0.5, 0.0),
            (0.005, 20.0, 0.05),
        ),
        "fig2a" => fig2(name, 0.3, 0.002),
        "fig2b" => fig2(name, 3.0, 0.002),
        "fig2c" => fig2(name, 30.0, 0.001),
        "purify" => config(
            name,
            Mode::Trajectory,
            (0.0, 0.0),
            1.0,
            (0.5, 0.0),
            (0.005, 20.0, 0.05),
        ),
        // Coherent symmetric start measured for one τ_loc, then steered into dot 1.
        "steer-demo" => config(
            name,
            Mode::Steer,
            (0.0, 0.0),
            1.0,
            (0.5, 0.5),
            (0.005, 2.0, 0.05),
        ),
        other => bail!("unknown scenario `{other}` (known: {})", NAMES.join(", ")),
    })
}
