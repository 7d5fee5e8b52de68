use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;

use dqdmeas_core::analysis::{current_distribution, ensemble, steering_pulse};
use dqdmeas_core::model::{validate_low_frequency, validate_weak_coupling};
use dqdmeas_core::trajectory::{
    check_timestep, propagate_free, reconstruct_from_record, run_trajectory, run_trajectory_with,
    TrajectoryOptions,
};
use dqdmeas_core::{io, master, MeasurementRecord, QubitHamiltonian, ValidityReport};

use crate::config::{Mode, Physics, RunConfig};

pub const STATES_FILE: &str = "states.csv";
pub const RECORD_FILE: &str = "record.csv";
pub const ENSEMBLE_FILE: &str = "ensemble.csv";
pub const LOCALIZATION_FILE: &str = "localization.csv";
pub const CURRENTS_FILE: &str = "currents.csv";
pub const MASTER_FILE: &str = "master.csv";
pub const RECONSTRUCTED_FILE: &str = "reconstructed.csv";
pub const STEER_FILE: &str = "steer.csv";
pub const STEER_HEADER: &str = "epsilon_pulse,h_pulse,duration,s11_before,s11_after,recheck_i_avg";

const HISTOGRAM_BINS: usize = 50;

#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub validity: Vec<ValidityReport>,
    pub warnings: Vec<String>,
}

/// Validity checks and step-size warnings for a config, without running it.
pub fn validate(cfg: &RunConfig) -> anyhow::Result<(Physics, Vec<ValidityReport>, Vec<String>)> {
    let p = cfg.physics()?;
    let reports = vec![
        validate_weak_coupling(&p.det),
        validate_low_frequency(&p.ham, &p.det),
    ];
    let warnings = check_timestep(&p.ham, &p.det, p.grid.dt)
        .into_iter()
        .collect();
    Ok((p, reports, warnings))
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    files.push(path);
    Ok(BufWriter::new(f))
}

/// Execute a config and write its CSV outputs into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> anyhow::Result<RunOutput> {
    let (p, validity, warnings) = validate(cfg)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut out = RunOutput {
        validity,
        warnings,
        ..Default::default()
    };

    match &cfg.mode {
        Mode::Trajectory => {
            let r = run_trajectory(&p.initial, &p.ham, &p.det, &p.grid)?;
            io::write_states(
                create(dir, STATES_FILE, &mut out.files)?,
                &r.times(),
                &r.states,
            )?;
            io::write_record(create(dir, RECORD_FILE, &mut out.files)?, &r.record)?;
        }
        Mode::Ensemble { n_traj } => {
            let s = ensemble(&p.initial, &p.ham, &p.det, &p.grid, *n_traj, p.grid.seed)?;
            io::write_ensemble(create(dir, ENSEMBLE_FILE, &mut out.files)?, &s)?;
            io::write_localization(create(dir, LOCALIZATION_FILE, &mut out.files)?, &s)?;
            let sigma = (p.det.s_i / (2.0 * p.grid.window)).sqrt();
            let lo = p.det.i1.min(p.det.i2) - 4.0 * sigma;
            let hi = p.det.i1.max(p.det.i2) + 4.0 * sigma;
            let last = MeasurementRecord::new(0.0, p.grid.window, s.final_window_currents.clone())?;
            let h = current_distribution(&[last], p.grid.window, 0.0, lo, hi, HISTOGRAM_BINS)?;
            io::write_histogram(create(dir, CURRENTS_FILE, &mut out.files)?, &h)?;
        }
        Mode::Master => {
            let sol = master::solve(&p.initial, &p.ham, p.det.decoherence_rate(), &p.grid)?;
            io::write_states(
                create(dir, MASTER_FILE, &mut out.files)?,
                &sol.times,
                &sol.states,
            )?;
        }
        Mode::Reconstruct { record_file } => {
            let f = File::open(record_file)
                .with_context(|| format!("opening {}", record_file.display()))?;
            let record = io::read_record(f)?;
            let states = reconstruct_from_record(&p.initial, &p.ham, &p.det, &record, p.grid.dt)?;
            let times: Vec<f64> = (0..states.len())
                .map(|k| record.t0 + k as f64 * record.window)
                .collect();
            io::write_states(
                create(dir, RECONSTRUCTED_FILE, &mut out.files)?,
                &times,
                &states,
            )?;
        }
        Mode::Steer => {
            let r = run_trajectory(&p.initial, &p.ham, &p.det, &p.grid)?;
            io::write_states(
                create(dir, STATES_FILE, &mut out.files)?,
                &r.times(),
                &r.states,
            )?;
            io::write_record(create(dir, RECORD_FILE, &mut out.files)?, &r.record)?;
            let before = *r.final_state();
            let pulse = steering_pulse(&before, &p.ham)?;
            let after = propagate_free(
                &before,
                &pulse.hamiltonian(p.ham.hbar)?,
                0.0,
                pulse.duration,
            );
            // Detector back on with the dots decoupled again.
            let idle = QubitHamiltonian::new(0.0, 0.0, p.ham.hbar)?;
            let check = run_trajectory_with(
                &after,
                &idle,
                &p.det,
                &p.grid,
                TrajectoryOptions {
                    stream: 1,
                    keep_fine_record: false,
                },
            )?;
            let recheck = check.record.mean().unwrap_or(f64::NAN);
            let mut w = create(dir, STEER_FILE, &mut out.files)?;
            use std::io::Write;
            writeln!(w, "{STEER_HEADER}")?;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                pulse.epsilon_pulse,
                pulse.h_pulse,
                pulse.duration,
                before.s11(),
                after.s11(),
                recheck
            )?;
            w.flush()?;
        }
    }
    Ok(out)
}
