//! Time-domain evolution of the conditioned state.
//!
//! Each step of length `dt` is split into
//!
//! 1. a measurement update: the exact window Bayes update with
//!    `⟨I⟩ = I0 + ΔI (σ22 - σ11)/2 + ξ` and `τ = dt`;
//! 2. the coherent rotation about `ω = (-2H, 0, ε)/ħ` together with the extra
//!    dephasing `γ_d`, applied as the exact propagator of that linear flow.
//!
//! To first order in `dt` this reproduces the coupled Langevin equations
//! for `σ11` and `σ12`, while keeping positivity and the coherent fraction
//! exact at every step.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bayes::measure;
use crate::error::{param, Error, Result};
use crate::model::{
    ConditionedState, DetectorModel, MeasurementRecord, QubitHamiltonian, SimulationGrid,
};

/// Fraction of the fastest timescale allowed for `dt` before a warning.
pub const DT_FRACTION: f64 = 0.05;

pub type TrajectoryRng = ChaCha8Rng;

/// Random stream for trajectory `stream` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, stream: u64) -> TrajectoryRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Deviation of the `dt`-averaged detector current from its conditional
/// mean: Gaussian with variance `S_I/(2 dt)`.
pub fn noise_increment<R: Rng + ?Sized>(det: &DetectorModel, dt: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (det.s_i / (2.0 * dt)).sqrt() * z
}

/// Detector current for the current state plus noise `xi`.
pub fn detector_sample(state: &ConditionedState, det: &DetectorModel, xi: f64) -> f64 {
    det.i0() + 0.5 * det.delta_i() * (state.s22() - state.s11()) + xi
}

/// Returns a message when `dt` is not small against `τ_loc`, `1/Ω` or `1/γ_d`.
pub fn check_timestep(ham: &QubitHamiltonian, det: &DetectorModel, dt: f64) -> Option<String> {
    let scales = [
        ("tau_loc", det.tau_loc()),
        ("1/Omega", 1.0 / ham.rabi_frequency()),
        ("1/gamma_d", 1.0 / det.gamma_d_extra),
    ];
    let (name, fastest) = scales
        .iter()
        .copied()
        .filter(|(_, t)| t.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    (dt > DT_FRACTION * fastest).then(|| {
        format!(
            "dt = {dt} exceeds {DT_FRACTION} * {name} = {}",
            DT_FRACTION * fastest
        )
    })
}

/// Exact propagator of `dr/dt = ω × r - γ (x, y, 0)` over a fixed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreePropagator {
    matrix: Matrix3<f64>,
}

impl FreePropagator {
    pub fn new(ham: &QubitHamiltonian, gamma: f64, t: f64) -> Self {
        let w = ham.rotation_vector();
        let matrix = if gamma == 0.0 {
            rotation_matrix(w, t)
        } else {
            let generator = Matrix3::new(
                -gamma, -w.z, w.y, //
                w.z, -gamma, -w.x, //
                -w.y, w.x, 0.0,
            );
            (generator * t).exp()
        };
        Self { matrix }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn apply(&self, state: &ConditionedState) -> ConditionedState {
        ConditionedState::from_bloch_unchecked(self.matrix * state.bloch())
    }
}

/// Rotation by `|w| t` about `w` (right-handed), Rodrigues form.
pub(crate) fn rotation_matrix(w: Vector3<f64>, t: f64) -> Matrix3<f64> {
    let n = w.norm();
    if n == 0.0 || t == 0.0 {
        return Matrix3::identity();
    }
    let k = w / n;
    let angle = n * t;
    let kx = Matrix3::new(
        0.0, -k.z, k.y, //
        k.z, 0.0, -k.x, //
        -k.y, k.x, 0.0,
    );
    Matrix3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos())
}

/// Evolve without measurement for time `t` (detector off).
pub fn propagate_free(
    state: &ConditionedState,
    ham: &QubitHamiltonian,
    gamma: f64,
    t: f64,
) -> ConditionedState {
    FreePropagator::new(ham, gamma, t).apply(state)
}

/// Precomputed single-step map for fixed parameters.
#[derive(Debug, Clone)]
pub struct Stepper {
    det: DetectorModel,
    dt: f64,
    llr_scale: f64,
    free: FreePropagator,
}

impl Stepper {
    pub fn new(ham: &QubitHamiltonian, det: &DetectorModel, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(param("dt", "must be positive"));
        }
        Ok(Self {
            det: *det,
            dt,
            llr_scale: -det.delta_i() * 2.0 * dt / det.s_i,
            free: FreePropagator::new(ham, det.gamma_d_extra, dt),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step driven by the current `i_avg` observed over `dt`.
    pub fn advance(&self, state: &ConditionedState, i_avg: f64) -> Result<ConditionedState> {
        let llr = self.llr_scale * (i_avg - self.det.i0());
        let measured = measure(state, llr)?;
        Ok(self.free.apply(&measured))
    }

    /// One step with noise `xi`; returns the new state and the current seen.
    pub fn advance_with_noise(
        &self,
        state: &ConditionedState,
        xi: f64,
    ) -> Result<(ConditionedState, f64)> {
        let i = detector_sample(state, &self.det, xi);
        Ok((self.advance(state, i)?, i))
    }
}

/// Single step of the conditioned evolution with noise realization `xi`.
pub fn step(
    state: &ConditionedState,
    ham: &QubitHamiltonian,
    det: &DetectorModel,
    dt: f64,
    xi: f64,
) -> Result<ConditionedState> {
    if !state.is_valid() {
        return Err(Error::InvalidState(format!("{state:?}")));
    }
    Stepper::new(ham, det, dt)?
        .advance_with_noise(state, xi)
        .map(|(s, _)| s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrajectoryOptions {
    /// Index of the random stream under `grid.seed`.
    pub stream: u64,
    /// Keep the per-`dt` currents in addition to the window averages.
    pub keep_fine_record: bool,
}

/// One realization: states at every window boundary and the window-averaged
/// detector current between them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub grid: SimulationGrid,
    pub stream: u64,
    /// `states[k]` is the state at `t = k * window`; `states[0]` is the initial state.
    pub states: Vec<ConditionedState>,
    /// `record.samples[k]` is the mean current over `[k * window, (k + 1) * window)`.
    pub record: MeasurementRecord,
    pub fine_record: Option<MeasurementRecord>,
    pub warnings: Vec<String>,
}

impl TrajectoryResult {
    pub fn seed(&self) -> u64 {
        self.grid.seed
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.sample_times()
    }

    pub fn final_state(&self) -> &ConditionedState {
        self.states.last().expect("trajectory has an initial state")
    }

    /// Fraction of fine-grained or window currents below zero.
    pub fn negative_current_fraction(&self) -> f64 {
        let r = self.fine_record.as_ref().unwrap_or(&self.record);
        r.samples.iter().filter(|&&i| i < 0.0).count() as f64 / r.len().max(1) as f64
    }
}

/// Simulate one trajectory on stream 0 of `grid.seed`.
pub fn run_trajectory(
    initial: &ConditionedState,
    ham: &QubitHamiltonian,
    det: &DetectorModel,
    grid: &SimulationGrid,
) -> Result<TrajectoryResult> {
    run_trajectory_with(initial, ham, det, grid, TrajectoryOptions::default())
}

pub fn run_trajectory_with(
    initial: &ConditionedState,
    ham: &QubitHamiltonian,
    det: &DetectorModel,
    grid: &SimulationGrid,
    opts: TrajectoryOptions,
) -> Result<TrajectoryResult> {
    if !initial.is_valid() {
        return Err(Error::InvalidState(format!("{initial:?}")));
    }
    let stepper = Stepper::new(ham, det, grid.dt)?;
    let mut rng = trajectory_rng(grid.seed, opts.stream);
    let per_window = grid.steps_per_window();
    let n_windows = grid.n_windows();

    let mut states = Vec::with_capacity(n_windows + 1);
    let mut samples = Vec::with_capacity(n_windows);
    let mut fine = opts
        .keep_fine_record
        .then(|| Vec::with_capacity(grid.n_steps()));
    let mut state = *initial;
    states.push(state);
    for _ in 0..n_windows {
        let mut acc = 0.0;
        for _ in 0..per_window {
            let xi = noise_increment(det, grid.dt, &mut rng);
            let (next, i) = stepper.advance_with_noise(&state, xi)?;
            acc += i;
            if let Some(f) = fine.as_mut() {
                f.push(i);
            }
            state = next;
        }
        samples.push(acc / per_window as f64);
        states.push(state);
    }

    let warnings = check_timestep(ham, det, grid.dt).into_iter().collect();
    Ok(TrajectoryResult {
        grid: *grid,
        stream: opts.stream,
        states,
        record: MeasurementRecord {
            t0: 0.0,
            window: grid.window,
            samples,
        },
        fine_record: fine.map(|samples| MeasurementRecord {
            t0: 0.0,
            window: grid.dt,
            samples,
        }),
        warnings,
    })
}

/// Replay a recorded current through the same step map. Each window of the
/// record is split into `window/dt` steps that all see the window average.
///
/// Returns the state at every window boundary, starting with `initial`.
pub fn reconstruct_from_record(
    initial: &ConditionedState,
    ham: &QubitHamiltonian,
    det: &DetectorModel,
    record: &MeasurementRecord,
    dt: f64,
) -> Result<Vec<ConditionedState>> {
    if !initial.is_valid() {
        return Err(Error::InvalidState(format!("{initial:?}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(param("dt", "must be positive"));
    }
    let ratio = record.window / dt;
    let per_window = ratio.round();
    if per_window < 1.0 || (ratio - per_window).abs() > 1e-9 * per_window {
        return Err(Error::RecordMismatch(format!(
            "record window {} is not a whole multiple of dt = {dt}",
            record.window
        )));
    }
    let per_window = per_window as usize;
    let stepper = Stepper::new(ham, det, dt)?;
    let mut out = Vec::with_capacity(record.len() + 1);
    let mut state = *initial;
    out.push(state);
    for &i in &record.samples {
        for _ in 0..per_window {
            state = stepper.advance(&state, i)?;
        }
        out.push(state);
    }
    Ok(out)
}

/// Start from the maximally mixed state and follow one trajectory.
pub fn purify_from_mixed(
    det: &DetectorModel,
    ham: &QubitHamiltonian,
    grid: &SimulationGrid,
) -> Result<TrajectoryResult> {
    if !det.is_ideal() {
        return Err(Error::NonidealDetector(det.gamma_d_extra));
    }
    run_trajectory(&ConditionedState::mixed(0.5)?, ham, det, grid)
}
