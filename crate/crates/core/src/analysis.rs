//! Ensemble statistics, record post-processing, quantum-jump counting and
//! the steering pulses that turn a known pure state into a chosen one.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::model::{
    ConditionedState, DetectorModel, MeasurementRecord, QubitHamiltonian, SimulationGrid,
};
use crate::trajectory::{run_trajectory_with, TrajectoryOptions, TrajectoryResult};

/// A trajectory counts as localized once `max(σ11, σ22)` reaches this.
pub const LOCALIZATION_THRESHOLD: f64 = 0.95;
pub const JUMP_LOW: f64 = 0.25;
pub const JUMP_HIGH: f64 = 0.75;
/// Minimum purity accepted by the steering pulses.
pub const STEERING_PURITY: f64 = 1.0 - 1e-6;

// Trajectories per parallel batch. Results are folded in index order so the
// summary does not depend on the thread count.
const BATCH: usize = 512;

/// Run `n_traj` trajectories on streams `0..n_traj` of `grid.seed` in
/// parallel and map each through `f`. Output order follows the stream index.
pub fn map_ensemble<T, F>(
    initial: &ConditionedState,
    ham: &QubitHamiltonian,
    det: &DetectorModel,
    grid: &SimulationGrid,
    n_traj: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(TrajectoryResult) -> T + Sync,
{
    (0..n_traj as u64)
        .into_par_iter()
        .map(|stream| {
            let opts = TrajectoryOptions {
                stream,
                keep_fine_record: false,
            };
            run_trajectory_with(initial, ham, det, grid, opts).map(&f)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl ComponentStats {
    /// Standard error of the mean at checkpoint `k`.
    pub fn std_error(&self, k: usize, n: usize) -> f64 {
        (self.variance[k] / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub n_traj: usize,
    pub checkpoints: Vec<f64>,
    pub s11: ComponentStats,
    pub s12_re: ComponentStats,
    pub s12_im: ComponentStats,
    pub mean_purity: Vec<f64>,
    /// Ensemble mean of `σ11 σ22`, used for the localization-time fit.
    pub mean_s11_s22: Vec<f64>,
    /// Localized in dot 1 / dot 2 at the final checkpoint; the rest is unresolved.
    pub frac_dot1: f64,
    pub frac_dot2: f64,
    /// Last window-averaged current of each trajectory, in stream order.
    pub final_window_currents: Vec<f64>,
}

impl EnsembleSummary {
    pub fn frac_unresolved(&self) -> f64 {
        1.0 - self.frac_dot1 - self.frac_dot2
    }
}

struct Moments {
    sum: Vec<[f64; 5]>,
    sum_sq: Vec<[f64; 3]>,
}

fn finish(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 {
        ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Run an ensemble and reduce it to per-checkpoint statistics.
/// Deterministic for a given `master_seed` regardless of thread count.
pub fn ensemble(
    initial: &ConditionedState,
    ham: &QubitHamiltonian,
    det: &DetectorModel,
    grid: &SimulationGrid,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    if n_traj == 0 {
        return Err(param("n_traj", "must be at least 1"));
    }
    let grid = SimulationGrid {
        seed: master_seed,
        ..*grid
    };
    let n_points = grid.n_windows() + 1;
    let mut acc = Moments {
        sum: vec![[0.0; 5]; n_points],
        sum_sq: vec![[0.0; 3]; n_points],
    };
    let (mut dot1, mut dot2) = (0usize, 0usize);
    let mut final_currents = Vec::with_capacity(n_traj);

    for start in (0..n_traj).step_by(BATCH) {
        let end = (start + BATCH).min(n_traj);
        let batch: Vec<(Vec<[f64; 5]>, f64)> = (start as u64..end as u64)
            .into_par_iter()
            .map(|stream| {
                let opts = TrajectoryOptions {
                    stream,
                    keep_fine_record: false,
                };
                let r = run_trajectory_with(initial, ham, det, &grid, opts)?;
                let rows = r
                    .states
                    .iter()
                    .map(|s| {
                        [
                            s.s11(),
                            s.s12_re(),
                            s.s12_im(),
                            s.purity(),
                            s.s11() * s.s22(),
                        ]
                    })
                    .collect();
                let last = r.record.samples.last().copied().unwrap_or(f64::NAN);
                Ok((rows, last))
            })
            .collect::<Result<_>>()?;
        for (rows, last) in batch {
            for (k, row) in rows.iter().enumerate() {
                for (a, x) in acc.sum[k].iter_mut().zip(row) {
                    *a += x;
                }
                for (a, x) in acc.sum_sq[k].iter_mut().zip(row) {
                    *a += x * x;
                }
            }
            let s11 = rows[rows.len() - 1][0];
            if s11 >= LOCALIZATION_THRESHOLD {
                dot1 += 1;
            } else if 1.0 - s11 >= LOCALIZATION_THRESHOLD {
                dot2 += 1;
            }
            final_currents.push(last);
        }
    }

    let mut comps = [
        ComponentStats::default(),
        ComponentStats::default(),
        ComponentStats::default(),
    ];
    for k in 0..n_points {
        for (c, comp) in comps.iter_mut().enumerate() {
            let (m, v) = finish(acc.sum[k][c], acc.sum_sq[k][c], n_traj);
            comp.mean.push(m);
            comp.variance.push(v);
        }
    }
    let [s11, s12_re, s12_im] = comps;
    let nf = n_traj as f64;
    Ok(EnsembleSummary {
        n_traj,
        checkpoints: grid.sample_times(),
        s11,
        s12_re,
        s12_im,
        mean_purity: acc.sum.iter().map(|r| r[3] / nf).collect(),
        mean_s11_s22: acc.sum.iter().map(|r| r[4] / nf).collect(),
        frac_dot1: dot1 as f64 / nf,
        frac_dot2: dot2 as f64 / nf,
        final_window_currents: final_currents,
    })
}

/// Sliding mean over `window_out`, one value per record sample. Value `j`
/// averages the current over `[t_j, t_j + window_out)`; only full windows
/// are returned, so the output has `len - k + 1` samples with the input spacing.
pub fn running_window_average(
    record: &MeasurementRecord,
    window_out: f64,
) -> Result<MeasurementRecord> {
    let ratio = window_out / record.window;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > 1e-9 * k {
        return Err(Error::RecordMismatch(format!(
            "output window {window_out} is not a whole multiple of {}",
            record.window
        )));
    }
    let k = k as usize;
    if k > record.len() {
        return Err(Error::RecordMismatch(format!(
            "output window {window_out} longer than the record ({})",
            record.duration()
        )));
    }
    let samples = record
        .samples
        .windows(k)
        .map(|w| w.iter().sum::<f64>() / k as f64)
        .collect();
    Ok(MeasurementRecord {
        t0: record.t0,
        window: record.window,
        samples,
    })
}

/// Mean current from the start of the record up to the end of each window.
pub fn cumulative_average(record: &MeasurementRecord) -> Result<MeasurementRecord> {
    if record.is_empty() {
        return Err(Error::EmptyRecord);
    }
    let mut sum = 0.0;
    let samples = record
        .samples
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            sum += x;
            sum / (k + 1) as f64
        })
        .collect();
    Ok(MeasurementRecord {
        t0: record.t0,
        window: record.window,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationFit {
    /// Fitted decay time of the ensemble mean of `σ11 σ22`; `None` if the fit failed.
    pub fitted: Option<f64>,
    /// `2 S_I/(ΔI)²`.
    pub analytic: f64,
    pub points_used: usize,
    pub message: Option<String>,
}

/// Exponential fit to the ensemble mean of `σ11 σ22` over its first half
/// e-fold. The decay slows as the ensemble spreads away from `σ11 = 1/2`, so
/// only the early part reflects the rate set by the record.
pub fn localization_time_estimate(
    summary: &EnsembleSummary,
    det: &DetectorModel,
) -> LocalizationFit {
    let analytic = det.tau_loc();
    let fail = |points_used, msg: &str| LocalizationFit {
        fitted: None,
        analytic,
        points_used,
        message: Some(msg.to_string()),
    };
    let m = &summary.mean_s11_s22;
    let Some(&m0) = m.first() else {
        return fail(0, "empty summary");
    };
    if m0 <= 0.0 {
        return fail(0, "initial state is already localized");
    }
    let cut = m0 * (-0.5f64).exp();
    let pts: Vec<(f64, f64)> = summary
        .checkpoints
        .iter()
        .zip(m)
        .take_while(|(_, &v)| v >= cut)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 3 {
        return fail(
            pts.len(),
            "fewer than three points in the first half e-fold",
        );
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let slope = sxy / sxx;
    if slope.is_nan() || slope >= 0.0 {
        return fail(pts.len(), "no decay");
    }
    LocalizationFit {
        fitted: Some(-1.0 / slope),
        analytic,
        points_used: pts.len(),
        message: None,
    }
}

/// Number of hysteresis crossings of `σ11` between `low` and `high`.
pub fn zeno_transition_count(states: &[ConditionedState], low: f64, high: f64) -> usize {
    #[derive(PartialEq, Clone, Copy)]
    enum Side {
        Low,
        High,
    }
    let mut side = None;
    let mut count = 0;
    for s in states {
        let x = s.s11();
        let now = if x <= low {
            Some(Side::Low)
        } else if x >= high {
            Some(Side::High)
        } else {
            None
        };
        if let Some(now) = now {
            if side.is_some_and(|prev| prev != now) {
                count += 1;
            }
            side = Some(now);
        }
    }
    count
}

/// Detector settings for a coherent pulse with the detector switched off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringPulse {
    pub epsilon_pulse: f64,
    pub h_pulse: f64,
    pub duration: f64,
}

impl SteeringPulse {
    pub fn hamiltonian(&self, hbar: f64) -> Result<QubitHamiltonian> {
        QubitHamiltonian::new(self.epsilon_pulse, self.h_pulse, hbar)
    }
}

/// Pulse that moves a pure state into dot 1.
pub fn steering_pulse(
    state: &ConditionedState,
    ham_units: &QubitHamiltonian,
) -> Result<SteeringPulse> {
    steer_to(state, Vector3::z(), ham_units.hbar)
}

/// Pulse that moves a pure state into the ground state of `ham_target`.
pub fn ground_state_pulse(
    state: &ConditionedState,
    ham_target: &QubitHamiltonian,
) -> Result<SteeringPulse> {
    let g = ham_target
        .ground_state_bloch()
        .ok_or_else(|| param("ham_target", "degenerate: epsilon = H = 0"))?;
    steer_to(state, g, ham_target.hbar)
}

/// Rotation about an axis in the x-z plane (the only axes a real `H` and `ε`
/// can produce) taking the state's Bloch vector onto the unit vector `target`.
/// `H'` is fixed to 1; `ε'` and the duration carry the rest.
pub fn steer_to(
    state: &ConditionedState,
    target: Vector3<f64>,
    hbar: f64,
) -> Result<SteeringPulse> {
    let purity = state.purity();
    if purity < STEERING_PURITY {
        return Err(Error::MixedState(purity));
    }
    if target.y.abs() > 1e-12 || (target.norm() - 1.0).abs() > 1e-12 {
        return Err(param("target", "must be a unit vector in the x-z plane"));
    }
    let r = state.bloch().normalize();
    let d = r - target;
    if d.norm() < 1e-15 {
        return Ok(SteeringPulse {
            epsilon_pulse: 0.0,
            h_pulse: 1.0,
            duration: 0.0,
        });
    }
    // Any axis a with a·r = a·target works; in the x-z plane it is unique.
    let mut axis = Vector3::new(-d.z, 0.0, d.x);
    if axis.norm() < 1e-15 {
        axis = Vector3::x();
    }
    axis.normalize_mut();
    let u = r - axis * axis.dot(&r);
    let v = target - axis * axis.dot(&target);
    let mut angle = axis.dot(&u.cross(&v)).atan2(u.dot(&v));
    if angle < 0.0 {
        angle += std::f64::consts::TAU;
    }
    // ω = (-2H', 0, ε')/ħ must point along the axis with H' = 1 > 0.
    if axis.x > 0.0 {
        axis = -axis;
        angle = std::f64::consts::TAU - angle;
    }
    if axis.x.abs() < 1e-12 {
        let eps = axis.z.signum();
        return Ok(SteeringPulse {
            epsilon_pulse: eps,
            h_pulse: 0.0,
            duration: angle * hbar,
        });
    }
    let rate = 2.0 / (hbar * axis.x.abs());
    Ok(SteeringPulse {
        epsilon_pulse: hbar * rate * axis.z,
        h_pulse: 1.0,
        duration: angle / rate,
    })
}

/// Histogram of window-averaged currents.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fraction of counts in bins whose centre lies in `[lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let inside: u64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let c = 0.5 * (self.edges[*k] + self.edges[k + 1]);
                (lo..=hi).contains(&c)
            })
            .map(|(_, &c)| c)
            .sum();
        inside as f64 / self.total().max(1) as f64
    }
}

/// Block-average each record over `window` (a whole multiple of the record
/// window), keep blocks starting at or after `t_start`, and histogram them
/// into `n_bins` equal bins spanning `[lo, hi]`.
pub fn current_distribution(
    records: &[MeasurementRecord],
    window: f64,
    t_start: f64,
    lo: f64,
    hi: f64,
    n_bins: usize,
) -> Result<Histogram> {
    if n_bins == 0 || hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(param("n_bins", "need at least one bin and hi > lo"));
    }
    let mut counts = vec![0u64; n_bins];
    let width = (hi - lo) / n_bins as f64;
    for rec in records {
        let ratio = window / rec.window;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * k {
            return Err(Error::RecordMismatch(format!(
                "window {window} is not a whole multiple of {}",
                rec.window
            )));
        }
        let k = k as usize;
        for (b, block) in rec.samples.chunks_exact(k).enumerate() {
            if rec.t0 + (b * k) as f64 * rec.window < t_start - 1e-12 {
                continue;
            }
            let x = block.iter().sum::<f64>() / k as f64;
            if (lo..hi).contains(&x) {
                counts[((x - lo) / width) as usize % n_bins] += 1;
            }
        }
    }
    Ok(Histogram {
        edges: (0..=n_bins).map(|k| lo + k as f64 * width).collect(),
        counts,
    })
}
