//! Domain types shared by every part of the simulator.
//!
//! Units: the dynamics depend only on `ΔI²/S_I`, `ε/ħ`, `H/ħ` and the extra
//! dephasing rate, so `ħ` defaults to 1 and currents / noise densities are
//! taken in whatever units the caller uses. The electron charge only enters
//! the validity checks and the Schottky helper.
//!
//! Bloch convention used throughout the crate:
//!
//! ```text
//! r = (2 Re σ12, 2 Im σ12, 2 σ11 - 1)
//! ```
//!
//! With this convention the coherent part of the evolution,
//! `dσ11/dt = (iH/ħ)(σ12 - σ21)`, `dσ12/dt = (iε/ħ)σ12 + (iH/ħ)(σ11 - σ22)`,
//! is the rotation `dr/dt = ω × r` with `ω = (-2H, 0, ε)/ħ`.

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{param, Error, Result};

/// Slack allowed on the positivity and Bloch-norm checks.
pub const STATE_TOL: f64 = 1e-12;

/// Factor that stands in for "much less than" in the validity checks.
pub const MUCH_LESS: f64 = 0.1;

/// Density matrix of the two-level system as seen by the observer.
///
/// `σ22` is never stored; it is always `1 - s11`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedState {
    s11: f64,
    s12: Complex64,
}

impl ConditionedState {
    pub fn new(s11: f64, s12_re: f64, s12_im: f64) -> Result<Self> {
        Self::from_parts(s11, Complex64::new(s12_re, s12_im))
    }

    pub fn from_parts(s11: f64, s12: Complex64) -> Result<Self> {
        if !(s11.is_finite() && s12.re.is_finite() && s12.im.is_finite()) {
            return Err(Error::InvalidState("non-finite component".into()));
        }
        if !(-STATE_TOL..=1.0 + STATE_TOL).contains(&s11) {
            return Err(Error::InvalidState(format!("s11 = {s11} outside [0, 1]")));
        }
        let s11 = s11.clamp(0.0, 1.0);
        if s12.norm_sqr() > s11 * (1.0 - s11) + STATE_TOL {
            return Err(Error::InvalidState(format!(
                "|s12|^2 = {} exceeds s11*s22 = {}",
                s12.norm_sqr(),
                s11 * (1.0 - s11)
            )));
        }
        Ok(Self { s11, s12 })
    }

    /// Unchecked constructor for values produced by the crate's own updates,
    /// which preserve the invariants up to rounding.
    pub(crate) fn raw(s11: f64, s12: Complex64) -> Self {
        Self { s11, s12 }
    }

    /// Electron in dot 1.
    pub fn dot1() -> Self {
        Self::raw(1.0, Complex64::new(0.0, 0.0))
    }

    /// Electron in dot 2.
    pub fn dot2() -> Self {
        Self::raw(0.0, Complex64::new(0.0, 0.0))
    }

    /// Fully coherent state with real, non-negative `σ12 = sqrt(s11 s22)`.
    pub fn pure(s11: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s11) {
            return Err(param("s11", format!("{s11} outside [0, 1]")));
        }
        Ok(Self::raw(
            s11,
            Complex64::new((s11 * (1.0 - s11)).sqrt(), 0.0),
        ))
    }

    /// Diagonal (classical) mixture.
    pub fn mixed(s11: f64) -> Result<Self> {
        Self::new(s11, 0.0, 0.0)
    }

    pub fn s11(&self) -> f64 {
        self.s11
    }

    pub fn s22(&self) -> f64 {
        1.0 - self.s11
    }

    pub fn s12(&self) -> Complex64 {
        self.s12
    }

    pub fn s12_re(&self) -> f64 {
        self.s12.re
    }

    pub fn s12_im(&self) -> f64 {
        self.s12.im
    }

    pub fn purity(&self) -> f64 {
        let s22 = self.s22();
        self.s11 * self.s11 + s22 * s22 + 2.0 * self.s12.norm_sqr()
    }

    /// `|σ12| / sqrt(σ11 σ22)`, the part of the state that is coherent.
    /// Zero for the basis states.
    pub fn coherence_fraction(&self) -> f64 {
        let p = self.s11 * self.s22();
        if p <= 0.0 {
            0.0
        } else {
            self.s12.norm() / p.sqrt()
        }
    }

    pub fn bloch(&self) -> Vector3<f64> {
        Vector3::new(2.0 * self.s12.re, 2.0 * self.s12.im, 2.0 * self.s11 - 1.0)
    }

    pub fn from_bloch(r: Vector3<f64>) -> Result<Self> {
        let n = r.norm();
        if !n.is_finite() || n > 1.0 + STATE_TOL {
            return Err(Error::InvalidState(format!("|r| = {n} > 1")));
        }
        Ok(Self::from_bloch_unchecked(r))
    }

    pub(crate) fn from_bloch_unchecked(r: Vector3<f64>) -> Self {
        let s11 = (0.5 * (1.0 + r.z)).clamp(0.0, 1.0);
        Self::raw(s11, Complex64::new(0.5 * r.x, 0.5 * r.y))
    }

    /// Positivity check with the crate tolerance.
    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.s11) && self.s12.norm_sqr() <= self.s11 * self.s22() + STATE_TOL
    }
}

/// Double-dot Hamiltonian parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitHamiltonian {
    pub epsilon: f64,
    pub h_tunnel: f64,
    pub hbar: f64,
}

impl QubitHamiltonian {
    pub fn new(epsilon: f64, h_tunnel: f64, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(param("hbar", "must be positive"));
        }
        if !epsilon.is_finite() {
            return Err(param("epsilon", "must be finite"));
        }
        if !h_tunnel.is_finite() {
            return Err(param("h_tunnel", "must be finite"));
        }
        Ok(Self {
            epsilon,
            h_tunnel,
            hbar,
        })
    }

    /// Decoupled, degenerate dots (`ε = H = 0`, `ħ = 1`).
    pub fn uncoupled() -> Self {
        Self {
            epsilon: 0.0,
            h_tunnel: 0.0,
            hbar: 1.0,
        }
    }

    /// `Ω = sqrt(4H² + ε²)/ħ`.
    pub fn rabi_frequency(&self) -> f64 {
        (4.0 * self.h_tunnel * self.h_tunnel + self.epsilon * self.epsilon).sqrt() / self.hbar
    }

    /// Angular velocity of the Bloch vector, `dr/dt = ω × r`.
    pub fn rotation_vector(&self) -> Vector3<f64> {
        Vector3::new(-2.0 * self.h_tunnel, 0.0, self.epsilon) / self.hbar
    }

    /// Bloch vector of the lowest-energy eigenstate of the Hamiltonian that
    /// generates the coherent evolution. `None` when `ε = H = 0` (degenerate).
    pub fn ground_state_bloch(&self) -> Option<Vector3<f64>> {
        let w = self.rotation_vector();
        let n = w.norm();
        (n > 0.0).then(|| w / n)
    }
}

/// Effective point-contact detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub i1: f64,
    pub i2: f64,
    pub s_i: f64,
    pub e_charge: f64,
    pub gamma_d_extra: f64,
}

impl DetectorModel {
    pub fn new(i1: f64, i2: f64, s_i: f64, e_charge: f64, gamma_d_extra: f64) -> Result<Self> {
        if !(i1.is_finite() && i1 > 0.0) {
            return Err(param("i1", "must be positive and finite"));
        }
        if !(i2.is_finite() && i2 > 0.0) {
            return Err(param("i2", "must be positive and finite"));
        }
        if !(s_i.is_finite() && s_i > 0.0) {
            return Err(param("s_i", "must be positive and finite"));
        }
        if !(e_charge.is_finite() && e_charge > 0.0) {
            return Err(param("e_charge", "must be positive and finite"));
        }
        if !(gamma_d_extra.is_finite() && gamma_d_extra >= 0.0) {
            return Err(param("gamma_d_extra", "must be non-negative and finite"));
        }
        Ok(Self {
            i1,
            i2,
            s_i,
            e_charge,
            gamma_d_extra,
        })
    }

    /// Ideal detector with unit charge.
    pub fn ideal(i1: f64, i2: f64, s_i: f64) -> Result<Self> {
        Self::new(i1, i2, s_i, 1.0, 0.0)
    }

    pub fn with_extra_dephasing(mut self, gamma_d_extra: f64) -> Result<Self> {
        if !(gamma_d_extra.is_finite() && gamma_d_extra >= 0.0) {
            return Err(param("gamma_d_extra", "must be non-negative and finite"));
        }
        self.gamma_d_extra = gamma_d_extra;
        Ok(self)
    }

    pub fn delta_i(&self) -> f64 {
        self.i2 - self.i1
    }

    pub fn i0(&self) -> f64 {
        0.5 * (self.i1 + self.i2)
    }

    pub fn current(&self, dot: Dot) -> f64 {
        match dot {
            Dot::One => self.i1,
            Dot::Two => self.i2,
        }
    }

    /// Information-limited dephasing rate `(ΔI)²/(4 S_I)`.
    pub fn measurement_rate(&self) -> f64 {
        let d = self.delta_i();
        d * d / (4.0 * self.s_i)
    }

    /// Total ensemble dephasing rate `Γ_d = (ΔI)²/(4 S_I) + γ_d`.
    pub fn decoherence_rate(&self) -> f64 {
        self.measurement_rate() + self.gamma_d_extra
    }

    /// `τ_loc = 2 S_I/(ΔI)²`; infinite when the detector does not respond.
    pub fn tau_loc(&self) -> f64 {
        let d = self.delta_i();
        2.0 * self.s_i / (d * d)
    }

    /// Time to separate the two outcome Gaussians by two standard deviations.
    /// Same value as [`tau_loc`](Self::tau_loc).
    pub fn tau_dis(&self) -> f64 {
        self.tau_loc()
    }

    pub fn tau_d(&self) -> f64 {
        1.0 / self.decoherence_rate()
    }

    pub fn is_ideal(&self) -> bool {
        self.gamma_d_extra == 0.0
    }
}

/// Which dot the electron occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dot {
    One,
    Two,
}

/// `S_I = 2 e I0 (1 - T)` for a channel of transparency `T`.
pub fn schottky_s_i(i0: f64, e_charge: f64, transparency: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&transparency) {
        return Err(param(
            "transparency",
            format!("{transparency} outside [0, 1)"),
        ));
    }
    if !(i0.is_finite() && i0 > 0.0) {
        return Err(param("i0", "must be positive"));
    }
    if !(e_charge.is_finite() && e_charge > 0.0) {
        return Err(param("e_charge", "must be positive"));
    }
    Ok(2.0 * e_charge * i0 * (1.0 - transparency))
}

/// Dimensionless coupling `𝒞 = ħ (ΔI)²/(S_I H)`.
pub fn coupling_strength(ham: &QubitHamiltonian, det: &DetectorModel) -> Result<f64> {
    if ham.h_tunnel == 0.0 {
        return Err(Error::CouplingUndefined);
    }
    let d = det.delta_i();
    Ok(ham.hbar * d * d / (det.s_i * ham.h_tunnel))
}

/// Outcome of a "much less than" check. `value` is compared against `limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub check: &'static str,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

impl std::fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} ({} vs limit {})",
            self.check,
            if self.passed { "ok" } else { "WARNING" },
            self.value,
            self.limit
        )
    }
}

/// Weakly responding detector: `|ΔI|/I0 ≤ 0.1`.
pub fn validate_weak_coupling(det: &DetectorModel) -> ValidityReport {
    let ratio = det.delta_i().abs() / det.i0();
    ValidityReport {
        check: "weak coupling |dI|/I0",
        passed: ratio <= MUCH_LESS,
        value: ratio,
        limit: MUCH_LESS,
    }
}

/// Internal dynamics slow against the shot-noise bandwidth:
/// `Ω ≤ 0.1 S_I/e²`.
pub fn validate_low_frequency(ham: &QubitHamiltonian, det: &DetectorModel) -> ValidityReport {
    let omega = ham.rabi_frequency();
    let limit = MUCH_LESS * det.s_i / (det.e_charge * det.e_charge);
    ValidityReport {
        check: "low frequency Omega vs S_I/e^2",
        passed: omega <= limit,
        value: omega,
        limit,
    }
}

/// Integration grid plus the seed of the trajectory's random stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationGrid {
    pub dt: f64,
    pub t_final: f64,
    pub window: f64,
    pub seed: u64,
}

const GRID_TOL: f64 = 1e-9;

fn whole_ratio(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    let n = r.round();
    ((r - n).abs() <= GRID_TOL * n.max(1.0) && n >= 1.0).then_some(n as usize)
}

impl SimulationGrid {
    pub fn new(dt: f64, t_final: f64, window: f64, seed: u64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(param("dt", "must be positive"));
        }
        if !(t_final.is_finite() && t_final >= dt * (1.0 - GRID_TOL)) {
            return Err(param("t_final", "must be at least dt"));
        }
        if !(window.is_finite() && window >= dt * (1.0 - GRID_TOL)) {
            return Err(param("window", "must be at least dt"));
        }
        let per_window = whole_ratio(window, dt)
            .ok_or_else(|| param("window", "must be a whole multiple of dt"))?;
        let steps = whole_ratio(t_final, dt)
            .ok_or_else(|| param("t_final", "must be a whole multiple of dt"))?;
        if steps % per_window != 0 {
            return Err(param("t_final", "must be a whole number of windows"));
        }
        Ok(Self {
            dt,
            t_final,
            window,
            seed,
        })
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn steps_per_window(&self) -> usize {
        (self.window / self.dt).round() as usize
    }

    pub fn n_windows(&self) -> usize {
        self.n_steps() / self.steps_per_window()
    }

    /// Times at which states are sampled: every window boundary, including 0.
    pub fn sample_times(&self) -> Vec<f64> {
        (0..=self.n_windows())
            .map(|k| k as f64 * self.window)
            .collect()
    }
}

/// Window-averaged detector current.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub t0: f64,
    pub window: f64,
    pub samples: Vec<f64>,
}

impl MeasurementRecord {
    pub fn new(t0: f64, window: f64, samples: Vec<f64>) -> Result<Self> {
        if !(window.is_finite() && window > 0.0) {
            return Err(param("window", "must be positive"));
        }
        if !t0.is_finite() {
            return Err(param("t0", "must be finite"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(param("samples", "must be finite"));
        }
        Ok(Self {
            t0,
            window,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.window
    }

    pub fn window_start(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.window
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.samples.is_empty())
            .then(|| self.samples.iter().sum::<f64>() / self.samples.len() as f64)
    }
}
