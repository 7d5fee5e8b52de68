//! Finite-window Bayesian update of the conditioned state.
//!
//! Over a window of length `τ` the averaged current `⟨I⟩` is Gaussian around
//! `I1` or `I2` with variance `D = S_I/(2τ)`. The diagonal elements follow
//! Bayes' rule and the off-diagonal element is rescaled so that the
//! coherent fraction `|σ12|/sqrt(σ11 σ22)` is unchanged.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{param, Error, Result};
use crate::model::{ConditionedState, DetectorModel, Dot};

/// Current averaged over one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowOutcome {
    pub i_avg: f64,
    pub tau: f64,
}

impl WindowOutcome {
    pub fn new(i_avg: f64, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(param("tau", "must be positive"));
        }
        if !i_avg.is_finite() {
            return Err(param("i_avg", "must be finite"));
        }
        Ok(Self { i_avg, tau })
    }
}

/// Variance `D = S_I/(2τ)` of the window-averaged current.
pub fn window_variance(det: &DetectorModel, tau: f64) -> f64 {
    det.s_i / (2.0 * tau)
}

/// `P_i(⟨I⟩, τ)`: Gaussian density of the averaged current given the dot.
pub fn gaussian_likelihood(outcome: &WindowOutcome, dot: Dot, det: &DetectorModel) -> f64 {
    let d = window_variance(det, outcome.tau);
    let x = outcome.i_avg - det.current(dot);
    (2.0 * std::f64::consts::PI * d).powf(-0.5) * (-x * x / (2.0 * d)).exp()
}

/// Density of `⟨I⟩` for a given state: `σ11 P1 + σ22 P2`. Independent of `σ12`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDistribution {
    pub weight1: f64,
    pub i1: f64,
    pub i2: f64,
    pub variance: f64,
}

pub fn outcome_distribution(
    state: &ConditionedState,
    tau: f64,
    det: &DetectorModel,
) -> OutcomeDistribution {
    OutcomeDistribution {
        weight1: state.s11(),
        i1: det.i1,
        i2: det.i2,
        variance: window_variance(det, tau),
    }
}

impl OutcomeDistribution {
    pub fn pdf(&self, i_avg: f64) -> f64 {
        let norm = (2.0 * std::f64::consts::PI * self.variance).powf(-0.5);
        let g = |mu: f64| {
            let x = i_avg - mu;
            (-x * x / (2.0 * self.variance)).exp()
        };
        norm * (self.weight1 * g(self.i1) + (1.0 - self.weight1) * g(self.i2))
    }

    pub fn mean(&self) -> f64 {
        self.weight1 * self.i1 + (1.0 - self.weight1) * self.i2
    }

    pub fn variance(&self) -> f64 {
        let d = self.i2 - self.i1;
        self.variance + self.weight1 * (1.0 - self.weight1) * d * d
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mu = if u < self.weight1 { self.i1 } else { self.i2 };
        let z: f64 = rng.sample(StandardNormal);
        mu + self.variance.sqrt() * z
    }
}

/// Draw one window outcome for the given state: pick the dot with
/// probability `σ11`, then a Gaussian around its current.
pub fn sample_outcome<R: Rng + ?Sized>(
    state: &ConditionedState,
    tau: f64,
    det: &DetectorModel,
    rng: &mut R,
) -> Result<WindowOutcome> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(param("tau", "must be positive"));
    }
    let i_avg = outcome_distribution(state, tau, det).sample(rng);
    Ok(WindowOutcome { i_avg, tau })
}

/// `ln(P1/P2)` for the observed window average.
pub fn log_likelihood_ratio(outcome: &WindowOutcome, det: &DetectorModel) -> f64 {
    -(outcome.i_avg - det.i0()) * det.delta_i() * 2.0 * outcome.tau / det.s_i
}

pub(crate) fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Posterior occupation of dot 1, evaluated in log-odds form. The basis
/// states are fixed points.
pub fn bayes_diagonal(
    state: &ConditionedState,
    outcome: &WindowOutcome,
    det: &DetectorModel,
) -> f64 {
    shift_log_odds(state.s11(), log_likelihood_ratio(outcome, det))
}

pub(crate) fn shift_log_odds(s11: f64, llr: f64) -> f64 {
    if s11 <= 0.0 || s11 >= 1.0 || llr == 0.0 {
        return s11;
    }
    logistic(logit(s11) + llr)
}

/// Rescale `σ12` for a new diagonal, keeping its phase and coherent fraction.
pub fn update_offdiagonal(before: &ConditionedState, s11_after: f64) -> Result<Complex64> {
    let p_before = before.s11() * before.s22();
    if p_before <= 0.0 {
        if before.s12() == Complex64::new(0.0, 0.0) {
            return Ok(before.s12());
        }
        return Err(Error::InvalidState("nonzero s12 with s11 at 0 or 1".into()));
    }
    if s11_after == before.s11() {
        return Ok(before.s12());
    }
    let p_after = s11_after * (1.0 - s11_after);
    Ok(before.s12() * (p_after / p_before).sqrt())
}

/// Full measurement update for one window.
pub fn bayes_step(
    state: &ConditionedState,
    outcome: &WindowOutcome,
    det: &DetectorModel,
) -> Result<ConditionedState> {
    measure(state, log_likelihood_ratio(outcome, det))
}

/// Measurement update given the log-likelihood ratio directly.
pub(crate) fn measure(state: &ConditionedState, llr: f64) -> Result<ConditionedState> {
    let s11 = state.s11();
    if s11 <= 0.0 || s11 >= 1.0 {
        return Ok(*state);
    }
    let s11_new = shift_log_odds(s11, llr);
    let s12_new = update_offdiagonal(state, s11_new)?;
    Ok(ConditionedState::raw(s11_new, s12_new))
}
