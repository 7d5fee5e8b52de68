//! Ensemble-averaged evolution with a single dephasing channel:
//!
//! ```text
//! dσ11/dt = (iH/ħ)(σ12 - σ21)
//! dσ12/dt = (iε/ħ)σ12 + (iH/ħ)(σ11 - σ22) - Γ_d σ12
//! ```
//!
//! Expanded with `σ12 = a + ib` this reads
//! `dσ11/dt = -2(H/ħ) b`, `da/dt = -(ε/ħ) b - Γ_d a`,
//! `db/dt = (ε/ħ) a + (H/ħ)(2σ11 - 1) - Γ_d b`,
//! the same convention as the Bloch rotation in [`crate::model`].

use num_complex::Complex64;

use crate::error::{param, Result};
use crate::model::{ConditionedState, QubitHamiltonian, SimulationGrid};

/// Density matrix of the unconditioned ensemble. Same layout and invariants
/// as [`ConditionedState`]; mixed states down to purity 1/2 are expected.
pub type MasterState = ConditionedState;

/// Time derivative `(dσ11, d Re σ12, d Im σ12)`.
pub fn rhs(state: &MasterState, ham: &QubitHamiltonian, gamma_d: f64) -> [f64; 3] {
    derivative([state.s11(), state.s12_re(), state.s12_im()], ham, gamma_d)
}

fn derivative(y: [f64; 3], ham: &QubitHamiltonian, gamma_d: f64) -> [f64; 3] {
    let h = ham.h_tunnel / ham.hbar;
    let e = ham.epsilon / ham.hbar;
    let [s11, a, b] = y;
    [
        -2.0 * h * b,
        -e * b - gamma_d * a,
        e * a + h * (2.0 * s11 - 1.0) - gamma_d * b,
    ]
}

fn rk4(y: [f64; 3], dt: f64, ham: &QubitHamiltonian, gamma_d: f64) -> [f64; 3] {
    let f = |y: [f64; 3]| derivative(y, ham, gamma_d);
    let add =
        |y: [f64; 3], k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    let k1 = f(y);
    let k2 = f(add(y, k1, 0.5 * dt));
    let k3 = f(add(y, k2, 0.5 * dt));
    let k4 = f(add(y, k3, dt));
    std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub times: Vec<f64>,
    pub states: Vec<MasterState>,
    /// Largest componentwise difference against a run at `dt/2`.
    pub error_estimate: f64,
}

fn integrate(
    initial: &MasterState,
    ham: &QubitHamiltonian,
    gamma_d: f64,
    dt: f64,
    per_window: usize,
    n_windows: usize,
) -> Vec<[f64; 3]> {
    let mut y = [initial.s11(), initial.s12_re(), initial.s12_im()];
    let mut out = Vec::with_capacity(n_windows + 1);
    out.push(y);
    for _ in 0..n_windows {
        for _ in 0..per_window {
            y = rk4(y, dt, ham, gamma_d);
        }
        out.push(y);
    }
    out
}

/// Fixed-step RK4 on the grid's `dt`, sampled at every window boundary.
pub fn solve(
    initial: &MasterState,
    ham: &QubitHamiltonian,
    gamma_d: f64,
    grid: &SimulationGrid,
) -> Result<MasterSolution> {
    if !(gamma_d.is_finite() && gamma_d >= 0.0) {
        return Err(param("gamma_d", "must be non-negative"));
    }
    let per_window = grid.steps_per_window();
    let n_windows = grid.n_windows();
    let coarse = integrate(initial, ham, gamma_d, grid.dt, per_window, n_windows);
    let fine = integrate(
        initial,
        ham,
        gamma_d,
        0.5 * grid.dt,
        2 * per_window,
        n_windows,
    );
    let error_estimate = coarse
        .iter()
        .zip(&fine)
        .flat_map(|(a, b)| (0..3).map(move |i| (a[i] - b[i]).abs()))
        .fold(0.0, f64::max);
    let states = coarse
        .into_iter()
        .map(|[s11, a, b]| ConditionedState::raw(s11.clamp(0.0, 1.0), Complex64::new(a, b)))
        .collect();
    Ok(MasterSolution {
        times: grid.sample_times(),
        states,
        error_estimate,
    })
}

/// Closed form for `H = 0`: `σ11` constant, `σ12(t) = σ12(0) exp(iεt/ħ - Γ_d t)`.
pub fn closed_form_h0(
    initial: &MasterState,
    epsilon: f64,
    hbar: f64,
    gamma_d: f64,
    t: f64,
) -> MasterState {
    let factor = Complex64::from_polar((-gamma_d * t).exp(), epsilon * t / hbar);
    ConditionedState::raw(initial.s11(), initial.s12() * factor)
}
