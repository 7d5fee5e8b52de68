//! Monte-Carlo checks that span several modules.

use dqdmeas_core::analysis::{
    cumulative_average, current_distribution, ensemble, localization_time_estimate, map_ensemble,
};
use dqdmeas_core::master;
use dqdmeas_core::trajectory::purify_from_mixed;
use dqdmeas_core::{
    ConditionedState, DetectorModel, EnsembleSummary, QubitHamiltonian, SimulationGrid,
};

fn assert_matches_master(
    s: &EnsembleSummary,
    m: &dqdmeas_core::MasterSolution,
    n: usize,
    every: usize,
) {
    for k in (every..s.checkpoints.len()).step_by(every) {
        let ms = &m.states[k];
        for (label, stats, target) in [
            ("s11", &s.s11, ms.s11()),
            ("s12_re", &s.s12_re, ms.s12_re()),
            ("s12_im", &s.s12_im, ms.s12_im()),
        ] {
            let se = stats.std_error(k, n).max(1e-12);
            let z = (stats.mean[k] - target).abs() / se;
            assert!(z <= 4.0, "{label} at t = {}: z = {z}", s.checkpoints[k]);
        }
    }
}

#[test]
fn uncoupled_ensemble_matches_closed_form() {
    let det = DetectorModel::ideal(10.0, 11.0, 1.0).unwrap();
    let ham = QubitHamiltonian::new(0.5, 0.0, 1.0).unwrap();
    let initial = ConditionedState::new(0.7, 0.3, 0.2).unwrap();
    let grid = SimulationGrid::new(0.005, 8.0, 0.8, 3).unwrap();
    let n = 10_000;
    let s = ensemble(&initial, &ham, &det, &grid, n, 3).unwrap();
    let m = master::solve(&initial, &ham, det.decoherence_rate(), &grid).unwrap();
    for (k, &t) in s.checkpoints.iter().enumerate() {
        let c = master::closed_form_h0(&initial, 0.5, 1.0, det.decoherence_rate(), t);
        assert!((c.s12_re() - m.states[k].s12_re()).abs() < 1e-8);
    }
    assert_matches_master(&s, &m, n, 1);
}

#[test]
fn nonideal_ensemble_matches_total_dephasing() {
    let det = DetectorModel::ideal(10.0, 11.0, 1.0 / 3.0)
        .unwrap()
        .with_extra_dephasing(0.4)
        .unwrap();
    let ham = QubitHamiltonian::new(1.0, 1.0, 1.0).unwrap();
    let initial = ConditionedState::dot1();
    let grid = SimulationGrid::new(0.002, 6.0, 0.6, 5).unwrap();
    let n = 4_000;
    let s = ensemble(&initial, &ham, &det, &grid, n, 5).unwrap();
    let m = master::solve(&initial, &ham, det.decoherence_rate(), &grid).unwrap();
    assert_matches_master(&s, &m, n, 1);
    // Extra dephasing keeps the conditioned state mixed.
    assert!(s.mean_purity.last().unwrap() < &0.99);
}

fn fitted_tau(i2: f64, dt: f64, window: f64) -> (f64, f64) {
    let det = DetectorModel::ideal(20.0, i2, 1.0).unwrap();
    let grid = SimulationGrid::new(dt, 3.0 * det.tau_loc(), window, 11).unwrap();
    let initial = ConditionedState::pure(0.5).unwrap();
    let s = ensemble(
        &initial,
        &QubitHamiltonian::uncoupled(),
        &det,
        &grid,
        10_000,
        11,
    )
    .unwrap();
    let fit = localization_time_estimate(&s, &det);
    (fit.fitted.expect("fit failed"), fit.analytic)
}

#[test]
fn localization_time_fit() {
    let (slow, analytic) = fitted_tau(21.0, 0.005, 0.05);
    assert_eq!(analytic, 2.0);
    assert!((slow - analytic).abs() <= 0.25 * analytic, "fitted {slow}");
    let (fast, _) = fitted_tau(22.0, 0.00125, 0.0125);
    let ratio = slow / fast;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn localized_currents_are_bimodal() {
    let det = DetectorModel::ideal(10.0, 11.0, 1.0).unwrap();
    let ham = QubitHamiltonian::uncoupled();
    let grid = SimulationGrid::new(0.005, 20.0, 0.5, 21).unwrap();
    let records = map_ensemble(
        &ConditionedState::mixed(0.5).unwrap(),
        &ham,
        &det,
        &grid,
        2_000,
        |r| r.record,
    )
    .unwrap();
    // Window of 10 after localization: the standard deviation is sqrt(S_I/20) ≈ 0.22.
    let h = current_distribution(&records, 10.0, 10.0, 9.0, 12.0, 60).unwrap();
    assert_eq!(h.total(), 2_000);
    let near1 = h.mass_between(9.6, 10.4);
    let near2 = h.mass_between(10.6, 11.4);
    let middle = h.mass_between(10.45, 10.55);
    assert!(near1 > 0.4 && near2 > 0.4, "{near1} {near2}");
    assert!(middle < 0.05, "{middle}");

    let records = map_ensemble(&ConditionedState::dot1(), &ham, &det, &grid, 500, |r| {
        r.record
    })
    .unwrap();
    let h = current_distribution(&records, 10.0, 10.0, 9.0, 12.0, 60).unwrap();
    assert!(h.mass_between(9.4, 10.6) > 0.99);
}

#[test]
fn cumulative_average_settles_on_one_current() {
    let det = DetectorModel::ideal(10.0, 11.0, 1.0).unwrap();
    let grid = SimulationGrid::new(0.01, 400.0, 1.0, 0).unwrap();
    let finals = map_ensemble(
        &ConditionedState::pure(0.5).unwrap(),
        &QubitHamiltonian::uncoupled(),
        &det,
        &grid,
        40,
        |r| {
            (
                *cumulative_average(&r.record)
                    .unwrap()
                    .samples
                    .last()
                    .unwrap(),
                r.final_state().s11(),
            )
        },
    )
    .unwrap();
    for (i_mean, s11) in finals {
        // sqrt(S_I/(2T)) ≈ 0.035 around the occupied dot's current.
        let target = if s11 > 0.5 { 10.0 } else { 11.0 };
        assert!((i_mean - target).abs() < 0.2, "{i_mean} vs {target}");
    }
}

#[test]
fn measurement_purifies_mixed_state() {
    let det = DetectorModel::ideal(10.0, 11.0, 1.0).unwrap();
    let ham = QubitHamiltonian::uncoupled();
    let grid = SimulationGrid::new(0.005, 20.0, 0.5, 8).unwrap();
    let r = purify_from_mixed(&det, &ham, &grid).unwrap();
    assert!(r.final_state().purity() > 0.99);

    let blind = DetectorModel::ideal(10.0, 10.0, 1.0).unwrap();
    let r = purify_from_mixed(&blind, &ham, &grid).unwrap();
    assert!((r.final_state().purity() - 0.5).abs() < 1e-15);

    let leaky = det.with_extra_dephasing(0.1).unwrap();
    assert!(purify_from_mixed(&leaky, &ham, &grid).is_err());
}
