mod common;

use common::{config, relative_l2, start, ALPHA_VALUES, N_VALUES};
use dftr_core::{
    build_generator, duhamel_oracle, simulate, steady_state_numeric, Profile, ReactionTreatment,
};

#[test]
fn zero_deviation_is_preserved_in_every_cell() {
    for n in N_VALUES {
        for alpha in ALPHA_VALUES {
            let mut cfg = config(n, alpha, 201, 0.1, 400.0);
            cfg.record_every = 100;
            let (steady, _) = start(&cfg);
            let traj = simulate(&cfg, &steady, &Profile::zeros(cfg.grid)).unwrap();
            let worst = traj
                .profiles
                .iter()
                .map(|p| p.max_abs())
                .fold(0.0, f64::max);
            assert!(worst <= 1e-9, "n={n} alpha={alpha}: {worst:e}");
        }
    }
}

#[test]
fn zero_horizon_records_only_initial_state() {
    let cfg = config(1.0, 0.0, 51, 0.1, 0.0);
    let (steady, w0) = start(&cfg);
    let traj = simulate(&cfg, &steady, &w0).unwrap();
    assert_eq!(traj.times, vec![0.0]);
    assert_eq!(traj.profiles[0], w0);
}

fn final_state(dt: f64, treatment: ReactionTreatment) -> Profile<f64> {
    let mut cfg = config(1.0, 0.0, 201, dt, 100.0);
    cfg.record_every = usize::MAX;
    cfg.reaction = treatment;
    let (steady, w0) = start(&cfg);
    simulate(&cfg, &steady, &w0)
        .unwrap()
        .final_profile()
        .clone()
}

#[test]
fn step_halving_shows_second_order_in_time() {
    for treatment in [
        ReactionTreatment::LinearlyImplicit,
        ReactionTreatment::Extrapolated,
    ] {
        let coarse = final_state(0.2, treatment);
        let mid = final_state(0.1, treatment);
        let fine = final_state(0.05, treatment);
        let ratio = coarse.sub(&mid).unwrap().l2_norm() / mid.sub(&fine).unwrap().l2_norm();
        assert!(ratio >= 3.4, "{treatment:?}: ratio {ratio}");
    }
}

#[test]
fn profile_near_steady_state_at_final_time() {
    let mut cfg = config(1.0, 0.0, 201, 0.1, 400.0);
    cfg.record_every = 4000;
    let (steady, w0) = start(&cfg);
    let traj = simulate(&cfg, &steady, &w0).unwrap();
    let ratio = traj.final_profile().max_abs() / w0.max_abs();
    assert!(ratio < 0.15, "{ratio}");
    assert_eq!(traj.negativity_events, 0);
}

fn oracle_gap(k_zero: bool) -> f64 {
    let mut cfg = config(1.0, 0.0, 51, 0.1, 50.0);
    if k_zero {
        cfg.params = cfg.params.with_k(0.0).unwrap();
    }
    let (steady, w0) = start(&cfg);
    let traj = simulate(&cfg, &steady, &w0).unwrap();
    let gen = build_generator(cfg.grid, &cfg.params, 0.0).unwrap();
    let mild = duhamel_oracle(&gen, &w0, &steady, 50.0, 500).unwrap();
    relative_l2(traj.final_profile(), &mild)
}

#[test]
fn time_stepping_matches_mild_solution() {
    let nonlinear = oracle_gap(false);
    assert!(nonlinear <= 1e-2, "{nonlinear:e}");
    let linear = oracle_gap(true);
    assert!(linear <= 1e-4, "{linear:e}");
}

#[test]
fn mild_solution_composes_over_split_intervals() {
    let cfg = config(2.0, 0.25, 31, 0.1, 40.0);
    let (steady, w0) = start(&cfg);
    let gen = build_generator(cfg.grid, &cfg.params, 0.25).unwrap();
    let whole = duhamel_oracle(&gen, &w0, &steady, 40.0, 400).unwrap();
    let half = duhamel_oracle(&gen, &w0, &steady, 20.0, 200).unwrap();
    let chained = duhamel_oracle(&gen, &half, &steady, 20.0, 200).unwrap();
    let gap = relative_l2(&chained, &whole);
    assert!(gap < 1e-9, "{gap:e}");
}

#[test]
fn energy_monotone_for_admissible_weights_at_corner_cells() {
    for (n, alpha) in [(0.5, 0.0), (10.0, 0.5)] {
        for fraction in [0.25, 0.5, 0.75] {
            let mut cfg = config(n, alpha, 201, 1.0, 2000.0);
            let gamma = fraction * cfg.params.v() / cfg.params.d_ax();
            cfg.weight = dftr_core::weight_profile(cfg.grid, 1.0, gamma).unwrap();
            let (steady, w0) = start(&cfg);
            let traj = simulate(&cfg, &steady, &w0).unwrap();
            for (j, e) in traj.energy.windows(2).enumerate() {
                assert!(
                    e[1] <= e[0] * (1.0 + 1e-10),
                    "n={n} alpha={alpha} gamma={gamma} record {j}"
                );
            }
        }
    }
}

#[test]
fn control_signal_decays_for_second_order_half_gain() {
    let cfg = config(2.0, 0.5, 201, 0.1, 400.0);
    let (steady, w0) = start(&cfg);
    let traj = simulate(&cfg, &steady, &w0).unwrap();
    let u = &traj.control;
    assert!(u[0] > 0.0);
    // envelope over 100 s windows shrinks
    let window_max: Vec<f64> = u
        .chunks(1000)
        .map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    for w in window_max.windows(2) {
        assert!(w[1] < w[0], "{window_max:?}");
    }
    assert!(u.last().unwrap().abs() < 0.2 * u[0]);
}

#[test]
fn explicit_reaction_blows_up_where_linearised_one_does_not() {
    // stiff high-order reaction; a saturation bound this large never binds
    let mut cfg = config(10.0, 0.5, 51, 5.0, 2000.0);
    cfg.params = cfg.params.with_k(2.0).unwrap().with_sat_m(1e300).unwrap();
    let steady = steady_state_numeric(&cfg.params, 1.0, cfg.grid).unwrap();
    let w0 = dftr_core::initial_profile(cfg.grid, &cfg.params, &cfg.law)
        .unwrap()
        .scaled(3.0);
    cfg.reaction = ReactionTreatment::LinearlyImplicit;
    let ok = simulate(&cfg, &steady, &w0);
    cfg.reaction = ReactionTreatment::Extrapolated;
    let bad = simulate(&cfg, &steady, &w0);
    assert!(ok.is_ok());
    assert!(matches!(
        bad,
        Err(dftr_core::DftrError::IntegrationFailure { .. })
    ));
}
