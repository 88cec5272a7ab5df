#![allow(dead_code)]

use dftr_core::{
    initial_profile, steady_state_numeric, weight_profile, FeedbackLaw, Profile, ReactionTreatment,
    ReactorParams, SimulationConfig, SpatialGrid, SteadyStateSolution,
};

pub const N_VALUES: [f64; 4] = [0.5, 1.0, 2.0, 10.0];
pub const ALPHA_VALUES: [f64; 3] = [0.0, 0.25, 0.5];

pub fn reference() -> ReactorParams<f64> {
    ReactorParams::reference_case()
}

pub fn config(n: f64, alpha: f64, nodes: usize, dt: f64, t_final: f64) -> SimulationConfig<f64> {
    let params = reference()
        .with_n(n)
        .unwrap()
        .with_t_final(t_final)
        .unwrap();
    let grid = SpatialGrid::new(params.l(), nodes).unwrap();
    let gamma = params.v() / (2.0 * params.d_ax());
    SimulationConfig {
        params,
        law: FeedbackLaw::new(alpha, 1.0).unwrap(),
        grid,
        dt,
        record_every: 1,
        clamp_monitor: true,
        reaction: ReactionTreatment::default(),
        weight: weight_profile(grid, 1.0, gamma).unwrap(),
    }
}

pub fn start(cfg: &SimulationConfig<f64>) -> (SteadyStateSolution<f64>, Profile<f64>) {
    let steady = steady_state_numeric(&cfg.params, cfg.law.u_bar(), cfg.grid).unwrap();
    let w0 = initial_profile(cfg.grid, &cfg.params, &cfg.law).unwrap();
    (steady, w0)
}

pub fn relative_l2(a: &Profile<f64>, b: &Profile<f64>) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

pub fn order(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect()
}
