//! Simulation and stability analysis of a dispersed-flow tubular reactor
//! with an `n`-th order reaction and proportional boundary feedback at the
//! inlet.
//!
//! The reactor concentration is written as a deviation `w = C - C_steady`
//! from the steady profile, which obeys
//!
//! ```text
//! w_t = d_ax w_xx - v w_x + k C^n - k (Sat_M(w) + C)^n
//! (1 - alpha) w(0, t) = (d_ax / v) w_x(0, t),   w_x(l, t) = 0
//! ```
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` and `*32`
//! aliases below fix the scalar.

mod scalar;

pub mod analysis;
pub mod dense;
pub mod error;
pub mod integrator;
pub mod model;
pub mod operator;
pub mod reaction;
pub mod steady_state;
pub mod tridiag;

pub use scalar::Real;

pub use analysis::{
    decay_diagnostics, decay_fit, energy, estimate_decay_rate, sweep, weight_profile,
    weighted_norm, CellProvenance, DecayEstimate, SweepCell, SweepOptions, SweepResult,
    WeightFunction,
};
pub use error::{DftrError, Result};
pub use integrator::{simulate, step, ReactionTreatment, SimulationConfig, Stepper, Trajectory};
pub use model::{
    d_ax_from_peclet, default_saturation_bound, initial_deviation, initial_profile,
    lambda_theoretical, saturate, FeedbackLaw, Profile, ReactorParams, SpatialGrid,
};
pub use operator::{
    build_generator, dissipativity_form, duhamel_oracle, resolvent_analytic, resolvent_discrete,
    DiscreteGenerator, DissipativityReport, ResolventSolution,
};
pub use reaction::{reaction_rate, reaction_slope};
pub use steady_state::{
    steady_state_analytic_n1, steady_state_numeric, steady_state_residual, AnalyticSteadyState,
    SteadyStateSolution,
};

pub type ReactorParams64 = ReactorParams<f64>;
pub type FeedbackLaw64 = FeedbackLaw<f64>;
pub type SpatialGrid64 = SpatialGrid<f64>;
pub type Profile64 = Profile<f64>;
pub type DiscreteGenerator64 = DiscreteGenerator<f64>;
pub type SteadyStateSolution64 = SteadyStateSolution<f64>;
pub type SimulationConfig64 = SimulationConfig<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type WeightFunction64 = WeightFunction<f64>;
pub type SweepResult64 = SweepResult<f64>;

pub type ReactorParams32 = ReactorParams<f32>;
pub type SpatialGrid32 = SpatialGrid<f32>;
pub type Profile32 = Profile<f32>;
pub type SimulationConfig32 = SimulationConfig<f32>;
pub type Trajectory32 = Trajectory<f32>;
