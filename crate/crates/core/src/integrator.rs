//! Crank–Nicolson time stepping of the closed-loop deviation equation
//! `w_t = A_h w + r(w)`, where the feedback gain enters through the inlet row
//! of `A_h`.

use crate::analysis::{energy, weighted_norm, WeightFunction};
use crate::error::{DftrError, Result};
use crate::model::{FeedbackLaw, Profile, ReactorParams, SpatialGrid};
use crate::operator::{build_generator, DiscreteGenerator};
use crate::reaction::{reaction_slope, reaction_vector};
use crate::steady_state::SteadyStateSolution;
use crate::tridiag::Tridiagonal;
use crate::Real;

/// Concentrations below `-NEGATIVITY_TOLERANCE` count as negativity events.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

/// How the reaction term enters each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReactionTreatment {
    /// Reaction linearised about the current state and its Jacobian diagonal
    /// moved to the implicit side.
    #[default]
    LinearlyImplicit,
    /// Explicit Adams–Bashforth extrapolation `3/2 r(w^k) - 1/2 r(w^{k-1})`.
    Extrapolated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig<T> {
    pub params: ReactorParams<T>,
    pub law: FeedbackLaw<T>,
    pub grid: SpatialGrid<T>,
    pub dt: T,
    pub record_every: usize,
    /// Count nodes where `w + C` drops below zero.
    pub clamp_monitor: bool,
    pub reaction: ReactionTreatment,
    /// Weight used for the recorded energies.
    pub weight: WeightFunction<T>,
}

impl<T: Real> SimulationConfig<T> {
    /// Number of steps to `params.t_final`; rejects horizons that are not a
    /// whole number of steps.
    pub fn num_steps(&self) -> Result<usize> {
        let dt = self.dt;
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(DftrError::Contract(format!(
                "time step {} must be positive",
                dt.as_f64()
            )));
        }
        if self.record_every == 0 {
            return Err(DftrError::Contract(
                "record_every must be at least 1".into(),
            ));
        }
        let horizon = self.params.t_final();
        let ratio = horizon / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > T::lit(1e-9) * ratio.max(T::one()) {
            return Err(DftrError::Contract(format!(
                "horizon {} is not a whole number of steps of {}",
                horizon.as_f64(),
                dt.as_f64()
            )));
        }
        steps
            .to_usize()
            .ok_or_else(|| DftrError::Contract("step count out of range".into()))
    }

    fn check(&self, steady: &SteadyStateSolution<T>, state: &Profile<T>) -> Result<()> {
        if steady.profile.grid() != &self.grid || state.grid() != &self.grid {
            return Err(DftrError::Contract(
                "state and steady profile must live on the configured grid".into(),
            ));
        }
        if self.weight.profile.grid() != &self.grid {
            return Err(DftrError::Contract(
                "weight profile is on a different grid".into(),
            ));
        }
        Ok(())
    }
}

/// Stateful stepper; remembers the previous reaction vector for the
/// extrapolated treatment.
#[derive(Debug, Clone)]
pub struct Stepper<'a, T> {
    generator: DiscreteGenerator<T>,
    steady: &'a [T],
    dt: T,
    treatment: ReactionTreatment,
    previous_reaction: Option<Vec<T>>,
    // I - dt/2 A_h, reused when the reaction is explicit
    implicit_base: Tridiagonal<T>,
    explicit_base: Tridiagonal<T>,
    steps_taken: usize,
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(config: &SimulationConfig<T>, steady: &'a SteadyStateSolution<T>) -> Result<Self> {
        if steady.profile.grid() != &config.grid {
            return Err(DftrError::Contract(
                "steady profile is on a different grid".into(),
            ));
        }
        let generator = build_generator(config.grid, &config.params, config.law.alpha())?;
        let half_dt = config.dt * T::half();
        let implicit_base = generator.matrix().affine(-half_dt, T::one());
        let explicit_base = generator.matrix().affine(half_dt, T::one());
        Ok(Self {
            generator,
            steady: steady.profile.values(),
            dt: config.dt,
            treatment: config.reaction,
            previous_reaction: None,
            implicit_base,
            explicit_base,
            steps_taken: 0,
        })
    }

    pub fn generator(&self) -> &DiscreteGenerator<T> {
        &self.generator
    }

    pub fn advance(&mut self, state: &Profile<T>) -> Result<Profile<T>> {
        self.generator.check_grid(state)?;
        let step_index = self.steps_taken + 1;
        let params = *self.generator.params();
        let w = state.values();
        let reaction = reaction_vector(w, self.steady, &params);
        let mut rhs = self.explicit_base.apply(w);
        let dt = self.dt;
        let half_dt = dt * T::half();

        let solved = match self.treatment {
            ReactionTreatment::LinearlyImplicit => {
                let slope: Vec<T> = w
                    .iter()
                    .zip(self.steady)
                    .map(|(&wi, &ci)| reaction_slope(wi, ci, &params))
                    .collect();
                for i in 0..rhs.len() {
                    rhs[i] = rhs[i] + dt * reaction[i] - half_dt * slope[i] * w[i];
                }
                let mut lhs = self.implicit_base.clone();
                let shift: Vec<T> = slope.iter().map(|&s| -half_dt * s).collect();
                lhs.add_diagonal(&shift);
                lhs.solve(&rhs)
            }
            ReactionTreatment::Extrapolated => {
                let prev = self.previous_reaction.as_ref().unwrap_or(&reaction);
                let a = T::lit(1.5);
                for i in 0..rhs.len() {
                    rhs[i] = rhs[i] + dt * (a * reaction[i] - T::half() * prev[i]);
                }
                self.implicit_base.solve(&rhs)
            }
        };
        let next = solved.map_err(|_| DftrError::IntegrationFailure { step: step_index })?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(DftrError::IntegrationFailure { step: step_index });
        }
        self.previous_reaction = Some(reaction);
        self.steps_taken = step_index;
        Ok(Profile::from_raw(*state.grid(), next))
    }
}

/// One step from `state` with no history, i.e. the first step of a run.
pub fn step<T: Real>(
    state: &Profile<T>,
    steady: &SteadyStateSolution<T>,
    config: &SimulationConfig<T>,
) -> Result<Profile<T>> {
    if !state.values().iter().all(|v| v.is_finite()) {
        return Err(DftrError::IntegrationFailure { step: 0 });
    }
    config.check(steady, state)?;
    Stepper::new(config, steady)?.advance(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub profiles: Vec<Profile<T>>,
    /// `alpha * w(0, t)` at each recorded time.
    pub control: Vec<T>,
    pub energy: Vec<T>,
    /// Weighted norm `||w||_rho` at each recorded time.
    pub norm_rho: Vec<T>,
    /// Node-steps at which `w + C < -1e-12` (zero unless monitoring is on).
    pub negativity_events: usize,
    pub params: ReactorParams<T>,
    pub alpha: T,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn final_profile(&self) -> &Profile<T> {
        self.profiles
            .last()
            .expect("trajectory holds the initial record")
    }
}

/// Runs to `config.params.t_final`, recording every `record_every` steps and
/// always the final state.
pub fn simulate<T: Real>(
    config: &SimulationConfig<T>,
    steady: &SteadyStateSolution<T>,
    w0: &Profile<T>,
) -> Result<Trajectory<T>> {
    config.check(steady, w0)?;
    if !w0.values().iter().all(|v| v.is_finite()) {
        return Err(DftrError::IntegrationFailure { step: 0 });
    }
    let steps = config.num_steps()?;
    let mut stepper = Stepper::new(config, steady)?;
    let alpha = config.law.alpha();
    let floor = -T::lit(NEGATIVITY_TOLERANCE);
    let c_bar = steady.profile.values();
    let count_negative = |w: &Profile<T>| {
        if config.clamp_monitor {
            w.values()
                .iter()
                .zip(c_bar)
                .filter(|(&wi, &ci)| wi + ci < floor)
                .count()
        } else {
            0
        }
    };

    let capacity = steps / config.record_every + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        profiles: Vec::with_capacity(capacity),
        control: Vec::with_capacity(capacity),
        energy: Vec::with_capacity(capacity),
        norm_rho: Vec::with_capacity(capacity),
        negativity_events: count_negative(w0),
        params: config.params,
        alpha,
    };
    let record = |traj: &mut Trajectory<T>, t: T, w: &Profile<T>| -> Result<()> {
        traj.times.push(t);
        traj.control.push(alpha * w.first());
        traj.energy.push(energy(w, &config.weight)?);
        traj.norm_rho.push(weighted_norm(w, &config.weight)?);
        traj.profiles.push(w.clone());
        Ok(())
    };
    record(&mut traj, T::zero(), w0)?;

    let mut state = w0.clone();
    for j in 1..=steps {
        state = stepper.advance(&state)?;
        traj.negativity_events += count_negative(&state);
        if j % config.record_every == 0 || j == steps {
            let t = config.dt * T::from_usize_lossy(j);
            record(&mut traj, t, &state)?;
        }
    }
    Ok(traj)
}
