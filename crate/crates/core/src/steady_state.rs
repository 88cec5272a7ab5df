//! Steady concentration profile: `d_ax C'' = v C' + k C^n` with the inlet
//! condition `C(0) = u + (d_ax / v) C'(0)` and `C'(l) = 0`.

use crate::error::{domain, DftrError, Result};
use crate::model::{Profile, ReactorParams, SpatialGrid};
use crate::operator::{build_generator, inlet_source_coefficient};
use crate::reaction::POSITIVE_FLOOR;
use crate::Real;

/// Target for the scaled Newton residual.
pub const NEWTON_TOLERANCE: f64 = 1e-10;
pub const NEWTON_MAX_ITERATIONS: usize = 100;
pub const NEWTON_MAX_HALVINGS: usize = 30;

/// Closed form for a first-order reaction,
/// `C(x) = c5 e^{(v+q)x/(2 d_ax)} + c6 e^{(v-q)x/(2 d_ax)}` with
/// `q = sqrt(v^2 + 4 d_ax k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSteadyState<T> {
    pub c5: T,
    pub c6: T,
    pub q: T,
    pub params: ReactorParams<T>,
    pub u_bar: T,
    // c5 * e^{q l / d_ax}; finite even when c5 underflows
    c5_scaled: T,
}

pub fn steady_state_analytic_n1<T: Real>(
    params: &ReactorParams<T>,
    u_bar: T,
) -> Result<AnalyticSteadyState<T>> {
    if !(u_bar >= T::zero() && u_bar.is_finite()) {
        return Err(domain("u_bar", u_bar, "inlet value must be non-negative"));
    }
    let (d, v, k, l) = (params.d_ax(), params.v(), params.k(), params.l());
    let q = (v * v + T::lit(4.0) * d * k).sqrt();
    let vp = v + q;
    let vm = v - q;
    // both coefficients share this denominator once e^{ql/d} is divided out
    let den = vp * vp - vm * vm * (-q * l / d).exp();
    let c6 = u_bar * T::two() * v * vp / den;
    let c5_scaled = -u_bar * T::two() * v * vm / den;
    let c5 = c5_scaled * (-q * l / d).exp();
    Ok(AnalyticSteadyState {
        c5,
        c6,
        q,
        params: *params,
        u_bar,
        c5_scaled,
    })
}

impl<T: Real> AnalyticSteadyState<T> {
    fn exponents(&self) -> (T, T) {
        let (d, v) = (self.params.d_ax(), self.params.v());
        ((v + self.q) / (T::two() * d), (v - self.q) / (T::two() * d))
    }

    fn growing_term(&self, x: T) -> T {
        let (d, v, l) = (self.params.d_ax(), self.params.v(), self.params.l());
        self.c5_scaled * (((v + self.q) * x - T::two() * self.q * l) / (T::two() * d)).exp()
    }

    pub fn eval(&self, x: T) -> T {
        let (_, r2) = self.exponents();
        self.growing_term(x) + self.c6 * (r2 * x).exp()
    }

    pub fn derivative(&self, x: T) -> T {
        let (r1, r2) = self.exponents();
        r1 * self.growing_term(x) + r2 * self.c6 * (r2 * x).exp()
    }

    pub fn sample(&self, grid: SpatialGrid<T>) -> Profile<T> {
        Profile::from_fn(grid, |x| self.eval(x))
    }
}

/// Discrete steady state on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateSolution<T> {
    pub profile: Profile<T>,
    /// Max-norm of the discrete residual divided by the inlet forcing.
    pub residual_norm: T,
    pub iterations: usize,
    /// Nodes with a negative concentration (reported, not corrected).
    pub negative_nodes: usize,
    pub u_bar: T,
}

fn power<T: Real>(c: T, n: T) -> T {
    c.max(T::zero()).powf(n)
}

/// Residual of `A_h C + b - k C^n`, where `A_h` is the zero-gain generator
/// and `b` carries the inlet concentration into row 0.
fn discrete_residual<T: Real>(
    matrix: &crate::tridiag::Tridiagonal<T>,
    c: &[T],
    source: T,
    params: &ReactorParams<T>,
) -> Vec<T> {
    let mut f = matrix.apply(c);
    f[0] = f[0] + source;
    for (fi, &ci) in f.iter_mut().zip(c) {
        *fi = *fi - params.k() * power(ci, params.n());
    }
    f
}

fn max_abs<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Damped Newton on the same finite-difference stencils the integrator uses,
/// so that `w = 0` is an equilibrium of the discrete deviation dynamics.
pub fn steady_state_numeric<T: Real>(
    params: &ReactorParams<T>,
    u_bar: T,
    grid: SpatialGrid<T>,
) -> Result<SteadyStateSolution<T>> {
    if !(u_bar > T::zero() && u_bar.is_finite()) {
        return Err(domain("u_bar", u_bar, "inlet value must be positive"));
    }
    let gen = build_generator(grid, params, T::zero())?;
    let matrix = gen.matrix();
    let source = inlet_source_coefficient(&grid, params) * u_bar;
    let scale = source.abs();
    let tol = T::lit(NEWTON_TOLERANCE);

    let mut c: Vec<T> = if (params.n() - T::one()).abs() < T::lit(1e-12) {
        steady_state_analytic_n1(params, u_bar)?
            .sample(grid)
            .into_values()
    } else {
        vec![u_bar; grid.num_nodes()]
    };
    let mut f = discrete_residual(matrix, &c, source, params);
    let mut norm = max_abs(&f) / scale;
    let mut iterations = 0;

    while !(norm <= tol) {
        if iterations == NEWTON_MAX_ITERATIONS || !norm.is_finite() {
            return Err(DftrError::SolverFailure {
                iterations,
                residual: norm.as_f64(),
            });
        }
        iterations += 1;
        let mut jac = matrix.clone();
        let slope: Vec<T> = c
            .iter()
            .map(|&ci| {
                let base = ci.max(T::lit(POSITIVE_FLOOR));
                -params.k() * params.n() * base.powf(params.n() - T::one())
            })
            .collect();
        jac.add_diagonal(&slope);
        let neg_f: Vec<T> = f.iter().map(|&v| -v).collect();
        let delta = jac.solve(&neg_f).map_err(|_| DftrError::SolverFailure {
            iterations,
            residual: norm.as_f64(),
        })?;

        let mut step = T::one();
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let trial: Vec<T> = c
                .iter()
                .zip(&delta)
                .map(|(&ci, &di)| ci + step * di)
                .collect();
            let f_trial = discrete_residual(matrix, &trial, source, params);
            let trial_norm = max_abs(&f_trial) / scale;
            if trial_norm < norm {
                c = trial;
                f = f_trial;
                norm = trial_norm;
                accepted = true;
                break;
            }
            step = step * T::half();
        }
        if !accepted {
            return Err(DftrError::SolverFailure {
                iterations,
                residual: norm.as_f64(),
            });
        }
    }

    let negative_nodes = c.iter().filter(|&&ci| ci < T::zero()).count();
    Ok(SteadyStateSolution {
        profile: Profile::new(grid, c)?,
        residual_norm: norm,
        iterations,
        negative_nodes,
        u_bar,
    })
}

/// Max interior defect of `d_ax C'' - v C' - k C^n` (central differences)
/// plus the inlet and outlet boundary defects (second-order one-sided
/// derivatives).
pub fn steady_state_residual<T: Real>(
    profile: &Profile<T>,
    params: &ReactorParams<T>,
    u_bar: T,
) -> T {
    let c = profile.values();
    let h = profile.grid().spacing();
    let (d, v, k, n) = (params.d_ax(), params.v(), params.k(), params.n());
    let interior = c
        .windows(3)
        .map(|w| {
            let second = (w[2] - T::two() * w[1] + w[0]) / (h * h);
            let first = (w[2] - w[0]) / (T::two() * h);
            (d * second - v * first - k * power(w[1], n)).abs()
        })
        .fold(T::zero(), T::max);
    let last = c.len() - 1;
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let inlet_slope = (-three * c[0] + four * c[1] - c[2]) / (T::two() * h);
    let outlet_slope = (three * c[last] - four * c[last - 1] + c[last - 2]) / (T::two() * h);
    let inlet = (c[0] - u_bar - d / v * inlet_slope).abs();
    interior + inlet + outlet_slope.abs()
}
