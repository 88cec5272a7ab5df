//! Mild (Duhamel) form of the semi-discrete problem,
//! `xi(t) = e^{t A_h} w0 + int_0^t e^{(t-s) A_h} r(xi(s)) ds`, evaluated by
//! Picard iteration with the trapezoidal rule in `s` and a dense exponential.

use super::DiscreteGenerator;
use crate::dense::DenseMatrix;
use crate::error::{DftrError, Result};
use crate::model::Profile;
use crate::reaction::reaction_vector;
use crate::steady_state::SteadyStateSolution;
use crate::Real;

pub const MAX_ORACLE_NODES: usize = 101;
pub const MAX_PICARD_ITERATIONS: usize = 200;
/// Picard stops when no time level moves by more than this (L2, relative to
/// `max(1, ||w0||)`).
pub const PICARD_TOLERANCE: f64 = 1e-10;

/// Returns `xi(t_final)` on `num_steps` uniform quadrature intervals. Fails
/// with [`DftrError::PicardNonConvergence`] when the interval is too long for
/// the iteration to contract; chain shorter calls in that case.
pub fn duhamel_oracle<T: Real>(
    gen: &DiscreteGenerator<T>,
    w0: &Profile<T>,
    steady: &SteadyStateSolution<T>,
    t_final: T,
    num_steps: usize,
) -> Result<Profile<T>> {
    gen.check_grid(w0)?;
    gen.check_grid(&steady.profile)?;
    let n = gen.grid().num_nodes();
    if n > MAX_ORACLE_NODES {
        return Err(DftrError::Contract(format!(
            "dense oracle limited to {MAX_ORACLE_NODES} nodes, got {n}"
        )));
    }
    if num_steps == 0 || !(t_final >= T::zero() && t_final.is_finite()) {
        return Err(DftrError::Contract(
            "need a non-negative horizon and at least one step".into(),
        ));
    }
    let dt = t_final / T::from_usize_lossy(num_steps);
    let dense = DenseMatrix::from_rows(gen.matrix().to_dense());
    let prop = dense.scaled(dt).expm();
    let params = gen.params();
    let c_bar = steady.profile.values();
    let grid = *gen.grid();

    let mut linear = Vec::with_capacity(num_steps + 1);
    linear.push(w0.values().to_vec());
    for j in 1..=num_steps {
        let next = prop.matvec(&linear[j - 1]);
        linear.push(next);
    }

    let scale = T::one().max(w0.l2_norm());
    let tol = T::lit(PICARD_TOLERANCE) * scale;
    let weights = grid.trapezoid_weights();
    let l2 = |a: &[T], b: &[T]| -> T {
        weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(&q, (&x, &y))| q * (x - y) * (x - y))
            .sum::<T>()
            .sqrt()
    };

    let mut iterate = linear.clone();
    let mut last_change = T::nan();
    for _ in 0..MAX_PICARD_ITERATIONS {
        // sum_{m<=j} E^{j-m} r_m and E^j r_0, built recursively
        let r0 = reaction_vector(&iterate[0], c_bar, params);
        let mut acc = r0.clone();
        let mut first = r0;
        let mut next = Vec::with_capacity(num_steps + 1);
        next.push(iterate[0].clone());
        let mut change = T::zero();
        for j in 1..=num_steps {
            let r = reaction_vector(&iterate[j], c_bar, params);
            acc = prop.matvec(&acc);
            first = prop.matvec(&first);
            for i in 0..n {
                acc[i] = acc[i] + r[i];
            }
            let xi: Vec<T> = (0..n)
                .map(|i| linear[j][i] + dt * (acc[i] - T::half() * first[i] - T::half() * r[i]))
                .collect();
            if xi.iter().any(|v| !v.is_finite()) {
                return Err(DftrError::PicardNonConvergence {
                    iterations: MAX_PICARD_ITERATIONS,
                    last_update: f64::INFINITY,
                });
            }
            change = change.max(l2(&xi, &iterate[j]));
            next.push(xi);
        }
        iterate = next;
        last_change = change;
        if change <= tol {
            let last = iterate.pop().expect("at least one step");
            return Ok(Profile::from_raw(grid, last));
        }
    }
    Err(DftrError::PicardNonConvergence {
        iterations: MAX_PICARD_ITERATIONS,
        last_update: last_change.as_f64(),
    })
}
