//! Deviation-form reaction term `r(w) = k C^n - k (Sat_M(w) + C)^n`, where
//! `C` is the steady concentration at the node.

use crate::model::{saturate, ReactorParams};
use crate::Real;

/// Lower clamp for the base of `C^(n-1)` when `n < 1`.
pub const POSITIVE_FLOOR: f64 = 1e-12;

/// Reaction term at one node.
///
/// Written as `-k C^n expm1(n ln1p(s / C))` whenever that form is defined so
/// that `r(0)` is exactly zero and small deviations keep full relative
/// precision. Negative concentrations contribute no reaction.
#[inline]
pub fn reaction_rate<T: Real>(w: T, c_bar: T, params: &ReactorParams<T>) -> T {
    let k = params.k();
    if k == T::zero() {
        return T::zero();
    }
    let n = params.n();
    let s = saturate(w, params.sat_m());
    if c_bar > T::zero() {
        let ratio = s / c_bar;
        if ratio > -T::one() {
            return -k * c_bar.powf(n) * (n * ratio.ln_1p()).exp_m1();
        }
    }
    let base = c_bar.max(T::zero());
    let total = (s + c_bar).max(T::zero());
    k * base.powf(n) - k * total.powf(n)
}

/// Derivative `dr/dw`; zero where the saturation is active.
#[inline]
pub fn reaction_slope<T: Real>(w: T, c_bar: T, params: &ReactorParams<T>) -> T {
    let k = params.k();
    if k == T::zero() || w.abs() >= params.sat_m() {
        return T::zero();
    }
    let n = params.n();
    let base = (w + c_bar).max(T::lit(POSITIVE_FLOOR));
    -k * n * base.powf(n - T::one())
}

pub(crate) fn reaction_vector<T: Real>(w: &[T], c_bar: &[T], params: &ReactorParams<T>) -> Vec<T> {
    w.iter()
        .zip(c_bar)
        .map(|(&wi, &ci)| reaction_rate(wi, ci, params))
        .collect()
}
