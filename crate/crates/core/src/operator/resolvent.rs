//! Solutions of `d_ax xi'' - v xi' - lambda xi = eta` in the generator's domain.

use super::DiscreteGenerator;
use crate::error::{domain, DftrError, Result};
use crate::model::Profile;
use crate::model::ReactorParams;
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSolution<T> {
    /// Negative characteristic root.
    pub nu1: T,
    /// Positive characteristic root.
    pub nu2: T,
    /// Coefficient of `e^{nu1 x}`.
    pub c3: T,
    /// Coefficient of `e^{nu2 x}` in the form whose particular part is the
    /// plain convolution `int_0^x eta(s) [e^{nu2(x-s)} - e^{nu1(x-s)}] ds`.
    pub c4: T,
    pub xi: Profile<T>,
    /// Analytic derivative of `xi` at the nodes.
    pub xi_prime: Profile<T>,
    pub lambda_shift: T,
    /// Determinant of the outlet-scaled 2x2 boundary system actually solved.
    pub determinant: T,
}

/// Characteristic roots of `d_ax nu^2 - v nu - lambda = 0`, smaller first.
pub fn characteristic_roots<T: Real>(params: &ReactorParams<T>, lambda: T) -> (T, T) {
    let (d, v) = (params.d_ax(), params.v());
    let disc = (v * v + T::lit(4.0) * d * lambda).sqrt();
    let nu2 = (v + disc) / (T::two() * d);
    // product of the roots is -lambda / d; avoids cancellation in v - disc
    let nu1 = -T::two() * lambda / (v + disc);
    (nu1, nu2)
}

/// Weights of `int_0^h e^{nu u} phi(u) du` for the linear hat functions
/// `phi = u/h` (far node) and `phi = 1 - u/h` (near node, where the kernel is 1).
fn cell_weights<T: Real>(nu: T, h: T) -> (T, T) {
    let z = nu * h;
    if z.abs() < T::lit(1e-3) {
        let z2 = z * z;
        let z3 = z2 * z;
        let far = T::half() + z / T::lit(3.0) + z2 / T::lit(8.0) + z3 / T::lit(30.0);
        let near = T::half() + z / T::lit(6.0) + z2 / T::lit(24.0) + z3 / T::lit(120.0);
        (h * far, h * near)
    } else {
        let em1 = z.exp_m1();
        let z2 = z * z;
        let far = (z * z.exp() - em1) / z2;
        let near = (em1 - z) / z2;
        (h * far, h * near)
    }
}

/// Closed-form resolvent by variation of constants.
///
/// The particular solution is evaluated with the Green's function split so
/// that every exponential is at most one:
///
/// `P(x) = -1/(d (nu2 - nu1)) [ int_0^x eta e^{nu1(x-s)} ds + int_x^l eta e^{nu2(x-s)} ds ]`,
///
/// and the homogeneous part is `c3 e^{nu1 x} + K e^{nu2 (x - l)}`. The
/// convolutions integrate the exponential kernel exactly against the
/// piecewise-linear interpolant of `eta` (trapezoidal in `eta`). `c4` is
/// reported in the unsplit convention.
pub fn resolvent_analytic<T: Real>(
    eta: &Profile<T>,
    lambda_shift: T,
    params: &ReactorParams<T>,
    alpha: T,
) -> Result<ResolventSolution<T>> {
    if !(lambda_shift > T::zero() && lambda_shift.is_finite()) {
        return Err(domain("lambda", lambda_shift, "shift must be positive"));
    }
    if !(alpha >= T::zero() && alpha <= T::half()) {
        return Err(domain("alpha", alpha, "gain must lie in [0, 1/2]"));
    }
    let grid = *eta.grid();
    let (d, v) = (params.d_ax(), params.v());
    let l = grid.l();
    let h = grid.spacing();
    let n = grid.num_nodes();
    let (nu1, nu2) = characteristic_roots(params, lambda_shift);
    let gap = nu2 - nu1;
    let e = eta.values();

    // forward[i] = int_0^{x_i} eta(s) e^{nu1 (x_i - s)} ds
    let (far1, near1) = cell_weights(nu1, h);
    let decay1 = (nu1 * h).exp();
    let mut forward = vec![T::zero(); n];
    for i in 1..n {
        forward[i] = decay1 * forward[i - 1] + far1 * e[i - 1] + near1 * e[i];
    }
    // backward[i] = int_{x_i}^l eta(s) e^{nu2 (x_i - s)} ds
    let (far2, near2) = cell_weights(-nu2, h);
    let decay2 = (-nu2 * h).exp();
    let mut backward = vec![T::zero(); n];
    for i in (0..n - 1).rev() {
        backward[i] = decay2 * backward[i + 1] + far2 * e[i + 1] + near2 * e[i];
    }

    let scale = -T::one() / (d * gap);
    let particular: Vec<T> = forward
        .iter()
        .zip(&backward)
        .map(|(&f, &b)| scale * (f + b))
        .collect();
    let particular_prime: Vec<T> = forward
        .iter()
        .zip(&backward)
        .map(|(&f, &b)| scale * (nu1 * f + nu2 * b))
        .collect();

    let one_minus = T::one() - alpha;
    let ratio = d / v;
    let a11 = one_minus - ratio * nu1;
    let a12 = (one_minus - ratio * nu2) * (-nu2 * l).exp();
    let a21 = nu1 * (nu1 * l).exp();
    let a22 = nu2;
    let b1 = ratio * particular_prime[0] - one_minus * particular[0];
    let b2 = -particular_prime[n - 1];
    let determinant = a11 * a22 - a12 * a21;
    let size = (a11 * a22).abs() + (a12 * a21).abs();
    if !(determinant.abs() > T::epsilon() * size) {
        return Err(DftrError::SingularBoundarySystem {
            determinant: determinant.as_f64(),
        });
    }
    let c3 = (b1 * a22 - a12 * b2) / determinant;
    let k_out = (a11 * b2 - a21 * b1) / determinant;
    // int_0^x eta e^{nu2(x-s)} = e^{nu2 x} backward[0] - int_x^l (...), so the
    // unsplit coefficient differs by backward[0] / (d gap).
    let c4 = k_out * (-nu2 * l).exp() - backward[0] / (d * gap);

    let mut xi = Vec::with_capacity(n);
    let mut xi_prime = Vec::with_capacity(n);
    for (i, x) in grid.nodes().enumerate() {
        let left = (nu1 * x).exp();
        let right = (nu2 * (x - l)).exp();
        xi.push(particular[i] + c3 * left + k_out * right);
        xi_prime.push(particular_prime[i] + c3 * nu1 * left + k_out * nu2 * right);
    }
    Ok(ResolventSolution {
        nu1,
        nu2,
        c3,
        c4,
        xi: Profile::from_raw(grid, xi),
        xi_prime: Profile::from_raw(grid, xi_prime),
        lambda_shift,
        determinant,
    })
}

/// Solves `(A_h - lambda I) xi = eta` directly.
pub fn resolvent_discrete<T: Real>(
    gen: &DiscreteGenerator<T>,
    eta: &Profile<T>,
    lambda_shift: T,
) -> Result<Profile<T>> {
    if !(lambda_shift > T::zero() && lambda_shift.is_finite()) {
        return Err(domain("lambda", lambda_shift, "shift must be positive"));
    }
    gen.check_grid(eta)?;
    let shifted = gen.matrix().affine(T::one(), -lambda_shift);
    let xi = shifted.solve(eta.values())?;
    Ok(Profile::from_raw(*gen.grid(), xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpatialGrid;
    use crate::operator::build_generator;

    fn params() -> ReactorParams<f64> {
        ReactorParams::reference_case()
    }

    /// Closed form for eta = 1: xi = -1/lambda + A e^{nu1 x} + B e^{nu2 x},
    /// boundary conditions solved by Cramer's rule with the raw exponentials.
    fn constant_forcing_oracle(lambda: f64, alpha: f64, x: f64) -> f64 {
        let p = params();
        let (d, v, l) = (p.d_ax(), p.v(), p.l());
        let s = (v * v + 4.0 * d * lambda).sqrt();
        let (m1, m2) = ((v - s) / (2.0 * d), (v + s) / (2.0 * d));
        // (1-alpha)(-1/lambda + A + B) = (d/v)(m1 A + m2 B)
        // m1 e^{m1 l} A + m2 e^{m2 l} B = 0
        let r11 = (1.0 - alpha) - d / v * m1;
        let r12 = (1.0 - alpha) - d / v * m2;
        let rhs1 = (1.0 - alpha) / lambda;
        let r21 = m1 * (m1 * l).exp();
        let r22 = m2 * (m2 * l).exp();
        let det = r11 * r22 - r12 * r21;
        let a = rhs1 * r22 / det;
        let b = -r21 * rhs1 / det;
        -1.0 / lambda + a * (m1 * x).exp() + b * (m2 * x).exp()
    }

    #[test]
    fn roots_for_unit_shift() {
        let (nu1, nu2) = characteristic_roots(&params(), 1.0);
        assert!((nu1 + 18.0998).abs() < 1e-4, "{nu1}");
        assert!((nu2 - 22.0998).abs() < 1e-4, "{nu2}");
        let p = params();
        for nu in [nu1, nu2] {
            assert!((p.d_ax() * nu * nu - p.v() * nu - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn roots_straddle_zero() {
        for lambda in [1e-6, 0.1, 1.0, 10.0, 1e4] {
            let (nu1, nu2) = characteristic_roots(&params(), lambda);
            assert!(nu1 < 0.0 && nu2 > 0.0 && nu1 != nu2);
        }
    }

    #[test]
    fn homogeneous_forcing_gives_zero() {
        let g = SpatialGrid::new(1.0, 51).unwrap();
        let sol = resolvent_analytic(&Profile::zeros(g), 1.0, &params(), 0.25).unwrap();
        assert_eq!(sol.c3, 0.0);
        assert_eq!(sol.c4, 0.0);
        assert!(sol.xi.values().iter().all(|&v| v == 0.0));
        let gen = build_generator(g, &params(), 0.25).unwrap();
        let d = resolvent_discrete(&gen, &Profile::zeros(g), 1.0).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_closed_form_for_constant_forcing() {
        let g = SpatialGrid::new(1.0, 101).unwrap();
        for lambda in [0.1, 1.0, 10.0] {
            for alpha in [0.0, 0.25, 0.5] {
                let sol = resolvent_analytic(&Profile::constant(g, 1.0), lambda, &params(), alpha)
                    .unwrap();
                for (i, x) in g.nodes().enumerate() {
                    let exact = constant_forcing_oracle(lambda, alpha, x);
                    assert!(
                        (sol.xi.values()[i] - exact).abs() < 1e-12,
                        "lambda={lambda} alpha={alpha} x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn boundary_conditions_hold_exactly() {
        let p = params();
        let g = SpatialGrid::new(1.0, 201).unwrap();
        let eta = Profile::from_fn(g, |x: f64| (3.0 * x).sin() + x * x);
        for alpha in [0.0, 0.25, 0.5] {
            let sol = resolvent_analytic(&eta, 0.7, &p, alpha).unwrap();
            let inlet = (1.0 - alpha) * sol.xi.first() - p.d_ax() / p.v() * sol.xi_prime.first();
            assert!(inlet.abs() < 1e-14, "{inlet}");
            assert!(sol.xi_prime.last().abs() < 1e-14);
        }
    }

    #[test]
    fn convolution_agrees_with_fine_quadrature_oracle() {
        // Independent route: unsplit formula with c3, c4, integrals by
        // composite Simpson on a much finer mesh of the same linear interpolant.
        let p = params();
        // small shift keeps e^{nu2 x} moderate so the unsplit sum does not cancel
        let (d, lambda, alpha) = (p.d_ax(), 0.1, 0.25);
        let g = SpatialGrid::new(1.0, 41).unwrap();
        let eta = Profile::from_fn(g, |x: f64| (3.0 * x).cos() - x);
        let sol = resolvent_analytic(&eta, lambda, &p, alpha).unwrap();
        let h = g.spacing();
        let interp = |s: f64| {
            let i = ((s / h).floor() as usize).min(g.num_nodes() - 2);
            let t = (s - i as f64 * h) / h;
            eta.values()[i] * (1.0 - t) + eta.values()[i + 1] * t
        };
        for i in [0usize, 7, 20, 33, 40] {
            let x = g.node(i);
            // panel edges land on the interpolant kinks
            let m = 200 * i.max(1);
            let step = x / m as f64;
            let mut acc = 0.0;
            for j in 0..=m {
                let s = j as f64 * step;
                let w = if j == 0 || j == m {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * interp(s) * ((sol.nu2 * (x - s)).exp() - (sol.nu1 * (x - s)).exp());
            }
            let integral = acc * step / 3.0;
            let xi = integral / (d * (sol.nu2 - sol.nu1))
                + sol.c3 * (sol.nu1 * x).exp()
                + sol.c4 * (sol.nu2 * x).exp();
            assert!(
                (xi - sol.xi.values()[i]).abs() < 1e-9,
                "x={x}: {xi} vs {}",
                sol.xi.values()[i]
            );
        }
    }

    #[test]
    fn discrete_resolvent_resubstitution() {
        let p = params();
        let g = SpatialGrid::new(1.0, 201).unwrap();
        let gen = build_generator(g, &p, 0.5).unwrap();
        let eta = Profile::from_fn(g, |x: f64| (7.0 * x).sin() - 0.3);
        let xi = resolvent_discrete(&gen, &eta, 1.0).unwrap();
        let back: Vec<f64> = gen
            .apply(&xi)
            .unwrap()
            .values()
            .iter()
            .zip(xi.values())
            .map(|(a, x)| a - x)
            .collect();
        let resid = back
            .iter()
            .zip(eta.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(resid <= 1e-12 * eta.max_abs(), "{resid}");
    }

    #[test]
    fn nonpositive_shift_rejected() {
        let g = SpatialGrid::new(1.0, 11).unwrap();
        assert!(resolvent_analytic(&Profile::constant(g, 1.0), 0.0, &params(), 0.0).is_err());
        let gen = build_generator(g, &params(), 0.0).unwrap();
        assert!(resolvent_discrete(&gen, &Profile::constant(g, 1.0), -1.0).is_err());
    }

    #[test]
    fn boundary_system_regular_across_shifts_and_gains() {
        let g = SpatialGrid::new(1.0, 101).unwrap();
        for lambda in [0.1, 1.0, 10.0] {
            for alpha in [0.0, 0.25, 0.5] {
                let sol = resolvent_analytic(&Profile::constant(g, 1.0), lambda, &params(), alpha)
                    .unwrap();
                assert!(sol.determinant.abs() > 1.0, "{}", sol.determinant);
            }
        }
    }
}
