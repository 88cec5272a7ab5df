//! Finite-difference generator `d_ax * xi'' - v * xi'` with the gain-dependent
//! inlet condition `(1 - alpha) xi(0) = (d_ax / v) xi'(0)` and `xi'(l) = 0`.
//!
//! Both boundary conditions are closed with ghost nodes. At the inlet the
//! ghost value comes from the centred derivative of the Robin condition. At
//! the outlet, `xi'(l) = 0` for all time implies `d_ax xi''' = v xi''` there,
//! and the ghost value absorbs that third-derivative term so the boundary row
//! is consistent to `O(h^2)` rather than `O(h)`.

mod mild;
mod resolvent;

pub use mild::duhamel_oracle;
pub use mild::MAX_ORACLE_NODES;
pub use resolvent::{
    characteristic_roots, resolvent_analytic, resolvent_discrete, ResolventSolution,
};

use rand::Rng;

use crate::error::{domain, DftrError, Result};
use crate::model::{Profile, ReactorParams, SpatialGrid};
use crate::tridiag::Tridiagonal;
use crate::Real;

/// Largest accepted cell Péclet number `v h / d_ax`.
pub const MAX_CELL_PECLET: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGenerator<T> {
    grid: SpatialGrid<T>,
    alpha: T,
    params: ReactorParams<T>,
    matrix: Tridiagonal<T>,
}

pub fn build_generator<T: Real>(
    grid: SpatialGrid<T>,
    params: &ReactorParams<T>,
    alpha: T,
) -> Result<DiscreteGenerator<T>> {
    if !(alpha >= T::zero() && alpha <= T::half()) {
        return Err(domain("alpha", alpha, "gain must lie in [0, 1/2]"));
    }
    let (d, v) = (params.d_ax(), params.v());
    let h = grid.spacing();
    let cell_pe = v * h / d;
    if cell_pe > T::lit(MAX_CELL_PECLET) {
        return Err(domain(
            "cell_peclet",
            cell_pe,
            "refine the grid: v*h/d_ax must not exceed 2",
        ));
    }
    let n = grid.num_nodes();
    let diff = d / (h * h);
    let adv = v / (T::two() * h);

    let mut lower = vec![diff + adv; n - 1];
    let mut diag = vec![-T::two() * diff; n];
    let mut upper = vec![diff - adv; n - 1];

    let sigma = v * (T::one() - alpha) / d;
    diag[0] = -T::two() * diff - T::two() * d * sigma / h - v * sigma;
    upper[0] = T::two() * diff;

    let outlet = T::two() * diff * outlet_factor(h, params);
    diag[n - 1] = -outlet;
    lower[n - 2] = outlet;

    Ok(DiscreteGenerator {
        grid,
        alpha,
        params: *params,
        matrix: Tridiagonal { lower, diag, upper },
    })
}

/// `1 / (1 - h v / (3 d_ax))`: scaling of the outlet difference quotient that
/// cancels the leading truncation term.
fn outlet_factor<T: Real>(h: T, params: &ReactorParams<T>) -> T {
    T::one() / (T::one() - h * params.v() / (T::lit(3.0) * params.d_ax()))
}

/// Row-0 response to a unit inlet concentration `u` in the steady condition
/// `C(0) = u + (d_ax / v) C'(0)` (the `alpha = 0` closure plus this source).
pub fn inlet_source_coefficient<T: Real>(grid: &SpatialGrid<T>, params: &ReactorParams<T>) -> T {
    let (d, v) = (params.d_ax(), params.v());
    T::two() * v / grid.spacing() + v * v / d
}

impl<T: Real> DiscreteGenerator<T> {
    pub fn grid(&self) -> &SpatialGrid<T> {
        &self.grid
    }
    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn params(&self) -> &ReactorParams<T> {
        &self.params
    }
    pub fn matrix(&self) -> &Tridiagonal<T> {
        &self.matrix
    }

    pub fn apply(&self, xi: &Profile<T>) -> Result<Profile<T>> {
        self.check_grid(xi)?;
        Ok(Profile::from_raw(self.grid, self.matrix.apply(xi.values())))
    }

    pub(crate) fn check_grid(&self, xi: &Profile<T>) -> Result<()> {
        if xi.grid() != &self.grid {
            return Err(DftrError::Contract(format!(
                "profile on {} nodes applied to a generator on {} nodes",
                xi.grid().num_nodes(),
                self.grid.num_nodes()
            )));
        }
        Ok(())
    }

    /// Coefficients of the second-order one-sided boundary equations, as
    /// `(node, coefficient)` lists for the inlet and the outlet.
    fn boundary_equations(&self) -> ([(usize, T); 3], [(usize, T); 3]) {
        let n = self.grid.num_nodes() - 1;
        let c = self.params.d_ax() / (T::two() * self.grid.spacing() * self.params.v());
        let inlet = [
            (0, T::one() - self.alpha + T::lit(3.0) * c),
            (1, -T::lit(4.0) * c),
            (2, c),
        ];
        let outlet = [(n, T::lit(3.0)), (n - 1, -T::lit(4.0)), (n - 2, T::one())];
        (inlet, outlet)
    }

    /// Defects of `(1-alpha) xi(0) - (d_ax/v) xi'(0)` and `xi'(l)`, both with
    /// second-order one-sided differences (outlet defect scaled by `2h`),
    /// together with the sum of absolute terms of each equation.
    pub fn boundary_defects(&self, xi: &Profile<T>) -> Result<[(T, T); 2]> {
        self.check_grid(xi)?;
        let x = xi.values();
        let eval = |eq: &[(usize, T); 3]| {
            eq.iter().fold((T::zero(), T::zero()), |(s, a), &(i, c)| {
                (s + c * x[i], a + (c * x[i]).abs())
            })
        };
        let (inlet, outlet) = self.boundary_equations();
        Ok([eval(&inlet), eval(&outlet)])
    }

    /// Replaces the two endpoint values so that both one-sided boundary
    /// equations hold exactly; interior values are kept.
    pub fn project_to_domain(&self, xi: &Profile<T>) -> Result<Profile<T>> {
        self.check_grid(xi)?;
        let last = self.grid.num_nodes() - 1;
        let mut x = xi.values().to_vec();
        let (inlet, outlet) = self.boundary_equations();
        // a * [x0, xn]^T = b
        let split = |eq: &[(usize, T); 3]| {
            let mut a0 = T::zero();
            let mut an = T::zero();
            let mut rhs = T::zero();
            for &(i, c) in eq {
                if i == 0 {
                    a0 = a0 + c;
                } else if i == last {
                    an = an + c;
                } else {
                    rhs = rhs - c * x[i];
                }
            }
            (a0, an, rhs)
        };
        let (a11, a12, b1) = split(&inlet);
        let (a21, a22, b2) = split(&outlet);
        let det = a11 * a22 - a12 * a21;
        if det == T::zero() {
            return Err(DftrError::SingularBoundarySystem { determinant: 0.0 });
        }
        x[0] = (b1 * a22 - a12 * b2) / det;
        x[last] = (a11 * b2 - a21 * b1) / det;
        Ok(Profile::from_raw(self.grid, x))
    }

    /// Random vector in the discrete domain: interior values i.i.d. uniform
    /// on `[-1, 1]`, endpoints from the boundary equations.
    pub fn random_domain_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> Profile<T> {
        let values = (0..self.grid.num_nodes())
            .map(|_| T::lit(rng.gen_range(-1.0..=1.0)))
            .collect();
        self.project_to_domain(&Profile::from_raw(self.grid, values))
            .expect("boundary system is regular for alpha <= 1/2")
    }
}

/// `<A_h xi, xi>_h` next to its integration-by-parts counterpart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativityReport<T> {
    /// Trapezoidal `<A_h xi, xi>`.
    pub quadratic_form: T,
    /// `-v (1/2 - alpha) xi(0)^2 - d_ax sum h (dxi/h)^2 - (v/2) xi(l)^2`.
    pub energy_identity: T,
    /// The inlet part `-v (1/2 - alpha) xi(0)^2` of the identity.
    pub boundary_term: T,
    /// `||xi||_h^2`.
    pub norm_sq: T,
}

/// Relative defect tolerated in the boundary equations.
const DOMAIN_TOLERANCE: f64 = 1e-10;

pub fn dissipativity_form<T: Real>(
    gen: &DiscreteGenerator<T>,
    xi: &Profile<T>,
) -> Result<DissipativityReport<T>> {
    let defects = gen.boundary_defects(xi)?;
    for (which, (defect, scale)) in ["inlet", "outlet"].iter().zip(defects) {
        let tol = T::lit(DOMAIN_TOLERANCE) * scale + T::min_positive_value();
        if defect.abs() > tol {
            return Err(DftrError::Contract(format!(
                "{which} boundary condition violated by {:e} (tolerance {:e}); project first",
                defect.as_f64(),
                tol.as_f64()
            )));
        }
    }
    let params = gen.params();
    let (d, v) = (params.d_ax(), params.v());
    let a_xi = gen.apply(xi)?;
    let quadratic_form = a_xi.inner(xi)?;
    let h = gen.grid().spacing();
    let gradient_sq: T = xi
        .values()
        .windows(2)
        .map(|w| {
            let slope = (w[1] - w[0]) / h;
            h * slope * slope
        })
        .sum();
    let boundary_term = -v * (T::half() - gen.alpha()) * xi.first() * xi.first() + T::zero();
    let energy_identity = boundary_term - d * gradient_sq - v * T::half() * xi.last() * xi.last();
    Ok(DissipativityReport {
        quadratic_form,
        energy_identity,
        boundary_term,
        norm_sq: xi.inner(xi)?,
    })
}
