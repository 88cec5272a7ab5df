//! Physical parameters, spatial grids, sampled profiles and the closed-form
//! quantities that only depend on the parameters.

use crate::error::{domain, DftrError, Result};
use crate::Real;

/// Physical constants of the reactor.
///
/// `k = 0` is accepted so the linear (reaction-free) problem can be used as a
/// cross-check, and `t_final = 0` gives an empty run. Every other field must
/// be strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactorParams<T> {
    d_ax: T,
    v: T,
    k: T,
    n: T,
    l: T,
    t_final: T,
    sat_m: T,
}

fn positive<T: Real>(name: &'static str, value: T) -> Result<T> {
    if value.is_finite() && value > T::zero() {
        Ok(value)
    } else {
        Err(domain(name, value, "must be positive and finite"))
    }
}

impl<T: Real> ReactorParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(d_ax: T, v: T, k: T, n: T, l: T, t_final: T, sat_m: T) -> Result<Self> {
        if !(k.is_finite() && k >= T::zero()) {
            return Err(domain("k", k, "must be non-negative and finite"));
        }
        if !(t_final.is_finite() && t_final >= T::zero()) {
            return Err(domain(
                "t_final",
                t_final,
                "must be non-negative and finite",
            ));
        }
        let p = Self {
            d_ax: positive("d_ax", d_ax)?,
            v: positive("v", v)?,
            k,
            n: positive("n", n)?,
            l: positive("l", l)?,
            t_final,
            sat_m: positive("sat_m", sat_m)?,
        };
        let pe = p.peclet();
        if !(pe.is_finite() && pe > T::zero()) {
            return Err(domain("peclet", pe, "v*l/d_ax must be finite"));
        }
        Ok(p)
    }

    /// Parameter set used for the published simulations: `k = 0.001`,
    /// `v = 0.01`, `l = 1`, `Pe = 4`, `T = 400`, first-order reaction.
    /// The saturation bound is ten times the largest initial deviation at
    /// zero gain.
    pub fn reference_case() -> Self {
        let v = T::lit(0.01);
        let l = T::one();
        let d_ax = d_ax_from_peclet(v, l, T::lit(4.0)).expect("valid reference values");
        let sat_m = default_saturation_bound(d_ax, v, l, T::zero()).expect("alpha = 0 is valid");
        Self::new(d_ax, v, T::lit(0.001), T::one(), l, T::lit(400.0), sat_m)
            .expect("valid reference values")
    }

    pub fn d_ax(&self) -> T {
        self.d_ax
    }
    pub fn v(&self) -> T {
        self.v
    }
    pub fn k(&self) -> T {
        self.k
    }
    pub fn n(&self) -> T {
        self.n
    }
    pub fn l(&self) -> T {
        self.l
    }
    pub fn t_final(&self) -> T {
        self.t_final
    }
    pub fn sat_m(&self) -> T {
        self.sat_m
    }

    pub fn peclet(&self) -> T {
        self.v * self.l / self.d_ax
    }

    pub fn with_n(self, n: T) -> Result<Self> {
        Self::new(
            self.d_ax,
            self.v,
            self.k,
            n,
            self.l,
            self.t_final,
            self.sat_m,
        )
    }
    pub fn with_k(self, k: T) -> Result<Self> {
        Self::new(
            self.d_ax,
            self.v,
            k,
            self.n,
            self.l,
            self.t_final,
            self.sat_m,
        )
    }
    pub fn with_v(self, v: T) -> Result<Self> {
        Self::new(
            self.d_ax,
            v,
            self.k,
            self.n,
            self.l,
            self.t_final,
            self.sat_m,
        )
    }
    pub fn with_d_ax(self, d_ax: T) -> Result<Self> {
        Self::new(
            d_ax,
            self.v,
            self.k,
            self.n,
            self.l,
            self.t_final,
            self.sat_m,
        )
    }
    pub fn with_t_final(self, t_final: T) -> Result<Self> {
        Self::new(
            self.d_ax, self.v, self.k, self.n, self.l, t_final, self.sat_m,
        )
    }
    pub fn with_sat_m(self, sat_m: T) -> Result<Self> {
        Self::new(
            self.d_ax,
            self.v,
            self.k,
            self.n,
            self.l,
            self.t_final,
            sat_m,
        )
    }
}

/// Feedback gain `alpha` in `u_w = alpha * w(0, t)` and the steady inlet value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackLaw<T> {
    alpha: T,
    u_bar: T,
}

impl<T: Real> FeedbackLaw<T> {
    pub fn new(alpha: T, u_bar: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha <= T::half()) {
            return Err(domain("alpha", alpha, "gain must lie in [0, 1/2]"));
        }
        Ok(Self {
            alpha,
            u_bar: positive("u_bar", u_bar)?,
        })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn u_bar(&self) -> T {
        self.u_bar
    }

    /// Control signal for a given inlet deviation.
    pub fn control(&self, inlet_deviation: T) -> T {
        self.alpha * inlet_deviation
    }
}

/// Uniform grid `x_i = i * h` on `[0, l]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid<T> {
    l: T,
    num_nodes: usize,
}

impl<T: Real> SpatialGrid<T> {
    pub fn new(l: T, num_nodes: usize) -> Result<Self> {
        positive("l", l)?;
        if num_nodes < 3 {
            return Err(DftrError::ParameterDomain {
                name: "num_nodes",
                value: num_nodes as f64,
                reason: "at least 3 nodes required",
            });
        }
        Ok(Self { l, num_nodes })
    }

    pub fn l(&self) -> T {
        self.l
    }
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }
    pub fn spacing(&self) -> T {
        self.l / T::from_usize_lossy(self.num_nodes - 1)
    }

    pub fn node(&self, i: usize) -> T {
        if i + 1 == self.num_nodes {
            self.l
        } else {
            T::from_usize_lossy(i) * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.num_nodes).map(move |i| self.node(i))
    }

    /// Trapezoidal quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<T> {
        let h = self.spacing();
        let mut w = vec![h; self.num_nodes];
        w[0] = h * T::half();
        w[self.num_nodes - 1] = h * T::half();
        w
    }

    /// Grid with twice the resolution (`2 * (num_nodes - 1) + 1` nodes).
    pub fn refined(&self) -> Self {
        Self {
            l: self.l,
            num_nodes: 2 * (self.num_nodes - 1) + 1,
        }
    }
}

/// Field sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    grid: SpatialGrid<T>,
    values: Vec<T>,
}

impl<T: Real> Profile<T> {
    pub fn new(grid: SpatialGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(DftrError::Contract(format!(
                "profile has {} values for a grid of {} nodes",
                values.len(),
                grid.num_nodes()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DftrError::Contract(format!(
                "profile value at node {i} is not finite"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness scan; callers guarantee the length.
    pub(crate) fn from_raw(grid: SpatialGrid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.num_nodes());
        Self { grid, values }
    }

    pub fn from_fn(grid: SpatialGrid<T>, f: impl Fn(T) -> T) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn constant(grid: SpatialGrid<T>, c: T) -> Self {
        Self {
            grid,
            values: vec![c; grid.num_nodes()],
        }
    }

    pub fn zeros(grid: SpatialGrid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn grid(&self) -> &SpatialGrid<T> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn first(&self) -> T {
        self.values[0]
    }
    pub fn last(&self) -> T {
        self.values[self.values.len() - 1]
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(DftrError::Contract(format!(
                "grid mismatch: {} vs {} nodes",
                self.grid.num_nodes(),
                other.grid.num_nodes()
            )));
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    /// Trapezoidal inner product.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.check_same_grid(other)?;
        Ok(self
            .grid
            .trapezoid_weights()
            .into_iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (&a, &b))| w * a * b)
            .sum())
    }

    /// Trapezoidal L2 norm.
    pub fn l2_norm(&self) -> T {
        self.inner(self).expect("same grid").sqrt()
    }

    /// Values at every `stride`-th node, as a profile on the matching coarse grid.
    pub fn restrict(&self, stride: usize) -> Result<Self> {
        let n = self.grid.num_nodes() - 1;
        if stride == 0 || !n.is_multiple_of(stride) || n / stride < 2 {
            return Err(DftrError::Contract(format!(
                "cannot restrict {} nodes by stride {stride}",
                self.grid.num_nodes()
            )));
        }
        let grid = SpatialGrid::new(self.grid.l(), n / stride + 1)?;
        let values = self.values.iter().step_by(stride).copied().collect();
        Ok(Self { grid, values })
    }
}

/// Diffusivity from the Péclet number `Pe = v * l / d_ax`.
pub fn d_ax_from_peclet<T: Real>(v: T, l: T, pe: T) -> Result<T> {
    positive("v", v)?;
    positive("l", l)?;
    positive("peclet", pe)?;
    Ok(v * l / pe)
}

/// Clamps a deviation to `[-m, m]`.
#[inline]
pub fn saturate<T: Real>(w: T, m: T) -> T {
    if w > m {
        m
    } else if w < -m {
        -m
    } else {
        w
    }
}

/// Quadratic initial deviation that satisfies the closed-loop inlet condition
/// `(1 - alpha) w(0) = (d_ax / v) w'(0)` and `w'(l) = 0`.
pub fn initial_deviation<T: Real>(x: T, params: &ReactorParams<T>, alpha: T) -> Result<T> {
    if !(alpha < T::one()) {
        return Err(domain("alpha", alpha, "initial profile requires alpha < 1"));
    }
    let (l, v, d) = (params.l(), params.v(), params.d_ax());
    let one_minus = T::one() - alpha;
    let offset = l * (l * v * one_minus + T::two() * d) / (T::two() * v * one_minus);
    Ok(-(x - l) * (x - l) * T::half() + offset)
}

pub fn initial_profile<T: Real>(
    grid: SpatialGrid<T>,
    params: &ReactorParams<T>,
    law: &FeedbackLaw<T>,
) -> Result<Profile<T>> {
    let values = grid
        .nodes()
        .map(|x| initial_deviation(x, params, law.alpha()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Profile::from_raw(grid, values))
}

/// Ten times the largest initial deviation, which sits at the outlet.
pub fn default_saturation_bound<T: Real>(d_ax: T, v: T, l: T, alpha: T) -> Result<T> {
    if !(alpha < T::one()) {
        return Err(domain("alpha", alpha, "requires alpha < 1"));
    }
    let one_minus = T::one() - alpha;
    let peak = l * (l * v * one_minus + T::two() * d_ax) / (T::two() * v * one_minus);
    Ok(T::lit(10.0) * peak.abs())
}

/// Decay rate `v^2 / (16 d_ax)` guaranteed for the weighted norm.
pub fn lambda_theoretical<T: Real>(params: &ReactorParams<T>) -> T {
    params.v() * params.v() / (T::lit(16.0) * params.d_ax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> ReactorParams<f64> {
        ReactorParams::reference_case()
    }

    #[test]
    fn peclet_inversion() {
        assert!((d_ax_from_peclet(0.01f64, 1.0, 4.0).unwrap() - 0.0025).abs() < 1e-18);
        assert_eq!(d_ax_from_peclet(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert!((d_ax_from_peclet(0.02f64, 2.0, 8.0).unwrap() - 0.005).abs() < 1e-18);
        assert!(matches!(
            d_ax_from_peclet(0.0, 1.0, 4.0),
            Err(DftrError::ParameterDomain { name: "v", .. })
        ));
        assert!(d_ax_from_peclet(0.01, 1.0, -4.0).is_err());
    }

    #[test]
    fn saturation_branches() {
        assert_eq!(saturate(3.0, 5.0), 3.0);
        assert_eq!(saturate(7.0, 5.0), 5.0);
        assert_eq!(saturate(-7.0, 5.0), -5.0);
        assert_eq!(saturate(-3.0f32, 5.0), -3.0);
    }

    #[test]
    fn reference_values() {
        let p = reference();
        assert!((p.d_ax() - 0.0025).abs() < 1e-18);
        assert!((p.peclet() - 4.0).abs() < 1e-12);
        assert!((p.sat_m() - 7.5).abs() < 1e-12);
    }

    #[test]
    fn initial_profile_endpoints() {
        let p = reference();
        let law = FeedbackLaw::new(0.0, 1.0).unwrap();
        let grid = SpatialGrid::new(1.0, 201).unwrap();
        let w = initial_profile(grid, &p, &law).unwrap();
        assert!((w.first() - 0.25).abs() < 1e-14);
        assert!((w.last() - 0.75).abs() < 1e-14);
        // w'(l) = -(x - l) vanishes at the outlet, so the last two nodes
        // differ only by the curvature term h^2 / 2.
        let h = grid.spacing();
        let n = w.len();
        assert!((w.values()[n - 1] - w.values()[n - 2] - h * h / 2.0).abs() < 1e-15);
    }

    #[test]
    fn initial_profile_satisfies_closed_loop_inlet_condition() {
        let p = reference();
        for alpha in [0.0, 0.25, 0.5] {
            let w0 = initial_deviation(0.0, &p, alpha).unwrap();
            // exact derivative at the inlet is l
            let lhs = (1.0 - alpha) * w0;
            let rhs = p.d_ax() / p.v() * p.l();
            assert!((lhs - rhs).abs() < 1e-15, "alpha={alpha}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn initial_profile_rejects_unit_gain() {
        let p = reference();
        assert!(matches!(
            initial_deviation(0.3, &p, 1.0),
            Err(DftrError::ParameterDomain { name: "alpha", .. })
        ));
    }

    #[test]
    fn theoretical_rate() {
        let p = reference();
        assert!((lambda_theoretical(&p) - 0.0025).abs() < 1e-15);
        let unit = ReactorParams::new(1.0, 4.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(lambda_theoretical(&unit), 1.0);
        let faster = p.with_v(0.02).unwrap();
        assert!((lambda_theoretical(&faster) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(ReactorParams::new(0.0025, 0.01, -1.0, 1.0, 1.0, 400.0, 1.0).is_err());
        assert!(ReactorParams::new(0.0025, 0.01, 0.0, 1.0, 1.0, 400.0, 1.0).is_ok());
        assert!(ReactorParams::new(0.0025, 0.01, 0.001, 0.0, 1.0, 400.0, 1.0).is_err());
        assert!(ReactorParams::new(0.0025, 0.01, 0.001, 1.0, 1.0, 400.0, f64::INFINITY).is_err());
        assert!(FeedbackLaw::new(0.6, 1.0).is_err());
        assert!(FeedbackLaw::new(-0.1, 1.0).is_err());
        assert!(FeedbackLaw::new(0.5, 0.0).is_err());
        assert!(SpatialGrid::new(1.0, 2).is_err());
    }

    #[test]
    fn grid_nodes_hit_endpoints() {
        let g = SpatialGrid::new(0.3, 7).unwrap();
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(6), 0.3);
        let w: f64 = g.trapezoid_weights().iter().sum();
        assert!((w - 0.3).abs() < 1e-15);
        assert_eq!(g.refined().num_nodes(), 13);
    }

    #[test]
    fn profile_norms() {
        let g = SpatialGrid::new(1.0f64, 11).unwrap();
        let one = Profile::constant(g, 1.0);
        assert!((one.l2_norm() - 1.0).abs() < 1e-15);
        let other = Profile::constant(SpatialGrid::new(1.0, 12).unwrap(), 1.0);
        assert!(one.inner(&other).is_err());
        assert!(Profile::new(g, vec![0.0; 10]).is_err());
        assert!(Profile::new(g, vec![f64::NAN; 11]).is_err());
        let r = Profile::from_fn(g.refined(), |x| x).restrict(2).unwrap();
        assert_eq!(r.grid(), &g);
        assert!((r.values()[3] - 0.3).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn saturate_idempotent_and_bounded(w in -1e6f64..1e6, m in 1e-3f64..1e3) {
            let s = saturate(w, m);
            prop_assert_eq!(saturate(s, m), s);
            prop_assert!(s.abs() <= m);
        }

        #[test]
        fn lambda_scales_quadratically_in_velocity(c in 0.1f64..10.0) {
            let p = reference();
            let scaled = p.with_v(c * p.v()).unwrap();
            let lhs = lambda_theoretical(&scaled);
            let rhs = c * c * lambda_theoretical(&p);
            prop_assert!((lhs - rhs).abs() <= 1e-14 * rhs);
            let diluted = p.with_d_ax(c * p.d_ax()).unwrap();
            prop_assert!((lambda_theoretical(&diluted) * c - lambda_theoretical(&p)).abs() < 1e-15);
        }
    }
}
