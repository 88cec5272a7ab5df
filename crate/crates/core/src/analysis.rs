//! Weighted energy, decay-rate estimation and the `(n, alpha)` sweep.

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{domain, DftrError, Result};
use crate::integrator::{simulate, SimulationConfig, Trajectory};
use crate::model::{initial_profile, lambda_theoretical, FeedbackLaw, Profile, SpatialGrid};
use crate::steady_state::steady_state_numeric;
use crate::Real;

/// Minimum number of above-floor records for a decay fit.
pub const MIN_FIT_RECORDS: usize = 10;

/// Exponential weight `rho(x) = rho0 e^{-gamma x}` sampled at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction<T> {
    pub rho0: T,
    pub gamma: T,
    pub profile: Profile<T>,
}

/// `gamma = 0` gives the plain L2 energy. Callers wanting the exponential
/// stability estimate keep `gamma < v / d_ax`.
pub fn weight_profile<T: Real>(
    grid: SpatialGrid<T>,
    rho0: T,
    gamma: T,
) -> Result<WeightFunction<T>> {
    if !(rho0 > T::zero() && rho0.is_finite()) {
        return Err(domain("rho0", rho0, "weight scale must be positive"));
    }
    if !(gamma >= T::zero() && gamma.is_finite()) {
        return Err(domain(
            "gamma",
            gamma,
            "weight decay rate must be non-negative",
        ));
    }
    Ok(WeightFunction {
        rho0,
        gamma,
        profile: Profile::from_fn(grid, |x| rho0 * (-gamma * x).exp()),
    })
}

fn weighted_sum<T: Real>(w: &Profile<T>, weight: &WeightFunction<T>) -> Result<T> {
    w.check_same_grid(&weight.profile)?;
    Ok(w.grid()
        .trapezoid_weights()
        .into_iter()
        .zip(weight.profile.values().iter().zip(w.values()))
        .map(|(q, (&rho, &wi))| q * rho * wi * wi)
        .sum())
}

/// `1/2 int rho w^2` by the trapezoidal rule.
pub fn energy<T: Real>(w: &Profile<T>, weight: &WeightFunction<T>) -> Result<T> {
    Ok(T::half() * weighted_sum(w, weight)?)
}

/// `||w||_rho = sqrt(int rho w^2)`.
pub fn weighted_norm<T: Real>(w: &Profile<T>, weight: &WeightFunction<T>) -> Result<T> {
    Ok(weighted_sum(w, weight)?.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayEstimate<T> {
    /// Fitted rate; `None` when the initial norm is already at the floor.
    pub lambda_n: Option<T>,
    pub lambda_t: T,
    pub fit_window: (T, T),
    pub fit_r2: T,
    /// Some record fell to or below the floor.
    pub floor_hit: bool,
    pub records_used: usize,
}

/// Least-squares slope of `ln(||w(t)|| / ||w(0)||)` against `t` over the
/// trailing `window_fraction` of records whose norm exceeds
/// `floor * ||w(0)||`; `lambda_n` is minus that slope.
pub fn estimate_decay_rate<T: Real>(
    traj: &Trajectory<T>,
    weight: &WeightFunction<T>,
    window_fraction: T,
    floor: T,
) -> Result<DecayEstimate<T>> {
    if !(window_fraction > T::zero() && window_fraction <= T::one()) {
        return Err(domain(
            "window_fraction",
            window_fraction,
            "must lie in (0, 1]",
        ));
    }
    if !(floor >= T::zero() && floor.is_finite()) {
        return Err(domain("floor", floor, "must be non-negative"));
    }
    let norms = traj
        .profiles
        .iter()
        .map(|p| weighted_norm(p, weight))
        .collect::<Result<Vec<_>>>()?;
    decay_fit(
        &traj.times,
        &norms,
        lambda_theoretical(&traj.params),
        window_fraction,
        floor,
    )
}

/// The fit behind [`estimate_decay_rate`], on a precomputed norm series.
pub fn decay_fit<T: Real>(
    times: &[T],
    norms: &[T],
    lambda_t: T,
    window_fraction: T,
    floor: T,
) -> Result<DecayEstimate<T>> {
    if times.len() != norms.len() || times.is_empty() {
        return Err(DftrError::Contract(
            "times and norms must be equal-length and non-empty".into(),
        ));
    }
    let initial = norms[0];
    let threshold = floor * initial;
    if !(initial > T::zero()) {
        return Ok(DecayEstimate {
            lambda_n: None,
            lambda_t,
            fit_window: (times[0], times[0]),
            fit_r2: T::zero(),
            floor_hit: true,
            records_used: 0,
        });
    }
    let usable: Vec<(T, T)> = times
        .iter()
        .zip(norms)
        .filter(|(_, &nrm)| nrm > threshold)
        .map(|(&t, &nrm)| (t, (nrm / initial).ln()))
        .collect();
    let floor_hit = usable.len() < norms.len();
    if usable.len() < MIN_FIT_RECORDS {
        return Err(DftrError::Estimation {
            usable: usable.len(),
            required: MIN_FIT_RECORDS,
        });
    }
    let count = (window_fraction * T::from_usize_lossy(usable.len()))
        .ceil()
        .to_usize()
        .unwrap_or(usable.len())
        .clamp(2, usable.len());
    let window = &usable[usable.len() - count..];

    let m = T::from_usize_lossy(count);
    let t_mean = window.iter().map(|p| p.0).sum::<T>() / m;
    let y_mean = window.iter().map(|p| p.1).sum::<T>() / m;
    let (mut stt, mut sty, mut syy) = (T::zero(), T::zero(), T::zero());
    for &(t, y) in window {
        let (dt, dy) = (t - t_mean, y - y_mean);
        stt = stt + dt * dt;
        sty = sty + dt * dy;
        syy = syy + dy * dy;
    }
    let slope = sty / stt;
    let r2 = if syy > T::zero() {
        (sty * sty / (stt * syy)).min(T::one()).max(T::zero())
    } else {
        T::one()
    };
    Ok(DecayEstimate {
        lambda_n: Some(-slope),
        lambda_t,
        fit_window: (window[0].0, window[count - 1].0),
        fit_r2: r2,
        floor_hit,
        records_used: count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions<T> {
    pub u_bar: T,
    pub window_fraction: T,
    pub floor: T,
    /// Worker cap; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

/// Per-cell bookkeeping, recorded whether or not the cell succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct CellProvenance<T> {
    /// SHA-256 of the cell's resolved parameters.
    pub config_hash: String,
    pub steady_iterations: Option<usize>,
    pub steady_residual: Option<T>,
    pub dt: T,
    pub num_nodes: usize,
    pub negativity_events: usize,
    /// Largest `E(t_{j+1}) / E(t_j) - 1` over consecutive records.
    pub max_energy_growth: Option<T>,
    /// Largest `||w(t)||_rho / (e^{-lambda_t t} ||w(0)||_rho)`.
    pub max_envelope_ratio: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell<T> {
    pub n: T,
    pub alpha: T,
    pub estimate: std::result::Result<DecayEstimate<T>, DftrError>,
    pub provenance: CellProvenance<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub n_values: Vec<T>,
    pub alpha_values: Vec<T>,
    /// Row-major in `(n, alpha)`: cell `i * alpha_values.len() + j`.
    pub cells: Vec<SweepCell<T>>,
}

impl<T: Real> SweepResult<T> {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell<T> {
        &self.cells[i * self.alpha_values.len() + j]
    }

    /// Table of fitted rates, `None` where the cell failed or hit the floor at t = 0.
    pub fn table(&self) -> Vec<Vec<Option<T>>> {
        self.cells
            .chunks(self.alpha_values.len())
            .map(|row| {
                row.iter()
                    .map(|c| c.estimate.as_ref().ok().and_then(|e| e.lambda_n))
                    .collect()
            })
            .collect()
    }
}

fn cell_hash<T: Real>(config: &SimulationConfig<T>, u_bar: T) -> String {
    let p = &config.params;
    let text = format!(
        "d_ax={:e};v={:e};k={:e};n={:e};l={:e};t_final={:e};sat_m={:e};alpha={:e};u_bar={:e};\
         nodes={};dt={:e};record_every={};reaction={:?};rho0={:e};gamma={:e}",
        p.d_ax(),
        p.v(),
        p.k(),
        p.n(),
        p.l(),
        p.t_final(),
        p.sat_m(),
        config.law.alpha(),
        u_bar,
        config.grid.num_nodes(),
        config.dt,
        config.record_every,
        config.reaction,
        config.weight.rho0,
        config.weight.gamma,
    );
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Largest relative energy increase between consecutive records and the
/// largest ratio of the weighted norm to the guaranteed envelope.
pub fn decay_diagnostics<T: Real>(traj: &Trajectory<T>) -> (T, T) {
    let growth = traj
        .energy
        .windows(2)
        .map(|e| {
            if e[0] > T::zero() {
                e[1] / e[0] - T::one()
            } else if e[1] > T::zero() {
                T::infinity()
            } else {
                T::zero()
            }
        })
        .fold(T::neg_infinity(), T::max);
    let lambda_t = lambda_theoretical(&traj.params);
    let initial = traj.norm_rho[0];
    let envelope = traj
        .times
        .iter()
        .zip(&traj.norm_rho)
        .map(|(&t, &nrm)| {
            if initial > T::zero() {
                nrm / ((-lambda_t * t).exp() * initial)
            } else {
                T::zero()
            }
        })
        .fold(T::zero(), T::max);
    (growth, envelope)
}

fn run_cell<T: Real>(
    base: &SimulationConfig<T>,
    n: T,
    alpha: T,
    options: &SweepOptions<T>,
) -> SweepCell<T> {
    let mut provenance = CellProvenance {
        config_hash: String::new(),
        steady_iterations: None,
        steady_residual: None,
        dt: base.dt,
        num_nodes: base.grid.num_nodes(),
        negativity_events: 0,
        max_energy_growth: None,
        max_envelope_ratio: None,
    };
    let outcome = (|| {
        let mut config = base.clone();
        config.params = base.params.with_n(n)?;
        config.law = FeedbackLaw::new(alpha, options.u_bar)?;
        provenance.config_hash = cell_hash(&config, options.u_bar);
        let steady = steady_state_numeric(&config.params, options.u_bar, config.grid)?;
        provenance.steady_iterations = Some(steady.iterations);
        provenance.steady_residual = Some(steady.residual_norm);
        let w0 = initial_profile(config.grid, &config.params, &config.law)?;
        let traj = simulate(&config, &steady, &w0)?;
        provenance.negativity_events = traj.negativity_events;
        let (growth, envelope) = decay_diagnostics(&traj);
        provenance.max_energy_growth = Some(growth);
        provenance.max_envelope_ratio = Some(envelope);
        estimate_decay_rate(
            &traj,
            &config.weight,
            options.window_fraction,
            options.floor,
        )
    })();
    SweepCell {
        n,
        alpha,
        estimate: outcome,
        provenance,
    }
}

/// Runs every `(n, alpha)` cell to `base_config.params.t_final`. Cells are
/// independent and may run in parallel; the output order follows the input
/// lists. Failures are kept per cell.
pub fn sweep<T: Real>(
    base_config: &SimulationConfig<T>,
    n_values: &[T],
    alpha_values: &[T],
    options: &SweepOptions<T>,
) -> Result<SweepResult<T>> {
    if n_values.is_empty() || alpha_values.is_empty() {
        return Err(DftrError::Contract(
            "sweep needs at least one n and one alpha".into(),
        ));
    }
    let pairs: Vec<(T, T)> = n_values
        .iter()
        .flat_map(|&n| alpha_values.iter().map(move |&a| (n, a)))
        .collect();
    let run = || -> Vec<SweepCell<T>> {
        pairs
            .par_iter()
            .map(|&(n, a)| run_cell(base_config, n, a, options))
            .collect()
    };
    let cells = match options.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| DftrError::Contract(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(SweepResult {
        n_values: n_values.to_vec(),
        alpha_values: alpha_values.to_vec(),
        cells,
    })
}
