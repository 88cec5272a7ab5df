//! TOML run configuration and its fully resolved form.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dftr_core::{
    build_generator, d_ax_from_peclet, default_saturation_bound, FeedbackLaw, ReactionTreatment,
    ReactorParams, SpatialGrid,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default)]
    pub reactor: ReactorSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactorSection {
    pub d_ax: Option<f64>,
    pub peclet: Option<f64>,
    pub v: Option<f64>,
    pub k: Option<f64>,
    pub n: Option<f64>,
    pub l: Option<f64>,
    pub sat_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub alpha: Option<f64>,
    pub u_bar: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub num_nodes: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub record_every: Option<usize>,
    pub scheme: Option<Scheme>,
    pub snapshots: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub rho0: Option<f64>,
    pub gamma: Option<f64>,
    pub horizon: Option<f64>,
    pub window_fraction: Option<f64>,
    pub floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    LinearlyImplicit,
    Extrapolated,
}

impl From<Scheme> for ReactionTreatment {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::LinearlyImplicit => ReactionTreatment::LinearlyImplicit,
            Scheme::Extrapolated => ReactionTreatment::Extrapolated,
        }
    }
}

/// Which command the defaults are resolved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Single,
    Sweep,
}

/// Every parameter with defaults filled in. This is what the manifest hash
/// covers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub d_ax: f64,
    pub v: f64,
    pub k: f64,
    pub n: f64,
    pub l: f64,
    pub sat_m: f64,
    pub alpha: f64,
    pub u_bar: f64,
    pub num_nodes: usize,
    pub t_final: f64,
    pub dt: f64,
    pub record_every: usize,
    pub scheme: Scheme,
    pub snapshots: Vec<f64>,
    pub rho0: f64,
    pub gamma: f64,
    pub horizon: f64,
    pub window_fraction: f64,
    pub floor: f64,
}

pub const DEFAULT_SNAPSHOTS: [f64; 4] = [0.0, 100.0, 200.0, 300.0];

pub fn load(path: &Path) -> Result<ConfigDocument> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ConfigDocument> {
    toml::from_str(text).map_err(|e| anyhow!("invalid config: {e}"))
}

fn required(value: Option<f64>, key: &str) -> Result<f64> {
    let v = value.ok_or_else(|| anyhow!("missing required key `{key}`"))?;
    finite(v, key)
}

fn finite(v: f64, key: &str) -> Result<f64> {
    if !v.is_finite() {
        bail!("key `{key}` must be a finite number, got {v}");
    }
    Ok(v)
}

fn optional(value: Option<f64>, key: &str, default: f64) -> Result<f64> {
    value.map_or(Ok(default), |v| finite(v, key))
}

impl ConfigDocument {
    /// Fills defaults. `gains` are the feedback gains the run will use; the
    /// automatic saturation bound covers the largest of them.
    pub fn resolve(&self, purpose: Purpose, gains: &[f64]) -> Result<ResolvedConfig> {
        let r = &self.reactor;
        let v = required(r.v, "reactor.v")?;
        let k = required(r.k, "reactor.k")?;
        let n = required(r.n, "reactor.n")?;
        let l = required(r.l, "reactor.l")?;
        let d_ax = match (r.d_ax, r.peclet) {
            (Some(_), Some(_)) => {
                bail!("keys `reactor.d_ax` and `reactor.peclet` are mutually exclusive")
            }
            (None, None) => bail!("missing required key `reactor.d_ax` or `reactor.peclet`"),
            (Some(d), None) => finite(d, "reactor.d_ax")?,
            (None, Some(pe)) => d_ax_from_peclet(v, l, finite(pe, "reactor.peclet")?)?,
        };
        let alpha = optional(self.control.alpha, "control.alpha", 0.0)?;
        let u_bar = optional(self.control.u_bar, "control.u_bar", 1.0)?;

        let sat_m = match r.sat_m {
            Some(m) => finite(m, "reactor.sat_m")?,
            None => {
                let mut worst = 0.0f64;
                for &a in gains.iter().chain(std::iter::once(&alpha)) {
                    worst = worst.max(default_saturation_bound(d_ax, v, l, a)?);
                }
                worst
            }
        };

        let t = &self.time;
        let (dt_default, record_default) = match purpose {
            Purpose::Single => (0.1, 10),
            Purpose::Sweep => (1.0, 1),
        };
        let a = &self.analysis;
        let resolved = ResolvedConfig {
            d_ax,
            v,
            k,
            n,
            l,
            sat_m,
            alpha,
            u_bar,
            num_nodes: self.grid.num_nodes.unwrap_or(201),
            t_final: optional(t.t_final, "time.t_final", 400.0)?,
            dt: optional(t.dt, "time.dt", dt_default)?,
            record_every: t.record_every.unwrap_or(record_default),
            scheme: t.scheme.unwrap_or_default(),
            snapshots: match &t.snapshots {
                Some(s) => s
                    .iter()
                    .map(|&x| finite(x, "time.snapshots"))
                    .collect::<Result<_>>()?,
                None => DEFAULT_SNAPSHOTS.to_vec(),
            },
            rho0: optional(a.rho0, "analysis.rho0", 1.0)?,
            gamma: optional(a.gamma, "analysis.gamma", v / (2.0 * d_ax))?,
            horizon: optional(a.horizon, "analysis.horizon", 7000.0)?,
            window_fraction: optional(a.window_fraction, "analysis.window_fraction", 0.5)?,
            floor: optional(a.floor, "analysis.floor", 1e-12)?,
        };
        resolved.validate(gains)?;
        Ok(resolved)
    }
}

impl ResolvedConfig {
    fn validate(&self, gains: &[f64]) -> Result<()> {
        let params = self.params(self.t_final)?;
        self.params(self.horizon)?;
        for &a in gains.iter().chain(std::iter::once(&self.alpha)) {
            FeedbackLaw::new(a, self.u_bar)?;
            build_generator(self.grid()?, &params, a)?;
        }
        if !(self.dt > 0.0) {
            bail!("key `time.dt` must be positive");
        }
        if self.record_every == 0 {
            bail!("key `time.record_every` must be at least 1");
        }
        if !(self.rho0 > 0.0) {
            bail!("key `analysis.rho0` must be positive");
        }
        if !(self.gamma >= 0.0) {
            bail!("key `analysis.gamma` must be non-negative");
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            bail!("key `analysis.window_fraction` must lie in (0, 1]");
        }
        if !(self.floor >= 0.0) {
            bail!("key `analysis.floor` must be non-negative");
        }
        Ok(())
    }

    pub fn params(&self, t_final: f64) -> Result<ReactorParams<f64>> {
        Ok(ReactorParams::new(
            self.d_ax, self.v, self.k, self.n, self.l, t_final, self.sat_m,
        )?)
    }

    pub fn grid(&self) -> Result<SpatialGrid<f64>> {
        Ok(SpatialGrid::new(self.l, self.num_nodes)?)
    }

    pub fn law(&self) -> Result<FeedbackLaw<f64>> {
        Ok(FeedbackLaw::new(self.alpha, self.u_bar)?)
    }
}
