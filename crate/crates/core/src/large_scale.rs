//! Large-scale parameters: LOS probability and the spatially correlated LOS
//! state along a route, grid-constant cluster/lobe/subpath counts, delay
//! spread and shadow fading, and the close-in free-space reference path loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{cell_sample, CorrelatedFieldSpec, FieldSample, OuWalker};
use crate::geometry::{tr_separation, GridIndex, Position, UpdateTick};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosState {
    Los,
    Nlos,
}

impl LosState {
    fn code(self) -> u32 {
        match self {
            LosState::Los => 0,
            LosState::Nlos => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    UmiStreetCanyon,
}

/// How the per-tick LOS state is determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosMode {
    /// Correlated uniform draw against the LOS probability.
    #[default]
    Stochastic,
    AlwaysLos,
    AlwaysNlos,
}

/// Discrete distribution of a count parameter, sampled by inverse CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountDistribution {
    /// Equally likely integers `min..=max`.
    Uniform { min: u32, max: u32 },
    /// Explicit probability mass over `values`; `weights` need not be normalized.
    Pmf { values: Vec<u32>, weights: Vec<f64> },
}

impl CountDistribution {
    pub const fn uniform(min: u32, max: u32) -> Self {
        CountDistribution::Uniform { min, max }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            CountDistribution::Uniform { min, max } => {
                if *min < 1 || min > max {
                    return Err(format!("uniform range {min}..={max} must satisfy 1 <= min <= max"));
                }
            }
            CountDistribution::Pmf { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return Err("pmf needs equally many values and weights".into());
                }
                if values.iter().any(|&v| v < 1) {
                    return Err("pmf values must be >= 1".into());
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                    return Err("pmf weights must be non-negative with a positive sum".into());
                }
            }
        }
        Ok(())
    }

    pub fn max_value(&self) -> u32 {
        match self {
            CountDistribution::Uniform { max, .. } => *max,
            CountDistribution::Pmf { values, .. } => values.iter().copied().max().unwrap_or(1),
        }
    }

    /// Inverse CDF at `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> u32 {
        match self {
            CountDistribution::Uniform { min, max } => {
                let span = (max - min + 1) as f64;
                min + ((u * span).floor() as u32).min(max - min)
            }
            CountDistribution::Pmf { values, weights } => {
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                for (v, w) in values.iter().zip(weights) {
                    acc += w / total;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().unwrap()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub carrier_frequency_hz: f64,
    pub scenario: Scenario,
    pub correlation_distance_los: f64,
    pub correlation_distance_nlos: f64,
    pub correlation_distance_cluster_count: f64,
    /// Correlation distance of the LOS-draw field; `None` reuses
    /// `correlation_distance_los`.
    pub los_field_correlation_distance: Option<f64>,
    pub ple_los: f64,
    pub ple_nlos: f64,
    pub sf_sigma_los: f64,
    pub sf_sigma_nlos: f64,
    pub los_prob_d1: f64,
    pub los_prob_d2: f64,
    /// Mean cluster birth/death rate, events per second.
    pub lambda_c: f64,
    pub los_mode: LosMode,
    pub max_time_clusters: u32,
    pub time_clusters_los: CountDistribution,
    pub time_clusters_nlos: CountDistribution,
    pub spatial_lobes: CountDistribution,
    pub subpaths_per_cluster: CountDistribution,
    pub delay_spread_median_los_s: f64,
    pub delay_spread_median_nlos_s: f64,
    /// Standard deviation of ln(delay spread).
    pub delay_spread_log_sigma: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 73.5e9,
            scenario: Scenario::UmiStreetCanyon,
            correlation_distance_los: 12.0,
            correlation_distance_nlos: 15.0,
            correlation_distance_cluster_count: 7.5,
            los_field_correlation_distance: None,
            ple_los: 2.0,
            ple_nlos: 3.2,
            sf_sigma_los: 4.0,
            sf_sigma_nlos: 8.0,
            los_prob_d1: 22.0,
            los_prob_d2: 100.0,
            lambda_c: 0.2,
            los_mode: LosMode::Stochastic,
            max_time_clusters: 6,
            time_clusters_los: CountDistribution::uniform(1, 3),
            time_clusters_nlos: CountDistribution::uniform(1, 6),
            spatial_lobes: CountDistribution::uniform(1, 5),
            subpaths_per_cluster: CountDistribution::uniform(1, 10),
            delay_spread_median_los_s: 20e-9,
            delay_spread_median_nlos_s: 50e-9,
            delay_spread_log_sigma: 0.3,
        }
    }
}

impl ScenarioConfig {
    pub fn ple(&self, los: LosState) -> f64 {
        match los {
            LosState::Los => self.ple_los,
            LosState::Nlos => self.ple_nlos,
        }
    }

    pub fn sf_sigma(&self, los: LosState) -> f64 {
        match los {
            LosState::Los => self.sf_sigma_los,
            LosState::Nlos => self.sf_sigma_nlos,
        }
    }

    pub fn correlation_distance(&self, los: LosState) -> f64 {
        match los {
            LosState::Los => self.correlation_distance_los,
            LosState::Nlos => self.correlation_distance_nlos,
        }
    }

    pub fn los_field_distance(&self) -> f64 {
        self.los_field_correlation_distance
            .unwrap_or(self.correlation_distance_los)
    }

    pub fn time_clusters(&self, los: LosState) -> &CountDistribution {
        match los {
            LosState::Los => &self.time_clusters_los,
            LosState::Nlos => &self.time_clusters_nlos,
        }
    }

    pub fn delay_spread_median(&self, los: LosState) -> f64 {
        match los {
            LosState::Los => self.delay_spread_median_los_s,
            LosState::Nlos => self.delay_spread_median_nlos_s,
        }
    }
}

/// Which independent random field a quantity is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    LosDraw,
    RouteShadowFading,
    TimeClusters(LosState),
    SpatialLobes(LosState),
    DelaySpread(LosState),
    CellShadowFading(LosState),
    Subpaths(LosState, u32),
}

impl FieldRole {
    pub fn field_id(self) -> u32 {
        match self {
            FieldRole::LosDraw => 1,
            FieldRole::RouteShadowFading => 2,
            FieldRole::TimeClusters(s) => 10 + s.code(),
            FieldRole::SpatialLobes(s) => 20 + s.code(),
            FieldRole::DelaySpread(s) => 30 + s.code(),
            FieldRole::CellShadowFading(s) => 40 + s.code(),
            FieldRole::Subpaths(s, k) => 1000 + 100 * s.code() + k,
        }
    }
}

/// The family of seeded fields behind one drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSet {
    pub seed: u64,
}

impl FieldSet {
    pub const fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn spec(&self, role: FieldRole, correlation_distance: f64) -> CorrelatedFieldSpec {
        CorrelatedFieldSpec {
            correlation_distance,
            global_seed: self.seed,
            field_id: role.field_id(),
        }
    }
}

/// Large-scale parameters held constant over one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleParams {
    pub n_time_clusters: u32,
    pub n_spatial_lobes: u32,
    pub n_subpaths_per_cluster: Vec<u32>,
    pub rms_delay_spread: f64,
    pub shadow_fading: f64,
}

/// Squared distance model
/// `(min(d1/d, 1)·(1 − e^(−d/d2)) + e^(−d/d2))²`.
pub fn los_probability(d: f64, cfg: &ScenarioConfig) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid(format!("LOS probability needs d > 0, got {d}")));
    }
    let e = (-d / cfg.los_prob_d2).exp();
    let p = (cfg.los_prob_d1 / d).min(1.0) * (1.0 - e) + e;
    Ok((p * p).clamp(0.0, 1.0))
}

/// LOS state at each tick. In stochastic mode a correlated uniform sequence
/// along the route is compared with the LOS probability at each tick's T-R
/// separation.
pub fn los_state_along(
    ticks: &[UpdateTick],
    tx: &Position,
    cfg: &ScenarioConfig,
    fields: &FieldSet,
) -> Result<Vec<LosState>> {
    match cfg.los_mode {
        LosMode::AlwaysLos => return Ok(vec![LosState::Los; ticks.len()]),
        LosMode::AlwaysNlos => return Ok(vec![LosState::Nlos; ticks.len()]),
        LosMode::Stochastic => {}
    }
    let spec = fields.spec(FieldRole::LosDraw, cfg.los_field_distance());
    let positions: Vec<Position> = ticks.iter().map(|t| t.position).collect();
    let draws = crate::field::sample_ou_path(&positions, &spec)?;
    ticks
        .iter()
        .zip(draws)
        .map(|(t, g)| {
            let p = los_probability(tr_separation(tx, &t.position), cfg)?;
            let u = FieldSample::from_gaussian(g).uniform;
            Ok(if u < p { LosState::Los } else { LosState::Nlos })
        })
        .collect()
}

/// Shadow fading in dB along the route. One exponential filter runs over the
/// whole route; each step uses the correlation distance of the state being
/// entered and the value is scaled by that state's sigma.
pub fn shadow_fading_along(
    ticks: &[UpdateTick],
    los: &[LosState],
    cfg: &ScenarioConfig,
    fields: &FieldSet,
) -> Result<Vec<f64>> {
    if ticks.len() != los.len() {
        return Err(Error::invalid("ticks and LOS states differ in length"));
    }
    let Some(first) = los.first() else {
        return Ok(Vec::new());
    };
    let spec = fields.spec(FieldRole::RouteShadowFading, cfg.correlation_distance(*first));
    let mut walker = OuWalker::new(&spec);
    let mut out = Vec::with_capacity(ticks.len());
    out.push(cfg.sf_sigma(*first) * walker.value());
    for (w, &state) in ticks.windows(2).zip(&los[1..]) {
        let d = w[0].position.distance_to(&w[1].position);
        let g = walker.advance(d, cfg.correlation_distance(state));
        out.push(cfg.sf_sigma(state) * g);
    }
    Ok(out)
}

/// Grid-constant parameters of `cell` for the given LOS state. A pure
/// function of `(seed, cell, los)`; LOS and NLOS use independent fields.
pub fn lsp_for_grid(cell: GridIndex, los: LosState, cfg: &ScenarioConfig, fields: &FieldSet) -> LargeScaleParams {
    let d = cfg.correlation_distance_cluster_count;
    let draw = |role| cell_sample(cell, &fields.spec(role, d));

    let n_time_clusters = cfg
        .time_clusters(los)
        .quantile(draw(FieldRole::TimeClusters(los)).uniform)
        .min(cfg.max_time_clusters)
        .max(1);
    let n_spatial_lobes = cfg
        .spatial_lobes
        .quantile(draw(FieldRole::SpatialLobes(los)).uniform)
        .max(1);
    let n_subpaths_per_cluster = (0..n_time_clusters)
        .map(|k| {
            cfg.subpaths_per_cluster
                .quantile(draw(FieldRole::Subpaths(los, k)).uniform)
                .max(1)
        })
        .collect();
    let ds = draw(FieldRole::DelaySpread(los)).gaussian;
    let rms_delay_spread = cfg.delay_spread_median(los) * (cfg.delay_spread_log_sigma * ds).exp();
    let shadow_fading = cfg.sf_sigma(los) * draw(FieldRole::CellShadowFading(los)).gaussian;

    LargeScaleParams {
        n_time_clusters,
        n_spatial_lobes,
        n_subpaths_per_cluster,
        rms_delay_spread,
        shadow_fading,
    }
}

/// Free-space path loss at the 1 m reference distance, dB.
pub fn fspl_1m_db(f: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * f / SPEED_OF_LIGHT).log10()
}

/// Close-in path loss `FSPL(f, 1 m) + 10·n·log10(d) + sf`.
pub fn path_loss_db(f: f64, d: f64, los: LosState, sf: f64, cfg: &ScenarioConfig) -> Result<f64> {
    if !(d >= 1.0) {
        return Err(Error::invalid(format!(
            "distance {d} m is below the 1 m reference distance"
        )));
    }
    if !(f > 0.0) {
        return Err(Error::invalid(format!("carrier frequency must be positive, got {f}")));
    }
    Ok(fspl_1m_db(f) + 10.0 * cfg.ple(los) * d.log10() + sf)
}
