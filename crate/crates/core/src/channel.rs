//! Time-variant small-scale channel state.
//!
//! A [`ChannelState`] holds the live time clusters of one drive. Each update
//! tick applies, in order: the LOS state of the tick, a lookup of the target
//! large-scale parameters for the occupied cell, at most one Poisson birth /
//! death / replacement event, geometric evolution of every subpath, and CIR
//! synthesis normalized to the time-variant path loss.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::hash_words;
use crate::geometry::{build_update_schedule, grid_of, tr_separation, GridIndex, Position, Trajectory, UpdateTick};
use crate::large_scale::{
    los_state_along, lsp_for_grid, path_loss_db, shadow_fading_along, FieldSet, LargeScaleParams, LosState,
    ScenarioConfig, SPEED_OF_LIGHT,
};

const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmallScaleConfig {
    /// Updates over which a born cluster ramps to full power (and a dying one to zero).
    pub ramp_ticks: u32,
    /// Std of subpath azimuth offsets around their lobe center, degrees.
    pub subpath_angle_spread_deg: f64,
    /// Std of subpath elevations around the horizon, degrees.
    pub elevation_spread_deg: f64,
    /// Subpath excess delays within a cluster are drawn from `[0, spread)`.
    pub intra_cluster_spread_s: f64,
    /// Minimum empty delay gap enforced between cluster spans; 0 disables.
    pub min_cluster_gap_s: f64,
    /// Cluster power law `exp(-excess / (ratio · delay_scale))`.
    pub cluster_decay_ratio: f64,
    /// Implied scatterers closer than this hold their angles instead of drifting.
    pub min_scatterer_distance_m: f64,
}

impl Default for SmallScaleConfig {
    fn default() -> Self {
        Self {
            ramp_ticks: 3,
            subpath_angle_spread_deg: 10.0,
            elevation_spread_deg: 2.0,
            intra_cluster_spread_s: 10e-9,
            min_cluster_gap_s: 0.0,
            cluster_decay_ratio: 1.0,
            min_scatterer_distance_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subpath {
    /// Absolute propagation delay, seconds.
    pub delay: f64,
    /// Relative linear power (before ramp and path-loss scaling).
    pub power: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub aod_az: f64,
    pub aod_el: f64,
    /// Radians in `[0, 2π)`.
    pub phase: f64,
    #[serde(default)]
    pub is_los: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterPhase {
    Steady,
    Rising,
    Falling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeCluster {
    pub id: u64,
    pub base_delay: f64,
    pub subpaths: Vec<Subpath>,
    pub birth_tick: usize,
    pub ramp: f64,
    pub phase: ClusterPhase,
    pub lobe: usize,
}

impl TimeCluster {
    pub fn intrinsic_power(&self) -> f64 {
        self.subpaths.iter().map(|s| s.power).sum()
    }

    /// `ramp × Σ subpath powers`.
    pub fn power(&self) -> f64 {
        self.ramp * self.intrinsic_power()
    }

    pub fn is_live(&self) -> bool {
        self.phase != ClusterPhase::Falling
    }

    pub fn has_los(&self) -> bool {
        self.subpaths.iter().any(|s| s.is_los)
    }

    /// Delay span `[first, last]` of the subpaths.
    pub fn span(&self) -> (f64, f64) {
        self.subpaths
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.delay), hi.max(s.delay))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    pub aoa_az: f64,
    pub aod_az: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub clusters: Vec<TimeCluster>,
    pub los: LosState,
    /// Time of the most recent update (`t₀` of the event probability).
    pub last_update_time: f64,
    pub current_cell: GridIndex,
    pub lobes: Vec<Lobe>,
    /// Scale of cluster excess delays, seconds.
    pub delay_scale: f64,
    /// Decay constant of the power law for born clusters, seconds; never
    /// shorter than `cluster_decay_ratio` times the target delay spread.
    pub power_decay_time: f64,
    pub tick: usize,
    next_id: u64,
}

impl ChannelState {
    /// Number of clusters not ramping down.
    pub fn cluster_count(&self) -> usize {
        self.clusters.iter().filter(|c| c.is_live()).count()
    }

    /// True while any cluster is ramping up or down.
    pub fn in_transition(&self) -> bool {
        self.clusters.iter().any(|c| c.phase != ClusterPhase::Steady)
    }

    /// Index of the minimum-power live cluster; ties go to the earliest.
    pub fn weakest_live(&self) -> Option<usize> {
        self.clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_live())
            .fold(None, |best: Option<(usize, f64)>, (k, c)| match best {
                Some((_, p)) if p <= c.power() => best,
                _ => Some((k, c.power())),
            })
            .map(|(k, _)| k)
    }

    pub fn cluster(&self, id: u64) -> Option<&TimeCluster> {
        self.clusters.iter().find(|c| c.id == id)
    }

    fn take_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClusterEvent {
    Birth {
        added: u64,
    },
    Death {
        removed: u64,
    },
    Replacement {
        removed: u64,
        added: u64,
    },
    /// LOS cluster injected at an NLOS→LOS flip.
    LosBirth {
        added: u64,
    },
    /// As `LosBirth`, replacing the weakest cluster when the count is at its cap.
    LosReplacement {
        removed: u64,
        added: u64,
    },
}

impl ClusterEvent {
    pub fn removed(&self) -> Option<u64> {
        match *self {
            ClusterEvent::Death { removed }
            | ClusterEvent::Replacement { removed, .. }
            | ClusterEvent::LosReplacement { removed, .. } => Some(removed),
            _ => None,
        }
    }

    pub fn added(&self) -> Option<u64> {
        match *self {
            ClusterEvent::Birth { added }
            | ClusterEvent::Replacement { added, .. }
            | ClusterEvent::LosBirth { added }
            | ClusterEvent::LosReplacement { added, .. } => Some(added),
            ClusterEvent::Death { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirTap {
    pub amplitude: Complex64,
    pub delay: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub aod_az: f64,
    pub aod_el: f64,
    pub cluster_id: u64,
}

impl CirTap {
    pub fn power(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cir {
    pub taps: Vec<CirTap>,
    pub timestamp: f64,
    pub rx: Position,
}

impl Cir {
    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(CirTap::power).sum()
    }

    /// Power-weighted rms spread of tap delays; 0 for an empty or single-tap CIR.
    pub fn rms_delay_spread(&self) -> f64 {
        let total = self.total_power();
        if !(total > 0.0) {
            return 0.0;
        }
        let mean = self.taps.iter().map(|t| t.power() * t.delay).sum::<f64>() / total;
        let second = self
            .taps
            .iter()
            .map(|t| t.power() * (t.delay - mean).powi(2))
            .sum::<f64>()
            / total;
        second.max(0.0).sqrt()
    }
}

/// Azimuth (degrees, `[0, 360)`) and elevation (degrees) of `to` seen from `from`.
pub fn direction(from: &Position, to: &Position) -> (f64, f64) {
    let [dx, dy, dz] = to.offset_from(from);
    let az = dy.atan2(dx).to_degrees().rem_euclid(360.0);
    let el = dz.atan2(dx.hypot(dy)).to_degrees();
    (az, el)
}

/// Unit vector pointing at azimuth/elevation in degrees.
pub fn unit_vector(az_deg: f64, el_deg: f64) -> [f64; 3] {
    let (az, el) = (az_deg.to_radians(), el_deg.to_radians());
    [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

fn rms_of(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let total: f64 = pairs.clone().map(|(_, p)| p).sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let mean = pairs.clone().map(|(d, p)| d * p).sum::<f64>() / total;
    (pairs.map(|(d, p)| p * (d - mean).powi(2)).sum::<f64>() / total)
        .max(0.0)
        .sqrt()
}

/// Subpath excess delays within a cluster and their share of cluster power.
fn intra_cluster_layout<R: Rng + ?Sized>(n: u32, cfg: &SmallScaleConfig, rng: &mut R) -> Vec<(f64, f64)> {
    let spread = cfg.intra_cluster_spread_s;
    let mut offsets: Vec<f64> = std::iter::once(0.0)
        .chain((1..n).map(|_| rng.random::<f64>() * spread))
        .collect();
    offsets.sort_by(f64::total_cmp);
    let decay = (spread / 2.0).max(f64::MIN_POSITIVE);
    let weights: Vec<f64> = offsets.iter().map(|o| (-o / decay).exp()).collect();
    let total: f64 = weights.iter().sum();
    offsets.into_iter().zip(weights).map(|(o, w)| (o, w / total)).collect()
}

struct Draft {
    excess: f64,
    power: f64,
    lobe: usize,
    layout: Vec<(f64, f64)>,
}

/// Cluster base delays `direct + scale × excess`, pushed apart where needed so
/// that cluster spans are separated by at least the configured gap.
fn place_base_delays(drafts: &[Draft], direct: f64, scale: f64, cfg: &SmallScaleConfig) -> Vec<f64> {
    let mut order: Vec<usize> = (0..drafts.len()).collect();
    order.sort_by(|&a, &b| drafts[a].excess.total_cmp(&drafts[b].excess));
    let mut base = vec![0.0; drafts.len()];
    let mut earliest = f64::NEG_INFINITY;
    for k in order {
        let want = direct + scale * drafts[k].excess;
        let b = if cfg.min_cluster_gap_s > 0.0 {
            want.max(earliest)
        } else {
            want
        };
        base[k] = b;
        let width = drafts[k].layout.last().map_or(0.0, |l| l.0);
        earliest = b + width + cfg.min_cluster_gap_s;
    }
    base
}

fn draft_rms(drafts: &[Draft], base: &[f64]) -> f64 {
    rms_of(
        drafts
            .iter()
            .zip(base)
            .flat_map(|(d, b)| d.layout.iter().map(move |(o, share)| (b + o, d.power * share))),
    )
}

fn make_subpath<R: Rng + ?Sized>(delay: f64, power: f64, lobe: Lobe, cfg: &SmallScaleConfig, rng: &mut R) -> Subpath {
    let spread = cfg.subpath_angle_spread_deg;
    let el = cfg.elevation_spread_deg;
    Subpath {
        delay,
        power,
        aoa_az: (lobe.aoa_az + spread * normal(rng)).rem_euclid(360.0),
        aoa_el: (el * normal(rng)).clamp(-90.0, 90.0),
        aod_az: (lobe.aod_az + spread * normal(rng)).rem_euclid(360.0),
        aod_el: (el * normal(rng)).clamp(-90.0, 90.0),
        phase: rng.random::<f64>() * TWO_PI,
        is_los: false,
    }
}

fn direct_subpath(tx: &Position, rx: &Position, power: f64, phase: f64) -> Subpath {
    let (aoa_az, aoa_el) = direction(rx, tx);
    let (aod_az, aod_el) = direction(tx, rx);
    Subpath {
        delay: tr_separation(tx, rx) / SPEED_OF_LIGHT,
        power,
        aoa_az,
        aoa_el,
        aod_az,
        aod_el,
        phase,
        is_los: true,
    }
}

fn direct_lobe(tx: &Position, rx: &Position) -> Lobe {
    Lobe {
        aoa_az: direction(rx, tx).0,
        aod_az: direction(tx, rx).0,
    }
}

#[allow(clippy::too_many_arguments)]
fn build_cluster<R: Rng + ?Sized>(
    id: u64,
    base: f64,
    draft: &Draft,
    lobe: Lobe,
    los: Option<(&Position, &Position)>,
    birth_tick: usize,
    rising: bool,
    cfg: &SmallScaleConfig,
    rng: &mut R,
) -> TimeCluster {
    let subpaths = draft
        .layout
        .iter()
        .enumerate()
        .map(|(m, &(offset, share))| match (m, los) {
            (0, Some((tx, rx))) => direct_subpath(tx, rx, draft.power * share, rng.random::<f64>() * TWO_PI),
            _ => make_subpath(base + offset, draft.power * share, lobe, cfg, rng),
        })
        .collect();
    let (ramp, phase) = if rising && cfg.ramp_ticks > 0 {
        (0.0, ClusterPhase::Rising)
    } else {
        (1.0, ClusterPhase::Steady)
    };
    TimeCluster {
        id,
        base_delay: base,
        subpaths,
        birth_tick,
        ramp,
        phase,
        lobe: draft.lobe,
    }
}

/// Initial cluster set for a drive starting at `rx`.
///
/// The first cluster arrives at the direct-path delay (and carries the direct
/// path in LOS). Later clusters get i.i.d. exponential excess delays whose
/// common scale is solved so the PDP rms delay spread matches
/// `lsp.rms_delay_spread`; cluster powers decay exponentially with excess delay.
pub fn init_channel<R: Rng + ?Sized>(
    lsp: &LargeScaleParams,
    los: LosState,
    cell: GridIndex,
    tx: &Position,
    rx: &Position,
    cfg: &SmallScaleConfig,
    rng: &mut R,
) -> ChannelState {
    let n = lsp.n_time_clusters.max(1) as usize;
    let direct = tr_separation(tx, rx) / SPEED_OF_LIGHT;

    let mut lobes: Vec<Lobe> = (0..lsp.n_spatial_lobes.max(1))
        .map(|_| Lobe {
            aoa_az: rng.random::<f64>() * 360.0,
            aod_az: rng.random::<f64>() * 360.0,
        })
        .collect();
    if los == LosState::Los {
        lobes[0] = direct_lobe(tx, rx);
    }

    let ratio = cfg.cluster_decay_ratio;
    let drafts: Vec<Draft> = (0..n)
        .map(|k| {
            let excess = if k == 0 { 0.0 } else { exp1(rng) };
            let subpaths = lsp.n_subpaths_per_cluster.get(k).copied().unwrap_or(1).max(1);
            Draft {
                excess,
                power: (-excess / ratio).exp(),
                lobe: if k == 0 { 0 } else { rng.random_range(0..lobes.len()) },
                layout: intra_cluster_layout(subpaths, cfg, rng),
            }
        })
        .collect();

    let target = lsp.rms_delay_spread;
    let mut scale = target;
    if n > 1 && target > 0.0 {
        // rms grows roughly linearly in the scale; a few fixed-point passes converge
        for _ in 0..50 {
            let rms = draft_rms(&drafts, &place_base_delays(&drafts, direct, scale, cfg));
            if !(rms > 0.0) {
                break;
            }
            let ratio = target / rms;
            scale *= ratio;
            if (ratio - 1.0).abs() < 1e-6 {
                break;
            }
        }
        // large gaps can make the target unreachable; keep the scale (and the
        // birth power law built on it) from collapsing
        scale = scale.max(0.05 * target);
    }
    let base = place_base_delays(&drafts, direct, scale, cfg);

    let mut clusters = Vec::with_capacity(n);
    for (k, d) in drafts.iter().enumerate() {
        let los_geom = (k == 0 && los == LosState::Los).then_some((tx, rx));
        clusters.push(build_cluster(
            k as u64,
            base[k],
            d,
            lobes[d.lobe],
            los_geom,
            0,
            false,
            cfg,
            rng,
        ));
    }

    ChannelState {
        clusters,
        los,
        last_update_time: 0.0,
        current_cell: cell,
        lobes,
        delay_scale: scale,
        power_decay_time: ratio * scale.max(lsp.rms_delay_spread),
        tick: 0,
        next_id: n as u64,
    }
}

/// `1 − exp(−λ_c·Δt)`.
pub fn birth_death_probability(delta_t: f64, lambda_c: f64) -> Result<f64> {
    if !(delta_t >= 0.0) || !(lambda_c >= 0.0) {
        return Err(Error::invalid(format!(
            "birth/death probability needs non-negative inputs, got Δt={delta_t}, λ={lambda_c}"
        )));
    }
    Ok(-(-lambda_c * delta_t).exp_m1())
}

/// Step ramps by one update; fully faded clusters are dropped.
fn advance_ramps(state: &mut ChannelState, cfg: &SmallScaleConfig) {
    let step = if cfg.ramp_ticks == 0 {
        1.0
    } else {
        1.0 / cfg.ramp_ticks as f64
    };
    for c in &mut state.clusters {
        match c.phase {
            ClusterPhase::Rising => {
                c.ramp += step;
                if c.ramp >= 1.0 - 1e-9 {
                    c.ramp = 1.0;
                    c.phase = ClusterPhase::Steady;
                }
            }
            ClusterPhase::Falling => c.ramp -= step,
            ClusterPhase::Steady => {}
        }
    }
    state
        .clusters
        .retain(|c| !(c.phase == ClusterPhase::Falling && c.ramp <= 1e-9));
}

fn retire(state: &mut ChannelState, k: usize, cfg: &SmallScaleConfig) -> u64 {
    let id = state.clusters[k].id;
    if cfg.ramp_ticks == 0 {
        state.clusters.remove(k);
    } else {
        state.clusters[k].phase = ClusterPhase::Falling;
    }
    id
}

/// Draws an excess delay that keeps the configured gap to every existing
/// cluster span, falling back to just after the latest span.
fn birth_delay<R: Rng + ?Sized>(
    state: &ChannelState,
    direct: f64,
    width: f64,
    cfg: &SmallScaleConfig,
    rng: &mut R,
) -> f64 {
    let gap = cfg.min_cluster_gap_s;
    let fits = |b: f64| {
        gap <= 0.0
            || state.clusters.iter().all(|c| {
                let (lo, hi) = c.span();
                b + width + gap <= lo || b >= hi + gap
            })
    };
    for _ in 0..64 {
        let b = direct + state.delay_scale * exp1(rng);
        if fits(b) {
            return b;
        }
    }
    let latest = state.clusters.iter().map(|c| c.span().1).fold(direct, f64::max);
    latest + gap
}

fn spawn_cluster<R: Rng + ?Sized>(
    state: &mut ChannelState,
    target: &LargeScaleParams,
    tx: &Position,
    rx: &Position,
    los_direct: bool,
    cfg: &SmallScaleConfig,
    rng: &mut R,
) -> u64 {
    let direct = tr_separation(tx, rx) / SPEED_OF_LIGHT;
    let slot = state
        .cluster_count()
        .min(target.n_subpaths_per_cluster.len().saturating_sub(1));
    let subpaths = if los_direct {
        target.n_subpaths_per_cluster.first().copied().unwrap_or(1)
    } else {
        target.n_subpaths_per_cluster.get(slot).copied().unwrap_or(1)
    };
    let layout = intra_cluster_layout(subpaths.max(1), cfg, rng);
    let width = layout.last().map_or(0.0, |l| l.0);

    let (base, lobe_idx, lobe) = if los_direct {
        (direct, 0, direct_lobe(tx, rx))
    } else {
        let k = rng.random_range(0..target.n_spatial_lobes.max(1) as usize);
        while state.lobes.len() <= k {
            state.lobes.push(Lobe {
                aoa_az: rng.random::<f64>() * 360.0,
                aod_az: rng.random::<f64>() * 360.0,
            });
        }
        (birth_delay(state, direct, width, cfg, rng), k, state.lobes[k])
    };
    let excess = (base - direct).max(0.0);
    let draft = Draft {
        excess,
        power: (-excess / state.power_decay_time.max(f64::MIN_POSITIVE)).exp(),
        lobe: lobe_idx,
        layout,
    };
    let id = state.take_id();
    let los_geom = los_direct.then_some((tx, rx));
    let cluster = build_cluster(id, base, &draft, lobe, los_geom, state.tick, true, cfg, rng);
    state.clusters.push(cluster);
    id
}

/// Outcome of one tick of the birth/death process.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BirthDeathOutcome {
    /// Whether the Poisson draw fired.
    pub fired: bool,
    pub event: Option<ClusterEvent>,
}

/// Advances ramps, then fires an event with probability
/// `1 − exp(−λ_c (t − t₀))` and moves `t₀` to `t`. An event replaces the
/// weakest live cluster when the live count equals the target, adds one
/// cluster when below, and retires the weakest when above.
///
/// `rx` is the receiver position the state currently describes.
#[allow(clippy::too_many_arguments)]
pub fn apply_birth_death<R: Rng + ?Sized>(
    state: &mut ChannelState,
    target: &LargeScaleParams,
    t: f64,
    lambda_c: f64,
    tx: &Position,
    rx: &Position,
    cfg: &SmallScaleConfig,
    rng: &mut R,
) -> Result<BirthDeathOutcome> {
    if t < state.last_update_time {
        return Err(Error::invalid(format!(
            "update time {t} precedes the previous update {}",
            state.last_update_time
        )));
    }
    advance_ramps(state, cfg);
    let p = birth_death_probability(t - state.last_update_time, lambda_c)?;
    state.last_update_time = t;
    if !(rng.random::<f64>() < p) {
        return Ok(BirthDeathOutcome::default());
    }

    let live = state.cluster_count();
    let wanted = target.n_time_clusters.max(1) as usize;
    let event = if live < wanted || live == 0 {
        ClusterEvent::Birth {
            added: spawn_cluster(state, target, tx, rx, false, cfg, rng),
        }
    } else {
        let weakest = state.weakest_live().expect("live clusters present");
        let removed = retire(state, weakest, cfg);
        if live == wanted {
            ClusterEvent::Replacement {
                removed,
                added: spawn_cluster(state, target, tx, rx, false, cfg, rng),
            }
        } else {
            ClusterEvent::Death { removed }
        }
    };
    Ok(BirthDeathOutcome {
        fired: true,
        event: Some(event),
    })
}

/// Injects the direct-path cluster at an NLOS→LOS flip. The new cluster
/// enters at full power; at the cluster cap it replaces the weakest one.
fn inject_los_cluster<R: Rng + ?Sized>(
    state: &mut ChannelState,
    target: &LargeScaleParams,
    max_clusters: usize,
    tx: &Position,
    rx: &Position,
    cfg: &SmallScaleConfig,
    rng: &mut R,
) -> ClusterEvent {
    advance_ramps(state, cfg);
    let removed = if state.cluster_count() >= max_clusters {
        state.weakest_live().map(|k| retire(state, k, cfg))
    } else {
        None
    };
    let added = spawn_cluster(state, target, tx, rx, true, cfg, rng);
    if let Some(c) = state.clusters.iter_mut().find(|c| c.id == added) {
        c.ramp = 1.0;
        c.phase = ClusterPhase::Steady;
    }
    match removed {
        Some(removed) => ClusterEvent::LosReplacement { removed, added },
        None => ClusterEvent::LosBirth { added },
    }
}

/// Moves every subpath from `prev_tick` to `tick`.
///
/// Scattered subpaths: the delay changes by `−(Δr·û)/c` with `û` the arrival
/// direction, the phase by `2π f (Δr·û)/c`, and the arrival angles are
/// re-aimed at the single-bounce scatterer implied by the current arrival
/// direction and delay. Departure angles stay fixed. The direct path is
/// recomputed exactly from geometry. No subpath may precede the direct path.
pub fn evolve_small_scale(
    state: &mut ChannelState,
    tick: &UpdateTick,
    prev_tick: &UpdateTick,
    tx: &Position,
    carrier_frequency_hz: f64,
    cfg: &SmallScaleConfig,
) -> Result<()> {
    if tick.index != prev_tick.index + 1 {
        return Err(Error::invalid(format!(
            "ticks {} and {} are not consecutive",
            prev_tick.index, tick.index
        )));
    }
    let (r0, r1) = (&prev_tick.position, &tick.position);
    let disp = r1.offset_from(r0);
    let to_tx = tx.offset_from(r0);
    let d2 = dot(to_tx, to_tx);
    let direct_new = tr_separation(tx, r1) / SPEED_OF_LIGHT;
    let (los_az, los_el) = direction(r1, tx);
    let (lod_az, lod_el) = direction(tx, r1);

    for cluster in &mut state.clusters {
        for s in &mut cluster.subpaths {
            let dtau = if s.is_los {
                let dtau = direct_new - s.delay;
                s.delay = direct_new;
                (s.aoa_az, s.aoa_el, s.aod_az, s.aod_el) = (los_az, los_el, lod_az, lod_el);
                dtau
            } else {
                let u = unit_vector(s.aoa_az, s.aoa_el);
                let path = s.delay * SPEED_OF_LIGHT;
                let den = path - dot(to_tx, u);
                let rho = (path * path - d2) / (2.0 * den);
                if den > 0.0 && rho.is_finite() && rho >= cfg.min_scatterer_distance_m {
                    let scatterer = r0.translated(u.map(|c| c * rho));
                    (s.aoa_az, s.aoa_el) = direction(r1, &scatterer);
                }
                let old = s.delay;
                s.delay = (old - dot(disp, u) / SPEED_OF_LIGHT).max(direct_new);
                s.delay - old
            };
            s.phase = (s.phase - TWO_PI * carrier_frequency_hz * dtau).rem_euclid(TWO_PI);
        }
        cluster.base_delay = cluster.span().0;
    }
    state.tick = tick.index;
    Ok(())
}

/// A drive route with its precomputed along-route quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub ticks: Vec<UpdateTick>,
    pub los: Vec<LosState>,
    pub shadow_fading_db: Vec<f64>,
    pub tx: Position,
    pub grid_origin: Position,
}

impl Route {
    pub fn prepare(
        trajectory: &Trajectory,
        update_distance: f64,
        tx: Position,
        grid_origin: Position,
        scenario: &ScenarioConfig,
        fields: &FieldSet,
    ) -> Result<Self> {
        let ticks = build_update_schedule(trajectory, update_distance)?;
        Self::from_ticks(ticks, tx, grid_origin, scenario, fields)
    }

    pub fn from_ticks(
        ticks: Vec<UpdateTick>,
        tx: Position,
        grid_origin: Position,
        scenario: &ScenarioConfig,
        fields: &FieldSet,
    ) -> Result<Self> {
        if ticks.is_empty() {
            return Err(Error::invalid("route has no ticks"));
        }
        let los = los_state_along(&ticks, &tx, scenario, fields)?;
        let shadow_fading_db = shadow_fading_along(&ticks, &los, scenario, fields)?;
        Ok(Self {
            ticks,
            los,
            shadow_fading_db,
            tx,
            grid_origin,
        })
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn cell(&self, k: usize, scenario: &ScenarioConfig) -> Result<GridIndex> {
        grid_of(
            &self.ticks[k].position,
            scenario.correlation_distance_cluster_count,
            &self.grid_origin,
        )
    }

    pub fn path_loss_db(&self, k: usize, scenario: &ScenarioConfig) -> Result<f64> {
        let d = tr_separation(&self.tx, &self.ticks[k].position);
        path_loss_db(
            scenario.carrier_frequency_hz,
            d,
            self.los[k],
            self.shadow_fading_db[k],
            scenario,
        )
    }
}

/// Everything observed at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub cir: Cir,
    pub path_loss_db: f64,
    pub cell: GridIndex,
    pub target: LargeScaleParams,
    /// `Some(fired)` when the Poisson draw ran this tick.
    pub draw: Option<bool>,
    pub event: Option<ClusterEvent>,
    pub los_flip: bool,
}

/// CIR whose total power equals `10^(−PL/10)`.
pub fn synthesize_cir(state: &ChannelState, path_loss_db: f64, timestamp: f64, rx: Position) -> Cir {
    let total: f64 = state.clusters.iter().map(TimeCluster::power).sum();
    let gain = 10f64.powf(-path_loss_db / 20.0);
    let taps = if total > 0.0 {
        state
            .clusters
            .iter()
            .filter(|c| c.ramp > 0.0)
            .flat_map(|c| {
                c.subpaths.iter().map(move |s| CirTap {
                    amplitude: Complex64::from_polar((c.ramp * s.power / total).sqrt() * gain, s.phase),
                    delay: s.delay,
                    aoa_az: s.aoa_az,
                    aoa_el: s.aoa_el,
                    aod_az: s.aod_az,
                    aod_el: s.aod_el,
                    cluster_id: c.id,
                })
            })
            .filter(|t| t.amplitude.norm_sqr() > 0.0)
            .collect()
    } else {
        Vec::new()
    };
    Cir { taps, timestamp, rx }
}

/// Initial state and output at tick 0.
pub fn start_drive<R: Rng + ?Sized>(
    route: &Route,
    scenario: &ScenarioConfig,
    small: &SmallScaleConfig,
    fields: &FieldSet,
    rng: &mut R,
) -> Result<(ChannelState, StepOutput)> {
    let tick = &route.ticks[0];
    let los = route.los[0];
    let cell = route.cell(0, scenario)?;
    let target = lsp_for_grid(cell, los, scenario, fields);
    let mut state = init_channel(&target, los, cell, &route.tx, &tick.position, small, rng);
    state.last_update_time = tick.time;
    state.tick = tick.index;
    let pl = route.path_loss_db(0, scenario)?;
    let cir = synthesize_cir(&state, pl, tick.time, tick.position);
    Ok((
        state,
        StepOutput {
            cir,
            path_loss_db: pl,
            cell,
            target,
            draw: None,
            event: None,
            los_flip: false,
        },
    ))
}

/// Advances `state` from tick `k − 1` to tick `k` of `route`.
pub fn step<R: Rng + ?Sized>(
    state: &mut ChannelState,
    route: &Route,
    k: usize,
    scenario: &ScenarioConfig,
    small: &SmallScaleConfig,
    fields: &FieldSet,
    rng: &mut R,
) -> Result<StepOutput> {
    if k == 0 || k >= route.len() {
        return Err(Error::invalid(format!(
            "tick {k} has no predecessor on a {}-tick route",
            route.len()
        )));
    }
    let (prev, tick) = (&route.ticks[k - 1], &route.ticks[k]);

    // (1) LOS state
    let los = route.los[k];
    let flip = los != state.los;
    let to_los = flip && los == LosState::Los;
    if flip && los == LosState::Nlos {
        // the direct path becomes an ordinary first-arrival path
        for s in state.clusters.iter_mut().flat_map(|c| c.subpaths.iter_mut()) {
            s.is_los = false;
        }
    }
    state.los = los;

    // (2) target parameters of the occupied cell
    let cell = route.cell(k, scenario)?;
    state.current_cell = cell;
    let target = lsp_for_grid(cell, los, scenario, fields);

    // (3) birth / death, against the geometry the state currently describes
    let (draw, event) = if to_los {
        let ev = inject_los_cluster(
            state,
            &target,
            scenario.max_time_clusters as usize,
            &route.tx,
            &prev.position,
            small,
            rng,
        );
        state.last_update_time = tick.time;
        (None, Some(ev))
    } else {
        let out = apply_birth_death(
            state,
            &target,
            tick.time,
            scenario.lambda_c,
            &route.tx,
            &prev.position,
            small,
            rng,
        )?;
        (Some(out.fired), out.event)
    };

    // (4) small-scale evolution
    evolve_small_scale(state, tick, prev, &route.tx, scenario.carrier_frequency_hz, small)?;

    // (5) CIR
    let pl = route.path_loss_db(k, scenario)?;
    let cir = synthesize_cir(state, pl, tick.time, tick.position);
    Ok(StepOutput {
        cir,
        path_loss_db: pl,
        cell,
        target,
        draw,
        event,
        los_flip: flip,
    })
}

/// Per-drive RNG for small-scale draws, derived from the drive seed.
pub fn drive_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(hash_words(&[seed, 0x0053_4d41_4c4c]))
}

/// Iterates a whole drive: tick 0 from [`start_drive`], then [`step`].
pub struct Drive<'a> {
    route: &'a Route,
    scenario: &'a ScenarioConfig,
    small: &'a SmallScaleConfig,
    fields: FieldSet,
    rng: ChaCha8Rng,
    state: Option<ChannelState>,
    next: usize,
}

impl<'a> Drive<'a> {
    pub fn new(route: &'a Route, scenario: &'a ScenarioConfig, small: &'a SmallScaleConfig, fields: FieldSet) -> Self {
        Self {
            route,
            scenario,
            small,
            fields,
            rng: drive_rng(fields.seed),
            state: None,
            next: 0,
        }
    }

    pub fn state(&self) -> Option<&ChannelState> {
        self.state.as_ref()
    }

    /// Next tick's output together with the state after it.
    pub fn advance(&mut self) -> Option<Result<(StepOutput, &ChannelState)>> {
        if self.next >= self.route.len() {
            return None;
        }
        let k = self.next;
        self.next += 1;
        let out = match self.state.as_mut() {
            None => start_drive(self.route, self.scenario, self.small, &self.fields, &mut self.rng).map(|(s, o)| {
                self.state = Some(s);
                o
            }),
            Some(state) => step(
                state,
                self.route,
                k,
                self.scenario,
                self.small,
                &self.fields,
                &mut self.rng,
            ),
        };
        Some(out.map(|o| (o, self.state.as_ref().expect("state initialized"))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Heading;
    use crate::large_scale::LosMode;
    use approx::assert_relative_eq;

    fn lsp(n: u32, subpaths: u32, ds: f64) -> LargeScaleParams {
        LargeScaleParams {
            n_time_clusters: n,
            n_spatial_lobes: 2,
            n_subpaths_per_cluster: vec![subpaths; n as usize],
            rms_delay_spread: ds,
            shadow_fading: 0.0,
        }
    }

    fn tick(index: usize, x: f64, y: f64) -> UpdateTick {
        UpdateTick {
            index,
            time: index as f64,
            position: Position::new(x, y, 1.5),
            heading: Heading::default(),
        }
    }

    #[test]
    fn single_tap_at_direct_delay() {
        let tx = Position::new(0.0, 0.0, 1.5);
        let rx = Position::new(30.0, 0.0, 1.5);
        let mut rng = drive_rng(1);
        let s = init_channel(
            &lsp(1, 1, 50e-9),
            LosState::Los,
            GridIndex::new(0, 0),
            &tx,
            &rx,
            &SmallScaleConfig::default(),
            &mut rng,
        );
        assert_eq!(s.clusters.len(), 1);
        assert_eq!(s.clusters[0].subpaths.len(), 1);
        // 30 m / c
        assert!((s.clusters[0].subpaths[0].delay * 1e9 - 100.07).abs() < 0.005);
        assert!(s.clusters[0].subpaths[0].is_los);
        let cir = synthesize_cir(&s, 100.0, 0.0, rx);
        assert_eq!(cir.taps.len(), 1);
        assert_relative_eq!(cir.total_power(), 1e-10, max_relative = 1e-12);
    }

    #[test]
    fn init_matches_requested_delay_spread() {
        let tx = Position::new(0.0, 0.0, 4.0);
        let rx = Position::new(60.0, 10.0, 1.5);
        let cfg = SmallScaleConfig::default();
        for seed in 0..200 {
            let mut rng = drive_rng(seed);
            let s = init_channel(
                &lsp(5, 4, 50e-9),
                LosState::Nlos,
                GridIndex::new(0, 0),
                &tx,
                &rx,
                &cfg,
                &mut rng,
            );
            let cir = synthesize_cir(&s, 0.0, 0.0, rx);
            let ds = cir.rms_delay_spread();
            assert!((45e-9..=55e-9).contains(&ds), "seed {seed}: {ds}");
            let first = s.clusters.iter().map(|c| c.base_delay).fold(f64::INFINITY, f64::min);
            assert_relative_eq!(first, tr_separation(&tx, &rx) / SPEED_OF_LIGHT, max_relative = 1e-12);
        }
    }

    #[test]
    fn gaps_enforced_at_init() {
        let tx = Position::new(0.0, 0.0, 4.0);
        let rx = Position::new(40.0, 0.0, 1.5);
        let cfg = SmallScaleConfig {
            min_cluster_gap_s: 50e-9,
            ..Default::default()
        };
        let mut rng = drive_rng(3);
        let s = init_channel(
            &lsp(6, 5, 40e-9),
            LosState::Nlos,
            GridIndex::new(0, 0),
            &tx,
            &rx,
            &cfg,
            &mut rng,
        );
        let mut spans: Vec<(f64, f64)> = s.clusters.iter().map(TimeCluster::span).collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in spans.windows(2) {
            assert!(w[1].0 - w[0].1 >= 50e-9 * (1.0 - 1e-9));
        }
    }

    #[test]
    fn event_probability_closed_forms() {
        assert_eq!(birth_death_probability(0.0, 0.8).unwrap(), 0.0);
        assert_relative_eq!(
            birth_death_probability(1.0, std::f64::consts::LN_2).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!((birth_death_probability(1.0, 0.8).unwrap() - 0.5507).abs() < 1e-4);
        assert!(birth_death_probability(-1.0, 0.8).is_err());
        assert!(birth_death_probability(1.0, -0.1).is_err());
    }

    fn state_with(n: u32) -> (ChannelState, Position, Position) {
        let tx = Position::new(0.0, 0.0, 4.0);
        let rx = Position::new(50.0, 0.0, 1.5);
        let mut rng = drive_rng(17);
        let s = init_channel(
            &lsp(n, 3, 30e-9),
            LosState::Nlos,
            GridIndex::new(0, 0),
            &tx,
            &rx,
            &SmallScaleConfig::default(),
            &mut rng,
        );
        (s, tx, rx)
    }

    #[test]
    fn replacement_keeps_count_and_swaps_weakest() {
        let (mut s, tx, rx) = state_with(3);
        let weakest = s.clusters[s.weakest_live().unwrap()].id;
        let mut rng = drive_rng(5);
        // huge rate makes the event certain
        let out = apply_birth_death(
            &mut s,
            &lsp(3, 3, 30e-9),
            1.0,
            1e9,
            &tx,
            &rx,
            &SmallScaleConfig::default(),
            &mut rng,
        )
        .unwrap();
        match out.event {
            Some(ClusterEvent::Replacement { removed, added }) => {
                assert_eq!(removed, weakest);
                assert!(added >= 3);
            }
            other => panic!("expected replacement, got {other:?}"),
        }
        assert_eq!(s.cluster_count(), 3);
        assert_eq!(s.last_update_time, 1.0);
    }

    #[test]
    fn birth_then_steady_after_ramp() {
        let (mut s, tx, rx) = state_with(3);
        let cfg = SmallScaleConfig::default();
        let mut rng = drive_rng(6);
        let target = lsp(4, 3, 30e-9);
        let out = apply_birth_death(&mut s, &target, 1.0, 1e9, &tx, &rx, &cfg, &mut rng).unwrap();
        let added = out.event.unwrap().added().unwrap();
        assert_eq!(s.cluster_count(), 4);
        assert_eq!(s.cluster(added).unwrap().ramp, 0.0);
        for t in 2..=4 {
            apply_birth_death(&mut s, &target, t as f64, 0.0, &tx, &rx, &cfg, &mut rng).unwrap();
        }
        assert_eq!(s.cluster(added).unwrap().ramp, 1.0);
        assert!(!s.in_transition());
    }

    #[test]
    fn death_retires_weakest_after_ramp() {
        let (mut s, tx, rx) = state_with(4);
        let cfg = SmallScaleConfig::default();
        let mut rng = drive_rng(7);
        let weakest = s.clusters[s.weakest_live().unwrap()].id;
        let target = lsp(2, 3, 30e-9);
        let out = apply_birth_death(&mut s, &target, 1.0, 1e9, &tx, &rx, &cfg, &mut rng).unwrap();
        assert_eq!(out.event, Some(ClusterEvent::Death { removed: weakest }));
        assert_eq!(s.cluster_count(), 3);
        assert_eq!(s.clusters.len(), 4);
        for t in 2..=4 {
            apply_birth_death(&mut s, &target, t as f64, 0.0, &tx, &rx, &cfg, &mut rng).unwrap();
        }
        assert!(s.cluster(weakest).is_none());
    }

    #[test]
    fn zero_rate_never_fires() {
        let (mut s, tx, rx) = state_with(3);
        let before = s.clone();
        let mut rng = drive_rng(8);
        for t in 1..500 {
            let out = apply_birth_death(
                &mut s,
                &lsp(5, 3, 30e-9),
                t as f64 * 10.0,
                0.0,
                &tx,
                &rx,
                &SmallScaleConfig::default(),
                &mut rng,
            )
            .unwrap();
            assert!(!out.fired);
        }
        assert_eq!(s.clusters, before.clusters);
    }

    #[test]
    fn time_must_not_go_backwards() {
        let (mut s, tx, rx) = state_with(2);
        s.last_update_time = 5.0;
        let mut rng = drive_rng(9);
        assert!(apply_birth_death(
            &mut s,
            &lsp(2, 3, 30e-9),
            4.0,
            0.1,
            &tx,
            &rx,
            &SmallScaleConfig::default(),
            &mut rng
        )
        .is_err());
    }

    fn lone_subpath(delay: f64, aoa_az: f64) -> ChannelState {
        let (mut s, _, _) = state_with(1);
        s.clusters[0].subpaths = vec![Subpath {
            delay,
            power: 1.0,
            aoa_az,
            aoa_el: 0.0,
            aod_az: 0.0,
            aod_el: 0.0,
            phase: 1.0,
            is_los: false,
        }];
        s
    }

    #[test]
    fn motion_toward_arrival_shortens_delay_by_one_meter() {
        let tx = Position::new(0.0, 0.0, 1.5);
        let mut s = lone_subpath(400e-9, 0.0);
        let cfg = SmallScaleConfig {
            min_scatterer_distance_m: f64::INFINITY,
            ..Default::default()
        };
        evolve_small_scale(&mut s, &tick(1, 51.0, 0.0), &tick(0, 50.0, 0.0), &tx, 73.5e9, &cfg).unwrap();
        let dtau = 400e-9 - s.clusters[0].subpaths[0].delay;
        assert!((dtau * 1e9 - 3.336).abs() < 1e-3);
    }

    #[test]
    fn perpendicular_motion_keeps_delay() {
        let tx = Position::new(0.0, 0.0, 1.5);
        let mut s = lone_subpath(400e-9, 90.0);
        let cfg = SmallScaleConfig {
            min_scatterer_distance_m: f64::INFINITY,
            ..Default::default()
        };
        evolve_small_scale(&mut s, &tick(1, 51.0, 0.0), &tick(0, 50.0, 0.0), &tx, 73.5e9, &cfg).unwrap();
        assert!((s.clusters[0].subpaths[0].delay - 400e-9).abs() < 1e-18);
    }

    #[test]
    fn one_wavelength_step_restores_phase() {
        let f = 73.5e9;
        let lambda = SPEED_OF_LIGHT / f;
        assert!((lambda * 1e3 - 4.08).abs() < 0.005);
        let tx = Position::new(0.0, 0.0, 1.5);
        let mut s = lone_subpath(400e-9, 0.0);
        let cfg = SmallScaleConfig {
            min_scatterer_distance_m: f64::INFINITY,
            ..Default::default()
        };
        evolve_small_scale(&mut s, &tick(1, 50.0 + lambda, 0.0), &tick(0, 50.0, 0.0), &tx, f, &cfg).unwrap();
        let phase = s.clusters[0].subpaths[0].phase;
        let wrapped = (phase - 1.0 + std::f64::consts::PI).rem_euclid(TWO_PI) - std::f64::consts::PI;
        assert!(wrapped.abs() < 1e-6);
    }

    #[test]
    fn non_consecutive_ticks_rejected() {
        let tx = Position::new(0.0, 0.0, 1.5);
        let mut s = lone_subpath(400e-9, 0.0);
        let cfg = SmallScaleConfig::default();
        assert!(evolve_small_scale(&mut s, &tick(3, 51.0, 0.0), &tick(1, 50.0, 0.0), &tx, 73.5e9, &cfg).is_err());
    }

    #[test]
    fn direct_path_tracks_geometry() {
        let tx = Position::new(0.0, 0.0, 4.0);
        let rx = Position::new(30.0, 0.0, 1.5);
        let mut rng = drive_rng(2);
        let mut s = init_channel(
            &lsp(1, 1, 0.0),
            LosState::Los,
            GridIndex::new(0, 0),
            &tx,
            &rx,
            &SmallScaleConfig::default(),
            &mut rng,
        );
        evolve_small_scale(
            &mut s,
            &tick(1, 30.0, 5.0),
            &tick(0, 30.0, 0.0),
            &tx,
            73.5e9,
            &SmallScaleConfig::default(),
        )
        .unwrap();
        let sp = &s.clusters[0].subpaths[0];
        let r1 = Position::new(30.0, 5.0, 1.5);
        assert_relative_eq!(sp.delay, tr_separation(&tx, &r1) / SPEED_OF_LIGHT, max_relative = 1e-14);
        let (az, _) = direction(&r1, &tx);
        assert_relative_eq!(sp.aoa_az, az, epsilon = 1e-9);
    }

    #[test]
    fn stationary_user_without_events_repeats_cir() {
        let scenario = ScenarioConfig {
            lambda_c: 0.0,
            los_mode: LosMode::AlwaysNlos,
            ..Default::default()
        };
        let small = SmallScaleConfig::default();
        let p = Position::new(40.0, 3.0, 1.5);
        let ticks: Vec<UpdateTick> = (0..6)
            .map(|k| UpdateTick {
                index: k,
                time: k as f64,
                position: p,
                heading: Heading::default(),
            })
            .collect();
        let fields = FieldSet::new(4);
        let route = Route::from_ticks(
            ticks,
            Position::new(0.0, 0.0, 4.0),
            Position::default(),
            &scenario,
            &fields,
        )
        .unwrap();
        let mut drive = Drive::new(&route, &scenario, &small, fields);
        let first = drive.advance().unwrap().unwrap().0.cir;
        while let Some(out) = drive.advance() {
            let cir = out.unwrap().0.cir;
            assert_eq!(cir.taps.len(), first.taps.len());
            for (a, b) in cir.taps.iter().zip(&first.taps) {
                assert_eq!(a.delay, b.delay);
                assert_relative_eq!(a.power(), b.power(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn cir_power_tracks_path_loss() {
        let scenario = ScenarioConfig {
            lambda_c: 2.0,
            ..Default::default()
        };
        let small = SmallScaleConfig::default();
        let fields = FieldSet::new(21);
        let traj = Trajectory::straight(Position::new(80.0, 5.0, 1.5), Position::new(20.0, 5.0, 1.5), 1.0).unwrap();
        let route = Route::prepare(
            &traj,
            1.0,
            Position::new(0.0, 0.0, 4.0),
            Position::default(),
            &scenario,
            &fields,
        )
        .unwrap();
        let mut drive = Drive::new(&route, &scenario, &small, fields);
        while let Some(out) = drive.advance() {
            let (o, _) = out.unwrap();
            let db = 10.0 * o.cir.total_power().log10();
            assert!((db + o.path_loss_db).abs() < 1e-9);
        }
    }
}
