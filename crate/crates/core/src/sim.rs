//! Run configuration, single drives, Monte Carlo batches and the artifacts
//! they produce (JSON-lines drive logs, PDP CSVs, key-value analysis reports).
//!
//! Every artifact starts with the fully resolved configuration so a result
//! can be regenerated from the file alone.

use std::fmt::{self, Write as _};
use std::fs;
use std::io::Write;
use std::ops::Deref;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ClusterEvent, Drive, Route, SmallScaleConfig};
use crate::error::{Error, Result};
use crate::field::hash_words;
use crate::geometry::{build_update_schedule, tr_separation, GridIndex, Position, Trajectory};
use crate::large_scale::{los_probability, FieldSet, LosState, ScenarioConfig};
use crate::pdp::{
    cir_to_pdp, count_time_clusters, denoise, directional_to_csv, estimate_correlation_distance, omni_to_csv,
    rms_delay_spread, sector_sweep, CorrelationDistance, DirectionalPdp, Pdp, RouteSeries,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SCONSIM_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub bin_width_s: f64,
    pub threshold_db: f64,
    pub min_void_s: f64,
    /// Shift written PDPs so the first arrival sits at 0 ns.
    pub align_first_arrival: bool,
    /// Also write per-sector directional PDPs next to each omni PDP.
    pub emit_directional: bool,
    pub directional_sectors: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            bin_width_s: 2e-9,
            threshold_db: 20.0,
            min_void_s: 25e-9,
            align_first_arrival: false,
            emit_directional: false,
            directional_sectors: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitFlags {
    pub drive_log: bool,
    pub pdps: bool,
    pub analysis_report: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self {
            drive_log: true,
            pdps: false,
            analysis_report: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloOptions {
    /// Run every replicate with the master seed.
    pub identical_seeds: bool,
    /// Width of the distance bins of the LOS-fraction table, meters.
    pub los_distance_bin_m: f64,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            identical_seeds: false,
            los_distance_bin_m: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub small_scale: SmallScaleConfig,
    pub analysis: AnalysisConfig,
    pub trajectory: Trajectory,
    pub tx: Position,
    pub grid_origin: Position,
    pub update_distance: f64,
    pub seed: u64,
    pub replicates: usize,
    pub output_dir: Option<PathBuf>,
    pub emit: EmitFlags,
    pub monte_carlo: MonteCarloOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            small_scale: SmallScaleConfig::default(),
            analysis: AnalysisConfig::default(),
            // 75 m straight approach toward the access point
            trajectory: Trajectory::straight(Position::new(80.0, 10.0, 1.5), Position::new(5.0, 10.0, 1.5), 1.0)
                .expect("default trajectory is valid"),
            tx: Position::new(0.0, 0.0, 4.0),
            grid_origin: Position::default(),
            update_distance: 1.0,
            seed: 1,
            replicates: 1,
            output_dir: None,
            emit: EmitFlags::default(),
            monte_carlo: MonteCarloOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    /// Violates an ordering constraint between parameters.
    Constraint,
    /// A value outside its allowed range.
    Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigIssue {
    pub path: String,
    pub kind: IssueKind,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            IssueKind::Constraint => "constraint",
            IssueKind::Range => "range",
        };
        write!(f, "{}: {kind} error: {}", self.path, self.message)
    }
}

/// A [`RunConfig`] that passed [`validate_config`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig(RunConfig);

impl Deref for ValidatedConfig {
    type Target = RunConfig;

    fn deref(&self) -> &RunConfig {
        &self.0
    }
}

impl ValidatedConfig {
    pub fn into_inner(self) -> RunConfig {
        self.0
    }
}

struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn range(&mut self, path: &str, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.0.push(ConfigIssue {
                path: path.into(),
                kind: IssueKind::Range,
                message: message(),
            });
        }
    }

    fn positive(&mut self, path: &str, v: f64) {
        self.range(path, v > 0.0, || format!("must be positive, got {v}"));
    }

    fn non_negative(&mut self, path: &str, v: f64) {
        self.range(path, v >= 0.0 && v.is_finite(), || {
            format!("must be finite and non-negative, got {v}")
        });
    }

    fn constraint(&mut self, path: &str, message: String) {
        self.0.push(ConfigIssue {
            path: path.into(),
            kind: IssueKind::Constraint,
            message,
        });
    }
}

/// Checks every range and ordering rule, collecting all violations.
pub fn validate_config(cfg: &RunConfig) -> std::result::Result<ValidatedConfig, Vec<ConfigIssue>> {
    let mut is = Issues(Vec::new());
    let s = &cfg.scenario;

    let f = s.carrier_frequency_hz;
    is.range("scenario.carrier_frequency_hz", (0.8e9..=100e9).contains(&f), || {
        format!("{} GHz is outside the supported 0.8-100 GHz range", f / 1e9)
    });
    for (path, v) in [
        ("scenario.correlation_distance_los", s.correlation_distance_los),
        ("scenario.correlation_distance_nlos", s.correlation_distance_nlos),
        (
            "scenario.correlation_distance_cluster_count",
            s.correlation_distance_cluster_count,
        ),
        ("scenario.ple_los", s.ple_los),
        ("scenario.ple_nlos", s.ple_nlos),
        ("scenario.sf_sigma_los", s.sf_sigma_los),
        ("scenario.sf_sigma_nlos", s.sf_sigma_nlos),
        ("scenario.los_prob_d1", s.los_prob_d1),
        ("scenario.los_prob_d2", s.los_prob_d2),
        ("scenario.delay_spread_median_los_s", s.delay_spread_median_los_s),
        ("scenario.delay_spread_median_nlos_s", s.delay_spread_median_nlos_s),
    ] {
        is.positive(path, v);
    }
    if let Some(d) = s.los_field_correlation_distance {
        is.positive("scenario.los_field_correlation_distance", d);
    }
    is.non_negative("scenario.lambda_c", s.lambda_c);
    is.non_negative("scenario.delay_spread_log_sigma", s.delay_spread_log_sigma);
    is.range("scenario.max_time_clusters", s.max_time_clusters >= 1, || {
        "must be at least 1".into()
    });
    for (path, dist) in [
        ("scenario.time_clusters_los", &s.time_clusters_los),
        ("scenario.time_clusters_nlos", &s.time_clusters_nlos),
        ("scenario.spatial_lobes", &s.spatial_lobes),
        ("scenario.subpaths_per_cluster", &s.subpaths_per_cluster),
    ] {
        if let Err(m) = dist.validate() {
            is.range(path, false, || m);
        }
    }
    for (path, dist) in [
        ("scenario.time_clusters_los", &s.time_clusters_los),
        ("scenario.time_clusters_nlos", &s.time_clusters_nlos),
    ] {
        let max = dist.max_value();
        is.range(path, max <= s.max_time_clusters, || {
            format!(
                "can draw {max} clusters, above max_time_clusters = {}",
                s.max_time_clusters
            )
        });
    }

    let ud = cfg.update_distance;
    is.range("update_distance", ud > 0.0 && ud.is_finite(), || {
        format!("must be positive, got {ud}")
    });
    let min_corr = s
        .correlation_distance_los
        .min(s.correlation_distance_nlos)
        .min(s.correlation_distance_cluster_count);
    if ud > min_corr {
        is.constraint(
            "update_distance",
            format!(
                "update distance {ud} m exceeds the smallest correlation distance {min_corr} m; \
                 channel updates must be spaced well inside every correlation distance (1 m or less is typical)"
            ),
        );
    }
    is.range("replicates", cfg.replicates >= 1, || {
        "at least one replicate is required".into()
    });

    let ss = &cfg.small_scale;
    is.non_negative("small_scale.subpath_angle_spread_deg", ss.subpath_angle_spread_deg);
    is.non_negative("small_scale.elevation_spread_deg", ss.elevation_spread_deg);
    is.non_negative("small_scale.intra_cluster_spread_s", ss.intra_cluster_spread_s);
    is.non_negative("small_scale.min_cluster_gap_s", ss.min_cluster_gap_s);
    is.positive("small_scale.cluster_decay_ratio", ss.cluster_decay_ratio);
    is.range(
        "small_scale.min_scatterer_distance_m",
        ss.min_scatterer_distance_m >= 0.0,
        || format!("must be non-negative, got {}", ss.min_scatterer_distance_m),
    );

    let a = &cfg.analysis;
    is.positive("analysis.bin_width_s", a.bin_width_s);
    is.positive("analysis.threshold_db", a.threshold_db);
    is.non_negative("analysis.min_void_s", a.min_void_s);
    is.range("analysis.directional_sectors", a.directional_sectors >= 1, || {
        "must be at least 1".into()
    });
    is.positive("monte_carlo.los_distance_bin_m", cfg.monte_carlo.los_distance_bin_m);

    if let Err(e) = cfg.tx.validate() {
        is.range("tx", false, || e.to_string());
    }
    let o = cfg.grid_origin;
    is.range(
        "grid_origin",
        o.x.is_finite() && o.y.is_finite() && o.z.is_finite(),
        || "must be finite".into(),
    );

    if ud > 0.0 && ud.is_finite() && cfg.tx.validate().is_ok() {
        if let Ok(ticks) = build_update_schedule(&cfg.trajectory, ud) {
            let closest = ticks
                .iter()
                .map(|t| tr_separation(&cfg.tx, &t.position))
                .fold(f64::INFINITY, f64::min);
            if closest < 1.0 {
                is.constraint(
                    "trajectory",
                    format!("route passes {closest:.3} m from the transmitter, inside the 1 m reference distance"),
                );
            }
        }
    }

    if is.0.is_empty() {
        Ok(ValidatedConfig(cfg.clone()))
    } else {
        Err(is.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub id: u64,
    pub delay_s: f64,
    /// Received power of the cluster including its ramp, dBm for 0 dBm transmit power.
    pub power_dbm: f64,
    pub ramp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub index: usize,
    pub time: f64,
    pub position: Position,
    pub cell: GridIndex,
    pub los: LosState,
    pub path_loss_db: f64,
    pub cluster_count: usize,
    pub target_cluster_count: u32,
    pub clusters: Vec<ClusterRecord>,
    pub rms_delay_spread_s: f64,
    pub event: Option<ClusterEvent>,
    /// Whether the Poisson draw ran and whether it fired.
    pub event_draw: Option<bool>,
    pub in_transition: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveLog {
    pub seed: u64,
    pub records: Vec<TickRecord>,
}

/// PDP-pipeline results at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationAnalysis {
    pub index: usize,
    /// Receiver position when known (simulated drives).
    pub position: Option<Position>,
    pub clusters: usize,
    pub rms_delay_spread_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub locations: Vec<LocationAnalysis>,
    pub spacing_m: f64,
    pub cluster_count_correlation_distance: Option<CorrelationDistance>,
    pub delay_spread_correlation_distance: Option<CorrelationDistance>,
}

impl AnalysisReport {
    pub fn from_locations(locations: Vec<LocationAnalysis>, spacing_m: f64) -> Self {
        let estimate = |values: Vec<f64>| {
            RouteSeries::new(spacing_m, values)
                .and_then(|s| estimate_correlation_distance(&s))
                .ok()
        };
        let counts = estimate(locations.iter().map(|l| l.clusters as f64).collect());
        let spreads = if locations.iter().all(|l| l.rms_delay_spread_s.is_some()) {
            estimate(locations.iter().map(|l| l.rms_delay_spread_s.unwrap()).collect())
        } else {
            None
        };
        Self {
            locations,
            spacing_m,
            cluster_count_correlation_distance: counts,
            delay_spread_correlation_distance: spreads,
        }
    }

    /// Key-value text, one `key = value` per line.
    pub fn to_text(&self, header: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(h) = header {
            for line in h.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        let _ = writeln!(out, "locations = {}", self.locations.len());
        let _ = writeln!(out, "route.spacing_m = {}", self.spacing_m);
        let fmt_cd = |c: &Option<CorrelationDistance>| match c {
            Some(CorrelationDistance::Finite(m)) => format!("{m:.4}"),
            Some(CorrelationDistance::Unbounded) => "inf".into(),
            None => "n/a".into(),
        };
        let _ = writeln!(
            out,
            "route.cluster_count.correlation_distance_m = {}",
            fmt_cd(&self.cluster_count_correlation_distance)
        );
        let _ = writeln!(
            out,
            "route.rms_delay_spread.correlation_distance_m = {}",
            fmt_cd(&self.delay_spread_correlation_distance)
        );
        for l in &self.locations {
            let k = l.index;
            if let Some(p) = l.position {
                let _ = writeln!(out, "location.{k}.position_m = {},{},{}", p.x, p.y, p.z);
            }
            let _ = writeln!(out, "location.{k}.time_clusters = {}", l.clusters);
            match l.rms_delay_spread_s {
                Some(s) => {
                    let _ = writeln!(out, "location.{k}.rms_delay_spread_ns = {:.4}", s * 1e9);
                }
                None => {
                    let _ = writeln!(out, "location.{k}.rms_delay_spread_ns = n/a");
                }
            }
        }
        out
    }
}

/// Runs a PDP through denoising, cluster counting and delay spread.
pub fn analyze_pdp(pdp: &Pdp, analysis: &AnalysisConfig) -> Result<(usize, Option<f64>, Pdp)> {
    let clean = denoise(pdp, analysis.threshold_db)?;
    let clusters = count_time_clusters(&clean, analysis.min_void_s);
    let ds = rms_delay_spread(&clean).ok();
    Ok((clusters, ds, clean))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveOutput {
    pub log: DriveLog,
    /// Raw omnidirectional PDP per tick (populated when PDPs are emitted).
    pub pdps: Vec<Pdp>,
    pub sweeps: Vec<Vec<DirectionalPdp>>,
    pub analysis: AnalysisReport,
}

fn to_dbm(p: f64) -> f64 {
    if p > 0.0 {
        10.0 * p.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// One drive with an explicit seed.
pub fn simulate_drive(cfg: &RunConfig, seed: u64, keep_pdps: bool) -> Result<DriveOutput> {
    let fields = FieldSet::new(seed);
    let route = Route::prepare(
        &cfg.trajectory,
        cfg.update_distance,
        cfg.tx,
        cfg.grid_origin,
        &cfg.scenario,
        &fields,
    )?;
    let mut drive = Drive::new(&route, &cfg.scenario, &cfg.small_scale, fields);
    let mut records = Vec::with_capacity(route.len());
    let mut pdps = Vec::new();
    let mut sweeps = Vec::new();
    let mut locations = Vec::with_capacity(route.len());

    while let Some(next) = drive.advance() {
        let (out, state) = next?;
        let tick = &route.ticks[records.len()];
        let total = out.cir.total_power();
        let clusters = state
            .clusters
            .iter()
            .map(|c| {
                let share: f64 = out
                    .cir
                    .taps
                    .iter()
                    .filter(|t| t.cluster_id == c.id)
                    .map(|t| t.power())
                    .sum();
                ClusterRecord {
                    id: c.id,
                    delay_s: c.base_delay,
                    power_dbm: to_dbm(share),
                    ramp: c.ramp,
                }
            })
            .collect();
        debug_assert!(total > 0.0);

        let pdp = cir_to_pdp(&out.cir, cfg.analysis.bin_width_s)?;
        let (n_clusters, ds, _) = analyze_pdp(&pdp, &cfg.analysis)?;
        locations.push(LocationAnalysis {
            index: tick.index,
            position: Some(tick.position),
            clusters: n_clusters,
            rms_delay_spread_s: ds,
        });
        if keep_pdps {
            if cfg.analysis.emit_directional {
                sweeps.push(sector_sweep(
                    &out.cir,
                    cfg.analysis.directional_sectors,
                    cfg.analysis.bin_width_s,
                )?);
            }
            pdps.push(pdp);
        }

        records.push(TickRecord {
            index: tick.index,
            time: tick.time,
            position: tick.position,
            cell: out.cell,
            los: state.los,
            path_loss_db: out.path_loss_db,
            cluster_count: state.cluster_count(),
            target_cluster_count: out.target.n_time_clusters,
            clusters,
            rms_delay_spread_s: out.cir.rms_delay_spread(),
            event: out.event,
            event_draw: out.draw,
            in_transition: state.in_transition(),
        });
    }

    Ok(DriveOutput {
        log: DriveLog { seed, records },
        pdps,
        sweeps,
        analysis: AnalysisReport::from_locations(locations, cfg.update_distance),
    })
}

/// Single drive with the configured seed.
pub fn run_drive(cfg: &ValidatedConfig) -> Result<DriveOutput> {
    simulate_drive(cfg, cfg.seed, cfg.emit.pdps)
}

/// Seed of replicate `k`.
pub fn replicate_seed(cfg: &RunConfig, k: usize) -> u64 {
    if cfg.monte_carlo.identical_seeds {
        cfg.seed
    } else {
        hash_words(&[cfg.seed, k as u64, 0x5245_504c])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        if n == 0.0 {
            return Self::default();
        }
        // shifted by the first sample so identical inputs give exactly zero spread
        let k = values.clone().next().unwrap();
        let shift = values.clone().map(|v| v - k).sum::<f64>() / n;
        let var = values.map(|v| (v - k - shift).powi(2)).sum::<f64>() / n;
        Self {
            mean: k + shift,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickEnsemble {
    pub index: usize,
    pub time: f64,
    pub path_loss_db: MeanStd,
    pub cluster_count: MeanStd,
    pub rms_delay_spread_s: MeanStd,
    pub los_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosBin {
    pub distance_lo_m: f64,
    pub distance_hi_m: f64,
    pub samples: usize,
    pub los_fraction: f64,
    /// Model LOS probability at the bin's mean sampled distance.
    pub los_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub replicates: usize,
    pub master_seed: u64,
    pub per_tick: Vec<TickEnsemble>,
    pub event_draws: u64,
    pub event_fires: u64,
    pub event_rate: f64,
    pub los_vs_distance: Vec<LosBin>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRun {
    pub summary: MonteCarloSummary,
    /// Per-replicate drive logs, kept when drive logs are emitted.
    pub logs: Vec<DriveLog>,
}

/// Independent replicate drives run in parallel and aggregated per tick.
pub fn run_monte_carlo(cfg: &ValidatedConfig) -> Result<MonteCarloRun> {
    if cfg.replicates < 2 {
        return Err(Error::invalid(format!(
            "Monte Carlo needs at least 2 replicates, got {}",
            cfg.replicates
        )));
    }
    let logs: Vec<DriveLog> = (0..cfg.replicates)
        .into_par_iter()
        .map(|k| simulate_drive(cfg, replicate_seed(cfg, k), false).map(|o| o.log))
        .collect::<Result<_>>()?;

    let n_ticks = logs[0].records.len();
    let per_tick = (0..n_ticks)
        .map(|t| {
            let recs = logs.iter().map(move |l| &l.records[t]);
            let first = &logs[0].records[t];
            TickEnsemble {
                index: first.index,
                time: first.time,
                path_loss_db: MeanStd::of(recs.clone().map(|r| r.path_loss_db)),
                cluster_count: MeanStd::of(recs.clone().map(|r| r.cluster_count as f64)),
                rms_delay_spread_s: MeanStd::of(recs.clone().map(|r| r.rms_delay_spread_s)),
                los_fraction: recs.clone().filter(|r| r.los == LosState::Los).count() as f64 / logs.len() as f64,
            }
        })
        .collect();

    let draws = logs.iter().flat_map(|l| &l.records).filter_map(|r| r.event_draw);
    let event_draws = draws.clone().count() as u64;
    let event_fires = draws.filter(|&f| f).count() as u64;

    let bin = cfg.monte_carlo.los_distance_bin_m;
    let mut bins: std::collections::BTreeMap<i64, (usize, usize, f64)> = Default::default();
    for r in logs.iter().flat_map(|l| &l.records) {
        let d = tr_separation(&cfg.tx, &r.position);
        let e = bins.entry((d / bin).floor() as i64).or_default();
        e.0 += 1;
        e.1 += (r.los == LosState::Los) as usize;
        e.2 += d;
    }
    let los_vs_distance = bins
        .into_iter()
        .map(|(k, (n, los, dsum))| LosBin {
            distance_lo_m: k as f64 * bin,
            distance_hi_m: (k + 1) as f64 * bin,
            samples: n,
            los_fraction: los as f64 / n as f64,
            los_probability: los_probability(dsum / n as f64, &cfg.scenario).unwrap_or(f64::NAN),
        })
        .collect();

    let summary = MonteCarloSummary {
        replicates: cfg.replicates,
        master_seed: cfg.seed,
        per_tick,
        event_draws,
        event_fires,
        event_rate: if event_draws > 0 {
            event_fires as f64 / event_draws as f64
        } else {
            0.0
        },
        los_vs_distance,
    };
    Ok(MonteCarloRun {
        summary,
        logs: if cfg.emit.drive_log { logs } else { Vec::new() },
    })
}

fn config_json(cfg: &RunConfig) -> Result<String> {
    Ok(serde_json::to_string(cfg)?)
}

/// JSON-lines drive log: a `{"config": ...}` header line, then one record per tick.
pub fn write_drive_log(mut w: impl Write, cfg: &RunConfig, log: &DriveLog) -> Result<()> {
    let io = |e| Error::io("<drive log>", e);
    #[derive(Serialize)]
    struct Header<'a> {
        config: &'a RunConfig,
        seed: u64,
    }
    serde_json::to_writer(
        &mut w,
        &Header {
            config: cfg,
            seed: log.seed,
        },
    )?;
    w.write_all(b"\n").map_err(io)?;
    for r in &log.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_header(cfg: &RunConfig, extra: &str) -> Result<String> {
    Ok(format!("# config: {}\n# {extra}\n", config_json(cfg)?))
}

/// Writes the requested artifacts of a single drive into `dir`.
pub fn write_drive_artifacts(out: &DriveOutput, cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if cfg.emit.drive_log {
        let path = dir.join("drive_log.jsonl");
        let mut buf = Vec::new();
        write_drive_log(&mut buf, cfg, &out.log)?;
        write_file(&path, &buf)?;
        written.push(path);
    }
    if cfg.emit.pdps {
        for (k, pdp) in out.pdps.iter().enumerate() {
            let idx = out.log.records[k].index;
            let shown = if cfg.analysis.align_first_arrival {
                pdp.aligned_to_first_arrival()
            } else {
                pdp.clone()
            };
            let mut text = csv_header(cfg, &format!("tick {idx} omnidirectional PDP"))?;
            text.push_str(&omni_to_csv(&shown));
            let path = dir.join("pdps").join(format!("tick_{idx:05}.csv"));
            write_file(&path, text.as_bytes())?;
            written.push(path);
        }
        for (k, sweep) in out.sweeps.iter().enumerate() {
            let idx = out.log.records[k].index;
            let mut text = csv_header(cfg, &format!("tick {idx} directional PDPs"))?;
            for d in sweep {
                text.push_str(&directional_to_csv(d));
            }
            let path = dir.join("pdps").join(format!("tick_{idx:05}_directional.csv"));
            write_file(&path, text.as_bytes())?;
            written.push(path);
        }
    }
    if cfg.emit.analysis_report {
        let path = dir.join("analysis_report.txt");
        let header = format!("config: {}", config_json(cfg)?);
        write_file(&path, out.analysis.to_text(Some(&header)).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Writes the Monte Carlo summary (and per-replicate logs when kept).
pub fn write_monte_carlo_artifacts(run: &MonteCarloRun, cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a RunConfig,
        summary: &'a MonteCarloSummary,
    }
    let mut written = Vec::new();
    let path = dir.join("mc_summary.json");
    let body = serde_json::to_vec_pretty(&Doc {
        config: cfg,
        summary: &run.summary,
    })?;
    write_file(&path, &body)?;
    written.push(path);
    for (k, log) in run.logs.iter().enumerate() {
        let path = dir.join("replicates").join(format!("replicate_{k:05}.jsonl"));
        let mut buf = Vec::new();
        write_drive_log(&mut buf, cfg, log)?;
        write_file(&path, &buf)?;
        written.push(path);
    }
    Ok(written)
}
