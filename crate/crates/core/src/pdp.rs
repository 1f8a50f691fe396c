//! Power delay profile analysis: CIR binning, peak-relative denoising,
//! omnidirectional synthesis from azimuth sweeps, time-cluster counting,
//! rms delay spread, and correlation-distance estimation along a route.
//!
//! Delays are absolute throughout. Bins sit on a global grid of multiples of
//! `bin_width`, so PDPs built independently at the same bin width line up.

use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::channel::Cir;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pdp {
    pub bin_width: f64,
    pub first_bin_delay: f64,
    /// Linear power per bin.
    pub powers: Vec<f64>,
    pub noise_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalPdp {
    /// Pointing azimuth in `[0, 360)` degrees.
    pub azimuth: f64,
    pub pdp: Pdp,
}

/// An LSP sampled at equally spaced points along a route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSeries {
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl RouteSeries {
    pub fn new(spacing: f64, values: Vec<f64>) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid(format!(
                "series spacing must be positive, got {spacing}"
            )));
        }
        if values.len() < 2 {
            return Err(Error::invalid("series needs at least two values"));
        }
        Ok(Self { spacing, values })
    }
}

/// Correlation-distance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "meters", rename_all = "snake_case")]
pub enum CorrelationDistance {
    Finite(f64),
    /// Constant series, or autocorrelation that never drops below `1/e`.
    Unbounded,
}

impl CorrelationDistance {
    pub fn meters(&self) -> Option<f64> {
        match self {
            CorrelationDistance::Finite(m) => Some(*m),
            CorrelationDistance::Unbounded => None,
        }
    }
}

#[inline]
fn bin_index(delay: f64, bin_width: f64) -> i64 {
    // tolerance keeps delays that are exact multiples from rounding down a bin
    (delay / bin_width + 1e-9).floor() as i64
}

impl Pdp {
    pub fn new(bin_width: f64, first_bin_delay: f64, powers: Vec<f64>) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::invalid(format!("bin width must be positive, got {bin_width}")));
        }
        if powers.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::invalid("PDP powers must be non-negative"));
        }
        Ok(Self {
            bin_width,
            first_bin_delay,
            powers,
            noise_floor: 0.0,
        })
    }

    pub fn delay_of(&self, bin: usize) -> f64 {
        self.first_bin_delay + bin as f64 * self.bin_width
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn peak(&self) -> f64 {
        self.powers.iter().copied().fold(0.0, f64::max)
    }

    fn first_bin_index(&self) -> i64 {
        bin_index(self.first_bin_delay, self.bin_width)
    }

    /// Copy with leading delay removed so the first occupied bin starts at 0.
    pub fn aligned_to_first_arrival(&self) -> Pdp {
        let skip = self.powers.iter().position(|&p| p > 0.0).unwrap_or(0);
        Pdp {
            bin_width: self.bin_width,
            first_bin_delay: 0.0,
            powers: self.powers[skip..].to_vec(),
            noise_floor: self.noise_floor,
        }
    }
}

/// Incoherent binning of tap powers `|a|²` by delay.
pub fn cir_to_pdp(cir: &Cir, bin_width: f64) -> Result<Pdp> {
    if cir.taps.is_empty() {
        return Err(Error::invalid("CIR has no taps"));
    }
    bin_taps(cir.taps.iter().map(|t| (t.delay, t.power())), bin_width)
}

fn bin_taps(taps: impl Iterator<Item = (f64, f64)> + Clone, bin_width: f64) -> Result<Pdp> {
    if !(bin_width > 0.0) {
        return Err(Error::invalid(format!("bin width must be positive, got {bin_width}")));
    }
    let idx = taps.clone().map(|(d, _)| bin_index(d, bin_width));
    let (lo, hi) = idx.fold((i64::MAX, i64::MIN), |(lo, hi), k| (lo.min(k), hi.max(k)));
    if lo > hi {
        return Pdp::new(bin_width, 0.0, Vec::new());
    }
    let mut powers = vec![0.0; (hi - lo + 1) as usize];
    for (d, p) in taps {
        powers[(bin_index(d, bin_width) - lo) as usize] += p;
    }
    Pdp::new(bin_width, lo as f64 * bin_width, powers)
}

/// Zeroes bins more than `threshold_db` below the peak.
pub fn denoise(pdp: &Pdp, threshold_db: f64) -> Result<Pdp> {
    if !(threshold_db > 0.0) {
        return Err(Error::invalid(format!(
            "threshold must be positive, got {threshold_db} dB"
        )));
    }
    let peak = pdp.peak();
    if peak <= 0.0 {
        return Ok(pdp.clone());
    }
    let floor = peak / 10f64.powf(threshold_db / 10.0);
    let mut out = pdp.clone();
    for p in &mut out.powers {
        if *p < floor {
            *p = 0.0;
        }
    }
    Ok(out)
}

/// Per-bin linear sum over pointing angles. Sweeps must share a bin width
/// and sit on the same bin grid; they may cover different delay ranges.
pub fn synthesize_omni(sweeps: &[DirectionalPdp]) -> Result<Pdp> {
    let first = sweeps
        .first()
        .ok_or_else(|| Error::invalid("no directional PDPs to combine"))?;
    let bw = first.pdp.bin_width;
    for s in sweeps {
        if ((s.pdp.bin_width - bw) / bw).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "bin width {} at azimuth {} differs from {}",
                s.pdp.bin_width, s.azimuth, bw
            )));
        }
        let offset = s.pdp.first_bin_delay / bw;
        if (offset - offset.round()).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "PDP at azimuth {} is not aligned to the shared bin grid",
                s.azimuth
            )));
        }
    }
    let lo = sweeps.iter().map(|s| s.pdp.first_bin_index()).min().unwrap();
    let hi = sweeps
        .iter()
        .map(|s| s.pdp.first_bin_index() + s.pdp.powers.len() as i64)
        .max()
        .unwrap();
    let mut powers = vec![0.0; (hi - lo).max(0) as usize];
    for s in sweeps {
        let off = (s.pdp.first_bin_index() - lo) as usize;
        for (k, p) in s.pdp.powers.iter().enumerate() {
            powers[off + k] += p;
        }
    }
    Ok(Pdp {
        bin_width: bw,
        first_bin_delay: lo as f64 * bw,
        powers,
        noise_floor: sweeps.iter().map(|s| s.pdp.noise_floor).sum(),
    })
}

/// Directional PDPs seen through `n_sectors` ideal sectors that partition
/// azimuth; sector `k` receives taps arriving from `[k·w, (k+1)·w)`. Sector
/// pointing angles are the sector centers.
pub fn sector_sweep(cir: &Cir, n_sectors: usize, bin_width: f64) -> Result<Vec<DirectionalPdp>> {
    if n_sectors == 0 {
        return Err(Error::invalid("need at least one sector"));
    }
    if cir.taps.is_empty() {
        return Err(Error::invalid("CIR has no taps"));
    }
    let width = 360.0 / n_sectors as f64;
    let sector = |az: f64| ((az.rem_euclid(360.0) / width).floor() as usize).min(n_sectors - 1);
    // shared grid over the whole CIR so every sector aligns
    let lo = cir.taps.iter().map(|t| bin_index(t.delay, bin_width)).min().unwrap();
    let hi = cir.taps.iter().map(|t| bin_index(t.delay, bin_width)).max().unwrap();
    (0..n_sectors)
        .map(|k| {
            let mut powers = vec![0.0; (hi - lo + 1) as usize];
            for t in cir.taps.iter().filter(|t| sector(t.aoa_az) == k) {
                powers[(bin_index(t.delay, bin_width) - lo) as usize] += t.power();
            }
            Ok(DirectionalPdp {
                azimuth: (k as f64 + 0.5) * width,
                pdp: Pdp::new(bin_width, lo as f64 * bin_width, powers)?,
            })
        })
        .collect()
}

/// Number of runs of occupied bins separated by empty stretches lasting at
/// least `min_void`.
pub fn count_time_clusters(pdp: &Pdp, min_void: f64) -> usize {
    let mut clusters = 0;
    let mut empty_run = 0usize;
    let mut seen = false;
    for &p in &pdp.powers {
        if p > 0.0 {
            if !seen || empty_run as f64 * pdp.bin_width >= min_void * (1.0 - 1e-9) {
                clusters += 1;
            }
            seen = true;
            empty_run = 0;
        } else {
            empty_run += 1;
        }
    }
    clusters
}

/// Power-weighted rms spread of bin delays.
pub fn rms_delay_spread(pdp: &Pdp) -> Result<f64> {
    let total = pdp.total_power();
    if !(total > 0.0) {
        return Err(Error::UndefinedStatistic(
            "rms delay spread of a PDP with zero power".into(),
        ));
    }
    // delays relative to the first bin; the spread is shift invariant
    let tau = |k: usize| k as f64 * pdp.bin_width;
    let mean = pdp.powers.iter().enumerate().map(|(k, p)| p * tau(k)).sum::<f64>() / total;
    let var = pdp
        .powers
        .iter()
        .enumerate()
        .map(|(k, p)| p * (tau(k) - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok(var.sqrt())
}

/// Mean-removed autocorrelation, computed lag by lag.
fn acf_lags(values: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let var: f64 = dev.iter().map(|d| d * d).sum();
    (0..n).map(move |lag| {
        if var == 0.0 {
            return 1.0;
        }
        dev[..n - lag].iter().zip(&dev[lag..]).map(|(a, b)| a * b).sum::<f64>() / var
    })
}

/// Normalized, mean-removed autocorrelation for lags `0..=max_lag`.
pub fn autocorrelation(values: &[f64], max_lag: usize) -> Vec<f64> {
    acf_lags(values).take(max_lag.saturating_add(1)).collect()
}

/// Smallest lag distance at which the autocorrelation drops below `1/e`,
/// linearly interpolated between neighbouring lags. A crossing before the
/// first lag cannot be resolved and is reported as one spacing.
pub fn estimate_correlation_distance(series: &RouteSeries) -> Result<CorrelationDistance> {
    if series.values.len() < 10 {
        return Err(Error::invalid(format!(
            "correlation-distance estimate needs at least 10 values, got {}",
            series.values.len()
        )));
    }
    let first = series.values[0];
    if series.values.iter().all(|&v| v == first) {
        return Ok(CorrelationDistance::Unbounded);
    }
    let threshold = (-1f64).exp();
    let max_lag = series.values.len() / 2;
    let mut prev = 1.0;
    let mut crossing = None;
    for (k, r) in acf_lags(&series.values).enumerate().take(max_lag + 1) {
        if r < threshold {
            crossing = Some((k, prev, r));
            break;
        }
        prev = r;
    }
    let Some((k, r0, r1)) = crossing else {
        return Ok(CorrelationDistance::Unbounded);
    };
    if k <= 1 {
        return Ok(CorrelationDistance::Finite(series.spacing));
    }
    let frac = (r0 - threshold) / (r0 - r1);
    Ok(CorrelationDistance::Finite(series.spacing * ((k - 1) as f64 + frac)))
}

/// Optional pre-averaging of repeated sweeps of one direction (same bin grid).
pub fn average_pdps(pdps: &[Pdp]) -> Result<Pdp> {
    let n = pdps.len();
    if n == 0 {
        return Err(Error::invalid("nothing to average"));
    }
    let sweeps: Vec<DirectionalPdp> = pdps
        .iter()
        .map(|p| DirectionalPdp {
            azimuth: 0.0,
            pdp: p.clone(),
        })
        .collect();
    let mut sum = synthesize_omni(&sweeps)?;
    for p in &mut sum.powers {
        *p /= n as f64;
    }
    sum.noise_floor /= n as f64;
    Ok(sum)
}

fn to_dbm(p: f64) -> String {
    if p > 0.0 {
        format!("{:.6}", 10.0 * p.log10())
    } else {
        "-inf".to_string()
    }
}

fn fmt_ns(s: f64) -> String {
    let ns = s * 1e9;
    // trim float noise such as 100.00000000000001
    let r = (ns * 1e6).round() / 1e6;
    format!("{r}")
}

const DIRECTIONAL_HEADER: &str = "azimuth_deg,bin_width_ns,first_bin_ns";
const OMNI_HEADER: &str = "bin_width_ns,first_bin_ns";
const BIN_HEADER: &str = "delay_ns,power_dbm";

fn write_bins(out: &mut String, pdp: &Pdp) {
    out.push_str(BIN_HEADER);
    out.push('\n');
    for (k, &p) in pdp.powers.iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt_ns(pdp.delay_of(k)), to_dbm(p));
    }
}

/// CSV block for one directional PDP. Linear powers are taken as mW.
pub fn directional_to_csv(d: &DirectionalPdp) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{DIRECTIONAL_HEADER}");
    let _ = writeln!(
        out,
        "{},{},{}",
        d.azimuth,
        fmt_ns(d.pdp.bin_width),
        fmt_ns(d.pdp.first_bin_delay)
    );
    write_bins(&mut out, &d.pdp);
    out
}

pub fn omni_to_csv(pdp: &Pdp) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{OMNI_HEADER}");
    let _ = writeln!(out, "{},{}", fmt_ns(pdp.bin_width), fmt_ns(pdp.first_bin_delay));
    write_bins(&mut out, pdp);
    out
}

/// Contents of a PDP file: any number of directional and omnidirectional blocks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PdpFile {
    pub directional: Vec<DirectionalPdp>,
    pub omni: Vec<Pdp>,
}

impl PdpFile {
    /// Omnidirectional PDP of the location: directional blocks denoised and
    /// combined, or the omni blocks summed when there are no directional ones.
    pub fn location_pdp(&self, threshold_db: f64) -> Result<Pdp> {
        if !self.directional.is_empty() {
            let cleaned = self
                .directional
                .iter()
                .map(|d| {
                    Ok(DirectionalPdp {
                        azimuth: d.azimuth,
                        pdp: denoise(&d.pdp, threshold_db)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return synthesize_omni(&cleaned);
        }
        let as_sweeps: Vec<DirectionalPdp> = self
            .omni
            .iter()
            .map(|p| DirectionalPdp {
                azimuth: 0.0,
                pdp: p.clone(),
            })
            .collect();
        synthesize_omni(&as_sweeps)
    }
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::PdpFormat {
        line,
        message: format!("expected a number, got {field:?}"),
    })
}

struct Block {
    azimuth: Option<f64>,
    bin_width: f64,
    first: f64,
    bins: Vec<(f64, f64)>,
    header_line: usize,
}

fn finish(block: Block, file: &mut PdpFile) -> Result<()> {
    let bw = block.bin_width;
    let first_idx = bin_index(block.first, bw);
    let mut powers: Vec<f64> = Vec::new();
    for (delay, linear) in block.bins {
        let k = bin_index(delay, bw) - first_idx;
        if k < 0 {
            return Err(Error::PdpFormat {
                line: block.header_line,
                message: format!("bin at {} ns precedes first bin", delay * 1e9),
            });
        }
        let k = k as usize;
        if powers.len() <= k {
            powers.resize(k + 1, 0.0);
        }
        powers[k] += linear;
    }
    let pdp = Pdp::new(bw, first_idx as f64 * bw, powers).map_err(|e| Error::PdpFormat {
        line: block.header_line,
        message: e.to_string(),
    })?;
    match block.azimuth {
        Some(azimuth) => {
            if !(0.0..360.0).contains(&azimuth) {
                return Err(Error::PdpFormat {
                    line: block.header_line,
                    message: format!("azimuth {azimuth} outside [0, 360)"),
                });
            }
            file.directional.push(DirectionalPdp { azimuth, pdp });
        }
        None => file.omni.push(pdp),
    }
    Ok(())
}

/// Parses PDP CSV blocks. Lines starting with `#` are comments. Each block
/// is a header row (`azimuth_deg,bin_width_ns,first_bin_ns`, or the same
/// without azimuth for omni PDPs), its value row, an optional
/// `delay_ns,power_dbm` row, then one `delay_ns,power_dbm` row per bin.
pub fn read_pdp_csv(reader: impl BufRead) -> Result<PdpFile> {
    let mut file = PdpFile::default();
    let mut current: Option<Block> = None;
    let mut pending_header: Option<(bool, usize)> = None;

    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::PdpFormat {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let compact: String = line.chars().filter(|c| !c.is_whitespace()).collect();
        if compact == DIRECTIONAL_HEADER || compact == OMNI_HEADER {
            if let Some(b) = current.take() {
                finish(b, &mut file)?;
            }
            pending_header = Some((compact == DIRECTIONAL_HEADER, lineno));
            continue;
        }
        if compact == BIN_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if let Some((directional, header_line)) = pending_header.take() {
            let want = if directional { 3 } else { 2 };
            if fields.len() != want {
                return Err(Error::PdpFormat {
                    line: lineno,
                    message: format!("expected {want} header values, got {}", fields.len()),
                });
            }
            let nums = fields
                .iter()
                .map(|f| parse_f64(f, lineno))
                .collect::<Result<Vec<_>>>()?;
            let (azimuth, rest) = if directional {
                (Some(nums[0]), &nums[1..])
            } else {
                (None, &nums[..])
            };
            current = Some(Block {
                azimuth,
                bin_width: rest[0] * 1e-9,
                first: rest[1] * 1e-9,
                bins: Vec::new(),
                header_line,
            });
            continue;
        }
        let Some(block) = current.as_mut() else {
            return Err(Error::PdpFormat {
                line: lineno,
                message: "data row before a PDP header".into(),
            });
        };
        if fields.len() != 2 {
            return Err(Error::PdpFormat {
                line: lineno,
                message: format!("expected delay_ns,power_dbm, got {} fields", fields.len()),
            });
        }
        let delay = parse_f64(fields[0], lineno)? * 1e-9;
        let dbm = parse_f64(fields[1], lineno)?;
        if dbm.is_nan() || dbm == f64::INFINITY {
            return Err(Error::PdpFormat {
                line: lineno,
                message: format!("invalid power {dbm} dBm"),
            });
        }
        let linear = if dbm == f64::NEG_INFINITY {
            0.0
        } else {
            10f64.powf(dbm / 10.0)
        };
        block.bins.push((delay, linear));
    }
    if pending_header.is_some() {
        return Err(Error::PdpFormat {
            line: 0,
            message: "header row without values".into(),
        });
    }
    if let Some(b) = current.take() {
        finish(b, &mut file)?;
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::CirTap;
    use crate::field::{sample_ou_path, CorrelatedFieldSpec};
    use crate::geometry::Position;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn tap(delay_ns: f64, power: f64, aoa: f64) -> CirTap {
        CirTap {
            amplitude: Complex64::new(power.sqrt(), 0.0),
            delay: delay_ns * 1e-9,
            aoa_az: aoa,
            aoa_el: 0.0,
            aod_az: 0.0,
            aod_el: 0.0,
            cluster_id: 0,
        }
    }

    fn cir(taps: Vec<CirTap>) -> Cir {
        Cir {
            taps,
            timestamp: 0.0,
            rx: Position::default(),
        }
    }

    fn pdp(powers: Vec<f64>) -> Pdp {
        Pdp::new(2e-9, 100e-9, powers).unwrap()
    }

    fn dbm(x: f64) -> f64 {
        10f64.powf(x / 10.0)
    }

    #[test]
    fn binning_examples() {
        let single = cir_to_pdp(&cir(vec![tap(100.0, 0.3, 0.0)]), 2e-9).unwrap();
        assert_eq!(single.powers.len(), 1);
        assert_relative_eq!(single.powers[0], 0.3, max_relative = 1e-12);
        let shared = cir_to_pdp(&cir(vec![tap(100.0, 0.3, 0.0), tap(101.0, 0.2, 0.0)]), 2e-9).unwrap();
        assert_eq!(shared.powers.len(), 1);
        assert_relative_eq!(shared.powers[0], 0.5);
        let split = cir_to_pdp(&cir(vec![tap(100.0, 1.0, 0.0), tap(103.0, 1.0, 0.0)]), 2e-9).unwrap();
        assert_eq!(split.powers.iter().filter(|p| **p > 0.0).count(), 2);
        assert_relative_eq!(split.first_bin_delay, 100e-9, epsilon = 1e-18);
        assert!(cir_to_pdp(&cir(vec![]), 2e-9).is_err());
    }

    #[test]
    fn denoise_examples() {
        let p = pdp(vec![dbm(0.0), dbm(-19.0), dbm(-21.0), dbm(-20.0)]);
        let d = denoise(&p, 20.0).unwrap();
        assert_eq!(d.powers[1], p.powers[1]);
        assert_eq!(d.powers[2], 0.0);
        assert_eq!(d.powers[3], p.powers[3]);
        let flat = pdp(vec![0.5; 5]);
        assert_eq!(denoise(&flat, 20.0).unwrap(), flat);
        let zero = pdp(vec![0.0; 4]);
        assert_eq!(denoise(&zero, 20.0).unwrap(), zero);
        assert!(denoise(&flat, 0.0).is_err());
    }

    #[test]
    fn omni_examples() {
        let a = DirectionalPdp {
            azimuth: 0.0,
            pdp: pdp(vec![0.0, 2.0]),
        };
        let b = DirectionalPdp {
            azimuth: 15.0,
            pdp: pdp(vec![0.0, 2.0]),
        };
        assert_eq!(synthesize_omni(&[a.clone(), b]).unwrap().powers, vec![0.0, 4.0]);

        let mut sweeps = vec![a.clone()];
        for k in 1..24 {
            sweeps.push(DirectionalPdp {
                azimuth: 15.0 * k as f64,
                pdp: pdp(vec![0.0, 0.0]),
            });
        }
        assert_eq!(synthesize_omni(&sweeps).unwrap().powers, a.pdp.powers);

        let other = DirectionalPdp {
            azimuth: 30.0,
            pdp: Pdp::new(1e-9, 100e-9, vec![1.0]).unwrap(),
        };
        assert!(synthesize_omni(&[a.clone(), other]).is_err());
        let misaligned = DirectionalPdp {
            azimuth: 30.0,
            pdp: Pdp::new(2e-9, 101e-9, vec![1.0]).unwrap(),
        };
        assert!(synthesize_omni(&[a, misaligned]).is_err());
        assert!(synthesize_omni(&[]).is_err());
    }

    #[test]
    fn offset_sweeps_combine_on_shared_grid() {
        let a = DirectionalPdp {
            azimuth: 0.0,
            pdp: Pdp::new(2e-9, 100e-9, vec![1.0, 1.0]).unwrap(),
        };
        let b = DirectionalPdp {
            azimuth: 15.0,
            pdp: Pdp::new(2e-9, 104e-9, vec![3.0]).unwrap(),
        };
        let o = synthesize_omni(&[a, b]).unwrap();
        assert_eq!(o.powers, vec![1.0, 1.0, 3.0]);
    }

    #[test]
    fn sector_sweep_conserves_power() {
        let taps: Vec<CirTap> = (0..60)
            .map(|k| tap(90.0 + 3.7 * k as f64, 1.0 / (1.0 + k as f64), (k as f64 * 47.3) % 360.0))
            .collect();
        let c = cir(taps);
        let sweeps = sector_sweep(&c, 24, 2e-9).unwrap();
        assert_eq!(sweeps.len(), 24);
        let omni = synthesize_omni(&sweeps).unwrap();
        assert_relative_eq!(omni.total_power(), c.total_power(), max_relative = 1e-6);
        assert_eq!(omni, cir_to_pdp(&c, 2e-9).unwrap());
    }

    #[test]
    fn cluster_counting_examples() {
        let mut p = pdp(vec![0.0; 60]);
        assert_eq!(count_time_clusters(&p, 25e-9), 0);
        p.powers[0] = 1.0;
        assert_eq!(count_time_clusters(&p, 25e-9), 1);
        p.powers[50] = 1.0; // 100 ns later
        assert_eq!(count_time_clusters(&p, 25e-9), 2);
        let mut q = pdp(vec![0.0; 60]);
        q.powers[0] = 1.0;
        q.powers[5] = 1.0; // 10 ns later
        assert_eq!(count_time_clusters(&q, 25e-9), 1);
    }

    #[test]
    fn delay_spread_examples() {
        assert_eq!(rms_delay_spread(&pdp(vec![0.0, 3.0, 0.0])).unwrap(), 0.0);
        let mut two = pdp(vec![0.0; 21]);
        two.powers[0] = 1.0;
        two.powers[20] = 1.0; // 40 ns apart
        assert_relative_eq!(rms_delay_spread(&two).unwrap(), 20e-9, max_relative = 1e-12);
        let scaled = Pdp {
            powers: two.powers.iter().map(|p| p * 1e-7).collect(),
            ..two.clone()
        };
        assert_relative_eq!(rms_delay_spread(&scaled).unwrap(), 20e-9, max_relative = 1e-12);
        assert!(matches!(
            rms_delay_spread(&pdp(vec![0.0; 3])),
            Err(Error::UndefinedStatistic(_))
        ));
    }

    #[test]
    fn correlation_distance_white_and_constant() {
        let white: Vec<f64> = (0..2000u64)
            .map(|k| crate::field::counter_gaussian(1, 2, 3, k, 0))
            .collect();
        let est = estimate_correlation_distance(&RouteSeries::new(5.0, white).unwrap()).unwrap();
        assert!(est.meters().unwrap() <= 5.0);
        let flat = RouteSeries::new(5.0, vec![4.0; 30]).unwrap();
        assert_eq!(
            estimate_correlation_distance(&flat).unwrap(),
            CorrelationDistance::Unbounded
        );
        let short = RouteSeries::new(5.0, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(estimate_correlation_distance(&short).is_err());
    }

    #[test]
    fn correlation_distance_round_trip() {
        let spec = CorrelatedFieldSpec::new(7.5, 2024, 77).unwrap();
        let path: Vec<Position> = (0..10_000).map(|k| Position::new(k as f64, 0.0, 1.5)).collect();
        let series = RouteSeries::new(1.0, sample_ou_path(&path, &spec).unwrap()).unwrap();
        let d = estimate_correlation_distance(&series).unwrap().meters().unwrap();
        assert!((d - 7.5).abs() <= 1.0, "{d}");
    }

    #[test]
    fn paired_count_pattern_estimate() {
        let pattern = [3.0, 3.0, 4.0, 4.0, 6.0, 6.0];
        let values: Vec<f64> = pattern.iter().cycle().take(60).copied().collect();
        let d = estimate_correlation_distance(&RouteSeries::new(5.0, values).unwrap())
            .unwrap()
            .meters()
            .unwrap();
        assert!((5.0..=10.0).contains(&d), "{d}");
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let d = DirectionalPdp {
            azimuth: 45.0,
            pdp: Pdp::new(2e-9, 100e-9, vec![1e-9, 0.0, 3e-10]).unwrap(),
        };
        let text = format!("# sweep 1\n{}{}", directional_to_csv(&d), omni_to_csv(&d.pdp));
        let f = read_pdp_csv(text.as_bytes()).unwrap();
        assert_eq!(f.directional.len(), 1);
        assert_eq!(f.omni.len(), 1);
        let back = &f.directional[0];
        assert_eq!(back.azimuth, 45.0);
        assert_eq!(back.pdp.powers.len(), 3);
        assert_relative_eq!(back.pdp.first_bin_delay, 100e-9, max_relative = 1e-12);
        for (a, b) in back.pdp.powers.iter().zip(&d.pdp.powers) {
            assert_relative_eq!(*a, *b, max_relative = 1e-5);
        }

        assert!(read_pdp_csv("100,-50\n".as_bytes()).is_err());
        let bad_az = "azimuth_deg,bin_width_ns,first_bin_ns\n400,2,100\n100,-50\n";
        assert!(read_pdp_csv(bad_az.as_bytes()).is_err());
        let bad_num = "bin_width_ns,first_bin_ns\n2,100\n100,abc\n";
        assert!(matches!(
            read_pdp_csv(bad_num.as_bytes()),
            Err(Error::PdpFormat { line: 3, .. })
        ));
    }

    fn arb_pdp() -> impl Strategy<Value = Pdp> {
        proptest::collection::vec(prop_oneof![Just(0.0), 1e-12..1.0f64], 1..80)
            .prop_map(|p| Pdp::new(2e-9, 50e-9, p).unwrap())
    }

    proptest! {
        #[test]
        fn denoise_idempotent(p in arb_pdp(), t in 1.0..40.0f64) {
            let once = denoise(&p, t).unwrap();
            prop_assert_eq!(denoise(&once, t).unwrap(), once);
        }

        #[test]
        fn cluster_count_scale_invariant(p in arb_pdp(), s in 1e-6..1e6f64, void in 0.0..40e-9f64) {
            let scaled = Pdp { powers: p.powers.iter().map(|x| x * s).collect(), ..p.clone() };
            prop_assert_eq!(count_time_clusters(&p, void), count_time_clusters(&scaled, void));
        }

        #[test]
        fn omni_permutation_invariant_and_additive(ps in proptest::collection::vec(arb_pdp(), 1..6), rot in 0usize..6) {
            let sweeps: Vec<DirectionalPdp> = ps.iter().enumerate()
                .map(|(k, p)| DirectionalPdp { azimuth: 15.0 * k as f64, pdp: p.clone() })
                .collect();
            let mut rotated = sweeps.clone();
            rotated.rotate_left(rot % sweeps.len());
            rotated.reverse();
            let a = synthesize_omni(&sweeps).unwrap();
            let b = synthesize_omni(&rotated).unwrap();
            for (x, y) in a.powers.iter().zip(&b.powers) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
            let total: f64 = ps.iter().map(Pdp::total_power).sum();
            prop_assert!((a.total_power() - total).abs() <= 1e-9 * total.max(1.0));
        }
    }
}
