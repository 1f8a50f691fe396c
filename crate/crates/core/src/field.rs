//! Seedable spatial random fields.
//!
//! Vertex values of the square lattice are generated on demand by a
//! counter-based hash of `(seed, field id, lattice coordinates)`, so no
//! storage grows with the simulated area and adjacent cells share the values
//! on their common vertices. Interior points are bilinear blends of the four
//! surrounding vertices, renormalized to unit variance.
//!
//! Bilinear blending does not give an exactly exponential correlogram. Where
//! the exponential form matters (quantities evolving along a route) use
//! [`sample_ou_path`] or [`OuWalker`], which implement a first-order
//! exponential filter with exact `exp(-d / d_corr)` lag correlation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridIndex, Position};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedFieldSpec {
    /// Lattice spacing in meters. `f64::INFINITY` gives a perfectly correlated field.
    pub correlation_distance: f64,
    pub global_seed: u64,
    pub field_id: u32,
}

impl CorrelatedFieldSpec {
    pub fn new(correlation_distance: f64, global_seed: u64, field_id: u32) -> Result<Self> {
        if !(correlation_distance > 0.0) {
            return Err(Error::invalid(format!(
                "correlation distance must be positive, got {correlation_distance}"
            )));
        }
        Ok(Self {
            correlation_distance,
            global_seed,
            field_id,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub gaussian: f64,
    pub uniform: f64,
}

impl FieldSample {
    pub fn from_gaussian(gaussian: f64) -> Self {
        // clamp keeps uniform inside [0, 1) when the CDF rounds to 1
        let uniform = standard_normal_cdf(gaussian).min(1.0 - f64::EPSILON / 2.0);
        Self { gaussian, uniform }
    }
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

const LATTICE_STREAM: u64 = 0x4c41_5454;
const PATH_STREAM: u64 = 0x5041_5448;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based hash of a word sequence.
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x243f_6a88_85a3_08d3, |h, &w| splitmix64(h ^ splitmix64(w)))
}

/// Standard normal deviate addressed by `(seed, field, stream, a, b)`.
pub(crate) fn counter_gaussian(seed: u64, field: u32, stream: u64, a: u64, b: u64) -> f64 {
    let h1 = hash_words(&[seed, field as u64, stream, a, b, 0]);
    let h2 = hash_words(&[seed, field as u64, stream, a, b, 1]);
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((h1 >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
    let u2 = (h2 >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Value of the field on lattice vertex `(i, j)`.
pub fn lattice_gaussian(i: i64, j: i64, spec: &CorrelatedFieldSpec) -> f64 {
    counter_gaussian(spec.global_seed, spec.field_id, LATTICE_STREAM, i as u64, j as u64)
}

/// Vertex values of `cell` in the order south-west, south-east, north-west,
/// north-east.
pub fn vertex_gaussians(cell: GridIndex, spec: &CorrelatedFieldSpec) -> [f64; 4] {
    let GridIndex { i, j } = cell;
    [
        lattice_gaussian(i, j, spec),
        lattice_gaussian(i + 1, j, spec),
        lattice_gaussian(i, j + 1, spec),
        lattice_gaussian(i + 1, j + 1, spec),
    ]
}

/// Field value at the cell center; used for grid-constant quantities.
/// Edge neighbours share two vertices (correlation 0.5), cells two apart
/// share none.
pub fn cell_sample(cell: GridIndex, spec: &CorrelatedFieldSpec) -> FieldSample {
    FieldSample::from_gaussian(vertex_gaussians(cell, spec).iter().sum::<f64>() / 2.0)
}

/// Spatially consistent sample at an arbitrary position (lattice anchored at
/// the coordinate origin, height ignored).
pub fn sample(position: &Position, spec: &CorrelatedFieldSpec) -> FieldSample {
    let d = spec.correlation_distance;
    let (gx, gy) = (position.x / d, position.y / d);
    let (fi, fj) = (gx.floor(), gy.floor());
    let (u, v) = (gx - fi, gy - fj);
    let cell = GridIndex::new(fi as i64, fj as i64);
    let g = vertex_gaussians(cell, spec);
    let w = [(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v];
    let num: f64 = w.iter().zip(&g).map(|(w, g)| w * g).sum();
    let norm = w.iter().map(|w| w * w).sum::<f64>().sqrt();
    FieldSample::from_gaussian(num / norm)
}

/// `exp(-d / d_corr)`.
pub fn exp_correlation(d: f64, d_corr: f64) -> f64 {
    (-d / d_corr).exp()
}

/// Incremental first-order exponential filter. Each step of length `Δd`
/// mixes the previous value with fresh noise so that the lag correlation is
/// exactly `exp(-Δd / d_corr)` and the marginal stays standard normal.
#[derive(Debug, Clone)]
pub struct OuWalker {
    seed: u64,
    field_id: u32,
    step: u64,
    value: f64,
}

impl OuWalker {
    pub fn new(spec: &CorrelatedFieldSpec) -> Self {
        Self {
            seed: spec.global_seed,
            field_id: spec.field_id,
            step: 0,
            value: counter_gaussian(spec.global_seed, spec.field_id, PATH_STREAM, 0, 0),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Advance by `distance` meters using correlation distance `d_corr`.
    pub fn advance(&mut self, distance: f64, d_corr: f64) -> f64 {
        self.step += 1;
        let rho = exp_correlation(distance, d_corr);
        let w = counter_gaussian(self.seed, self.field_id, PATH_STREAM, self.step, 0);
        self.value = rho * self.value + (1.0 - rho * rho).max(0.0).sqrt() * w;
        self.value
    }
}

/// Gaussian sequence along a path with exponential autocorrelation in
/// distance.
pub fn sample_ou_path(positions: &[Position], spec: &CorrelatedFieldSpec) -> Result<Vec<f64>> {
    let first = positions.first().ok_or_else(|| Error::invalid("empty path"))?;
    let mut walker = OuWalker::new(spec);
    let mut out = Vec::with_capacity(positions.len());
    out.push(walker.value());
    let mut prev = first;
    for p in &positions[1..] {
        out.push(walker.advance(prev.distance_to(p), spec.correlation_distance));
        prev = p;
    }
    Ok(out)
}
