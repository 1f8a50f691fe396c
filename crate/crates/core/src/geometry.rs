//! Positions, drive routes, the update-tick schedule and the square grid
//! tessellation that defines spatial-consistency cells.
//!
//! Everything here is a plain value type in a fixed local Cartesian frame
//! (meters, `z` is antenna height). Grid cells are half-open in x and y: a
//! point lying exactly on a cell border belongs to the cell on its right/top.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite() && self.z.is_finite()) {
            return Err(Error::invalid(format!("non-finite position {self:?}")));
        }
        if self.z < 0.0 {
            return Err(Error::invalid(format!("negative antenna height {}", self.z)));
        }
        Ok(())
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        let [dx, dy, dz] = other.offset_from(self);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn horizontal_distance_to(&self, other: &Position) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// Vector `self - origin`.
    pub fn offset_from(&self, origin: &Position) -> [f64; 3] {
        [self.x - origin.x, self.y - origin.y, self.z - origin.z]
    }

    pub fn translated(&self, d: [f64; 3]) -> Position {
        Position::new(self.x + d[0], self.y + d[1], self.z + d[2])
    }
}

/// Unit direction of travel in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Heading {
    pub dx: f64,
    pub dy: f64,
}

impl Heading {
    fn between(a: &Position, b: &Position) -> Option<Heading> {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let n = dx.hypot(dy);
        (n > 0.0).then(|| Heading { dx: dx / n, dy: dy / n })
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.dy.atan2(self.dx).to_degrees().rem_euclid(360.0)
    }
}

impl Default for Heading {
    fn default() -> Self {
        Heading { dx: 1.0, dy: 0.0 }
    }
}

/// Piecewise-linear drive route traversed at constant speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory", into = "RawTrajectory")]
pub struct Trajectory {
    waypoints: Vec<Position>,
    speed: f64,
}

#[derive(Serialize, Deserialize)]
struct RawTrajectory {
    waypoints: Vec<Position>,
    speed: f64,
}

impl TryFrom<RawTrajectory> for Trajectory {
    type Error = Error;

    fn try_from(raw: RawTrajectory) -> Result<Self> {
        Trajectory::new(raw.waypoints, raw.speed)
    }
}

impl From<Trajectory> for RawTrajectory {
    fn from(t: Trajectory) -> Self {
        RawTrajectory {
            waypoints: t.waypoints,
            speed: t.speed,
        }
    }
}

impl Trajectory {
    pub fn new(waypoints: Vec<Position>, speed: f64) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::invalid("trajectory needs at least two waypoints"));
        }
        if !(speed.is_finite() && speed > 0.0) {
            return Err(Error::invalid(format!("speed must be positive, got {speed}")));
        }
        for w in &waypoints {
            w.validate()?;
        }
        if let Some(k) = waypoints.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("waypoints {k} and {} coincide", k + 1)));
        }
        Ok(Self { waypoints, speed })
    }

    /// Straight two-point route.
    pub fn straight(from: Position, to: Position, speed: f64) -> Result<Self> {
        Self::new(vec![from, to], speed)
    }

    pub fn waypoints(&self) -> &[Position] {
        &self.waypoints
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance_to(&w[1])).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateTick {
    pub index: usize,
    pub time: f64,
    pub position: Position,
    pub heading: Heading,
}

/// Places ticks every `update_distance` meters of arc length, starting at the
/// first waypoint and always ending with a tick at the last one (the final
/// step may be shorter). Tick time is arc length over speed.
pub fn build_update_schedule(trajectory: &Trajectory, update_distance: f64) -> Result<Vec<UpdateTick>> {
    if !(update_distance.is_finite() && update_distance > 0.0) {
        return Err(Error::invalid(format!(
            "update distance must be positive, got {update_distance}"
        )));
    }
    let total = trajectory.length();
    if !(total > 0.0) {
        return Err(Error::invalid("zero-length trajectory"));
    }

    let wp = trajectory.waypoints();
    // cumulative arc length at each waypoint
    let mut cum = Vec::with_capacity(wp.len());
    cum.push(0.0);
    for w in wp.windows(2) {
        cum.push(cum.last().unwrap() + w[0].distance_to(&w[1]));
    }

    let eps = update_distance * 1e-9;
    let mut arc: Vec<f64> = Vec::new();
    let mut k = 0usize;
    loop {
        let s = k as f64 * update_distance;
        if s > total - eps {
            break;
        }
        arc.push(s);
        k += 1;
    }
    arc.push(total);

    let mut fallback = Heading::default();
    let mut seg = 0usize;
    let ticks = arc
        .into_iter()
        .enumerate()
        .map(|(index, s)| {
            // segment whose [start, end) contains s; the route end uses the last segment
            while seg + 2 < cum.len() && s >= cum[seg + 1] - eps {
                seg += 1;
            }
            let (a, b) = (&wp[seg], &wp[seg + 1]);
            let len = cum[seg + 1] - cum[seg];
            let frac = ((s - cum[seg]) / len).clamp(0.0, 1.0);
            let position = a.translated(b.offset_from(a).map(|c| c * frac));
            let heading = Heading::between(a, b).unwrap_or(fallback);
            fallback = heading;
            UpdateTick {
                index,
                time: s / trajectory.speed(),
                position,
                heading,
            }
        })
        .collect();
    Ok(ticks)
}

/// Cell coordinates of a square, axis-aligned grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridIndex {
    pub i: i64,
    pub j: i64,
}

impl GridIndex {
    pub const fn new(i: i64, j: i64) -> Self {
        Self { i, j }
    }
}

/// Cell of side `correlation_distance` containing `position`, measured from
/// `origin`. Height is ignored.
pub fn grid_of(position: &Position, correlation_distance: f64, origin: &Position) -> Result<GridIndex> {
    if !(correlation_distance > 0.0) {
        return Err(Error::invalid(format!(
            "correlation distance must be positive, got {correlation_distance}"
        )));
    }
    let [dx, dy, _] = position.offset_from(origin);
    Ok(GridIndex {
        i: (dx / correlation_distance).floor() as i64,
        j: (dy / correlation_distance).floor() as i64,
    })
}

/// 3-D transmitter-receiver distance.
pub fn tr_separation(tx: &Position, rx: &Position) -> f64 {
    tx.distance_to(rx)
}
