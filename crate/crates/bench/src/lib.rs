//! Fixtures shared by the benchmarks.

use sconsim::channel::{Drive, Route, SmallScaleConfig};
use sconsim::geometry::{Position, Trajectory};
use sconsim::large_scale::{FieldSet, ScenarioConfig};
use sconsim::Cir;

pub fn tx() -> Position {
    Position::new(0.0, 0.0, 4.0)
}

/// 75 m straight approach toward the transmitter.
pub fn approach() -> Trajectory {
    Trajectory::straight(Position::new(80.0, 10.0, 1.5), Position::new(5.0, 10.0, 1.5), 1.0).unwrap()
}

pub fn route(seed: u64, update_distance: f64, scenario: &ScenarioConfig) -> Route {
    Route::prepare(
        &approach(),
        update_distance,
        tx(),
        Position::default(),
        scenario,
        &FieldSet::new(seed),
    )
    .unwrap()
}

/// CIR at the middle tick of a default drive.
pub fn mid_drive_cir(seed: u64) -> Cir {
    let scenario = ScenarioConfig::default();
    let small = SmallScaleConfig::default();
    let route = route(seed, 1.0, &scenario);
    let mid = route.len() / 2;
    let mut drive = Drive::new(&route, &scenario, &small, FieldSet::new(seed));
    let mut cir = None;
    for _ in 0..=mid {
        cir = Some(drive.advance().unwrap().unwrap().0.cir);
    }
    cir.unwrap()
}
