//! Built-in layouts and simulation runs.
//!
//! * `square4`: four POIs on the corners of a 10x10 square with a short
//!   wall through the centre that blocks both diagonals; two residents
//!   circle it in opposite directions.
//! * `cycle8`: eight POIs on a ring of radius 10 around an octagonal wall
//!   that blocks every chord except the ring edges; two residents circle
//!   in opposite directions for ten days.
//! * `office9`: an entrance, three corridor points, three cubicles (the
//!   residents' home sensors), a kitchen and a meeting room. Residents
//!   spend about two hours at a time at their cubicle, so roughly 90% of
//!   the two-day log comes from home sensors.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

use super::{Dwell, ResidentScript, Route, SensorModel, SimRun};
use crate::error::{Error, Result};
use crate::geometry::{LayoutMap, Point, Poi, Segment};
use crate::timecodec::parse_timestamp;

pub const FIXTURE_NAMES: [&str; 3] = ["square4", "cycle8", "office9"];

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub layout: LayoutMap,
    pub run: SimRun,
    /// Resident id -> home sensor id (empty unless the fixture has homes).
    pub home_sensors: BTreeMap<String, String>,
}

fn poi(id: &str, x: f64, y: f64) -> Poi {
    Poi {
        id: id.to_string(),
        point: Point::xy(x, y),
    }
}

fn wall(x1: f64, y1: f64, x2: f64, y2: f64) -> Segment {
    Segment::new(Point::xy(x1, y1), Point::xy(x2, y2)).expect("fixture walls have length")
}

fn ids(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn start() -> chrono::NaiveDateTime {
    parse_timestamp("2009-08-24 00:00:00", 0).expect("valid literal")
}

fn cyclist(id: &str, route: Vec<String>, dwell: Dwell, seed: u64) -> ResidentScript {
    ResidentScript {
        resident_id: id.to_string(),
        route: Route::Cycle(route),
        dwell,
        dwell_at: BTreeMap::new(),
        motion_period: None,
        rng_seed: seed,
    }
}

fn square4() -> Fixture {
    let layout = LayoutMap::new(
        vec![
            poi("M1", 0.0, 0.0),
            poi("M2", 10.0, 0.0),
            poi("M3", 10.0, 10.0),
            poi("M4", 0.0, 10.0),
        ],
        vec![wall(4.0, 5.0, 6.0, 5.0)],
    )
    .expect("valid fixture");
    let dwell = Dwell { mean: 60.0, std: 20.0 };
    let run = SimRun {
        duration: 86_400.0,
        start: start(),
        scripts: vec![
            // clockwise
            cyclist("R1", ids(&["M1", "M4", "M3", "M2"]), dwell, 11),
            // anticlockwise
            cyclist("R2", ids(&["M3", "M4", "M1", "M2"]), dwell, 12),
        ],
        sensor: SensorModel::default(),
        speed: 1.0,
        seed: 1,
    };
    Fixture {
        name: "square4".into(),
        layout,
        run,
        home_sensors: BTreeMap::new(),
    }
}

pub const CYCLE8_RADIUS: f64 = 10.0;
pub const CYCLE8_WALL_RADIUS: f64 = 8.5;

fn cycle8() -> Fixture {
    let pois: Vec<Poi> = (0..8)
        .map(|k| {
            let a = TAU * k as f64 / 8.0;
            poi(&format!("P{k}"), CYCLE8_RADIUS * a.cos(), CYCLE8_RADIUS * a.sin())
        })
        .collect();
    let corner = |k: usize| {
        let a = TAU * (k as f64 + 0.5) / 8.0;
        (CYCLE8_WALL_RADIUS * a.cos(), CYCLE8_WALL_RADIUS * a.sin())
    };
    let walls = (0..8)
        .map(|k| {
            let (x1, y1) = corner(k);
            let (x2, y2) = corner(k + 1);
            wall(x1, y1, x2, y2)
        })
        .collect();
    let layout = LayoutMap::new(pois, walls).expect("valid fixture");
    let ccw: Vec<String> = (0..8).map(|k| format!("P{k}")).collect();
    let cw: Vec<String> = (0..8).map(|k| format!("P{}", (12 - k) % 8)).collect();
    let dwell = Dwell { mean: 300.0, std: 120.0 };
    let run = SimRun {
        duration: 10.0 * 86_400.0,
        start: start(),
        scripts: vec![cyclist("R1", ccw, dwell, 21), cyclist("R2", cw, dwell, 22)],
        sensor: SensorModel::default(),
        speed: 1.0,
        seed: 2,
    };
    Fixture {
        name: "cycle8".into(),
        layout,
        run,
        home_sensors: BTreeMap::new(),
    }
}

fn office9() -> Fixture {
    let pois = vec![
        poi("E", -8.0, 0.0),
        poi("C1", 0.0, 0.0),
        poi("C2", 10.0, 0.0),
        poi("C3", 20.0, 0.0),
        poi("H1", 0.0, 8.0),
        poi("H2", 10.0, 8.0),
        poi("H3", 20.0, 8.0),
        poi("K", 10.0, -8.0),
        poi("M", 20.0, -8.0),
    ];
    let walls = vec![
        // cubicle fronts with doorways at x = 0, 10, 20
        wall(-12.0, 4.0, -1.0, 4.0),
        wall(1.0, 4.0, 9.0, 4.0),
        wall(11.0, 4.0, 19.0, 4.0),
        wall(21.0, 4.0, 30.0, 4.0),
        // cubicle partitions
        wall(5.0, 4.0, 5.0, 12.0),
        wall(15.0, 4.0, 15.0, 12.0),
        // kitchen and meeting room fronts with doorways at x = 10, 20
        wall(-12.0, -4.0, 9.0, -4.0),
        wall(11.0, -4.0, 19.0, -4.0),
        wall(21.0, -4.0, 30.0, -4.0),
        wall(15.0, -4.0, 15.0, -12.0),
    ];
    let rooms: HashMap<String, u32> = [
        ("E", 0),
        ("C1", 1),
        ("C2", 1),
        ("C3", 1),
        ("H1", 2),
        ("H2", 3),
        ("H3", 4),
        ("K", 5),
        ("M", 6),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let layout = LayoutMap::new(pois, walls)
        .expect("valid fixture")
        .with_rooms(rooms);

    let errand = Dwell { mean: 60.0, std: 30.0 };
    let home = Dwell {
        mean: 7200.0,
        std: 1800.0,
    };
    // every trip crosses the shared corridor, kitchen and meeting room
    let mut scripts = vec![
        cyclist("R1", ids(&["H1", "C1", "C2", "K", "C2", "C3", "M", "C3", "C2", "C1"]), errand, 31),
        cyclist("R2", ids(&["H2", "C2", "C3", "M", "C3", "C2", "C1", "E", "C1", "C2", "K", "C2"]), errand, 32),
        cyclist("R3", ids(&["H3", "C3", "C2", "K", "C2", "C1", "E", "C1", "C2", "C3", "M", "C3"]), errand, 33),
    ];
    let mut homes = BTreeMap::new();
    for (k, s) in scripts.iter_mut().enumerate() {
        let h = format!("H{}", k + 1);
        s.dwell_at.insert(h.clone(), home);
        s.motion_period = Some(10.0);
        homes.insert(s.resident_id.clone(), h);
    }
    let run = SimRun {
        duration: 2.0 * 86_400.0,
        start: start(),
        scripts,
        sensor: SensorModel {
            detection_interval: 5.0,
            ..SensorModel::default()
        },
        speed: 1.0,
        seed: 3,
    };
    Fixture {
        name: "office9".into(),
        layout,
        run,
        home_sensors: homes,
    }
}

pub fn make_fixture(name: &str) -> Result<Fixture> {
    match name {
        "square4" => Ok(square4()),
        "cycle8" => Ok(cycle8()),
        "office9" => Ok(office9()),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::complete_graph_prune;

    #[test]
    fn square4_is_a_ring() {
        let f = make_fixture("square4").unwrap();
        let g = complete_graph_prune(&f.layout).unwrap();
        assert_eq!((g.len(), g.edge_count(), g.components().len()), (4, 4, 1));
    }

    #[test]
    fn cycle8_keeps_only_ring_edges() {
        let f = make_fixture("cycle8").unwrap();
        let g = complete_graph_prune(&f.layout).unwrap();
        assert_eq!(g.edge_count(), 8);
        for k in 0..8 {
            assert!(g.has_edge(k, (k + 1) % 8));
        }
    }

    #[test]
    fn office9_shape() {
        let f = make_fixture("office9").unwrap();
        let g = complete_graph_prune(&f.layout).unwrap();
        assert_eq!(g.len(), 9);
        assert!(g.is_connected());
        assert_eq!(f.home_sensors.len(), 3);
        let i = |id: &str| g.index_of(id).unwrap();
        assert!(g.has_edge(i("H1"), i("C1")));
        assert!(!g.has_edge(i("H1"), i("H2")));
        assert!(!g.has_edge(i("H1"), i("C2")));
        assert!(g.has_edge(i("K"), i("C2")));
        assert!(!g.has_edge(i("K"), i("M")));
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(make_fixture("villa"), Err(Error::UnknownFixture(_))));
    }
}
