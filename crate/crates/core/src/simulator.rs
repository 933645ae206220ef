//! Deterministic multi-resident motion-sensor simulator.
//!
//! Residents walk scripted routes over an accessibility graph at a uniform
//! speed and dwell at POIs. Every arrival (and, while dwelling, every
//! `motion_period`) is a motion stimulus at that POI's sensor. Sensors
//! behave like off-the-shelf PIR devices: a stimulus is reported as `ON`
//! unless the sensor reported within the last `detection_interval`
//! seconds, and `OFF` follows once the sensor area is empty and no motion
//! was seen for `detection_interval` seconds. Suppression is per sensor,
//! shared by all residents.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use chrono::{NaiveDateTime, TimeDelta};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AccessibilityGraph;
use crate::ingest::{Annotation, EventRecord, LabeledEvent, Marker};
use crate::rng::{self, Rng};

pub mod fixtures;

pub use fixtures::{make_fixture, Fixture};

const US: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dwell {
    pub mean: f64,
    pub std: f64,
}

impl Dwell {
    pub fn fixed(secs: f64) -> Self {
        Dwell { mean: secs, std: 0.0 }
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        if self.std <= 0.0 {
            return self.mean.max(0.0);
        }
        // validated finite and positive
        Normal::new(self.mean, self.std).unwrap().sample(rng).max(0.0)
    }
}

/// Time-of-day window during which the resident stays at `poi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    /// Seconds after midnight.
    pub start: f64,
    pub end: f64,
    pub poi: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Visit these POIs in order, forever; consecutive entries (and the
    /// last/first pair) must be adjacent.
    Cycle(Vec<String>),
    /// Daily windows in chronological order. The resident enters and
    /// leaves the home through `exit` and is absent outside all windows.
    /// Window boundaries are jittered by the script's dwell deviation.
    Schedule { entries: Vec<ScheduleEntry>, exit: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidentScript {
    pub resident_id: String,
    pub route: Route,
    pub dwell: Dwell,
    /// Per-POI dwell overrides for cyclic routes.
    #[serde(default)]
    pub dwell_at: BTreeMap<String, Dwell>,
    /// While dwelling, emit a motion stimulus this often (seconds).
    #[serde(default)]
    pub motion_period: Option<f64>,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    /// Seconds, >= 0.
    pub detection_interval: f64,
    /// Probability that a motion stimulus goes undetected.
    pub p_fail: f64,
    /// POIs carrying a sensor; `None` means every POI.
    #[serde(default)]
    pub sensors: Option<Vec<String>>,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            detection_interval: 0.0,
            p_fail: 0.0,
            sensors: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    /// Seconds.
    pub duration: f64,
    pub start: NaiveDateTime,
    pub scripts: Vec<ResidentScript>,
    pub sensor: SensorModel,
    /// Distance units per second.
    pub speed: f64,
    pub seed: u64,
}

impl SimRun {
    pub fn residents(&self) -> Vec<String> {
        self.scripts.iter().map(|s| s.resident_id.clone()).collect()
    }
}

fn check_dwell(d: &Dwell, who: &str) -> Result<()> {
    if !(d.mean.is_finite() && d.mean >= 0.0 && d.std.is_finite() && d.std >= 0.0) {
        return Err(Error::InvalidConfig(format!("{who}: dwell must be finite and >= 0")));
    }
    Ok(())
}

/// Checks the run against the graph.
fn validate(graph: &AccessibilityGraph, run: &SimRun) -> Result<()> {
    if !(run.duration > 0.0 && run.duration.is_finite()) {
        return Err(Error::InvalidConfig("duration must be > 0".into()));
    }
    if !(run.speed > 0.0 && run.speed.is_finite()) {
        return Err(Error::InvalidConfig("speed must be > 0".into()));
    }
    if run.scripts.is_empty() {
        return Err(Error::InvalidConfig("at least one resident script is required".into()));
    }
    let s = &run.sensor;
    if !(s.detection_interval >= 0.0 && s.detection_interval.is_finite()) {
        return Err(Error::InvalidConfig("detection_interval must be >= 0".into()));
    }
    if !(0.0..1.0).contains(&s.p_fail) {
        return Err(Error::InvalidConfig("p_fail must be in [0, 1)".into()));
    }
    for id in s.sensors.iter().flatten() {
        graph.index_of(id)?;
    }
    let mut names = std::collections::HashSet::new();
    for script in &run.scripts {
        let who = &script.resident_id;
        if who.is_empty() || who.contains(char::is_whitespace) || who.contains('_') {
            return Err(Error::InvalidConfig(format!(
                "resident id `{who}` must be nonempty without whitespace or `_`"
            )));
        }
        if !names.insert(who) {
            return Err(Error::InvalidConfig(format!("duplicate resident id `{who}`")));
        }
        check_dwell(&script.dwell, who)?;
        for (poi, d) in &script.dwell_at {
            graph.index_of(poi)?;
            check_dwell(d, who)?;
        }
        if let Some(p) = script.motion_period {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidConfig(format!("{who}: motion_period must be > 0")));
            }
        }
        match &script.route {
            Route::Cycle(pois) => {
                if pois.is_empty() {
                    return Err(Error::InvalidConfig(format!("{who}: empty route")));
                }
                let idx: Vec<usize> = pois.iter().map(|p| graph.index_of(p)).collect::<Result<_>>()?;
                if idx.len() > 1 {
                    for k in 0..idx.len() {
                        let (a, b) = (idx[k], idx[(k + 1) % idx.len()]);
                        if a == b || !graph.has_edge(a, b) {
                            return Err(Error::DisconnectedRoute {
                                from: pois[k].clone(),
                                to: pois[(k + 1) % idx.len()].clone(),
                            });
                        }
                    }
                }
            }
            Route::Schedule { entries, exit } => {
                let exit_i = graph.index_of(exit)?;
                let mut prev_end = 0.0;
                for e in entries {
                    if !(e.start >= prev_end && e.end > e.start && e.end <= 86_400.0) {
                        return Err(Error::InvalidConfig(format!(
                            "{who}: schedule windows must be ordered, nonempty and within a day"
                        )));
                    }
                    prev_end = e.end;
                    let t = graph.index_of(&e.poi)?;
                    if graph.shortest_path(exit_i, t).is_none() {
                        return Err(Error::DisconnectedRoute {
                            from: exit.clone(),
                            to: e.poi.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// One stay of a resident at a POI, in microseconds from the run start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Visit {
    poi: usize,
    arrive: i64,
    depart: i64,
}

fn travel_us(graph: &AccessibilityGraph, a: usize, b: usize, speed: f64) -> i64 {
    ((graph.dist()[a][b] / speed) * US).round().max(1.0) as i64
}

fn cycle_visits(
    graph: &AccessibilityGraph,
    script: &ResidentScript,
    pois: &[String],
    speed: f64,
    horizon: i64,
) -> Vec<Visit> {
    let idx: Vec<usize> = pois.iter().map(|p| graph.index_of(p).unwrap()).collect();
    let dwell: Vec<Dwell> = pois
        .iter()
        .map(|p| script.dwell_at.get(p).copied().unwrap_or(script.dwell))
        .collect();
    let mut rng = rng::seeded(script.rng_seed);
    let mut out = Vec::new();
    let mut t = 0i64;
    let mut k = 0usize;
    while t < horizon {
        let d = (dwell[k].sample(&mut rng) * US).round() as i64;
        out.push(Visit {
            poi: idx[k],
            arrive: t,
            depart: t.saturating_add(d),
        });
        if idx.len() == 1 {
            break;
        }
        let next = (k + 1) % idx.len();
        t = t.saturating_add(d).saturating_add(travel_us(graph, idx[k], idx[next], speed));
        k = next;
    }
    out
}

fn schedule_visits(
    graph: &AccessibilityGraph,
    script: &ResidentScript,
    entries: &[ScheduleEntry],
    exit: &str,
    speed: f64,
    horizon: i64,
) -> Vec<Visit> {
    let exit = graph.index_of(exit).unwrap();
    let jitter = Dwell {
        mean: 0.0,
        std: script.dwell.std,
    };
    let mut rng = rng::seeded(script.rng_seed);
    let jit = |rng: &mut Rng| {
        if jitter.std > 0.0 {
            (Normal::new(0.0, jitter.std).unwrap().sample(rng) * US).round() as i64
        } else {
            0
        }
    };
    let day = 86_400 * 1_000_000i64;
    let mut out: Vec<Visit> = Vec::new();
    // walks from `from` to `to`, passing through intermediate POIs
    let walk = |out: &mut Vec<Visit>, from: usize, to: usize, mut t: i64| -> i64 {
        let path = graph.shortest_path(from, to).unwrap();
        for w in path.windows(2) {
            t += travel_us(graph, w[0], w[1], speed);
            out.push(Visit {
                poi: w[1],
                arrive: t,
                depart: t,
            });
        }
        t
    };
    let mut d = 0i64;
    while d * day < horizon && !entries.is_empty() {
        let base = d * day;
        let mut t = (base + (entries[0].start * US) as i64 + jit(&mut rng)).max(out.last().map_or(0, |v| v.depart + 1));
        out.push(Visit {
            poi: exit,
            arrive: t,
            depart: t,
        });
        let mut here = exit;
        for (k, e) in entries.iter().enumerate() {
            let target = graph.index_of(&e.poi).unwrap();
            if here != target {
                t = walk(&mut out, here, target, t);
            }
            let mut end = base + (e.end * US) as i64 + jit(&mut rng);
            if let Some(next) = entries.get(k + 1) {
                end = end.min(base + (next.start * US) as i64);
            }
            let end = end.max(t);
            // the last visit is the stay at `target`
            out.last_mut().unwrap().depart = end;
            t = end;
            here = target;
        }
        walk(&mut out, here, exit, t);
        d += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stimulus {
    Depart { resident: usize, poi: usize },
    Arrive { resident: usize, poi: usize },
    Motion { resident: usize, poi: usize },
    OffCheck { poi: usize },
}

#[derive(Debug, Clone, Default)]
struct SensorState {
    has_sensor: bool,
    present: Vec<usize>,
    active: bool,
    window_end: i64,
    last_motion: i64,
    last_resident: usize,
}

/// A raw sensor report with its ground-truth resident.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Report {
    t: i64,
    poi: usize,
    on: bool,
    resident: usize,
}

/// Runs the simulation. Events carry ground-truth resident indices (in
/// script order) and `R<k>_Sim` span annotations around each maximal run
/// of consecutive events of one resident; a run of a single event gets a
/// bare activity tag instead.
pub fn simulate(graph: &AccessibilityGraph, run: &SimRun) -> Result<Vec<LabeledEvent>> {
    validate(graph, run)?;
    let horizon = (run.duration * US).round() as i64;
    let interval = (run.sensor.detection_interval * US).round() as i64;

    let mut heap: BinaryHeap<Reverse<(i64, u64, Stimulus)>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push = |heap: &mut BinaryHeap<_>, t: i64, s: Stimulus| {
        if t < horizon {
            heap.push(Reverse((t, seq, s)));
            seq += 1;
        }
    };

    for (r, script) in run.scripts.iter().enumerate() {
        let visits = match &script.route {
            Route::Cycle(pois) => cycle_visits(graph, script, pois, run.speed, horizon),
            Route::Schedule { entries, exit } => {
                schedule_visits(graph, script, entries, exit, run.speed, horizon)
            }
        };
        for v in visits {
            push(&mut heap, v.arrive, Stimulus::Arrive { resident: r, poi: v.poi });
            if let Some(p) = script.motion_period {
                let step = (p * US).round().max(1.0) as i64;
                let mut t = v.arrive + step;
                while t < v.depart && t < horizon {
                    push(&mut heap, t, Stimulus::Motion { resident: r, poi: v.poi });
                    t += step;
                }
            }
            // a single-POI cycle never leaves
            if !(matches!(&script.route, Route::Cycle(p) if p.len() == 1)) {
                push(&mut heap, v.depart, Stimulus::Depart { resident: r, poi: v.poi });
            }
        }
    }

    let mut sensors: Vec<SensorState> = (0..graph.len())
        .map(|i| SensorState {
            has_sensor: run
                .sensor
                .sensors
                .as_ref()
                .is_none_or(|s| s.iter().any(|id| *id == graph.node_ids()[i])),
            ..SensorState::default()
        })
        .collect();
    let mut fail_rng = rng::rng(run.seed, 0x5e45);
    let mut reports: Vec<Report> = Vec::new();

    while let Some(Reverse((t, _, stim))) = heap.pop() {
        match stim {
            Stimulus::Arrive { resident, poi } | Stimulus::Motion { resident, poi } => {
                let s = &mut sensors[poi];
                if matches!(stim, Stimulus::Arrive { .. }) {
                    s.present.push(resident);
                }
                if !s.has_sensor {
                    continue;
                }
                if run.sensor.p_fail > 0.0 && fail_rng.random::<f64>() < run.sensor.p_fail {
                    continue;
                }
                s.last_motion = t;
                s.last_resident = resident;
                if !s.active || t >= s.window_end {
                    reports.push(Report {
                        t,
                        poi,
                        on: true,
                        resident,
                    });
                    s.active = true;
                    s.window_end = t + interval;
                }
                let check = t + interval;
                push(&mut heap, check, Stimulus::OffCheck { poi });
            }
            Stimulus::Depart { resident, poi } => {
                let s = &mut sensors[poi];
                if let Some(k) = s.present.iter().position(|&r| r == resident) {
                    s.present.swap_remove(k);
                }
                if s.has_sensor && s.present.is_empty() {
                    let check = t.max(s.last_motion + interval);
                    push(&mut heap, check, Stimulus::OffCheck { poi });
                }
            }
            Stimulus::OffCheck { poi } => {
                let s = &mut sensors[poi];
                if s.active && s.present.is_empty() && t >= s.last_motion + interval {
                    reports.push(Report {
                        t,
                        poi,
                        on: false,
                        resident: s.last_resident,
                    });
                    s.active = false;
                }
            }
        }
    }

    Ok(annotate(graph, run, &reports))
}

fn annotate(graph: &AccessibilityGraph, run: &SimRun, reports: &[Report]) -> Vec<LabeledEvent> {
    let mut out: Vec<LabeledEvent> = reports
        .iter()
        .map(|r| LabeledEvent {
            event: EventRecord {
                timestamp: run.start + TimeDelta::microseconds(r.t),
                sensor_id: graph.node_ids()[r.poi].clone(),
                status: if r.on { "ON" } else { "OFF" }.to_string(),
                annotation: None,
            },
            resident: Some(r.resident),
        })
        .collect();
    let mut i = 0;
    while i < out.len() {
        let who = out[i].resident;
        let mut j = i;
        while j + 1 < out.len() && out[j + 1].resident == who {
            j += 1;
        }
        let activity = format!("{}_Sim", run.scripts[who.unwrap()].resident_id);
        if i == j {
            out[i].event.annotation = Some(Annotation {
                activity,
                marker: None,
            });
        } else {
            out[i].event.annotation = Some(Annotation {
                activity: activity.clone(),
                marker: Some(Marker::Begin),
            });
            out[j].event.annotation = Some(Annotation {
                activity,
                marker: Some(Marker::End),
            });
        }
        i = j + 1;
    }
    out
}

/// CASAS whitespace log of `events`.
pub fn to_log(events: &[LabeledEvent]) -> String {
    let mut s = String::new();
    for e in events {
        s.push_str(&e.event.to_line());
        s.push('\n');
    }
    s
}

/// `timestamp,sensor,status,resident` sidecar.
pub fn ground_truth_csv(events: &[LabeledEvent], residents: &[String]) -> String {
    let mut s = String::from("timestamp,sensor,status,resident\n");
    for e in events {
        let who = e
            .resident
            .and_then(|r| residents.get(r))
            .map_or("unknown", String::as_str);
        writeln!(
            s,
            "{},{},{},{}",
            e.event.timestamp.format("%Y-%m-%d %H:%M:%S%.6f"),
            e.event.sensor_id,
            e.event.status,
            who
        )
        .unwrap();
    }
    s
}
