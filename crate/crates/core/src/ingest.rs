//! CASAS-style event logs: parsing, resident labeling from activity spans,
//! down-/up-sampling, feature assembly and chunking.
//!
//! A log line is `DATE TIME SENSOR STATUS [ACTIVITY [begin|end]]`, e.g.
//! `08-24 00:00:19 M050 ON R1_Wandering begin`. Dates without a year take
//! the year from the dataset configuration.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::BufRead;

use chrono::NaiveDateTime;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::embedding::PositionalEncoder;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::timecodec::{encode_timestamp, parse_timestamp, TimeVector};

/// Fraction of malformed lines above which parsing aborts.
pub const MAX_MALFORMED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marker {
    Begin,
    End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub activity: String,
    /// `None` for a bare activity tag, which labels only its own event.
    pub marker: Option<Marker>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub timestamp: NaiveDateTime,
    pub sensor_id: String,
    pub status: String,
    pub annotation: Option<Annotation>,
}

impl EventRecord {
    /// Inverse of line parsing, with a full `YYYY-MM-DD` date.
    pub fn to_line(&self) -> String {
        let mut line = self.timestamp.format("%Y-%m-%d %H:%M:%S%.6f").to_string();
        write!(line, " {} {}", self.sensor_id, self.status).unwrap();
        if let Some(a) = &self.annotation {
            write!(line, " {}", a.activity).unwrap();
            match a.marker {
                Some(Marker::Begin) => line.push_str(" begin"),
                Some(Marker::End) => line.push_str(" end"),
                None => {}
            }
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    pub line_no: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedLog {
    pub records: Vec<EventRecord>,
    pub malformed: Vec<MalformedLine>,
}

fn parse_line(line: &str, default_year: i32) -> Result<EventRecord, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if !(4..=6).contains(&fields.len()) {
        return Err(format!(
            "expected date, time, sensor, status and up to two annotation fields; got {} fields",
            fields.len()
        ));
    }
    let ts_text = format!("{} {}", fields[0], fields[1]);
    let timestamp = parse_timestamp(&ts_text, default_year).map_err(|e| e.to_string())?;
    let annotation = match fields.get(4) {
        None => None,
        Some(activity) => {
            let marker = match fields.get(5).map(|m| m.to_ascii_lowercase()) {
                None => None,
                Some(m) if m == "begin" => Some(Marker::Begin),
                Some(m) if m == "end" => Some(Marker::End),
                Some(m) => return Err(format!("unknown span marker `{m}`")),
            };
            Some(Annotation {
                activity: activity.to_string(),
                marker,
            })
        }
    };
    Ok(EventRecord {
        timestamp,
        sensor_id: fields[2].to_string(),
        status: fields[3].to_string(),
        annotation,
    })
}

/// Parses a whole log. Blank lines are skipped; malformed lines are
/// reported with their 1-based line numbers. More than
/// [`MAX_MALFORMED_FRACTION`] malformed lines is an error.
pub fn parse_log<R: BufRead>(reader: R, default_year: i32) -> Result<ParsedLog> {
    let mut out = ParsedLog::default();
    let mut total = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match parse_line(&line, default_year) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => out.malformed.push(MalformedLine {
                line_no: i + 1,
                reason,
            }),
        }
    }
    if total > 0 && out.malformed.len() as f64 > MAX_MALFORMED_FRACTION * total as f64 {
        let first = &out.malformed[0];
        return Err(Error::TooManyMalformed {
            malformed: out.malformed.len(),
            total,
            first_line: first.line_no,
            first_reason: first.reason.clone(),
        });
    }
    for m in &out.malformed {
        log::warn!("line {}: {}", m.line_no, m.reason);
    }
    Ok(out)
}

/// Merges several parsed logs by timestamp; ties keep file order.
pub fn merge_logs(logs: Vec<Vec<EventRecord>>) -> Vec<EventRecord> {
    let mut all: Vec<(usize, usize, EventRecord)> = logs
        .into_iter()
        .enumerate()
        .flat_map(|(f, recs)| recs.into_iter().enumerate().map(move |(i, r)| (f, i, r)))
        .collect();
    all.sort_by(|a, b| a.2.timestamp.cmp(&b.2.timestamp).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    all.into_iter().map(|(_, _, r)| r).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledEvent {
    pub event: EventRecord,
    /// Index into the resident list; `None` is unknown.
    pub resident: Option<usize>,
}

/// Resident tag of an activity string: `R1_Wandering` -> `R1`.
pub fn resident_tag(activity: &str) -> &str {
    activity.split('_').next().unwrap_or(activity)
}

/// Labels each event with the resident of the most recently opened span
/// that is still active.
///
/// A `begin` opens its span before labeling its own event, an `end`
/// closes it after. An `end` without a matching open span is ignored with
/// a warning. Annotations naming residents outside `residents` are
/// ignored.
pub fn label_events(records: &[EventRecord], residents: &[String]) -> Vec<LabeledEvent> {
    let lookup: HashMap<&str, usize> = residents
        .iter()
        .enumerate()
        .map(|(i, r)| (r.as_str(), i))
        .collect();
    let mut active: Vec<(usize, String)> = Vec::new();
    let mut out = Vec::with_capacity(records.len());

    for rec in records {
        let annotated = rec.annotation.as_ref().and_then(|a| {
            let tag = resident_tag(&a.activity);
            match lookup.get(tag) {
                Some(&r) => Some((r, a)),
                None => {
                    log::debug!("annotation `{}` names an unknown resident", a.activity);
                    None
                }
            }
        });

        let mut point_label = None;
        if let Some((r, a)) = annotated {
            match a.marker {
                Some(Marker::Begin) => active.push((r, a.activity.clone())),
                None => point_label = Some(r),
                Some(Marker::End) => {}
            }
        }

        let resident = point_label.or_else(|| active.last().map(|(r, _)| *r));
        out.push(LabeledEvent {
            event: rec.clone(),
            resident,
        });

        if let Some((r, a)) = annotated {
            if a.marker == Some(Marker::End) {
                let pos = active
                    .iter()
                    .rposition(|(ar, act)| *ar == r && *act == a.activity)
                    .or_else(|| active.iter().rposition(|(ar, _)| *ar == r));
                match pos {
                    Some(p) => {
                        active.remove(p);
                    }
                    None => log::warn!(
                        "`{} end` at {} has no matching begin; ignored",
                        a.activity,
                        rec.timestamp
                    ),
                }
            }
        }
    }
    out
}

/// Ordered set of sensor ids; defines the one-hot slot of each sensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct SensorVocab {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for SensorVocab {
    fn from(ids: Vec<String>) -> Self {
        let mut uniq: Vec<String> = Vec::with_capacity(ids.len());
        for id in ids {
            if !uniq.contains(&id) {
                uniq.push(id);
            }
        }
        let index = uniq.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        SensorVocab { ids: uniq, index }
    }
}

impl From<SensorVocab> for Vec<String> {
    fn from(v: SensorVocab) -> Self {
        v.ids
    }
}

impl SensorVocab {
    /// Sorted distinct sensor ids seen in `events`.
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a EventRecord>) -> Self {
        let mut ids: Vec<String> = events.into_iter().map(|e| e.sensor_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids.into()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    /// Seconds; `0` disables down-sampling.
    pub downsample_interval: f64,
    /// Resident name -> home sensor id.
    pub home_sensors: BTreeMap<String, String>,
    pub upsample_factor: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            downsample_interval: 60.0,
            home_sensors: BTreeMap::new(),
            upsample_factor: 8,
        }
    }
}

/// Rate-limits stationary runs at each resident's home sensor.
///
/// For each resident, consecutive events of that resident at their home
/// sensor are thinned so that an event is kept only if more than the
/// interval has passed since the last kept one; an event of that resident
/// at any other sensor ends the run. Everything else passes through in
/// order.
pub fn downsample(
    events: &[LabeledEvent],
    residents: &[String],
    cfg: &SamplingConfig,
    vocab: &SensorVocab,
) -> Result<Vec<LabeledEvent>> {
    let mut home: Vec<Option<&str>> = vec![None; residents.len()];
    for (name, sensor) in &cfg.home_sensors {
        if !vocab.contains(sensor) {
            return Err(Error::UnknownSensor(sensor.clone()));
        }
        match residents.iter().position(|r| r == name) {
            Some(i) => home[i] = Some(sensor.as_str()),
            None => log::warn!("home sensor given for unknown resident `{name}`"),
        }
    }
    if cfg.downsample_interval <= 0.0 {
        return Ok(events.to_vec());
    }
    let interval_us = (cfg.downsample_interval * 1e6).round() as i64;
    let mut last_kept: Vec<Option<NaiveDateTime>> = vec![None; residents.len()];
    let mut out = Vec::with_capacity(events.len());
    for e in events {
        let Some(r) = e.resident else {
            out.push(e.clone());
            continue;
        };
        if home[r] != Some(e.event.sensor_id.as_str()) {
            last_kept[r] = None;
            out.push(e.clone());
            continue;
        }
        let within = last_kept[r].is_some_and(|t| {
            (e.event.timestamp - t).num_microseconds().unwrap_or(i64::MAX) <= interval_us
        });
        if !within {
            last_kept[r] = Some(e.event.timestamp);
            out.push(e.clone());
        }
    }
    Ok(out)
}

/// Maps raw status strings to the binary status feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatusMapping {
    /// Case-insensitive status words that mean "active".
    pub on_values: Vec<String>,
}

impl Default for StatusMapping {
    fn default() -> Self {
        StatusMapping {
            on_values: ["ON", "OPEN", "PRESENT", "TRUE"].map(String::from).to_vec(),
        }
    }
}

impl StatusMapping {
    /// `1` for an "on"-like word or a nonzero numeric reading.
    pub fn value(&self, status: &str) -> f64 {
        if self.on_values.iter().any(|v| v.eq_ignore_ascii_case(status)) {
            return 1.0;
        }
        match status.parse::<f64>() {
            Ok(x) if x != 0.0 && x.is_finite() => 1.0,
            _ => 0.0,
        }
    }
}

/// Feature width: time vector, one-hot sensor id, status bit, position.
pub fn feature_width(vocab: &SensorVocab, encoder: &PositionalEncoder) -> usize {
    TimeVector::WIDTH + vocab.len() + 1 + encoder.dim()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub features: Vec<f64>,
    pub label: Option<usize>,
}

pub fn build_features(
    events: &[LabeledEvent],
    encoder: &PositionalEncoder,
    vocab: &SensorVocab,
    status: &StatusMapping,
) -> Result<Vec<FeatureRow>> {
    let width = feature_width(vocab, encoder);
    let mut cache: HashMap<&str, Vec<f64>> = HashMap::new();
    events
        .iter()
        .map(|e| {
            let sensor = e.event.sensor_id.as_str();
            let slot = vocab
                .index_of(sensor)
                .ok_or_else(|| Error::UnknownSensor(sensor.to_string()))?;
            let mut row = Vec::with_capacity(width);
            row.extend_from_slice(encode_timestamp(&e.event.timestamp).as_slice());
            row.extend((0..vocab.len()).map(|k| if k == slot { 1.0 } else { 0.0 }));
            row.push(status.value(&e.event.status));
            if !cache.contains_key(sensor) {
                cache.insert(sensor, encoder.encode(sensor)?);
            }
            row.extend_from_slice(&cache[sensor]);
            debug_assert_eq!(row.len(), width);
            Ok(FeatureRow {
                features: row,
                label: e.resident,
            })
        })
        .collect()
}

/// Fixed-length slice of the event sequence.
///
/// Real rows form a prefix; `mask[i]` is false for zero padding. A real
/// row with `labels[i] == None` is an unknown-resident event: it is fed to
/// the model but contributes to neither loss nor metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSequence {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<Option<usize>>,
    pub mask: Vec<bool>,
}

impl FeatureSequence {
    pub fn chunk_len(&self) -> usize {
        self.mask.len()
    }

    /// Number of real (unpadded) rows.
    pub fn valid_len(&self) -> usize {
        self.mask.iter().take_while(|&&m| m).count()
    }

    pub fn width(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Rows that count towards loss and metrics.
    pub fn labeled(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.labels
            .iter()
            .zip(&self.mask)
            .enumerate()
            .filter_map(|(i, (l, &m))| if m { l.map(|l| (i, l)) } else { None })
    }
}

/// Consecutive non-overlapping chunks; the last one is zero-padded.
pub fn chunk(rows: &[FeatureRow], chunk_len: usize) -> Result<Vec<FeatureSequence>> {
    if chunk_len == 0 {
        return Err(Error::InvalidConfig("chunk_len must be >= 1".into()));
    }
    let width = rows.first().map_or(0, |r| r.features.len());
    Ok(rows
        .chunks(chunk_len)
        .map(|part| {
            let mut seq = FeatureSequence {
                features: part.iter().map(|r| r.features.clone()).collect(),
                labels: part.iter().map(|r| r.label).collect(),
                mask: vec![true; part.len()],
            };
            let pad = chunk_len - part.len();
            seq.features.extend(std::iter::repeat_n(vec![0.0; width], pad));
            seq.labels.extend(std::iter::repeat_n(None, pad));
            seq.mask.extend(std::iter::repeat_n(false, pad));
            seq
        })
        .collect())
}

/// Repeats each training chunk `factor` times and shuffles the result.
pub fn upsample_training(
    chunks: &[FeatureSequence],
    factor: usize,
    rng: &mut Rng,
) -> Result<Vec<FeatureSequence>> {
    if factor < 1 {
        return Err(Error::InvalidConfig("upsample factor must be >= 1".into()));
    }
    let mut out: Vec<FeatureSequence> = chunks
        .iter()
        .flat_map(|c| std::iter::repeat_n(c, factor).cloned())
        .collect();
    out.shuffle(rng);
    Ok(out)
}

/// One JSON object per line: `{"features":..,"labels":..,"mask":..}`.
pub fn chunks_to_jsonl(chunks: &[FeatureSequence]) -> Result<String> {
    let mut out = String::new();
    for c in chunks {
        out.push_str(&serde_json::to_string(c)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn chunks_from_jsonl(text: &str) -> Result<Vec<FeatureSequence>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// `chunk,rows,labeled,unknown,label_<k>...` summary per chunk.
pub fn chunk_index_csv(chunks: &[FeatureSequence], n_classes: usize) -> String {
    let mut out = String::from("chunk,rows,labeled,unknown");
    for k in 0..n_classes {
        write!(out, ",label_{k}").unwrap();
    }
    out.push('\n');
    for (i, c) in chunks.iter().enumerate() {
        let rows = c.valid_len();
        let mut per = vec![0usize; n_classes];
        let mut labeled = 0;
        for (_, l) in c.labeled() {
            labeled += 1;
            if l < n_classes {
                per[l] += 1;
            }
        }
        write!(out, "{i},{rows},{labeled},{}", rows - labeled).unwrap();
        for p in per {
            write!(out, ",{p}").unwrap();
        }
        out.push('\n');
    }
    out
}
