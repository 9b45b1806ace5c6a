//! Event-log parsing and corpus snapshots.
//!
//! Logs are newline-delimited JSON with a `"type"` discriminator; one file may
//! mix record kinds. A corpus is assembled from any number of files, grouped
//! by trip and time-sorted. Trips that break a record invariant are dropped
//! whole and listed in the [`LoadReport`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LoadError, ParseError};
use crate::model::{
    validate_trip, Aoi, ConceptEntry, DrivingSample, Gesture, GlanceEvent, InteractionEvent,
    TripMeta, TripStreams, Violation,
};

/// One typed log record.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Trip(TripMeta),
    Interaction(InteractionEvent),
    Glance(GlanceEvent),
    Driving(DrivingSample),
}

impl Record {
    pub fn trip_id(&self) -> &str {
        match self {
            Record::Trip(r) => &r.trip_id,
            Record::Interaction(r) => &r.trip_id,
            Record::Glance(r) => &r.trip_id,
            Record::Driving(r) => &r.trip_id,
        }
    }
}

// Every field optional so that missing fields surface as schema errors
// naming the field instead of a generic serde message.
#[derive(Deserialize)]
struct RawRecord {
    #[serde(rename = "type")]
    kind: Option<String>,
    trip_id: Option<String>,
    t: Option<i64>,
    element_id: Option<String>,
    gesture: Option<String>,
    screen_id: Option<String>,
    t_start: Option<i64>,
    duration: Option<i64>,
    aoi: Option<String>,
    speed: Option<f64>,
    steering_angle: Option<f64>,
    vehicle_id: Option<String>,
    car_model: Option<String>,
    software_version: Option<String>,
    screen_size: Option<String>,
    date: Option<String>,
}

fn take<T>(value: Option<T>, field: &'static str, line: usize) -> Result<T, ParseError> {
    value.ok_or_else(|| ParseError::Schema {
        line,
        field,
        message: "missing field".into(),
    })
}

fn schema(line: usize, field: &'static str, message: &str) -> ParseError {
    ParseError::Schema {
        line,
        field,
        message: message.into(),
    }
}

impl RawRecord {
    fn into_record(self, line: usize) -> Result<Record, ParseError> {
        let kind = take(self.kind, "type", line)?;
        let trip_id = take(self.trip_id, "trip_id", line)?;
        if trip_id.is_empty() {
            return Err(schema(line, "trip_id", "trip_id nonempty"));
        }
        match kind.as_str() {
            "trip" => {
                let date = take(self.date, "date", line)?;
                let date = NaiveDate::parse_from_str(&date, "%Y-%m-%d")
                    .map_err(|_| schema(line, "date", "expected YYYY-MM-DD"))?;
                Ok(Record::Trip(TripMeta {
                    trip_id,
                    vehicle_id: take(self.vehicle_id, "vehicle_id", line)?,
                    car_model: take(self.car_model, "car_model", line)?,
                    software_version: take(self.software_version, "software_version", line)?,
                    screen_size: take(self.screen_size, "screen_size", line)?,
                    date,
                }))
            }
            "interaction" => {
                let t = take(self.t, "t", line)?;
                let element_id = take(self.element_id, "element_id", line)?;
                let gesture = take(self.gesture, "gesture", line)?;
                let screen_id = take(self.screen_id, "screen_id", line)?;
                if t < 0 {
                    return Err(schema(line, "t", "t ≥ 0"));
                }
                if element_id.is_empty() {
                    return Err(schema(line, "element_id", "element_id nonempty"));
                }
                let gesture = gesture
                    .parse::<Gesture>()
                    .map_err(|_| ParseError::UnsupportedGesture { line, value: gesture })?;
                Ok(Record::Interaction(InteractionEvent {
                    trip_id,
                    t,
                    element_id,
                    gesture,
                    screen_id,
                }))
            }
            "glance" => {
                let t_start = take(self.t_start, "t_start", line)?;
                let duration = take(self.duration, "duration", line)?;
                let aoi = take(self.aoi, "aoi", line)?;
                if t_start < 0 {
                    return Err(schema(line, "t_start", "t_start ≥ 0"));
                }
                if duration <= 0 {
                    return Err(schema(line, "duration", "duration > 0"));
                }
                let aoi = aoi
                    .parse::<Aoi>()
                    .map_err(|_| schema(line, "aoi", "expected road, center_stack or other"))?;
                Ok(Record::Glance(GlanceEvent {
                    trip_id,
                    t_start,
                    duration,
                    aoi,
                }))
            }
            "driving" => {
                let t = take(self.t, "t", line)?;
                let speed = take(self.speed, "speed", line)?;
                let steering_angle = take(self.steering_angle, "steering_angle", line)?;
                if t < 0 {
                    return Err(schema(line, "t", "t ≥ 0"));
                }
                if !(speed >= 0.0) {
                    return Err(schema(line, "speed", "speed ≥ 0"));
                }
                Ok(Record::Driving(DrivingSample {
                    trip_id,
                    t,
                    speed,
                    steering_angle,
                }))
            }
            _ => Err(ParseError::UnsupportedRecord { line, tag: kind }),
        }
    }
}

/// Parses one log line. `line` is the 1-based line number used in errors.
pub fn parse_event_line(text: &str, line: usize) -> Result<Record, ParseError> {
    parse_with_trip(text, line).map_err(|(e, _)| e)
}

/// Like [`parse_event_line`], but on failure also returns the trip the line
/// belonged to when that much could be read.
fn parse_with_trip(text: &str, line: usize) -> Result<Record, (ParseError, Option<String>)> {
    let raw: RawRecord = serde_json::from_str(text).map_err(|e| {
        (
            ParseError::Syntax {
                line,
                message: e.to_string(),
            },
            None,
        )
    })?;
    let trip = raw.trip_id.clone().filter(|t| !t.is_empty());
    raw.into_record(line).map_err(|e| (e, trip))
}

/// Hands out snapshot ids; each id is strictly greater than the previous one.
#[derive(Debug)]
pub struct SnapshotCounter(AtomicU64);

impl SnapshotCounter {
    pub const fn new() -> Self {
        SnapshotCounter(AtomicU64::new(0))
    }

    pub fn next(&self) -> u64 {
        self.0.fetch_add(1, Ordering::SeqCst) + 1
    }
}

impl Default for SnapshotCounter {
    fn default() -> Self {
        Self::new()
    }
}

static GLOBAL_SNAPSHOTS: SnapshotCounter = SnapshotCounter::new();

/// An immutable, validated corpus snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corpus {
    pub snapshot_id: u64,
    pub trips: BTreeMap<String, TripMeta>,
    /// One entry per trip in `trips`, each stream sorted by timestamp.
    pub streams: BTreeMap<String, TripStreams>,
    pub concept: BTreeMap<String, ConceptEntry>,
    /// Every element id seen in an interaction.
    pub observed_elements: BTreeSet<String>,
}

impl Corpus {
    pub fn empty(snapshot_id: u64) -> Self {
        Corpus {
            snapshot_id,
            trips: BTreeMap::new(),
            streams: BTreeMap::new(),
            concept: BTreeMap::new(),
            observed_elements: BTreeSet::new(),
        }
    }

    /// Whether an element id is known to the concept database or the logs.
    pub fn knows_element(&self, element_id: &str) -> bool {
        self.concept.contains_key(element_id) || self.observed_elements.contains(element_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineIssue {
    pub file: PathBuf,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExcludedTrip {
    pub trip_id: String,
    pub violations: Vec<Violation>,
}

/// What happened while loading, besides the corpus itself.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub files: usize,
    pub records: usize,
    pub bad_lines: Vec<LineIssue>,
    pub excluded: Vec<ExcludedTrip>,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub corpus: Corpus,
    pub report: LoadReport,
}

/// Log files (`*.jsonl`, `*.ndjson`) directly inside `dir`, sorted by path.
pub fn list_log_files(dir: &Path) -> Result<Vec<PathBuf>, LoadError> {
    let io = |source| LoadError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let is_log = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e == "jsonl" || e == "ndjson");
        if is_log && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Reads a concept database (JSON array of entries). Duplicate ids are an error.
pub fn load_concept_db(path: &Path) -> Result<BTreeMap<String, ConceptEntry>, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let entries: Vec<ConceptEntry> =
        serde_json::from_str(&text).map_err(|e| LoadError::Concept {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let id = entry.element_id.clone();
        if out.insert(id.clone(), entry).is_some() {
            return Err(LoadError::Concept {
                path: path.to_path_buf(),
                message: format!("duplicate element_id {id:?}"),
            });
        }
    }
    Ok(out)
}

/// Loads a corpus using the process-wide snapshot counter.
pub fn load_corpus(paths: &[PathBuf], concept_path: Option<&Path>) -> Result<Loaded, LoadError> {
    load_corpus_with(paths, concept_path, &GLOBAL_SNAPSHOTS)
}

#[derive(Default)]
struct TripBuilder {
    metas: Vec<TripMeta>,
    streams: TripStreams,
    violations: Vec<Violation>,
}

pub fn load_corpus_with(
    paths: &[PathBuf],
    concept_path: Option<&Path>,
    counter: &SnapshotCounter,
) -> Result<Loaded, LoadError> {
    let mut paths = paths.to_vec();
    paths.sort();
    paths.dedup();

    let concept = match concept_path {
        Some(p) => load_concept_db(p)?,
        None => BTreeMap::new(),
    };

    type Parsed = Result<Record, (ParseError, Option<String>)>;
    let parsed: Vec<Vec<Parsed>> = paths
        .par_iter()
        .map(|path| {
            let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(k, l)| parse_with_trip(l, k + 1))
                .collect())
        })
        .collect::<Result<_, LoadError>>()?;

    let mut report = LoadReport {
        files: paths.len(),
        ..Default::default()
    };
    let mut builders: HashMap<String, TripBuilder> = HashMap::new();
    // Files are visited in sorted order and lines in file order, so the stable
    // sorts below keep ties deterministic.
    for (path, records) in paths.iter().zip(parsed) {
        for rec in records {
            match rec {
                Ok(record) => {
                    report.records += 1;
                    let b = builders.entry(record.trip_id().to_string()).or_default();
                    match record {
                        Record::Trip(m) => b.metas.push(m),
                        Record::Interaction(e) => b.streams.interactions.push(e),
                        Record::Glance(g) => b.streams.glances.push(g),
                        Record::Driving(d) => b.streams.driving.push(d),
                    }
                }
                Err((err, trip)) => {
                    report.bad_lines.push(LineIssue {
                        file: path.clone(),
                        line: err.line(),
                        message: err.to_string(),
                    });
                    if let Some(trip) = trip {
                        builders.entry(trip).or_default().violations.push(Violation {
                            record: format!("{}:{}", path.display(), err.line()),
                            rule: err.to_string(),
                        });
                    }
                }
            }
        }
    }

    let mut trips = BTreeMap::new();
    let mut streams = BTreeMap::new();
    let mut observed_elements = BTreeSet::new();
    let mut builders: Vec<(String, TripBuilder)> = builders.into_iter().collect();
    builders.sort_by(|a, b| a.0.cmp(&b.0));
    for (trip_id, mut b) in builders {
        match b.metas.len() {
            0 => b.violations.push(Violation {
                record: format!("trip {trip_id}"),
                rule: "missing trip record".into(),
            }),
            1 => {}
            n => b.violations.push(Violation {
                record: format!("trip {trip_id}"),
                rule: format!("trip_id unique ({n} trip records)"),
            }),
        }
        b.streams.interactions.sort_by_key(|e| e.t);
        b.streams.glances.sort_by_key(|g| g.t_start);
        b.streams.driving.sort_by_key(|d| d.t);
        b.violations.extend(validate_trip(&trip_id, &b.streams));
        if !b.violations.is_empty() {
            report.excluded.push(ExcludedTrip {
                trip_id,
                violations: b.violations,
            });
            continue;
        }
        observed_elements.extend(b.streams.interactions.iter().map(|e| e.element_id.clone()));
        trips.insert(trip_id.clone(), b.metas.pop().expect("one trip record"));
        streams.insert(trip_id, b.streams);
    }

    Ok(Loaded {
        corpus: Corpus {
            snapshot_id: counter.next(),
            trips,
            streams,
            concept,
            observed_elements,
        },
        report,
    })
}

/// Loads every log file in `dir`.
pub fn load_dir(
    dir: &Path,
    concept_path: Option<&Path>,
    counter: &SnapshotCounter,
) -> Result<Loaded, LoadError> {
    let files = list_log_files(dir)?;
    load_corpus_with(&files, concept_path, counter)
}

/// Headline numbers describing the data behind an analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DashboardKpis {
    pub trip_count: usize,
    pub interaction_count: usize,
    pub vehicle_count: usize,
    pub glance_hours: f64,
    pub date_min: Option<NaiveDate>,
    pub date_max: Option<NaiveDate>,
}

pub fn corpus_kpis(corpus: &Corpus) -> DashboardKpis {
    let vehicles: BTreeSet<&str> = corpus.trips.values().map(|t| t.vehicle_id.as_str()).collect();
    let glance_ms: i64 = corpus
        .streams
        .values()
        .flat_map(|s| s.glances.iter())
        .map(|g| g.duration)
        .sum();
    DashboardKpis {
        trip_count: corpus.trips.len(),
        interaction_count: corpus.streams.values().map(|s| s.interactions.len()).sum(),
        vehicle_count: vehicles.len(),
        glance_hours: glance_ms as f64 / 3.6e6,
        date_min: corpus.trips.values().map(|t| t.date).min(),
        date_max: corpus.trips.values().map(|t| t.date).max(),
    }
}
