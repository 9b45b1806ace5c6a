//! Domain types shared by every stage of the pipeline.
//!
//! All values are plain data: once constructed they are never mutated, so a
//! loaded corpus and everything derived from it can be shared freely across
//! threads.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ModelError;

/// Integer milliseconds since the epoch (or a duration in milliseconds).
pub type Millis = i64;

/// Touch gesture vocabulary. Closed: anything else is rejected at ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gesture {
    Tap,
    DoubleTap,
    LongPress,
    Drag,
    Swipe,
}

impl Gesture {
    pub const ALL: [Gesture; 5] = [
        Gesture::Tap,
        Gesture::DoubleTap,
        Gesture::LongPress,
        Gesture::Drag,
        Gesture::Swipe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Gesture::Tap => "tap",
            Gesture::DoubleTap => "double_tap",
            Gesture::LongPress => "long_press",
            Gesture::Drag => "drag",
            Gesture::Swipe => "swipe",
        }
    }
}

impl FromStr for Gesture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Gesture::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| ModelError::UnsupportedGesture(s.to_string()))
    }
}

/// Area of interest a glance dwells on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aoi {
    Road,
    CenterStack,
    Other,
}

impl Aoi {
    pub const ALL: [Aoi; 3] = [Aoi::Road, Aoi::CenterStack, Aoi::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Aoi::Road => "road",
            Aoi::CenterStack => "center_stack",
            Aoi::Other => "other",
        }
    }

    /// Anything that is not the road counts as looking away from it.
    pub fn is_offroad(self) -> bool {
        !matches!(self, Aoi::Road)
    }
}

impl FromStr for Aoi {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Aoi::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| ModelError::UnsupportedAoi(s.to_string()))
    }
}

/// One touchscreen interaction on a UI element within a trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub trip_id: String,
    pub t: Millis,
    pub element_id: String,
    pub gesture: Gesture,
    pub screen_id: String,
}

/// One gaze dwell on an area of interest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlanceEvent {
    pub trip_id: String,
    pub t_start: Millis,
    pub duration: Millis,
    pub aoi: Aoi,
}

impl GlanceEvent {
    /// Exclusive end of the glance interval.
    pub fn t_end(&self) -> Millis {
        self.t_start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingSample {
    pub trip_id: String,
    pub t: Millis,
    /// Meters per second.
    pub speed: f64,
    /// Degrees.
    pub steering_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripMeta {
    pub trip_id: String,
    pub vehicle_id: String,
    pub car_model: String,
    pub software_version: String,
    pub screen_size: String,
    pub date: NaiveDate,
}

/// A task is scoped by the UI element that starts it and the one that ends it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskDefinition {
    pub start_element: String,
    pub end_element: String,
}

impl TaskDefinition {
    pub fn new(
        start_element: impl Into<String>,
        end_element: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let task = TaskDefinition {
            start_element: start_element.into(),
            end_element: end_element.into(),
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.start_element.is_empty() || self.end_element.is_empty() {
            return Err(ModelError::InvalidTask(
                "start and end element must be nonempty".into(),
            ));
        }
        if self.start_element == self.end_element {
            return Err(ModelError::InvalidTask(format!(
                "start and end element are both {:?}",
                self.start_element
            )));
        }
        Ok(())
    }
}

/// Stable identifier of one extracted sequence.
///
/// Encodes the snapshot the sequence was extracted from together with the
/// trip and the index range of its interactions inside that trip, so the same
/// analysis on the same snapshot always yields the same identifiers and an
/// identifier can be resolved without any server-side state. Rendered as
/// `<snapshot>:<trip_id>:<first>:<last>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SequenceId {
    pub snapshot_id: u64,
    pub trip_id: String,
    pub first_index: usize,
    pub last_index: usize,
}

impl fmt::Display for SequenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}",
            self.snapshot_id, self.trip_id, self.first_index, self.last_index
        )
    }
}

impl FromStr for SequenceId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::InvalidSequenceId(s.to_string());
        // trip ids may themselves contain ':', so peel from both ends.
        let (snapshot, rest) = s.split_once(':').ok_or_else(bad)?;
        let (rest, last) = rest.rsplit_once(':').ok_or_else(bad)?;
        let (trip_id, first) = rest.rsplit_once(':').ok_or_else(bad)?;
        if trip_id.is_empty() {
            return Err(bad());
        }
        Ok(SequenceId {
            snapshot_id: snapshot.parse().map_err(|_| bad())?,
            trip_id: trip_id.to_string(),
            first_index: first.parse().map_err(|_| bad())?,
            last_index: last.parse().map_err(|_| bad())?,
        })
    }
}

impl Serialize for SequenceId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SequenceId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The ordered interactions of one task execution inside one trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sequence {
    pub sequence_id: SequenceId,
    pub trip_id: String,
    pub interactions: Vec<InteractionEvent>,
    pub t_first: Millis,
    pub t_last: Millis,
}

impl Sequence {
    pub fn duration(&self) -> Millis {
        self.t_last - self.t_first
    }

    /// Checks the structural invariants of a sequence against its task.
    ///
    /// `exclusive_start` asks for the start element to appear only at
    /// position 0, which holds whenever extraction restarts on a repeated
    /// start element. Returns one message per broken rule.
    pub fn invariant_violations(&self, task: &TaskDefinition, exclusive_start: bool) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.interactions.len();
        if n < 2 {
            out.push(format!("sequence has {n} interactions, need at least 2"));
            return out;
        }
        if self.interactions.windows(2).any(|w| w[0].t > w[1].t) {
            out.push("interactions not sorted by t".into());
        }
        if self.interactions.iter().any(|i| i.trip_id != self.trip_id) {
            out.push("interaction from a different trip".into());
        }
        if self.sequence_id.trip_id != self.trip_id {
            out.push("sequence_id names a different trip".into());
        }
        if self.interactions[0].element_id != task.start_element {
            out.push("first interaction is not the task start".into());
        }
        if self.interactions[n - 1].element_id != task.end_element {
            out.push("last interaction is not the task end".into());
        }
        if exclusive_start
            && self.interactions[1..]
                .iter()
                .any(|i| i.element_id == task.start_element)
        {
            out.push("start element repeats after position 0".into());
        }
        if self.interactions[..n - 1]
            .iter()
            .any(|i| i.element_id == task.end_element)
        {
            out.push("end element occurs before the last position".into());
        }
        if self.t_first != self.interactions[0].t || self.t_last != self.interactions[n - 1].t {
            out.push("t_first/t_last disagree with interactions".into());
        }
        let id = &self.sequence_id;
        if id.last_index < id.first_index || id.last_index - id.first_index + 1 != n {
            out.push("sequence_id index range disagrees with interaction count".into());
        }
        out
    }
}

/// Element path of a sequence; the identity key of a flow.
pub fn path_of(sequence: &Sequence) -> Vec<String> {
    sequence
        .interactions
        .iter()
        .map(|i| i.element_id.clone())
        .collect()
}

/// All sequences sharing one ordered element path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub path: Vec<String>,
    pub sequences: Vec<Sequence>,
}

impl Flow {
    pub fn count(&self) -> usize {
        self.sequences.len()
    }
}

/// Trip-level and flow-level filters of an analysis.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub car_models: Option<BTreeSet<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub software_versions: Option<BTreeSet<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screen_sizes: Option<BTreeSet<String>>,
    /// Inclusive `[from, to]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date_range: Option<(NaiveDate, NaiveDate)>,
    /// Minimum share in `[0, 1]` a flow needs to be kept.
    pub min_support: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_n: Option<usize>,
}

impl FilterSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(0.0..=1.0).contains(&self.min_support) {
            return Err(ModelError::InvalidFilter(format!(
                "min_support {} outside [0, 1]",
                self.min_support
            )));
        }
        if let Some((from, to)) = self.date_range {
            if from > to {
                return Err(ModelError::InvalidFilter(format!(
                    "date_range from {from} is after to {to}"
                )));
            }
        }
        if self.top_n == Some(0) {
            return Err(ModelError::InvalidFilter("top_n must be positive".into()));
        }
        Ok(())
    }

    /// Whether a trip survives the trip-level filters.
    pub fn admits(&self, trip: &TripMeta) -> bool {
        fn allowed(set: &Option<BTreeSet<String>>, value: &str) -> bool {
            set.as_ref().is_none_or(|s| s.contains(value))
        }
        allowed(&self.car_models, &trip.car_model)
            && allowed(&self.software_versions, &trip.software_version)
            && allowed(&self.screen_sizes, &trip.screen_size)
            && self
                .date_range
                .is_none_or(|(from, to)| from <= trip.date && trip.date <= to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    TimeOnTask,
    NInteractions,
    GlanceCountOffroad,
    TotalGlanceDurationOffroad,
    MeanGlanceDurationOffroad,
    LongGlanceCount,
    MeanSpeed,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::TimeOnTask,
        MetricKind::NInteractions,
        MetricKind::GlanceCountOffroad,
        MetricKind::TotalGlanceDurationOffroad,
        MetricKind::MeanGlanceDurationOffroad,
        MetricKind::LongGlanceCount,
        MetricKind::MeanSpeed,
    ];
}

/// Human-readable description of a UI element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptEntry {
    pub element_id: String,
    pub label: String,
    pub screen_id: String,
    pub description: String,
}

/// Time-sorted event streams of one trip.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TripStreams {
    pub interactions: Vec<InteractionEvent>,
    pub glances: Vec<GlanceEvent>,
    pub driving: Vec<DrivingSample>,
}

impl TripStreams {
    /// Earliest timestamp of any record in the trip.
    pub fn earliest(&self) -> Option<Millis> {
        let i = self.interactions.iter().map(|e| e.t);
        let g = self.glances.iter().map(|e| e.t_start);
        let d = self.driving.iter().map(|e| e.t);
        i.chain(g).chain(d).min()
    }
}

/// A broken rule on one record of a trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub record: String,
    pub rule: String,
}

impl Violation {
    fn new(record: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            record: record.into(),
            rule: rule.into(),
        }
    }
}

/// Checks every record invariant of one trip's events.
///
/// Returns an empty list iff the trip is well-formed. Glances are checked for
/// overlap after ordering by start time.
pub fn validate_trip(trip_id: &str, streams: &TripStreams) -> Vec<Violation> {
    let mut out = Vec::new();
    for (k, e) in streams.interactions.iter().enumerate() {
        let rec = format!("interaction #{k} (t={})", e.t);
        if e.trip_id != trip_id {
            out.push(Violation::new(&rec, "trip_id mismatch"));
        }
        if e.t < 0 {
            out.push(Violation::new(&rec, "t ≥ 0"));
        }
        if e.element_id.is_empty() {
            out.push(Violation::new(&rec, "element_id nonempty"));
        }
    }
    for (k, g) in streams.glances.iter().enumerate() {
        let rec = format!("glance #{k} (t_start={})", g.t_start);
        if g.trip_id != trip_id {
            out.push(Violation::new(&rec, "trip_id mismatch"));
        }
        if g.t_start < 0 {
            out.push(Violation::new(&rec, "t_start ≥ 0"));
        }
        if g.duration <= 0 {
            out.push(Violation::new(&rec, "duration > 0"));
        }
    }
    let mut order: Vec<&GlanceEvent> = streams.glances.iter().collect();
    order.sort_by_key(|g| g.t_start);
    for w in order.windows(2) {
        if w[1].t_start < w[0].t_end() {
            out.push(Violation::new(
                format!(
                    "glances {}–{} and {}–{}",
                    w[0].t_start,
                    w[0].t_end(),
                    w[1].t_start,
                    w[1].t_end()
                ),
                "glance overlap",
            ));
        }
    }
    for (k, s) in streams.driving.iter().enumerate() {
        let rec = format!("driving #{k} (t={})", s.t);
        if s.trip_id != trip_id {
            out.push(Violation::new(&rec, "trip_id mismatch"));
        }
        if s.t < 0 {
            out.push(Violation::new(&rec, "t ≥ 0"));
        }
        if !(s.speed >= 0.0) {
            out.push(Violation::new(&rec, "speed ≥ 0"));
        }
    }
    out
}
