//! Task-scoped sequence extraction.
//!
//! A trip's interactions are scanned left to right. A candidate opens on the
//! task's start element and closes on the first following end element. With
//! `restart_on_start` a repeated start element reopens the candidate there;
//! with `max_gap` a pause longer than the gap drops the open candidate.
//! Candidates still open when the trip ends are dropped. Emitted sequences
//! are disjoint, contiguous index ranges of the trip.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ExtractionError;
use crate::ingest::Corpus;
use crate::model::{FilterSpec, InteractionEvent, Millis, Sequence, SequenceId, TaskDefinition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionOptions {
    /// Longest allowed pause between consecutive interactions of a candidate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_gap: Option<Millis>,
    pub restart_on_start: bool,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        ExtractionOptions {
            max_gap: None,
            restart_on_start: true,
        }
    }
}

impl ExtractionOptions {
    pub fn validate(&self) -> Result<(), String> {
        match self.max_gap {
            Some(g) if g <= 0 => Err(format!("max_gap must be positive, got {g}")),
            _ => Ok(()),
        }
    }
}

/// Output of [`extract_sequences`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSet {
    pub task: TaskDefinition,
    pub sequences: Vec<Sequence>,
    pub trips_scanned: usize,
    pub trips_matched: usize,
}

/// Emulator recording file: `{"recording": [element_id, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recording {
    pub recording: Vec<String>,
}

impl Recording {
    pub fn load(path: &Path) -> Result<Self, ExtractionError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ExtractionError::InvalidRecording(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ExtractionError::InvalidRecording(format!("{}: {e}", path.display())))
    }
}

/// Resolves a recorded click path to the task it spans (first and last click).
pub fn task_from_recording(recording: &[String]) -> Result<TaskDefinition, ExtractionError> {
    let (Some(first), Some(last)) = (recording.first(), recording.last()) else {
        return Err(ExtractionError::InvalidRecording("recording is empty".into()));
    };
    if recording.len() < 2 {
        return Err(ExtractionError::InvalidRecording(
            "recording needs at least two clicks".into(),
        ));
    }
    if first == last {
        return Err(ExtractionError::InvalidRecording(format!(
            "recording starts and ends on {first:?}"
        )));
    }
    TaskDefinition::new(first.clone(), last.clone())
        .map_err(|e| ExtractionError::InvalidRecording(e.to_string()))
}

/// Inclusive `(first, last)` index ranges of every task execution in a trip.
pub fn match_ranges(
    interactions: &[InteractionEvent],
    task: &TaskDefinition,
    options: &ExtractionOptions,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    for (k, event) in interactions.iter().enumerate() {
        if let (Some(_), Some(gap)) = (open, options.max_gap) {
            if event.t - interactions[k - 1].t > gap {
                open = None;
            }
        }
        let el = event.element_id.as_str();
        match open {
            None => {
                if el == task.start_element {
                    open = Some(k);
                }
            }
            Some(first) => {
                if el == task.end_element {
                    out.push((first, k));
                    open = None;
                } else if options.restart_on_start && el == task.start_element {
                    open = Some(k);
                }
            }
        }
    }
    out
}

/// Builds the [`Sequence`] covering `interactions[first..=last]`.
pub fn sequence_from_range(
    interactions: &[InteractionEvent],
    first: usize,
    last: usize,
    snapshot_id: u64,
) -> Sequence {
    let slice = &interactions[first..=last];
    let trip_id = slice[0].trip_id.clone();
    Sequence {
        sequence_id: SequenceId {
            snapshot_id,
            trip_id: trip_id.clone(),
            first_index: first,
            last_index: last,
        },
        trip_id,
        t_first: slice[0].t,
        t_last: slice[slice.len() - 1].t,
        interactions: slice.to_vec(),
    }
}

/// Every task execution in one trip's time-sorted interactions.
pub fn match_sequences_in_trip(
    interactions: &[InteractionEvent],
    task: &TaskDefinition,
    options: &ExtractionOptions,
    snapshot_id: u64,
) -> Vec<Sequence> {
    match_ranges(interactions, task, options)
        .into_iter()
        .map(|(first, last)| sequence_from_range(interactions, first, last, snapshot_id))
        .collect()
}

/// Applies the trip-level filters, then extracts sequences from every
/// surviving trip. Flow-level filters (`min_support`, `top_n`) are left to
/// the flow stage.
pub fn extract_sequences(
    corpus: &Corpus,
    task: &TaskDefinition,
    filters: &FilterSpec,
    options: &ExtractionOptions,
) -> SequenceSet {
    let trips: Vec<&str> = corpus
        .trips
        .values()
        .filter(|m| filters.admits(m))
        .map(|m| m.trip_id.as_str())
        .collect();
    let per_trip: Vec<Vec<Sequence>> = trips
        .par_iter()
        .map(|trip| {
            corpus
                .streams
                .get(*trip)
                .map(|s| match_sequences_in_trip(&s.interactions, task, options, corpus.snapshot_id))
                .unwrap_or_default()
        })
        .collect();
    SequenceSet {
        task: task.clone(),
        trips_scanned: trips.len(),
        trips_matched: per_trip.iter().filter(|s| !s.is_empty()).count(),
        sequences: per_trip.into_iter().flatten().collect(),
    }
}
