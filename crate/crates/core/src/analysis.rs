//! End-to-end analyses over one corpus snapshot: the task overview (flow
//! table + Sankey), flow comparison (reduced Sankey + box plots) and
//! single-sequence drill-down. Everything here is a pure function of the
//! corpus and the request.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AnalysisError, LookupError};
use crate::extraction::{extract_sequences, sequence_from_range, task_from_recording, ExtractionOptions};
use crate::flows::{
    apply_flow_filters, boxplot_stats, build_sankey, flow_statistics, group_into_flows,
    BoxPlotStats, FlowStats, SankeyGraph,
};
use crate::glance::{build_timeline, compute_sequence_metrics, SequenceMetrics, SequenceTimeline};
use crate::ingest::Corpus;
use crate::model::{FilterSpec, Flow, MetricKind, Millis, Sequence, SequenceId, TaskDefinition};

/// Task given either directly or as an emulator recording.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskDefinition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recording: Option<Vec<String>>,
}

impl TaskSource {
    pub fn resolve(&self, corpus: &Corpus) -> Result<TaskDefinition, AnalysisError> {
        let task = match (&self.task, &self.recording) {
            (Some(task), None) => {
                task.validate()
                    .map_err(|e| AnalysisError::InvalidRequest(e.to_string()))?;
                task.clone()
            }
            (None, Some(rec)) => {
                task_from_recording(rec).map_err(|e| AnalysisError::InvalidRequest(e.to_string()))?
            }
            _ => {
                return Err(AnalysisError::InvalidRequest(
                    "exactly one of task or recording is required".into(),
                ))
            }
        };
        for el in [&task.start_element, &task.end_element] {
            if !corpus.knows_element(el) {
                return Err(AnalysisError::UnknownElement(el.clone()));
            }
        }
        Ok(task)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRequest {
    #[serde(flatten)]
    pub source: TaskSource,
    #[serde(default)]
    pub filters: FilterSpec,
    #[serde(default)]
    pub options: ExtractionOptions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub sequences_matched: usize,
    pub trips_scanned: usize,
    pub trips_matched: usize,
    /// Flows before min_support / top_n.
    pub flows_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResponse {
    pub snapshot_id: u64,
    pub task: TaskDefinition,
    pub flow_table: Vec<FlowStats>,
    pub sankey: SankeyGraph,
    pub totals: Totals,
}

/// Intermediate result shared by overview and comparison.
struct FlowRun {
    task: TaskDefinition,
    flows: Vec<Flow>,
    table: Vec<FlowStats>,
    totals: Totals,
}

fn run_flows(
    corpus: &Corpus,
    source: &TaskSource,
    filters: &FilterSpec,
    options: &ExtractionOptions,
) -> Result<FlowRun, AnalysisError> {
    filters
        .validate()
        .map_err(|e| AnalysisError::InvalidRequest(e.to_string()))?;
    options.validate().map_err(AnalysisError::InvalidRequest)?;
    let task = source.resolve(corpus)?;
    let set = extract_sequences(corpus, &task, filters, options);
    let flows = group_into_flows(&set);
    let stats = flow_statistics(&flows);
    let table = apply_flow_filters(&stats, filters);
    Ok(FlowRun {
        totals: Totals {
            sequences_matched: set.sequences.len(),
            trips_scanned: set.trips_scanned,
            trips_matched: set.trips_matched,
            flows_total: flows.len(),
        },
        task,
        flows,
        table,
    })
}

/// Extract → group → statistics → flow filters → Sankey.
pub fn run_analysis(corpus: &Corpus, req: &AnalysisRequest) -> Result<AnalysisResponse, AnalysisError> {
    let run = run_flows(corpus, &req.source, &req.filters, &req.options)?;
    Ok(AnalysisResponse {
        snapshot_id: corpus.snapshot_id,
        sankey: build_sankey(&run.table),
        task: run.task,
        flow_table: run.table,
        totals: run.totals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRequest {
    #[serde(flatten)]
    pub source: TaskSource,
    #[serde(default)]
    pub filters: FilterSpec,
    #[serde(default)]
    pub options: ExtractionOptions,
    /// Selected flow paths, in display order.
    pub flows: Vec<Vec<String>>,
    pub metric: MetricKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResponse {
    pub snapshot_id: u64,
    pub task: TaskDefinition,
    pub metric: MetricKind,
    pub sankey: SankeyGraph,
    pub boxplots: Vec<BoxPlotStats>,
}

/// Reduced Sankey and one box plot per selected flow.
///
/// Selected paths must be in the filtered flow table. Sequences for which the
/// metric is undefined (no off-road glance for a mean glance duration, no
/// driving sample for mean speed) are left out of the box plot; a flow left
/// with no values at all is an error.
pub fn run_compare(corpus: &Corpus, req: &CompareRequest) -> Result<CompareResponse, AnalysisError> {
    if req.flows.is_empty() {
        return Err(AnalysisError::InvalidRequest("no flows selected".into()));
    }
    let run = run_flows(corpus, &req.source, &req.filters, &req.options)?;
    let mut stats = Vec::with_capacity(req.flows.len());
    let mut selected = Vec::with_capacity(req.flows.len());
    for path in &req.flows {
        let unknown = || AnalysisError::UnknownFlow(path.join(">"));
        let s = run.table.iter().find(|s| &s.path == path).ok_or_else(unknown)?;
        let f = run.flows.iter().find(|f| &f.path == path).ok_or_else(unknown)?;
        stats.push(s.clone());
        selected.push(f);
    }

    let members: Vec<&Sequence> = selected.iter().flat_map(|f| f.sequences.iter()).collect();
    let values: HashMap<SequenceId, f64> = members
        .par_iter()
        .filter_map(|seq| {
            let streams = corpus.streams.get(&seq.trip_id)?;
            let v = compute_sequence_metrics(seq, streams).value(req.metric)?;
            Some((seq.sequence_id.clone(), v))
        })
        .collect();
    let measured: Vec<Flow> = selected
        .iter()
        .map(|f| Flow {
            path: f.path.clone(),
            sequences: f
                .sequences
                .iter()
                .filter(|s| values.contains_key(&s.sequence_id))
                .cloned()
                .collect(),
        })
        .collect();
    if let Some(empty) = measured.iter().find(|f| f.sequences.is_empty()) {
        let first = &selected
            .iter()
            .find(|f| f.path == empty.path)
            .expect("same paths")
            .sequences[0];
        return Err(crate::error::FlowError::IncompleteMetrics(first.sequence_id.to_string()).into());
    }

    Ok(CompareResponse {
        snapshot_id: corpus.snapshot_id,
        task: run.task,
        metric: req.metric,
        sankey: build_sankey(&stats),
        boxplots: boxplot_stats(&measured, req.metric, &values)?,
    })
}

/// Reconstructs a sequence from its id on the given snapshot.
///
/// The id must name this snapshot and an index range that has the shape of
/// an extracted sequence: at least two interactions, distinct first and last
/// elements, and the closing element not occurring before the end.
pub fn resolve_sequence(corpus: &Corpus, id: &SequenceId) -> Result<Sequence, LookupError> {
    if id.snapshot_id != corpus.snapshot_id {
        return Err(LookupError::Stale {
            id: id.to_string(),
            snapshot_id: id.snapshot_id,
            current: corpus.snapshot_id,
        });
    }
    let unknown = || LookupError::Unknown(id.to_string());
    let streams = corpus.streams.get(&id.trip_id).ok_or_else(unknown)?;
    let ev = &streams.interactions;
    if id.first_index >= id.last_index || id.last_index >= ev.len() {
        return Err(unknown());
    }
    let end = &ev[id.last_index].element_id;
    if &ev[id.first_index].element_id == end
        || ev[id.first_index..id.last_index].iter().any(|e| &e.element_id == end)
    {
        return Err(unknown());
    }
    Ok(sequence_from_range(ev, id.first_index, id.last_index, corpus.snapshot_id))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDetail {
    pub snapshot_id: u64,
    pub timeline: SequenceTimeline,
    pub metrics: SequenceMetrics,
}

pub fn sequence_detail(corpus: &Corpus, id: &SequenceId, margin: Millis) -> Result<SequenceDetail, LookupError> {
    let seq = resolve_sequence(corpus, id)?;
    let streams = &corpus.streams[&seq.trip_id];
    Ok(SequenceDetail {
        snapshot_id: corpus.snapshot_id,
        timeline: build_timeline(&seq, streams, margin),
        metrics: compute_sequence_metrics(&seq, streams),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Gesture, InteractionEvent, TripMeta, TripStreams};
    use chrono::NaiveDate;

    fn corpus(trips: &[(&str, &[(&str, Millis)])]) -> Corpus {
        let mut c = Corpus::empty(3);
        for (trip, evs) in trips {
            c.trips.insert(
                trip.to_string(),
                TripMeta {
                    trip_id: trip.to_string(),
                    vehicle_id: "V".into(),
                    car_model: "M".into(),
                    software_version: "1".into(),
                    screen_size: "s".into(),
                    date: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
                },
            );
            let interactions: Vec<_> = evs
                .iter()
                .map(|(el, t)| InteractionEvent {
                    trip_id: trip.to_string(),
                    t: *t,
                    element_id: el.to_string(),
                    gesture: Gesture::Tap,
                    screen_id: "S".into(),
                })
                .collect();
            c.observed_elements
                .extend(interactions.iter().map(|e| e.element_id.clone()));
            c.streams.insert(
                trip.to_string(),
                TripStreams {
                    interactions,
                    ..Default::default()
                },
            );
        }
        c
    }

    fn fixture() -> Corpus {
        corpus(&[
            ("T1", &[("A", 0), ("B", 500), ("C", 1200)]),
            ("T2", &[("A", 0), ("B", 300), ("C", 1000)]),
            ("T3", &[("X", 0), ("A", 100), ("C", 900)]),
        ])
    }

    fn task_req() -> AnalysisRequest {
        AnalysisRequest {
            source: TaskSource {
                task: Some(TaskDefinition::new("A", "C").unwrap()),
                recording: None,
            },
            ..Default::default()
        }
    }

    #[test]
    fn overview_is_self_consistent() {
        let r = run_analysis(&fixture(), &task_req()).unwrap();
        assert_eq!(r.snapshot_id, 3);
        assert_eq!(r.totals.sequences_matched, 3);
        assert_eq!(r.flow_table.len(), 2);
        assert_eq!(r.sankey.node(0, "A").unwrap().count, 3);
    }

    #[test]
    fn request_source_rules() {
        let c = fixture();
        let mut req = task_req();
        req.source.recording = Some(vec!["A".into(), "C".into()]);
        assert!(matches!(run_analysis(&c, &req), Err(AnalysisError::InvalidRequest(_))));
        req.source.task = None;
        assert_eq!(run_analysis(&c, &req).unwrap().task, TaskDefinition::new("A", "C").unwrap());
        req.source.recording = Some(vec!["A".into()]);
        assert!(matches!(run_analysis(&c, &req), Err(AnalysisError::InvalidRequest(_))));
        req.source.recording = Some(vec!["A".into(), "NOPE".into()]);
        assert_eq!(
            run_analysis(&c, &req).unwrap_err(),
            AnalysisError::UnknownElement("NOPE".into())
        );
    }

    #[test]
    fn request_json_shape() {
        let req: AnalysisRequest = serde_json::from_str(
            r#"{"recording":["A","B","C"],"filters":{"min_support":0.5}}"#,
        )
        .unwrap();
        assert_eq!(req.source.recording.as_ref().unwrap().len(), 3);
        assert_eq!(req.filters.min_support, 0.5);
        assert!(req.options.restart_on_start);
    }

    #[test]
    fn compare_and_drill_down() {
        let c = fixture();
        let req = CompareRequest {
            source: task_req().source,
            filters: Default::default(),
            options: Default::default(),
            flows: vec![vec!["A".into(), "B".into(), "C".into()]],
            metric: MetricKind::TimeOnTask,
        };
        let r = run_compare(&c, &req).unwrap();
        assert_eq!(r.boxplots.len(), 1);
        let values: Vec<f64> = r.boxplots[0].points.iter().map(|p| p.value).collect();
        assert_eq!(values, [1200.0, 1000.0]);
        assert_eq!(r.sankey.nodes.len(), 3);

        let id = &r.boxplots[0].points[0].sequence_id;
        let d = sequence_detail(&c, id, 0).unwrap();
        assert_eq!(d.timeline.window, (0, 1200));
        assert_eq!(d.metrics.time_on_task, 1200);
    }

    #[test]
    fn compare_rejects_unknown_flow() {
        let req = CompareRequest {
            source: task_req().source,
            filters: Default::default(),
            options: Default::default(),
            flows: vec![vec!["A".into(), "Z".into(), "C".into()]],
            metric: MetricKind::TimeOnTask,
        };
        assert!(matches!(run_compare(&fixture(), &req), Err(AnalysisError::UnknownFlow(_))));
    }

    #[test]
    fn optional_metric_with_no_values_is_incomplete() {
        let req = CompareRequest {
            source: task_req().source,
            filters: Default::default(),
            options: Default::default(),
            flows: vec![vec!["A".into(), "C".into()]],
            metric: MetricKind::MeanSpeed,
        };
        assert!(matches!(run_compare(&fixture(), &req), Err(AnalysisError::Flow(_))));
    }

    #[test]
    fn sequence_lookup_errors() {
        let c = fixture();
        let id = |s: &str| s.parse::<SequenceId>().unwrap();
        assert!(resolve_sequence(&c, &id("3:T1:0:2")).is_ok());
        assert!(matches!(resolve_sequence(&c, &id("2:T1:0:2")), Err(LookupError::Stale { .. })));
        assert!(matches!(resolve_sequence(&c, &id("3:T9:0:2")), Err(LookupError::Unknown(_))));
        assert!(matches!(resolve_sequence(&c, &id("3:T1:0:7")), Err(LookupError::Unknown(_))));
        assert!(matches!(resolve_sequence(&c, &id("3:T1:2:2")), Err(LookupError::Unknown(_))));
    }
}
