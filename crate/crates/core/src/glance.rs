//! Visual-demand and driving-context metrics for extracted sequences, and the
//! single-sequence timeline.
//!
//! Glances are half-open intervals `[t_start, t_start + duration)`. All
//! metrics are computed on glances clipped to the sequence window, so a
//! glance that began before the first interaction only counts for the part
//! that overlaps the task.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{
    Aoi, DrivingSample, Gesture, GlanceEvent, MetricKind, Millis, Sequence, SequenceId,
    TripStreams,
};

/// Off-road glances strictly longer than this count as long glances.
pub const LONG_GLANCE_THRESHOLD_MS: Millis = 2000;

/// Context shown around a sequence in the timeline unless asked otherwise.
pub const DEFAULT_TIMELINE_MARGIN_MS: Millis = 5000;

/// A glance restricted to a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClippedGlance {
    pub aoi: Aoi,
    pub start: Millis,
    pub duration: Millis,
    pub original_duration: Millis,
}

/// Keeps glances with positive overlap with `[lo, hi]`, clipped to it.
///
/// Expects glances sorted by start and non-overlapping, as a loaded corpus
/// guarantees.
pub fn clip_glances_to_window(glances: &[GlanceEvent], window: (Millis, Millis)) -> Vec<ClippedGlance> {
    let (lo, hi) = window;
    // non-overlapping + sorted by start => ends are sorted too
    let first = glances.partition_point(|g| g.t_end() <= lo);
    glances[first..]
        .iter()
        .take_while(|g| g.t_start < hi)
        .filter_map(|g| {
            let start = g.t_start.max(lo);
            let end = g.t_end().min(hi);
            (end > start).then_some(ClippedGlance {
                aoi: g.aoi,
                start,
                duration: end - start,
                original_duration: g.duration,
            })
        })
        .collect()
}

/// Off-road glance figures for one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlanceMetrics {
    pub glance_count_offroad: usize,
    pub total_glance_duration_offroad: Millis,
    pub mean_glance_duration_offroad: Option<f64>,
    pub long_glance_count: usize,
}

pub fn glance_metrics_in_window(
    glances: &[GlanceEvent],
    window: (Millis, Millis),
    long_threshold: Millis,
) -> GlanceMetrics {
    let offroad: Vec<ClippedGlance> = clip_glances_to_window(glances, window)
        .into_iter()
        .filter(|g| g.aoi.is_offroad())
        .collect();
    let total: Millis = offroad.iter().map(|g| g.duration).sum();
    GlanceMetrics {
        glance_count_offroad: offroad.len(),
        total_glance_duration_offroad: total,
        mean_glance_duration_offroad: (!offroad.is_empty())
            .then(|| total as f64 / offroad.len() as f64),
        long_glance_count: offroad.iter().filter(|g| g.duration > long_threshold).count(),
    }
}

pub fn sequence_glance_metrics(sequence: &Sequence, glances: &[GlanceEvent]) -> GlanceMetrics {
    glance_metrics_in_window(
        glances,
        (sequence.t_first, sequence.t_last),
        LONG_GLANCE_THRESHOLD_MS,
    )
}

/// Plain mean speed over samples inside the sequence window.
pub fn sequence_driving_context(sequence: &Sequence, samples: &[DrivingSample]) -> Option<f64> {
    let from = samples.partition_point(|s| s.t < sequence.t_first);
    let inside: Vec<f64> = samples[from..]
        .iter()
        .take_while(|s| s.t <= sequence.t_last)
        .map(|s| s.speed)
        .collect();
    (!inside.is_empty()).then(|| inside.iter().sum::<f64>() / inside.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMetrics {
    pub sequence_id: SequenceId,
    pub time_on_task: Millis,
    pub n_interactions: usize,
    pub glance_count_offroad: usize,
    pub total_glance_duration_offroad: Millis,
    pub mean_glance_duration_offroad: Option<f64>,
    pub long_glance_count: usize,
    pub mean_speed: Option<f64>,
}

impl SequenceMetrics {
    pub fn value(&self, metric: MetricKind) -> Option<f64> {
        match metric {
            MetricKind::TimeOnTask => Some(self.time_on_task as f64),
            MetricKind::NInteractions => Some(self.n_interactions as f64),
            MetricKind::GlanceCountOffroad => Some(self.glance_count_offroad as f64),
            MetricKind::TotalGlanceDurationOffroad => {
                Some(self.total_glance_duration_offroad as f64)
            }
            MetricKind::MeanGlanceDurationOffroad => self.mean_glance_duration_offroad,
            MetricKind::LongGlanceCount => Some(self.long_glance_count as f64),
            MetricKind::MeanSpeed => self.mean_speed,
        }
    }
}

pub fn compute_sequence_metrics(sequence: &Sequence, streams: &TripStreams) -> SequenceMetrics {
    let g = sequence_glance_metrics(sequence, &streams.glances);
    SequenceMetrics {
        sequence_id: sequence.sequence_id.clone(),
        time_on_task: sequence.duration(),
        n_interactions: sequence.interactions.len(),
        glance_count_offroad: g.glance_count_offroad,
        total_glance_duration_offroad: g.total_glance_duration_offroad,
        mean_glance_duration_offroad: g.mean_glance_duration_offroad,
        long_glance_count: g.long_glance_count,
        mean_speed: sequence_driving_context(sequence, &streams.driving),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineGlance {
    pub start: Millis,
    pub duration: Millis,
    pub original_duration: Millis,
    /// Off-road glance whose overlap with the sequence itself exceeds the
    /// long-glance threshold; these are what `long_glance_count` counts.
    pub long_glance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingPoint {
    pub t: Millis,
    pub speed: f64,
    pub steering_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionMarker {
    pub t: Millis,
    pub element_id: String,
    pub gesture: Gesture,
}

/// Glance lanes, driving series and interaction markers on one time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTimeline {
    pub sequence_id: SequenceId,
    pub window: (Millis, Millis),
    pub glance_lanes: BTreeMap<Aoi, Vec<TimelineGlance>>,
    pub driving_series: Vec<DrivingPoint>,
    pub interaction_markers: Vec<InteractionMarker>,
}

pub fn build_timeline(sequence: &Sequence, streams: &TripStreams, margin: Millis) -> SequenceTimeline {
    let margin = margin.max(0);
    let floor = streams.earliest().unwrap_or(sequence.t_first).min(sequence.t_first);
    let window = ((sequence.t_first - margin).max(floor), sequence.t_last + margin);
    let span = (sequence.t_first, sequence.t_last);

    let mut glance_lanes: BTreeMap<Aoi, Vec<TimelineGlance>> =
        Aoi::ALL.into_iter().map(|a| (a, Vec::new())).collect();
    let first = streams.glances.partition_point(|g| g.t_end() <= window.0);
    for g in streams.glances[first..].iter().take_while(|g| g.t_start < window.1) {
        let Some(c) = clip_glances_to_window(std::slice::from_ref(g), window).pop() else {
            continue;
        };
        let in_task = clip_glances_to_window(std::slice::from_ref(g), span)
            .pop()
            .map_or(0, |s| s.duration);
        glance_lanes.entry(c.aoi).or_default().push(TimelineGlance {
            start: c.start,
            duration: c.duration,
            original_duration: c.original_duration,
            long_glance: c.aoi.is_offroad() && in_task > LONG_GLANCE_THRESHOLD_MS,
        });
    }

    SequenceTimeline {
        sequence_id: sequence.sequence_id.clone(),
        window,
        glance_lanes,
        driving_series: streams
            .driving
            .iter()
            .filter(|s| window.0 <= s.t && s.t <= window.1)
            .map(|s| DrivingPoint {
                t: s.t,
                speed: s.speed,
                steering_angle: s.steering_angle,
            })
            .collect(),
        interaction_markers: sequence
            .interactions
            .iter()
            .map(|e| InteractionMarker {
                t: e.t,
                element_id: e.element_id.clone(),
                gesture: e.gesture,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::sequence_from_range;
    use crate::model::InteractionEvent;

    fn g(t_start: Millis, t_end: Millis, aoi: Aoi) -> GlanceEvent {
        GlanceEvent {
            trip_id: "T1".into(),
            t_start,
            duration: t_end - t_start,
            aoi,
        }
    }

    fn d(t: Millis, speed: f64) -> DrivingSample {
        DrivingSample {
            trip_id: "T1".into(),
            t,
            speed,
            steering_angle: 0.0,
        }
    }

    fn seq(times: &[Millis]) -> Sequence {
        let els = ["A", "B", "C", "D", "E"];
        let ev: Vec<_> = times
            .iter()
            .enumerate()
            .map(|(k, &t)| InteractionEvent {
                trip_id: "T1".into(),
                t,
                element_id: els[k].into(),
                gesture: Gesture::Tap,
                screen_id: "S".into(),
            })
            .collect();
        sequence_from_range(&ev, 0, ev.len() - 1, 1)
    }

    #[test]
    fn clipping() {
        let inside = clip_glances_to_window(&[g(1500, 4200, Aoi::CenterStack)], (1000, 5000));
        assert_eq!((inside[0].start, inside[0].duration), (1500, 2700));
        let left = clip_glances_to_window(&[g(0, 1500, Aoi::Road)], (1000, 5000));
        assert_eq!((left[0].start, left[0].duration, left[0].original_duration), (1000, 500, 1500));
        assert!(clip_glances_to_window(&[g(6000, 7000, Aoi::Road)], (1000, 5000)).is_empty());
        // touching the window edge is not overlap
        assert!(clip_glances_to_window(&[g(0, 1000, Aoi::Road)], (1000, 5000)).is_empty());
    }

    fn clip_fixture() -> Vec<GlanceEvent> {
        vec![
            g(0, 1500, Aoi::Road),
            g(1500, 4200, Aoi::CenterStack),
            g(4200, 6000, Aoi::Road),
        ]
    }

    #[test]
    fn glance_metrics_worked_example() {
        let m = sequence_glance_metrics(&seq(&[1000, 3000, 5000]), &clip_fixture());
        assert_eq!(m.glance_count_offroad, 1);
        assert_eq!(m.total_glance_duration_offroad, 2700);
        assert_eq!(m.mean_glance_duration_offroad, Some(2700.0));
        assert_eq!(m.long_glance_count, 1);
    }

    #[test]
    fn exactly_two_seconds_is_not_long() {
        let m = sequence_glance_metrics(&seq(&[0, 5000]), &[g(1000, 3000, Aoi::Other)]);
        assert_eq!(m.total_glance_duration_offroad, 2000);
        assert_eq!(m.long_glance_count, 0);
        let m = sequence_glance_metrics(&seq(&[0, 5000]), &[g(1000, 3001, Aoi::Other)]);
        assert_eq!(m.long_glance_count, 1);
    }

    #[test]
    fn long_classification_uses_clipped_duration() {
        // 3 s glance, only 1.5 s of it inside the task
        let m = sequence_glance_metrics(&seq(&[1500, 6000]), &[g(0, 3000, Aoi::CenterStack)]);
        assert_eq!(m.total_glance_duration_offroad, 1500);
        assert_eq!(m.long_glance_count, 0);
    }

    #[test]
    fn no_offroad_glances() {
        let m = sequence_glance_metrics(&seq(&[0, 1000]), &[g(0, 2000, Aoi::Road)]);
        assert_eq!(m.glance_count_offroad, 0);
        assert_eq!(m.total_glance_duration_offroad, 0);
        assert_eq!(m.mean_glance_duration_offroad, None);
    }

    #[test]
    fn driving_context_mean() {
        let s = seq(&[1000, 3000]);
        let samples = [d(0, 99.0), d(1000, 10.0), d(2000, 12.0), d(3000, 14.0), d(4000, 99.0)];
        assert_eq!(sequence_driving_context(&s, &samples), Some(12.0));
        assert_eq!(sequence_driving_context(&s, &[d(5000, 1.0)]), None);
        assert_eq!(sequence_driving_context(&s, &[d(1500, 7.5)]), Some(7.5));
    }

    #[test]
    fn composed_metrics() {
        let s = seq(&[0, 500, 1200]);
        let streams = TripStreams {
            interactions: s.interactions.clone(),
            glances: vec![g(0, 1200, Aoi::Road)],
            driving: vec![],
        };
        let m = compute_sequence_metrics(&s, &streams);
        assert_eq!((m.time_on_task, m.n_interactions, m.glance_count_offroad), (1200, 3, 0));
        assert_eq!(m.mean_speed, None);
        assert_eq!(m.value(MetricKind::MeanSpeed), None);
        assert_eq!(m.value(MetricKind::TimeOnTask), Some(1200.0));

        let s = seq(&[1000, 3000, 5000]);
        let streams = TripStreams {
            interactions: s.interactions.clone(),
            glances: clip_fixture(),
            driving: vec![],
        };
        let m = compute_sequence_metrics(&s, &streams);
        let direct = sequence_glance_metrics(&s, &streams.glances);
        assert_eq!(m.glance_count_offroad, direct.glance_count_offroad);
        assert_eq!(m.total_glance_duration_offroad, direct.total_glance_duration_offroad);
        assert_eq!(m.long_glance_count, direct.long_glance_count);
    }

    #[test]
    fn timeline_margin_zero_is_the_span() {
        let s = seq(&[1000, 3000, 5000]);
        let streams = TripStreams {
            interactions: s.interactions.clone(),
            glances: clip_fixture(),
            driving: vec![d(0, 1.0), d(2000, 2.0), d(6000, 3.0)],
        };
        let tl = build_timeline(&s, &streams, 0);
        assert_eq!(tl.window, (1000, 5000));
        assert_eq!(tl.interaction_markers.len(), 3);
        assert_eq!(tl.driving_series.len(), 1);
        let cs = &tl.glance_lanes[&Aoi::CenterStack];
        assert_eq!(cs.len(), 1);
        assert!(cs[0].long_glance);
        assert_eq!(tl.glance_lanes[&Aoi::Road].len(), 2);
    }

    #[test]
    fn timeline_margin_includes_earlier_glance() {
        let s = seq(&[10_000, 12_000]);
        let streams = TripStreams {
            interactions: s.interactions.clone(),
            glances: vec![g(0, 2000, Aoi::Road), g(6000, 7000, Aoi::Other)],
            driving: vec![],
        };
        let tl = build_timeline(&s, &streams, 5000);
        assert_eq!(tl.window, (5000, 17_000));
        assert_eq!(tl.glance_lanes[&Aoi::Other].len(), 1);
        assert!(tl.glance_lanes[&Aoi::Road].is_empty());
        assert!(!tl.glance_lanes[&Aoi::Other][0].long_glance);
    }

    #[test]
    fn timeline_window_floored_at_trip_start() {
        let s = seq(&[1000, 2000]);
        let streams = TripStreams {
            interactions: s.interactions.clone(),
            glances: vec![g(200, 900, Aoi::Road)],
            driving: vec![],
        };
        assert_eq!(build_timeline(&s, &streams, 5000).window, (200, 7000));
    }
}
