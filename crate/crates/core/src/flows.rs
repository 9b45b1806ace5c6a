//! Flow aggregation: grouping sequences by element path, per-flow statistics,
//! support/top-N filtering, the step-aligned Sankey graph and per-flow box
//! plots.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::FlowError;
use crate::extraction::SequenceSet;
use crate::model::{path_of, FilterSpec, Flow, Gesture, MetricKind, SequenceId};

/// Partitions sequences by exact element path.
///
/// Flows come out by count, largest first; equal counts are ordered by path.
pub fn group_into_flows(set: &SequenceSet) -> Vec<Flow> {
    let mut by_path: BTreeMap<Vec<String>, Vec<_>> = BTreeMap::new();
    for seq in &set.sequences {
        by_path.entry(path_of(seq)).or_default().push(seq.clone());
    }
    let mut flows: Vec<Flow> = by_path
        .into_iter()
        .map(|(path, sequences)| Flow { path, sequences })
        .collect();
    // stable: BTreeMap already yields lexicographic paths
    flows.sort_by(|a, b| b.count().cmp(&a.count()));
    flows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub path: Vec<String>,
    pub count: usize,
    /// Fraction of all sequences of the analysis, before any flow filter.
    pub share: f64,
    /// Mean of `t_last - t_first`, ms.
    pub avg_duration: f64,
    pub total_interactions_per_seq: usize,
    /// Mean time between step `i` and `i + 1`, ms.
    pub edge_mean_dt: Vec<f64>,
    pub gesture_distribution: BTreeMap<Gesture, f64>,
}

pub fn flow_statistics(flows: &[Flow]) -> Vec<FlowStats> {
    let total: usize = flows.iter().map(Flow::count).sum();
    flows
        .iter()
        .map(|flow| {
            let n = flow.count() as f64;
            let steps = flow.path.len();
            let mut edge_sum = vec![0i64; steps.saturating_sub(1)];
            let mut gestures: BTreeMap<Gesture, usize> = BTreeMap::new();
            let mut duration_sum = 0i64;
            for seq in &flow.sequences {
                duration_sum += seq.duration();
                for (i, w) in seq.interactions.windows(2).enumerate() {
                    edge_sum[i] += w[1].t - w[0].t;
                }
                for ev in &seq.interactions {
                    *gestures.entry(ev.gesture).or_default() += 1;
                }
            }
            let n_gestures: usize = gestures.values().sum();
            FlowStats {
                path: flow.path.clone(),
                count: flow.count(),
                share: flow.count() as f64 / total as f64,
                avg_duration: duration_sum as f64 / n,
                total_interactions_per_seq: steps,
                edge_mean_dt: edge_sum.iter().map(|&s| s as f64 / n).collect(),
                gesture_distribution: gestures
                    .into_iter()
                    .map(|(g, c)| (g, c as f64 / n_gestures as f64))
                    .collect(),
            }
        })
        .collect()
}

/// Drops flows under `min_support`, then keeps the `top_n` largest.
///
/// Shares are left untouched: they stay fractions of the unfiltered total.
pub fn apply_flow_filters(stats: &[FlowStats], filters: &FilterSpec) -> Vec<FlowStats> {
    let mut kept: Vec<FlowStats> = stats
        .iter()
        .filter(|s| s.share >= filters.min_support)
        .cloned()
        .collect();
    if let Some(n) = filters.top_n {
        kept.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.path.cmp(&b.path)));
        kept.truncate(n);
    }
    kept
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeKey {
    pub depth: usize,
    pub element_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SankeyNode {
    pub depth: usize,
    pub element_id: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SankeyEdge {
    pub from: NodeKey,
    pub to: NodeKey,
    pub weight: usize,
    /// Count-weighted mean time between the two steps, ms.
    pub mean_dt: f64,
}

/// Layered flow graph. Nodes are `(step, element)` so revisits get their own
/// column; edges only connect consecutive steps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SankeyGraph {
    pub nodes: Vec<SankeyNode>,
    pub edges: Vec<SankeyEdge>,
}

impl SankeyGraph {
    pub fn node(&self, depth: usize, element_id: &str) -> Option<&SankeyNode> {
        self.nodes
            .iter()
            .find(|n| n.depth == depth && n.element_id == element_id)
    }

    pub fn edge(&self, from: (usize, &str), to: (usize, &str)) -> Option<&SankeyEdge> {
        self.edges.iter().find(|e| {
            e.from.depth == from.0
                && e.from.element_id == from.1
                && e.to.depth == to.0
                && e.to.element_id == to.1
        })
    }
}

pub fn build_sankey(stats: &[FlowStats]) -> SankeyGraph {
    let mut nodes: BTreeMap<NodeKey, usize> = BTreeMap::new();
    // (weight, Σ count·dt)
    let mut edges: BTreeMap<(NodeKey, NodeKey), (usize, f64)> = BTreeMap::new();
    for flow in stats {
        let keys: Vec<NodeKey> = flow
            .path
            .iter()
            .enumerate()
            .map(|(depth, el)| NodeKey {
                depth,
                element_id: el.clone(),
            })
            .collect();
        for key in &keys {
            *nodes.entry(key.clone()).or_default() += flow.count;
        }
        for (i, pair) in keys.windows(2).enumerate() {
            let e = edges.entry((pair[0].clone(), pair[1].clone())).or_default();
            e.0 += flow.count;
            e.1 += flow.count as f64 * flow.edge_mean_dt.get(i).copied().unwrap_or(0.0);
        }
    }
    SankeyGraph {
        nodes: nodes
            .into_iter()
            .map(|(k, count)| SankeyNode {
                depth: k.depth,
                element_id: k.element_id,
                count,
            })
            .collect(),
        edges: edges
            .into_iter()
            .map(|((from, to), (weight, dt_sum))| SankeyEdge {
                from,
                to,
                weight,
                mean_dt: dt_sum / weight as f64,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxPoint {
    pub sequence_id: SequenceId,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxPlotStats {
    pub path: Vec<String>,
    pub metric: MetricKind,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<BoxPoint>,
    /// Every member sequence with its value, in flow order.
    pub points: Vec<BoxPoint>,
}

/// Quantile of sorted data by linear interpolation at position `p·(n−1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number summary, whiskers and outliers of one non-empty sample.
///
/// Whiskers sit on the most extreme points inside `1.5·IQR` of the quartiles
/// (never inside the box); points beyond the fences are outliers.
pub fn summarize(values: &[f64]) -> Summary {
    assert!(!values.is_empty(), "summary of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = sorted.iter().copied().filter(|v| (lo_fence..=hi_fence).contains(v));
    let whisker_low = inside.clone().next().map_or(q1, |v| v.min(q1));
    let whisker_high = inside.last().map_or(q3, |v| v.max(q3));
    Summary {
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[sorted.len() - 1],
        whisker_low,
        whisker_high,
        lo_fence,
        hi_fence,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub lo_fence: f64,
    pub hi_fence: f64,
}

impl Summary {
    pub fn is_outlier(&self, v: f64) -> bool {
        v < self.lo_fence || v > self.hi_fence
    }
}

/// One box plot per flow over per-sequence metric values.
pub fn boxplot_stats(
    flows: &[Flow],
    metric: MetricKind,
    values: &HashMap<SequenceId, f64>,
) -> Result<Vec<BoxPlotStats>, FlowError> {
    flows
        .iter()
        .map(|flow| {
            let points = flow
                .sequences
                .iter()
                .map(|s| {
                    values
                        .get(&s.sequence_id)
                        .map(|&value| BoxPoint {
                            sequence_id: s.sequence_id.clone(),
                            value,
                        })
                        .ok_or_else(|| FlowError::IncompleteMetrics(s.sequence_id.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if points.is_empty() {
                return Err(FlowError::IncompleteMetrics(format!(
                    "flow {} has no sequences",
                    flow.path.join(">")
                )));
            }
            let raw: Vec<f64> = points.iter().map(|p| p.value).collect();
            let s = summarize(&raw);
            Ok(BoxPlotStats {
                path: flow.path.clone(),
                metric,
                n: points.len(),
                min: s.min,
                q1: s.q1,
                median: s.median,
                q3: s.q3,
                max: s.max,
                whisker_low: s.whisker_low,
                whisker_high: s.whisker_high,
                outliers: points.iter().filter(|p| s.is_outlier(p.value)).cloned().collect(),
                points,
            })
        })
        .collect()
}
