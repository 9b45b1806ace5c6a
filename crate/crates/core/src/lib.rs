//! Task-scoped user-flow analytics over in-vehicle touchscreen interaction,
//! glance and driving logs.
//!
//! The pipeline runs in stages, one module each:
//!
//! - [`ingest`] parses newline-delimited JSON logs into an immutable
//!   [`Corpus`](ingest::Corpus) snapshot and computes dashboard KPIs.
//! - [`extraction`] finds every execution of a task (start element to end
//!   element) inside each trip.
//! - [`flows`] groups executions by element path into flows, computes flow
//!   statistics, filters them, and builds the step-aligned Sankey graph and
//!   per-flow box plots.
//! - [`glance`] computes per-sequence visual-demand and driving metrics and
//!   the single-sequence timeline.
//! - [`analysis`] ties the stages into request/response operations.
//! - [`synth`] generates seeded corpora with planted flows.
//!
//! ```
//! use ivisflow::extraction::{match_sequences_in_trip, ExtractionOptions};
//! use ivisflow::model::{path_of, Gesture, InteractionEvent, TaskDefinition};
//!
//! let tap = |t, el: &str| InteractionEvent {
//!     trip_id: "T1".into(),
//!     t,
//!     element_id: el.into(),
//!     gesture: Gesture::Tap,
//!     screen_id: "S_NAV".into(),
//! };
//! let trip = [tap(0, "NAV_HOME"), tap(700, "SEARCH"), tap(1900, "LETS_GO")];
//! let task = TaskDefinition::new("NAV_HOME", "LETS_GO")?;
//! let found = match_sequences_in_trip(&trip, &task, &ExtractionOptions::default(), 1);
//! assert_eq!(path_of(&found[0]), ["NAV_HOME", "SEARCH", "LETS_GO"]);
//! # Ok::<(), ivisflow::error::ModelError>(())
//! ```

pub mod analysis;
pub mod error;
pub mod extraction;
pub mod flows;
pub mod glance;
pub mod ingest;
pub mod model;
pub mod synth;
