//! Seeded synthetic corpora with planted flows.
//!
//! Every planted flow becomes exactly `count` trips, each containing one task
//! execution along the planted path, padded with unrelated interactions
//! before and after. Noise trips never touch the task's start element (or, in
//! near-miss mode, touch it but never reach the end element). Glances tile
//! each trip with alternating on-road/off-road runs and driving samples are
//! emitted once per second, so every sequence has glance and speed data.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SynthError;
use crate::model::{
    Aoi, ConceptEntry, DrivingSample, Gesture, GlanceEvent, InteractionEvent, Millis,
    TaskDefinition, TripMeta,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedFlow {
    pub path: Vec<String>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlanceModel {
    pub road_ms: (Millis, Millis),
    pub center_stack_ms: (Millis, Millis),
    pub other_ms: (Millis, Millis),
    /// Probability that an off-road run lands on `other` instead of the screen.
    pub other_fraction: f64,
}

impl Default for GlanceModel {
    fn default() -> Self {
        GlanceModel {
            road_ms: (800, 4000),
            center_stack_ms: (400, 2600),
            other_ms: (300, 1200),
            other_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrivingModel {
    /// m/s
    pub start_speed: f64,
    /// Speed change per one-second sample, m/s.
    pub delta_per_s: (f64, f64),
    pub steering_range: (f64, f64),
}

impl Default for DrivingModel {
    fn default() -> Self {
        DrivingModel {
            start_speed: 14.0,
            delta_per_s: (-1.0, 1.0),
            steering_range: (-10.0, 10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TripMetaPool {
    pub car_models: Vec<String>,
    pub software_versions: Vec<String>,
    pub screen_sizes: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Trips are assigned to this many vehicles round-robin.
    pub vehicles: usize,
}

impl Default for TripMetaPool {
    fn default() -> Self {
        TripMetaPool {
            car_models: vec!["sedan".into(), "suv".into()],
            software_versions: vec!["2.0".into(), "2.1".into()],
            screen_sizes: vec!["10.25in".into(), "12.3in".into()],
            dates: (1..=7)
                .map(|d| NaiveDate::from_ymd_opt(2023, 5, d).expect("valid date"))
                .collect(),
            vehicles: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub task: TaskDefinition,
    pub planted_flows: Vec<PlantedFlow>,
    pub noise_trips: usize,
    /// Noise trips tap the start element but never finish the task.
    pub near_miss_noise: bool,
    /// Vocabulary for padding and noise; must not contain the task elements.
    pub noise_elements: Vec<String>,
    pub inter_interaction_dt: (Millis, Millis),
    pub glance_model: GlanceModel,
    pub driving_model: DrivingModel,
    pub trip_meta_pool: TripMetaPool,
    pub trips_per_file: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            task: TaskDefinition {
                start_element: "NAV_HOME".into(),
                end_element: "LETS_GO".into(),
            },
            planted_flows: Vec::new(),
            noise_trips: 0,
            near_miss_noise: false,
            noise_elements: [
                "MEDIA_HOME",
                "MEDIA_NEXT",
                "PHONE_HOME",
                "CLIMATE_TEMP_UP",
                "CLIMATE_TEMP_DOWN",
                "SETTINGS_HOME",
                "MAP_ZOOM_IN",
                "MAP_ZOOM_OUT",
            ]
            .map(String::from)
            .to_vec(),
            inter_interaction_dt: (300, 2500),
            glance_model: GlanceModel::default(),
            driving_model: DrivingModel::default(),
            trip_meta_pool: TripMetaPool::default(),
            trips_per_file: 1000,
        }
    }
}

fn check_range<T: PartialOrd + Copy + std::fmt::Debug>(
    name: &str,
    (lo, hi): (T, T),
    min: T,
    strict: bool,
) -> Result<(), SynthError> {
    let ok_lo = if strict { lo > min } else { lo >= min };
    if !ok_lo || lo > hi {
        return Err(SynthError::Config(format!("{name} range {lo:?}..{hi:?} is invalid")));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| SynthError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.task
            .validate()
            .map_err(|e| SynthError::Config(e.to_string()))?;
        let (start, end) = (&self.task.start_element, &self.task.end_element);
        for flow in &self.planted_flows {
            let p = &flow.path;
            let label = p.join(">");
            if p.len() < 2 || &p[0] != start || &p[p.len() - 1] != end {
                return Err(SynthError::Config(format!(
                    "planted path {label} must run from {start} to {end}"
                )));
            }
            if p[1..].contains(start) || p[..p.len() - 1].contains(end) {
                return Err(SynthError::Config(format!(
                    "planted path {label} repeats a task element"
                )));
            }
            if p.iter().any(|e| e.is_empty()) {
                return Err(SynthError::Config(format!("planted path {label} has an empty element")));
            }
        }
        let mut seen = BTreeSet::new();
        for flow in &self.planted_flows {
            if !seen.insert(&flow.path) {
                return Err(SynthError::Config(format!(
                    "path {} planted twice",
                    flow.path.join(">")
                )));
            }
        }
        if self.noise_elements.is_empty() {
            return Err(SynthError::Config("noise_elements is empty".into()));
        }
        if self.noise_elements.iter().any(|e| e == start || e == end || e.is_empty()) {
            return Err(SynthError::Config(
                "noise_elements must not contain the task elements".into(),
            ));
        }
        check_range("inter_interaction_dt", self.inter_interaction_dt, 0, true)?;
        check_range("glance_model.road_ms", self.glance_model.road_ms, 0, true)?;
        check_range("glance_model.center_stack_ms", self.glance_model.center_stack_ms, 0, true)?;
        check_range("glance_model.other_ms", self.glance_model.other_ms, 0, true)?;
        if !(0.0..=1.0).contains(&self.glance_model.other_fraction) {
            return Err(SynthError::Config("glance_model.other_fraction outside [0, 1]".into()));
        }
        let dm = &self.driving_model;
        if !(dm.start_speed >= 0.0) || dm.delta_per_s.0 > dm.delta_per_s.1 {
            return Err(SynthError::Config("driving_model is invalid".into()));
        }
        if dm.steering_range.0 > dm.steering_range.1 {
            return Err(SynthError::Config("driving_model.steering_range is invalid".into()));
        }
        let pool = &self.trip_meta_pool;
        if pool.car_models.is_empty()
            || pool.software_versions.is_empty()
            || pool.screen_sizes.is_empty()
            || pool.dates.is_empty()
            || pool.vehicles == 0
        {
            return Err(SynthError::Config("trip_meta_pool has an empty list".into()));
        }
        if self.trips_per_file == 0 {
            return Err(SynthError::Config("trips_per_file must be positive".into()));
        }
        Ok(())
    }

    pub fn planted_total(&self) -> usize {
        self.planted_flows.iter().map(|f| f.count).sum()
    }
}

/// Serialized log record with its `"type"` tag first.
#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LogLine<'a> {
    Trip(&'a TripMeta),
    Interaction(&'a InteractionEvent),
    Glance(&'a GlanceEvent),
    Driving(&'a DrivingSample),
}

/// One generated trip.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrip {
    pub meta: TripMeta,
    pub interactions: Vec<InteractionEvent>,
    pub glances: Vec<GlanceEvent>,
    pub driving: Vec<DrivingSample>,
}

impl SynthTrip {
    fn write_lines(&self, out: &mut String) {
        let mut push = |line: LogLine| {
            out.push_str(&serde_json::to_string(&line).expect("log records serialize"));
            out.push('\n');
        };
        push(LogLine::Trip(&self.meta));
        self.interactions.iter().for_each(|e| push(LogLine::Interaction(e)));
        self.glances.iter().for_each(|g| push(LogLine::Glance(g)));
        self.driving.iter().for_each(|d| push(LogLine::Driving(d)));
    }
}

const EPOCH_BASE: Millis = 1_683_000_000_000;
const TRIP_SPACING: Millis = 3_600_000;
const CONTEXT_PAD: Millis = 3000;

enum TripKind<'a> {
    Planted(&'a [String]),
    Noise,
}

struct Synth<'a> {
    cfg: &'a GeneratorConfig,
    rng: ChaCha8Rng,
}

impl Synth<'_> {
    fn gesture(&mut self) -> Gesture {
        // taps dominate touchscreen use
        if self.rng.gen_bool(0.7) {
            Gesture::Tap
        } else {
            *Gesture::ALL.choose(&mut self.rng).expect("nonempty")
        }
    }

    fn noise_element(&mut self) -> String {
        self.cfg
            .noise_elements
            .choose(&mut self.rng)
            .expect("validated nonempty")
            .clone()
    }

    fn elements(&mut self, kind: &TripKind) -> Vec<String> {
        let pad = |s: &mut Self, n: usize| (0..n).map(|_| s.noise_element()).collect::<Vec<_>>();
        match kind {
            TripKind::Planted(path) => {
                let lead = self.rng.gen_range(0..=3);
                let tail = self.rng.gen_range(0..=3);
                let mut out = pad(self, lead);
                out.extend(path.iter().cloned());
                out.extend(pad(self, tail));
                out
            }
            TripKind::Noise => {
                let n = self.rng.gen_range(3..=8);
                let mut out = pad(self, n);
                if self.cfg.near_miss_noise {
                    let at = self.rng.gen_range(0..out.len());
                    out.insert(at, self.cfg.task.start_element.clone());
                }
                out
            }
        }
    }

    fn trip(&mut self, index: usize, kind: &TripKind) -> SynthTrip {
        let pool = &self.cfg.trip_meta_pool;
        let trip_id = format!("T{index:06}");
        let meta = TripMeta {
            trip_id: trip_id.clone(),
            vehicle_id: format!("V{:04}", index % pool.vehicles),
            car_model: pool.car_models[index % pool.car_models.len()].clone(),
            software_version: pool.software_versions[index % pool.software_versions.len()].clone(),
            screen_size: pool.screen_sizes[index % pool.screen_sizes.len()].clone(),
            date: pool.dates[index % pool.dates.len()],
        };

        let t0 = EPOCH_BASE + index as Millis * TRIP_SPACING + CONTEXT_PAD;
        let (dt_lo, dt_hi) = self.cfg.inter_interaction_dt;
        let mut t = t0;
        let mut interactions = Vec::new();
        for (k, element_id) in self.elements(kind).into_iter().enumerate() {
            if k > 0 {
                t += self.rng.gen_range(dt_lo..=dt_hi);
            }
            interactions.push(InteractionEvent {
                trip_id: trip_id.clone(),
                t,
                screen_id: format!("S_{}", element_id.split('_').next().unwrap_or("X")),
                element_id,
                gesture: self.gesture(),
            });
        }
        let (span_lo, span_hi) = (t0 - CONTEXT_PAD, t + CONTEXT_PAD);

        let gm = &self.cfg.glance_model;
        let mut glances = Vec::new();
        let mut cursor = span_lo;
        let mut on_road = true;
        while cursor < span_hi {
            let (aoi, (lo, hi)) = if on_road {
                (Aoi::Road, gm.road_ms)
            } else if self.rng.gen_bool(gm.other_fraction) {
                (Aoi::Other, gm.other_ms)
            } else {
                (Aoi::CenterStack, gm.center_stack_ms)
            };
            let duration = self.rng.gen_range(lo..=hi);
            glances.push(GlanceEvent {
                trip_id: trip_id.clone(),
                t_start: cursor,
                duration,
                aoi,
            });
            cursor += duration;
            on_road = !on_road;
        }

        let dm = &self.cfg.driving_model;
        let mut driving = Vec::new();
        let mut speed = dm.start_speed;
        let mut ts = span_lo;
        while ts <= span_hi {
            let steering = self.rng.gen_range(dm.steering_range.0..=dm.steering_range.1);
            driving.push(DrivingSample {
                trip_id: trip_id.clone(),
                t: ts,
                speed: round2(speed),
                steering_angle: round2(steering),
            });
            speed = (speed + self.rng.gen_range(dm.delta_per_s.0..=dm.delta_per_s.1)).max(0.0);
            ts += 1000;
        }

        SynthTrip {
            meta,
            interactions,
            glances,
            driving,
        }
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Generates every trip of a config in trip-id order.
pub fn generate_trips(config: &GeneratorConfig) -> Result<Vec<SynthTrip>, SynthError> {
    config.validate()?;
    let mut synth = Synth {
        cfg: config,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
    };
    let mut kinds: Vec<TripKind> = config
        .planted_flows
        .iter()
        .flat_map(|f| (0..f.count).map(|_| TripKind::Planted(&f.path)))
        .chain((0..config.noise_trips).map(|_| TripKind::Noise))
        .collect();
    kinds.shuffle(&mut synth.rng);
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(k, kind)| synth.trip(k + 1, kind))
        .collect())
}

/// Concept entries for every element the config can emit.
pub fn concept_entries(config: &GeneratorConfig) -> Vec<ConceptEntry> {
    let mut ids: BTreeSet<&String> = config.noise_elements.iter().collect();
    ids.insert(&config.task.start_element);
    ids.insert(&config.task.end_element);
    ids.extend(config.planted_flows.iter().flat_map(|f| f.path.iter()));
    ids.into_iter()
        .map(|id| ConceptEntry {
            element_id: id.clone(),
            label: id.replace('_', " ").to_lowercase(),
            screen_id: format!("S_{}", id.split('_').next().unwrap_or("X")),
            description: format!("synthetic element {id}"),
        })
        .collect()
}

/// Log file names and contents, ready to write.
pub fn render_files(config: &GeneratorConfig) -> Result<Vec<(String, String)>, SynthError> {
    let trips = generate_trips(config)?;
    let mut files = Vec::new();
    for (k, chunk) in trips.chunks(config.trips_per_file).enumerate() {
        let mut text = String::new();
        chunk.iter().for_each(|t| t.write_lines(&mut text));
        files.push((format!("trips-{k:04}.jsonl"), text));
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedCorpus {
    pub log_files: Vec<PathBuf>,
    pub concept_path: PathBuf,
    pub trip_count: usize,
}

/// Writes the log files and `concept.json` into `out_dir`.
pub fn generate_corpus(config: &GeneratorConfig, out_dir: &Path) -> Result<GeneratedCorpus, SynthError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::Io { path, source }
    };
    let files = render_files(config)?;
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut log_files = Vec::new();
    for (name, text) in files {
        let path = out_dir.join(name);
        fs::write(&path, text).map_err(io(&path))?;
        log_files.push(path);
    }
    let concept_path = out_dir.join("concept.json");
    let concept = serde_json::to_string_pretty(&concept_entries(config)).expect("concept serializes");
    fs::write(&concept_path, concept).map_err(io(&concept_path))?;
    Ok(GeneratedCorpus {
        log_files,
        concept_path,
        trip_count: config.planted_total() + config.noise_trips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(path: &[&str], count: usize) -> PlantedFlow {
        PlantedFlow {
            path: path.iter().map(|s| s.to_string()).collect(),
            count,
        }
    }

    fn config() -> GeneratorConfig {
        GeneratorConfig {
            seed: 42,
            task: TaskDefinition::new("A", "C").unwrap(),
            planted_flows: vec![planted(&["A", "B", "C"], 6), planted(&["A", "C"], 4)],
            noise_trips: 10,
            ..Default::default()
        }
    }

    #[test]
    fn rejects_paths_off_task() {
        let mut c = config();
        c.planted_flows.push(planted(&["A", "B"], 1));
        assert!(matches!(c.validate(), Err(SynthError::Config(_))));
        let mut c = config();
        c.planted_flows.push(planted(&["A", "A", "C"], 1));
        assert!(c.validate().is_err());
        let mut c = config();
        c.noise_elements.push("A".into());
        assert!(c.validate().is_err());
        let mut c = config();
        c.inter_interaction_dt = (0, 10);
        assert!(c.validate().is_err());
    }

    #[test]
    fn trip_counts_and_shapes() {
        let trips = generate_trips(&config()).unwrap();
        assert_eq!(trips.len(), 20);
        let with_start = trips
            .iter()
            .filter(|t| t.interactions.iter().any(|e| e.element_id == "A"))
            .count();
        assert_eq!(with_start, 10);
        for t in &trips {
            assert!(t.interactions.windows(2).all(|w| w[0].t < w[1].t));
            assert!(t.glances.windows(2).all(|w| w[0].t_end() == w[1].t_start));
            assert!(t.driving.iter().all(|d| d.speed >= 0.0));
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = render_files(&config()).unwrap();
        assert_eq!(a, render_files(&config()).unwrap());
        let mut other = config();
        other.seed = 43;
        assert_ne!(a, render_files(&other).unwrap());
    }

    #[test]
    fn lines_carry_type_tag_first() {
        let files = render_files(&config()).unwrap();
        let first = files[0].1.lines().next().unwrap();
        assert!(first.starts_with(r#"{"type":"trip","trip_id":"T000001""#), "{first}");
    }

    #[test]
    fn config_json_defaults() {
        let c: GeneratorConfig = serde_json::from_str(
            r#"{"seed":7,"task":{"start_element":"A","end_element":"C"},
                "planted_flows":[{"path":["A","C"],"count":2}],"noise_trips":1,
                "inter_interaction_dt":[100,200]}"#,
        )
        .unwrap();
        assert_eq!(c.inter_interaction_dt, (100, 200));
        assert_eq!(c.trips_per_file, 1000);
        c.validate().unwrap();
    }
}
