//! Road features computed from a test definition before it is executed:
//! global descriptors of the whole path and per-segment descriptors with
//! the immediate neighbours' attributes.

use serde::{Deserialize, Serialize};

use crate::learn::dataset::{Column, ColumnKind, Dataset, FeatureSet, LabeledVector, Schema};
use crate::par::{self, Exec};
use crate::road::{Label, LabeledTest, RoadSegment, SegmentKind, TestCase};

/// How turn angles enter the angle statistics. Totals always use magnitudes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMode {
    #[default]
    Absolute,
    Signed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub angle_mode: AngleMode,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FullRoadFeatures {
    pub direct_distance: f64,
    pub length: f64,
    pub num_l_turns: usize,
    pub num_r_turns: usize,
    pub num_straight: usize,
    pub total_angle: f64,
    pub median_angle: f64,
    pub std_angle: f64,
    pub max_angle: f64,
    pub min_angle: f64,
    pub mean_angle: f64,
    pub median_radius: f64,
    pub std_radius: f64,
    pub max_radius: f64,
    pub min_radius: f64,
    pub mean_radius: f64,
}

pub const FULL_ROAD_COLUMNS: [&str; 16] = [
    "direct_distance",
    "length",
    "num_l_turns",
    "num_r_turns",
    "num_straight",
    "total_angle",
    "median_angle",
    "std_angle",
    "max_angle",
    "min_angle",
    "mean_angle",
    "median_radius",
    "std_radius",
    "max_radius",
    "min_radius",
    "mean_radius",
];

impl FullRoadFeatures {
    pub fn values(&self) -> Vec<f64> {
        vec![
            self.direct_distance,
            self.length,
            self.num_l_turns as f64,
            self.num_r_turns as f64,
            self.num_straight as f64,
            self.total_angle,
            self.median_angle,
            self.std_angle,
            self.max_angle,
            self.min_angle,
            self.mean_angle,
            self.median_radius,
            self.std_radius,
            self.max_radius,
            self.min_radius,
            self.mean_radius,
        ]
    }

    pub fn schema() -> Schema {
        Schema::new(
            FeatureSet::FullRoad,
            FULL_ROAD_COLUMNS
                .iter()
                .map(|n| Column::new(*n, ColumnKind::Numeric))
                .collect(),
        )
    }
}

/// min, median, max, mean, population std. All zero for an empty slice.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    if values.is_empty() {
        return Summary::default();
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    };
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    Summary {
        min: v[0],
        median,
        max: v[n - 1],
        mean,
        std: var.sqrt(),
    }
}

pub fn extract_full_road(test: &TestCase) -> FullRoadFeatures {
    extract_full_road_with(test, &FeatureConfig::default())
}

pub fn extract_full_road_with(test: &TestCase, cfg: &FeatureConfig) -> FullRoadFeatures {
    let segs = test.segments();
    let turns: Vec<&RoadSegment> = segs.iter().filter(|s| s.is_turn()).collect();
    let count = |k: SegmentKind| segs.iter().filter(|s| s.kind() == k).count();
    let angles: Vec<f64> = turns
        .iter()
        .map(|s| match cfg.angle_mode {
            AngleMode::Absolute => s.angle().abs(),
            AngleMode::Signed => s.angle(),
        })
        .collect();
    let radii: Vec<f64> = turns.iter().map(|s| s.radius()).collect();
    let a = summarize(&angles);
    let r = summarize(&radii);
    FullRoadFeatures {
        direct_distance: test.direct_distance(),
        length: test.path_length(),
        num_l_turns: count(SegmentKind::LeftTurn),
        num_r_turns: count(SegmentKind::RightTurn),
        num_straight: count(SegmentKind::Straight),
        total_angle: turns.iter().map(|s| s.angle().abs()).sum(),
        median_angle: a.median,
        std_angle: a.std,
        max_angle: a.max,
        min_angle: a.min,
        mean_angle: a.mean,
        median_radius: r.median,
        std_radius: r.std,
        max_radius: r.max,
        min_radius: r.min,
        mean_radius: r.mean,
    }
}

/// Attributes of a single segment, as seen from itself or a neighbour.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentAttrs {
    pub right_turn: bool,
    pub left_turn: bool,
    pub straight: bool,
    pub angle: f64,
    pub radius: f64,
    pub length: f64,
    pub direct_distance: f64,
}

impl SegmentAttrs {
    pub fn of(seg: &RoadSegment) -> Self {
        SegmentAttrs {
            right_turn: seg.kind() == SegmentKind::RightTurn,
            left_turn: seg.kind() == SegmentKind::LeftTurn,
            straight: seg.kind() == SegmentKind::Straight,
            angle: seg.angle(),
            radius: seg.radius(),
            length: seg.length(),
            direct_distance: seg.chord(),
        }
    }

    fn push(&self, out: &mut Vec<f64>) {
        out.extend([
            b(self.right_turn),
            b(self.left_turn),
            b(self.straight),
            self.angle,
            self.radius,
            self.length,
            self.direct_distance,
        ]);
    }
}

fn b(x: bool) -> f64 {
    if x {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentFeatures {
    pub first: bool,
    pub last: bool,
    pub own: SegmentAttrs,
    /// All-zero/false for the first segment.
    pub prev: SegmentAttrs,
    /// All-zero/false for the last segment.
    pub next: SegmentAttrs,
}

pub const SEGMENT_COLUMNS: [(&str, ColumnKind); 23] = {
    use ColumnKind::{Boolean as B, Numeric as N};
    [
        ("first", B),
        ("last", B),
        ("right_turn", B),
        ("left_turn", B),
        ("straight", B),
        ("angle", N),
        ("radius", N),
        ("length", N),
        ("direct_distance", N),
        ("prev_right_turn", B),
        ("prev_left_turn", B),
        ("prev_straight", B),
        ("prev_angle", N),
        ("prev_radius", N),
        ("prev_length", N),
        ("prev_direct_distance", N),
        ("next_right_turn", B),
        ("next_left_turn", B),
        ("next_straight", B),
        ("next_angle", N),
        ("next_radius", N),
        ("next_length", N),
        ("next_direct_distance", N),
    ]
};

impl SegmentFeatures {
    pub fn values(&self) -> Vec<f64> {
        let mut out = vec![b(self.first), b(self.last)];
        self.own.push(&mut out);
        self.prev.push(&mut out);
        self.next.push(&mut out);
        out
    }

    pub fn schema() -> Schema {
        Schema::new(
            FeatureSet::Segment,
            SEGMENT_COLUMNS
                .iter()
                .map(|(n, k)| Column::new(*n, *k))
                .collect(),
        )
    }
}

pub fn extract_segments(test: &TestCase) -> Vec<SegmentFeatures> {
    let segs = test.segments();
    let attrs: Vec<SegmentAttrs> = segs.iter().map(SegmentAttrs::of).collect();
    let n = attrs.len();
    (0..n)
        .map(|i| SegmentFeatures {
            first: i == 0,
            last: i + 1 == n,
            own: attrs[i],
            prev: if i > 0 { attrs[i - 1] } else { SegmentAttrs::default() },
            next: if i + 1 < n { attrs[i + 1] } else { SegmentAttrs::default() },
        })
        .collect()
}

pub fn full_road_vector(test: &LabeledTest, cfg: &FeatureConfig) -> LabeledVector {
    LabeledVector {
        values: extract_full_road_with(&test.test, cfg).values(),
        label: test.label,
        source: test.id().to_string(),
        segment: None,
    }
}

/// Segment vectors for one labeled test. A segment is unsafe iff an OBE
/// occurred on it.
pub fn segment_vectors(test: &LabeledTest) -> Vec<LabeledVector> {
    extract_segments(&test.test)
        .into_iter()
        .enumerate()
        .map(|(i, f)| LabeledVector {
            values: f.values(),
            label: Label::from_unsafe(test.obe_segments.contains(&i)),
            source: test.id().to_string(),
            segment: Some(i),
        })
        .collect()
}

pub fn full_road_dataset(labeled: &[LabeledTest], provenance: &str, cfg: &FeatureConfig) -> Dataset {
    let rows = par::map_slice(Exec::default(), labeled, |t| full_road_vector(t, cfg));
    Dataset::from_parts(FullRoadFeatures::schema(), rows, provenance)
        .expect("full-road vectors match their schema")
}

pub fn segment_dataset(labeled: &[LabeledTest], provenance: &str) -> Dataset {
    let rows = par::map_slice(Exec::default(), labeled, segment_vectors)
        .into_iter()
        .flatten()
        .collect();
    Dataset::from_parts(SegmentFeatures::schema(), rows, provenance)
        .expect("segment vectors match their schema")
}
