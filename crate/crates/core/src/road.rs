//! Virtual-road test cases: straight and circular-arc segments chained into
//! a driving path, plus the geometry every other module consumes.
//!
//! Frame: the path starts at the origin heading along +x. Positive angles
//! turn left (counter-clockwise), negative angles turn right.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_TURN_ANGLE_DEG: f64 = 15.0;
pub const MAX_TURN_ANGLE_DEG: f64 = 120.0;
pub const MIN_TURN_RADIUS_M: f64 = 2.0;
pub const MAX_TURN_RADIUS_M: f64 = 47.0;
pub const MIN_PATH_LENGTH_M: f64 = 50.0;
pub const DEFAULT_FRICTION: f64 = 0.8;

/// Minimum planar distance between parts of the road that are not
/// neighbours along the path.
pub const CLEARANCE_M: f64 = 8.0;
/// Two samples count as neighbours when they are closer than this along
/// the path: the arc length of a half circle of diameter `CLEARANCE_M`.
pub const NEIGHBOUR_ARC_M: f64 = CLEARANCE_M * PI / 2.0;
/// Sampling step used by the self-intersection test.
pub const CLEARANCE_STEP_M: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoadError {
    #[error("straight segment length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("turn angle magnitude must lie in [15, 120] degrees, got {0}")]
    BadAngle(f64),
    #[error("turn radius must lie in [2, 47] m, got {0}")]
    BadRadius(f64),
    #[error("friction coefficient must lie in (0, 2], got {0}")]
    BadFriction(f64),
    #[error("segment kind {kind:?} inconsistent with angle {angle} / radius {radius}")]
    InconsistentSegment {
        kind: SegmentKind,
        angle: f64,
        radius: f64,
    },
    #[error("stored length {stored} does not match derived length {derived}")]
    LengthMismatch { stored: f64, derived: f64 },
    #[error("a test case needs at least 2 segments, got {0}")]
    TooFewSegments(usize),
    #[error("path length {0:.3} m is below the 50 m minimum")]
    TooShort(f64),
    #[error("path violates the {CLEARANCE_M} m clearance between non-adjacent parts")]
    SelfIntersecting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Straight,
    LeftTurn,
    RightTurn,
}

impl SegmentKind {
    pub fn is_turn(self) -> bool {
        self != SegmentKind::Straight
    }
}

/// One piece of the driving path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSegment", into = "RawSegment")]
pub struct RoadSegment {
    kind: SegmentKind,
    length: f64,
    angle: f64,
    radius: f64,
    friction: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    kind: SegmentKind,
    angle_deg: f64,
    radius_m: f64,
    length_m: f64,
    friction: f64,
}

impl From<RoadSegment> for RawSegment {
    fn from(s: RoadSegment) -> Self {
        RawSegment {
            kind: s.kind,
            angle_deg: s.angle,
            radius_m: s.radius,
            length_m: s.length,
            friction: s.friction,
        }
    }
}

impl TryFrom<RawSegment> for RoadSegment {
    type Error = RoadError;

    fn try_from(raw: RawSegment) -> Result<Self, RoadError> {
        let seg = match raw.kind {
            SegmentKind::Straight => {
                if raw.angle_deg != 0.0 || raw.radius_m != 0.0 {
                    return Err(RoadError::InconsistentSegment {
                        kind: raw.kind,
                        angle: raw.angle_deg,
                        radius: raw.radius_m,
                    });
                }
                RoadSegment::straight(raw.length_m)?
            }
            kind => {
                let seg = RoadSegment::turn(raw.angle_deg, raw.radius_m)?;
                if seg.kind != kind {
                    return Err(RoadError::InconsistentSegment {
                        kind,
                        angle: raw.angle_deg,
                        radius: raw.radius_m,
                    });
                }
                let tol = 1e-9 * seg.length.max(1.0);
                if (seg.length - raw.length_m).abs() > tol {
                    return Err(RoadError::LengthMismatch {
                        stored: raw.length_m,
                        derived: seg.length,
                    });
                }
                seg
            }
        };
        seg.with_friction(raw.friction)
    }
}

impl RoadSegment {
    pub fn straight(length: f64) -> Result<Self, RoadError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(RoadError::BadLength(length));
        }
        Ok(RoadSegment {
            kind: SegmentKind::Straight,
            length,
            angle: 0.0,
            radius: 0.0,
            friction: DEFAULT_FRICTION,
        })
    }

    /// A circular arc. The sign of `angle_deg` picks the direction.
    pub fn turn(angle_deg: f64, radius: f64) -> Result<Self, RoadError> {
        let mag = angle_deg.abs();
        if !(MIN_TURN_ANGLE_DEG..=MAX_TURN_ANGLE_DEG).contains(&mag) {
            return Err(RoadError::BadAngle(angle_deg));
        }
        if !(MIN_TURN_RADIUS_M..=MAX_TURN_RADIUS_M).contains(&radius) {
            return Err(RoadError::BadRadius(radius));
        }
        let kind = if angle_deg > 0.0 {
            SegmentKind::LeftTurn
        } else {
            SegmentKind::RightTurn
        };
        Ok(RoadSegment {
            kind,
            length: radius * mag * PI / 180.0,
            angle: angle_deg,
            radius,
            friction: DEFAULT_FRICTION,
        })
    }

    pub fn left(angle_deg: f64, radius: f64) -> Result<Self, RoadError> {
        Self::turn(angle_deg.abs(), radius)
    }

    pub fn right(angle_deg: f64, radius: f64) -> Result<Self, RoadError> {
        Self::turn(-angle_deg.abs(), radius)
    }

    pub fn with_friction(mut self, friction: f64) -> Result<Self, RoadError> {
        if !(friction > 0.0 && friction <= 2.0) {
            return Err(RoadError::BadFriction(friction));
        }
        self.friction = friction;
        Ok(self)
    }

    pub fn kind(&self) -> SegmentKind {
        self.kind
    }
    /// Arc length for turns.
    pub fn length(&self) -> f64 {
        self.length
    }
    /// Signed degrees, 0 for straights.
    pub fn angle(&self) -> f64 {
        self.angle
    }
    /// 0 for straights.
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn friction(&self) -> f64 {
        self.friction
    }
    pub fn is_turn(&self) -> bool {
        self.kind.is_turn()
    }

    /// Euclidean distance between the segment's endpoints.
    pub fn chord(&self) -> f64 {
        match self.kind {
            SegmentKind::Straight => self.length,
            _ => 2.0 * self.radius * (self.angle.abs().to_radians() / 2.0).sin(),
        }
    }

    /// The same piece of road driven in the opposite direction.
    pub fn reversed(&self) -> Self {
        let mut s = *self;
        if s.is_turn() {
            s.angle = -s.angle;
            s.kind = match s.kind {
                SegmentKind::LeftTurn => SegmentKind::RightTurn,
                _ => SegmentKind::LeftTurn,
            };
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pose {
    x: f64,
    y: f64,
    heading: f64,
}

impl Pose {
    const ORIGIN: Pose = Pose {
        x: 0.0,
        y: 0.0,
        heading: 0.0,
    };

    /// Pose after travelling `s` metres into `seg` (0 ≤ s ≤ length).
    fn advance(&self, seg: &RoadSegment, s: f64) -> Pose {
        match seg.kind {
            SegmentKind::Straight => Pose {
                x: self.x + s * self.heading.cos(),
                y: self.y + s * self.heading.sin(),
                heading: self.heading,
            },
            _ => {
                let sign = seg.angle.signum();
                let r = seg.radius;
                let cx = self.x - sign * r * self.heading.sin();
                let cy = self.y + sign * r * self.heading.cos();
                let h = self.heading + sign * s / r;
                Pose {
                    x: cx + sign * r * h.sin(),
                    y: cy - sign * r * h.cos(),
                    heading: h,
                }
            }
        }
    }

    fn end_of(&self, seg: &RoadSegment) -> Pose {
        self.advance(seg, seg.length)
    }

    fn point(&self) -> Point {
        Point {
            x: self.x,
            y: self.y,
        }
    }
}

/// Sample points with their arc-length position. Segment end poses are
/// computed in closed form, so endpoints do not depend on `step`.
fn sample(segments: &[RoadSegment], step: f64) -> Vec<(Point, f64)> {
    let mut out = vec![(Point { x: 0.0, y: 0.0 }, 0.0)];
    let mut pose = Pose::ORIGIN;
    let mut arc = 0.0;
    for seg in segments {
        let pieces = (seg.length / step).ceil().max(1.0) as usize;
        for j in 1..pieces {
            let s = seg.length * j as f64 / pieces as f64;
            out.push((pose.advance(seg, s).point(), arc + s));
        }
        pose = pose.end_of(seg);
        arc += seg.length;
        out.push((pose.point(), arc));
    }
    out
}

/// Points along the path, at most `step` metres apart, starting at the
/// origin. Panics if `step` is not positive.
pub fn polyline(segments: &[RoadSegment], step: f64) -> Vec<Point> {
    assert!(step > 0.0, "polyline step must be positive");
    sample(segments, step).into_iter().map(|(p, _)| p).collect()
}

pub fn endpoint(segments: &[RoadSegment]) -> Point {
    segments
        .iter()
        .fold(Pose::ORIGIN, |pose, seg| pose.end_of(seg))
        .point()
}

pub fn path_length(segments: &[RoadSegment]) -> f64 {
    segments.iter().map(|s| s.length).sum()
}

/// Straight-line distance from start to finish.
pub fn direct_distance(segments: &[RoadSegment]) -> f64 {
    endpoint(segments).dist(&Point { x: 0.0, y: 0.0 })
}

/// True when two samples further apart than [`NEIGHBOUR_ARC_M`] along the
/// path come closer than [`CLEARANCE_M`] in the plane.
pub fn violates_clearance(segments: &[RoadSegment]) -> bool {
    let pts = sample(segments, CLEARANCE_STEP_M);
    let clearance_sq = CLEARANCE_M * CLEARANCE_M;
    for (i, (p, s)) in pts.iter().enumerate() {
        for (q, t) in &pts[i + 1..] {
            if t - s <= NEIGHBOUR_ARC_M {
                continue;
            }
            let (dx, dy) = (p.x - q.x, p.y - q.y);
            if dx * dx + dy * dy < clearance_sq {
                return true;
            }
        }
    }
    false
}

/// A validated driving path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTestCase", into = "RawTestCase")]
pub struct TestCase {
    id: String,
    segments: Vec<RoadSegment>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTestCase {
    id: String,
    segments: Vec<RoadSegment>,
}

impl From<TestCase> for RawTestCase {
    fn from(t: TestCase) -> Self {
        RawTestCase {
            id: t.id,
            segments: t.segments,
        }
    }
}

impl TryFrom<RawTestCase> for TestCase {
    type Error = RoadError;
    fn try_from(raw: RawTestCase) -> Result<Self, RoadError> {
        TestCase::new(raw.id, raw.segments)
    }
}

impl TestCase {
    pub fn new(id: impl Into<String>, segments: Vec<RoadSegment>) -> Result<Self, RoadError> {
        if segments.len() < 2 {
            return Err(RoadError::TooFewSegments(segments.len()));
        }
        let length = path_length(&segments);
        if length < MIN_PATH_LENGTH_M {
            return Err(RoadError::TooShort(length));
        }
        if violates_clearance(&segments) {
            return Err(RoadError::SelfIntersecting);
        }
        Ok(TestCase {
            id: id.into(),
            segments,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn segments(&self) -> &[RoadSegment] {
        &self.segments
    }
    pub fn polyline(&self, step: f64) -> Vec<Point> {
        polyline(&self.segments, step)
    }
    pub fn path_length(&self) -> f64 {
        path_length(&self.segments)
    }
    pub fn direct_distance(&self) -> f64 {
        direct_distance(&self.segments)
    }

    /// The path driven from finish to start. Still a valid test case:
    /// reversal is a rigid motion of the same road.
    pub fn reversed(&self) -> TestCase {
        TestCase {
            id: format!("{}-rev", self.id),
            segments: self.segments.iter().rev().map(|s| s.reversed()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Safe,
    Unsafe,
}

impl Label {
    pub fn is_unsafe(self) -> bool {
        self == Label::Unsafe
    }
    pub fn from_unsafe(unsafe_: bool) -> Self {
        if unsafe_ {
            Label::Unsafe
        } else {
            Label::Safe
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Safe => "safe",
            Label::Unsafe => "unsafe",
        })
    }
}

/// A test case together with the outcome of driving it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLabeledTest", into = "RawLabeledTest")]
pub struct LabeledTest {
    pub test: TestCase,
    pub label: Label,
    pub obe_segments: Vec<usize>,
    pub sim_duration: f64,
    pub wall_cost: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabeledTest {
    test_id: String,
    label: Label,
    obe_segments: Vec<usize>,
    sim_duration_s: f64,
    wall_cost_s: f64,
    test: TestCase,
}

#[derive(Debug, Error)]
pub enum LabeledTestError {
    #[error("label {label} inconsistent with {n} OBE segments")]
    LabelMismatch { label: Label, n: usize },
    #[error("test_id {0:?} does not match embedded test id {1:?}")]
    IdMismatch(String, String),
    #[error("OBE segment index {0} out of range")]
    BadSegment(usize),
    #[error("simulated duration must be positive, got {0}")]
    BadDuration(f64),
}

impl LabeledTest {
    pub fn new(
        test: TestCase,
        obe_segments: Vec<usize>,
        sim_duration: f64,
        wall_cost: f64,
    ) -> Result<Self, LabeledTestError> {
        let label = Label::from_unsafe(!obe_segments.is_empty());
        Self::try_from(RawLabeledTest {
            test_id: test.id.clone(),
            label,
            obe_segments,
            sim_duration_s: sim_duration,
            wall_cost_s: wall_cost,
            test,
        })
    }

    pub fn id(&self) -> &str {
        self.test.id()
    }
}

impl From<LabeledTest> for RawLabeledTest {
    fn from(t: LabeledTest) -> Self {
        RawLabeledTest {
            test_id: t.test.id.clone(),
            label: t.label,
            obe_segments: t.obe_segments,
            sim_duration_s: t.sim_duration,
            wall_cost_s: t.wall_cost,
            test: t.test,
        }
    }
}

impl TryFrom<RawLabeledTest> for LabeledTest {
    type Error = LabeledTestError;
    fn try_from(raw: RawLabeledTest) -> Result<Self, Self::Error> {
        if raw.label.is_unsafe() == raw.obe_segments.is_empty() {
            return Err(LabeledTestError::LabelMismatch {
                label: raw.label,
                n: raw.obe_segments.len(),
            });
        }
        if raw.test_id != raw.test.id {
            return Err(LabeledTestError::IdMismatch(raw.test_id, raw.test.id));
        }
        if let Some(&bad) = raw
            .obe_segments
            .iter()
            .find(|&&i| i >= raw.test.segments.len())
        {
            return Err(LabeledTestError::BadSegment(bad));
        }
        if !(raw.sim_duration_s > 0.0 && raw.sim_duration_s.is_finite()) {
            return Err(LabeledTestError::BadDuration(raw.sim_duration_s));
        }
        Ok(LabeledTest {
            test: raw.test,
            label: raw.label,
            obe_segments: raw.obe_segments,
            sim_duration: raw.sim_duration_s,
            wall_cost: raw.wall_cost_s,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(len: f64) -> RoadSegment {
        RoadSegment::straight(len).unwrap()
    }
    fn l(a: f64, r: f64) -> RoadSegment {
        RoadSegment::left(a, r).unwrap()
    }
    fn rt(a: f64, r: f64) -> RoadSegment {
        RoadSegment::right(a, r).unwrap()
    }

    /// Independent oracle: compose rigid motions as (rotation, translation)
    /// pairs. A left arc of angle θ and radius r maps the local frame to
    /// translation (r sin θ, r(1 - cos θ)) and rotation θ.
    fn rigid_endpoint(segs: &[RoadSegment]) -> (f64, f64) {
        let (mut x, mut y, mut h) = (0.0f64, 0.0f64, 0.0f64);
        for seg in segs {
            let (dx, dy, dh) = if seg.is_turn() {
                let th = seg.angle().to_radians();
                let r = seg.radius();
                let sign = th.signum();
                let a = th.abs();
                (r * a.sin(), sign * r * (1.0 - a.cos()), th)
            } else {
                (seg.length(), 0.0, 0.0)
            };
            x += dx * h.cos() - dy * h.sin();
            y += dx * h.sin() + dy * h.cos();
            h += dh;
        }
        (x, y)
    }

    #[test]
    fn straight_polyline() {
        let pts = polyline(&[s(100.0)], 50.0);
        assert_eq!(pts.len(), 3);
        for (p, e) in pts.iter().zip([0.0, 50.0, 100.0]) {
            assert!((p.x - e).abs() < 1e-12 && p.y.abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_circle_left() {
        let segs = [l(90.0, 20.0)];
        let end = endpoint(&segs);
        assert!((end.x - 20.0).abs() < 1e-9 && (end.y - 20.0).abs() < 1e-9);
        let pts = polyline(&segs, 1.0);
        let pen = pts[pts.len() - 2];
        // Final heading +y: last chord points (almost) straight up.
        assert!((end.x - pen.x).abs() < 0.05 && end.y - pen.y > 0.9);
        assert!((direct_distance(&segs) - 20.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!((path_length(&segs) - 10.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn composed_path_matches_rigid_oracle() {
        let segs = [s(100.0), l(90.0, 20.0), s(50.0)];
        let (ox, oy) = rigid_endpoint(&segs);
        let end = endpoint(&segs);
        assert!((end.x - ox).abs() < 1e-9 && (end.y - oy).abs() < 1e-9);
        assert!((ox - 120.0).abs() < 1e-9 && (oy - 70.0).abs() < 1e-9);
        assert!((direct_distance(&segs) - 138.924_439_894_498_4).abs() < 1e-9);
    }

    #[test]
    fn summed_arc_lengths() {
        let segs = [s(100.0), l(90.0, 20.0), rt(45.0, 10.0)];
        let expected = 100.0 + 20.0 * PI / 2.0 + 10.0 * PI / 4.0;
        assert!((path_length(&segs) - expected).abs() < 1e-12);
        assert!((expected - 139.269_908_169_872_4).abs() < 1e-9);
    }

    #[test]
    fn segment_validation() {
        assert_eq!(RoadSegment::straight(0.0), Err(RoadError::BadLength(0.0)));
        assert!(matches!(RoadSegment::turn(10.0, 20.0), Err(RoadError::BadAngle(_))));
        assert!(matches!(RoadSegment::turn(-121.0, 20.0), Err(RoadError::BadAngle(_))));
        assert!(matches!(RoadSegment::turn(30.0, 1.0), Err(RoadError::BadRadius(_))));
        assert!(matches!(s(10.0).with_friction(0.0), Err(RoadError::BadFriction(_))));
        assert_eq!(l(30.0, 10.0).kind(), SegmentKind::LeftTurn);
        assert_eq!(rt(30.0, 10.0).angle(), -30.0);
    }

    #[test]
    fn test_case_invariants() {
        assert_eq!(
            TestCase::new("a", vec![s(100.0)]),
            Err(RoadError::TooFewSegments(1))
        );
        assert!(matches!(
            TestCase::new("a", vec![s(20.0), s(20.0)]),
            Err(RoadError::TooShort(_))
        ));
        // Four 120° left turns of radius 10 close a loop on themselves.
        let loop_ = vec![s(30.0), l(120.0, 10.0), l(120.0, 10.0), l(120.0, 10.0), s(30.0)];
        assert_eq!(TestCase::new("a", loop_), Err(RoadError::SelfIntersecting));
        // A hairpin narrower than the clearance.
        let hairpin = vec![s(60.0), l(90.0, 2.0), l(90.0, 2.0), s(60.0)];
        assert_eq!(TestCase::new("a", hairpin), Err(RoadError::SelfIntersecting));
        // Tight but legal zig-zag.
        let ok = vec![s(60.0), l(15.0, 5.0), rt(15.0, 5.0), s(60.0)];
        assert!(TestCase::new("a", ok).is_ok());
    }

    #[test]
    fn json_round_trip_and_schema() {
        let t = TestCase::new("t1", vec![s(100.0 / 3.0 + 20.0), l(37.3, 11.1), rt(45.0, 10.0)]).unwrap();
        let js = serde_json::to_string(&t).unwrap();
        assert!(js.contains("\"angle_deg\"") && js.contains("\"left_turn\""));
        let back: TestCase = serde_json::from_str(&js).unwrap();
        assert_eq!(back, t);
        assert_eq!(serde_json::to_string(&back).unwrap(), js);
        let bad = js.replace("\"left_turn\"", "\"right_turn\"");
        assert!(serde_json::from_str::<TestCase>(&bad).is_err());
    }

    #[test]
    fn labeled_test_consistency() {
        let t = TestCase::new("t", vec![s(50.0), l(90.0, 20.0)]).unwrap();
        let lt = LabeledTest::new(t.clone(), vec![1], 10.0, 15.0).unwrap();
        assert_eq!(lt.label, Label::Unsafe);
        let js = serde_json::to_value(&lt).unwrap();
        assert_eq!(js["test_id"], "t");
        assert_eq!(js["label"], "unsafe");
        assert!(js.get("wall_cost_s").is_some());
        let back: LabeledTest = serde_json::from_value(js.clone()).unwrap();
        assert_eq!(back, lt);
        let mut broken = js;
        broken["label"] = "safe".into();
        assert!(serde_json::from_value::<LabeledTest>(broken).is_err());
        assert!(LabeledTest::new(t, vec![5], 10.0, 15.0).is_err());
    }

    fn arb_segment() -> impl Strategy<Value = RoadSegment> {
        prop_oneof![
            (5.0f64..200.0).prop_map(|len| RoadSegment::straight(len).unwrap()),
            (15.0f64..=120.0, 2.0f64..=47.0, any::<bool>()).prop_map(|(a, r, left)| {
                RoadSegment::turn(if left { a } else { -a }, r).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn direct_distance_bounded_by_length(segs in prop::collection::vec(arb_segment(), 1..12)) {
            let d = direct_distance(&segs);
            prop_assert!(d >= 0.0);
            prop_assert!(d <= path_length(&segs) + 1e-9);
        }

        #[test]
        fn reversal_preserves_length_and_distance(segs in prop::collection::vec(arb_segment(), 1..12)) {
            let rev: Vec<_> = segs.iter().rev().map(|s| s.reversed()).collect();
            prop_assert!((path_length(&segs) - path_length(&rev)).abs() < 1e-9);
            prop_assert!((direct_distance(&segs) - direct_distance(&rev)).abs() < 1e-6);
        }

        #[test]
        fn refinement_keeps_endpoint(segs in prop::collection::vec(arb_segment(), 1..10),
                                     coarse in 1.0f64..20.0, ratio in 0.05f64..0.95) {
            let a = polyline(&segs, coarse);
            let b = polyline(&segs, coarse * ratio);
            prop_assert!(b.len() >= a.len());
            prop_assert!(a.last().unwrap().dist(b.last().unwrap()) < 1e-9);
            for w in b.windows(2) {
                prop_assert!(w[0].dist(&w[1]) <= coarse * ratio + 1e-9);
            }
        }
    }
}
