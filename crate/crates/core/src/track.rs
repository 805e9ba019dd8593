//! Racing track specification and scene construction.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{wrap_angle, Pose, Vec3};
use crate::rng::SimRng;
use crate::scene::{Entity, Pattern, Role, Scene, SceneError, Shape};

pub const COIN_RADIUS: f64 = 0.5;
/// Height of a coin's center above the track surface.
pub const COIN_HEIGHT: f64 = 1.0;
pub const BARRIER_HALF_LENGTH: f64 = 0.75;
pub const BARRIER_HALF_WIDTH: f64 = 0.75;
pub const BARRIER_HEIGHT: f64 = 1.2;
/// Track quads float slightly above the ground plane.
pub const SURFACE_LIFT: f64 = 0.02;

pub const GROUND_ALBEDO: [f64; 3] = [0.36, 0.56, 0.30];
pub const TRACK_ALBEDO: [f64; 3] = [0.33, 0.33, 0.35];
pub const COIN_ALBEDO: [f64; 3] = [0.96, 0.80, 0.18];
pub const BARRIER_ALBEDO: [f64; 3] = [0.86, 0.20, 0.14];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierPlacement {
    /// Arc length along the centerline, meters.
    pub s: f64,
    /// Signed offset to the left of the centerline, meters.
    pub lateral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    /// Closed polyline; the first vertex is repeated at the end.
    pub centerline: Vec<Vec3>,
    pub width: f64,
    /// Coin arc-length positions on the centerline.
    pub coins: Vec<f64>,
    pub barriers: Vec<BarrierPlacement>,
    #[serde(default = "default_laps")]
    pub laps: u32,
    /// Number of seeded decorative pillars scattered beside the track.
    #[serde(default = "default_decor")]
    pub decor: usize,
}

fn default_laps() -> u32 {
    2
}

fn default_decor() -> usize {
    24
}

impl TrackSpec {
    /// The demo loop: 12 segments with 45° chamfered corners and an 8°
    /// climb and descent on the first straight, 50 coins, 8 barriers.
    pub fn demo() -> TrackSpec {
        let k = 0.6;
        let rise = k * 200.0 * libm::tan(crate::math::rad(8.0));
        let pts = [
            (0.0, 0.0, 0.0),
            (400.0, 0.0, 0.0),
            (600.0, 0.0, rise),
            (800.0, 0.0, rise),
            (1000.0, 0.0, 0.0),
            (1200.0, 0.0, 0.0),
            (1300.0, 100.0, 0.0),
            (1300.0, 500.0, 0.0),
            (1200.0, 600.0, 0.0),
            (0.0, 600.0, 0.0),
            (-100.0, 500.0, 0.0),
            (-100.0, 100.0, 0.0),
            (0.0, 0.0, 0.0),
        ];
        let centerline: Vec<Vec3> = pts.iter().map(|&(x, y, z)| Vec3::new(k * x, k * y, z)).collect();
        let length = Centerline::new(&centerline).map(|c| c.length()).unwrap_or(1.0);
        let coins = (0..50).map(|k| (k as f64 + 0.5) * length / 50.0).collect();
        let fractions = [0.07, 0.16, 0.29, 0.41, 0.55, 0.66, 0.78, 0.90];
        let laterals = [-3.5, 2.5, 0.0, -1.5, 3.0, -2.5, 1.0, 4.0];
        let barriers = fractions
            .iter()
            .zip(laterals)
            .map(|(f, lateral)| BarrierPlacement { s: f * length, lateral })
            .collect();
        TrackSpec {
            centerline,
            width: 12.0,
            coins,
            barriers,
            laps: 2,
            decor: 24,
        }
    }

    pub fn validate(&self) -> Result<Centerline, SceneError> {
        if self.centerline.len() < 8 {
            return Err(SceneError::InvalidTrack("centerline needs at least 8 vertices"));
        }
        if self.centerline.first() != self.centerline.last() {
            return Err(SceneError::OpenCenterline);
        }
        let line = Centerline::new(&self.centerline)?;
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(SceneError::InvalidTrack("width must be positive"));
        }
        if self.laps < 1 {
            return Err(SceneError::InvalidTrack("laps must be at least 1"));
        }
        let in_range = |s: f64| s.is_finite() && s >= 0.0 && s < line.length();
        if !self.coins.iter().all(|&s| in_range(s)) {
            return Err(SceneError::InvalidTrack("coin position outside [0, track length)"));
        }
        for b in &self.barriers {
            if !in_range(b.s) {
                return Err(SceneError::InvalidTrack("barrier position outside [0, track length)"));
            }
            if !(b.lateral.abs() <= 0.5 * self.width) {
                return Err(SceneError::InvalidTrack("barrier lies outside the track width"));
            }
        }
        Ok(line)
    }
}

/// Arc-length parameterization of a closed polyline.
#[derive(Clone, Debug, PartialEq)]
pub struct Centerline {
    points: Vec<Vec3>,
    cumulative: Vec<f64>,
}

impl Centerline {
    pub fn new(points: &[Vec3]) -> Result<Centerline, SceneError> {
        if points.len() < 2 || !points.iter().all(|p| p.is_finite()) {
            return Err(SceneError::InvalidTrack("centerline must have finite vertices"));
        }
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in points.windows(2) {
            let len = w[0].distance(w[1]);
            if !(len > 0.0) || w[0].planar_distance(w[1]) == 0.0 {
                return Err(SceneError::InvalidTrack("degenerate centerline segment"));
            }
            acc += len;
            cumulative.push(acc);
        }
        Ok(Centerline { points: points.to_vec(), cumulative })
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn wrap(&self, s: f64) -> f64 {
        let l = self.length();
        let w = libm::fmod(s, l);
        if w < 0.0 {
            w + l
        } else {
            w
        }
    }

    pub fn segment_index(&self, s: f64) -> usize {
        let s = self.wrap(s);
        match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.segment_count() - 1),
            Err(i) => (i - 1).min(self.segment_count() - 1),
        }
    }

    pub fn segment(&self, i: usize) -> (Vec3, Vec3) {
        (self.points[i], self.points[i + 1])
    }

    pub fn point_at(&self, s: f64) -> Vec3 {
        let s = self.wrap(s);
        let i = self.segment_index(s);
        let (a, b) = self.segment(i);
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        a.lerp(b, (s - self.cumulative[i]) / seg)
    }

    /// Heading of the segment containing `s`, radians from +X.
    pub fn heading_at(&self, s: f64) -> f64 {
        let (a, b) = self.segment(self.segment_index(s));
        libm::atan2(b.y - a.y, b.x - a.x)
    }

    /// Slope angle of the segment containing `s` (positive climbs).
    pub fn slope_at(&self, s: f64) -> f64 {
        let (a, b) = self.segment(self.segment_index(s));
        libm::atan2(b.z - a.z, a.planar_distance(b))
    }

    /// Horizontal unit vector pointing to the left of travel.
    pub fn left_at(&self, s: f64) -> Vec3 {
        let h = self.heading_at(s);
        Vec3::new(-libm::sin(h), libm::cos(h), 0.0)
    }

    /// Absolute heading change between `s` and `s + ahead`.
    pub fn turn_ahead(&self, s: f64, ahead: f64) -> f64 {
        wrap_angle(self.heading_at(s + ahead) - self.heading_at(s)).abs()
    }

    /// Closest centerline point in the XY plane: `(s, signed lateral, planar distance)`.
    pub fn project(&self, p: Vec3) -> (f64, f64, f64) {
        let mut best = (0.0, 0.0, f64::INFINITY);
        for i in 0..self.segment_count() {
            let (a, b) = self.segment(i);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let f = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
            let (cx, cy) = (a.x + f * dx, a.y + f * dy);
            let dist = libm::hypot(p.x - cx, p.y - cy);
            if dist < best.2 {
                let seg = self.cumulative[i + 1] - self.cumulative[i];
                let s = self.wrap(self.cumulative[i] + f * seg);
                let len = libm::sqrt(len2);
                let lateral = (dx * (p.y - a.y) - dy * (p.x - a.x)) / len;
                best = (s, lateral, dist);
            }
        }
        best
    }
}

/// A barrier's footprint on the track.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierFootprint {
    pub center: Vec3,
    pub heading: f64,
    pub s: f64,
}

impl BarrierFootprint {
    /// Whether a disc of `radius` at `p` overlaps the barrier in XY.
    pub fn overlaps_disc(&self, p: Vec3, radius: f64) -> bool {
        let (s, c) = (libm::sin(self.heading), libm::cos(self.heading));
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        let qx = lx.clamp(-BARRIER_HALF_LENGTH, BARRIER_HALF_LENGTH);
        let qy = ly.clamp(-BARRIER_HALF_WIDTH, BARRIER_HALF_WIDTH);
        libm::hypot(lx - qx, ly - qy) < radius
    }
}

/// Game-side geometry derived from a validated [`TrackSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct RacingTrack {
    pub line: Centerline,
    pub width: f64,
    pub laps: u32,
    /// World centers of coin spheres, in placement order.
    pub coins: Vec<Vec3>,
    pub barriers: Vec<BarrierFootprint>,
}

impl RacingTrack {
    pub fn new(spec: &TrackSpec) -> Result<RacingTrack, SceneError> {
        let line = spec.validate()?;
        let coins = spec
            .coins
            .iter()
            .map(|&s| line.point_at(s) + Vec3::new(0.0, 0.0, SURFACE_LIFT + COIN_HEIGHT))
            .collect();
        let barriers = spec
            .barriers
            .iter()
            .map(|b| BarrierFootprint {
                center: line.point_at(b.s) + line.left_at(b.s) * b.lateral + Vec3::new(0.0, 0.0, SURFACE_LIFT),
                heading: line.heading_at(b.s),
                s: b.s,
            })
            .collect();
        Ok(RacingTrack { line, width: spec.width, laps: spec.laps, coins, barriers })
    }
}

pub fn racing_scene_base() -> Scene {
    Scene::new(Vec3::new(0.4, 0.3, 0.85), 0.75, 0.3, [0.55, 0.72, 0.92])
}

/// Builds the racing world. The player vehicle has no entity: its body is
/// invisible.
pub fn build_racing_scene(spec: &TrackSpec, seed: u64) -> Result<Scene, SceneError> {
    let track = RacingTrack::new(spec)?;
    let line = &track.line;
    let mut scene = racing_scene_base();
    let mut id = 1u32;
    let mut next = || {
        let v = id;
        id += 1;
        v
    };

    scene.push(
        Entity::new(next(), Shape::Plane { height: 0.0 }, GROUND_ALBEDO, Role::Ground)
            .with_pattern(Pattern::Checker { cell: 2.0, contrast: 0.45 }),
    );

    let half = 0.5 * spec.width;
    let lift = Vec3::new(0.0, 0.0, SURFACE_LIFT);
    for i in 0..line.segment_count() {
        let (a, b) = line.segment(i);
        let h = libm::atan2(b.y - a.y, b.x - a.x);
        let left = Vec3::new(-libm::sin(h), libm::cos(h), 0.0) * half;
        let corners = [a + left + lift, b + left + lift, b - left + lift, a - left + lift];
        scene.push(Entity::new(next(), Shape::Quad { corners }, TRACK_ALBEDO, Role::Decor));
    }

    for &c in &track.coins {
        scene.push(Entity::new(next(), Shape::Sphere { center: c, radius: COIN_RADIUS }, COIN_ALBEDO, Role::Coin));
    }

    for b in &track.barriers {
        let shape = Shape::Box {
            min: Vec3::new(-BARRIER_HALF_LENGTH, -BARRIER_HALF_WIDTH, 0.0),
            max: Vec3::new(BARRIER_HALF_LENGTH, BARRIER_HALF_WIDTH, BARRIER_HEIGHT),
        };
        scene.push(
            Entity::new(next(), shape, BARRIER_ALBEDO, Role::Barrier)
                .with_pose(Pose::new(b.center, b.heading, 0.0, 0.0)),
        );
    }

    let palette = [[0.62, 0.52, 0.40], [0.45, 0.47, 0.55], [0.70, 0.66, 0.58], [0.30, 0.42, 0.28]];
    let mut rng = SimRng::stream(seed, 0x7261_6365);
    let clearance = half + 3.0;
    let mut placed = 0;
    let mut attempts = 0;
    while placed < spec.decor && attempts < spec.decor * 50 {
        attempts += 1;
        let s = rng.range(0.0, line.length());
        let side = if rng.chance(0.5) { 1.0 } else { -1.0 };
        let offset = rng.range(half + 4.0, half + 30.0);
        let hx = rng.range(0.5, 2.0);
        let hy = rng.range(0.5, 2.0);
        let height = rng.range(2.0, 8.0);
        let color = palette[(rng.uniform() * palette.len() as f64) as usize % palette.len()];
        let mut base = line.point_at(s) + line.left_at(s) * (side * offset);
        base.z = 0.0;
        let reach = libm::hypot(hx, hy);
        if line.project(base).2 < clearance + reach {
            continue;
        }
        let shape = Shape::Box {
            min: Vec3::new(-hx, -hy, 0.0),
            max: Vec3::new(hx, hy, height),
        };
        scene.push(
            Entity::new(next(), shape, color, Role::Decor)
                .with_pose(Pose::new(base, line.heading_at(s), 0.0, 0.0)),
        );
        placed += 1;
    }

    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_is_valid() {
        let spec = TrackSpec::demo();
        let line = spec.validate().unwrap();
        assert_eq!(line.segment_count(), 12);
        assert!(line.length() > 2200.0 && line.length() < 2300.0);
        let slopes: Vec<f64> = (0..12)
            .map(|i| {
                let (a, b) = line.segment(i);
                libm::atan2(b.z - a.z, a.planar_distance(b))
            })
            .filter(|s| s.abs() > 1e-9)
            .collect();
        assert_eq!(slopes.len(), 2);
        for s in slopes {
            assert!((s.abs() - crate::math::rad(8.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn fifty_coins_in_scene() {
        let scene = build_racing_scene(&TrackSpec::demo(), 7).unwrap();
        assert_eq!(scene.count_alive(Role::Coin), 50);
        assert_eq!(scene.count_alive(Role::Barrier), 8);
        assert_eq!(scene.count_alive(Role::Ground), 1);
    }

    #[test]
    fn no_barriers_is_fine() {
        let mut spec = TrackSpec::demo();
        spec.barriers.clear();
        let scene = build_racing_scene(&spec, 1).unwrap();
        assert_eq!(scene.count_alive(Role::Barrier), 0);
    }

    #[test]
    fn deterministic_construction() {
        let a = build_racing_scene(&TrackSpec::demo(), 7).unwrap();
        let b = build_racing_scene(&TrackSpec::demo(), 7).unwrap();
        assert_eq!(a, b);
        let c = build_racing_scene(&TrackSpec::demo(), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn open_centerline_rejected() {
        let mut spec = TrackSpec::demo();
        spec.centerline.pop();
        assert_eq!(build_racing_scene(&spec, 0), Err(SceneError::OpenCenterline));
    }

    #[test]
    fn out_of_track_barrier_rejected() {
        let mut spec = TrackSpec::demo();
        spec.barriers[0].lateral = 7.0;
        assert!(matches!(spec.validate(), Err(SceneError::InvalidTrack(_))));
    }

    #[test]
    fn centerline_projection_round_trip() {
        let line = TrackSpec::demo().validate().unwrap();
        for k in 0..200 {
            let s = k as f64 * line.length() / 200.0 + 1.3;
            let i = line.segment_index(s);
            let (a, b) = line.segment(i);
            let p0 = line.point_at(s);
            // Near a vertex an offset point can be closer to the neighbouring segment.
            if p0.distance(a) < 5.0 || p0.distance(b) < 5.0 {
                continue;
            }
            let p = p0 + line.left_at(s) * 2.0;
            let (s2, lat, dist) = line.project(p);
            assert!((s2 - line.wrap(s)).abs() < 1e-6, "s {s} s2 {s2}");
            assert!((lat - 2.0).abs() < 1e-9);
            assert!((dist - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn decor_stays_off_track() {
        let spec = TrackSpec::demo();
        let line = spec.validate().unwrap();
        let scene = build_racing_scene(&spec, 99).unwrap();
        for e in scene.entities.iter().filter(|e| e.role == Role::Decor) {
            if let Shape::Box { .. } = e.shape {
                assert!(line.project(e.pose.position).2 > 0.5 * spec.width + 3.0);
            }
        }
    }
}
