//! Shooter arena specification and scene construction.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{Pose, Vec3};
use crate::scene::{Entity, Pattern, Role, Scene, SceneError, Shape};

pub const WALL_ALBEDO: [f64; 3] = [0.55, 0.55, 0.56];
pub const ROBOT_ALBEDO: [f64; 3] = [0.42, 0.46, 0.58];
pub const FLOOR_ALBEDO: [f64; 3] = [0.45, 0.43, 0.40];
/// Robots are a 1 m box (half-width 0.5) with a 0.5 m sphere on top.
pub const ROBOT_HALF_WIDTH: f64 = 0.5;
pub const ROBOT_BODY_HEIGHT: f64 = 1.0;
pub const ROBOT_HEAD_RADIUS: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl WallBox {
    pub const fn new(min: Vec3, max: Vec3) -> WallBox {
        WallBox { min, max }
    }

    /// XY containment after growing the footprint by `margin`.
    pub fn contains_xy(&self, p: Vec3, margin: f64) -> bool {
        p.x > self.min.x - margin
            && p.x < self.max.x + margin
            && p.y > self.min.y - margin
            && p.y < self.max.y + margin
    }

    /// Whether the XY segment `a`-`b` crosses the footprint grown by `margin`.
    pub fn blocks_segment_xy(&self, a: Vec3, b: Vec3, margin: f64) -> bool {
        let lo = [self.min.x - margin, self.min.y - margin];
        let hi = [self.max.x + margin, self.max.y + margin];
        let o = [a.x, a.y];
        let d = [b.x - a.x, b.y - a.y];
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for k in 0..2 {
            if d[k] == 0.0 {
                if o[k] <= lo[k] || o[k] >= hi[k] {
                    return false;
                }
                continue;
            }
            let mut ta = (lo[k] - o[k]) / d[k];
            let mut tb = (hi[k] - o[k]) / d[k];
            if ta > tb {
                core::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 >= t1 {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaSpec {
    pub walls: Vec<WallBox>,
    /// Ground-level robot poses; only position and yaw are used.
    pub robot_spawns: Vec<Pose>,
    /// Closed patrol polyline (first == last) walked by the player bot.
    pub patrol: Vec<Vec3>,
    #[serde(default = "default_detection")]
    pub detection_radius: f64,
    pub robot_count: usize,
}

fn default_detection() -> f64 {
    15.0
}

impl ArenaSpec {
    /// 80 m square arena around a 40 m central block, four cover walls and
    /// six robots along the ring corridor.
    pub fn demo() -> ArenaSpec {
        let v = Vec3::new;
        let walls = [
            (v(-41.0, -41.0, 0.0), v(41.0, -40.0, 8.0)),
            (v(-41.0, 40.0, 0.0), v(41.0, 41.0, 8.0)),
            (v(-41.0, -40.0, 0.0), v(-40.0, 40.0, 8.0)),
            (v(40.0, -40.0, 0.0), v(41.0, 40.0, 8.0)),
            (v(-20.0, -20.0, 0.0), v(20.0, 20.0, 8.0)),
            (v(-1.0, -40.0, 0.0), v(1.0, -35.0, 8.0)),
            (v(35.0, -1.0, 0.0), v(40.0, 1.0, 8.0)),
            (v(-1.0, 35.0, 0.0), v(1.0, 40.0, 8.0)),
            (v(-40.0, -1.0, 0.0), v(-35.0, 1.0, 8.0)),
        ]
        .iter()
        .map(|&(a, b)| WallBox::new(a, b))
        .collect();
        let spawns = [(12.0, -35.0), (35.0, -12.0), (35.0, 18.0), (-8.0, 35.0), (-35.0, 14.0), (-35.0, -18.0)]
            .iter()
            .map(|&(x, y)| Pose::at(v(x, y, 0.0)))
            .collect::<Vec<_>>();
        let patrol = [(-30.0, -30.0), (30.0, -30.0), (30.0, 30.0), (-30.0, 30.0), (-30.0, -30.0)]
            .iter()
            .map(|&(x, y)| v(x, y, 0.0))
            .collect();
        ArenaSpec {
            walls,
            robot_count: spawns.len(),
            robot_spawns: spawns,
            patrol,
            detection_radius: 15.0,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        for w in &self.walls {
            if !(w.min.x < w.max.x && w.min.y < w.max.y && w.min.z < w.max.z) {
                return Err(SceneError::InvalidArena("wall min must be < max"));
            }
        }
        if self.robot_count == 0 || self.robot_count > self.robot_spawns.len() {
            return Err(SceneError::InvalidArena("robot_count must be in 1..=robot_spawns.len()"));
        }
        for (i, spawn) in self.robot_spawns.iter().enumerate().take(self.robot_count) {
            if !spawn.is_finite() {
                return Err(SceneError::InvalidArena("robot spawn not finite"));
            }
            if self.walls.iter().any(|w| w.contains_xy(spawn.position, ROBOT_HALF_WIDTH)) {
                return Err(SceneError::SpawnInsideWall { robot: i });
            }
        }
        if self.patrol.len() < 3 {
            return Err(SceneError::InvalidArena("patrol needs at least 3 vertices"));
        }
        if self.patrol.first() != self.patrol.last() {
            return Err(SceneError::InvalidArena("patrol must be closed (first == last)"));
        }
        for seg in self.patrol.windows(2) {
            if self.walls.iter().any(|w| w.blocks_segment_xy(seg[0], seg[1], 0.0)) {
                return Err(SceneError::InvalidArena("patrol segment passes through a wall"));
            }
        }
        if !(self.detection_radius > 0.0) {
            return Err(SceneError::InvalidArena("detection_radius must be positive"));
        }
        Ok(())
    }
}

/// Entity indices making up one robot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RobotEntities {
    pub body: usize,
    pub head: usize,
}

pub fn robot_body_shape() -> Shape {
    Shape::Box {
        min: Vec3::new(-ROBOT_HALF_WIDTH, -ROBOT_HALF_WIDTH, 0.0),
        max: Vec3::new(ROBOT_HALF_WIDTH, ROBOT_HALF_WIDTH, ROBOT_BODY_HEIGHT),
    }
}

pub fn robot_head_shape() -> Shape {
    Shape::Sphere {
        center: Vec3::new(0.0, 0.0, ROBOT_BODY_HEIGHT + ROBOT_HEAD_RADIUS),
        radius: ROBOT_HEAD_RADIUS,
    }
}

/// Builds the arena. Each robot contributes a `Robot` body box and a
/// `Decor` head sphere sharing its pose. Walls share one grey albedo.
pub fn build_fps_scene(spec: &ArenaSpec, _seed: u64) -> Result<(Scene, Vec<RobotEntities>), SceneError> {
    spec.validate()?;
    let mut scene = Scene::new(Vec3::new(-0.3, 0.45, 0.85), 0.7, 0.3, [0.62, 0.66, 0.72]);
    let mut id = 1u32;
    scene.push(
        Entity::new(id, Shape::Plane { height: 0.0 }, FLOOR_ALBEDO, Role::Ground)
            .with_pattern(Pattern::Checker { cell: 1.5, contrast: 0.35 }),
    );
    for w in &spec.walls {
        id += 1;
        scene.push(Entity::new(id, Shape::Box { min: w.min, max: w.max }, WALL_ALBEDO, Role::Wall));
    }
    let mut robots = Vec::with_capacity(spec.robot_count);
    for spawn in spec.robot_spawns.iter().take(spec.robot_count) {
        let pose = Pose::new(spawn.position, spawn.yaw(), 0.0, 0.0);
        id += 1;
        scene.push(Entity::new(id, robot_body_shape(), ROBOT_ALBEDO, Role::Robot).with_pose(pose));
        let body = scene.entities.len() - 1;
        id += 1;
        scene.push(Entity::new(id, robot_head_shape(), ROBOT_ALBEDO, Role::Decor).with_pose(pose));
        robots.push(RobotEntities { body, head: body + 1 });
    }
    scene.validate()?;
    Ok((scene, robots))
}
