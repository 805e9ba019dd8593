//! World representation and analytic ray queries.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::math::{Pose, Vec3};

/// Rays never report hits closer than this, so surfaces do not self-hit.
pub const T_EPSILON: f64 = 1e-9;
/// Entity ids at or above this value are reserved for cockpit panels.
pub const RESERVED_ID_BASE: u32 = 0xFFFF_FF00;

pub type Rgb = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Coin,
    Barrier,
    Wall,
    Ground,
    Robot,
    CockpitPanel,
    Decor,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    /// Axis-aligned in the entity's local frame.
    Box { min: Vec3, max: Vec3 },
    /// Infinite horizontal plane `z = height` in the local frame.
    Plane { height: f64 },
    /// Planar convex quad; corners wind around the boundary.
    Quad { corners: [Vec3; 4] },
}

/// Surface albedo modulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    #[default]
    Flat,
    /// Smooth checkerboard in world XY with squares of side `cell`.
    ///
    /// The contrast fades with the pixel footprint so that distant ground
    /// does not alias at one sample per pixel.
    Checker { cell: f64, contrast: f64 },
}

impl Pattern {
    /// Albedo multiplier at `point`, where `footprint` is the size of one
    /// pixel on the surface in meters.
    pub fn factor(&self, point: Vec3, footprint: f64) -> f64 {
        match *self {
            Pattern::Flat => 1.0,
            Pattern::Checker { cell, contrast } => {
                let k = core::f64::consts::PI / cell;
                let wavelength = 2.0 * cell;
                let r = core::f64::consts::PI * footprint / wavelength;
                let fade = libm::exp(-2.0 * r * r);
                1.0 + contrast * fade * libm::sin(k * point.x) * libm::sin(k * point.y)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: u32,
    pub shape: Shape,
    pub albedo: Rgb,
    pub role: Role,
    #[serde(default)]
    pub pattern: Pattern,
    pub pose: Pose,
    pub alive: bool,
}

impl Entity {
    pub fn new(id: u32, shape: Shape, albedo: Rgb, role: Role) -> Entity {
        Entity {
            id,
            shape,
            albedo,
            role,
            pattern: Pattern::Flat,
            pose: Pose::IDENTITY,
            alive: true,
        }
    }

    pub fn with_pattern(mut self, pattern: Pattern) -> Entity {
        self.pattern = pattern;
        self
    }

    pub fn with_pose(mut self, pose: Pose) -> Entity {
        self.pose = pose;
        self
    }

    /// Nearest intersection `(t, world normal)` in `(T_EPSILON, t_max]`.
    /// The normal faces against the ray.
    pub fn intersect(&self, origin: Vec3, dir: Vec3, t_max: f64) -> Option<(f64, Vec3)> {
        let identity = self.pose == Pose::IDENTITY;
        let (o, d) = if identity {
            (origin, dir)
        } else {
            (
                self.pose.inverse_transform_point(origin),
                self.pose.inverse_transform_dir(dir),
            )
        };
        let (t, n) = intersect_local(&self.shape, o, d, t_max)?;
        let n = if identity { n } else { self.pose.transform_dir(n) };
        let n = if n.dot(dir) > 0.0 { -n } else { n };
        Some((t, n))
    }

    /// World-space bounding sphere, `None` for unbounded shapes.
    pub fn bounding_sphere(&self) -> Option<(Vec3, f64)> {
        let (c, r) = match self.shape {
            Shape::Sphere { center, radius } => (center, radius),
            Shape::Box { min, max } => ((min + max) * 0.5, (max - min).length() * 0.5),
            Shape::Quad { corners } => {
                let c = (corners[0] + corners[1] + corners[2] + corners[3]) * 0.25;
                let r = corners.iter().map(|p| p.distance(c)).fold(0.0, f64::max);
                (c, r)
            }
            Shape::Plane { .. } => return None,
        };
        Some((self.pose.transform_point(c), r))
    }

    /// Center of the shape in world coordinates.
    pub fn world_center(&self) -> Vec3 {
        match self.bounding_sphere() {
            Some((c, _)) => c,
            None => self.pose.position,
        }
    }
}

fn intersect_local(shape: &Shape, o: Vec3, d: Vec3, t_max: f64) -> Option<(f64, Vec3)> {
    match *shape {
        Shape::Sphere { center, radius } => {
            let oc = o - center;
            let a = d.length_squared();
            let b = oc.dot(d);
            let c = oc.length_squared() - radius * radius;
            let disc = b * b - a * c;
            if disc < 0.0 {
                return None;
            }
            let sq = libm::sqrt(disc);
            let mut t = (-b - sq) / a;
            if t <= T_EPSILON {
                t = (-b + sq) / a;
            }
            if t <= T_EPSILON || t > t_max {
                return None;
            }
            let p = o + d * t;
            Some((t, (p - center) / radius))
        }
        Shape::Box { min, max } => intersect_box(min, max, o, d, t_max),
        Shape::Plane { height } => {
            if d.z == 0.0 {
                return None;
            }
            let t = (height - o.z) / d.z;
            if t <= T_EPSILON || t > t_max {
                return None;
            }
            Some((t, Vec3::Z))
        }
        Shape::Quad { corners } => {
            let t = intersect_triangle(corners[0], corners[1], corners[2], o, d)
                .or_else(|| intersect_triangle(corners[0], corners[2], corners[3], o, d))?;
            if t <= T_EPSILON || t > t_max {
                return None;
            }
            let n = (corners[1] - corners[0]).cross(corners[3] - corners[0]).normalized();
            Some((t, n))
        }
    }
}

fn intersect_box(min: Vec3, max: Vec3, o: Vec3, d: Vec3, t_max: f64) -> Option<(f64, Vec3)> {
    let o = o.to_array();
    let d = d.to_array();
    let lo = min.to_array();
    let hi = max.to_array();
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut near_axis = 0;
    let mut far_axis = 0;
    for axis in 0..3 {
        if d[axis] == 0.0 {
            if o[axis] < lo[axis] || o[axis] > hi[axis] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[axis];
        let mut t0 = (lo[axis] - o[axis]) * inv;
        let mut t1 = (hi[axis] - o[axis]) * inv;
        if t0 > t1 {
            core::mem::swap(&mut t0, &mut t1);
        }
        if t0 > t_near {
            t_near = t0;
            near_axis = axis;
        }
        if t1 < t_far {
            t_far = t1;
            far_axis = axis;
        }
        if t_near > t_far {
            return None;
        }
    }
    let (t, axis) = if t_near > T_EPSILON {
        (t_near, near_axis)
    } else if t_far > T_EPSILON {
        (t_far, far_axis)
    } else {
        return None;
    };
    if t > t_max {
        return None;
    }
    let mut n = [0.0; 3];
    n[axis] = if d[axis] > 0.0 { -1.0 } else { 1.0 };
    Some((t, Vec3::new(n[0], n[1], n[2])))
}

/// Möller–Trumbore; returns the ray parameter of the hit.
fn intersect_triangle(a: Vec3, b: Vec3, c: Vec3, o: Vec3, d: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = d.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - a;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(q) * inv)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionalLight {
    /// Unit vector pointing from surfaces toward the light.
    pub direction: Vec3,
    pub intensity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub entities: Vec<Entity>,
    pub light: DirectionalLight,
    pub ambient: f64,
    pub background: Rgb,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub entity_id: u32,
    pub entity_index: usize,
    pub t: f64,
    pub point: Vec3,
    pub normal: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SceneError {
    NonFiniteRay,
    NonPositiveRange,
    DuplicateId(u32),
    InvalidShape { id: u32, reason: &'static str },
    InvalidLight,
    OpenCenterline,
    InvalidTrack(&'static str),
    SpawnInsideWall { robot: usize },
    InvalidArena(&'static str),
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneError::NonFiniteRay => write!(f, "ray origin or direction is not finite"),
            SceneError::NonPositiveRange => write!(f, "t_max must be positive"),
            SceneError::DuplicateId(id) => write!(f, "duplicate entity id {id}"),
            SceneError::InvalidShape { id, reason } => write!(f, "entity {id}: {reason}"),
            SceneError::InvalidLight => write!(f, "light direction must be a unit vector"),
            SceneError::OpenCenterline => {
                write!(f, "track centerline must be closed (first vertex == last vertex)")
            }
            SceneError::InvalidTrack(r) => write!(f, "invalid track: {r}"),
            SceneError::SpawnInsideWall { robot } => {
                write!(f, "robot {robot} spawns inside a wall")
            }
            SceneError::InvalidArena(r) => write!(f, "invalid arena: {r}"),
        }
    }
}

impl core::error::Error for SceneError {}

impl Scene {
    pub fn new(light_direction: Vec3, intensity: f64, ambient: f64, background: Rgb) -> Scene {
        Scene {
            entities: Vec::new(),
            light: DirectionalLight {
                direction: light_direction.normalized(),
                intensity,
            },
            ambient,
            background,
        }
    }

    pub fn empty() -> Scene {
        Scene::new(Vec3::new(0.3, 0.2, 1.0), 0.8, 0.25, [0.55, 0.7, 0.9])
    }

    pub fn push(&mut self, entity: Entity) {
        self.entities.push(entity);
    }

    pub fn next_id(&self) -> u32 {
        self.entities.iter().map(|e| e.id).max().unwrap_or(0) + 1
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.entities.iter().position(|e| e.id == id)
    }

    pub fn entity(&self, id: u32) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn entity_mut(&mut self, id: u32) -> Option<&mut Entity> {
        self.entities.iter_mut().find(|e| e.id == id)
    }

    pub fn count_alive(&self, role: Role) -> usize {
        self.entities.iter().filter(|e| e.role == role && e.alive).count()
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let mut ids = BTreeSet::new();
        for e in &self.entities {
            if e.id == 0 {
                return Err(SceneError::InvalidShape { id: 0, reason: "id 0 is reserved for 'none'" });
            }
            if e.id >= RESERVED_ID_BASE {
                return Err(SceneError::InvalidShape { id: e.id, reason: "id is in the reserved panel range" });
            }
            if !ids.insert(e.id) {
                return Err(SceneError::DuplicateId(e.id));
            }
            match e.shape {
                Shape::Sphere { radius, .. } if !(radius > 0.0) => {
                    return Err(SceneError::InvalidShape { id: e.id, reason: "sphere radius must be > 0" })
                }
                Shape::Box { min, max } if !(min.x < max.x && min.y < max.y && min.z < max.z) => {
                    return Err(SceneError::InvalidShape { id: e.id, reason: "box min must be < max" })
                }
                _ => {}
            }
            if !e.pose.is_finite() {
                return Err(SceneError::InvalidShape { id: e.id, reason: "pose not finite" });
            }
        }
        if (self.light.direction.length() - 1.0).abs() > 1e-9 {
            return Err(SceneError::InvalidLight);
        }
        Ok(())
    }
}

fn check_ray(origin: Vec3, dir: Vec3, t_max: f64) -> Result<(), SceneError> {
    if !origin.is_finite() || !dir.is_finite() || dir.length_squared() == 0.0 {
        return Err(SceneError::NonFiniteRay);
    }
    if !(t_max > 0.0) {
        return Err(SceneError::NonPositiveRange);
    }
    Ok(())
}

/// Nearest hit against alive entities.
pub fn query_ray(scene: &Scene, origin: Vec3, dir: Vec3, t_max: f64) -> Result<Option<Hit>, SceneError> {
    query_ray_filtered(scene, origin, dir, t_max, |_| true)
}

/// Like [`query_ray`], additionally skipping entities rejected by `keep`.
pub fn query_ray_filtered<F>(
    scene: &Scene,
    origin: Vec3,
    dir: Vec3,
    t_max: f64,
    keep: F,
) -> Result<Option<Hit>, SceneError>
where
    F: Fn(&Entity) -> bool,
{
    check_ray(origin, dir, t_max)?;
    Ok(nearest_hit(scene, 0..scene.entities.len(), origin, dir, t_max, keep))
}

/// Nearest hit restricted to the given entity indices. Ties keep the
/// earliest index so results do not depend on candidate order.
pub(crate) fn nearest_hit<I, F>(
    scene: &Scene,
    candidates: I,
    origin: Vec3,
    dir: Vec3,
    t_max: f64,
    keep: F,
) -> Option<Hit>
where
    I: IntoIterator<Item = usize>,
    F: Fn(&Entity) -> bool,
{
    let mut best: Option<(f64, usize, Vec3)> = None;
    let mut limit = t_max;
    for idx in candidates {
        let e = &scene.entities[idx];
        if !e.alive || !keep(e) {
            continue;
        }
        if let Some((t, n)) = e.intersect(origin, dir, limit) {
            let better = match best {
                None => true,
                Some((bt, bi, _)) => t < bt || (t == bt && idx < bi),
            };
            if better {
                best = Some((t, idx, n));
                limit = t;
            }
        }
    }
    best.map(|(t, idx, normal)| Hit {
        entity_id: scene.entities[idx].id,
        entity_index: idx,
        t,
        point: origin + dir * t,
        normal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ball(id: u32, center: Vec3, radius: f64) -> Entity {
        Entity::new(id, Shape::Sphere { center, radius }, [1.0; 3], Role::Decor)
    }

    #[test]
    fn ground_hit_straight_down() {
        let h = 2.5;
        let mut s = Scene::empty();
        s.push(Entity::new(1, Shape::Plane { height: h }, [0.5; 3], Role::Ground));
        let hit = query_ray(&s, Vec3::new(3.0, -1.0, h + 5.0), -Vec3::Z, 100.0).unwrap().unwrap();
        assert_eq!(hit.t, 5.0);
        assert_eq!(hit.entity_id, 1);
        assert_eq!(hit.normal, Vec3::Z);
    }

    #[test]
    fn unit_sphere_ten_ahead() {
        let mut s = Scene::empty();
        s.push(ball(7, Vec3::new(10.0, 0.0, 1.6), 1.0));
        let hit = query_ray(&s, Vec3::new(0.0, 0.0, 1.6), Vec3::X, 100.0).unwrap().unwrap();
        assert_eq!(hit.t, 9.0);
        assert_eq!(hit.normal, -Vec3::X);
    }

    #[test]
    fn pointing_away_misses() {
        let mut s = Scene::empty();
        s.push(ball(1, Vec3::new(10.0, 0.0, 0.0), 1.0));
        s.push(Entity::new(2, Shape::Plane { height: -1.0 }, [0.5; 3], Role::Ground));
        assert_eq!(query_ray(&s, Vec3::ZERO, Vec3::Z, 1e6).unwrap(), None);
    }

    #[test]
    fn t_max_limits_hits() {
        let mut s = Scene::empty();
        s.push(ball(1, Vec3::new(10.0, 0.0, 0.0), 1.0));
        assert_eq!(query_ray(&s, Vec3::ZERO, Vec3::X, 8.9).unwrap(), None);
        assert!(query_ray(&s, Vec3::ZERO, Vec3::X, 9.0).unwrap().is_some());
    }

    #[test]
    fn non_finite_rays_are_rejected() {
        let s = Scene::empty();
        assert_eq!(
            query_ray(&s, Vec3::new(f64::NAN, 0.0, 0.0), Vec3::X, 1.0),
            Err(SceneError::NonFiniteRay)
        );
        assert_eq!(
            query_ray(&s, Vec3::ZERO, Vec3::new(f64::INFINITY, 0.0, 0.0), 1.0),
            Err(SceneError::NonFiniteRay)
        );
        assert_eq!(query_ray(&s, Vec3::ZERO, Vec3::X, 0.0), Err(SceneError::NonPositiveRange));
    }

    #[test]
    fn box_and_posed_box() {
        let mut s = Scene::empty();
        let b = Entity::new(
            3,
            Shape::Box { min: Vec3::new(-1.0, -1.0, -1.0), max: Vec3::new(1.0, 1.0, 1.0) },
            [0.3; 3],
            Role::Wall,
        )
        .with_pose(Pose::new(Vec3::new(5.0, 0.0, 0.0), core::f64::consts::FRAC_PI_4, 0.0, 0.0));
        s.push(b);
        let hit = query_ray(&s, Vec3::ZERO, Vec3::X, 100.0).unwrap().unwrap();
        // A 45° turned unit cube presents its vertical edge at 5 - sqrt(2).
        assert!((hit.t - (5.0 - core::f64::consts::SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn quad_hit_inside_only() {
        let corners = [
            Vec3::new(2.0, 1.0, 1.0),
            Vec3::new(2.0, -1.0, 1.0),
            Vec3::new(2.0, -1.0, -1.0),
            Vec3::new(2.0, 1.0, -1.0),
        ];
        let mut s = Scene::empty();
        s.push(Entity::new(4, Shape::Quad { corners }, [1.0; 3], Role::CockpitPanel));
        let hit = query_ray(&s, Vec3::ZERO, Vec3::X, 10.0).unwrap().unwrap();
        assert_eq!(hit.t, 2.0);
        let off = Vec3::new(1.0, 0.6, 0.0).normalized();
        assert_eq!(query_ray(&s, Vec3::ZERO, off, 10.0).unwrap(), None);
    }

    #[test]
    fn dead_entities_are_skipped() {
        let mut s = Scene::empty();
        s.push(ball(1, Vec3::new(5.0, 0.0, 0.0), 1.0));
        s.push(ball(2, Vec3::new(10.0, 0.0, 0.0), 1.0));
        assert_eq!(query_ray(&s, Vec3::ZERO, Vec3::X, 100.0).unwrap().unwrap().entity_id, 1);
        s.entity_mut(1).unwrap().alive = false;
        assert_eq!(query_ray(&s, Vec3::ZERO, Vec3::X, 100.0).unwrap().unwrap().entity_id, 2);
    }

    #[test]
    fn validation_catches_bad_entities() {
        let mut s = Scene::empty();
        s.push(ball(1, Vec3::ZERO, 1.0));
        s.push(ball(1, Vec3::X, 1.0));
        assert_eq!(s.validate(), Err(SceneError::DuplicateId(1)));
        let mut s = Scene::empty();
        s.push(Entity::new(
            1,
            Shape::Box { min: Vec3::new(0.0, 0.0, 0.0), max: Vec3::new(1.0, -1.0, 1.0) },
            [1.0; 3],
            Role::Wall,
        ));
        assert!(matches!(s.validate(), Err(SceneError::InvalidShape { .. })));
    }

    fn random_scene() -> impl Strategy<Value = Scene> {
        let ent = (0u8..3, -8.0f64..8.0, -8.0f64..8.0, -8.0f64..8.0, 0.2f64..2.0, -1.0f64..1.0);
        proptest::collection::vec(ent, 1..12).prop_map(|specs| {
            let mut s = Scene::empty();
            for (i, (kind, x, y, z, size, yaw)) in specs.into_iter().enumerate() {
                let id = i as u32 + 1;
                let c = Vec3::new(x, y, z);
                let e = match kind {
                    0 => ball(id, c, size),
                    1 => Entity::new(
                        id,
                        Shape::Box { min: -Vec3::new(size, size * 0.5, size), max: Vec3::new(size, size * 0.5, size) },
                        [0.5; 3],
                        Role::Barrier,
                    )
                    .with_pose(Pose::new(c, yaw, 0.0, 0.0)),
                    _ => Entity::new(id, Shape::Plane { height: z }, [0.5; 3], Role::Ground),
                };
                s.push(e);
            }
            s
        })
    }

    proptest! {
        #[test]
        fn nearest_hit_matches_brute_force(
            scene in random_scene(),
            o in (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0),
            d in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        ) {
            let dir = Vec3::new(d.0, d.1, d.2);
            prop_assume!(dir.length() > 0.1);
            let dir = dir.normalized();
            let origin = Vec3::new(o.0, o.1, o.2);
            let hit = query_ray(&scene, origin, dir, 1e6).unwrap();
            let all: Vec<f64> = scene.entities.iter()
                .filter_map(|e| e.intersect(origin, dir, 1e6).map(|(t, _)| t))
                .collect();
            match hit {
                None => prop_assert!(all.is_empty()),
                Some(h) => {
                    for t in &all { prop_assert!(h.t <= *t); }
                    prop_assert_eq!(query_ray(&scene, origin, dir, 1e6).unwrap(), Some(h));
                }
            }
        }

        #[test]
        fn killed_entity_never_hit(
            scene in random_scene(),
            o in (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0),
            d in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        ) {
            let dir = Vec3::new(d.0, d.1, d.2);
            prop_assume!(dir.length() > 0.1);
            let dir = dir.normalized();
            let origin = Vec3::new(o.0, o.1, o.2);
            if let Some(h) = query_ray(&scene, origin, dir, 1e6).unwrap() {
                let mut s = scene.clone();
                s.entities[h.entity_index].alive = false;
                let again = query_ray(&s, origin, dir, 1e6).unwrap();
                prop_assert!(again.map_or(true, |h2| h2.entity_id != h.entity_id));
            }
        }
    }

    #[test]
    fn checker_fades_with_footprint() {
        let p = Pattern::Checker { cell: 1.0, contrast: 0.5 };
        let q = Vec3::new(0.5, 0.5, 0.0);
        assert!((p.factor(q, 0.0) - 1.5).abs() < 1e-12);
        assert!((p.factor(q, 10.0) - 1.0).abs() < 1e-6);
    }
}
