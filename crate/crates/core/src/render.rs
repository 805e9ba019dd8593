//! Deterministic pinhole ray caster.
//!
//! One primary ray per pixel, Lambertian plus ambient shading, no
//! anti-aliasing. Besides color the renderer fills a depth buffer (ray
//! distance in meters), an entity-id buffer and an analytic motion buffer
//! obtained by re-projecting each hit point into the previous frame.

use alloc::vec::Vec;
use core::fmt;

use crate::math::{Pose, Vec3};
use crate::scene::{nearest_hit, Hit, Rgb, Scene};

#[derive(Clone, Debug, PartialEq)]
pub enum RenderError {
    InvalidFov(f64),
    InvalidResolution { width: usize, height: usize },
    InvalidAspect(f64),
    PixelOutOfRange { x: usize, y: usize },
    DimensionMismatch,
}

impl fmt::Display for RenderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RenderError::InvalidFov(v) => write!(f, "field of view {v} rad is outside (0, pi)"),
            RenderError::InvalidResolution { width, height } => {
                write!(f, "resolution {width}x{height} is below the 8x8 minimum")
            }
            RenderError::InvalidAspect(a) => write!(f, "aspect {a} must be positive"),
            RenderError::PixelOutOfRange { x, y } => write!(f, "pixel ({x}, {y}) is outside the image"),
            RenderError::DimensionMismatch => write!(f, "buffer dimensions differ"),
        }
    }
}

impl core::error::Error for RenderError {}

/// Pinhole camera looking down its local +X axis; image right is local -Y
/// and image up is local +Z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub pose: Pose,
    /// Horizontal field of view in radians.
    pub hfov: f64,
    /// Ratio of the horizontal to the vertical image-plane extent.
    pub aspect: f64,
    pub width: usize,
    pub height: usize,
}

/// Result of [`Camera::project`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Projection {
    /// Continuous image coordinates; pixel `(i, j)` has its center at
    /// `(i + 0.5, j + 0.5)`.
    Image { u: f64, v: f64 },
    Behind,
}

impl Camera {
    /// Camera with square pixels (`aspect = width / height`).
    pub fn new(pose: Pose, hfov: f64, width: usize, height: usize) -> Result<Camera, RenderError> {
        Camera::with_aspect(pose, hfov, width as f64 / height as f64, width, height)
    }

    pub fn with_aspect(
        pose: Pose,
        hfov: f64,
        aspect: f64,
        width: usize,
        height: usize,
    ) -> Result<Camera, RenderError> {
        if !(hfov > 0.0 && hfov < core::f64::consts::PI) {
            return Err(RenderError::InvalidFov(hfov));
        }
        if width < 8 || height < 8 {
            return Err(RenderError::InvalidResolution { width, height });
        }
        if !(aspect > 0.0 && aspect.is_finite()) {
            return Err(RenderError::InvalidAspect(aspect));
        }
        Ok(Camera { pose, hfov, aspect, width, height })
    }

    pub fn with_pose(&self, pose: Pose) -> Camera {
        Camera { pose, ..*self }
    }

    pub fn tan_half_h(&self) -> f64 {
        libm::tan(0.5 * self.hfov)
    }

    pub fn tan_half_v(&self) -> f64 {
        self.tan_half_h() / self.aspect
    }

    pub fn vfov(&self) -> f64 {
        2.0 * libm::atan(self.tan_half_v())
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Unnormalized camera-frame direction through continuous image
    /// coordinates `(u, v)`.
    pub fn local_direction(&self, u: f64, v: f64) -> Vec3 {
        let x = 2.0 * u / self.width as f64 - 1.0;
        let y = 1.0 - 2.0 * v / self.height as f64;
        Vec3::new(1.0, -x * self.tan_half_h(), y * self.tan_half_v())
    }

    /// World ray through continuous image coordinates.
    pub fn ray_through(&self, u: f64, v: f64) -> (Vec3, Vec3) {
        let d = self.local_direction(u, v).normalized();
        (self.pose.position, self.pose.transform_dir(d))
    }

    /// World ray through the center of pixel `(x, y)`.
    pub fn camera_ray(&self, x: usize, y: usize) -> Result<(Vec3, Vec3), RenderError> {
        if x >= self.width || y >= self.height {
            return Err(RenderError::PixelOutOfRange { x, y });
        }
        Ok(self.ray_through(x as f64 + 0.5, y as f64 + 0.5))
    }

    pub fn project(&self, point: Vec3) -> Projection {
        let p = self.pose.inverse_transform_point(point);
        if p.x <= 0.0 {
            return Projection::Behind;
        }
        let x = (-p.y / p.x) / self.tan_half_h();
        let y = (p.z / p.x) / self.tan_half_v();
        Projection::Image {
            u: 0.5 * (x + 1.0) * self.width as f64,
            v: 0.5 * (1.0 - y) * self.height as f64,
        }
    }
}

/// State of the previous tick needed for the motion buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct PrevFrame {
    pub camera: Pose,
    /// Entity poses, index-aligned with `Scene::entities`.
    pub entity_poses: Vec<Pose>,
}

impl PrevFrame {
    pub fn capture(scene: &Scene, camera: Pose) -> PrevFrame {
        PrevFrame {
            camera,
            entity_poses: scene.entities.iter().map(|e| e.pose).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameBundle {
    pub width: usize,
    pub height: usize,
    pub color: Vec<[u8; 3]>,
    /// Meters; `+inf` where nothing was hit.
    pub depth: Vec<f32>,
    /// 0 means no entity.
    pub entity_id: Vec<u32>,
    /// Image-space displacement since the previous tick, pixels.
    pub motion: Vec<[f32; 2]>,
}

impl FrameBundle {
    pub fn from_samples(width: usize, height: usize, rows: Vec<Vec<Sample>>) -> FrameBundle {
        let n = width * height;
        let mut fb = FrameBundle {
            width,
            height,
            color: Vec::with_capacity(n),
            depth: Vec::with_capacity(n),
            entity_id: Vec::with_capacity(n),
            motion: Vec::with_capacity(n),
        };
        for s in rows.into_iter().flatten() {
            fb.color.push(s.color);
            fb.depth.push(s.depth);
            fb.entity_id.push(s.entity_id);
            fb.motion.push(s.motion);
        }
        debug_assert_eq!(fb.color.len(), n);
        fb
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Rec. 601 luma in `[0, 1]`.
    pub fn luminance(&self) -> Vec<f32> {
        self.color
            .iter()
            .map(|c| (0.299 * c[0] as f32 + 0.587 * c[1] as f32 + 0.114 * c[2] as f32) / 255.0)
            .collect()
    }

    /// Raw RGB bytes, row-major.
    pub fn color_bytes(&self) -> Vec<u8> {
        self.color.iter().flat_map(|c| c.iter().copied()).collect()
    }
}

/// One shaded pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub color: [u8; 3],
    pub depth: f32,
    pub entity_id: u32,
    pub motion: [f32; 2],
}

/// Runs per-row jobs. Implementations may parallelize; rows are pure and
/// results must be returned in row order.
pub trait RowExecutor: Sync {
    fn map_rows(&self, rows: usize, job: &(dyn Fn(usize) -> Vec<Sample> + Sync)) -> Vec<Vec<Sample>>;
}

/// Single-threaded executor.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl RowExecutor for Sequential {
    fn map_rows(&self, rows: usize, job: &(dyn Fn(usize) -> Vec<Sample> + Sync)) -> Vec<Vec<Sample>> {
        (0..rows).map(job).collect()
    }
}

/// Clamps to `[0, 1]` and quantizes with round-half-up.
pub fn quantize(v: f64) -> u8 {
    let c = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    libm::floor(c * 255.0 + 0.5) as u8
}

pub fn quantize_rgb(c: Rgb) -> [u8; 3] {
    [quantize(c[0]), quantize(c[1]), quantize(c[2])]
}

fn angle_between(a: Vec3, b: Vec3) -> f64 {
    libm::atan2(a.cross(b).length(), a.dot(b))
}

/// Whether a bounding sphere (world space) may reach inside the cone of
/// half-angle `cone` around camera-frame direction `axis`.
fn sphere_meets_cone(camera: &Camera, axis: Vec3, cone: f64, c: Vec3, r: f64) -> bool {
    let p = camera.pose.inverse_transform_point(c);
    let dist = p.length();
    if dist <= r * 1.0001 + 1e-9 {
        return true;
    }
    let spread = libm::asin((r / dist).min(1.0));
    angle_between(p, axis) - spread <= cone + 1e-9
}

pub(crate) const TILE: usize = 16;

/// Per-tile candidate lists: for each `TILE`x`TILE` block of pixels, the
/// entities whose bounds may intersect the cone circumscribing the block's
/// rays. Never drops an entity a ray in the block could hit.
pub(crate) struct TileCandidates {
    cols: usize,
    lists: Vec<Vec<usize>>,
}

impl TileCandidates {
    pub(crate) fn new(scene: &Scene, camera: &Camera) -> TileCandidates {
        let cols = camera.width.div_ceil(TILE);
        let rows = camera.height.div_ceil(TILE);
        let live: Vec<(usize, Option<(Vec3, f64)>)> = scene
            .entities
            .iter()
            .enumerate()
            .filter(|(_, e)| e.alive)
            .map(|(i, e)| (i, e.bounding_sphere()))
            .collect();
        let mut lists = Vec::with_capacity(cols * rows);
        for ty in 0..rows {
            for tx in 0..cols {
                let (u0, u1) = ((tx * TILE) as f64, ((tx + 1) * TILE).min(camera.width) as f64);
                let (v0, v1) = ((ty * TILE) as f64, ((ty + 1) * TILE).min(camera.height) as f64);
                let axis = camera.local_direction(0.5 * (u0 + u1), 0.5 * (v0 + v1));
                let cone = [(u0, v0), (u1, v0), (u0, v1), (u1, v1)]
                    .iter()
                    .map(|&(u, v)| angle_between(axis, camera.local_direction(u, v)))
                    .fold(0.0, f64::max);
                lists.push(
                    live.iter()
                        .filter(|(_, b)| b.map_or(true, |(c, r)| sphere_meets_cone(camera, axis, cone, c, r)))
                        .map(|(i, _)| *i)
                        .collect(),
                );
            }
        }
        TileCandidates { cols, lists }
    }

    pub(crate) fn at(&self, x: usize, y: usize) -> &[usize] {
        &self.lists[(y / TILE) * self.cols + x / TILE]
    }
}

/// Lambert + ambient at a hit, before quantization.
pub(crate) fn shade(scene: &Scene, hit: &Hit, dir: Vec3, pixel_angle: f64) -> Rgb {
    let e = &scene.entities[hit.entity_index];
    let cos_view = hit.normal.dot(dir).abs().max(0.05);
    let footprint = hit.t * pixel_angle / cos_view;
    let pattern = e.pattern.factor(hit.point, footprint);
    let lambert = hit.normal.dot(scene.light.direction).max(0.0) * scene.light.intensity;
    let k = pattern * (scene.ambient + lambert);
    [e.albedo[0] * k, e.albedo[1] * k, e.albedo[2] * k]
}

/// Image displacement of a world hit point relative to the previous tick.
pub(crate) fn world_motion(scene: &Scene, camera: &Camera, prev: Option<&PrevFrame>, hit: &Hit, u: f64, v: f64) -> [f32; 2] {
    let Some(prev) = prev else {
        return [0.0, 0.0];
    };
    let e = &scene.entities[hit.entity_index];
    let prev_pose = prev.entity_poses.get(hit.entity_index).copied().unwrap_or(e.pose);
    let prev_point = if prev_pose == e.pose {
        hit.point
    } else {
        prev_pose.transform_point(e.pose.inverse_transform_point(hit.point))
    };
    displacement(camera, prev.camera, prev_point, u, v)
}

pub(crate) fn displacement(camera: &Camera, prev_camera: Pose, prev_point: Vec3, u: f64, v: f64) -> [f32; 2] {
    match camera.with_pose(prev_camera).project(prev_point) {
        Projection::Image { u: pu, v: pv } => [(u - pu) as f32, (v - pv) as f32],
        Projection::Behind => [0.0, 0.0],
    }
}

/// Angular size of one pixel at the image center, radians.
pub(crate) fn pixel_angle(camera: &Camera) -> f64 {
    2.0 * camera.tan_half_h() / camera.width as f64
}

pub(crate) fn trace_pixel(
    scene: &Scene,
    candidates: &[usize],
    camera: &Camera,
    prev: Option<&PrevFrame>,
    x: usize,
    y: usize,
) -> (Sample, Option<Hit>) {
    let (u, v) = (x as f64 + 0.5, y as f64 + 0.5);
    let (origin, dir) = camera.ray_through(u, v);
    match nearest_hit(scene, candidates.iter().copied(), origin, dir, f64::INFINITY, |_| true) {
        None => (
            Sample {
                color: quantize_rgb(scene.background),
                depth: f32::INFINITY,
                entity_id: 0,
                motion: [0.0, 0.0],
            },
            None,
        ),
        Some(hit) => {
            let color = quantize_rgb(shade(scene, &hit, dir, pixel_angle(camera)));
            let sample = Sample {
                color,
                depth: hit.t as f32,
                entity_id: hit.entity_id,
                motion: world_motion(scene, camera, prev, &hit, u, v),
            };
            (sample, Some(hit))
        }
    }
}

pub fn render(scene: &Scene, camera: &Camera, prev: Option<&PrevFrame>) -> FrameBundle {
    render_with(&Sequential, scene, camera, prev)
}

pub fn render_with(
    exec: &dyn RowExecutor,
    scene: &Scene,
    camera: &Camera,
    prev: Option<&PrevFrame>,
) -> FrameBundle {
    let tiles = TileCandidates::new(scene, camera);
    let job = |y: usize| -> Vec<Sample> {
        (0..camera.width)
            .map(|x| trace_pixel(scene, tiles.at(x, y), camera, prev, x, y).0)
            .collect()
    };
    FrameBundle::from_samples(camera.width, camera.height, exec.map_rows(camera.height, &job))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rad;
    use crate::scene::{Entity, Pattern, Role, Shape};

    fn cam(w: usize, h: usize) -> Camera {
        Camera::new(Pose::at(Vec3::new(0.0, 0.0, 1.5)), rad(90.0), w, h).unwrap()
    }

    #[test]
    fn center_pixel_is_forward_axis() {
        let c = Camera::new(Pose::IDENTITY, rad(90.0), 321, 241).unwrap();
        let (_, d) = c.camera_ray(160, 120).unwrap();
        assert_eq!(d.x, 1.0);
        assert_eq!(d.y, 0.0);
        assert_eq!(d.z, 0.0);
    }

    #[test]
    fn rightmost_pixel_angle() {
        let w = 321;
        let c = Camera::new(Pose::IDENTITY, rad(90.0), w, 241).unwrap();
        let (_, d) = c.camera_ray(w - 1, 120).unwrap();
        // The last pixel center sits at normalized x = 1 - 1/w on the image plane.
        let expected = libm::atan(1.0 - 1.0 / w as f64);
        let angle = libm::atan2(-d.y, d.x);
        assert!((angle - expected).abs() < 1e-14);
        assert!(d.z.abs() < 1e-15);
    }

    #[test]
    fn pixel_out_of_range() {
        let c = cam(16, 12);
        assert_eq!(c.camera_ray(16, 0), Err(RenderError::PixelOutOfRange { x: 16, y: 0 }));
        assert_eq!(c.camera_ray(0, 12), Err(RenderError::PixelOutOfRange { x: 0, y: 12 }));
    }

    #[test]
    fn camera_validation() {
        assert!(matches!(Camera::new(Pose::IDENTITY, 0.0, 32, 32), Err(RenderError::InvalidFov(_))));
        assert!(matches!(
            Camera::new(Pose::IDENTITY, core::f64::consts::PI, 32, 32),
            Err(RenderError::InvalidFov(_))
        ));
        assert!(matches!(
            Camera::new(Pose::IDENTITY, 1.0, 7, 32),
            Err(RenderError::InvalidResolution { .. })
        ));
    }

    #[test]
    fn project_basics() {
        let c = cam(320, 240);
        assert_eq!(
            c.project(Vec3::new(10.0, 0.0, 1.5)),
            Projection::Image { u: 160.0, v: 120.0 }
        );
        assert_eq!(c.project(Vec3::new(-1.0, 0.0, 1.5)), Projection::Behind);
        assert_eq!(c.project(Vec3::new(0.0, 3.0, 1.5)), Projection::Behind);
    }

    #[test]
    fn project_inverts_camera_ray() {
        let c = Camera::new(Pose::new(Vec3::new(1.0, -2.0, 3.0), 0.7, -0.2, 0.1), rad(75.0), 64, 48).unwrap();
        for (x, y) in [(0, 0), (63, 47), (10, 30), (32, 24)] {
            let (o, d) = c.camera_ray(x, y).unwrap();
            for t in [0.1, 1.0, 37.0, 1000.0] {
                match c.project(o + d * t) {
                    Projection::Image { u, v } => {
                        assert!((u - (x as f64 + 0.5)).abs() < 1e-6);
                        assert!((v - (y as f64 + 0.5)).abs() < 1e-6);
                    }
                    Projection::Behind => panic!("point in front projected as behind"),
                }
            }
        }
    }

    #[test]
    fn empty_scene_is_background() {
        let s = Scene::empty();
        let fb = render(&s, &cam(16, 12), None);
        let bg = quantize_rgb(s.background);
        assert!(fb.color.iter().all(|c| *c == bg));
        assert!(fb.depth.iter().all(|d| *d == f32::INFINITY));
        assert!(fb.entity_id.iter().all(|i| *i == 0));
    }

    #[test]
    fn quantize_round_half_up() {
        assert_eq!(quantize(0.5 / 255.0), 1);
        assert_eq!(quantize(-3.0), 0);
        assert_eq!(quantize(7.0), 255);
        assert_eq!(quantize(f64::NAN), 0);
        assert_eq!(quantize(1.0 / 255.0 * 0.49), 0);
    }

    #[test]
    fn frustum_culling_is_conservative() {
        let mut s = Scene::empty();
        let mut id = 1;
        for i in -6..=6 {
            for j in -6..=6 {
                let c = Vec3::new(i as f64 * 3.0, j as f64 * 3.0, 1.0);
                s.push(Entity::new(id, Shape::Sphere { center: c, radius: 0.8 }, [0.8, 0.3, 0.2], Role::Decor));
                id += 1;
            }
        }
        s.push(Entity::new(id, Shape::Plane { height: 0.0 }, [0.4; 3], Role::Ground)
            .with_pattern(Pattern::Checker { cell: 1.0, contrast: 0.4 }));
        s.push(Entity::new(id + 1, Shape::Box { min: Vec3::new(4.0, -1.0, 0.0), max: Vec3::new(5.0, 1.0, 3.0) }, [0.2, 0.6, 0.2], Role::Decor));
        s.push(Entity::new(id + 2, Shape::Quad { corners: [
            Vec3::new(1.0, -0.3, 1.0), Vec3::new(1.0, 0.3, 1.0), Vec3::new(1.0, 0.3, 1.5), Vec3::new(1.0, -0.3, 1.5),
        ] }, [0.9; 3], Role::Decor));
        let all: Vec<usize> = (0..s.entities.len()).collect();
        for (pose, fov, w, h) in [
            (Pose::new(Vec3::new(0.5, 0.2, 1.3), 0.4, -0.1, 0.0), 90.0, 64, 48),
            (Pose::new(Vec3::new(-2.0, 1.0, 2.5), -2.1, 0.6, 0.3), 120.0, 50, 37),
            (Pose::new(Vec3::new(3.0, 0.0, 1.0), 0.0, 0.0, 0.0), 40.0, 33, 70),
        ] {
            let camera = Camera::new(pose, rad(fov), w, h).unwrap();
            let fast = render(&s, &camera, None);
            for y in 0..camera.height {
                for x in 0..camera.width {
                    let (slow, _) = trace_pixel(&s, &all, &camera, None, x, y);
                    let i = fast.index(x, y);
                    assert_eq!(slow.color, fast.color[i]);
                    assert_eq!(slow.entity_id, fast.entity_id[i]);
                }
            }
        }
    }
}
