//! Four body-anchored view panels composited into the head view.
//!
//! Each panel is a borderless textured quad at distance `d` from the eye,
//! facing one cardinal direction of the anchor frame. Its texture is a
//! render of the world from the eye through a frustum that exactly
//! subtends the quad, so a panel viewed head-on is see-through.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::math::{Pose, Rotation, Vec3};
use crate::render::{
    displacement, TileCandidates, quantize, render_with, trace_pixel, Camera, FrameBundle, PrevFrame,
    RenderError, RowExecutor, Sample, Sequential,
};
use crate::scene::{Entity, Role, Scene, Shape, RESERVED_ID_BASE, T_EPSILON};

#[derive(Clone, Debug, PartialEq)]
pub enum CockpitError {
    InvalidCoverage(f64),
    InvalidDistance(f64),
    /// The snapped capture texture would be smaller than the renderer minimum.
    CaptureTooSmall { width: usize, height: usize },
    /// Panels this wide would intersect their neighbours.
    PanelsOverlap,
    Render(RenderError),
}

impl fmt::Display for CockpitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CockpitError::InvalidCoverage(c) => write!(f, "coverage {c} must lie in (0, 1)"),
            CockpitError::InvalidDistance(d) => write!(f, "panel distance {d} must be positive"),
            CockpitError::CaptureTooSmall { width, height } => {
                write!(f, "capture texture {width}x{height} is below the 8x8 minimum")
            }
            CockpitError::PanelsOverlap => write!(f, "panel half-width reaches 45 degrees; panels would overlap"),
            CockpitError::Render(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for CockpitError {}

impl From<RenderError> for CockpitError {
    fn from(e: RenderError) -> Self {
        CockpitError::Render(e)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// Panels follow the body position and yaw only.
    #[default]
    Body,
    /// Panels follow the full head pose (head-synced variant).
    Head,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cardinal {
    Front,
    Left,
    Back,
    Right,
}

impl Cardinal {
    pub const ALL: [Cardinal; 4] = [Cardinal::Front, Cardinal::Left, Cardinal::Back, Cardinal::Right];

    /// Counter-clockwise quarter turns from the anchor's forward axis.
    pub fn quarter_turns(self) -> i32 {
        match self {
            Cardinal::Front => 0,
            Cardinal::Left => 1,
            Cardinal::Back => 2,
            Cardinal::Right => 3,
        }
    }

    pub fn rotation(self) -> Rotation {
        Rotation::quarter_turns(self.quarter_turns())
    }

    pub fn yaw(self) -> f64 {
        self.quarter_turns() as f64 * core::f64::consts::FRAC_PI_2
    }

    /// Unit direction in the anchor frame.
    pub fn direction(self) -> Vec3 {
        self.rotation().forward()
    }

    pub fn name(self) -> &'static str {
        match self {
            Cardinal::Front => "front",
            Cardinal::Left => "left",
            Cardinal::Back => "back",
            Cardinal::Right => "right",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CockpitConfig {
    /// Fraction of the viewport area one panel covers when faced head-on.
    #[serde(default = "default_coverage")]
    pub coverage: f64,
    /// Eye-to-panel distance in meters.
    #[serde(default = "default_distance")]
    pub distance: f64,
    #[serde(default)]
    pub anchor: Anchor,
    /// Capture texture size; `None` matches the panel's on-screen footprint.
    #[serde(default)]
    pub capture_resolution: Option<[usize; 2]>,
    #[serde(default = "default_enabled")]
    pub enabled: Vec<Cardinal>,
}

fn default_coverage() -> f64 {
    0.30
}

fn default_distance() -> f64 {
    1.0
}

fn default_enabled() -> Vec<Cardinal> {
    Cardinal::ALL.to_vec()
}

impl Default for CockpitConfig {
    fn default() -> Self {
        CockpitConfig {
            coverage: default_coverage(),
            distance: default_distance(),
            anchor: Anchor::Body,
            capture_resolution: None,
            enabled: default_enabled(),
        }
    }
}

impl CockpitConfig {
    pub fn validate(&self) -> Result<(), CockpitError> {
        if !(self.coverage > 0.0 && self.coverage < 1.0) {
            return Err(CockpitError::InvalidCoverage(self.coverage));
        }
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(CockpitError::InvalidDistance(self.distance));
        }
        if let Some([w, h]) = self.capture_resolution {
            if w < 8 || h < 8 {
                return Err(CockpitError::CaptureTooSmall { width: w, height: h });
            }
        }
        Ok(())
    }
}

/// Half-extents `(alpha, beta)` of a panel covering area fraction `c` of a
/// view with full fields of view `hfov` x `vfov`.
pub fn frame_angular_extents(c: f64, hfov: f64, vfov: f64) -> Result<(f64, f64), CockpitError> {
    if !(c > 0.0 && c < 1.0) {
        return Err(CockpitError::InvalidCoverage(c));
    }
    let k = libm::sqrt(c);
    Ok((libm::atan(k * libm::tan(0.5 * hfov)), libm::atan(k * libm::tan(0.5 * vfov))))
}

/// Nearest integer to `n * sqrt(c)` sharing the parity of `n`.
fn snapped_span(n: usize, c: f64) -> usize {
    let parity = (n % 2) as f64;
    let half = libm::round((n as f64 * libm::sqrt(c) - parity) / 2.0).max(0.0);
    2 * half as usize + n % 2
}

/// Panel footprint snapped to the head camera's pixel grid.
///
/// Returns `(tan alpha, tan beta, width, height)`. The panel edges fall on
/// pixel boundaries of a head-on view, so each head pixel maps onto the
/// center of one capture texel.
pub fn matched_footprint(c: f64, head: &Camera) -> Result<(f64, f64, usize, usize), CockpitError> {
    if !(c > 0.0 && c < 1.0) {
        return Err(CockpitError::InvalidCoverage(c));
    }
    let w = snapped_span(head.width, c);
    let h = snapped_span(head.height, c);
    if w < 8 || h < 8 {
        return Err(CockpitError::CaptureTooSmall { width: w, height: h });
    }
    let tan_a = w as f64 / head.width as f64 * head.tan_half_h();
    let tan_b = h as f64 / head.height as f64 * head.tan_half_v();
    Ok((tan_a, tan_b, w, h))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FramePanel {
    pub cardinal: Cardinal,
    pub entity_id: u32,
    /// Corners in the anchor frame, counter-clockwise seen from the eye.
    pub corners: [Vec3; 4],
    /// Horizontal and vertical angular half-extents, radians.
    pub alpha: f64,
    pub beta: f64,
    pub distance: f64,
    half_width: f64,
    half_height: f64,
}

impl FramePanel {
    fn new(cardinal: Cardinal, distance: f64, tan_a: f64, tan_b: f64) -> FramePanel {
        let (hw, hh) = (distance * tan_a, distance * tan_b);
        let r = cardinal.rotation();
        let local = [
            Vec3::new(distance, hw, -hh),
            Vec3::new(distance, -hw, -hh),
            Vec3::new(distance, -hw, hh),
            Vec3::new(distance, hw, hh),
        ];
        FramePanel {
            cardinal,
            entity_id: RESERVED_ID_BASE + cardinal.quarter_turns() as u32,
            corners: local.map(|p| r.rotate(p)),
            alpha: libm::atan(tan_a),
            beta: libm::atan(tan_b),
            distance,
            half_width: hw,
            half_height: hh,
        }
    }

    /// Panel frame: origin at the eye, +X through the panel center.
    pub fn frame(&self, anchor: &Pose) -> Pose {
        anchor.compose(&Pose::from_parts(Vec3::ZERO, self.cardinal.rotation()))
    }

    /// The quad as a scene entity at the given anchor pose.
    pub fn to_entity(&self, anchor: &Pose) -> Entity {
        Entity::new(self.entity_id, Shape::Quad { corners: self.corners }, [1.0, 1.0, 1.0], Role::CockpitPanel)
            .with_pose(*anchor)
    }

    /// Ray parameter and panel-frame hit point, if the ray meets the quad.
    fn intersect(&self, frame: &Pose, origin: Vec3, dir: Vec3) -> Option<(f64, Vec3)> {
        let o = frame.inverse_transform_point(origin);
        let d = frame.inverse_transform_dir(dir);
        if d.x <= 0.0 {
            return None;
        }
        let t = (self.distance - o.x) / d.x;
        if !(t > T_EPSILON) {
            return None;
        }
        let p = o + d * t;
        (p.y.abs() <= self.half_width && p.z.abs() <= self.half_height).then_some((t, p))
    }

    /// Continuous texture coordinates of a panel-frame point.
    fn texture_coords(&self, p: Vec3, width: usize, height: usize) -> (f64, f64) {
        let x = -p.y / self.half_width;
        let y = p.z / self.half_height;
        (0.5 * (x + 1.0) * width as f64, 0.5 * (1.0 - y) * height as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CockpitRig {
    pub config: CockpitConfig,
    pub panels: Vec<FramePanel>,
    /// Capture cameras in the anchor frame, one per panel.
    pub captures: Vec<Camera>,
}

pub fn make_cockpit_rig(config: &CockpitConfig, head_camera: &Camera) -> Result<CockpitRig, CockpitError> {
    config.validate()?;
    let (tan_a, tan_b, w, h) = matched_footprint(config.coverage, head_camera)?;
    if tan_a >= 1.0 {
        return Err(CockpitError::PanelsOverlap);
    }
    let [cw, ch] = config.capture_resolution.unwrap_or([w, h]);
    let mut enabled = config.enabled.clone();
    enabled.sort();
    enabled.dedup();
    let mut panels = Vec::with_capacity(enabled.len());
    let mut captures = Vec::with_capacity(enabled.len());
    for cardinal in enabled {
        let panel = FramePanel::new(cardinal, config.distance, tan_a, tan_b);
        let pose = Pose::from_parts(Vec3::ZERO, cardinal.rotation());
        captures.push(Camera::with_aspect(pose, 2.0 * panel.alpha, tan_a / tan_b, cw, ch)?);
        panels.push(panel);
    }
    Ok(CockpitRig { config: config.clone(), panels, captures })
}

impl CockpitRig {
    pub fn anchor_pose(&self, body: &Pose, head: &Pose) -> Pose {
        match self.config.anchor {
            Anchor::Body => Pose::new(body.position, body.yaw(), 0.0, 0.0),
            Anchor::Head => *head,
        }
    }

    /// World-space capture camera for panel `i`.
    pub fn capture_camera(&self, i: usize, anchor: &Pose) -> Camera {
        let c = &self.captures[i];
        c.with_pose(anchor.compose(&c.pose))
    }

    pub fn panel_index(&self, entity_id: u32) -> Option<usize> {
        self.panels.iter().position(|p| p.entity_id == entity_id)
    }
}

/// Previous-tick state for motion buffers of composed frames.
#[derive(Clone, Debug, PartialEq)]
pub struct CockpitPrev {
    pub body: Pose,
    pub head: Pose,
    pub entity_poses: Vec<Pose>,
}

impl CockpitPrev {
    pub fn capture(scene: &Scene, body: Pose, head: Pose) -> CockpitPrev {
        CockpitPrev {
            body,
            head,
            entity_poses: scene.entities.iter().map(|e| e.pose).collect(),
        }
    }
}

/// Renders every panel texture. `prev.camera`, when given, holds the
/// previous anchor pose.
pub fn capture_views(scene: &Scene, anchor: &Pose, rig: &CockpitRig, prev: Option<&PrevFrame>) -> Vec<FrameBundle> {
    capture_views_with(&Sequential, scene, anchor, rig, prev)
}

pub fn capture_views_with(
    exec: &dyn RowExecutor,
    scene: &Scene,
    anchor: &Pose,
    rig: &CockpitRig,
    prev: Option<&PrevFrame>,
) -> Vec<FrameBundle> {
    debug_assert!(scene.entities.iter().all(|e| e.role != Role::CockpitPanel));
    (0..rig.panels.len())
        .map(|i| {
            let camera = rig.capture_camera(i, anchor);
            let prev_i = prev.map(|p| PrevFrame {
                camera: p.camera.compose(&rig.captures[i].pose),
                entity_poses: p.entity_poses.clone(),
            });
            render_with(exec, scene, &camera, prev_i.as_ref())
        })
        .collect()
}

/// Clamp-to-edge bilinear lookup at continuous coordinates (texel centers
/// at `i + 0.5`).
pub fn sample_bilinear(tex: &FrameBundle, u: f64, v: f64) -> [u8; 3] {
    let x = u - 0.5;
    let y = v - 0.5;
    let x0 = libm::floor(x);
    let y0 = libm::floor(y);
    let fx = x - x0;
    let fy = y - y0;
    let clamp = |i: f64, n: usize| -> usize { (i.max(0.0) as usize).min(n - 1) };
    let (xa, xb) = (clamp(x0, tex.width), clamp(x0 + 1.0, tex.width));
    let (ya, yb) = (clamp(y0, tex.height), clamp(y0 + 1.0, tex.height));
    let c00 = tex.color[tex.index(xa, ya)];
    let c10 = tex.color[tex.index(xb, ya)];
    let c01 = tex.color[tex.index(xa, yb)];
    let c11 = tex.color[tex.index(xb, yb)];
    let mut out = [0u8; 3];
    for k in 0..3 {
        let top = c00[k] as f64 * (1.0 - fx) + c10[k] as f64 * fx;
        let bottom = c01[k] as f64 * (1.0 - fx) + c11[k] as f64 * fx;
        out[k] = quantize((top * (1.0 - fy) + bottom * fy) / 255.0);
    }
    out
}

/// A composed head view together with the panel textures it used.
#[derive(Clone, Debug, PartialEq)]
pub struct Composite {
    pub frame: FrameBundle,
    pub captures: Vec<FrameBundle>,
}

pub fn compose(
    scene: &Scene,
    body: &Pose,
    head: &Pose,
    rig: &CockpitRig,
    head_camera: &Camera,
    prev: Option<&CockpitPrev>,
) -> FrameBundle {
    compose_with(&Sequential, scene, body, head, rig, head_camera, prev).frame
}

/// Captures the panel textures, then renders the head view with the
/// panels depth-tested against the world.
pub fn compose_with(
    exec: &dyn RowExecutor,
    scene: &Scene,
    body: &Pose,
    head: &Pose,
    rig: &CockpitRig,
    head_camera: &Camera,
    prev: Option<&CockpitPrev>,
) -> Composite {
    let anchor = rig.anchor_pose(body, head);
    let capture_prev = prev.map(|p| PrevFrame {
        camera: rig.anchor_pose(&p.body, &p.head),
        entity_poses: p.entity_poses.clone(),
    });
    let captures = capture_views_with(exec, scene, &anchor, rig, capture_prev.as_ref());
    let frame = compose_from(exec, scene, body, head, rig, head_camera, prev, &captures);
    Composite { frame, captures }
}

/// Head view using already captured panel textures.
#[allow(clippy::too_many_arguments)]
pub fn compose_from(
    exec: &dyn RowExecutor,
    scene: &Scene,
    body: &Pose,
    head: &Pose,
    rig: &CockpitRig,
    head_camera: &Camera,
    prev: Option<&CockpitPrev>,
    captures: &[FrameBundle],
) -> FrameBundle {
    let camera = head_camera.with_pose(*head);
    let anchor = rig.anchor_pose(body, head);
    let frames: Vec<Pose> = rig.panels.iter().map(|p| p.frame(&anchor)).collect();
    let prev_frames: Option<Vec<Pose>> = prev.map(|p| {
        let a = rig.anchor_pose(&p.body, &p.head);
        rig.panels.iter().map(|panel| panel.frame(&a)).collect()
    });
    let world_prev = prev.map(|p| PrevFrame { camera: p.head, entity_poses: p.entity_poses.clone() });
    let tiles = TileCandidates::new(scene, &camera);
    let job = |y: usize| -> Vec<Sample> {
        (0..camera.width)
            .map(|x| {
                let (sample, hit) = trace_pixel(scene, tiles.at(x, y), &camera, world_prev.as_ref(), x, y);
                let t_world = hit.map_or(f64::INFINITY, |h| h.t);
                let (u, v) = (x as f64 + 0.5, y as f64 + 0.5);
                let (origin, dir) = camera.ray_through(u, v);
                let mut best: Option<(usize, f64, Vec3)> = None;
                for (i, panel) in rig.panels.iter().enumerate() {
                    if let Some((t, p)) = panel.intersect(&frames[i], origin, dir) {
                        if t < t_world && best.map_or(true, |b| t < b.1) {
                            best = Some((i, t, p));
                        }
                    }
                }
                let Some((i, _, p)) = best else {
                    return sample;
                };
                let panel = &rig.panels[i];
                let tex = &captures[i];
                let (tu, tv) = panel.texture_coords(p, tex.width, tex.height);
                let motion = match (&prev, &prev_frames) {
                    (Some(prev), Some(pf)) => displacement(&camera, prev.head, pf[i].transform_point(p), u, v),
                    _ => [0.0, 0.0],
                };
                Sample {
                    color: sample_bilinear(tex, tu, tv),
                    depth: panel.distance as f32,
                    entity_id: panel.entity_id,
                    motion,
                }
            })
            .collect()
    };
    FrameBundle::from_samples(camera.width, camera.height, exec.map_rows(camera.height, &job))
}

/// Binary image mask.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Mask {
        Mask { width, height, bits: alloc::vec![false; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }

    pub fn complement(&self) -> Mask {
        Mask { bits: self.bits.iter().map(|b| !b).collect(), ..*self }
    }
}

/// One mask per rig panel: pixels whose head ray meets that panel's quad.
/// Pure geometry; ignores the world.
pub fn panel_masks(head_camera: &Camera, body: &Pose, head: &Pose, rig: &CockpitRig) -> Vec<Mask> {
    let camera = head_camera.with_pose(*head);
    let anchor = rig.anchor_pose(body, head);
    rig.panels
        .iter()
        .map(|panel| {
            let frame = panel.frame(&anchor);
            let mut mask = Mask::new(camera.width, camera.height);
            for y in 0..camera.height {
                for x in 0..camera.width {
                    let (o, d) = camera.ray_through(x as f64 + 0.5, y as f64 + 0.5);
                    mask.bits[y * camera.width + x] = panel.intersect(&frame, o, d).is_some();
                }
            }
            mask
        })
        .collect()
}

/// Union of [`panel_masks`].
pub fn frame_region_mask(head_camera: &Camera, body: &Pose, head: &Pose, rig: &CockpitRig) -> Mask {
    let mut out = Mask::new(head_camera.width, head_camera.height);
    for m in panel_masks(head_camera, body, head, rig) {
        for (o, b) in out.bits.iter_mut().zip(m.bits) {
            *o |= b;
        }
    }
    out
}
