//! Image-space measurements on rendered frames: dense optical flow,
//! per-region flow speed and depth range, see-through fidelity and head
//! decoupling of the panel textures.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::cockpit::{compose, panel_masks, Cardinal, CockpitRig, Mask};
use crate::math::{deg, Pose};
use crate::render::{render, Camera, FrameBundle};
use crate::scene::Scene;

/// Window half-size of the Lucas-Kanade estimator (5x5 window).
pub const LK_RADIUS: usize = 2;
/// Minimum smaller eigenvalue of the structure tensor (luma in `[0, 1]`).
pub const LK_TAU: f64 = 1e-3;
pub const LK_ITERATIONS: usize = 5;
/// Pixels this close to the border have incomplete windows.
pub const LK_BORDER: usize = LK_RADIUS + 1;

#[derive(Clone, Debug, PartialEq)]
pub enum MetricsError {
    DimensionMismatch,
    /// World geometry nearer than the panel distance inside this panel.
    NearGeometry(Cardinal),
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::DimensionMismatch => write!(f, "frame dimensions differ"),
            MetricsError::NearGeometry(c) => {
                write!(f, "world geometry is nearer than the {} panel", c.name())
            }
        }
    }
}

impl core::error::Error for MetricsError {}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    /// Displacement since the previous frame, pixels (same convention as
    /// the renderer's motion buffer).
    pub flow: Vec<[f32; 2]>,
    pub valid: Vec<bool>,
}

impl FlowField {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

fn sample(img: &[f64], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = libm::floor(x);
    let y0 = libm::floor(y);
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as usize, y0 as usize);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let top = img[y0 * w + x0] * (1.0 - fx) + img[y0 * w + x1] * fx;
    let bottom = img[y1 * w + x0] * (1.0 - fx) + img[y1 * w + x1] * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Iterative single-level Lucas-Kanade on luma.
///
/// Gradients come from the current frame; each iteration re-warps the
/// previous frame by the running estimate.
pub fn estimate_flow(prev: &FrameBundle, curr: &FrameBundle) -> Result<FlowField, MetricsError> {
    if prev.width != curr.width || prev.height != curr.height {
        return Err(MetricsError::DimensionMismatch);
    }
    let (w, h) = (curr.width, curr.height);
    let luma = |f: &FrameBundle| -> Vec<f64> { f.luminance().into_iter().map(|v| v as f64).collect() };
    let i0 = luma(prev);
    let i1 = luma(curr);
    let mut gx = alloc::vec![0.0; w * h];
    let mut gy = alloc::vec![0.0; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w - 1 {
            let k = y * w + x;
            gx[k] = 0.5 * (i1[k + 1] - i1[k - 1]);
            gy[k] = 0.5 * (i1[k + w] - i1[k - w]);
        }
    }
    let mut out = FlowField {
        width: w,
        height: h,
        flow: alloc::vec![[0.0, 0.0]; w * h],
        valid: alloc::vec![false; w * h],
    };
    if w <= 2 * LK_BORDER || h <= 2 * LK_BORDER {
        return Ok(out);
    }
    let r = LK_RADIUS as isize;
    for y in LK_BORDER..h - LK_BORDER {
        for x in LK_BORDER..w - LK_BORDER {
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for dy in -r..=r {
                for dx in -r..=r {
                    let k = (y as isize + dy) as usize * w + (x as isize + dx) as usize;
                    sxx += gx[k] * gx[k];
                    sxy += gx[k] * gy[k];
                    syy += gy[k] * gy[k];
                }
            }
            let half_trace = 0.5 * (sxx + syy);
            let disc = libm::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
            if !(half_trace - disc > LK_TAU) {
                continue;
            }
            let det = sxx * syy - sxy * sxy;
            let (mut fx, mut fy) = (0.0f64, 0.0f64);
            for _ in 0..LK_ITERATIONS {
                let (mut bx, mut by) = (0.0, 0.0);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let px = x as isize + dx;
                        let py = y as isize + dy;
                        let k = py as usize * w + px as usize;
                        let warped = sample(&i0, w, h, px as f64 - fx, py as f64 - fy);
                        let diff = warped - i1[k];
                        bx += gx[k] * diff;
                        by += gy[k] * diff;
                    }
                }
                let ux = (syy * bx - sxy * by) / det;
                let uy = (sxx * by - sxy * bx) / det;
                fx += ux;
                fy += uy;
                if ux * ux + uy * uy < 1e-6 {
                    break;
                }
            }
            let k = y * w + x;
            if fx.is_finite() && fy.is_finite() {
                out.flow[k] = [fx as f32, fy as f32];
                out.valid[k] = true;
            }
        }
    }
    Ok(out)
}

/// Median of `|estimated - analytic|` over valid pixels.
pub fn flow_error_median(flow: &FlowField, analytic: &FrameBundle) -> Option<f64> {
    let mut errs: Vec<f64> = flow
        .valid
        .iter()
        .enumerate()
        .filter(|(_, &v)| v)
        .map(|(k, _)| {
            let e = flow.flow[k];
            let a = analytic.motion[k];
            libm::hypot((e[0] - a[0]) as f64, (e[1] - a[1]) as f64)
        })
        .collect();
    median(&mut errs)
}

/// Exact median; mean of the central pair for even counts.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Inside,
    Outside,
    Full,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Inside, Region::Outside, Region::Full];

    pub fn label(self) -> &'static str {
        match self {
            Region::Inside => "inside",
            Region::Outside => "outside",
            Region::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Region> {
        Region::ALL.into_iter().find(|r| r.label() == s)
    }

    fn contains(self, in_mask: bool) -> bool {
        match self {
            Region::Inside => in_mask,
            Region::Outside => !in_mask,
            Region::Full => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionStats {
    pub region: Region,
    /// Mean angular image speed over valid flow pixels, degrees per second.
    pub mean_flow_deg_s: Option<f64>,
    /// max - min of finite depths, meters.
    pub depth_range_m: Option<f64>,
    /// All pixels in the region, valid or not.
    pub pixels: usize,
}

/// Angle between the camera rays through `(u, v)` and `(u - du, v - dv)`.
pub fn angular_displacement(camera: &Camera, u: f64, v: f64, du: f64, dv: f64) -> f64 {
    let a = camera.local_direction(u, v);
    let b = camera.local_direction(u - du, v - dv);
    libm::atan2(a.cross(b).length(), a.dot(b))
}

pub fn region_stats(
    bundle: &FrameBundle,
    flow: Option<&FlowField>,
    mask: &Mask,
    camera: &Camera,
    dt: f64,
) -> Result<[RegionStats; 3], MetricsError> {
    let n = bundle.pixel_count();
    if mask.bits.len() != n
        || bundle.width != camera.width
        || bundle.height != camera.height
        || flow.is_some_and(|f| f.flow.len() != n)
    {
        return Err(MetricsError::DimensionMismatch);
    }
    Ok(Region::ALL.map(|region| {
        let mut pixels = 0;
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        let mut speed_sum = 0.0;
        let mut speed_n = 0usize;
        for k in 0..n {
            if !region.contains(mask.bits[k]) {
                continue;
            }
            pixels += 1;
            let d = bundle.depth[k];
            if d.is_finite() {
                lo = lo.min(d);
                hi = hi.max(d);
            }
            if let Some(f) = flow {
                if f.valid[k] {
                    let (x, y) = (k % bundle.width, k / bundle.width);
                    let [du, dv] = f.flow[k];
                    let a = angular_displacement(camera, x as f64 + 0.5, y as f64 + 0.5, du as f64, dv as f64);
                    speed_sum += deg(a) / dt;
                    speed_n += 1;
                }
            }
        }
        RegionStats {
            region,
            mean_flow_deg_s: (speed_n > 0).then(|| speed_sum / speed_n as f64),
            depth_range_m: (lo <= hi).then(|| (hi - lo) as f64),
            pixels,
        }
    }))
}

/// Mask of pixels whose entity id satisfies `keep`.
pub fn id_mask(bundle: &FrameBundle, keep: impl Fn(u32) -> bool) -> Mask {
    Mask {
        width: bundle.width,
        height: bundle.height,
        bits: bundle.entity_id.iter().map(|&id| keep(id)).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PanelFidelity {
    pub cardinal: Cardinal,
    pub pixels: usize,
    /// Largest per-channel |composed - plain| inside the panel mask.
    pub max_deviation: [u8; 3],
}

impl PanelFidelity {
    pub fn worst(&self) -> u8 {
        self.max_deviation.into_iter().max().unwrap_or(0)
    }
}

/// Compares the composed and plain head views inside each panel's mask.
/// Fails if the plain view has geometry nearer than the panel there.
pub fn fidelity_report(
    scene: &Scene,
    body: &Pose,
    head: &Pose,
    rig: &CockpitRig,
    camera: &Camera,
) -> Result<Vec<PanelFidelity>, MetricsError> {
    let plain = render(scene, &camera.with_pose(*head), None);
    let composed = compose(scene, body, head, rig, camera, None);
    let masks = panel_masks(camera, body, head, rig);
    let mut out = Vec::with_capacity(rig.panels.len());
    for (panel, mask) in rig.panels.iter().zip(&masks) {
        let mut dev = [0u8; 3];
        for (k, _) in mask.bits.iter().enumerate().filter(|(_, &b)| b) {
            if (plain.depth[k] as f64) < panel.distance {
                return Err(MetricsError::NearGeometry(panel.cardinal));
            }
            for c in 0..3 {
                dev[c] = dev[c].max(composed.color[k][c].abs_diff(plain.color[k][c]));
            }
        }
        out.push(PanelFidelity { cardinal: panel.cardinal, pixels: mask.count(), max_deviation: dev });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PanelHashes {
    pub cardinal: Cardinal,
    pub hashes: BTreeSet<u64>,
}

/// Hashes every panel texture for each head pose in `heads`.
pub fn decoupling_report(scene: &Scene, body: &Pose, heads: &[Pose], rig: &CockpitRig) -> Vec<PanelHashes> {
    let mut out: Vec<PanelHashes> = rig
        .panels
        .iter()
        .map(|p| PanelHashes { cardinal: p.cardinal, hashes: BTreeSet::new() })
        .collect();
    for head in heads {
        let anchor = rig.anchor_pose(body, head);
        for (i, tex) in crate::cockpit::capture_views(scene, &anchor, rig, None).iter().enumerate() {
            out[i].hashes.insert(texture_hash(tex));
        }
    }
    out
}

/// FNV-1a hash of a texture's size and color bytes.
pub fn texture_hash(tex: &FrameBundle) -> u64 {
    let mut h = Fnv1a64::new();
    h.write(&(tex.width as u64).to_le_bytes());
    h.write(&(tex.height as u64).to_le_bytes());
    for c in &tex.color {
        h.write(c);
    }
    h.finish()
}

/// 64-bit FNV-1a.
#[derive(Clone, Copy, Debug)]
pub struct Fnv1a64(u64);

impl Fnv1a64 {
    pub const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    pub const PRIME: u64 = 0x0000_0100_0000_01b3;

    pub fn new() -> Fnv1a64 {
        Fnv1a64(Self::OFFSET)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(Self::PRIME);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a64 {
    fn default() -> Self {
        Fnv1a64::new()
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = Fnv1a64::new();
    h.write(bytes);
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cockpit::{make_cockpit_rig, Anchor, CockpitConfig};
    use crate::math::{rad, Rotation, Vec3};
    use crate::render::PrevFrame;
    use crate::scene::{Entity, Pattern, Role, Shape};

    fn ground_scene() -> Scene {
        let mut s = Scene::new(Vec3::new(-0.4, 0.3, 0.87), 0.7, 0.3, [0.6, 0.7, 0.9]);
        s.push(
            Entity::new(1, Shape::Plane { height: 0.0 }, [0.4, 0.6, 0.3], Role::Ground)
                .with_pattern(Pattern::Checker { cell: 2.0, contrast: 0.45 }),
        );
        s
    }

    fn camera(w: usize, h: usize, pose: Pose) -> Camera {
        Camera::new(pose, rad(90.0), w, h).unwrap()
    }

    #[test]
    fn fnv_reference_vectors() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn median_matches_sort_and_pick() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), Some(2.5));
    }

    #[test]
    fn identical_frames_have_zero_flow() {
        let cam = camera(64, 48, Pose::new(Vec3::new(0.0, 0.0, 1.5), 0.0, -0.5, 0.0));
        let f = render(&ground_scene(), &cam, None);
        let flow = estimate_flow(&f, &f).unwrap();
        assert!(flow.valid_count() > 0);
        for (k, v) in flow.valid.iter().enumerate() {
            if *v {
                assert_eq!(flow.flow[k], [0.0, 0.0]);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let a = render(&ground_scene(), &camera(16, 16, Pose::IDENTITY), None);
        let b = render(&ground_scene(), &camera(16, 12, Pose::IDENTITY), None);
        assert_eq!(estimate_flow(&a, &b), Err(MetricsError::DimensionMismatch));
    }

    /// Smooth synthetic texture with plenty of gradient in both axes.
    fn texture(w: usize, h: usize, shift: f64) -> FrameBundle {
        let mut color = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let xs = x as f64 - shift;
                let v = 0.5
                    + 0.2 * libm::sin(xs * 0.31) * libm::cos(y as f64 * 0.23)
                    + 0.15 * libm::sin((xs + y as f64) * 0.17);
                let b = crate::render::quantize(v);
                color.push([b, b, b]);
            }
        }
        FrameBundle {
            width: w,
            height: h,
            color,
            depth: alloc::vec![1.0; w * h],
            entity_id: alloc::vec![1; w * h],
            motion: alloc::vec![[shift as f32, 0.0]; w * h],
        }
    }

    #[test]
    fn synthetic_shift_is_recovered() {
        let prev = texture(96, 72, 0.0);
        let curr = texture(96, 72, 1.0);
        let flow = estimate_flow(&prev, &curr).unwrap();
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for y in 8..64 {
            for x in 8..88 {
                let k = y * 96 + x;
                if flow.valid[k] {
                    n += 1;
                    worst = worst.max(libm::hypot(flow.flow[k][0] as f64 - 1.0, flow.flow[k][1] as f64));
                }
            }
        }
        assert!(n > 3000, "{n}");
        assert!(worst <= 0.1, "{worst}");
    }

    #[test]
    fn rotation_flow_matches_analytic_motion() {
        let scene = ground_scene();
        let p0 = Pose::new(Vec3::new(0.3, 0.2, 1.6), 0.1, -0.35, 0.0);
        let p1 = Pose::from_parts(p0.position, Rotation::about_z(rad(0.2)).then(&p0.rotation));
        let prev = render(&scene, &camera(160, 120, p0), None);
        let curr = render(&scene, &camera(160, 120, p1), Some(&PrevFrame::capture(&scene, p0)));
        let flow = estimate_flow(&prev, &curr).unwrap();
        let err = flow_error_median(&flow, &curr).unwrap();
        assert!(flow.valid_count() > 1000, "{}", flow.valid_count());
        assert!(err <= 0.25, "{err}");
    }

    #[test]
    fn region_counts_partition_the_frame() {
        let cam = camera(64, 48, Pose::new(Vec3::new(0.0, 0.0, 1.6), 0.0, -0.2, 0.0));
        let rig = make_cockpit_rig(&CockpitConfig::default(), &cam).unwrap();
        let f = render(&ground_scene(), &cam, None);
        let mask = crate::cockpit::frame_region_mask(&cam, &cam.pose, &cam.pose, &rig);
        let flow = estimate_flow(&f, &f).unwrap();
        let [inside, outside, full] = region_stats(&f, Some(&flow), &mask, &cam, 1.0 / 30.0).unwrap();
        assert_eq!(inside.pixels + outside.pixels, full.pixels);
        assert_eq!(full.pixels, 64 * 48);
        assert_eq!(full.mean_flow_deg_s, Some(0.0));
        // Ground seen through the would-be panel spans well over a meter.
        assert!(inside.depth_range_m.unwrap() > 1.0);
    }

    #[test]
    fn empty_region_reports_absent_aggregates() {
        let cam = camera(16, 16, Pose::IDENTITY);
        let f = render(&ground_scene(), &cam, None);
        let mask = Mask::new(16, 16);
        let [inside, _, _] = region_stats(&f, None, &mask, &cam, 1.0).unwrap();
        assert_eq!(inside.pixels, 0);
        assert_eq!(inside.mean_flow_deg_s, None);
        assert_eq!(inside.depth_range_m, None);
    }

    #[test]
    fn angular_speed_of_uniform_shift() {
        let cam = camera(320, 240, Pose::IDENTITY);
        // One pixel at the image center spans atan(1/160) rad horizontally.
        let a = angular_displacement(&cam, 160.0, 120.0, 1.0, 0.0);
        assert!((a - libm::atan(1.0 / 160.0)).abs() < 1e-12);
    }

    #[test]
    fn fidelity_aligned_and_disabled() {
        let cam = camera(160, 120, Pose::IDENTITY);
        let rig = make_cockpit_rig(&CockpitConfig::default(), &cam).unwrap();
        let body = Pose::new(Vec3::new(0.0, 0.0, 1.6), 0.7, 0.0, 0.0);
        let report = fidelity_report(&ground_scene(), &body, &body, &rig, &cam).unwrap();
        assert_eq!(report.len(), 4);
        assert!(report[0].pixels > 0 && report[0].worst() <= 1);
        let off = make_cockpit_rig(&CockpitConfig { enabled: Vec::new(), ..Default::default() }, &cam).unwrap();
        assert!(fidelity_report(&ground_scene(), &body, &body, &off, &cam).unwrap().is_empty());
    }

    #[test]
    fn fidelity_rejects_near_geometry() {
        let cam = camera(64, 48, Pose::IDENTITY);
        let rig = make_cockpit_rig(&CockpitConfig::default(), &cam).unwrap();
        let mut scene = ground_scene();
        scene.push(Entity::new(
            2,
            Shape::Sphere { center: Vec3::new(0.5, 0.0, 1.6), radius: 0.2 },
            [1.0, 0.0, 0.0],
            Role::Decor,
        ));
        let body = Pose::at(Vec3::new(0.0, 0.0, 1.6));
        assert_eq!(
            fidelity_report(&scene, &body, &body, &rig, &cam),
            Err(MetricsError::NearGeometry(Cardinal::Front))
        );
    }

    #[test]
    fn decoupling_body_vs_head() {
        let cam = camera(64, 48, Pose::IDENTITY);
        let body = Pose::new(Vec3::new(0.0, 0.0, 1.6), 0.2, 0.0, 0.0);
        let heads: Vec<Pose> = [0.0, 0.3, -0.4, 1.2, 2.5]
            .iter()
            .map(|&y| Pose::from_parts(body.position, body.rotation.then(&Rotation::from_ypr(y, 0.1 * y, 0.0))))
            .collect();
        let rig = make_cockpit_rig(&CockpitConfig::default(), &cam).unwrap();
        for p in decoupling_report(&ground_scene(), &body, &heads, &rig) {
            assert_eq!(p.hashes.len(), 1);
        }
        let head_rig =
            make_cockpit_rig(&CockpitConfig { anchor: Anchor::Head, ..Default::default() }, &cam).unwrap();
        for p in decoupling_report(&ground_scene(), &body, &heads, &head_rig) {
            assert!(p.hashes.len() >= 2);
        }
    }

    #[test]
    fn moving_object_changes_texture_hash() {
        let cam = camera(64, 48, Pose::IDENTITY);
        let rig = make_cockpit_rig(&CockpitConfig::default(), &cam).unwrap();
        let body = Pose::at(Vec3::new(0.0, 0.0, 1.6));
        let mut scene = ground_scene();
        scene.push(Entity::new(
            2,
            Shape::Sphere { center: Vec3::new(6.0, 0.0, 1.6), radius: 0.8 },
            [1.0, 0.0, 0.0],
            Role::Decor,
        ));
        let a = decoupling_report(&scene, &body, &[body], &rig);
        scene.entities[1].pose = Pose::at(Vec3::new(0.0, 0.7, 0.0));
        let b = decoupling_report(&scene, &body, &[body], &rig);
        assert_ne!(a[0].hashes, b[0].hashes);
    }
}
