use std::path::Path;

use anyhow::{bail, Result};

use vrcockpit_core::cockpit::{compose_with, frame_region_mask, make_cockpit_rig, panel_masks, Cardinal};
use vrcockpit_core::games::{FpsSim, RacingSim, WorldSpec};
use vrcockpit_core::math::{rad, Pose, Vec3};
use vrcockpit_core::render::render_with;
use vrcockpit_core::scene::Scene;

use crate::config::RunConfig;
use crate::exec::Parallel;
use crate::formats::{ensure_dir, hex_hash, write_mask, write_ppm};

/// Body pose override: position and yaw (degrees), level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyPose {
    pub position: Vec3,
    pub yaw_deg: f64,
}

/// Head orientation relative to the body, degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HeadOffset {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
}

pub fn parse_body(s: &str) -> Result<BodyPose, String> {
    let v = parse_floats(s, 4)?;
    Ok(BodyPose { position: Vec3::new(v[0], v[1], v[2]), yaw_deg: v[3] })
}

pub fn parse_head(s: &str) -> Result<HeadOffset, String> {
    let v = parse_floats(s, 2)?;
    Ok(HeadOffset { yaw_deg: v[0], pitch_deg: v[1] })
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotReport {
    pub mask_fraction: f64,
    pub panel_fractions: Vec<(Cardinal, f64)>,
}

impl SnapshotReport {
    pub fn line(&self) -> String {
        let panels: Vec<String> =
            self.panel_fractions.iter().map(|(c, f)| format!("{}={f:.4}", c.name())).collect();
        format!("mask fraction {:.4} ({})", self.mask_fraction, panels.join(" "))
    }
}

fn initial_state(world: &WorldSpec, seed: u64) -> Result<(Scene, Pose)> {
    Ok(match world {
        WorldSpec::Racing { track, params } => {
            let sim = RacingSim::new(track, params, seed)?;
            let body = sim.row().body;
            (sim.scene, body)
        }
        WorldSpec::Fps { arena, params } => {
            let sim = FpsSim::new(arena, params, seed)?;
            let body = sim.row().body;
            (sim.scene, body)
        }
    })
}

/// Renders the composed (CP) and plain (Normal) views at one pose, plus the
/// panel mask.
pub fn snapshot(
    cfg: &RunConfig,
    body: Option<BodyPose>,
    head: HeadOffset,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<SnapshotReport> {
    let spec = cfg.validate()?;
    let (scene, start) = initial_state(&spec.world, cfg.seed)?;
    let body = match body {
        Some(b) => {
            if !(b.position.x.is_finite() && b.position.y.is_finite() && b.position.z.is_finite() && b.yaw_deg.is_finite()) {
                bail!("body: pose must be finite");
            }
            Pose::new(b.position, rad(b.yaw_deg), 0.0, 0.0)
        }
        None => start,
    };
    if !(head.yaw_deg.is_finite() && head.pitch_deg.is_finite()) || head.pitch_deg.abs() >= 90.0 {
        bail!("head: yaw must be finite and pitch within (-90, 90) degrees");
    }
    let head = body.compose(&Pose::new(Vec3::ZERO, rad(head.yaw_deg), rad(head.pitch_deg), 0.0));

    let exec = Parallel::new(threads)?;
    let head_camera = spec.head_camera()?;
    let rig = make_cockpit_rig(&spec.cockpit, &head_camera)?;
    let composed = compose_with(&exec, &scene, &body, &head, &rig, &head_camera, None).frame;
    let plain = render_with(&exec, &scene, &head_camera.with_pose(head), None);
    let mask = frame_region_mask(&head_camera, &body, &head, &rig);

    ensure_dir(out_dir)?;
    let comment = format!("config_hash {}", hex_hash(cfg.config_hash()));
    let (w, h) = (spec.width, spec.height);
    write_ppm(&out_dir.join("snapshot_cp.ppm"), w, h, &composed.color_bytes(), &comment)?;
    write_ppm(&out_dir.join("snapshot_normal.ppm"), w, h, &plain.color_bytes(), &comment)?;
    write_mask(&out_dir.join("mask.pgm"), &mask, &comment)?;

    let panel_fractions = rig
        .panels
        .iter()
        .zip(panel_masks(&head_camera, &body, &head, &rig))
        .map(|(p, m)| (p.cardinal, m.fraction()))
        .collect();
    Ok(SnapshotReport { mask_fraction: mask.fraction(), panel_fractions })
}
