use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use vrcockpit_core::games::MetricsRow;
use vrcockpit_core::math::Pose;
use vrcockpit_core::metrics::{estimate_flow, region_stats, Region};
use vrcockpit_core::render::{Camera, FrameBundle};

use super::simulate::{FrameIndex, FRAMES_DIR, FRAME_INDEX};
use crate::formats::{metrics_csv, read_f32_raster, read_json, read_mask, read_ppm};

pub fn parse_regions(s: &str) -> Result<Vec<Region>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let r = Region::parse(part).ok_or_else(|| anyhow!("unknown region {part:?} (inside, outside, full)"))?;
        if !out.contains(&r) {
            out.push(r);
        }
    }
    if out.is_empty() {
        bail!("no regions given");
    }
    out.sort();
    Ok(out)
}

/// Recomputes the region metrics of a session directory from its stored
/// frames. The result has the same layout as the inline `metrics.csv`.
pub fn offline_metrics(session_dir: &Path, regions: &[Region]) -> Result<String> {
    let frames_dir = session_dir.join(FRAMES_DIR);
    let index_path = frames_dir.join(FRAME_INDEX);
    if !index_path.exists() {
        bail!(
            "{}: no frame stream (run simulate with --frames and --render-every > 0)",
            session_dir.display()
        );
    }
    let index: FrameIndex = read_json(&index_path)?;
    if index.frames.is_empty() {
        bail!("{}: frame set is empty", index_path.display());
    }
    let hash = u64::from_str_radix(&index.config_hash, 16).context("config_hash in frame index")?;
    let camera = Camera::new(Pose::IDENTITY, index.hfov, index.width, index.height)?;
    let dt = index.render_every as f64 * index.dt;
    let n = index.width * index.height;

    let mut rows = Vec::with_capacity(index.frames.len() * 3);
    let mut prev: Option<FrameBundle> = None;
    for entry in &index.frames {
        let (w, h, color) = read_ppm(&frames_dir.join(&entry.color))?;
        if (w, h) != (index.width, index.height) {
            bail!("{}: {w}x{h} frame in a {}x{} stream", entry.color, index.width, index.height);
        }
        let depth = read_f32_raster(&frames_dir.join(&entry.depth), n)?;
        let mask = read_mask(&frames_dir.join(&entry.mask))?;
        let frame = FrameBundle {
            width: w,
            height: h,
            color,
            depth,
            entity_id: vec![0; n],
            motion: vec![[0.0; 2]; n],
        };
        let flow = match &prev {
            Some(p) => Some(estimate_flow(p, &frame)?),
            None => None,
        };
        let stats = region_stats(&frame, flow.as_ref(), &mask, &camera, dt)
            .with_context(|| format!("tick {}", entry.tick))?;
        rows.extend(stats.iter().map(|s| MetricsRow { tick: entry.tick, stats: *s }));
        prev = Some(frame);
    }
    metrics_csv(&rows, regions, hash, index.condition.label(), index.render_every)
}
