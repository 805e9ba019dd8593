use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use vrcockpit_core::games::{run_session, Condition, FrameSink, RenderedTick, SessionOutput, Summary, DT};
use vrcockpit_core::math::Pose;
use vrcockpit_core::metrics::Region;

use crate::config::RunConfig;
use crate::exec::Parallel;
use crate::formats::{
    ensure_dir, events_csv, hex_hash, metrics_csv, session_csv, write_f32_raster, write_json, write_mask, write_ppm,
    write_text, write_u32_raster,
};

pub const FRAMES_DIR: &str = "frames";
pub const FRAME_INDEX: &str = "index.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub tick: u64,
    pub color: String,
    pub depth: String,
    pub ids: String,
    pub mask: String,
    pub body: Pose,
    pub head: Pose,
}

/// Describes a stored frame stream; enough to recompute the metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameIndex {
    pub config_hash: String,
    pub condition: Condition,
    pub width: usize,
    pub height: usize,
    /// Head camera horizontal field of view, radians.
    pub hfov: f64,
    pub render_every: u32,
    pub dt: f64,
    pub frames: Vec<FrameEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub config_hash: String,
    pub condition: Condition,
    pub seed: u64,
    pub render_every: u32,
    pub ticks: u64,
    pub summary: Summary,
}

/// Writes each rendered tick into `frames/`; the first IO error is kept and
/// reported after the session.
struct FrameWriter {
    dir: PathBuf,
    comment: String,
    entries: Vec<FrameEntry>,
    error: Option<anyhow::Error>,
}

impl FrameWriter {
    fn write(&mut self, t: &RenderedTick<'_>) -> Result<()> {
        let stem = format!("{:06}", t.tick);
        let names = [
            format!("{stem}.ppm"),
            format!("{stem}.depth.f32"),
            format!("{stem}.ids.u32"),
            format!("{stem}.mask.pgm"),
        ];
        let f = t.frame;
        write_ppm(&self.dir.join(&names[0]), f.width, f.height, &f.color_bytes(), &self.comment)?;
        write_f32_raster(&self.dir.join(&names[1]), &f.depth)?;
        write_u32_raster(&self.dir.join(&names[2]), &f.entity_id)?;
        write_mask(&self.dir.join(&names[3]), t.mask, &self.comment)?;
        let [color, depth, ids, mask] = names;
        self.entries.push(FrameEntry { tick: t.tick, color, depth, ids, mask, body: t.body, head: t.head });
        Ok(())
    }
}

impl FrameSink for FrameWriter {
    fn frame(&mut self, t: &RenderedTick<'_>) {
        if self.error.is_none() {
            if let Err(e) = self.write(t) {
                self.error = Some(e);
            }
        }
    }
}

pub fn default_out(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| {
        PathBuf::from("runs").join(format!(
            "{}_{}_{}",
            cfg.game.name(),
            cfg.condition.label().to_lowercase(),
            cfg.seed
        ))
    })
}

pub fn summary_line(out: &SessionOutput) -> String {
    let h = &out.log.header;
    let measures: Vec<String> = out.log.summary.measures().iter().map(|(k, v)| format!("{k}={v:.2}")).collect();
    let completed = match out.log.summary {
        Summary::Racing { completed, .. } | Summary::Fps { completed, .. } => completed,
    };
    format!(
        "{} {} seed={} {} completed={} config_hash={}",
        h.game.name(),
        h.condition.label(),
        h.seed,
        measures.join(" "),
        completed,
        hex_hash(h.config_hash)
    )
}

/// Runs one session and writes `session.csv`, `events.csv`,
/// `summary.json`, `metrics.csv` and, with `frames`, the frame stream.
pub fn simulate(cfg: &RunConfig, out_dir: &Path, threads: Option<usize>, frames: bool) -> Result<SessionOutput> {
    let spec = cfg.validate()?;
    let hash = cfg.config_hash();
    let exec = Parallel::new(threads)?;
    ensure_dir(out_dir)?;
    let frames_dir = out_dir.join(FRAMES_DIR);
    let mut writer = if frames && cfg.render_every > 0 {
        ensure_dir(&frames_dir)?;
        Some(FrameWriter {
            dir: frames_dir.clone(),
            comment: format!("config_hash {} condition {}", hex_hash(hash), cfg.condition.label()),
            entries: Vec::new(),
            error: None,
        })
    } else {
        None
    };
    let output = run_session(
        &spec,
        cfg.condition,
        cfg.seed,
        hash,
        &exec,
        writer.as_mut().map(|w| w as &mut dyn FrameSink),
    )
    .context("session failed")?;

    let log = &output.log;
    let label = cfg.condition.label();
    write_text(&out_dir.join("session.csv"), &session_csv(log)?)?;
    write_text(&out_dir.join("events.csv"), &events_csv(&log.events, hash, label)?)?;
    write_text(
        &out_dir.join("metrics.csv"),
        &metrics_csv(&output.metrics, &Region::ALL, hash, label, cfg.render_every)?,
    )?;
    write_json(
        &out_dir.join("summary.json"),
        &SummaryFile {
            config_hash: hex_hash(hash),
            condition: cfg.condition,
            seed: cfg.seed,
            render_every: cfg.render_every,
            ticks: log.rows.last().map(|r| r.tick).unwrap_or(0),
            summary: log.summary.clone(),
        },
    )?;
    if let Some(w) = writer {
        if let Some(e) = w.error {
            return Err(e.context("writing frames"));
        }
        write_json(
            &frames_dir.join(FRAME_INDEX),
            &FrameIndex {
                config_hash: hex_hash(hash),
                condition: cfg.condition,
                width: spec.width,
                height: spec.height,
                hfov: spec.hfov,
                render_every: cfg.render_every,
                dt: DT,
                frames: w.entries,
            },
        )?;
    }
    Ok(output)
}
