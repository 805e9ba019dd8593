//! Whole sessions: simulate to the end condition, render at a fixed
//! cadence and collect inline image metrics.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    Condition, FpsParams, FpsSim, Game, GameError, RacingParams, RacingSim, SessionHeader, SessionLog, Summary,
    TickRow, TickedEvent, DT,
};
use crate::arena::ArenaSpec;
use crate::cockpit::{compose_with, frame_region_mask, make_cockpit_rig, CockpitConfig, CockpitPrev, Mask};
use crate::math::Pose;
use crate::metrics::{estimate_flow, region_stats, RegionStats};
use crate::render::{render_with, Camera, FrameBundle, PrevFrame, RowExecutor};
use crate::scene::Scene;
use crate::track::TrackSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldSpec {
    Racing {
        track: TrackSpec,
        #[serde(default)]
        params: RacingParams,
    },
    Fps {
        arena: ArenaSpec,
        #[serde(default)]
        params: FpsParams,
    },
}

impl WorldSpec {
    pub fn game(&self) -> Game {
        match self {
            WorldSpec::Racing { .. } => Game::Racing,
            WorldSpec::Fps { .. } => Game::Fps,
        }
    }

    pub fn demo(game: Game) -> WorldSpec {
        match game {
            Game::Racing => WorldSpec::Racing { track: TrackSpec::demo(), params: RacingParams::default() },
            Game::Fps => WorldSpec::Fps { arena: ArenaSpec::demo(), params: FpsParams::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionSpec {
    pub world: WorldSpec,
    pub cockpit: CockpitConfig,
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view of the head camera, radians.
    pub hfov: f64,
    /// Render every k-th tick; 0 disables rendering.
    pub render_every: u32,
    /// Stop early after this many ticks (the summary is marked incomplete).
    pub max_ticks: Option<u64>,
    /// Ticks after which an unfinished session is an error.
    pub tick_cap: u64,
}

impl SessionSpec {
    pub fn head_camera(&self) -> Result<Camera, GameError> {
        Ok(Camera::new(Pose::IDENTITY, self.hfov, self.width, self.height)?)
    }
}

/// Region statistics of one rendered tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub tick: u64,
    pub stats: RegionStats,
}

/// Everything produced for one rendered tick.
pub struct RenderedTick<'a> {
    pub tick: u64,
    pub frame: &'a FrameBundle,
    /// Panel textures (CP only).
    pub captures: &'a [FrameBundle],
    /// Panel region of the head view; computed under both conditions.
    pub mask: &'a Mask,
    pub camera: &'a Camera,
    pub body: Pose,
    pub head: Pose,
    pub stats: &'a [RegionStats; 3],
}

pub trait FrameSink {
    fn frame(&mut self, tick: &RenderedTick<'_>);
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionOutput {
    pub log: SessionLog,
    pub metrics: Vec<MetricsRow>,
}

enum Sim {
    Racing(RacingSim),
    Fps(FpsSim),
}

impl Sim {
    fn step(&mut self) {
        match self {
            Sim::Racing(s) => s.step(),
            Sim::Fps(s) => s.step(),
        }
    }

    fn finished(&self) -> bool {
        match self {
            Sim::Racing(s) => s.state.finished,
            Sim::Fps(s) => s.state.finished,
        }
    }

    fn row(&self) -> TickRow {
        match self {
            Sim::Racing(s) => s.row(),
            Sim::Fps(s) => s.row(),
        }
    }

    fn scene(&self) -> &Scene {
        match self {
            Sim::Racing(s) => &s.scene,
            Sim::Fps(s) => &s.scene,
        }
    }

    fn body(&self) -> Pose {
        self.row().body
    }

    fn head(&self) -> Pose {
        match self {
            Sim::Racing(s) => s.head(),
            Sim::Fps(s) => s.head(),
        }
    }

    fn take_events(&mut self) -> Vec<TickedEvent> {
        match self {
            Sim::Racing(s) => s.take_events(),
            Sim::Fps(s) => s.take_events(),
        }
    }
}

struct Previous {
    frame: FrameBundle,
    cockpit: CockpitPrev,
}

/// Runs one session. The gameplay trajectory depends only on the world
/// spec and seed; the condition and render cadence only affect images.
pub fn run_session(
    spec: &SessionSpec,
    condition: Condition,
    seed: u64,
    config_hash: u64,
    exec: &dyn RowExecutor,
    mut sink: Option<&mut dyn FrameSink>,
) -> Result<SessionOutput, GameError> {
    let game = spec.world.game();
    let mut sim = match &spec.world {
        WorldSpec::Racing { track, params } => Sim::Racing(RacingSim::new(track, params, seed)?),
        WorldSpec::Fps { arena, params } => Sim::Fps(FpsSim::new(arena, params, seed)?),
    };
    let head_camera = spec.head_camera()?;
    // The rig also defines the panel region used for Normal-condition metrics.
    let rig = make_cockpit_rig(&spec.cockpit, &head_camera)?;
    let metric_dt = spec.render_every as f64 * DT;

    let mut rows = alloc::vec![sim.row()];
    let mut events = Vec::new();
    let mut metrics = Vec::new();
    let mut previous: Option<Previous> = None;
    let mut completed = true;

    let mut render_tick = |sim: &Sim, tick: u64, previous: &mut Option<Previous>| -> Result<(), GameError> {
        let scene = sim.scene();
        let (body, head) = (sim.body(), sim.head());
        let camera = head_camera.with_pose(head);
        let mask = frame_region_mask(&head_camera, &body, &head, &rig);
        let cockpit_prev = previous.as_ref().map(|p| &p.cockpit);
        let (frame, captures) = match condition {
            Condition::Cp => {
                let c = compose_with(exec, scene, &body, &head, &rig, &head_camera, cockpit_prev);
                (c.frame, c.captures)
            }
            Condition::Normal => {
                let prev = cockpit_prev.map(|p| PrevFrame { camera: p.head, entity_poses: p.entity_poses.clone() });
                (render_with(exec, scene, &camera, prev.as_ref()), Vec::new())
            }
        };
        let flow = match previous {
            Some(p) => Some(estimate_flow(&p.frame, &frame)?),
            None => None,
        };
        let stats = region_stats(&frame, flow.as_ref(), &mask, &camera, metric_dt)?;
        metrics.extend(stats.iter().map(|s| MetricsRow { tick, stats: *s }));
        if let Some(sink) = sink.as_deref_mut() {
            sink.frame(&RenderedTick {
                tick,
                frame: &frame,
                captures: &captures,
                mask: &mask,
                camera: &camera,
                body,
                head,
                stats: &stats,
            });
        }
        *previous = Some(Previous { frame, cockpit: CockpitPrev::capture(scene, body, head) });
        Ok(())
    };

    if spec.render_every > 0 {
        render_tick(&sim, 0, &mut previous)?;
    }
    let mut tick = 0u64;
    while !sim.finished() {
        if spec.max_ticks.is_some_and(|m| tick >= m) {
            completed = false;
            break;
        }
        if tick >= spec.tick_cap {
            return Err(GameError::Timeout { ticks: spec.tick_cap });
        }
        sim.step();
        tick += 1;
        rows.push(sim.row());
        events.extend(sim.take_events());
        if spec.render_every > 0 && tick % spec.render_every as u64 == 0 {
            render_tick(&sim, tick, &mut previous)?;
        }
    }
    let last = rows.last().copied().unwrap_or_else(|| sim.row());
    let log = SessionLog {
        header: SessionHeader { game, condition, seed, dt: DT, config_hash },
        summary: Summary::from_row(game, &last, completed),
        rows,
        events,
    };
    Ok(SessionOutput { log, metrics })
}
