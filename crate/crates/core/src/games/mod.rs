//! Fixed-timestep game simulations driven by scripted bots.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::cockpit::CockpitError;
use crate::math::Pose;
use crate::metrics::MetricsError;
use crate::render::RenderError;
use crate::scene::SceneError;

pub mod fps;
pub mod racing;
pub mod session;

pub use fps::{FpsParams, FpsSim, FpsState, RobotState};
pub use racing::{RacingParams, RacingSim, RacingState};
pub use session::{run_session, FrameSink, MetricsRow, RenderedTick, SessionOutput, SessionSpec, WorldSpec};

/// The only supported timestep, seconds.
pub const DT: f64 = 1.0 / 30.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Game {
    Racing,
    Fps,
}

impl Game {
    pub fn name(self) -> &'static str {
        match self {
            Game::Racing => "racing",
            Game::Fps => "fps",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Cp,
    Normal,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Cp => "CP",
            Condition::Normal => "Normal",
        }
    }

    pub fn parse(s: &str) -> Option<Condition> {
        match s {
            "cp" | "CP" => Some(Condition::Cp),
            "normal" | "Normal" => Some(Condition::Normal),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GameError {
    Scene(SceneError),
    Cockpit(CockpitError),
    Render(RenderError),
    Metrics(MetricsError),
    InvalidParam(&'static str),
    /// The session hit its tick cap before the end condition.
    Timeout { ticks: u64 },
}

impl fmt::Display for GameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameError::Scene(e) => write!(f, "{e}"),
            GameError::Cockpit(e) => write!(f, "{e}"),
            GameError::Render(e) => write!(f, "{e}"),
            GameError::Metrics(e) => write!(f, "{e}"),
            GameError::InvalidParam(m) => write!(f, "{m}"),
            GameError::Timeout { ticks } => write!(f, "session did not finish within {ticks} ticks"),
        }
    }
}

impl core::error::Error for GameError {}

impl From<SceneError> for GameError {
    fn from(e: SceneError) -> Self {
        GameError::Scene(e)
    }
}

impl From<CockpitError> for GameError {
    fn from(e: CockpitError) -> Self {
        GameError::Cockpit(e)
    }
}

impl From<RenderError> for GameError {
    fn from(e: RenderError) -> Self {
        GameError::Render(e)
    }
}

impl From<MetricsError> for GameError {
    fn from(e: MetricsError) -> Self {
        GameError::Metrics(e)
    }
}

/// Converts a duration to whole ticks (at least one).
pub(crate) fn ticks(seconds: f64) -> u32 {
    (libm::round(seconds / DT) as u32).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Coin { coin: usize },
    Crash { barrier: usize },
    Respawn,
    Lap { lap: u32 },
    Shot { robot: usize, hit: bool, hits_taken: u32 },
    Reload,
    Kill { robot: usize },
    RobotShot { robot: usize, hit: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub game: Game,
    pub condition: Condition,
    pub seed: u64,
    pub dt: f64,
    pub config_hash: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TickRow {
    pub tick: u64,
    pub time: f64,
    pub body: Pose,
    /// Head orientation relative to the body.
    pub head_yaw: f64,
    pub head_pitch: f64,
    pub speed: f64,
    pub coins: u32,
    pub crashes: u32,
    pub distance: f64,
    pub shots_received: u32,
    pub robots_alive: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "game", rename_all = "snake_case")]
pub enum Summary {
    Racing {
        #[serde(rename = "Time")]
        time: f64,
        #[serde(rename = "Crashes")]
        crashes: u32,
        #[serde(rename = "Coins")]
        coins: u32,
        completed: bool,
    },
    Fps {
        #[serde(rename = "Time")]
        time: f64,
        #[serde(rename = "Distance")]
        distance: f64,
        #[serde(rename = "ShotsReceived")]
        shots_received: u32,
        completed: bool,
    },
}

impl Summary {
    pub fn from_row(game: Game, row: &TickRow, completed: bool) -> Summary {
        match game {
            Game::Racing => Summary::Racing { time: row.time, crashes: row.crashes, coins: row.coins, completed },
            Game::Fps => Summary::Fps {
                time: row.time,
                distance: row.distance,
                shots_received: row.shots_received,
                completed,
            },
        }
    }

    /// `(measure name, value)` pairs as reported in study tables.
    pub fn measures(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Summary::Racing { time, crashes, coins, .. } => {
                alloc::vec![("Time", time), ("Crashes", crashes as f64), ("Coins", coins as f64)]
            }
            Summary::Fps { time, distance, shots_received, .. } => {
                alloc::vec![("Time", time), ("Distance", distance), ("ShotsReceived", shots_received as f64)]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TickedEvent {
    pub tick: u64,
    pub event: Event,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionLog {
    pub header: SessionHeader,
    pub rows: Vec<TickRow>,
    pub summary: Summary,
    pub events: Vec<TickedEvent>,
}

impl SessionLog {
    /// Equality of everything except the condition field.
    pub fn same_gameplay(&self, other: &SessionLog) -> bool {
        let mut h = other.header.clone();
        h.condition = self.header.condition;
        self.header == h && self.rows == other.rows && self.summary == other.summary && self.events == other.events
    }
}
