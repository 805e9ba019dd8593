//! Run configuration: JSON loading with field-path diagnostics, CLI
//! overrides, validation and the config hash.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use vrcockpit_core::cockpit::{make_cockpit_rig, Anchor, CockpitConfig};
use vrcockpit_core::games::{Condition, FpsSim, Game, RacingSim, SessionSpec, WorldSpec, DT};
use vrcockpit_core::math::rad;
use vrcockpit_core::metrics::fnv1a64;
use vrcockpit_core::render::Camera;

fn default_condition() -> Condition {
    Condition::Cp
}

fn default_dt() -> f64 {
    DT
}

fn default_resolution() -> [usize; 2] {
    [320, 240]
}

fn default_hfov() -> f64 {
    90.0
}

fn default_tick_cap() -> u64 {
    200_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub game: Game,
    #[serde(default = "default_condition")]
    pub condition: Condition,
    #[serde(default)]
    pub seed: u64,
    /// Fixed timestep, seconds. Only 1/30 is supported.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// `[width, height]` of the head view.
    #[serde(default = "default_resolution")]
    pub resolution: [usize; 2],
    #[serde(default = "default_hfov")]
    pub hfov_deg: f64,
    #[serde(default)]
    pub cockpit: CockpitConfig,
    /// Track or arena; the built-in demo world when absent.
    #[serde(default)]
    pub world: Option<WorldSpec>,
    /// Render every k-th tick, 0 for none.
    #[serde(default)]
    pub render_every: u32,
    #[serde(default)]
    pub max_ticks: Option<u64>,
    #[serde(default = "default_tick_cap")]
    pub tick_cap: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// The part of a config that determines simulated content. Condition,
/// render cadence and output location are stamped next to the hash
/// instead of inside it, so CP/Normal and headless/rendered runs of the
/// same setup share a hash.
#[derive(Serialize)]
struct Hashed<'a> {
    game: Game,
    seed: u64,
    dt: f64,
    resolution: [usize; 2],
    hfov_deg: f64,
    cockpit: &'a CockpitConfig,
    world: &'a WorldSpec,
    max_ticks: Option<u64>,
    tick_cap: u64,
}

impl RunConfig {
    pub fn new(game: Game) -> RunConfig {
        RunConfig {
            game,
            condition: default_condition(),
            seed: 0,
            dt: DT,
            resolution: default_resolution(),
            hfov_deg: default_hfov(),
            cockpit: CockpitConfig::default(),
            world: None,
            render_every: 0,
            max_ticks: None,
            tick_cap: default_tick_cap(),
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow!("{}: {}", if path == "." { "config".to_string() } else { path }, e.into_inner())
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        RunConfig::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn world(&self) -> WorldSpec {
        self.world.clone().unwrap_or_else(|| WorldSpec::demo(self.game))
    }

    pub fn config_hash(&self) -> u64 {
        let world = self.world();
        let hashed = Hashed {
            game: self.game,
            seed: self.seed,
            dt: self.dt,
            resolution: self.resolution,
            hfov_deg: self.hfov_deg,
            cockpit: &self.cockpit,
            world: &world,
            max_ticks: self.max_ticks,
            tick_cap: self.tick_cap,
        };
        fnv1a64(&serde_json::to_vec(&hashed).expect("config serializes"))
    }

    /// Checks every child invariant and builds the session spec.
    pub fn validate(&self) -> Result<SessionSpec> {
        if (self.dt - DT).abs() > 1e-12 {
            bail!("dt: only a 1/30 s timestep is supported, got {}", self.dt);
        }
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            bail!("hfov_deg: must be in (0, 180), got {}", self.hfov_deg);
        }
        if self.tick_cap == 0 {
            bail!("tick_cap: must be positive");
        }
        let world = self.world();
        if world.game() != self.game {
            bail!("world: a {} world was given for game {}", world.game().name(), self.game.name());
        }
        let [width, height] = self.resolution;
        let camera = Camera::new(Default::default(), rad(self.hfov_deg), width, height)
            .map_err(|e| anyhow!("resolution: {e}"))?;
        make_cockpit_rig(&self.cockpit, &camera).map_err(|e| anyhow!("cockpit: {e}"))?;
        match &world {
            WorldSpec::Racing { track, params } => {
                RacingSim::new(track, params, self.seed).map_err(|e| anyhow!("world.racing: {e}"))?;
            }
            WorldSpec::Fps { arena, params } => {
                FpsSim::new(arena, params, self.seed).map_err(|e| anyhow!("world.fps: {e}"))?;
            }
        }
        Ok(SessionSpec {
            world,
            cockpit: self.cockpit.clone(),
            width,
            height,
            hfov: rad(self.hfov_deg),
            render_every: self.render_every,
            max_ticks: self.max_ticks,
            tick_cap: self.tick_cap,
        })
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub condition: Option<Condition>,
    pub seed: Option<u64>,
    pub render_every: Option<u32>,
    pub out: Option<PathBuf>,
    pub resolution: Option<[usize; 2]>,
    pub coverage: Option<f64>,
    pub anchor: Option<Anchor>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(c) = self.condition {
            cfg.condition = c;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.render_every {
            cfg.render_every = k;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(r) = self.resolution {
            cfg.resolution = r;
        }
        if let Some(c) = self.coverage {
            cfg.cockpit.coverage = c;
        }
        if let Some(a) = self.anchor {
            cfg.cockpit.anchor = a;
        }
    }
}

/// Parses `WxH`.
pub fn parse_resolution(s: &str) -> Result<[usize; 2], String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let w = w.trim().parse::<usize>().map_err(|e| format!("width: {e}"))?;
    let h = h.trim().parse::<usize>().map_err(|e| format!("height: {e}"))?;
    Ok([w, h])
}

pub fn parse_condition(s: &str) -> Result<Condition, String> {
    Condition::parse(s).ok_or_else(|| format!("expected cp or normal, got {s:?}"))
}

pub fn parse_anchor(s: &str) -> Result<Anchor, String> {
    match s {
        "body" => Ok(Anchor::Body),
        "head" => Ok(Anchor::Head),
        _ => Err(format!("expected body or head, got {s:?}")),
    }
}

pub fn parse_game(s: &str) -> Result<Game, String> {
    match s {
        "racing" => Ok(Game::Racing),
        "fps" => Ok(Game::Fps),
        _ => Err(format!("expected racing or fps, got {s:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_json(r#"{"game": "racing"}"#).unwrap();
        assert_eq!(cfg, RunConfig::new(Game::Racing));
        let spec = cfg.validate().unwrap();
        assert_eq!((spec.width, spec.height), (320, 240));
    }

    #[test]
    fn unknown_field_reports_path() {
        let err = RunConfig::from_json(r#"{"game": "racing", "cockpit": {"coverge": 0.3}}"#).unwrap_err();
        assert!(err.to_string().starts_with("cockpit.coverge: unknown field `coverge`"), "{err}");
        let err = RunConfig::from_json(r#"{"game": "racing", "cockpit": {"coverage": "big"}}"#).unwrap_err();
        assert!(err.to_string().starts_with("cockpit.coverage:"), "{err}");
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = RunConfig::new(Game::Fps);
        cfg.cockpit.coverage = 1.5;
        assert!(cfg.validate().unwrap_err().to_string().starts_with("cockpit:"));
        let mut cfg = RunConfig::new(Game::Fps);
        cfg.dt = 0.01;
        assert!(cfg.validate().unwrap_err().to_string().starts_with("dt:"));
        let mut cfg = RunConfig::new(Game::Fps);
        cfg.world = Some(WorldSpec::demo(Game::Racing));
        assert!(cfg.validate().unwrap_err().to_string().starts_with("world:"));
    }

    #[test]
    fn hash_ignores_condition_cadence_and_output() {
        let base = RunConfig::new(Game::Racing);
        let mut other = base.clone();
        other.condition = Condition::Normal;
        other.render_every = 3;
        other.out = Some("x".into());
        assert_eq!(base.config_hash(), other.config_hash());
        other.seed = 1;
        assert_ne!(base.config_hash(), other.config_hash());
        let mut cov = base.clone();
        cov.cockpit.coverage = 0.25;
        assert_ne!(base.config_hash(), cov.config_hash());
        // An explicit demo world is the same config as the implicit one.
        let mut explicit = base.clone();
        explicit.world = Some(WorldSpec::demo(Game::Racing));
        assert_eq!(base.config_hash(), explicit.config_hash());
    }

    #[test]
    fn round_trips_through_json() {
        let mut cfg = RunConfig::new(Game::Fps);
        cfg.world = Some(cfg.world());
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn parses_flags() {
        assert_eq!(parse_resolution("320x240"), Ok([320, 240]));
        assert!(parse_resolution("320").is_err());
        assert_eq!(parse_condition("normal"), Ok(Condition::Normal));
        assert_eq!(parse_anchor("head"), Ok(Anchor::Head));
        assert!(parse_game("golf").is_err());
    }
}
