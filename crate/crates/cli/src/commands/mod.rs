//! Subcommands and their argument parsing.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use std::fmt::Write;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use vrcockpit_core::analysis::SsqWeighting;
use vrcockpit_core::cockpit::Anchor;
use vrcockpit_core::games::{Condition, Game, WorldSpec};

use crate::config::{parse_anchor, parse_condition, parse_game, parse_resolution, Overrides, RunConfig};
use crate::formats::{write_json, write_text};

pub mod analyze;
pub mod metrics;
pub mod simulate;
pub mod snapshot;

#[derive(Parser, Debug)]
#[command(name = "vrcockpit", version, about = "Headless view-frame cockpit simulation workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one bot session and write its logs.
    Simulate(SimulateArgs),
    /// Render the composed and plain views at one pose.
    Snapshot(SnapshotArgs),
    /// Recompute region metrics from a stored frame stream.
    Metrics(MetricsArgs),
    /// Score questionnaires and test CP against Normal.
    Analyze(AnalyzeArgs),
    /// Print a default track or arena (or a full run config) as JSON.
    GenScene(GenSceneArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// JSON run config; without one the built-in demo world of --game is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_game, default_value = "racing")]
    pub game: Game,
    #[arg(long, value_parser = parse_condition)]
    pub condition: Option<Condition>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Render every k-th tick (0 = headless).
    #[arg(long)]
    pub render_every: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Head view size, WxH.
    #[arg(long, value_parser = parse_resolution)]
    pub resolution: Option<[usize; 2]>,
    /// Viewport fraction covered by one panel.
    #[arg(long)]
    pub coverage: Option<f64>,
    #[arg(long, value_parser = parse_anchor)]
    pub anchor: Option<Anchor>,
    /// Render threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunArgs {
    pub fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::new(self.game),
        };
        Overrides {
            condition: self.condition,
            seed: self.seed,
            render_every: self.render_every,
            out: self.out.clone(),
            resolution: self.resolution,
            coverage: self.coverage,
            anchor: self.anchor,
        }
        .apply(&mut cfg);
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Also store every rendered frame (color, depth, ids, panel mask).
    #[arg(long)]
    pub frames: bool,
}

#[derive(Args, Debug)]
pub struct SnapshotArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Body pose `x,y,z,yaw_deg`; defaults to the session start.
    #[arg(long, value_parser = snapshot::parse_body, allow_hyphen_values = true)]
    pub body: Option<snapshot::BodyPose>,
    /// Head orientation relative to the body, `yaw_deg,pitch_deg`.
    #[arg(long, value_parser = snapshot::parse_head, allow_hyphen_values = true)]
    pub head: Option<snapshot::HeadOffset>,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Output directory of a `simulate --frames` run.
    pub session: PathBuf,
    /// Comma-separated subset of inside,outside,full.
    #[arg(long, default_value = "inside,outside,full")]
    pub regions: String,
    /// Output file (default: <session>/metrics_offline.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Weights {
    Raw,
    Kennedy,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Questionnaire CSVs (participant_id, condition, instrument, item_1..).
    #[arg(long, num_args = 1..)]
    pub questionnaires: Vec<PathBuf>,
    /// Performance CSVs (participant_id, condition, measure, value).
    #[arg(long, num_args = 1..)]
    pub performance: Vec<PathBuf>,
    /// Study batch JSON: bot sessions supply the performance measures.
    #[arg(long)]
    pub study: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "raw")]
    pub weights: Weights,
    #[arg(long, default_value = "analysis")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GenSceneArgs {
    #[arg(long, value_parser = parse_game, default_value = "racing")]
    pub game: Game,
    /// Emit a complete run config instead of the bare track or arena.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn gen_scene(args: &GenSceneArgs) -> Result<String> {
    let world = WorldSpec::demo(args.game);
    let text = if args.full {
        let mut cfg = RunConfig::new(args.game);
        cfg.world = Some(world);
        serde_json::to_string_pretty(&cfg)?
    } else {
        match &world {
            WorldSpec::Racing { track, .. } => serde_json::to_string_pretty(track)?,
            WorldSpec::Fps { arena, .. } => serde_json::to_string_pretty(arena)?,
        }
    };
    Ok(text + "\n")
}

/// Parses `args` (including the program name), runs the command and prints
/// its report.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        // Help and version go to stdout and are not failures.
        Err(e) if !e.use_stderr() => {
            e.print()?;
            return Ok(());
        }
        Err(e) => bail!("{}", usage_error(&e)),
    };
    print!("{}", dispatch(&cli.command)?);
    Ok(())
}

/// Like [`run`] but returns the report instead of printing it.
pub fn execute<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| anyhow::anyhow!("{}", usage_error(&e)))?;
    dispatch(&cli.command)
}

fn usage_error(e: &clap::Error) -> String {
    let text = e.render().to_string();
    text.trim_end().strip_prefix("error: ").unwrap_or(text.trim_end()).to_string()
}

/// Runs one command; returns the lines it reports.
pub fn dispatch(command: &Command) -> Result<String> {
    let mut out = String::new();
    match command {
        Command::Simulate(a) => {
            let cfg = a.run.config()?;
            let dir = simulate::default_out(&cfg);
            let output = simulate::simulate(&cfg, &dir, a.run.threads, a.frames)?;
            writeln!(out, "{}", simulate::summary_line(&output))?;
            writeln!(out, "wrote {}", dir.display())?;
        }
        Command::Snapshot(a) => {
            let cfg = a.run.config()?;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("snapshot"));
            let report = snapshot::snapshot(&cfg, a.body, a.head.unwrap_or_default(), &dir, a.run.threads)?;
            writeln!(out, "{}", report.line())?;
            writeln!(out, "wrote {}", dir.display())?;
        }
        Command::Metrics(a) => {
            let regions = metrics::parse_regions(&a.regions)?;
            let text = metrics::offline_metrics(&a.session, &regions)?;
            let path = a.out.clone().unwrap_or_else(|| a.session.join("metrics_offline.csv"));
            write_text(&path, &text)?;
            writeln!(out, "wrote {}", path.display())?;
        }
        Command::Analyze(a) => {
            let input = analyze::AnalyzeInput {
                questionnaires: a.questionnaires.clone(),
                performance: a.performance.clone(),
                study: a.study.clone(),
                weights: match a.weights {
                    Weights::Raw => SsqWeighting::Raw,
                    Weights::Kennedy => SsqWeighting::Kennedy,
                },
            };
            let report = analyze::analyze(&input, &a.out)?;
            out.push_str(&report.to_table());
            writeln!(out, "wrote {}", a.out.display())?;
        }
        Command::GenScene(a) => {
            let text = gen_scene(a)?;
            match &a.out {
                Some(p) => {
                    write_text(p, &text)?;
                    writeln!(out, "wrote {}", p.display())?;
                }
                None => out = text,
            }
        }
    }
    Ok(out)
}

/// Writes `value` as JSON next to other outputs; used by tests and tools.
pub fn save_config(path: &Path, cfg: &RunConfig) -> Result<()> {
    write_json(path, cfg).with_context(|| format!("saving {}", path.display()))
}
