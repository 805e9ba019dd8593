use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use vrcockpit_core::analysis::{
    analyze_study, Instrument, Observation, QuestionnaireResponse, SsqWeighting, StudyReport, StudyTable,
};
use vrcockpit_core::games::{run_session, Condition};
use vrcockpit_core::render::Sequential;

use crate::config::RunConfig;
use crate::formats::{ensure_dir, write_json, write_text};

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| anyhow!("{}: missing column {name:?}", path.display()))
}

fn row_error(path: &Path, record: &csv::StringRecord, msg: impl std::fmt::Display) -> anyhow::Error {
    let line = record.position().map(|p| p.line()).unwrap_or(0);
    anyhow!("{}:{line}: {msg}", path.display())
}

fn condition(path: &Path, record: &csv::StringRecord, s: &str) -> Result<Condition> {
    Condition::parse(s).ok_or_else(|| row_error(path, record, format!("condition {s:?} is not CP or Normal")))
}

/// Questionnaire CSV: `participant_id, condition, instrument, item_1..`.
/// SSQ rows need all 16 items; IEQ rows use their non-empty items.
pub fn read_questionnaires(path: &Path) -> Result<Vec<QuestionnaireResponse>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().with_context(|| format!("reading {}", path.display()))?.clone();
    let pid = column(&headers, "participant_id", path)?;
    let cond = column(&headers, "condition", path)?;
    let inst = column(&headers, "instrument", path)?;
    let items: Vec<usize> = (1..)
        .map_while(|k| headers.iter().position(|h| h == format!("item_{k}")))
        .collect();
    if items.is_empty() {
        bail!("{}: no item_1.. columns", path.display());
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        let participant = record.get(pid).unwrap_or("").to_string();
        if participant.is_empty() {
            return Err(row_error(path, &record, "empty participant_id"));
        }
        let condition = condition(path, &record, record.get(cond).unwrap_or(""))?;
        let instrument_s = record.get(inst).unwrap_or("");
        let instrument = Instrument::parse(instrument_s)
            .ok_or_else(|| row_error(path, &record, format!("instrument {instrument_s:?} is not SSQ or IEQ")))?;
        let mut ratings = Vec::new();
        for (k, &col) in items.iter().enumerate() {
            let cell = record.get(col).unwrap_or("");
            if cell.is_empty() {
                continue;
            }
            let v: u8 = cell
                .parse()
                .map_err(|_| row_error(path, &record, format!("item_{} = {cell:?} is not a rating 0-4", k + 1)))?;
            ratings.push(v);
        }
        let response = QuestionnaireResponse { participant, condition, instrument, ratings };
        response.observations(SsqWeighting::Raw).map_err(|e| row_error(path, &record, e))?;
        out.push(response);
    }
    Ok(out)
}

/// Performance CSV: `participant_id, condition, measure, value`.
pub fn read_performance(path: &Path) -> Result<Vec<Observation>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().with_context(|| format!("reading {}", path.display()))?.clone();
    let pid = column(&headers, "participant_id", path)?;
    let cond = column(&headers, "condition", path)?;
    let measure = column(&headers, "measure", path)?;
    let value = column(&headers, "value", path)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        let participant = record.get(pid).unwrap_or("").to_string();
        let m = record.get(measure).unwrap_or("").to_string();
        if participant.is_empty() || m.is_empty() {
            return Err(row_error(path, &record, "participant_id and measure must be non-empty"));
        }
        let cell = record.get(value).unwrap_or("");
        let v: f64 = cell.parse().map_err(|_| row_error(path, &record, format!("value {cell:?} is not a number")))?;
        out.push(Observation {
            participant,
            condition: condition(path, &record, record.get(cond).unwrap_or(""))?,
            measure: m,
            value: v,
        });
    }
    Ok(out)
}

pub fn performance_csv(obs: &[Observation]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["participant_id", "condition", "measure", "value"])?;
    for o in obs {
        w.write_record([o.participant.as_str(), o.condition.label(), o.measure.as_str(), &o.value.to_string()])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

/// A batch of bot sessions, one CP and one Normal run per participant, with
/// optional questionnaire files to pair against.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyRun {
    pub base: RunConfig,
    pub participants: Vec<StudyParticipant>,
    #[serde(default)]
    pub questionnaires: Vec<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyParticipant {
    pub id: String,
    pub seed: u64,
    /// JSON objects merged over the base config for each condition.
    #[serde(default)]
    pub cp: Option<serde_json::Value>,
    #[serde(default)]
    pub normal: Option<serde_json::Value>,
}

fn merge(base: &mut serde_json::Value, patch: &serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(serde_json::Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

impl StudyRun {
    pub fn load(path: &Path) -> Result<StudyRun> {
        let mut run: StudyRun = crate::formats::read_json(path)?;
        let root = path.parent().unwrap_or(Path::new("."));
        for q in &mut run.questionnaires {
            if q.is_relative() {
                *q = root.join(&*q);
            }
        }
        Ok(run)
    }

    pub fn configs(&self) -> Result<Vec<(String, RunConfig)>> {
        let mut ids: Vec<&str> = self.participants.iter().map(|p| p.id.as_str()).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            bail!("participants: duplicate id {:?}", w[0]);
        }
        let base = serde_json::to_value(&self.base)?;
        let mut out = Vec::new();
        for p in &self.participants {
            for (condition, patch) in [(Condition::Cp, &p.cp), (Condition::Normal, &p.normal)] {
                let mut v = base.clone();
                if let Some(patch) = patch {
                    merge(&mut v, patch);
                }
                let mut cfg: RunConfig = serde_json::from_value(v)
                    .map_err(|e| anyhow!("participant {} ({}): {e}", p.id, condition.label()))?;
                cfg.condition = condition;
                cfg.seed = p.seed;
                cfg.render_every = 0;
                cfg.validate().with_context(|| format!("participant {} ({})", p.id, condition.label()))?;
                out.push((p.id.clone(), cfg));
            }
        }
        Ok(out)
    }

    /// Runs every session headless, in parallel across sessions.
    pub fn performance(&self) -> Result<Vec<Observation>> {
        let configs = self.configs()?;
        let results: Vec<Result<Vec<Observation>>> = configs
            .par_iter()
            .map(|(id, cfg)| {
                let spec = cfg.validate()?;
                let out = run_session(&spec, cfg.condition, cfg.seed, cfg.config_hash(), &Sequential, None)
                    .with_context(|| format!("participant {id} ({})", cfg.condition.label()))?;
                Ok(out
                    .log
                    .summary
                    .measures()
                    .into_iter()
                    .map(|(m, v)| Observation {
                        participant: id.clone(),
                        condition: cfg.condition,
                        measure: m.to_string(),
                        value: v,
                    })
                    .collect())
            })
            .collect();
        let mut obs = Vec::new();
        for r in results {
            obs.extend(r?);
        }
        Ok(obs)
    }
}

pub struct AnalyzeInput {
    pub questionnaires: Vec<PathBuf>,
    pub performance: Vec<PathBuf>,
    pub study: Option<PathBuf>,
    pub weights: SsqWeighting,
}

/// Scores, pairs and tests; writes `report.json` and `report.txt`.
pub fn analyze(input: &AnalyzeInput, out_dir: &Path) -> Result<StudyReport> {
    let mut obs = Vec::new();
    let mut questionnaires = input.questionnaires.clone();
    if let Some(study) = &input.study {
        let run = StudyRun::load(study)?;
        let perf = run.performance()?;
        ensure_dir(out_dir)?;
        write_text(&out_dir.join("performance.csv"), &performance_csv(&perf)?)?;
        obs.extend(perf);
        questionnaires.extend(run.questionnaires.iter().cloned());
    }
    for path in &questionnaires {
        for r in read_questionnaires(path)? {
            obs.extend(r.observations(input.weights)?);
        }
    }
    for path in &input.performance {
        obs.extend(read_performance(path)?);
    }
    if obs.is_empty() {
        bail!("nothing to analyze: give --questionnaires, --performance or --study");
    }
    let table = StudyTable::from_observations(&obs)?;
    let report = analyze_study(&table);
    ensure_dir(out_dir)?;
    write_json(&out_dir.join("report.json"), &report)?;
    write_text(&out_dir.join("report.txt"), &report.to_table())?;
    Ok(report)
}
