//! Experiment harness: seeded, paired episode batches over scene fixtures
//! and methods, per-episode logs and summary tables.

use std::fmt::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::fixtures::{episode_config, scene_goal, tabletop_domain, SCENES, TABLETOP_DOMAIN};
use crate::llm::LlmBackend;
use crate::planner::{
    render_trace, run_episode, BackendKind, EpisodeOptions, PlanError, SafetySource, DEFAULT_RHO,
    DEFAULT_STEP_BUDGET,
};
use crate::seed::{derive_seed, salt_of};
use crate::world::{generate_scene, Mode, WorldError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("config: {0}")]
    Config(String),
    #[error("config line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },
    #[error("no episodes for cell {0}")]
    EmptyCell(String),
    #[error("table line {line}: {msg}")]
    Table { line: usize, msg: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Method {
    pub sm: bool,
    pub backend: BackendKind,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sm = if self.sm { "SM-on" } else { "SM-off" };
        match self.backend {
            BackendKind::Search => f.write_str(sm),
            b => write!(f, "{sm}/{b}"),
        }
    }
}

impl FromStr for Method {
    type Err = String;
    /// `SM-on`, `SM-off/llm`, or the config form `on:search`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (sm, backend) = match s.split_once(['/', ':']) {
            Some((a, b)) => (a, b.parse()?),
            None => (s, BackendKind::Search),
        };
        let sm = match sm.to_ascii_lowercase().trim_start_matches("sm-") {
            "on" => true,
            "off" => false,
            other => return Err(format!("bad method {other}")),
        };
        Ok(Method { sm, backend })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenes: Vec<(String, Mode)>,
    pub methods: Vec<Method>,
    pub episodes: usize,
    pub base_seed: u64,
    pub rho: f64,
    pub step_budget: usize,
    pub out_dir: Option<String>,
}

impl Default for ExperimentConfig {
    /// Three scenes by two modes, SM-on against SM-off with search.
    fn default() -> Self {
        let scenes = SCENES
            .iter()
            .flat_map(|s| [(s.to_string(), Mode::Easy), (s.to_string(), Mode::Hard)])
            .collect();
        ExperimentConfig {
            scenes,
            methods: vec![
                Method {
                    sm: true,
                    backend: BackendKind::Search,
                },
                Method {
                    sm: false,
                    backend: BackendKind::Search,
                },
            ],
            episodes: 100,
            base_seed: 0,
            rho: DEFAULT_RHO,
            step_budget: DEFAULT_STEP_BUDGET,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.episodes == 0 {
            return Err(EvalError::Config("episodes must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(EvalError::Config("method list is empty".into()));
        }
        if self.scenes.is_empty() {
            return Err(EvalError::Config("scene list is empty".into()));
        }
        for (s, m) in &self.scenes {
            if episode_config(s, *m, 0).is_none() {
                return Err(EvalError::Config(format!("unknown scene {s}")));
            }
        }
        Ok(())
    }
}

/// `table:easy,chair:hard` or bare names (both modes).
pub fn parse_scene_list(v: &str) -> Result<Vec<(String, Mode)>, String> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once(':') {
            Some((s, m)) => out.push((s.to_string(), m.parse()?)),
            None => {
                out.push((item.to_string(), Mode::Easy));
                out.push((item.to_string(), Mode::Hard));
            }
        }
    }
    Ok(out)
}

/// `key = value` lines, `#` comments. Keys: scenes, methods, episodes,
/// seed, rho, budget, out. Unset keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, EvalError> {
    let mut cfg = ExperimentConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| EvalError::ConfigLine { line: i + 1, msg };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad("expected key = value".into()))?;
        let v = v.trim();
        match k.trim() {
            "scenes" => cfg.scenes = parse_scene_list(v).map_err(bad)?,
            "methods" => {
                cfg.methods = v
                    .split(',')
                    .map(|m| m.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(bad)?
            }
            "episodes" => cfg.episodes = v.parse().map_err(|_| bad(format!("bad count {v}")))?,
            "seed" => cfg.base_seed = v.parse().map_err(|_| bad(format!("bad seed {v}")))?,
            "rho" => cfg.rho = v.parse().map_err(|_| bad(format!("bad rho {v}")))?,
            "budget" => cfg.step_budget = v.parse().map_err(|_| bad(format!("bad budget {v}")))?,
            "out" => cfg.out_dir = Some(v.to_string()),
            other => return Err(bad(format!("unknown key {other}"))),
        }
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub scene: String,
    pub mode: Mode,
    pub method: String,
    pub index: usize,
    pub seed: u64,
    pub collisions: u32,
    pub success: bool,
    pub steps: usize,
    pub wall_ms: f64,
}

pub const LOG_HEADER: &str = "# scene mode method index seed collisions success steps wall_ms";

impl EpisodeRow {
    pub fn log_line(&self) -> String {
        format!(
            "{} {} {} {} {} {} {} {} {:.3}",
            self.scene,
            self.mode,
            self.method,
            self.index,
            self.seed,
            self.collisions,
            u8::from(self.success),
            self.steps,
            self.wall_ms
        )
    }

    pub fn parse_log_line(line: &str) -> Option<EpisodeRow> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 9 {
            return None;
        }
        Some(EpisodeRow {
            scene: f[0].to_string(),
            mode: f[1].parse().ok()?,
            method: f[2].to_string(),
            index: f[3].parse().ok()?,
            seed: f[4].parse().ok()?,
            collisions: f[5].parse().ok()?,
            success: match f[6] {
                "1" => true,
                "0" => false,
                _ => return None,
            },
            steps: f[7].parse().ok()?,
            wall_ms: f[8].parse().ok()?,
        })
    }
}

pub fn render_episode_log(rows: &[EpisodeRow]) -> String {
    let mut s = String::from(LOG_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.log_line());
        s.push('\n');
    }
    s
}

pub fn parse_episode_log(text: &str) -> Vec<EpisodeRow> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(EpisodeRow::parse_log_line)
        .collect()
}

/// Scene seed shared by every method in a cell (paired comparison).
pub fn episode_seed(base: u64, scene: &str, mode: Mode, index: usize) -> u64 {
    derive_seed(base, &[salt_of(scene), mode as u64, index as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scene: String,
    pub mode: Mode,
    pub method: String,
    pub mean_collisions: f64,
    pub success_rate: f64,
    pub episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn get(&self, scene: &str, mode: Mode, method: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.scene == scene && r.mode == mode && r.method == method)
    }
}

pub struct ExperimentResult {
    pub rows: Vec<EpisodeRow>,
    pub table: SummaryTable,
    /// Rendered trace per row, same order.
    pub traces: Vec<String>,
}

/// Run every (scene, mode, method, index) episode. Search-backend episodes
/// run on the rayon pool; results are ordered by cell and index, so output
/// does not depend on scheduling. LLM-backed methods run sequentially.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    safety: SafetySource<'_>,
    llm: Option<&dyn LlmBackend>,
) -> Result<ExperimentResult, EvalError> {
    cfg.validate()?;
    if cfg.methods.iter().any(|m| m.backend != BackendKind::Search) && llm.is_none() {
        return Err(EvalError::Config("an LLM method needs a backend".into()));
    }
    let mut jobs = Vec::new();
    for (scene, mode) in &cfg.scenes {
        for method in &cfg.methods {
            for index in 0..cfg.episodes {
                jobs.push((scene.as_str(), *mode, *method, index));
            }
        }
    }
    let run = |&(scene, mode, method, index): &(&str, Mode, Method, usize)| -> Result<(EpisodeRow, String), EvalError> {
        let start = Instant::now();
        let seed = episode_seed(cfg.base_seed, scene, mode, index);
        let scfg = episode_config(scene, mode, seed).expect("validated scene");
        let world = generate_scene(&scfg)?;
        let opts = EpisodeOptions {
            safety: method.sm.then_some(safety),
            rho: cfg.rho,
            step_budget: cfg.step_budget,
            llm: if method.backend == BackendKind::Search { None } else { llm },
        };
        let trace = run_episode(tabletop_domain(), TABLETOP_DOMAIN, &scene_goal(&world), &world, &opts)?;
        let row = EpisodeRow {
            scene: scene.to_string(),
            mode,
            method: method.to_string(),
            index,
            seed,
            collisions: trace.total_collisions,
            success: trace.success,
            steps: trace.steps_used,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        Ok((row, render_trace(&trace)))
    };
    let results: Vec<Result<(EpisodeRow, String), EvalError>> = if llm.is_some() {
        jobs.iter().map(run).collect()
    } else {
        jobs.par_iter().map(run).collect()
    };
    let mut rows = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    for r in results {
        let (row, trace) = r?;
        rows.push(row);
        traces.push(trace);
    }
    let table = summarize(&rows)?;
    Ok(ExperimentResult {
        rows,
        table,
        traces,
    })
}

/// Cell means, in order of first appearance.
pub fn summarize(rows: &[EpisodeRow]) -> Result<SummaryTable, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyCell("(all)".into()));
    }
    let mut table = SummaryTable::default();
    let mut cells: Vec<(String, Mode, String)> = Vec::new();
    for r in rows {
        let key = (r.scene.clone(), r.mode, r.method.clone());
        if !cells.contains(&key) {
            cells.push(key);
        }
    }
    for (scene, mode, method) in cells {
        let cell: Vec<&EpisodeRow> = rows
            .iter()
            .filter(|r| r.scene == scene && r.mode == mode && r.method == method)
            .collect();
        let n = cell.len() as f64;
        table.rows.push(SummaryRow {
            mean_collisions: cell.iter().map(|r| f64::from(r.collisions)).sum::<f64>() / n,
            success_rate: cell.iter().filter(|r| r.success).count() as f64 / n,
            episodes: cell.len(),
            scene,
            mode,
            method,
        });
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            _ => Err(format!("unknown format {s} (expected csv or markdown)")),
        }
    }
}

const COLUMNS: [&str; 6] = [
    "scene",
    "mode",
    "method",
    "mean_collisions",
    "success_rate",
    "episodes",
];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cells(r: &SummaryRow) -> [String; 6] {
    [
        r.scene.clone(),
        r.mode.to_string(),
        r.method.clone(),
        format!("{:.2}", r.mean_collisions),
        format!("{:.2}", r.success_rate),
        r.episodes.to_string(),
    ]
}

pub fn emit_table(t: &SummaryTable, format: TableFormat) -> String {
    let mut s = String::new();
    match format {
        TableFormat::Csv => {
            s.push_str(&COLUMNS.join(","));
            s.push('\n');
            for r in &t.rows {
                let c: Vec<String> = cells(r).iter().map(|f| csv_field(f)).collect();
                s.push_str(&c.join(","));
                s.push('\n');
            }
        }
        TableFormat::Markdown => {
            let body: Vec<[String; 6]> = t.rows.iter().map(cells).collect();
            let width: Vec<usize> = (0..6)
                .map(|k| {
                    body.iter()
                        .map(|c| c[k].len())
                        .chain([COLUMNS[k].len()])
                        .max()
                        .unwrap()
                })
                .collect();
            let line = |c: &[String]| {
                let parts: Vec<String> = c
                    .iter()
                    .enumerate()
                    // text left, numbers right
                    .map(|(k, v)| {
                        if k < 3 {
                            format!("{v:<w$}", w = width[k])
                        } else {
                            format!("{v:>w$}", w = width[k])
                        }
                    })
                    .collect();
                format!("| {} |\n", parts.join(" | "))
            };
            s.push_str(&line(&COLUMNS.map(String::from)));
            let rule: Vec<String> = (0..6)
                .map(|k| {
                    if k < 3 {
                        "-".repeat(width[k])
                    } else {
                        format!("{}:", "-".repeat(width[k] - 1))
                    }
                })
                .collect();
            let _ = writeln!(s, "| {} |", rule.join(" | "));
            for c in &body {
                s.push_str(&line(c));
            }
        }
    }
    s
}

/// Read back a Markdown table produced by [`emit_table`].
pub fn parse_markdown_table(text: &str) -> Result<SummaryTable, EvalError> {
    let mut t = SummaryTable::default();
    for (i, line) in text.lines().enumerate().skip(2) {
        let bad = |msg: &str| EvalError::Table {
            line: i + 1,
            msg: msg.to_string(),
        };
        let c: Vec<&str> = line
            .trim()
            .trim_matches('|')
            .split('|')
            .map(str::trim)
            .collect();
        if c.len() != 6 {
            return Err(bad("expected 6 columns"));
        }
        t.rows.push(SummaryRow {
            scene: c[0].to_string(),
            mode: c[1].parse().map_err(|_| bad("bad mode"))?,
            method: c[2].to_string(),
            mean_collisions: c[3].parse().map_err(|_| bad("bad mean"))?,
            success_rate: c[4].parse().map_err(|_| bad("bad rate"))?,
            episodes: c[5].parse().map_err(|_| bad("bad count"))?,
        });
    }
    Ok(t)
}
