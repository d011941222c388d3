use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use safe_planner::eval::{
    emit_table, parse_config, parse_scene_list, render_episode_log, run_experiment,
    ExperimentConfig, Method, TableFormat,
};
use safe_planner::fixtures::{
    blocked_target_goal, blocked_target_world, episode_config, instructions, scene_config,
    scene_goal, tabletop_domain, SCENES, TABLETOP_DOMAIN,
};
use safe_planner::llm::{HttpBackend, LlmBackend, ScriptedStub};
use safe_planner::pddl::{
    instantiate_action, parse_action_call, parse_domain, parse_problem, validate_plan, Plan,
};
use safe_planner::planner::{render_trace, run_episode, BackendKind, EpisodeOptions, SafetySource};
use safe_planner::risk::skill_names;
use safe_planner::safety::{
    collect_dataset, matrix_to_ranking, parse_dataset, parse_model, predict_matrix, render_dataset,
    render_model, train, CollectOptions, HeadInit, TrainConfig,
};
use safe_planner::translate::{render_goal_pddl, translate_llm, translate_rule_based, Instruction};
use safe_planner::world::{generate_scene, Mode, WorldState};
use safe_planner::ModelParameters;

#[derive(Parser)]
#[command(
    name = "safe-planner",
    version,
    about = "Collision-aware tabletop task planning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and print its trace.
    Plan(PlanArgs),
    /// Generate a labeled dataset from randomized scenes.
    Collect(CollectArgs),
    /// Train the safety model on a dataset.
    Train(TrainArgs),
    /// Print the predicted risk matrix and ranking for a scene.
    Predict(PredictArgs),
    /// Run the SM-on / SM-off comparison and write summary tables.
    Experiment(ExperimentArgs),
    /// Check a plan against a PDDL domain and problem.
    Validate(ValidateArgs),
    /// Translate instructions to PDDL goals.
    Translate(TranslateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Args)]
struct Backend {
    /// search, llm (SP_LLM_URL / SP_LLM_MODEL / SP_LLM_KEY) or stub.
    #[arg(long, default_value = "search")]
    backend: BackendKind,
    /// Scripted replies for the stub backend, separated by `---` lines.
    #[arg(long)]
    stub_file: Option<PathBuf>,
}

impl Backend {
    fn build(&self) -> Result<Option<Box<dyn LlmBackend>>> {
        Ok(match self.backend {
            BackendKind::Search => None,
            BackendKind::Llm => Some(Box::new(HttpBackend::from_env()?)),
            BackendKind::Stub => {
                let path = self
                    .stub_file
                    .as_ref()
                    .ok_or_else(|| anyhow!("--backend stub needs --stub-file"))?;
                Some(Box::new(ScriptedStub::parse(&read(path)?)))
            }
        })
    }
}

#[derive(Args)]
struct SceneArgs {
    /// Scene name (table, counter, chair, or blocked for the fixed fixture).
    #[arg(long, default_value = "table")]
    scenes: String,
    #[arg(long, default_value = "easy")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SceneArgs {
    fn world(&self) -> Result<(WorldState, Vec<safe_planner::pddl::Atom>)> {
        let name = self.scenes.split(',').next().unwrap_or("").trim();
        if name == "blocked" {
            return Ok((blocked_target_world(), blocked_target_goal()));
        }
        let cfg = episode_config(name, self.mode, self.seed)
            .ok_or_else(|| anyhow!("unknown scene {name}"))?;
        let w = generate_scene(&cfg)?;
        let goal = scene_goal(&w);
        Ok((w, goal))
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, value_enum, default_value = "on")]
    sm: Switch,
    #[command(flatten)]
    backend: Backend,
    #[arg(long, default_value_t = safe_planner::planner::DEFAULT_RHO)]
    rho: f64,
    /// Trained model; without it SM-on uses exact simulator risk.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Goal as an instruction instead of the scene default.
    #[arg(long)]
    instruction: Option<String>,
    /// Write the trace here as well as printing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CollectArgs {
    /// Comma-separated scene names; all scenes when omitted.
    #[arg(long)]
    scenes: Option<String>,
    /// Restrict to one mode; both when omitted.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = 500)]
    episodes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    label_repeats: usize,
    #[arg(long, default_value = "dataset.txt")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "dataset.txt")]
    dataset: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value = "model.txt")]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, default_value = "model.txt")]
    model: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Key-value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `table:easy,chair` style list.
    #[arg(long)]
    scenes: Option<String>,
    /// Keep only scenes in this mode.
    #[arg(long)]
    mode: Option<Mode>,
    /// Run only SM-on or only SM-off.
    #[arg(long, value_enum)]
    sm: Option<Switch>,
    #[command(flatten)]
    backend: Backend,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long)]
    problem: PathBuf,
    /// One operator call per line, `;` comments.
    #[arg(long)]
    plan: PathBuf,
}

#[derive(Args)]
struct TranslateArgs {
    /// Instructions; the shipped corpus when none are given.
    instructions: Vec<String>,
    #[command(flatten)]
    backend: Backend,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_model(path: Option<&PathBuf>) -> Result<Option<ModelParameters>> {
    path.map(|p| parse_model(&read(p)?).with_context(|| format!("loading {}", p.display())))
        .transpose()
}

fn cmd_plan(a: PlanArgs) -> Result<()> {
    let (world, mut goal) = a.scene.world()?;
    if let Some(text) = &a.instruction {
        let ins = Instruction::with_fixture_vocabulary(text.as_str());
        goal = translate_rule_based(&ins, tabletop_domain())?.literals;
    }
    let model = load_model(a.model.as_ref())?;
    let llm = a.backend.build()?;
    let safety = match (a.sm, &model) {
        (Switch::Off, _) => None,
        (Switch::On, Some(p)) => Some(SafetySource::Model(p)),
        (Switch::On, None) => Some(SafetySource::Oracle),
    };
    let opts = EpisodeOptions {
        safety,
        rho: a.rho,
        llm: llm.as_deref(),
        ..Default::default()
    };
    let trace = run_episode(tabletop_domain(), TABLETOP_DOMAIN, &goal, &world, &opts)?;
    let text = render_trace(&trace);
    print!("{text}");
    if let Some(out) = &a.out {
        write(out, &text)?;
    }
    Ok(())
}

fn cmd_collect(a: CollectArgs) -> Result<()> {
    let names: Vec<String> = match &a.scenes {
        Some(s) => s
            .split(',')
            .map(|x| x.trim().to_string())
            .filter(|x| !x.is_empty())
            .collect(),
        None => SCENES.iter().map(|s| s.to_string()).collect(),
    };
    let modes = match a.mode {
        Some(m) => vec![m],
        None => vec![Mode::Easy, Mode::Hard],
    };
    let mut templates = Vec::new();
    for n in &names {
        for m in &modes {
            templates.push(scene_config(n, *m).ok_or_else(|| anyhow!("unknown scene {n}"))?);
        }
    }
    let skills = skill_names();
    let records = collect_dataset(&CollectOptions {
        templates,
        episodes: a.episodes,
        base_seed: a.seed,
        skills: skills.clone(),
        label_repeats: a.label_repeats,
    })?;
    write(&a.out, &render_dataset(&skills, &records))?;
    println!("{} records -> {}", records.len(), a.out.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let (skills, records) = parse_dataset(&read(&a.dataset)?)?;
    let init = ModelParameters::new(&skills, a.seed, HeadInit::Random(0.01));
    let cfg = TrainConfig {
        lr: a.lr,
        max_epochs: a.epochs,
        seed: a.seed,
        ..Default::default()
    };
    let out = train(&init, &records, &cfg)?;
    for (e, l) in out.loss_curve.iter().enumerate() {
        log::info!("epoch {e} loss {l:.6}");
    }
    write(&a.out, &render_model(&out.params))?;
    println!(
        "trained {} epochs on {} records, final loss {:.6} -> {}",
        out.loss_curve.len(),
        records.len(),
        out.loss_curve.last().copied().unwrap_or(f64::NAN),
        a.out.display()
    );
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let params: ModelParameters = parse_model(&read(&a.model)?)?;
    let (world, _) = a.scene.world()?;
    let m = predict_matrix(&params, &world, &world.object_names())?;
    println!("{m}\n");
    println!("{}", matrix_to_ranking(&m).text);
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => parse_config(&read(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &a.scenes {
        cfg.scenes = parse_scene_list(s).map_err(|e| anyhow!(e))?;
    }
    if let Some(m) = a.mode {
        cfg.scenes.retain(|(_, sm)| *sm == m);
        cfg.scenes.dedup();
    }
    if let Some(sm) = a.sm {
        let on = matches!(sm, Switch::On);
        cfg.methods.retain(|m| m.sm == on);
        if cfg.methods.is_empty() {
            cfg.methods.push(Method {
                sm: on,
                backend: BackendKind::Search,
            });
        }
    }
    if a.backend.backend != BackendKind::Search {
        for m in &mut cfg.methods {
            m.backend = a.backend.backend;
        }
    }
    if let Some(n) = a.episodes {
        cfg.episodes = n;
    }
    if let Some(s) = a.seed {
        cfg.base_seed = s;
    }
    if let Some(r) = a.rho {
        cfg.rho = r;
    }
    if let Some(o) = &a.out {
        cfg.out_dir = Some(o.display().to_string());
    }
    let model = load_model(a.model.as_ref())?;
    let safety = model
        .as_ref()
        .map_or(SafetySource::Oracle, SafetySource::Model);
    let llm = a.backend.build()?;
    let result = run_experiment(&cfg, safety, llm.as_deref())?;

    let format = match a.format {
        Format::Csv => TableFormat::Csv,
        Format::Markdown => TableFormat::Markdown,
    };
    let table = emit_table(&result.table, format);
    print!("{table}");
    let out = PathBuf::from(cfg.out_dir.as_deref().unwrap_or("results"));
    write(
        &out.join("summary.csv"),
        &emit_table(&result.table, TableFormat::Csv),
    )?;
    write(
        &out.join("summary.md"),
        &emit_table(&result.table, TableFormat::Markdown),
    )?;
    write(&out.join("episodes.log"), &render_episode_log(&result.rows))?;
    for (row, trace) in result.rows.iter().zip(&result.traces) {
        let name = format!(
            "{}-{}-{}-{:03}.trace",
            row.scene,
            row.mode,
            row.method.replace('/', "_"),
            row.index
        );
        write(&out.join("traces").join(name), trace)?;
    }
    log::info!("wrote {}", out.display());
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<()> {
    let domain_text = match &a.domain {
        Some(p) => read(p)?,
        None => TABLETOP_DOMAIN.to_string(),
    };
    let domain = parse_domain(&domain_text)?;
    let problem = parse_problem(&read(&a.problem)?, &domain)?;
    let mut plan = Plan::default();
    for (i, raw) in read(&a.plan)?.lines().enumerate() {
        let line = raw.split(';').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (op, args) = parse_action_call(line).with_context(|| format!("plan line {}", i + 1))?;
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        plan.steps.push(
            instantiate_action(&domain, &op, &args)
                .with_context(|| format!("plan line {}", i + 1))?,
        );
    }
    let report = validate_plan(&problem, &plan);
    match (report.valid, report.failing_step) {
        (true, _) => println!("valid ({} steps)", plan.steps.len()),
        (false, Some(k)) => bail!("step {k} ({}) is not applicable", plan.steps[k].call()),
        (false, None) => bail!("plan executes but the goal does not hold"),
    }
    Ok(())
}

fn cmd_translate(a: TranslateArgs) -> Result<()> {
    let texts: Vec<String> = if a.instructions.is_empty() {
        instructions().into_iter().map(str::to_string).collect()
    } else {
        a.instructions
    };
    let llm = a.backend.build()?;
    let mut failed = 0;
    for t in &texts {
        let ins = Instruction::with_fixture_vocabulary(t.as_str());
        let goal = match &llm {
            Some(b) => translate_llm(&ins, tabletop_domain(), TABLETOP_DOMAIN, b.as_ref()),
            None => translate_rule_based(&ins, tabletop_domain()),
        };
        match goal {
            Ok(g) => println!("{t}\t{}\t{}", render_goal_pddl(&g), g.provenance),
            Err(e) => {
                failed += 1;
                eprintln!("{t}\terror: {e}");
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} instructions did not translate", texts.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Collect(a) => cmd_collect(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Translate(a) => cmd_translate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
