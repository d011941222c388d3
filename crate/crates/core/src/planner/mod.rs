//! Closed-loop controller: observe, (optionally) predict the safety matrix,
//! decide the next grounded operator, execute it, repeat.

mod prompt;
mod search;
mod trace;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fixtures::world_objects;
use crate::llm::LlmBackend;
use crate::pddl::{Atom, Domain, GroundedAction, SymbolicState, TypedName};
use crate::risk::{ledger_from_events, oracle_risk_matrix, risk_of};
use crate::safety::{
    matrix_to_ranking, predict_matrix, ModelParameters, SafetyError, SafetyMatrix, SafetyRanking,
};
use crate::world::{execute_skill, extract_predicates, SkillOutcome, WorldState};

pub use prompt::{next_action_llm, parse_reply, planning_prompt};
pub use search::{next_action_search, shortest_plan};
pub use trace::{recount_trace_collisions, render_trace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no plan reaches the goal")]
    NoPlan,
    #[error("goal already satisfied")]
    GoalSatisfied,
    #[error(transparent)]
    Safety(#[from] SafetyError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rationale {
    Direct,
    Clearing,
    /// Raw backend reply that produced the action.
    BackendText(String),
}

impl fmt::Display for Rationale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rationale::Direct => f.write_str("direct"),
            Rationale::Clearing => f.write_str("clearing"),
            Rationale::BackendText(_) => f.write_str("backend-text"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionBackend {
    Search,
    Llm,
}

impl fmt::Display for DecisionBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionBackend::Search => "search",
            DecisionBackend::Llm => "llm",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: GroundedAction,
    pub rationale: Rationale,
    pub backend: DecisionBackend,
}

/// Predicted matrix and its ranking, present iff safety is on.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyGuidance {
    pub matrix: SafetyMatrix,
    pub ranking: SafetyRanking,
}

/// Everything a backend sees at one decision point.
#[derive(Debug, Clone)]
pub struct PlanningContext<'a> {
    pub domain: &'a Domain,
    pub domain_text: &'a str,
    pub goal: Vec<Atom>,
    pub world: WorldState,
    pub objects: Vec<TypedName>,
    /// Always `extract_predicates(world)`.
    pub symbolic: SymbolicState,
    pub safety: Option<SafetyGuidance>,
    pub step_budget: usize,
    pub history: Vec<(GroundedAction, bool)>,
}

/// Where SM-on risk values come from.
#[derive(Debug, Clone, Copy)]
pub enum SafetySource<'a> {
    Model(&'a ModelParameters<f64>),
    /// Exact simulator probes; useful as an upper bound on model quality.
    Oracle,
}

impl SafetySource<'_> {
    pub fn matrix(&self, w: &WorldState) -> Result<SafetyMatrix, SafetyError> {
        let objects = w.object_names();
        match self {
            SafetySource::Model(p) => predict_matrix(*p, w, &objects),
            SafetySource::Oracle => {
                Ok(oracle_risk_matrix(w, &crate::risk::skill_names(), &objects))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Search,
    Llm,
    /// LLM path driven by a scripted stub.
    Stub,
}

impl FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "search" => Ok(BackendKind::Search),
            "llm" => Ok(BackendKind::Llm),
            "stub" => Ok(BackendKind::Stub),
            _ => Err(format!(
                "unknown backend {s} (expected search, llm or stub)"
            )),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Search => "search",
            BackendKind::Llm => "llm",
            BackendKind::Stub => "stub",
        })
    }
}

pub const DEFAULT_RHO: f64 = 0.5;
pub const DEFAULT_STEP_BUDGET: usize = 20;
/// Consecutive failed skills that end an episode.
pub const MAX_CONSECUTIVE_FAILURES: usize = 3;

#[derive(Clone, Copy)]
pub struct EpisodeOptions<'a> {
    /// `Some` turns the safety module on.
    pub safety: Option<SafetySource<'a>>,
    pub rho: f64,
    pub step_budget: usize,
    /// `None` uses the search backend.
    pub llm: Option<&'a dyn LlmBackend>,
}

impl Default for EpisodeOptions<'_> {
    fn default() -> Self {
        EpisodeOptions {
            safety: None,
            rho: DEFAULT_RHO,
            step_budget: DEFAULT_STEP_BUDGET,
            llm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub decisions: Vec<Decision>,
    pub outcomes: Vec<SkillOutcome>,
    /// Severity-weighted collisions over all steps.
    pub total_collisions: u32,
    pub success: bool,
    pub steps_used: usize,
}

impl EpisodeTrace {
    pub fn actions(&self) -> Vec<String> {
        self.decisions
            .iter()
            .map(|d| d.action.to_string())
            .collect()
    }
}

/// Build the context for the current world.
pub fn context<'a>(
    domain: &'a Domain,
    domain_text: &'a str,
    goal: &[Atom],
    world: &WorldState,
    opts: &EpisodeOptions<'_>,
    history: &[(GroundedAction, bool)],
) -> Result<PlanningContext<'a>, PlanError> {
    let safety = match &opts.safety {
        Some(src) => {
            let matrix = src.matrix(world)?;
            let ranking = matrix_to_ranking(&matrix);
            Some(SafetyGuidance { matrix, ranking })
        }
        None => None,
    };
    Ok(PlanningContext {
        domain,
        domain_text,
        goal: goal.to_vec(),
        world: world.clone(),
        objects: world_objects(world),
        symbolic: extract_predicates(world),
        safety,
        step_budget: opts.step_budget,
        history: history.to_vec(),
    })
}

/// Run one closed-loop episode until the goal holds, the step budget is
/// spent, planning fails, or three skills in a row fail.
pub fn run_episode(
    domain: &Domain,
    domain_text: &str,
    goal: &[Atom],
    world: &WorldState,
    opts: &EpisodeOptions<'_>,
) -> Result<EpisodeTrace, PlanError> {
    let mut w = world.clone();
    let mut trace = EpisodeTrace {
        decisions: Vec::new(),
        outcomes: Vec::new(),
        total_collisions: 0,
        success: false,
        steps_used: 0,
    };
    let mut history = Vec::new();
    let mut failures = 0;
    loop {
        if extract_predicates(&w).satisfies(goal) {
            trace.success = true;
            break;
        }
        if trace.steps_used >= opts.step_budget || failures >= MAX_CONSECUTIVE_FAILURES {
            break;
        }
        let ctx = context(domain, domain_text, goal, &w, opts, &history)?;
        let decision = match opts.llm {
            Some(b) => next_action_llm(&ctx, b, opts.rho),
            None => next_action_search(&ctx, opts.rho),
        };
        let decision = match decision {
            Ok(d) => d,
            Err(PlanError::NoPlan) => break,
            Err(e) => return Err(e),
        };
        let outcome = match execute_skill(&w, &decision.action) {
            Ok(o) => o,
            Err(e) => {
                // decisions are applicable by construction; treat as a failed skill
                log::warn!("skill {} rejected: {e}", decision.action);
                SkillOutcome {
                    succeeded: false,
                    events: Vec::new(),
                    ticks_used: 0,
                    world: w.clone(),
                }
            }
        };
        let subject = decision.action.subject().unwrap_or("");
        trace.total_collisions += risk_of(&ledger_from_events(&outcome.events, subject)) as u32;
        failures = if outcome.succeeded { 0 } else { failures + 1 };
        history.push((decision.action.clone(), outcome.succeeded));
        w = outcome.world.clone();
        trace.decisions.push(decision);
        trace.outcomes.push(outcome);
        trace.steps_used += 1;
    }
    Ok(trace)
}
