use super::{next_action_search, Decision, DecisionBackend, PlanError, PlanningContext, Rationale};
use crate::fixtures::PLAN_PROMPT;
use crate::llm::{first_sexpr, LlmBackend};
use crate::pddl::{
    ground_actions, is_applicable, parse_action_call, render_atoms_conjunction, GroundedAction,
};

pub const PLAN_ATTEMPTS: usize = 3;

/// Domain, goal, one state atom per line, the ranking block when safety is
/// on, and the output-format directive.
pub fn planning_prompt(ctx: &PlanningContext) -> String {
    let state: Vec<String> = ctx.symbolic.atoms.iter().map(ToString::to_string).collect();
    let safety = match &ctx.safety {
        Some(g) => format!("\nSafety ranking (safest first):\n{}\n", g.ranking.text),
        None => String::new(),
    };
    PLAN_PROMPT
        .replace("{domain}", ctx.domain_text.trim())
        .replace("{goal}", &render_atoms_conjunction(&ctx.goal))
        .replace("{state}", &state.join("\n"))
        .replace("{safety}", &safety)
}

/// Grounded action named by the first s-expression of a reply, if it is
/// applicable in the current state.
pub fn parse_reply(ctx: &PlanningContext, reply: &str) -> Option<GroundedAction> {
    let (op, args) = parse_action_call(first_sexpr(reply)?).ok()?;
    ground_actions(ctx.domain, &ctx.objects)
        .into_iter()
        .find(|a| a.operator == op && a.binding == args)
        .filter(|a| is_applicable(&ctx.symbolic, a))
}

/// Ask the backend for the next operator; invalid or inapplicable replies
/// are retried, and after three misses the search backend decides.
pub fn next_action_llm(
    ctx: &PlanningContext,
    backend: &dyn LlmBackend,
    rho: f64,
) -> Result<Decision, PlanError> {
    let prompt = planning_prompt(ctx);
    for attempt in 1..=PLAN_ATTEMPTS {
        match backend.complete(&prompt) {
            Ok(reply) => match parse_reply(ctx, &reply) {
                Some(action) => {
                    return Ok(Decision {
                        action,
                        rationale: Rationale::BackendText(reply),
                        backend: DecisionBackend::Llm,
                    })
                }
                None => log::warn!("plan attempt {attempt}: no applicable operator in reply"),
            },
            Err(e) => log::warn!("plan attempt {attempt}: {e}"),
        }
    }
    next_action_search(ctx, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        blocked_target_goal, blocked_target_world, tabletop_domain, TABLETOP_DOMAIN,
    };
    use crate::llm::ScriptedStub;
    use crate::planner::{context, EpisodeOptions, SafetySource, DEFAULT_RHO};

    fn ctx(sm: bool) -> PlanningContext<'static> {
        let opts = EpisodeOptions {
            safety: sm.then_some(SafetySource::Oracle),
            ..Default::default()
        };
        context(
            tabletop_domain(),
            TABLETOP_DOMAIN,
            &blocked_target_goal(),
            &blocked_target_world(),
            &opts,
            &[],
        )
        .unwrap()
    }

    #[test]
    fn llm_reply_is_used() {
        let stub = ScriptedStub::new(["Sure. (pick apple)"]);
        let d = next_action_llm(&ctx(false), &stub, DEFAULT_RHO).unwrap();
        assert_eq!(d.action.to_string(), "pick(apple)");
        assert_eq!(d.backend, DecisionBackend::Llm);
    }

    #[test]
    fn prose_falls_back_to_search() {
        let stub = ScriptedStub::new(["I would pick the apple", "(place apple blue_box)", "(fly)"]);
        let d = next_action_llm(&ctx(false), &stub, DEFAULT_RHO).unwrap();
        assert_eq!(d.backend, DecisionBackend::Search);
        assert_eq!(d.action.to_string(), "pick(strawberry_box)");
        assert_eq!(stub.prompts().len(), 3);
    }

    #[test]
    fn prompt_carries_ranking_only_with_safety() {
        let on = ctx(true);
        let p = planning_prompt(&on);
        let ranking = &on.safety.as_ref().unwrap().ranking.text;
        assert!(ranking.starts_with("The safest operator is to "));
        assert!(p.contains(ranking.as_str()));
        assert!(p.contains("(on tomato_can table)"));
        assert!(p.contains("(and (in strawberry_box blue_box))"));
        assert!(p
            .trim_end()
            .ends_with("Reply with exactly one grounded operator, e.g. (pick apple)."));
        assert!(!planning_prompt(&ctx(false)).contains("safest"));
    }
}
