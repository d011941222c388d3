use std::collections::{HashSet, VecDeque};

use super::{Decision, DecisionBackend, PlanError, PlanningContext, Rationale};
use crate::pddl::{apply, ground_actions, is_applicable, GroundedAction, SymbolicState};
use crate::world::sweep_region;

/// Shortest plan by breadth-first search over grounded actions. Successors
/// are expanded in grounding order, so ties break deterministically.
pub fn shortest_plan(
    start: &SymbolicState,
    goal: &[crate::pddl::Atom],
    actions: &[GroundedAction],
    max_depth: usize,
) -> Option<Vec<GroundedAction>> {
    if start.satisfies(goal) {
        return Some(Vec::new());
    }
    // parent links: (state, parent index, action index)
    let mut nodes: Vec<(SymbolicState, usize, usize)> =
        vec![(start.clone(), usize::MAX, usize::MAX)];
    let mut seen: HashSet<SymbolicState> = HashSet::from([start.clone()]);
    let mut queue: VecDeque<(usize, usize)> = VecDeque::from([(0, 0)]);
    while let Some((n, depth)) = queue.pop_front() {
        if depth >= max_depth {
            continue;
        }
        for (ai, a) in actions.iter().enumerate() {
            if !is_applicable(&nodes[n].0, a) {
                continue;
            }
            let next = apply(&nodes[n].0, a).expect("applicable");
            if !seen.insert(next.clone()) {
                continue;
            }
            let done = next.satisfies(goal);
            nodes.push((next, n, ai));
            let id = nodes.len() - 1;
            if done {
                let mut plan = Vec::new();
                let mut cur = id;
                while nodes[cur].1 != usize::MAX {
                    plan.push(actions[nodes[cur].2].clone());
                    cur = nodes[cur].1;
                }
                plan.reverse();
                return Some(plan);
            }
            queue.push_back((id, depth + 1));
        }
    }
    None
}

/// Search depth cap; tabletop goals need at most a handful of steps.
const MAX_DEPTH: usize = 6;

/// First action of a shortest plan, or a clearing action when safety is on
/// and that action's predicted risk exceeds `rho`.
///
/// Clearing candidates are the table objects whose discs intersect the
/// planned action's sweep region; the one with the highest risk in the
/// matrix (its `pick` entry) is picked up. With safety on, an object held
/// that the goal does not mention is stowed in the first free staging cell.
pub fn next_action_search(ctx: &PlanningContext, rho: f64) -> Result<Decision, PlanError> {
    let actions = ground_actions(ctx.domain, &ctx.objects);
    let plan =
        shortest_plan(&ctx.symbolic, &ctx.goal, &actions, MAX_DEPTH).ok_or(PlanError::NoPlan)?;
    let Some(first) = plan.first().cloned() else {
        return Err(PlanError::GoalSatisfied);
    };
    let direct = Decision {
        action: first.clone(),
        rationale: Rationale::Direct,
        backend: DecisionBackend::Search,
    };
    let Some(safety) = &ctx.safety else {
        return Ok(direct);
    };
    let w = &ctx.world;
    let clearing = |action: GroundedAction| Decision {
        action,
        rationale: Rationale::Clearing,
        backend: DecisionBackend::Search,
    };

    if let Some(h) = &w.held {
        if !ctx.goal.iter().any(|g| g.mentions(h)) {
            if let Some(cell) = w.first_free_staging() {
                if let Some(a) = find(&actions, "place", &[h, &cell.name]) {
                    if is_applicable(&ctx.symbolic, a) {
                        return Ok(clearing(a.clone()));
                    }
                }
            }
        }
    }

    let (Some(target), Some(region)) = (first.subject(), sweep_region(w, &first)) else {
        return Ok(direct);
    };
    let risk = safety.matrix.get(&first.operator, target).unwrap_or(0.0);
    if !(risk > rho) {
        return Ok(direct);
    }
    let mut blockers: Vec<(f64, &str)> = w
        .clutter()
        .filter(|o| o.name != target && region.intersects(&o.disc()))
        .map(|o| {
            let r = safety.matrix.get("pick", &o.name).unwrap_or(0.0);
            (if r.is_finite() { r } else { f64::MIN }, o.name.as_str())
        })
        .collect();
    // highest risk first, ties by name
    blockers.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    for (_, name) in blockers {
        if w.is_held(name) {
            if let Some(cell) = w.first_free_staging() {
                if let Some(a) = find(&actions, "place", &[name, &cell.name]) {
                    return Ok(clearing(a.clone()));
                }
            }
        } else if let Some(a) = find(&actions, "pick", &[name]) {
            if is_applicable(&ctx.symbolic, a) {
                return Ok(clearing(a.clone()));
            }
        }
    }
    Ok(direct)
}

fn find<'a>(actions: &'a [GroundedAction], op: &str, args: &[&str]) -> Option<&'a GroundedAction> {
    actions.iter().find(|a| {
        a.operator == op
            && a.binding
                .iter()
                .map(String::as_str)
                .eq(args.iter().copied())
    })
}
