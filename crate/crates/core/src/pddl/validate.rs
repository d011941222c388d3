use super::{apply, is_applicable, Plan, Problem, SymbolicState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanReport {
    pub valid: bool,
    /// First step that was not applicable, if any.
    pub failing_step: Option<usize>,
    /// State reached before the failing step, or after the last step.
    pub final_state: SymbolicState,
}

/// Step through `plan` from the problem's initial state.
pub fn validate_plan(problem: &Problem, plan: &Plan) -> PlanReport {
    validate_from(&problem.init, &problem.goal, plan)
}

pub(crate) fn validate_from(init: &SymbolicState, goal: &[super::Atom], plan: &Plan) -> PlanReport {
    let mut state = init.clone();
    for (i, step) in plan.steps.iter().enumerate() {
        if !is_applicable(&state, step) {
            return PlanReport {
                valid: false,
                failing_step: Some(i),
                final_state: state,
            };
        }
        state = apply(&state, step).expect("checked applicable");
    }
    PlanReport {
        valid: state.satisfies(goal),
        failing_step: None,
        final_state: state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{ground_actions, parse_domain, parse_problem, Atom, GroundedAction};

    fn setup() -> (Problem, Vec<GroundedAction>) {
        let d = parse_domain(
            "(define (domain kitchen)
              (:types item surface)
              (:predicates (on ?o - item ?s - surface) (holding ?o - item) (handempty))
              (:action pick :parameters (?o - item ?s - surface)
                :precondition (and (on ?o ?s) (handempty))
                :effect (and (holding ?o) (not (on ?o ?s)) (not (handempty))))
              (:action place :parameters (?o - item ?s - surface)
                :precondition (holding ?o)
                :effect (and (on ?o ?s) (handempty) (not (holding ?o)))))",
        )
        .unwrap();
        let p = parse_problem(
            "(define (problem move) (:domain kitchen)
               (:objects apple - item table chair - surface)
               (:init (on apple table) (handempty))
               (:goal (and (on apple chair))))",
            &d,
        )
        .unwrap();
        let acts = ground_actions(&d, &p.all_objects(&d));
        (p, acts)
    }

    fn step(acts: &[GroundedAction], call: &str) -> GroundedAction {
        acts.iter().find(|a| a.call() == call).unwrap().clone()
    }

    #[test]
    fn valid_two_step_plan() {
        let (p, acts) = setup();
        let plan = Plan {
            steps: vec![
                step(&acts, "(pick apple table)"),
                step(&acts, "(place apple chair)"),
            ],
        };
        let r = validate_plan(&p, &plan);
        assert!(r.valid);
        assert!(r.final_state.holds(&Atom::new("on", ["apple", "chair"])));
    }

    #[test]
    fn empty_plan_on_satisfied_goal() {
        let (mut p, _) = setup();
        p.goal = vec![Atom::new("on", ["apple", "table"])];
        assert!(validate_plan(&p, &Plan::default()).valid);
        p.goal.clear();
        assert!(validate_plan(&p, &Plan::default()).valid);
    }

    #[test]
    fn inapplicable_first_step() {
        let (p, acts) = setup();
        let plan = Plan {
            steps: vec![step(&acts, "(place apple chair)")],
        };
        let r = validate_plan(&p, &plan);
        assert!(!r.valid);
        assert_eq!(r.failing_step, Some(0));
        assert_eq!(r.final_state, p.init);
    }
}
