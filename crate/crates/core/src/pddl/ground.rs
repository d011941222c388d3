use std::collections::BTreeMap;

use super::{
    objects_of_type, Atom, Domain, GroundedAction, Literal, OperatorSchema, PddlError,
    SymbolicState, Term, TypedName,
};

fn instantiate(lit: &Literal, binding: &BTreeMap<&str, &str>) -> Atom {
    Atom {
        predicate: lit.predicate.clone(),
        args: lit
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding[v.as_str()].to_string(),
                Term::Const(c) => c.clone(),
            })
            .collect(),
    }
}

fn ground_one(op: &OperatorSchema, values: &[&str]) -> GroundedAction {
    let binding: BTreeMap<&str, &str> = op
        .params
        .iter()
        .map(|p| p.name.as_str())
        .zip(values.iter().copied())
        .collect();
    let mut act = GroundedAction {
        operator: op.name.clone(),
        binding: values.iter().map(|v| v.to_string()).collect(),
        pre_pos: Vec::new(),
        pre_neg: Vec::new(),
        add: Vec::new(),
        del: Vec::new(),
    };
    for lit in &op.preconditions {
        let a = instantiate(lit, &binding);
        let set = if lit.negated {
            &mut act.pre_neg
        } else {
            &mut act.pre_pos
        };
        if !set.contains(&a) {
            set.push(a);
        }
    }
    for lit in op.effects.iter().filter(|l| !l.negated) {
        let a = instantiate(lit, &binding);
        if !act.add.contains(&a) {
            act.add.push(a);
        }
    }
    // An atom both added and deleted is added: delete-then-add keeps the sets disjoint.
    for lit in op.effects.iter().filter(|l| l.negated) {
        let a = instantiate(lit, &binding);
        if !act.add.contains(&a) && !act.del.contains(&a) {
            act.del.push(a);
        }
    }
    act
}

/// Every type-consistent binding of every operator, in operator declaration
/// order and then lexicographic binding order.
pub fn ground_actions(domain: &Domain, objects: &[TypedName]) -> Vec<GroundedAction> {
    let mut out = Vec::new();
    for op in &domain.operators {
        let candidates: Vec<Vec<&str>> = op
            .params
            .iter()
            .map(|p| objects_of_type(domain, objects, &p.ty))
            .collect();
        if candidates.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; candidates.len()];
        loop {
            let values: Vec<&str> = idx.iter().zip(&candidates).map(|(&i, c)| c[i]).collect();
            out.push(ground_one(op, &values));
            // odometer increment, last position fastest
            let mut done = true;
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < candidates[k].len() {
                    done = false;
                    break;
                }
                idx[k] = 0;
            }
            if done {
                break;
            }
        }
    }
    out
}

/// Ground one operator with the given argument values. Types are not checked.
pub fn instantiate_action(
    domain: &Domain,
    operator: &str,
    values: &[&str],
) -> Result<GroundedAction, PddlError> {
    let op = domain
        .operator(operator)
        .ok_or_else(|| PddlError::UnknownOperator(operator.to_string()))?;
    if op.params.len() != values.len() {
        return Err(PddlError::ArityMismatch {
            loc: Default::default(),
            predicate: operator.to_string(),
            expected: op.params.len(),
            found: values.len(),
        });
    }
    Ok(ground_one(op, values))
}

pub fn is_applicable(state: &SymbolicState, action: &GroundedAction) -> bool {
    action.pre_pos.iter().all(|a| state.atoms.contains(a))
        && !action.pre_neg.iter().any(|a| state.atoms.contains(a))
}

/// `(s - del) ∪ add`; the input state is left untouched.
pub fn apply(state: &SymbolicState, action: &GroundedAction) -> Result<SymbolicState, PddlError> {
    if !is_applicable(state, action) {
        return Err(PddlError::Inapplicable(action.call()));
    }
    let mut next = state.clone();
    for d in &action.del {
        next.atoms.remove(d);
    }
    for a in &action.add {
        next.atoms.insert(a.clone());
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::parse_domain;

    fn kitchen() -> Domain {
        parse_domain(
            "(define (domain kitchen)
              (:requirements :strips :typing)
              (:types item surface)
              (:predicates (on ?o - item ?s - surface) (holding ?o - item) (handempty))
              (:action pick
                :parameters (?o - item ?s - surface)
                :precondition (and (on ?o ?s) (handempty))
                :effect (and (holding ?o) (not (on ?o ?s)) (not (handempty))))
              (:action place
                :parameters (?o - item ?s - surface)
                :precondition (holding ?o)
                :effect (and (on ?o ?s) (handempty) (not (holding ?o))))
              (:action wait :parameters () :precondition () :effect ()))",
        )
        .unwrap()
    }

    fn objs(list: &[(&str, &str)]) -> Vec<TypedName> {
        list.iter().map(|(n, t)| TypedName::new(*n, *t)).collect()
    }

    #[test]
    fn grounding_cardinality_and_order() {
        let d = kitchen();
        let o = objs(&[
            ("pear", "item"),
            ("apple", "item"),
            ("table", "surface"),
            ("chair", "surface"),
        ]);
        let acts = ground_actions(&d, &o);
        let places: Vec<String> = acts
            .iter()
            .filter(|a| a.operator == "place")
            .map(|a| a.call())
            .collect();
        assert_eq!(
            places,
            [
                "(place apple chair)",
                "(place apple table)",
                "(place pear chair)",
                "(place pear table)"
            ]
        );
        // pick 4 + place 4 + the nullary wait
        assert_eq!(acts.len(), 9);
        assert_eq!(acts[0].operator, "pick");
        assert_eq!(acts[8].operator, "wait");
    }

    #[test]
    fn single_parameter_grounding() {
        let d = parse_domain(
            "(define (domain d) (:types item) (:predicates (held ?o - item))
              (:action pick :parameters (?o - item) :precondition () :effect (held ?o)))",
        )
        .unwrap();
        let o = objs(&[("a", "item"), ("b", "item"), ("c", "item")]);
        assert_eq!(ground_actions(&d, &o).len(), 3);
    }

    #[test]
    fn untypeable_parameter_contributes_nothing() {
        let d = kitchen();
        let o = objs(&[("apple", "item")]);
        assert!(ground_actions(&d, &o).iter().all(|a| a.operator == "wait"));
    }

    #[test]
    fn applicability_and_effects() {
        let d = kitchen();
        let o = objs(&[
            ("apple", "item"),
            ("table", "surface"),
            ("chair", "surface"),
        ]);
        let acts = ground_actions(&d, &o);
        let find = |c: &str| acts.iter().find(|a| a.call() == c).unwrap().clone();
        let pick = find("(pick apple table)");
        let s0 = SymbolicState::new([
            Atom::new("on", ["apple", "table"]),
            Atom::new::<&str>("handempty", []),
        ]);
        assert!(is_applicable(&s0, &pick));
        let holding = SymbolicState::new([Atom::new("holding", ["apple"])]);
        assert!(!is_applicable(&holding, &pick));

        let s1 = apply(&s0, &pick).unwrap();
        assert_eq!(s1, SymbolicState::new([Atom::new("holding", ["apple"])]));
        assert_eq!(s0.len(), 2, "input state must be untouched");

        let wait = find("(wait)");
        assert!(is_applicable(&holding, &wait));
        assert_eq!(apply(&holding, &wait).unwrap(), holding);

        // place back onto the original surface restores the atoms over apple
        let back = apply(&s1, &find("(place apple table)")).unwrap();
        assert_eq!(back, s0);
        assert!(matches!(
            apply(&s0, &find("(place apple chair)")),
            Err(PddlError::Inapplicable(_))
        ));
    }

    #[test]
    fn negative_preconditions() {
        let d = parse_domain(
            "(define (domain d) (:requirements :strips :negative-preconditions)
              (:predicates (busy))
              (:action start :parameters () :precondition (not (busy)) :effect (busy)))",
        )
        .unwrap();
        let a = &ground_actions(&d, &[])[0];
        assert!(is_applicable(&SymbolicState::default(), a));
        assert!(!is_applicable(
            &SymbolicState::new([Atom::new::<&str>("busy", [])]),
            a
        ));
    }

    #[test]
    fn add_wins_over_delete() {
        let d = parse_domain(
            "(define (domain d) (:predicates (at ?x))
              (:action move :parameters (?a ?b) :precondition (at ?a)
                :effect (and (not (at ?a)) (at ?b))))",
        )
        .unwrap();
        let o = objs(&[("x", "object")]);
        let a = &ground_actions(&d, &o)[0];
        assert!(a.del.is_empty());
        let s = SymbolicState::new([Atom::new("at", ["x"])]);
        assert_eq!(apply(&s, a).unwrap(), s);
    }
}
