//! Random STRIPS domains, problems and plans, plus an interpreter that works
//! on the generator's own description rather than the parsed form.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use safe_planner::pddl::{ground_actions, parse_domain, parse_problem, validate_plan, Atom, Plan};

// Generator-side description of a domain, kept separate from the parsed form.
#[derive(Debug, Clone)]
pub struct Lit {
    pred: usize,
    args: Vec<usize>, // parameter indices
    neg: bool,
}

#[derive(Debug, Clone)]
pub struct Op {
    params: Vec<usize>, // type index per parameter
    pre: Vec<Lit>,
    eff: Vec<Lit>,
}

#[derive(Debug, Clone)]
pub struct Blueprint {
    pub types: usize,
    pub preds: Vec<Vec<usize>>, // parameter types
    pub ops: Vec<Op>,
    pub objects: Vec<usize>,    // type per object
    pub init: BTreeSet<String>, // "pred a b"
    pub goal: Vec<String>,
}

fn atom_key(pred: usize, args: &[String]) -> String {
    let mut s = format!("p{pred}");
    for a in args {
        s.push(' ');
        s.push_str(a);
    }
    s
}

fn literal_for(
    rng: &mut ChaCha8Rng,
    preds: &[Vec<usize>],
    params: &[usize],
    allow_neg: bool,
) -> Option<Lit> {
    let pred = rng.gen_range(0..preds.len());
    let mut args = Vec::new();
    for &ty in &preds[pred] {
        let options: Vec<usize> = (0..params.len()).filter(|&i| params[i] == ty).collect();
        if options.is_empty() {
            return None;
        }
        args.push(options[rng.gen_range(0..options.len())]);
    }
    Some(Lit {
        pred,
        args,
        neg: allow_neg && rng.gen_bool(0.3),
    })
}

pub fn random_blueprint(seed: u64) -> Blueprint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = rng.gen_range(1..=2);
    let preds: Vec<Vec<usize>> = (0..rng.gen_range(1..=4))
        .map(|_| {
            (0..rng.gen_range(0..=2))
                .map(|_| rng.gen_range(0..types))
                .collect()
        })
        .collect();
    let mut ops = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let params: Vec<usize> = (0..rng.gen_range(0..=2))
            .map(|_| rng.gen_range(0..types))
            .collect();
        let mut pre = Vec::new();
        let mut eff = Vec::new();
        for _ in 0..rng.gen_range(0..=3) {
            pre.extend(literal_for(&mut rng, &preds, &params, true));
        }
        for _ in 0..rng.gen_range(1..=3) {
            eff.extend(literal_for(&mut rng, &preds, &params, true));
        }
        ops.push(Op { params, pre, eff });
    }
    let objects: Vec<usize> = (0..rng.gen_range(1..=5))
        .map(|_| rng.gen_range(0..types))
        .collect();
    let mut all_atoms = Vec::new();
    for (p, tys) in preds.iter().enumerate() {
        let mut combos: Vec<Vec<String>> = vec![vec![]];
        for &ty in tys {
            let names: Vec<String> = (0..objects.len())
                .filter(|&i| objects[i] == ty)
                .map(|i| format!("x{i}"))
                .collect();
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    names
                        .iter()
                        .map(move |n| [c.clone(), vec![n.clone()]].concat())
                })
                .collect();
        }
        all_atoms.extend(combos.into_iter().map(|c| atom_key(p, &c)));
    }
    let init = all_atoms
        .iter()
        .filter(|_| rng.gen_bool(0.4))
        .cloned()
        .collect();
    let goal = all_atoms
        .iter()
        .filter(|_| rng.gen_bool(0.2))
        .cloned()
        .collect();
    Blueprint {
        types,
        preds,
        ops,
        objects,
        init,
        goal,
    }
}

fn render_lit(l: &Lit) -> String {
    let mut s = format!("(p{}", l.pred);
    for a in &l.args {
        s.push_str(&format!(" ?v{a}"));
    }
    s.push(')');
    if l.neg {
        format!("(not {s})")
    } else {
        s
    }
}

pub fn domain_text(s: &Blueprint) -> String {
    let types: Vec<String> = (0..s.types).map(|t| format!("t{t}")).collect();
    let mut out = format!(
        "(define (domain rnd)\n (:requirements :strips :typing)\n (:types {})\n (:predicates",
        types.join(" ")
    );
    for (p, tys) in s.preds.iter().enumerate() {
        out.push_str(&format!(" (p{p}"));
        for (i, t) in tys.iter().enumerate() {
            out.push_str(&format!(" ?a{i} - t{t}"));
        }
        out.push(')');
    }
    out.push(')');
    for (k, op) in s.ops.iter().enumerate() {
        let params: Vec<String> = op
            .params
            .iter()
            .enumerate()
            .map(|(i, t)| format!("?v{i} - t{t}"))
            .collect();
        let pre: Vec<String> = op.pre.iter().map(render_lit).collect();
        let eff: Vec<String> = op.eff.iter().map(render_lit).collect();
        out.push_str(&format!(
            "\n (:action op{k} :parameters ({}) :precondition (and {}) :effect (and {}))",
            params.join(" "),
            pre.join(" "),
            eff.join(" ")
        ));
    }
    out.push(')');
    out
}

fn paren(key: &str) -> String {
    format!("({key})")
}

pub fn problem_text(s: &Blueprint) -> String {
    let objs: Vec<String> = s
        .objects
        .iter()
        .enumerate()
        .map(|(i, t)| format!("x{i} - t{t}"))
        .collect();
    let init: Vec<String> = s.init.iter().map(|k| paren(k)).collect();
    let goal: Vec<String> = s.goal.iter().map(|k| paren(k)).collect();
    format!(
        "(define (problem rp) (:domain rnd) (:objects {}) (:init {}) (:goal (and {})))",
        objs.join(" "),
        init.join(" "),
        goal.join(" ")
    )
}

/// Step-by-step interpreter over the generator's own description.
pub fn interpret(
    s: &Blueprint,
    plan: &[(usize, Vec<String>)],
) -> (bool, Option<usize>, BTreeSet<String>) {
    let inst = |l: &Lit, b: &[String]| {
        atom_key(
            l.pred,
            &l.args.iter().map(|&i| b[i].clone()).collect::<Vec<_>>(),
        )
    };
    let mut state = s.init.clone();
    for (i, (op, b)) in plan.iter().enumerate() {
        let op = &s.ops[*op];
        let ok = op.pre.iter().all(|l| state.contains(&inst(l, b)) != l.neg);
        if !ok {
            return (false, Some(i), state);
        }
        let adds: BTreeSet<String> = op
            .eff
            .iter()
            .filter(|l| !l.neg)
            .map(|l| inst(l, b))
            .collect();
        for l in op.eff.iter().filter(|l| l.neg) {
            state.remove(&inst(l, b));
        }
        state.extend(adds);
    }
    let valid = s.goal.iter().all(|g| state.contains(g));
    (valid, None, state)
}

pub fn key_of(a: &Atom) -> String {
    let mut s = a.predicate.clone();
    for x in &a.args {
        s.push(' ');
        s.push_str(x);
    }
    s
}

/// Build a random instance and compare `validate_plan` with the interpreter.
/// Steps lean toward applicable actions so long valid prefixes occur.
pub fn validate_agrees(seed: u64, plan_seed: u64, len: usize) -> Result<(), String> {
    let bp = random_blueprint(seed);
    let d = parse_domain(&domain_text(&bp)).map_err(|e| e.to_string())?;
    let p = parse_problem(&problem_text(&bp), &d).map_err(|e| e.to_string())?;
    let actions = ground_actions(&d, &p.all_objects(&d));
    let mut rng = ChaCha8Rng::seed_from_u64(plan_seed);
    let mut plan = Plan::default();
    let mut mine: Vec<(usize, Vec<String>)> = Vec::new();
    let op_index = |name: &str| -> usize { name[2..].parse().unwrap() };
    for _ in 0..len {
        if actions.is_empty() {
            break;
        }
        let mut pick = rng.gen_range(0..actions.len());
        if rng.gen_bool(0.7) {
            let ok = (0..actions.len()).find(|&k| {
                let a = &actions[(pick + k) % actions.len()];
                let mut probe = mine.clone();
                probe.push((op_index(&a.operator), a.binding.clone()));
                interpret(&bp, &probe).1.is_none()
            });
            if let Some(k) = ok {
                pick = (pick + k) % actions.len();
            }
        }
        let a = actions[pick].clone();
        mine.push((op_index(&a.operator), a.binding.clone()));
        plan.steps.push(a);
    }
    let report = validate_plan(&p, &plan);
    let (valid, failing, state) = interpret(&bp, &mine);
    let got: BTreeSet<String> = report.final_state.atoms.iter().map(key_of).collect();
    if (report.valid, report.failing_step, &got) != (valid, failing, &state) {
        return Err(format!(
            "seed {seed}/{plan_seed}: validator ({}, {:?}) vs interpreter ({valid}, {failing:?})",
            report.valid, report.failing_step
        ));
    }
    Ok(())
}
