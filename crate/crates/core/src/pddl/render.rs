use std::fmt::Write;

use super::{Atom, Domain, Literal, Problem, TypedName, OBJECT_TYPE};

/// Group consecutive names sharing a type: `a b - t c - u`.
fn typed_names(items: &[TypedName]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < items.len() {
        let ty = &items[i].ty;
        let mut j = i;
        while j < items.len() && items[j].ty == *ty {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&items[j].name);
            j += 1;
        }
        // A trailing untyped group may omit `- object`; earlier ones may not.
        if ty != OBJECT_TYPE || j < items.len() {
            write!(out, " - {ty}").unwrap();
        }
        i = j;
    }
    out
}

fn literal(l: &Literal) -> String {
    let mut s = format!("({}", l.predicate);
    for a in &l.args {
        s.push(' ');
        s.push_str(a.name());
    }
    s.push(')');
    if l.negated {
        format!("(not {s})")
    } else {
        s
    }
}

fn conjunction(lits: &[Literal]) -> String {
    let parts: Vec<String> = lits.iter().map(literal).collect();
    format!("(and {})", parts.join(" "))
}

/// `(and (a x) (b y))` with atoms in the given order.
pub fn render_atoms_conjunction(atoms: &[Atom]) -> String {
    let parts: Vec<String> = atoms.iter().map(ToString::to_string).collect();
    format!("(and {})", parts.join(" "))
}

/// Canonical domain text: lower case, two-space indent.
pub fn render_domain(d: &Domain) -> String {
    let mut s = format!("(define (domain {})\n", d.name);
    if !d.requirements.is_empty() {
        writeln!(s, "  (:requirements {})", d.requirements.join(" ")).unwrap();
    }
    if !d.types.is_empty() {
        let types: Vec<TypedName> = d
            .types
            .iter()
            .map(|(t, p)| TypedName::new(t.clone(), p.clone()))
            .collect();
        writeln!(s, "  (:types {})", typed_names(&types)).unwrap();
    }
    if !d.constants.is_empty() {
        writeln!(s, "  (:constants {})", typed_names(&d.constants)).unwrap();
    }
    if !d.predicates.is_empty() {
        s.push_str("  (:predicates\n");
        for p in &d.predicates {
            if p.params.is_empty() {
                writeln!(s, "    ({})", p.name).unwrap();
            } else {
                writeln!(s, "    ({} {})", p.name, typed_names(&p.params)).unwrap();
            }
        }
        s.push_str("  )\n");
    }
    for op in &d.operators {
        writeln!(s, "  (:action {}", op.name).unwrap();
        writeln!(s, "    :parameters ({})", typed_names(&op.params)).unwrap();
        writeln!(s, "    :precondition {}", conjunction(&op.preconditions)).unwrap();
        writeln!(s, "    :effect {})", conjunction(&op.effects)).unwrap();
    }
    s.push(')');
    s.push('\n');
    s
}

pub fn render_problem(p: &Problem) -> String {
    let mut s = format!("(define (problem {})\n", p.name);
    writeln!(s, "  (:domain {})", p.domain_name).unwrap();
    writeln!(s, "  (:objects {})", typed_names(&p.objects)).unwrap();
    s.push_str("  (:init");
    for a in &p.init.atoms {
        write!(s, "\n    {a}").unwrap();
    }
    s.push_str(")\n");
    writeln!(s, "  (:goal {}))", render_atoms_conjunction(&p.goal)).unwrap();
    s
}
