use std::collections::{BTreeMap, BTreeSet};

use super::sexpr::{read_one, Loc, Sexpr};
use super::{
    type_map, Atom, Domain, Literal, OperatorSchema, PddlError, PredicateSchema, Problem,
    SymbolicState, Term, TypedName, OBJECT_TYPE,
};

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing", ":negative-preconditions"];

fn syntax(loc: Loc, msg: impl Into<String>) -> PddlError {
    PddlError::Syntax {
        loc,
        msg: msg.into(),
    }
}

/// Parse `a b - t c` style lists. Untyped names default to `object`.
fn typed_list(items: &[Sexpr]) -> Result<Vec<(TypedName, Loc)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Loc)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sym = items[i].expect_sym("name")?;
        if sym == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| syntax(items[i].loc(), "`-` without a type"))?
                .expect_sym("type name")?;
            if pending.is_empty() {
                return Err(syntax(items[i].loc(), "`-` without preceding names"));
            }
            for (n, l) in pending.drain(..) {
                out.push((TypedName::new(n, ty), l));
            }
            i += 2;
        } else {
            pending.push((sym.to_string(), items[i].loc()));
            i += 1;
        }
    }
    for (n, l) in pending {
        out.push((TypedName::new(n, OBJECT_TYPE), l));
    }
    Ok(out)
}

fn expect_define<'a>(text: &str, kind: &str) -> Result<(Vec<Sexpr>, Loc), PddlError> {
    let root = read_one(text)?;
    let loc = root.loc();
    let items = root.expect_list("(define ...)")?.to_vec();
    if items.first().and_then(Sexpr::as_sym) != Some("define") {
        return Err(syntax(loc, "expected (define ...)"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| syntax(loc, format!("missing ({kind} name)")))?;
    let h = header.expect_list("header")?;
    if h.len() != 2 || h[0].as_sym() != Some(kind) {
        return Err(syntax(header.loc(), format!("expected ({kind} name)")));
    }
    Ok((items, loc))
}

pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let (items, _) = expect_define(text, "domain")?;
    let name = items[1].as_list().unwrap()[1]
        .expect_sym("domain name")?
        .to_string();

    let mut domain = Domain {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        operators: Vec::new(),
    };
    let mut type_refs: Vec<(String, Loc)> = Vec::new();
    let mut actions: Vec<&Sexpr> = Vec::new();

    for section in &items[2..] {
        let list = section.expect_list("domain section")?;
        let key = section
            .head()
            .ok_or_else(|| syntax(section.loc(), "empty section"))?;
        match key {
            ":requirements" => {
                for r in &list[1..] {
                    let r_name = r.expect_sym("requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name) {
                        return Err(PddlError::UnsupportedRequirement {
                            loc: r.loc(),
                            name: r_name.to_string(),
                        });
                    }
                    domain.requirements.push(r_name.to_string());
                }
            }
            ":types" => {
                for (t, loc) in typed_list(&list[1..])? {
                    if t.name == OBJECT_TYPE {
                        continue;
                    }
                    if domain.types.iter().any(|(n, _)| *n == t.name) {
                        return Err(PddlError::DuplicateName { loc, name: t.name });
                    }
                    domain.types.push((t.name, t.ty));
                }
            }
            ":constants" => {
                for (c, loc) in typed_list(&list[1..])? {
                    if domain.constants.iter().any(|o| o.name == c.name) {
                        return Err(PddlError::DuplicateName { loc, name: c.name });
                    }
                    type_refs.push((c.ty.clone(), loc));
                    domain.constants.push(c);
                }
            }
            ":predicates" => {
                for p in &list[1..] {
                    let pl = p.expect_list("predicate declaration")?;
                    let pname = pl
                        .first()
                        .ok_or_else(|| syntax(p.loc(), "empty predicate declaration"))?
                        .expect_sym("predicate name")?;
                    if domain.predicates.iter().any(|q| q.name == pname) {
                        return Err(PddlError::DuplicateName {
                            loc: p.loc(),
                            name: pname.to_string(),
                        });
                    }
                    let params = unique_params(&pl[1..])?;
                    for (param, loc) in &params {
                        type_refs.push((param.ty.clone(), *loc));
                    }
                    domain.predicates.push(PredicateSchema {
                        name: pname.to_string(),
                        params: params.into_iter().map(|(p, _)| p).collect(),
                    });
                }
            }
            ":action" => actions.push(section),
            other => {
                return Err(syntax(
                    section.loc(),
                    format!("unsupported section {other}"),
                ))
            }
        }
    }

    // Parent types mentioned only on the right of `-` are implicitly declared roots.
    let declared: BTreeSet<String> = domain.types.iter().map(|(t, _)| t.clone()).collect();
    let mut implicit = Vec::new();
    for (_, parent) in &domain.types {
        if parent != OBJECT_TYPE && !declared.contains(parent) && !implicit.contains(parent) {
            implicit.push(parent.clone());
        }
    }
    for p in implicit {
        domain.types.push((p, OBJECT_TYPE.to_string()));
    }
    check_acyclic(&domain)?;

    for (ty, loc) in &type_refs {
        if !domain.has_type(ty) {
            return Err(PddlError::UnknownType {
                loc: *loc,
                name: ty.clone(),
            });
        }
    }

    for action in actions {
        let op = parse_action(action, &domain)?;
        if domain.operator(&op.name).is_some() {
            return Err(PddlError::DuplicateOperator {
                loc: action.loc(),
                name: op.name,
            });
        }
        domain.operators.push(op);
    }
    Ok(domain)
}

fn unique_params(items: &[Sexpr]) -> Result<Vec<(TypedName, Loc)>, PddlError> {
    let params = typed_list(items)?;
    let mut seen = BTreeSet::new();
    for (p, loc) in &params {
        if !p.name.starts_with('?') {
            return Err(syntax(
                *loc,
                format!("parameter {} must start with `?`", p.name),
            ));
        }
        if !seen.insert(p.name.clone()) {
            return Err(PddlError::DuplicateName {
                loc: *loc,
                name: p.name.clone(),
            });
        }
    }
    Ok(params)
}

fn check_acyclic(domain: &Domain) -> Result<(), PddlError> {
    let parents: BTreeMap<&str, &str> = domain
        .types
        .iter()
        .map(|(t, p)| (t.as_str(), p.as_str()))
        .collect();
    for (t, _) in &domain.types {
        let mut cur = t.as_str();
        let mut steps = 0;
        while let Some(p) = parents.get(cur) {
            if *p == t.as_str() {
                return Err(PddlError::TypeCycle { name: t.clone() });
            }
            cur = p;
            steps += 1;
            if steps > parents.len() {
                return Err(PddlError::TypeCycle { name: t.clone() });
            }
        }
    }
    Ok(())
}

fn parse_action(section: &Sexpr, domain: &Domain) -> Result<OperatorSchema, PddlError> {
    let list = section.as_list().unwrap();
    let name = list
        .get(1)
        .ok_or_else(|| syntax(section.loc(), "action without a name"))?
        .expect_sym("action name")?
        .to_string();
    let mut params = Vec::new();
    let mut pre = Vec::new();
    let mut eff = Vec::new();
    let mut i = 2;
    while i < list.len() {
        let key = list[i].expect_sym("action keyword")?;
        let value = list
            .get(i + 1)
            .ok_or_else(|| syntax(list[i].loc(), format!("{key} without a value")))?;
        match key {
            ":parameters" => {
                let ps = unique_params(value.expect_list("parameter list")?)?;
                for (p, loc) in &ps {
                    if !domain.has_type(&p.ty) {
                        return Err(PddlError::UnknownType {
                            loc: *loc,
                            name: p.ty.clone(),
                        });
                    }
                }
                params = ps.into_iter().map(|(p, _)| p).collect();
            }
            ":precondition" => pre = conjunction(value)?,
            ":effect" => eff = conjunction(value)?,
            other => {
                return Err(syntax(
                    list[i].loc(),
                    format!("unsupported action key {other}"),
                ))
            }
        }
        i += 2;
    }
    let param_names: BTreeSet<&str> = params.iter().map(|p| p.name.as_str()).collect();
    let check = |items: &[(Literal, Loc)]| -> Result<Vec<Literal>, PddlError> {
        items
            .iter()
            .map(|(lit, loc)| {
                check_literal_shape(domain, lit, *loc)?;
                for a in &lit.args {
                    match a {
                        Term::Var(v) if !param_names.contains(v.as_str()) => {
                            return Err(PddlError::UnboundVariable {
                                loc: *loc,
                                var: v.clone(),
                            })
                        }
                        Term::Const(c) if !domain.constants.iter().any(|k| k.name == *c) => {
                            return Err(PddlError::UnknownObject {
                                loc: *loc,
                                name: c.clone(),
                            })
                        }
                        _ => {}
                    }
                }
                Ok(lit.clone())
            })
            .collect()
    };
    let preconditions = check(&pre)?;
    let effects = check(&eff)?;
    Ok(OperatorSchema {
        name,
        params,
        preconditions,
        effects,
    })
}

fn check_literal_shape(domain: &Domain, lit: &Literal, loc: Loc) -> Result<(), PddlError> {
    let schema = domain
        .predicate(&lit.predicate)
        .ok_or_else(|| PddlError::UnknownPredicate {
            loc,
            name: lit.predicate.clone(),
        })?;
    if schema.arity() != lit.args.len() {
        return Err(PddlError::ArityMismatch {
            loc,
            predicate: lit.predicate.clone(),
            expected: schema.arity(),
            found: lit.args.len(),
        });
    }
    Ok(())
}

/// `(and l1 l2 ...)`, a single literal, or `()`.
fn conjunction(expr: &Sexpr) -> Result<Vec<(Literal, Loc)>, PddlError> {
    let list = expr.expect_list("condition")?;
    if list.is_empty() {
        return Ok(Vec::new());
    }
    if expr.head() == Some("and") {
        list[1..]
            .iter()
            .map(|e| Ok((literal(e)?, e.loc())))
            .collect()
    } else {
        Ok(vec![(literal(expr)?, expr.loc())])
    }
}

fn literal(expr: &Sexpr) -> Result<Literal, PddlError> {
    let list = expr.expect_list("literal")?;
    match expr.head() {
        Some("not") => {
            if list.len() != 2 {
                return Err(syntax(expr.loc(), "`not` takes exactly one literal"));
            }
            let mut inner = literal(&list[1])?;
            if inner.negated {
                return Err(syntax(expr.loc(), "nested negation"));
            }
            inner.negated = true;
            Ok(inner)
        }
        Some(kw @ ("and" | "or" | "forall" | "exists" | "when" | "imply" | "=")) => Err(syntax(
            expr.loc(),
            format!("`{kw}` is outside the supported STRIPS subset"),
        )),
        Some(pred) => {
            let args = list[1..]
                .iter()
                .map(|a| {
                    let s = a.expect_sym("term")?;
                    Ok(if s.starts_with('?') {
                        Term::Var(s.to_string())
                    } else {
                        Term::Const(s.to_string())
                    })
                })
                .collect::<Result<Vec<_>, PddlError>>()?;
            Ok(Literal {
                predicate: pred.to_string(),
                args,
                negated: false,
            })
        }
        None => Err(syntax(
            expr.loc(),
            "literal must start with a predicate name",
        )),
    }
}

/// Check a ground atom against the domain and a typed object table.
fn ground_atom(
    domain: &Domain,
    objects: &BTreeMap<&str, &str>,
    lit: &Literal,
    loc: Loc,
) -> Result<Atom, PddlError> {
    check_literal_shape(domain, lit, loc)?;
    let schema = domain.predicate(&lit.predicate).unwrap();
    let mut args = Vec::with_capacity(lit.args.len());
    for (term, param) in lit.args.iter().zip(&schema.params) {
        let name = match term {
            Term::Var(v) => {
                return Err(PddlError::NonGroundGoal {
                    loc,
                    var: v.clone(),
                })
            }
            Term::Const(c) => c,
        };
        let ty = objects
            .get(name.as_str())
            .ok_or_else(|| PddlError::UnknownObject {
                loc,
                name: name.clone(),
            })?;
        if !domain.is_subtype(ty, &param.ty) {
            return Err(PddlError::TypeMismatch {
                loc,
                predicate: lit.predicate.clone(),
                arg: name.clone(),
                expected: param.ty.clone(),
            });
        }
        args.push(name.clone());
    }
    Ok(Atom {
        predicate: lit.predicate.clone(),
        args,
    })
}

fn goal_atoms(
    domain: &Domain,
    objects: &BTreeMap<&str, &str>,
    expr: &Sexpr,
) -> Result<Vec<Atom>, PddlError> {
    let mut out = Vec::new();
    for (lit, loc) in conjunction(expr)? {
        if lit.negated {
            return Err(PddlError::NegativeGoal { loc });
        }
        let atom = ground_atom(domain, objects, &lit, loc)?;
        if !out.contains(&atom) {
            out.push(atom);
        }
    }
    Ok(out)
}

pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, PddlError> {
    let (items, loc) = expect_define(text, "problem")?;
    let name = items[1].as_list().unwrap()[1]
        .expect_sym("problem name")?
        .to_string();
    let mut domain_name = None;
    let mut objects: Vec<TypedName> = Vec::new();
    let mut init_expr: Option<&Sexpr> = None;
    let mut goal_expr: Option<&Sexpr> = None;

    for section in &items[2..] {
        let list = section.expect_list("problem section")?;
        match section.head() {
            Some(":domain") => {
                let d = list
                    .get(1)
                    .ok_or_else(|| syntax(section.loc(), "(:domain) without a name"))?
                    .expect_sym("domain name")?;
                if d != domain.name {
                    return Err(PddlError::DomainMismatch {
                        loc: section.loc(),
                        expected: domain.name.clone(),
                        found: d.to_string(),
                    });
                }
                domain_name = Some(d.to_string());
            }
            Some(":objects") => {
                for (o, oloc) in typed_list(&list[1..])? {
                    if !domain.has_type(&o.ty) {
                        return Err(PddlError::UnknownType {
                            loc: oloc,
                            name: o.ty,
                        });
                    }
                    if objects.iter().any(|x| x.name == o.name) {
                        return Err(PddlError::DuplicateName {
                            loc: oloc,
                            name: o.name,
                        });
                    }
                    objects.push(o);
                }
            }
            Some(":init") => init_expr = Some(section),
            Some(":goal") => {
                if list.len() != 2 {
                    return Err(syntax(section.loc(), "(:goal) takes one expression"));
                }
                goal_expr = Some(&list[1]);
            }
            Some(":requirements") => {}
            _ => return Err(syntax(section.loc(), "unsupported problem section")),
        }
    }
    let domain_name = domain_name.ok_or_else(|| syntax(loc, "missing (:domain ...)"))?;

    let mut all = objects.clone();
    for c in &domain.constants {
        if !all.iter().any(|o| o.name == c.name) {
            all.push(c.clone());
        }
    }
    let table = type_map(&all);

    let mut init = SymbolicState::default();
    if let Some(section) = init_expr {
        for e in &section.as_list().unwrap()[1..] {
            let lit = literal(e)?;
            if lit.negated {
                return Err(syntax(e.loc(), "negative literal in :init"));
            }
            init.atoms
                .insert(ground_atom(domain, &table, &lit, e.loc())?);
        }
    }
    let goal = match goal_expr {
        Some(g) => goal_atoms(domain, &table, g)?,
        None => Vec::new(),
    };
    Ok(Problem {
        name,
        domain_name,
        objects,
        init,
        goal,
    })
}

/// Parse a standalone goal conjunction such as `(and (on apple chair))`.
pub fn parse_goal(
    text: &str,
    domain: &Domain,
    objects: &[TypedName],
) -> Result<Vec<Atom>, PddlError> {
    let expr = read_one(text)?;
    let mut all = objects.to_vec();
    all.extend(domain.constants.iter().cloned());
    goal_atoms(domain, &type_map(&all), &expr)
}

/// Parse an operator call like `(pick apple)` into its name and arguments.
pub fn parse_action_call(text: &str) -> Result<(String, Vec<String>), PddlError> {
    let expr = read_one(text)?;
    let list = expr.expect_list("operator call")?;
    let name = list
        .first()
        .ok_or_else(|| syntax(expr.loc(), "empty operator call"))?
        .expect_sym("operator name")?
        .to_string();
    let args = list[1..]
        .iter()
        .map(|a| a.expect_sym("argument").map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((name, args))
}
