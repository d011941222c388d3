//! STRIPS + typing subset of PDDL: data model, parser, renderer, grounding and
//! state-transition semantics.

mod ground;
mod parse;
mod render;
pub mod sexpr;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use ground::{apply, ground_actions, instantiate_action, is_applicable};
pub use parse::{parse_action_call, parse_domain, parse_goal, parse_problem};
pub use render::{render_atoms_conjunction, render_domain, render_problem};
pub use sexpr::Loc;
pub use validate::{validate_plan, PlanReport};

/// Root of every type hierarchy.
pub const OBJECT_TYPE: &str = "object";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PddlError {
    #[error("{loc}: syntax error: {msg}")]
    Syntax { loc: Loc, msg: String },
    #[error("{loc}: unknown type {name}")]
    UnknownType { loc: Loc, name: String },
    #[error("{loc}: unknown predicate {name}")]
    UnknownPredicate { loc: Loc, name: String },
    #[error("{loc}: unknown object {name}")]
    UnknownObject { loc: Loc, name: String },
    #[error("{loc}: duplicate operator {name}")]
    DuplicateOperator { loc: Loc, name: String },
    #[error("{loc}: duplicate name {name}")]
    DuplicateName { loc: Loc, name: String },
    #[error("{loc}: predicate {predicate} expects {expected} arguments, found {found}")]
    ArityMismatch {
        loc: Loc,
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("{loc}: variable {var} is not a parameter")]
    UnboundVariable { loc: Loc, var: String },
    #[error("{loc}: non-ground goal: variable {var}")]
    NonGroundGoal { loc: Loc, var: String },
    #[error("{loc}: negative goal literals are not supported")]
    NegativeGoal { loc: Loc },
    #[error("{loc}: argument {arg} of {predicate} is not of type {expected}")]
    TypeMismatch {
        loc: Loc,
        predicate: String,
        arg: String,
        expected: String,
    },
    #[error("type hierarchy has a cycle through {name}")]
    TypeCycle { name: String },
    #[error("{loc}: unsupported requirement {name}")]
    UnsupportedRequirement { loc: Loc, name: String },
    #[error("{loc}: problem is for domain {found}, expected {expected}")]
    DomainMismatch {
        loc: Loc,
        expected: String,
        found: String,
    },
    #[error("unknown operator {0}")]
    UnknownOperator(String),
    #[error("action {0} is not applicable")]
    Inapplicable(String),
}

/// Name with a declared type: typed parameters, objects and constants.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedName {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateSchema {
    pub name: String,
    pub params: Vec<TypedName>,
}

impl PredicateSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(v) | Term::Const(v) => v,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A possibly negated predicate application over variables or constants.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<Term>,
    pub negated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub preconditions: Vec<Literal>,
    pub effects: Vec<Literal>,
}

impl OperatorSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// Ground positive predicate instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<S: Into<String>>(
        predicate: impl Into<String>,
        args: impl IntoIterator<Item = S>,
    ) -> Self {
        Atom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn mentions(&self, object: &str) -> bool {
        self.args.iter().any(|a| a == object)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    /// (type, parent) pairs in declaration order; roots have parent `object`.
    pub types: Vec<(String, String)>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateSchema>,
    pub operators: Vec<OperatorSchema>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn operator(&self, name: &str) -> Option<&OperatorSchema> {
        self.operators.iter().find(|o| o.name == name)
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == OBJECT_TYPE || self.types.iter().any(|(t, _)| t == ty)
    }

    fn parent_of(&self, ty: &str) -> Option<&str> {
        self.types
            .iter()
            .find(|(t, _)| t == ty)
            .map(|(_, p)| p.as_str())
    }

    /// `sub` equals `sup` or descends from it.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sup == OBJECT_TYPE {
            return true;
        }
        let mut cur = sub;
        // The hierarchy is acyclic once parsed; the bound guards hand-built domains.
        for _ in 0..=self.types.len() {
            if cur == sup {
                return true;
            }
            match self.parent_of(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }
}

/// Closed-world set of ground atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicState {
    pub atoms: BTreeSet<Atom>,
}

impl SymbolicState {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        SymbolicState {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn holds(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn satisfies(&self, goal: &[Atom]) -> bool {
        goal.iter().all(|g| self.atoms.contains(g))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

impl fmt::Display for SymbolicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for a in &self.atoms {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: SymbolicState,
    pub goal: Vec<Atom>,
}

impl Problem {
    /// Problem objects plus domain constants, in problem-then-constant order.
    pub fn all_objects(&self, domain: &Domain) -> Vec<TypedName> {
        let mut out = self.objects.clone();
        for c in &domain.constants {
            if !out.iter().any(|o| o.name == c.name) {
                out.push(c.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundedAction {
    pub operator: String,
    pub binding: Vec<String>,
    pub pre_pos: Vec<Atom>,
    pub pre_neg: Vec<Atom>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
}

impl GroundedAction {
    /// `(pick apple)` style rendering.
    pub fn call(&self) -> String {
        let mut s = format!("({}", self.operator);
        for b in &self.binding {
            s.push(' ');
            s.push_str(b);
        }
        s.push(')');
        s
    }

    /// First argument: the manipulated object for pick/place.
    pub fn subject(&self) -> Option<&str> {
        self.binding.first().map(String::as_str)
    }
}

impl fmt::Display for GroundedAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.operator, self.binding.join(", "))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Plan {
    pub steps: Vec<GroundedAction>,
}

/// Index of objects by type, honoring the hierarchy.
pub(crate) fn objects_of_type<'a>(
    domain: &Domain,
    objects: &'a [TypedName],
    ty: &str,
) -> Vec<&'a str> {
    let mut names: Vec<&str> = objects
        .iter()
        .filter(|o| domain.is_subtype(&o.ty, ty))
        .map(|o| o.name.as_str())
        .collect();
    names.sort_unstable();
    names.dedup();
    names
}

pub(crate) fn type_map(objects: &[TypedName]) -> BTreeMap<&str, &str> {
    objects
        .iter()
        .map(|o| (o.name.as_str(), o.ty.as_str()))
        .collect()
}
