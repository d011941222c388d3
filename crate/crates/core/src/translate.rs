//! Natural-language instruction to PDDL goal: a five-template grammar, and
//! an LLM path that falls back to the grammar.

use std::fmt;

use thiserror::Error;

use crate::fixtures::{self, TRANSLATE_PROMPT};
use crate::llm::{first_sexpr, LlmBackend};
use crate::pddl::{parse_goal, render_atoms_conjunction, Atom, Domain, PddlError, TypedName};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranslateError {
    #[error("no pattern matches `{0}`")]
    NoPatternMatch(String),
    #[error("unknown object name `{0}`")]
    UnknownObject(String),
    #[error("goal does not type-check: {0}")]
    Invalid(#[from] PddlError),
    #[error("backend failed and the rule-based fallback failed too: {0}")]
    FallbackFailed(Box<TranslateError>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub text: String,
    /// Names the instruction may mention, typed for goal checking.
    pub objects: Vec<TypedName>,
}

impl Instruction {
    pub fn new(text: impl Into<String>, objects: Vec<TypedName>) -> Self {
        Instruction {
            text: text.into(),
            objects,
        }
    }

    /// Instruction over the shipped item and place vocabulary.
    pub fn with_fixture_vocabulary(text: impl Into<String>) -> Self {
        let objects = fixtures::ITEMS
            .iter()
            .map(|n| TypedName::new(*n, "item"))
            .chain(
                fixtures::PLACES
                    .iter()
                    .map(|n| TypedName::new(*n, "receptacle")),
            )
            .collect();
        Self::new(text, objects)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    RuleBased,
    Llm,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::RuleBased => "rule-based",
            Provenance::Llm => "llm",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalSpec {
    /// Sorted, duplicate-free.
    pub literals: Vec<Atom>,
    pub provenance: Provenance,
}

impl GoalSpec {
    pub fn new(literals: impl IntoIterator<Item = Atom>, provenance: Provenance) -> Self {
        let mut literals: Vec<Atom> = literals.into_iter().collect();
        literals.sort();
        literals.dedup();
        GoalSpec {
            literals,
            provenance,
        }
    }
}

impl fmt::Display for GoalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_goal_pddl(self))
    }
}

/// `(and ...)` with literals in lexicographic order; `(and )` when empty.
pub fn render_goal_pddl(g: &GoalSpec) -> String {
    let mut sorted = g.literals.clone();
    sorted.sort();
    render_atoms_conjunction(&sorted)
}

#[derive(Debug, Clone, Copy)]
enum Tok {
    Word(&'static str),
    /// Either word.
    OneOf(&'static str, &'static str),
    /// Name slot by index.
    Name(usize),
}

struct Template {
    /// Optional groups are listed as separate alternatives, longest first.
    shapes: &'static [&'static [Tok]],
    predicate: &'static str,
    /// Slots forming the goal arguments.
    args: &'static [usize],
}

use Tok::{Name, OneOf, Word};

const TEMPLATES: [Template; 5] = [
    // move the X [on the Y] to the Z
    Template {
        shapes: &[
            &[
                Word("move"),
                Name(0),
                Word("on"),
                Name(1),
                Word("to"),
                Name(2),
            ],
            &[Word("move"), Name(0), Word("to"), Name(2)],
        ],
        predicate: "on",
        args: &[0, 2],
    },
    // put the X into/in the Z
    Template {
        shapes: &[&[Word("put"), Name(0), OneOf("into", "in"), Name(2)]],
        predicate: "in",
        args: &[0, 2],
    },
    // put the X on the Z
    Template {
        shapes: &[&[Word("put"), Name(0), Word("on"), Name(2)]],
        predicate: "on",
        args: &[0, 2],
    },
    // pick up the X
    Template {
        shapes: &[&[Word("pick"), Word("up"), Name(0)]],
        predicate: "holding",
        args: &[0],
    },
    // move the X [under the W] into the Z
    Template {
        shapes: &[
            &[
                Word("move"),
                Name(0),
                Word("under"),
                Name(1),
                Word("into"),
                Name(2),
            ],
            &[Word("move"), Name(0), Word("into"), Name(2)],
        ],
        predicate: "in",
        args: &[0, 2],
    },
];

/// Lower-case, underscores to spaces, punctuation dropped, articles removed.
fn normalize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .replace('_', " ")
        .split(|c: char| c.is_whitespace() || matches!(c, ',' | '.' | '!' | '?' | ';' | ':'))
        .filter(|w| !w.is_empty() && !matches!(*w, "the" | "a" | "an"))
        .map(str::to_string)
        .collect()
}

/// All ways `shape` covers `words`, each as slot → word span.
fn match_shape(
    shape: &[Tok],
    words: &[String],
    slots: &mut [Option<(usize, usize)>; 3],
    at: usize,
    out: &mut Vec<[Option<(usize, usize)>; 3]>,
) {
    let Some((tok, rest)) = shape.split_first() else {
        if at == words.len() {
            out.push(*slots);
        }
        return;
    };
    match *tok {
        Word(w) => {
            if words.get(at).is_some_and(|x| x == w) {
                match_shape(rest, words, slots, at + 1, out);
            }
        }
        OneOf(a, b) => {
            if words.get(at).is_some_and(|x| x == a || x == b) {
                match_shape(rest, words, slots, at + 1, out);
            }
        }
        Name(k) => {
            // longest span first
            for end in (at + 1..=words.len()).rev() {
                slots[k] = Some((at, end));
                match_shape(rest, words, slots, end, out);
            }
            slots[k] = None;
        }
    }
}

/// Resolve a word span to a vocabulary name (`strawberry box` → `strawberry_box`).
fn resolve(span: &[String], vocab: &[String]) -> Option<String> {
    let joined = span.join("_");
    vocab.iter().find(|v| **v == joined).cloned()
}

/// Deterministic grammar translation. Matches are tried template by
/// template, longest optional form first; the first match whose name slots
/// all resolve wins.
pub fn translate_rule_based(
    ins: &Instruction,
    domain: &Domain,
) -> Result<GoalSpec, TranslateError> {
    let words = normalize(&ins.text);
    let mut vocab: Vec<String> = ins.objects.iter().map(|o| o.name.clone()).collect();
    vocab.extend(domain.constants.iter().map(|c| c.name.clone()));
    // longest-match: prefer longer names when several could apply
    vocab.sort_by_key(|v| std::cmp::Reverse(v.len()));

    let mut unknown: Option<String> = None;
    for t in &TEMPLATES {
        for shape in t.shapes {
            let mut found = Vec::new();
            match_shape(shape, &words, &mut [None; 3], 0, &mut found);
            for slots in found {
                let mut names: [Option<String>; 3] = [None, None, None];
                let mut ok = true;
                for (k, s) in slots.iter().enumerate() {
                    if let Some((a, b)) = *s {
                        match resolve(&words[a..b], &vocab) {
                            Some(n) => names[k] = Some(n),
                            None => {
                                ok = false;
                                unknown.get_or_insert_with(|| words[a..b].join(" "));
                            }
                        }
                    }
                }
                if ok {
                    let args: Vec<String> =
                        t.args.iter().map(|&k| names[k].clone().unwrap()).collect();
                    let atom = Atom::new(t.predicate, args);
                    check(&[atom.clone()], ins, domain)?;
                    return Ok(GoalSpec::new([atom], Provenance::RuleBased));
                }
            }
        }
    }
    Err(match unknown {
        Some(span) => TranslateError::UnknownObject(span),
        None => TranslateError::NoPatternMatch(ins.text.clone()),
    })
}

/// Type-check goal atoms by a render/parse cycle against the domain.
fn check(atoms: &[Atom], ins: &Instruction, domain: &Domain) -> Result<Vec<Atom>, TranslateError> {
    Ok(parse_goal(
        &render_atoms_conjunction(atoms),
        domain,
        &ins.objects,
    )?)
}

/// Prompt with the domain, the goal grammar, the requirement and a worked
/// example.
pub fn translation_prompt(ins: &Instruction, domain_text: &str) -> String {
    let objects: Vec<&str> = ins.objects.iter().map(|o| o.name.as_str()).collect();
    TRANSLATE_PROMPT
        .replace("{domain}", domain_text.trim())
        .replace("{objects}", &objects.join(", "))
        .replace("{instruction}", ins.text.trim())
}

pub const LLM_ATTEMPTS: usize = 3;

/// Ask the backend up to three times for a goal that parses and type-checks;
/// otherwise fall back to the grammar.
pub fn translate_llm(
    ins: &Instruction,
    domain: &Domain,
    domain_text: &str,
    backend: &dyn LlmBackend,
) -> Result<GoalSpec, TranslateError> {
    let prompt = translation_prompt(ins, domain_text);
    for attempt in 1..=LLM_ATTEMPTS {
        let reply = match backend.complete(&prompt) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("translation attempt {attempt}: {e}");
                continue;
            }
        };
        let Some(expr) = first_sexpr(&reply) else {
            log::warn!("translation attempt {attempt}: no s-expression in reply");
            continue;
        };
        match parse_goal(expr, domain, &ins.objects) {
            Ok(atoms) => return Ok(GoalSpec::new(atoms, Provenance::Llm)),
            Err(e) => log::warn!("translation attempt {attempt}: {e}"),
        }
    }
    translate_rule_based(ins, domain).map_err(|e| TranslateError::FallbackFailed(Box::new(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{tabletop_domain, TABLETOP_DOMAIN};
    use crate::llm::ScriptedStub;

    fn rule(text: &str) -> Result<GoalSpec, TranslateError> {
        translate_rule_based(
            &Instruction::with_fixture_vocabulary(text),
            tabletop_domain(),
        )
    }

    fn goal(p: &str, a: &[&str]) -> Vec<Atom> {
        vec![Atom::new(p, a.iter().copied())]
    }

    #[test]
    fn quoted_instructions() {
        assert_eq!(
            rule("Move the apple on the table to the chair")
                .unwrap()
                .literals,
            goal("on", &["apple", "chair"])
        );
        assert_eq!(
            rule("Put the strawberry_box into the blue_box")
                .unwrap()
                .literals,
            goal("in", &["strawberry_box", "blue_box"])
        );
        assert_eq!(
            rule("Move the strawberry box under the tomato can into the blue box.")
                .unwrap()
                .literals,
            goal("in", &["strawberry_box", "blue_box"])
        );
    }

    #[test]
    fn other_templates() {
        assert_eq!(
            rule("Pick up the bowl").unwrap().literals,
            goal("holding", &["bowl"])
        );
        assert_eq!(
            rule("put the mug on the chair").unwrap().literals,
            goal("on", &["mug", "chair"])
        );
        assert_eq!(
            rule("Put the lemon in the basket").unwrap().literals,
            goal("in", &["lemon", "basket"])
        );
        assert_eq!(
            rule("Move the lemon to the basket").unwrap().literals,
            goal("on", &["lemon", "basket"])
        );
    }

    #[test]
    fn errors_carry_the_span() {
        assert_eq!(
            rule("Dance with the apple"),
            Err(TranslateError::NoPatternMatch(
                "Dance with the apple".into()
            ))
        );
        assert_eq!(
            rule("Pick up the banana"),
            Err(TranslateError::UnknownObject("banana".into()))
        );
        // a receptacle cannot be held: the grammar matches but the goal does not type-check
        assert!(matches!(
            rule("Pick up the basket"),
            Err(TranslateError::Invalid(_))
        ));
    }

    #[test]
    fn render_is_canonical() {
        let g = GoalSpec::new(goal("on", &["apple", "chair"]), Provenance::RuleBased);
        assert_eq!(render_goal_pddl(&g), "(and (on apple chair))");
        assert_eq!(
            render_goal_pddl(&GoalSpec::new([], Provenance::RuleBased)),
            "(and )"
        );
        let two = GoalSpec::new(
            [
                Atom::new("on", ["mug", "chair"]),
                Atom::new("in", ["apple", "basket"]),
            ],
            Provenance::RuleBased,
        );
        assert_eq!(
            render_goal_pddl(&two),
            "(and (in apple basket) (on mug chair))"
        );
    }

    fn llm(replies: &[&str]) -> (Result<GoalSpec, TranslateError>, ScriptedStub) {
        let stub = ScriptedStub::new(replies.iter().copied());
        let ins = Instruction::with_fixture_vocabulary("Move the apple on the table to the chair");
        (
            translate_llm(&ins, tabletop_domain(), TABLETOP_DOMAIN, &stub),
            stub,
        )
    }

    #[test]
    fn llm_valid_reply() {
        let (g, stub) = llm(&["(and (on apple chair))"]);
        let g = g.unwrap();
        assert_eq!(g.provenance, Provenance::Llm);
        assert_eq!(g.literals, goal("on", &["apple", "chair"]));
        let p = &stub.prompts()[0];
        assert!(
            p.contains("(:action pick")
                && p.contains("Instruction: Move the apple on the table to the chair")
        );
        assert!(p.contains("Goal: (and (on apple chair))"));
    }

    #[test]
    fn llm_malformed_falls_back() {
        let (g, stub) = llm(&["I think the apple goes there", "(and (on apple", "nope"]);
        assert_eq!(g.unwrap().provenance, Provenance::RuleBased);
        assert_eq!(stub.prompts().len(), 3);
    }

    #[test]
    fn llm_unknown_object_retries_then_falls_back() {
        let (g, stub) = llm(&[
            "(and (on banana chair))",
            "(and (on banana chair))",
            "(and (on banana chair))",
        ]);
        assert_eq!(g.unwrap().provenance, Provenance::RuleBased);
        assert_eq!(stub.remaining(), 0);
        // a valid second answer is accepted
        let (g, _) = llm(&["(and (on banana chair))", "(and (in apple basket))"]);
        assert_eq!(g.unwrap().literals, goal("in", &["apple", "basket"]));
    }

    #[test]
    fn llm_fallback_failure_is_reported() {
        let stub = ScriptedStub::new(Vec::<String>::new());
        let ins = Instruction::with_fixture_vocabulary("Dance with the apple");
        assert!(matches!(
            translate_llm(&ins, tabletop_domain(), TABLETOP_DOMAIN, &stub),
            Err(TranslateError::FallbackFailed(_))
        ));
    }
}
