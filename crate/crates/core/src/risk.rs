//! Collision-risk labels: a ledger of robot and object-object contacts, its
//! total, and the exact risk matrix obtained by probing every skill on a
//! cloned world.

use std::collections::BTreeMap;

use crate::pddl::{instantiate_action, is_applicable, GroundedAction};
use crate::safety::{MatrixSource, SafetyMatrix};
use crate::world::{
    clone_world, execute_skill, extract_predicates, Actor, CollisionEvent, WorldState,
};

/// Skill templates, one risk head each.
pub const SKILLS: [&str; 3] = ["pick", "place", "navigate"];

/// Severity-weighted collision counts of one skill execution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollisionLedger {
    pub robot: BTreeMap<String, u32>,
    /// Keys are ordered `(min, max)`; self pairs never appear.
    pub pairs: BTreeMap<(String, String), u32>,
}

impl CollisionLedger {
    pub fn add_robot(&mut self, victim: &str, weight: u32) {
        *self.robot.entry(victim.to_string()).or_default() += weight;
    }

    /// Ignores self pairs.
    pub fn add_pair(&mut self, a: &str, b: &str, weight: u32) {
        if a == b {
            return;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        *self
            .pairs
            .entry((key.0.to_string(), key.1.to_string()))
            .or_default() += weight;
    }

    pub fn merge(&mut self, other: &CollisionLedger) {
        for (v, c) in &other.robot {
            self.add_robot(v, *c);
        }
        for ((a, b), c) in &other.pairs {
            self.add_pair(a, b, *c);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskLabel {
    pub skill: usize,
    pub object: String,
    pub risk: f64,
}

/// Robot contacts on the manipulated object itself are the grasp, not a
/// collision, and are dropped.
pub fn ledger_from_events(events: &[CollisionEvent], manipulated: &str) -> CollisionLedger {
    let mut l = CollisionLedger::default();
    for e in events {
        let w = e.severity.weight();
        match &e.actor {
            Actor::Robot if e.victim == manipulated => {}
            Actor::Robot => l.add_robot(&e.victim, w),
            Actor::Object(a) => l.add_pair(a, &e.victim, w),
        }
    }
    l
}

/// Robot term plus pair term.
pub fn risk_of(l: &CollisionLedger) -> f64 {
    let robot: u32 = l.robot.values().sum();
    let pairs: u32 = l.pairs.values().sum();
    f64::from(robot + pairs)
}

/// Concrete action for skill template `skill` on `object`.
///
/// `place` targets the scene's goal place when the world has it, else the
/// first free staging cell; `navigate` targets the current location.
pub fn ground_skill(w: &WorldState, skill: &str, object: &str) -> Option<GroundedAction> {
    let domain = crate::fixtures::tabletop_domain();
    w.object(object)?;
    match skill {
        "pick" => instantiate_action(domain, "pick", &[object]).ok(),
        "place" => {
            let dest = match w.place(&w.config.goal_place) {
                Some(r) => r.name.clone(),
                None => w.first_free_staging()?.name.clone(),
            };
            instantiate_action(domain, "place", &[object, &dest]).ok()
        }
        "navigate" => instantiate_action(domain, "navigate", &[&w.location]).ok(),
        _ => None,
    }
}

/// Exact risk of one (skill, object) pair, `None` when inapplicable.
pub fn oracle_entry(w: &WorldState, skill: &str, object: &str) -> Option<f64> {
    let action = ground_skill(w, skill, object)?;
    if !is_applicable(&extract_predicates(w), &action) {
        return None;
    }
    let out = execute_skill(&clone_world(w), &action).ok()?;
    Some(risk_of(&ledger_from_events(&out.events, object)))
}

/// I×N matrix of exact risks; inapplicable pairs hold `+∞`.
pub fn oracle_risk_matrix(w: &WorldState, skills: &[String], objects: &[String]) -> SafetyMatrix {
    let entries = skills
        .iter()
        .map(|s| {
            objects
                .iter()
                .map(|o| oracle_entry(w, s, o).unwrap_or(f64::INFINITY))
                .collect()
        })
        .collect();
    SafetyMatrix {
        entries,
        skills: skills.to_vec(),
        objects: objects.to_vec(),
        source: MatrixSource::Oracle,
    }
}

/// Default skill list as owned strings.
pub fn skill_names() -> Vec<String> {
    SKILLS.iter().map(|s| s.to_string()).collect()
}
