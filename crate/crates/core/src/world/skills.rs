use std::collections::BTreeSet;

use super::{extract_predicates, Actor, CollisionEvent, Severity, WorldError, WorldState};
use crate::geometry::{Corridor, Disc, SweptRegion};
use crate::pddl::{is_applicable, GroundedAction};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct SkillOutcome {
    pub succeeded: bool,
    pub events: Vec<CollisionEvent>,
    pub ticks_used: u64,
    pub world: WorldState,
}

impl SkillOutcome {
    /// Severity-weighted number of events.
    pub fn collision_weight(&self) -> u32 {
        self.events.iter().map(|e| e.severity.weight()).sum()
    }
}

/// Region swept by `pick`/`place`; `None` for skills that never collide.
///
/// Missing objects or places also yield `None`.
pub fn sweep_region(w: &WorldState, skill: &GroundedAction) -> Option<SweptRegion<f64>> {
    let p = &w.params;
    match (skill.operator.as_str(), skill.binding.as_slice()) {
        ("pick", [o]) => {
            let obj = w.object(o)?;
            Some(SweptRegion {
                corridor: Corridor::new(w.robot, obj.position, p.corridor_half_width),
                envelope: Disc::new(obj.position, obj.radius + p.grasp_margin),
            })
        }
        ("place", [o, r]) => {
            let obj = w.object(o)?;
            let drop = w.place(r)?.center;
            Some(SweptRegion {
                corridor: Corridor::new(w.robot, drop, p.corridor_half_width),
                envelope: Disc::new(drop, obj.radius + p.grasp_margin),
            })
        }
        _ => None,
    }
}

fn travel_ticks(w: &WorldState, target: Vec2) -> u64 {
    // out and back, plus one tick to grasp or release
    (2.0 * w.robot.dist(target) / w.params.tick_length).ceil() as u64 + 1
}

fn clamp_unit(p: Vec2) -> Vec2 {
    Vec2::new(p.x.clamp(0.0, 1.0), p.y.clamp(0.0, 1.0))
}

/// Sweep `region` through the clutter, pushing struck objects and
/// propagating induced contacts up to the chain depth.
fn sweep_and_push(
    w: &mut WorldState,
    region: &SweptRegion<f64>,
    exclude: &str,
    start_tick: u64,
) -> Vec<CollisionEvent> {
    let push = w.params.push;
    let active: Vec<usize> = (0..w.objects.len())
        .filter(|&i| w.objects[i].name != exclude && w.on_table(&w.objects[i]))
        .collect();
    let mut moved = vec![0.0f64; w.objects.len()];
    let mut raw: Vec<(Actor, usize, u64)> = Vec::new();
    let mut touched_pairs: BTreeSet<(usize, usize)> = BTreeSet::new();

    // Robot contacts are decided on the pre-skill layout.
    let hits: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&i| region.intersects(&w.objects[i].disc()))
        .collect();
    for &i in &hits {
        let n = region.contact_normal(&w.objects[i].disc());
        let o = &mut w.objects[i];
        o.position = clamp_unit(o.position + n * push);
        moved[i] += push;
        raw.push((Actor::Robot, i, 1));
    }

    let mut frontier = hits;
    for depth in 2..=w.params.chain_depth as u64 {
        let mut next: Vec<usize> = Vec::new();
        for &a in &frontier {
            for &v in &active {
                let key = (a.min(v), a.max(v));
                if v == a || touched_pairs.contains(&key) {
                    continue;
                }
                if !w.objects[a].disc().overlaps(&w.objects[v].disc()) {
                    continue;
                }
                let n = (w.objects[v].position - w.objects[a].position)
                    .normalized()
                    .unwrap_or_else(|| region.corridor.axis());
                let o = &mut w.objects[v];
                o.position = clamp_unit(o.position + n * push);
                moved[v] += push;
                touched_pairs.insert(key);
                raw.push((Actor::Object(w.objects[a].name.clone()), v, depth));
                if !next.contains(&v) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }

    // Severity follows the victim's total displacement in this skill.
    let mut events = Vec::with_capacity(raw.len());
    for (actor, v, depth) in raw {
        let toppled = moved[v] > w.objects[v].radius;
        if toppled {
            w.objects[v].toppled = true;
        }
        events.push(CollisionEvent {
            actor,
            victim: w.objects[v].name.clone(),
            severity: if toppled {
                Severity::Toppled
            } else {
                Severity::Displaced
            },
            tick: start_tick + depth,
        });
    }
    // A push can land an object inside a receptacle footprint.
    for i in active {
        if moved[i] > 0.0 {
            let p = w.objects[i].position;
            w.objects[i].container = w.receptacle_at(p).map(|r| r.name.clone());
        }
    }
    events
}

/// Execute one grounded skill geometrically. The input world is untouched;
/// the outcome carries the resulting world.
pub fn execute_skill(w: &WorldState, skill: &GroundedAction) -> Result<SkillOutcome, WorldError> {
    let arity = match skill.operator.as_str() {
        "pick" | "navigate" => 1,
        "place" => 2,
        other => return Err(WorldError::UnknownSkill(other.to_string())),
    };
    if skill.binding.len() != arity {
        return Err(WorldError::Precondition {
            skill: skill.call(),
            reason: format!("expected {arity} arguments"),
        });
    }
    for name in &skill.binding {
        let known = w.object(name).is_some() || w.place(name).is_some() || *name == w.location;
        if !known && skill.operator != "navigate" {
            return Err(WorldError::UnknownObject(name.clone()));
        }
    }
    if !is_applicable(&extract_predicates(w), skill) {
        return Err(WorldError::Precondition {
            skill: skill.call(),
            reason: "symbolic preconditions do not hold".into(),
        });
    }

    let mut next = w.clone();
    let start = w.tick;
    let ticks = match skill.operator.as_str() {
        "pick" => travel_ticks(w, w.object(&skill.binding[0]).unwrap().position),
        "place" => travel_ticks(w, w.place(&skill.binding[1]).unwrap().center),
        _ => 1,
    };
    if ticks > w.params.timeout_ticks {
        next.tick = start + w.params.timeout_ticks;
        return Ok(SkillOutcome {
            succeeded: false,
            events: Vec::new(),
            ticks_used: w.params.timeout_ticks,
            world: next,
        });
    }

    let mut events = Vec::new();
    match skill.operator.as_str() {
        "pick" => {
            let o = &skill.binding[0];
            let region = sweep_region(w, skill).expect("pick target exists");
            events = sweep_and_push(&mut next, &region, o, start);
            next.held = Some(o.clone());
        }
        "place" => {
            let (o, r) = (&skill.binding[0], &skill.binding[1]);
            let region = sweep_region(w, skill).expect("place target exists");
            events = sweep_and_push(&mut next, &region, o, start);
            let drop = w.place(r).unwrap().center;
            let obj = next.object_mut(o).expect("held object exists");
            obj.position = drop;
            obj.container = Some(r.clone());
            next.held = None;
        }
        _ => next.location = skill.binding[0].clone(),
    }
    next.tick = start + ticks;
    Ok(SkillOutcome {
        succeeded: true,
        events,
        ticks_used: ticks,
        world: next,
    })
}
