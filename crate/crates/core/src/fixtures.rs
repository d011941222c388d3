//! Shipped fixtures: the tabletop domain, scene templates, hand-built worlds
//! and the instruction corpus.

use std::sync::OnceLock;

use crate::pddl::{
    instantiate_action, parse_domain, Atom, Domain, GroundedAction, Problem, TypedName,
};
use crate::world::{
    extract_predicates, Area, Mode, ObjectInstance, Receptacle, SceneConfig, WorldState, TABLE,
    WORKSPACE,
};
use crate::Vec2;

pub const TABLETOP_DOMAIN: &str = include_str!("../fixtures/tabletop.pddl");
pub const INSTRUCTION_CORPUS: &str = include_str!("../fixtures/instructions.txt");
pub const TRANSLATE_PROMPT: &str = include_str!("../fixtures/prompt_translate.txt");
pub const PLAN_PROMPT: &str = include_str!("../fixtures/prompt_plan.txt");

/// Scene fixture names, in table order.
pub const SCENES: [&str; 3] = ["table", "counter", "chair"];

/// Item vocabulary shared by all scenes.
pub const ITEMS: [&str; 8] = [
    "apple",
    "bowl",
    "cracker_box",
    "lemon",
    "mug",
    "sponge",
    "strawberry_box",
    "tomato_can",
];

/// Goal places named in instructions.
pub const PLACES: [&str; 3] = ["basket", "blue_box", "chair"];

/// Parsed tabletop domain (parsed once).
pub fn tabletop_domain() -> &'static Domain {
    static DOMAIN: OnceLock<Domain> = OnceLock::new();
    DOMAIN.get_or_init(|| parse_domain(TABLETOP_DOMAIN).expect("shipped domain parses"))
}

pub fn pick(o: &str) -> GroundedAction {
    instantiate_action(tabletop_domain(), "pick", &[o]).unwrap()
}

pub fn place(o: &str, r: &str) -> GroundedAction {
    instantiate_action(tabletop_domain(), "place", &[o, r]).unwrap()
}

pub fn navigate(l: &str) -> GroundedAction {
    instantiate_action(tabletop_domain(), "navigate", &[l]).unwrap()
}

/// Typed objects of a world: items, goal places and staging cells, the
/// workspace location.
pub fn world_objects(w: &WorldState) -> Vec<TypedName> {
    let mut out: Vec<TypedName> = w
        .objects
        .iter()
        .map(|o| TypedName::new(o.name.clone(), "item"))
        .collect();
    out.extend(
        w.places()
            .map(|r| TypedName::new(r.name.clone(), "receptacle")),
    );
    out.push(TypedName::new(w.location.clone(), "location"));
    out
}

/// Problem whose initial state is the world's current predicates.
pub fn problem_for_world(w: &WorldState, goal: Vec<Atom>) -> Problem {
    Problem {
        name: format!("{}-{}", w.config.name, w.config.seed),
        domain_name: tabletop_domain().name.clone(),
        objects: world_objects(w),
        init: extract_predicates(w),
        goal,
    }
}

/// Default goal of a scene: put the target into the goal place.
pub fn scene_goal(w: &WorldState) -> Vec<Atom> {
    let pred = if w.config.goal_place == "chair" {
        "on"
    } else {
        "in"
    };
    vec![Atom::new(
        pred,
        [
            w.config.target_object.as_str(),
            w.config.goal_place.as_str(),
        ],
    )]
}

/// Scene template by fixture name. Counter and chair are the cramped ones.
pub fn scene_config(scene: &str, mode: Mode) -> Option<SceneConfig> {
    let base = SceneConfig {
        name: scene.to_string(),
        mode,
        object_count: if mode == Mode::Easy { 3 } else { 5 },
        item_pool: ITEMS.iter().map(|s| s.to_string()).collect(),
        ..SceneConfig::default()
    };
    let cfg = match scene {
        "table" => SceneConfig {
            min_gap: 0.14,
            area: Area::new(0.10, 0.40, 0.90, 0.95),
            goal_place: "chair".into(),
            ..base
        },
        "counter" => SceneConfig {
            min_gap: 0.13,
            area: Area::new(0.10, 0.45, 0.90, 0.75),
            goal_place: "blue_box".into(),
            ..base
        },
        "chair" => SceneConfig {
            min_gap: 0.12,
            area: Area::new(0.25, 0.42, 0.75, 0.85),
            goal_place: "basket".into(),
            ..base
        },
        _ => return None,
    };
    Some(cfg)
}

/// Template for one experiment or collection episode: seeded layout, and in
/// hard mode 5 to 7 objects; the target item is drawn from the seed.
pub fn episode_config(scene: &str, mode: Mode, seed: u64) -> Option<SceneConfig> {
    let mut c = scene_config(scene, mode)?;
    c.seed = seed;
    if mode == Mode::Hard {
        c.object_count = 5 + (seed % 3) as usize;
    }
    c.target_object = ITEMS[((seed >> 16) % ITEMS.len() as u64) as usize].to_string();
    Some(c)
}

fn hand_built(name: &str, objects: &[(&str, f64, f64, f64)]) -> WorldState {
    let cfg = SceneConfig {
        name: name.into(),
        ..SceneConfig::default()
    };
    let mut w = WorldState::empty(cfg);
    w.robot = Vec2::new(0.5, 0.0);
    w.location = WORKSPACE.to_string();
    for &(n, r, x, y) in objects {
        w.objects.push(ObjectInstance::new(n, r, x, y));
    }
    w.receptacles
        .push(Receptacle::new("blue_box", 0.88, 0.18, 0.08));
    for (i, x) in [0.10, 0.22, 0.34].iter().enumerate() {
        w.staging
            .push(Receptacle::new(format!("staging_{i}"), *x, 0.08, 0.05));
    }
    w
}

/// Three equal discs in a row, 0.095 apart: each neighbor pair sits inside
/// the other's grasp envelope, but a single push never closes the next gap.
pub fn three_in_a_row() -> WorldState {
    hand_built(
        "three-in-a-row",
        &[
            ("left", 0.03, 0.405, 0.6),
            ("middle", 0.03, 0.5, 0.6),
            ("right", 0.03, 0.595, 0.6),
        ],
    )
}

/// Row spaced 0.085 apart: picking `o1` pushes `o2` into `o3`.
pub fn chain_row() -> WorldState {
    hand_built(
        "chain-row",
        &[
            ("o1", 0.03, 0.415, 0.6),
            ("o2", 0.03, 0.5, 0.6),
            ("o3", 0.03, 0.585, 0.6),
        ],
    )
}

/// The strawberry box sits behind the tomato can, in its approach corridor.
pub fn blocked_target_world() -> WorldState {
    let mut w = hand_built(
        "blocked",
        &[
            ("apple", 0.04, 0.22, 0.62),
            ("bowl", 0.05, 0.78, 0.58),
            ("strawberry_box", 0.05, 0.5, 0.70),
            ("tomato_can", 0.04, 0.5, 0.50),
        ],
    );
    w.config.target_object = "strawberry_box".into();
    w.config.goal_place = "blue_box".into();
    w
}

pub fn blocked_target_goal() -> Vec<Atom> {
    vec![Atom::new("in", ["strawberry_box", "blue_box"])]
}

/// Non-comment corpus lines.
pub fn instructions() -> Vec<&'static str> {
    INSTRUCTION_CORPUS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// Every name an instruction may mention.
pub fn vocabulary() -> Vec<String> {
    ITEMS
        .iter()
        .chain(PLACES.iter())
        .chain(std::iter::once(&TABLE))
        .map(|s| s.to_string())
        .collect()
}
