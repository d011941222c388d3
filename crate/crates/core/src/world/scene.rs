use std::fmt::{self, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ObjectInstance, Receptacle, WorldError, WorldState, TABLE};
use crate::geometry::{Corridor, Disc};
use crate::Vec2;

const MAX_ATTEMPTS: usize = 10_000;
const RADIUS_LIMITS: (f64, f64) = (0.02, 0.10);
const STAGING_RADIUS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Easy,
    Hard,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Easy => "easy",
            Mode::Hard => "hard",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "easy" => Ok(Mode::Easy),
            "hard" => Ok(Mode::Hard),
            other => Err(format!("unknown mode {other}")),
        }
    }
}

/// Axis-aligned rectangle on the table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub min: Vec2,
    pub max: Vec2,
}

impl Area {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Area {
            min: Vec2::new(x0, y0),
            max: Vec2::new(x1, y1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    /// Scene fixture name, e.g. `table` or `counter`.
    pub name: String,
    pub mode: Mode,
    pub object_count: usize,
    pub min_gap: f64,
    pub seed: u64,
    pub target_object: String,
    pub goal_place: String,
    /// Where object centers are sampled.
    pub area: Area,
    pub radius_range: (f64, f64),
    /// Candidate object names; the target is always drawn.
    pub item_pool: Vec<String>,
    /// Goal place center and footprint radius.
    pub goal_place_at: (Vec2, f64),
    /// Robot x range on the near table edge.
    pub robot_x_range: (f64, f64),
    pub staging_cells: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            name: "table".into(),
            mode: Mode::Easy,
            object_count: 3,
            min_gap: 0.14,
            seed: 0,
            target_object: "apple".into(),
            goal_place: "blue_box".into(),
            area: Area::new(0.10, 0.40, 0.90, 0.95),
            radius_range: (0.025, 0.05),
            item_pool: [
                "apple",
                "bowl",
                "cracker_box",
                "lemon",
                "mug",
                "sponge",
                "strawberry_box",
                "tomato_can",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            goal_place_at: (Vec2::new(0.88, 0.18), 0.08),
            robot_x_range: (0.35, 0.65),
            staging_cells: 8,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: String| Err(WorldError::InvalidConfig(m));
        match self.mode {
            Mode::Easy if self.object_count != 3 => {
                return bad(format!(
                    "easy mode needs 3 objects, got {}",
                    self.object_count
                ))
            }
            Mode::Hard if !(5..=7).contains(&self.object_count) => {
                return bad(format!(
                    "hard mode needs 5..=7 objects, got {}",
                    self.object_count
                ))
            }
            _ => {}
        }
        let (lo, hi) = self.radius_range;
        if !(RADIUS_LIMITS.0 <= lo && lo <= hi && hi <= RADIUS_LIMITS.1) {
            return bad(format!("radius range {lo}..{hi} outside [0.02, 0.10]"));
        }
        let a = self.area;
        if !(0.0 <= a.min.x && a.min.x <= a.max.x && a.max.x <= 1.0)
            || !(0.0 <= a.min.y && a.min.y <= a.max.y && a.max.y <= 1.0)
        {
            return bad("sampling area must lie inside the unit table".into());
        }
        if self.min_gap < 0.0 || !self.min_gap.is_finite() {
            return bad(format!("min-gap {} must be non-negative", self.min_gap));
        }
        if !self.item_pool.contains(&self.target_object) {
            return bad(format!(
                "target {} not in the item pool",
                self.target_object
            ));
        }
        if self.item_pool.len() < self.object_count {
            return bad("item pool smaller than object count".into());
        }
        if self.goal_place.is_empty() || self.goal_place == TABLE {
            return bad("goal place must be a receptacle".into());
        }
        Ok(())
    }
}

/// Rejection-sample a scene. Deterministic in `cfg.seed`.
pub fn generate_scene(cfg: &SceneConfig) -> Result<WorldState, WorldError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = WorldState::empty(cfg.clone());
    w.robot = Vec2::new(
        rng.gen_range(cfg.robot_x_range.0..=cfg.robot_x_range.1),
        0.0,
    );

    let mut others: Vec<&String> = cfg
        .item_pool
        .iter()
        .filter(|n| **n != cfg.target_object)
        .collect();
    others.shuffle(&mut rng);
    let mut names: Vec<String> = std::iter::once(&cfg.target_object)
        .chain(others.into_iter().take(cfg.object_count - 1))
        .cloned()
        .collect();
    names.sort();

    for name in names {
        let mut placed = None;
        for _ in 0..MAX_ATTEMPTS {
            let r = rng.gen_range(cfg.radius_range.0..=cfg.radius_range.1);
            let p = Vec2::new(
                rng.gen_range(cfg.area.min.x..=cfg.area.max.x),
                rng.gen_range(cfg.area.min.y..=cfg.area.max.y),
            );
            let ok = w.objects.iter().all(|o| {
                let d = o.position.dist(p);
                d >= cfg.min_gap && d >= o.radius + r
            });
            if ok {
                placed = Some(ObjectInstance::new(name.clone(), r, p.x, p.y));
                break;
            }
        }
        match placed {
            Some(o) => w.objects.push(o),
            None => {
                return Err(WorldError::PlacementFailed {
                    object: name,
                    attempts: MAX_ATTEMPTS,
                })
            }
        }
    }

    let (gp, gr) = cfg.goal_place_at;
    w.receptacles
        .push(Receptacle::new(cfg.goal_place.clone(), gp.x, gp.y, gr));
    w.staging = staging_cells(&w, cfg.staging_cells);
    Ok(w)
}

/// Cells along the near edge, clear of the robot origin, the goal places and
/// every approach corridor to a current object or place.
fn staging_cells(w: &WorldState, count: usize) -> Vec<Receptacle> {
    let hw = w.params.corridor_half_width;
    let corridors: Vec<Corridor<f64>> = w
        .objects
        .iter()
        .map(|o| o.position)
        .chain(w.receptacles.iter().map(|r| r.center))
        .map(|p| Corridor::new(w.robot, p, hw))
        .collect();
    let mut candidates = Vec::new();
    for &y in &[0.06, 0.18, 0.30] {
        let mut x = 0.06;
        while x < 0.95 {
            candidates.push(Vec2::new(x, y));
            x += 0.11;
        }
    }
    let fits = |p: Vec2, strict: bool| {
        let disc = Disc::new(p, STAGING_RADIUS);
        let clear_of_places = w
            .receptacles
            .iter()
            .all(|r| r.center.dist(p) >= r.radius + STAGING_RADIUS + 0.02);
        let clear_of_robot = p.dist(w.robot) > 0.12;
        clear_of_places
            && clear_of_robot
            && (!strict || corridors.iter().all(|c| !c.intersects(&disc)))
    };
    let mut chosen: Vec<Vec2> = candidates
        .iter()
        .copied()
        .filter(|&p| fits(p, true))
        .collect();
    // Corridor clearance is preferred, not required: stored objects are out of
    // the clutter either way.
    if chosen.len() < count {
        for &p in &candidates {
            if chosen.len() >= count {
                break;
            }
            if fits(p, false) && !chosen.contains(&p) {
                chosen.push(p);
            }
        }
    }
    chosen
        .into_iter()
        .take(count)
        .enumerate()
        .map(|(i, p)| Receptacle::new(format!("staging_{i}"), p.x, p.y, STAGING_RADIUS))
        .collect()
}

fn fmt_opt(o: &Option<String>) -> &str {
    o.as_deref().unwrap_or("-")
}

/// Serialize a world to the key-value + tables scene format.
pub fn save_scene(w: &WorldState) -> String {
    let c = &w.config;
    let p = &w.params;
    let mut s = String::from("# safe-planner scene v1\n");
    let kv: Vec<(&str, String)> = vec![
        ("name", c.name.clone()),
        ("mode", c.mode.to_string()),
        ("object-count", c.object_count.to_string()),
        ("min-gap", c.min_gap.to_string()),
        ("seed", c.seed.to_string()),
        ("target-object", c.target_object.clone()),
        ("goal-place", c.goal_place.clone()),
        (
            "area",
            format!(
                "{} {} {} {}",
                c.area.min.x, c.area.min.y, c.area.max.x, c.area.max.y
            ),
        ),
        (
            "radius-range",
            format!("{} {}", c.radius_range.0, c.radius_range.1),
        ),
        ("item-pool", c.item_pool.join(",")),
        (
            "goal-place-at",
            format!(
                "{} {} {}",
                c.goal_place_at.0.x, c.goal_place_at.0.y, c.goal_place_at.1
            ),
        ),
        (
            "robot-x-range",
            format!("{} {}", c.robot_x_range.0, c.robot_x_range.1),
        ),
        ("staging-cells", c.staging_cells.to_string()),
        ("corridor-half-width", p.corridor_half_width.to_string()),
        ("grasp-margin", p.grasp_margin.to_string()),
        ("push", p.push.to_string()),
        ("chain-depth", p.chain_depth.to_string()),
        ("timeout-ticks", p.timeout_ticks.to_string()),
        ("tick-length", p.tick_length.to_string()),
        ("robot", format!("{} {}", w.robot.x, w.robot.y)),
        ("held", fmt_opt(&w.held).to_string()),
        ("location", w.location.clone()),
        ("rng-seed", w.seed.to_string()),
        ("tick", w.tick.to_string()),
    ];
    for (k, v) in kv {
        writeln!(s, "{k} = {v}").unwrap();
    }
    s.push_str("[objects]\n# name radius x y toppled container\n");
    for o in &w.objects {
        writeln!(
            s,
            "{} {} {} {} {} {}",
            o.name,
            o.radius,
            o.position.x,
            o.position.y,
            u8::from(o.toppled),
            fmt_opt(&o.container)
        )
        .unwrap();
    }
    for (title, list) in [("[receptacles]", &w.receptacles), ("[staging]", &w.staging)] {
        writeln!(s, "{title}\n# name x y radius").unwrap();
        for r in list {
            writeln!(s, "{} {} {} {}", r.name, r.center.x, r.center.y, r.radius).unwrap();
        }
    }
    s
}

fn parse_f64s(v: &str, n: usize, line: usize) -> Result<Vec<f64>, WorldError> {
    let out: Result<Vec<f64>, _> = v.split_whitespace().map(str::parse::<f64>).collect();
    match out {
        Ok(xs) if xs.len() == n => Ok(xs),
        _ => Err(WorldError::SceneFormat {
            line,
            msg: format!("expected {n} numbers, got `{v}`"),
        }),
    }
}

fn parse_num<T: FromStr>(v: &str, line: usize) -> Result<T, WorldError> {
    v.trim().parse().map_err(|_| WorldError::SceneFormat {
        line,
        msg: format!("bad number `{v}`"),
    })
}

fn opt(v: &str) -> Option<String> {
    if v == "-" {
        None
    } else {
        Some(v.to_string())
    }
}

/// Inverse of [`save_scene`].
pub fn load_scene(text: &str) -> Result<WorldState, WorldError> {
    let mut w = WorldState::empty(SceneConfig::default());
    let mut section = "";
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if l.starts_with('[') {
            section = match l {
                "[objects]" => "objects",
                "[receptacles]" => "receptacles",
                "[staging]" => "staging",
                _ => {
                    return Err(WorldError::SceneFormat {
                        line,
                        msg: format!("unknown section {l}"),
                    })
                }
            };
            continue;
        }
        let fields: Vec<&str> = l.split_whitespace().collect();
        match section {
            "" => {
                let (k, v) = l.split_once('=').ok_or_else(|| WorldError::SceneFormat {
                    line,
                    msg: "expected key = value".into(),
                })?;
                let v = v.trim();
                let c = &mut w.config;
                match k.trim() {
                    "name" => c.name = v.to_string(),
                    "mode" => {
                        c.mode = v
                            .parse()
                            .map_err(|msg| WorldError::SceneFormat { line, msg })?
                    }
                    "object-count" => c.object_count = parse_num(v, line)?,
                    "min-gap" => c.min_gap = parse_num(v, line)?,
                    "seed" => c.seed = parse_num(v, line)?,
                    "target-object" => c.target_object = v.to_string(),
                    "goal-place" => c.goal_place = v.to_string(),
                    "area" => {
                        let a = parse_f64s(v, 4, line)?;
                        c.area = Area::new(a[0], a[1], a[2], a[3]);
                    }
                    "radius-range" => {
                        let a = parse_f64s(v, 2, line)?;
                        c.radius_range = (a[0], a[1]);
                    }
                    "item-pool" => {
                        c.item_pool = v
                            .split(',')
                            .filter(|s| !s.is_empty())
                            .map(str::to_string)
                            .collect()
                    }
                    "goal-place-at" => {
                        let a = parse_f64s(v, 3, line)?;
                        c.goal_place_at = (Vec2::new(a[0], a[1]), a[2]);
                    }
                    "robot-x-range" => {
                        let a = parse_f64s(v, 2, line)?;
                        c.robot_x_range = (a[0], a[1]);
                    }
                    "staging-cells" => c.staging_cells = parse_num(v, line)?,
                    "corridor-half-width" => w.params.corridor_half_width = parse_num(v, line)?,
                    "grasp-margin" => w.params.grasp_margin = parse_num(v, line)?,
                    "push" => w.params.push = parse_num(v, line)?,
                    "chain-depth" => w.params.chain_depth = parse_num(v, line)?,
                    "timeout-ticks" => w.params.timeout_ticks = parse_num(v, line)?,
                    "tick-length" => w.params.tick_length = parse_num(v, line)?,
                    "robot" => {
                        let a = parse_f64s(v, 2, line)?;
                        w.robot = Vec2::new(a[0], a[1]);
                    }
                    "held" => w.held = opt(v),
                    "location" => w.location = v.to_string(),
                    "rng-seed" => w.seed = parse_num(v, line)?,
                    "tick" => w.tick = parse_num(v, line)?,
                    other => {
                        return Err(WorldError::SceneFormat {
                            line,
                            msg: format!("unknown key {other}"),
                        })
                    }
                }
            }
            "objects" => {
                if fields.len() != 6 {
                    return Err(WorldError::SceneFormat {
                        line,
                        msg: "object rows need: name radius x y toppled container".into(),
                    });
                }
                let mut o = ObjectInstance::new(
                    fields[0],
                    parse_num(fields[1], line)?,
                    parse_num(fields[2], line)?,
                    parse_num(fields[3], line)?,
                );
                o.toppled = match fields[4] {
                    "0" => false,
                    "1" => true,
                    _ => {
                        return Err(WorldError::SceneFormat {
                            line,
                            msg: "toppled must be 0 or 1".into(),
                        })
                    }
                };
                o.container = opt(fields[5]);
                w.objects.push(o);
            }
            _ => {
                if fields.len() != 4 {
                    return Err(WorldError::SceneFormat {
                        line,
                        msg: "place rows need: name x y radius".into(),
                    });
                }
                let r = Receptacle::new(
                    fields[0],
                    parse_num(fields[1], line)?,
                    parse_num(fields[2], line)?,
                    parse_num(fields[3], line)?,
                );
                if section == "receptacles" {
                    w.receptacles.push(r);
                } else {
                    w.staging.push(r);
                }
            }
        }
    }
    Ok(w)
}
