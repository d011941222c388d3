//! Deterministic plan-view tabletop: disc objects on a unit table, a robot
//! reaching in from the table edge, receptacles and staging cells.
//!
//! Objects resting inside a receptacle footprint (goal places, staging cells)
//! are out of the clutter: skills never sweep them. Only objects on the bare
//! table take part in collisions.

mod predicates;
mod scene;
mod skills;
mod views;

use std::fmt;

use thiserror::Error;

use crate::geometry::Disc;
use crate::Vec2;

pub use predicates::extract_predicates;
pub use scene::{generate_scene, load_scene, save_scene, Area, Mode, SceneConfig};
pub use skills::{execute_skill, sweep_region, SkillOutcome};
pub use views::{render_views, ViewParams, VIEW_ANGLES_DEG, VIEW_BINS, VIEW_COUNT};

/// Constant name of the table surface.
pub const TABLE: &str = "table";
/// Name of the single navigation location of a tabletop scene.
pub const WORKSPACE: &str = "workspace";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("could not place {object} after {attempts} attempts (min-gap infeasible)")]
    PlacementFailed { object: String, attempts: usize },
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
    #[error("unknown skill {0}")]
    UnknownSkill(String),
    #[error("precondition of {skill} violated: {reason}")]
    Precondition { skill: String, reason: String },
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("scene file line {line}: {msg}")]
    SceneFormat { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub name: String,
    pub radius: f64,
    pub position: Vec2,
    pub toppled: bool,
    /// Receptacle the object rests in, `None` when it stands on the table.
    pub container: Option<String>,
}

impl ObjectInstance {
    pub fn new(name: impl Into<String>, radius: f64, x: f64, y: f64) -> Self {
        ObjectInstance {
            name: name.into(),
            radius,
            position: Vec2::new(x, y),
            toppled: false,
            container: None,
        }
    }

    pub fn disc(&self) -> Disc<f64> {
        Disc::new(self.position, self.radius)
    }
}

/// Goal place or staging cell: a circular footprint objects can be put into.
#[derive(Debug, Clone, PartialEq)]
pub struct Receptacle {
    pub name: String,
    pub center: Vec2,
    pub radius: f64,
}

impl Receptacle {
    pub fn new(name: impl Into<String>, x: f64, y: f64, radius: f64) -> Self {
        Receptacle {
            name: name.into(),
            center: Vec2::new(x, y),
            radius,
        }
    }

    pub fn footprint(&self) -> Disc<f64> {
        Disc::new(self.center, self.radius)
    }
}

/// Skill geometry and timing constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub corridor_half_width: f64,
    /// Grasp envelope radius is the object radius plus this margin.
    pub grasp_margin: f64,
    /// Displacement applied to every struck object.
    pub push: f64,
    /// Robot contact is depth 1; induced object contacts go up to this depth.
    pub chain_depth: usize,
    pub timeout_ticks: u64,
    /// Distance the gripper travels per tick.
    pub tick_length: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            corridor_half_width: 0.05,
            grasp_margin: 0.04,
            push: 0.03,
            chain_depth: 3,
            timeout_ticks: 50,
            tick_length: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub config: SceneConfig,
    pub objects: Vec<ObjectInstance>,
    pub receptacles: Vec<Receptacle>,
    pub staging: Vec<Receptacle>,
    /// Approach origin on the table edge.
    pub robot: Vec2,
    pub held: Option<String>,
    pub location: String,
    pub seed: u64,
    pub tick: u64,
    pub params: SimParams,
}

impl WorldState {
    /// World with no objects or places, robot at the middle of the near edge.
    pub fn empty(config: SceneConfig) -> Self {
        let seed = config.seed;
        WorldState {
            config,
            objects: Vec::new(),
            receptacles: Vec::new(),
            staging: Vec::new(),
            robot: Vec2::new(0.5, 0.0),
            held: None,
            location: WORKSPACE.to_string(),
            seed,
            tick: 0,
            params: SimParams::default(),
        }
    }

    pub fn object(&self, name: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn object_mut(&mut self, name: &str) -> Option<&mut ObjectInstance> {
        self.objects.iter_mut().find(|o| o.name == name)
    }

    pub fn object_names(&self) -> Vec<String> {
        self.objects.iter().map(|o| o.name.clone()).collect()
    }

    /// Goal place or staging cell by name.
    pub fn place(&self, name: &str) -> Option<&Receptacle> {
        self.receptacles
            .iter()
            .chain(self.staging.iter())
            .find(|r| r.name == name)
    }

    pub fn places(&self) -> impl Iterator<Item = &Receptacle> {
        self.receptacles.iter().chain(self.staging.iter())
    }

    pub fn is_held(&self, name: &str) -> bool {
        self.held.as_deref() == Some(name)
    }

    /// Standing on the bare table and not held. Containment is geometric: an
    /// object whose center lies in a receptacle footprint is stored there.
    pub fn on_table(&self, o: &ObjectInstance) -> bool {
        !self.is_held(&o.name) && self.receptacle_at(o.position).is_none()
    }

    /// Objects that take part in collision checks.
    pub fn clutter(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().filter(move |o| self.on_table(o))
    }

    /// Receptacle whose footprint contains `p`, goal places first.
    pub fn receptacle_at(&self, p: Vec2) -> Option<&Receptacle> {
        self.places().find(|r| r.footprint().contains(p))
    }

    pub fn staging_is_free(&self, cell: &Receptacle) -> bool {
        !self
            .objects
            .iter()
            .any(|o| !self.is_held(&o.name) && cell.footprint().contains(o.position))
    }

    /// First staging cell, by index, holding no object.
    pub fn first_free_staging(&self) -> Option<&Receptacle> {
        self.staging.iter().find(|c| self.staging_is_free(c))
    }
}

/// Deep copy; the copy shares nothing with the source.
pub fn clone_world(w: &WorldState) -> WorldState {
    w.clone()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Actor {
    Robot,
    Object(String),
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Robot => f.write_str("robot"),
            Actor::Object(o) => f.write_str(o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Displaced = 1,
    Toppled = 2,
}

impl Severity {
    pub fn weight(self) -> u32 {
        self as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionEvent {
    pub actor: Actor,
    pub victim: String,
    pub severity: Severity,
    pub tick: u64,
}

impl CollisionEvent {
    /// `tick actor victim severity`
    pub fn log_line(&self) -> String {
        format!(
            "{} {} {} {}",
            self.tick,
            self.actor,
            self.victim,
            self.severity.weight()
        )
    }

    pub fn parse_log_line(line: &str) -> Option<CollisionEvent> {
        let mut it = line.split_whitespace();
        let tick = it.next()?.parse().ok()?;
        let actor = match it.next()? {
            "robot" => Actor::Robot,
            other => Actor::Object(other.to_string()),
        };
        let victim = it.next()?.to_string();
        let severity = match it.next()? {
            "1" => Severity::Displaced,
            "2" => Severity::Toppled,
            _ => return None,
        };
        if it.next().is_some() {
            return None;
        }
        Some(CollisionEvent {
            actor,
            victim,
            severity,
            tick,
        })
    }
}
