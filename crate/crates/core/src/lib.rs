//! Collision-aware tabletop task planning.
//!
//! The crate covers the whole loop: a STRIPS/typing PDDL layer ([`pddl`]), a
//! deterministic 2-D tabletop simulator ([`world`]), collision-risk labels
//! ([`risk`]), a learned per-skill risk regressor and its ranking guidance
//! ([`safety`]), natural-language goal translation ([`translate`]), the
//! closed-loop planner ([`planner`]) and the experiment harness ([`eval`]).
//!
//! Numeric kernels are generic over [`Scalar`]; the aliases below pin the
//! `f64` instantiation used throughout the simulator and the CLI.

pub mod eval;
pub mod fixtures;
pub mod geometry;
pub mod llm;
pub mod pddl;
pub mod planner;
pub mod risk;
pub mod safety;
pub mod scalar;
pub mod seed;
pub mod translate;
pub mod world;

pub use scalar::Scalar;

pub type Vec2 = geometry::Vec2<f64>;
pub type ModelParameters = safety::ModelParameters<f64>;
pub type ModelParameters32 = safety::ModelParameters<f32>;
