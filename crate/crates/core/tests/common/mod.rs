//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use safe_planner::fixtures::{episode_config, pick, SCENES};
use safe_planner::geometry::{Disc, SweptRegion};
use safe_planner::pddl::{is_applicable, GroundedAction};
use safe_planner::risk::{
    ground_skill, ledger_from_events, oracle_risk_matrix, risk_of, skill_names,
};
use safe_planner::world::{
    execute_skill, extract_predicates, generate_scene, sweep_region, Actor, CollisionEvent, Mode,
    WorldState,
};

pub mod pddl_gen;

/// Scene with 1..=5 objects drawn from the fixture distributions, sometimes
/// packed tighter than the fixtures allow and sometimes holding an object.
pub fn random_small_scene(seed: u64) -> WorldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = SCENES[rng.gen_range(0..SCENES.len())];
    let mode = if rng.gen_bool(0.5) {
        Mode::Easy
    } else {
        Mode::Hard
    };
    let mut cfg = episode_config(scene, mode, rng.gen()).unwrap();
    if mode == Mode::Hard {
        cfg.object_count = 5;
    }
    cfg.min_gap = rng.gen_range(0.07..=cfg.min_gap);
    let mut w = generate_scene(&cfg).unwrap();
    let keep = rng.gen_range(1..=w.objects.len());
    w.objects.truncate(keep);
    if rng.gen_bool(0.3) {
        let name = w.objects[rng.gen_range(0..keep)].name.clone();
        if let Ok(out) = execute_skill(&w, &pick(&name)) {
            w = out.world;
        }
    }
    w
}

/// Severity sum over raw events, skipping robot contact with the grasp target.
pub fn brute_recount(events: &[CollisionEvent], manipulated: &str) -> u32 {
    let mut total = 0;
    for e in events {
        let is_grasp = matches!(e.actor, Actor::Robot) && e.victim == manipulated;
        if !is_grasp {
            total += e.severity as u32;
        }
    }
    total
}

/// Every applicable (skill, object) probe in a world.
pub fn probes(w: &WorldState) -> Vec<(String, String, GroundedAction)> {
    let state = extract_predicates(w);
    let mut out = Vec::new();
    for s in skill_names() {
        for o in w.object_names() {
            if let Some(a) = ground_skill(w, &s, &o) {
                if is_applicable(&state, &a) {
                    out.push((s.clone(), o.clone(), a));
                }
            }
        }
    }
    out
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Eq1Report {
    pub probes: usize,
    pub mismatches: usize,
}

/// Ledger-based risk against the raw recount and the oracle matrix.
pub fn check_eq1(w: &WorldState) -> Eq1Report {
    let mut r = Eq1Report::default();
    let m = oracle_risk_matrix(w, &skill_names(), &w.object_names());
    for (s, o, a) in probes(w) {
        let out = execute_skill(w, &a).unwrap();
        let via_ledger = risk_of(&ledger_from_events(&out.events, &o));
        let brute = f64::from(brute_recount(&out.events, &o));
        r.probes += 1;
        if via_ledger != brute || m.get(&s, &o) != Some(brute) {
            r.mismatches += 1;
        }
    }
    r
}

// ---- dense-sampling geometry oracle ----

fn in_rect(p: (f64, f64), s: (f64, f64), e: (f64, f64), hw: f64) -> bool {
    let (dx, dy) = (e.0 - s.0, e.1 - s.1);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return false;
    }
    let (px, py) = (p.0 - s.0, p.1 - s.1);
    let along = (px * dx + py * dy) / len;
    let across = (dx * py - dy * px) / len;
    along > 0.0 && along < len && across.abs() < hw
}

fn in_circle(p: (f64, f64), c: (f64, f64), r: f64) -> bool {
    let (dx, dy) = (p.0 - c.0, p.1 - c.1);
    dx * dx + dy * dy < r * r
}

/// Whether any sample point of `disc` falls inside the swept region. Samples
/// are a square grid over the disc interior plus a dense ring just inside its
/// rim, which catches shallow lens-shaped overlaps the grid would miss.
pub fn sampled_hit(region: &SweptRegion<f64>, disc: &Disc<f64>) -> bool {
    let s = (region.corridor.start.x, region.corridor.start.y);
    let e = (region.corridor.end.x, region.corridor.end.y);
    let hw = region.corridor.half_width;
    let env = (region.envelope.center.x, region.envelope.center.y);
    let er = region.envelope.radius;
    let c = (disc.center.x, disc.center.y);
    let r = disc.radius;
    let inside = |p| in_rect(p, s, e, hw) || in_circle(p, env, er);

    const GRID: f64 = 0.004;
    let n = (r / GRID).ceil() as i64;
    for i in -n..=n {
        for j in -n..=n {
            let p = (c.0 + i as f64 * GRID, c.1 + j as f64 * GRID);
            if in_circle(p, c, r) && inside(p) {
                return true;
            }
        }
    }
    const RING: usize = 8192;
    let rr = r * (1.0 - 1e-9);
    (0..RING).any(|k| {
        let t = k as f64 * std::f64::consts::TAU / RING as f64;
        inside((c.0 + rr * t.cos(), c.1 + rr * t.sin()))
    })
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GeometryReport {
    pub probes: usize,
    pub hits: usize,
    pub disagreements: usize,
}

/// Compare analytic and sampled intersection for every (skill, subject)
/// sweep against every other table object.
pub fn check_geometry(w: &WorldState) -> GeometryReport {
    let mut rep = GeometryReport::default();
    let mut actions = Vec::new();
    for (_, _, a) in probes(w) {
        actions.push(a);
    }
    // place sweeps toward every receptacle, held or not
    for o in w.object_names() {
        for r in w.places() {
            actions.push(safe_planner::fixtures::place(&o, &r.name));
        }
    }
    for a in &actions {
        let Some(region) = sweep_region(w, a) else {
            continue;
        };
        let subject = a.binding[0].as_str();
        for victim in w.clutter().filter(|v| v.name != subject) {
            let disc = victim.disc();
            let analytic = region.intersects(&disc);
            let sampled = sampled_hit(&region, &disc);
            rep.probes += 1;
            rep.hits += usize::from(analytic);
            if analytic != sampled {
                rep.disagreements += 1;
            }
        }
    }
    rep
}
