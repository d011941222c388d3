use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::SafetyError;
use crate::fixtures::pick;
use crate::risk::oracle_entry;
use crate::seed::derive_seed;
use crate::world::{
    execute_skill, generate_scene, render_views, SceneConfig, WorldState, VIEW_BINS, VIEW_COUNT,
};

/// One labeled (scene, skill, object) sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub scene_ref: String,
    pub skill: usize,
    pub object: String,
    /// `VIEW_COUNT` vectors of `VIEW_BINS` values.
    pub views: Vec<Vec<f64>>,
    pub label: f64,
    /// The world the record was taken from; absent after a file round trip.
    pub scene: Option<Arc<WorldState>>,
}

#[derive(Debug, Clone)]
pub struct CollectOptions {
    /// Scene distributions, used round-robin across episodes. Each template's
    /// seed is replaced per episode.
    pub templates: Vec<SceneConfig>,
    pub episodes: usize,
    pub base_seed: u64,
    pub skills: Vec<String>,
    /// Average each label over this many runs on jittered copies of the scene.
    pub label_repeats: usize,
}

const JITTER: f64 = 0.002;

fn jittered(w: &WorldState, seed: u64) -> WorldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut j = w.clone();
    for o in &mut j.objects {
        o.position.x += rng.gen_range(-JITTER..=JITTER);
        o.position.y += rng.gen_range(-JITTER..=JITTER);
    }
    j
}

fn label(w: &WorldState, skill: &str, object: &str, repeats: usize, seed: u64) -> Option<f64> {
    let base = oracle_entry(w, skill, object)?;
    if repeats <= 1 {
        return Some(base);
    }
    let mut sum = base;
    for r in 1..repeats {
        let j = jittered(w, derive_seed(seed, &[r as u64]));
        sum += oracle_entry(&j, skill, object).unwrap_or(base);
    }
    Some(sum / repeats as f64)
}

fn records_for(
    w: &Arc<WorldState>,
    scene_ref: &str,
    skills: &[(usize, &String)],
    objects: &[String],
    opts: &CollectOptions,
) -> Result<Vec<TrajectoryRecord>, SafetyError> {
    let mut out = Vec::new();
    for o in objects {
        let mut views = None;
        for &(i, skill) in skills {
            let Some(y) = label(w, skill, o, opts.label_repeats, w.seed) else {
                continue;
            };
            if views.is_none() {
                views = Some(render_views(w, o)?);
            }
            out.push(TrajectoryRecord {
                scene_ref: scene_ref.to_string(),
                skill: i,
                object: o.clone(),
                views: views.clone().unwrap(),
                label: y,
                scene: Some(Arc::clone(w)),
            });
        }
    }
    Ok(out)
}

/// Randomized scenes, every applicable (skill, object) pair probed on a
/// clone and labeled by the exact oracle.
///
/// Fresh scenes leave `place` inapplicable, so when `place` is a skill each
/// episode also picks one seeded object and records the `place` pair of that
/// held state. Deterministic in the base seed.
pub fn collect_dataset(opts: &CollectOptions) -> Result<Vec<TrajectoryRecord>, SafetyError> {
    if opts.templates.is_empty() || opts.episodes == 0 {
        return Ok(Vec::new());
    }
    let all: Vec<(usize, &String)> = opts.skills.iter().enumerate().collect();
    let place: Vec<(usize, &String)> = all.iter().copied().filter(|(_, s)| *s == "place").collect();
    let per_episode: Vec<Result<Vec<TrajectoryRecord>, SafetyError>> = (0..opts.episodes)
        .into_par_iter()
        .map(|e| {
            let mut cfg = opts.templates[e % opts.templates.len()].clone();
            cfg.seed = derive_seed(opts.base_seed, &[e as u64]);
            let w = Arc::new(generate_scene(&cfg)?);
            let scene_ref = format!("{}-{}-{}", cfg.name, cfg.mode, cfg.seed);
            let names = w.object_names();
            let mut recs = records_for(&w, &scene_ref, &all, &names, opts)?;
            if !place.is_empty() && !names.is_empty() {
                let o = &names[(cfg.seed % names.len() as u64) as usize];
                let out = execute_skill(&w, &pick(o))?;
                if out.succeeded {
                    let held = Arc::new(out.world);
                    let r = format!("{scene_ref}/held");
                    recs.extend(records_for(
                        &held,
                        &r,
                        &place,
                        std::slice::from_ref(o),
                        opts,
                    )?);
                }
            }
            Ok(recs)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_episode {
        out.extend(r?);
    }
    Ok(out)
}

/// C-style `%.6e`.
fn sci(v: f64) -> String {
    let s = format!("{v:.6e}");
    match s.split_once('e') {
        Some((m, e)) => {
            let (sign, digits) = match e.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', e),
            };
            format!("{m}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

pub fn render_record(r: &TrajectoryRecord) -> String {
    let mut s = format!("{} {} {} {}", r.scene_ref, r.skill, r.object, sci(r.label));
    for v in r.views.iter().flatten() {
        s.push(' ');
        s.push_str(&sci(*v));
    }
    s
}

/// Header line plus one line per record.
pub fn render_dataset(skills: &[String], records: &[TrajectoryRecord]) -> String {
    let mut s = format!(
        "I={} VIEWDIM={VIEW_BINS} VIEWS={VIEW_COUNT} SKILLS={}\n",
        skills.len(),
        skills.join(",")
    );
    for r in records {
        s.push_str(&render_record(r));
        s.push('\n');
    }
    s
}

fn bad(line: usize, msg: impl Into<String>) -> SafetyError {
    SafetyError::DatasetFormat {
        line,
        msg: msg.into(),
    }
}

/// Parse a dataset file into its skill list and records.
pub fn parse_dataset(text: &str) -> Result<(Vec<String>, Vec<TrajectoryRecord>), SafetyError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let mut heads = None;
    let mut skills = None;
    for field in header.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| bad(1, format!("bad header field {field}")))?;
        match k {
            "I" => heads = Some(v.parse::<usize>().map_err(|_| bad(1, "bad I"))?),
            "VIEWDIM" if v != VIEW_BINS.to_string() => {
                return Err(bad(1, format!("VIEWDIM {v} unsupported")))
            }
            "VIEWS" if v != VIEW_COUNT.to_string() => {
                return Err(bad(1, format!("VIEWS {v} unsupported")))
            }
            "VIEWDIM" | "VIEWS" => {}
            "SKILLS" => skills = Some(v.split(',').map(str::to_string).collect::<Vec<_>>()),
            _ => return Err(bad(1, format!("unknown header field {k}"))),
        }
    }
    let skills = skills.ok_or_else(|| bad(1, "missing SKILLS"))?;
    if heads != Some(skills.len()) {
        return Err(bad(1, "I does not match SKILLS"));
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let n = idx + 1;
        let f: Vec<&str> = line.split_whitespace().collect();
        let want = 4 + VIEW_BINS * VIEW_COUNT;
        if f.len() != want {
            return Err(bad(n, format!("expected {want} fields, found {}", f.len())));
        }
        let skill: usize = f[1].parse().map_err(|_| bad(n, "bad skill index"))?;
        if skill >= skills.len() {
            return Err(bad(n, format!("skill index {skill} out of range")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(n, format!("bad number {s}")))
        };
        let label = num(f[3])?;
        let flat = f[4..]
            .iter()
            .map(|s| num(s))
            .collect::<Result<Vec<_>, _>>()?;
        records.push(TrajectoryRecord {
            scene_ref: f[0].to_string(),
            skill,
            object: f[2].to_string(),
            views: flat.chunks(VIEW_BINS).map(<[f64]>::to_vec).collect(),
            label,
            scene: None,
        });
    }
    Ok((skills, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{oracle_risk_matrix, skill_names};
    use crate::world::Mode;

    fn opts(skills: &[&str], mode: Mode, episodes: usize) -> CollectOptions {
        CollectOptions {
            templates: vec![SceneConfig {
                mode,
                object_count: if mode == Mode::Easy { 3 } else { 5 },
                ..SceneConfig::default()
            }],
            episodes,
            base_seed: 42,
            skills: skills.iter().map(|s| s.to_string()).collect(),
            label_repeats: 1,
        }
    }

    #[test]
    fn one_easy_episode_pick_only() {
        let recs = collect_dataset(&opts(&["pick"], Mode::Easy, 1)).unwrap();
        assert_eq!(recs.len(), 3);
    }

    #[test]
    fn labels_match_oracle_matrix() {
        let recs = collect_dataset(&opts(&["pick", "place", "navigate"], Mode::Hard, 4)).unwrap();
        for r in &recs {
            let w = r.scene.as_ref().unwrap();
            let m = oracle_risk_matrix(w, &skill_names(), &w.object_names());
            let n = w
                .object_names()
                .iter()
                .position(|o| *o == r.object)
                .unwrap();
            assert_eq!(m.entries[r.skill][n], r.label, "{}", r.scene_ref);
            assert_eq!(r.views, render_views(w, &r.object).unwrap());
        }
        assert!(recs.iter().any(|r| r.skill == 1));
    }

    #[test]
    fn collection_is_deterministic() {
        let a = collect_dataset(&opts(&["pick", "place"], Mode::Hard, 6)).unwrap();
        let b = collect_dataset(&opts(&["pick", "place"], Mode::Hard, 6)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn file_round_trip() {
        let skills = skill_names();
        let recs = collect_dataset(&opts(&["pick", "place", "navigate"], Mode::Easy, 2)).unwrap();
        let text = render_dataset(&skills, &recs);
        assert!(text.starts_with("I=3 VIEWDIM=32 VIEWS=5 SKILLS=pick,place,navigate\n"));
        let (s, back) = parse_dataset(&text).unwrap();
        assert_eq!(s, skills);
        assert_eq!(back.len(), recs.len());
        for (a, b) in back.iter().zip(&recs) {
            assert_eq!((a.skill, &a.object, a.label), (b.skill, &b.object, b.label));
            for (x, y) in a.views.iter().flatten().zip(b.views.iter().flatten()) {
                assert!((x - y).abs() <= 1e-6 * y.abs().max(1e-30));
            }
        }
        assert_eq!(sci(0.36), "3.600000e-01");
        assert_eq!(sci(12.0), "1.200000e+01");
        assert!(matches!(
            parse_dataset("I=2 VIEWDIM=32 VIEWS=5 SKILLS=pick"),
            Err(SafetyError::DatasetFormat { .. })
        ));
        let broken = format!(
            "{}x 0 apple 1.0\n",
            text.lines().next().unwrap().to_owned() + "\n"
        );
        assert!(matches!(
            parse_dataset(&broken),
            Err(SafetyError::DatasetFormat { line: 2, .. })
        ));
    }

    #[test]
    fn label_repeats_average() {
        let mut o = opts(&["pick"], Mode::Hard, 2);
        o.label_repeats = 3;
        let recs = collect_dataset(&o).unwrap();
        assert!(recs.iter().all(|r| r.label.is_finite() && r.label >= 0.0));
    }
}
