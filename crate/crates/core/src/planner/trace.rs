use super::EpisodeTrace;
use crate::world::CollisionEvent;

/// Trace file: per step a decision line, the step's collision events in
/// event-log format, and an outcome line; a final result line.
///
/// ```text
/// decision 0 (pick tomato_can) clearing search
/// 3 robot apple 1
/// outcome 0 ok ticks=21 collisions=1
/// result success=true steps=4 collisions=1
/// ```
pub fn render_trace(t: &EpisodeTrace) -> String {
    let mut s = String::new();
    for (k, (d, o)) in t.decisions.iter().zip(&t.outcomes).enumerate() {
        s.push_str(&format!(
            "decision {k} {} {} {}\n",
            d.action.call(),
            d.rationale,
            d.backend
        ));
        for e in &o.events {
            s.push_str(&e.log_line());
            s.push('\n');
        }
        s.push_str(&format!(
            "outcome {k} {} ticks={} collisions={}\n",
            if o.succeeded { "ok" } else { "failed" },
            o.ticks_used,
            o.collision_weight()
        ));
    }
    s.push_str(&format!(
        "result success={} steps={} collisions={}\n",
        t.success, t.steps_used, t.total_collisions
    ));
    s
}

/// Severity sum over the event lines of a rendered trace.
pub fn recount_trace_collisions(text: &str) -> u32 {
    text.lines()
        .filter_map(CollisionEvent::parse_log_line)
        .map(|e| e.severity.weight())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        blocked_target_goal, blocked_target_world, tabletop_domain, TABLETOP_DOMAIN,
    };
    use crate::planner::{run_episode, EpisodeOptions};

    #[test]
    fn trace_recount_matches_total() {
        let t = run_episode(
            tabletop_domain(),
            TABLETOP_DOMAIN,
            &blocked_target_goal(),
            &blocked_target_world(),
            &EpisodeOptions::default(),
        )
        .unwrap();
        let text = render_trace(&t);
        assert!(text.starts_with("decision 0 (pick strawberry_box) direct search\n"));
        assert_eq!(recount_trace_collisions(&text), t.total_collisions);
        assert!(text.ends_with(&format!(
            "result success=true steps=2 collisions={}\n",
            t.total_collisions
        )));
    }
}
