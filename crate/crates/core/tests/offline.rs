//! Translation and LLM-path tests. Everything runs against the scripted stub
//! or a loopback socket, so no network access is needed.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use proptest::prelude::*;

use safe_planner::fixtures::{
    blocked_target_goal, blocked_target_world, instructions, tabletop_domain, ITEMS, PLACES,
    TABLETOP_DOMAIN,
};
use safe_planner::llm::{HttpBackend, LlmBackend, ScriptedStub};
use safe_planner::pddl::{parse_goal, Atom};
use safe_planner::planner::{
    context, planning_prompt, run_episode, DecisionBackend, EpisodeOptions, SafetyGuidance,
    SafetySource,
};
use safe_planner::safety::{matrix_to_ranking, MatrixSource, SafetyMatrix};
use safe_planner::translate::{
    render_goal_pddl, translate_llm, translate_rule_based, GoalSpec, Instruction, Provenance,
};

fn atom_strategy() -> impl Strategy<Value = Atom> {
    let item = prop::sample::select(ITEMS.to_vec());
    let place = prop::sample::select(PLACES.to_vec());
    prop_oneof![
        (item.clone(), place.clone()).prop_map(|(o, p)| Atom::new("on", [o, p])),
        (item.clone(), place).prop_map(|(o, p)| Atom::new("in", [o, p])),
        item.prop_map(|o| Atom::new("holding", [o])),
    ]
}

proptest! {
    #[test]
    fn goal_render_parse_round_trip(atoms in prop::collection::vec(atom_strategy(), 0..6)) {
        let g = GoalSpec::new(atoms, Provenance::RuleBased);
        let ins = Instruction::with_fixture_vocabulary("x");
        let back = parse_goal(&render_goal_pddl(&g), tabletop_domain(), &ins.objects).unwrap();
        prop_assert_eq!(GoalSpec::new(back, Provenance::RuleBased), g);
    }

    /// Whatever the backend says, the result type-checks or is an error.
    #[test]
    fn llm_path_never_leaks_invalid_goals(
        replies in prop::collection::vec("[a-z() _]{0,40}", 3),
        text in prop::sample::select(vec!["Move the apple to the chair", "Dance with the apple"]),
    ) {
        let stub = ScriptedStub::new(replies);
        let ins = Instruction::with_fixture_vocabulary(text);
        if let Ok(g) = translate_llm(&ins, tabletop_domain(), TABLETOP_DOMAIN, &stub) {
            prop_assert!(parse_goal(&render_goal_pddl(&g), tabletop_domain(), &ins.objects).is_ok());
        }
    }
}

#[test]
fn corpus_translates_deterministically() {
    for line in instructions() {
        let ins = Instruction::with_fixture_vocabulary(line);
        let a =
            translate_rule_based(&ins, tabletop_domain()).unwrap_or_else(|e| panic!("{line}: {e}"));
        assert_eq!(a, translate_rule_based(&ins, tabletop_domain()).unwrap());
        assert!(!a.literals.is_empty());
    }
}

#[test]
fn ranking_block_appears_verbatim_in_prompt() {
    let w = blocked_target_world();
    let opts = EpisodeOptions::default();
    let mut ctx = context(
        tabletop_domain(),
        TABLETOP_DOMAIN,
        &blocked_target_goal(),
        &w,
        &opts,
        &[],
    )
    .unwrap();
    let m = SafetyMatrix {
        entries: vec![vec![0.7, 0.2]],
        skills: vec!["pick".into()],
        objects: vec!["apple".into(), "bowl".into()],
        source: MatrixSource::Predicted,
    };
    let ranking = matrix_to_ranking(&m);
    ctx.safety = Some(SafetyGuidance { matrix: m, ranking });
    let prompt = planning_prompt(&ctx);
    assert!(prompt.contains(
        "The safest operator is to pick the bowl. The second safest operator is to pick the apple."
    ));

    ctx.safety = None;
    assert!(!planning_prompt(&ctx).contains("safest operator"));
}

#[test]
fn oracle_guided_prompt_carries_full_ranking() {
    let w = blocked_target_world();
    let stub = ScriptedStub::new(["(pick tomato_can)"]);
    let opts = EpisodeOptions {
        safety: Some(SafetySource::Oracle),
        llm: Some(&stub),
        step_budget: 1,
        ..Default::default()
    };
    let trace = run_episode(
        tabletop_domain(),
        TABLETOP_DOMAIN,
        &blocked_target_goal(),
        &w,
        &opts,
    )
    .unwrap();
    let ctx = context(
        tabletop_domain(),
        TABLETOP_DOMAIN,
        &blocked_target_goal(),
        &w,
        &opts,
        &[],
    )
    .unwrap();
    let text = &ctx.safety.as_ref().unwrap().ranking.text;
    assert!(text.starts_with("The safest operator is to "));
    assert_eq!(stub.prompts()[0], planning_prompt(&ctx));
    assert!(stub.prompts()[0].contains(text.as_str()));
    assert_eq!(trace.decisions[0].backend, DecisionBackend::Llm);
}

#[test]
fn scripted_episode_follows_the_backend() {
    let stub = ScriptedStub::new([
        "I will clear the obstacle first: (pick tomato_can)",
        "(place tomato_can staging_0)",
        "(pick strawberry_box)",
        "(place strawberry_box blue_box)",
    ]);
    let opts = EpisodeOptions {
        safety: Some(SafetySource::Oracle),
        llm: Some(&stub),
        ..Default::default()
    };
    let t = run_episode(
        tabletop_domain(),
        TABLETOP_DOMAIN,
        &blocked_target_goal(),
        &blocked_target_world(),
        &opts,
    )
    .unwrap();
    assert!(t.success);
    assert_eq!(t.total_collisions, 0);
    assert!(t
        .decisions
        .iter()
        .all(|d| d.backend == DecisionBackend::Llm));
    assert_eq!(stub.remaining(), 0);
}

#[test]
fn unusable_replies_fall_back_to_search() {
    let stub = ScriptedStub::new(["no idea", "(dance apple)", "(place apple chair)"]);
    let opts = EpisodeOptions {
        llm: Some(&stub),
        step_budget: 1,
        ..Default::default()
    };
    let t = run_episode(
        tabletop_domain(),
        TABLETOP_DOMAIN,
        &blocked_target_goal(),
        &blocked_target_world(),
        &opts,
    )
    .unwrap();
    assert_eq!(t.decisions[0].backend, DecisionBackend::Search);
    assert_eq!(t.actions(), ["pick(strawberry_box)"]);
    assert_eq!(stub.prompts().len(), 3);
}

/// One-shot HTTP server on loopback that records the request and answers
/// with a canned chat-completion document.
fn serve_once(body: &'static str) -> (String, thread::JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!(
        "http://{}/v1/chat/completions",
        listener.local_addr().unwrap()
    );
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream);
        let mut head = String::new();
        let mut len = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
            if line == "\r\n" {
                break;
            }
            head.push_str(&line);
        }
        let mut buf = vec![0; len];
        reader.read_exact(&mut buf).unwrap();
        let reply = format!(
            "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
            body.len()
        );
        reader.get_mut().write_all(reply.as_bytes()).unwrap();
        head + "\r\n" + &String::from_utf8(buf).unwrap()
    });
    (url, handle)
}

#[test]
fn http_backend_speaks_the_wire_contract() {
    let (url, server) = serve_once(
        r#"{"choices":[{"message":{"role":"assistant","content":"(and (on apple chair))"}}]}"#,
    );
    let backend = HttpBackend::new(&url, "test-model", Some("k123".into())).unwrap();
    let ins = Instruction::with_fixture_vocabulary("Move the apple to the chair");
    let g = translate_llm(&ins, tabletop_domain(), TABLETOP_DOMAIN, &backend).unwrap();
    assert_eq!(g.provenance, Provenance::Llm);
    assert_eq!(g.literals, [Atom::new("on", ["apple", "chair"])]);

    let request = server.join().unwrap();
    let lower = request.to_ascii_lowercase();
    assert!(lower.starts_with("post /v1/chat/completions"));
    assert!(lower.contains("authorization: bearer k123"));
    let body: serde_json::Value =
        serde_json::from_str(request.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0);
    assert_eq!(body["messages"][0]["role"], "user");
    assert!(body["messages"][0]["content"]
        .as_str()
        .unwrap()
        .contains("Move the apple to the chair"));
}

#[test]
fn http_backend_reports_missing_reply_path() {
    let (url, server) = serve_once(r#"{"unexpected":true}"#);
    let backend = HttpBackend::new(&url, "m", None).unwrap();
    assert!(backend.complete("hi").is_err());
    server.join().unwrap();
}
