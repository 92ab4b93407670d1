//! Embedding provider protocol: the HTTP client and the precomputed JSONL
//! format must agree with each other and with the metric definitions.
mod common;

use common::{dead_url, MockServer};
use serde_json::{json, Value};
use volmo_core::text::embed::{
    EmbeddingKind, EmbeddingProvider, HttpProvider, OneHotProvider, PrecomputedProvider, PrecomputedRecord,
};
use volmo_core::text::{score_corpus, FailureKind, ScoreConfig, TextPair};

const DIM: usize = 27;

/// Letter-count vector plus a constant axis; stands in for a transformer.
fn embed_word(w: &str) -> Vec<f64> {
    let mut v = vec![0.0; DIM];
    v[26] = 1.0;
    for c in w.to_lowercase().chars().filter(char::is_ascii_lowercase) {
        v[(c as u8 - b'a') as usize] += 1.0;
    }
    v
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn sentence(text: &str) -> Vec<f64> {
    let mut acc = vec![0.0; DIM];
    for w in text.split_whitespace() {
        for (a, b) in acc.iter_mut().zip(embed_word(w)) {
            *a += b;
        }
    }
    unit(acc)
}

fn service() -> MockServer {
    MockServer::start(|req| {
        if req.method != "POST" {
            return (405, "{}".into());
        }
        let body: Value = serde_json::from_str(&req.body).unwrap();
        let texts: Vec<&str> = body["texts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t.as_str().unwrap())
            .collect();
        let items: Vec<Value> = match req.path.as_str() {
            "/v1/embed/tokens" => texts
                .iter()
                .map(|t| {
                    let toks: Vec<&str> = t.split_whitespace().collect();
                    json!({"tokens": toks, "vectors": toks.iter().map(|w| unit(embed_word(w))).collect::<Vec<_>>()})
                })
                .collect(),
            "/v1/embed/sentence" => texts.iter().map(|t| json!({"vectors": [sentence(t)]})).collect(),
            _ => return (404, "{\"error\":\"not found\"}".into()),
        };
        (
            200,
            json!({"model": body["model"], "dim": DIM, "items": items}).to_string(),
        )
    })
}

fn pairs(n: usize) -> Vec<TextPair> {
    let words = [
        "drusen", "macula", "hole", "edema", "optic", "disc", "cup", "retina", "vein", "laser",
    ];
    (0..n)
        .map(|i| TextPair {
            id: format!("p{i}"),
            model_id: None,
            candidate: (0..3)
                .map(|k| words[(i + k) % words.len()])
                .collect::<Vec<_>>()
                .join(" "),
            reference: (0..4)
                .map(|k| words[(i * 3 + k) % words.len()])
                .collect::<Vec<_>>()
                .join(" "),
        })
        .collect()
}

/// The precomputed file the embedding service's batch mode would write.
fn precomputed_for(pairs: &[TextPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        for (side, text) in [("candidate", &p.candidate), ("reference", &p.reference)] {
            let toks: Vec<String> = text.split_whitespace().map(String::from).collect();
            let rows = [
                PrecomputedRecord {
                    id: format!("{}/{side}", p.id),
                    kind: EmbeddingKind::Tokens,
                    model: "mock".into(),
                    dim: DIM,
                    vectors: toks.iter().map(|w| embed_word(w)).collect(),
                    tokens: Some(toks),
                },
                PrecomputedRecord {
                    id: format!("{}/{side}", p.id),
                    kind: EmbeddingKind::Sentence,
                    model: "mock".into(),
                    dim: DIM,
                    tokens: None,
                    vectors: vec![sentence(text)],
                },
            ];
            for r in rows {
                out.push_str(&serde_json::to_string(&r).unwrap());
                out.push('\n');
            }
        }
    }
    out
}

#[test]
fn http_request_shape() {
    let server = service();
    let provider = HttpProvider::new(format!("{}/", server.base_url), "mock").with_token(Some("sekret".into()));
    let scores = score_corpus(&pairs(1), &provider, &ScoreConfig::default());
    assert!(scores.failures.is_empty(), "{:?}", scores.failures);
    let reqs = server.captured();
    let paths: Vec<&str> = reqs.iter().map(|r| r.path.as_str()).collect();
    assert_eq!(paths, ["/v1/embed/tokens", "/v1/embed/sentence"]);
    for r in &reqs {
        assert_eq!(r.method, "POST");
        assert_eq!(r.header("authorization"), Some("Bearer sekret"));
        let body: Value = serde_json::from_str(&r.body).unwrap();
        assert_eq!(body["model"], "mock");
        assert_eq!(body["normalize"], true);
        assert_eq!(body["texts"], json!([pairs(1)[0].candidate, pairs(1)[0].reference]));
    }
    let body: Value = serde_json::from_str(&reqs[0].body).unwrap();
    assert_eq!(body["kind"], "tokens");
    assert_eq!(scores.scored[0].scores.embedding_model, "mock");
}

#[test]
fn http_and_precomputed_agree() {
    let server = service();
    let ps = pairs(64);
    let http = HttpProvider::new(&server.base_url, "mock").with_max_in_flight(3);
    let pre = PrecomputedProvider::from_jsonl(&precomputed_for(&ps)).unwrap();
    assert_eq!(pre.model_id(), "mock");
    let a = score_corpus(&ps, &http, &ScoreConfig::default());
    let b = score_corpus(&ps, &pre, &ScoreConfig::default());
    assert!(a.failures.is_empty() && b.failures.is_empty());
    // Order preserved under bounded concurrency.
    let ids: Vec<&str> = a.scored.iter().map(|s| s.id.as_str()).collect();
    let want: Vec<String> = ps.iter().map(|p| p.id.clone()).collect();
    assert_eq!(ids, want);
    for (x, y) in a.scored.iter().zip(&b.scored) {
        for ((k, u), (_, v)) in x.scores.values().iter().zip(y.scores.values().iter()) {
            assert!((u - v).abs() < 1e-12, "{k}: {u} vs {v}");
        }
    }
}

#[test]
fn service_errors_are_reported_per_pair() {
    let failing = MockServer::start(|_| (500, "{\"error\":\"model not loaded\"}".into()));
    let out = score_corpus(
        &pairs(3),
        &HttpProvider::new(&failing.base_url, "m"),
        &ScoreConfig::default(),
    );
    assert!(out.scored.is_empty());
    assert!(out
        .failures
        .iter()
        .all(|f| f.kind == FailureKind::Service && f.error.contains("500")));

    let out = score_corpus(&pairs(2), &HttpProvider::new(dead_url(), "m"), &ScoreConfig::default());
    assert!(out.failures.iter().all(|f| f.kind == FailureKind::Service));

    let short = MockServer::start(|_| (200, json!({"model": "m", "dim": 2, "items": []}).to_string()));
    let out = score_corpus(
        &pairs(1),
        &HttpProvider::new(&short.base_url, "m"),
        &ScoreConfig::default(),
    );
    assert_eq!(out.failures[0].kind, FailureKind::Embedding);
}

#[test]
fn missing_precomputed_entry_fails_only_that_pair() {
    let ps = pairs(4);
    let file: String = precomputed_for(&ps)
        .lines()
        .filter(|l| !l.contains("\"p2/reference\""))
        .map(|l| format!("{l}\n"))
        .collect();
    let pre = PrecomputedProvider::from_jsonl(&file).unwrap();
    let out = score_corpus(&ps, &pre, &ScoreConfig::default());
    assert_eq!(out.scored.len(), 3);
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].id, "p2");
    assert_eq!(out.failures[0].kind, FailureKind::Embedding);
}

#[test]
fn one_hot_needs_no_service() {
    let out = score_corpus(&pairs(10), &OneHotProvider::default(), &ScoreConfig::default());
    assert_eq!(out.scored.len(), 10);
    let p = &pairs(1)[0];
    let s = &out.scored[0].scores;
    // Candidate "drusen macula hole", reference "drusen macula hole edema".
    assert_eq!(
        (p.candidate.as_str(), p.reference.as_str()),
        ("drusen macula hole", "drusen macula hole edema")
    );
    assert_eq!(s.bertscore.precision, 1.0);
    assert_eq!(s.bertscore.recall, 0.75);
}
