use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn volmo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volmo"))
        .args(args)
        .env_remove("VOLMO_LLM_URL")
        .env_remove("VOLMO_LLM_KEY")
        .env_remove("VOLMO_EMBED_URL")
        .output()
        .expect("run volmo")
}

fn ok(args: &[&str]) -> Output {
    let out = volmo(args);
    assert!(
        out.status.success(),
        "volmo {args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    volmo(args).status.code().expect("exit code")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Path as an argument string; leaked so temporaries can sit in arg arrays.
fn s(p: &Path) -> &'static str {
    Box::leak(p.to_str().unwrap().to_owned().into_boxed_str())
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn read_jsonl(p: &Path) -> Vec<Value> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Every output listed in the manifest exists and matches its digest.
fn check_manifest(dir: &Path, command: &str) -> Value {
    let m = read_json(&dir.join("run_manifest.json"));
    assert_eq!(m["command"], command);
    assert!(m["started_at"].is_string() && m["finished_at"].is_string());
    assert!(m["tool_version"].is_string());
    for o in m["outputs"].as_array().unwrap() {
        let bytes = fs::read(dir.join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), o["sha256"].as_str().unwrap());
    }
    for i in m["inputs"].as_array().unwrap() {
        let bytes = fs::read(i["path"].as_str().unwrap()).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), i["sha256"].as_str().unwrap());
    }
    m
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["emit-train-config"]), 1, "missing --out-dir");
    assert_eq!(code(&["emit-train-config", "--out-dir", "x", "--stage", "9"]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn emit_train_config_writes_stage_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    ok(&["emit-train-config", "--out-dir", s(&out)]);
    for stage in 1..=3 {
        let doc = read_json(&out.join(format!("train.stage{stage}.json")));
        assert_eq!(doc["stage"], stage);
        assert_eq!(doc["learning_rate"], 4e-5);
    }
    let m = check_manifest(&out, "emit-train-config");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);

    // Round trip through --validate, then a mutated copy fails with exit 2.
    let v = tmp.path().join("v");
    ok(&[
        "emit-train-config",
        "--out-dir",
        s(&v),
        "--validate",
        s(&out.join("train.stage2.json")),
    ]);
    assert_eq!(read_json(&v.join("train_config_verdict.json"))["ok"], true);
    let bad = tmp.path().join("bad.json");
    fs::write(
        &bad,
        fs::read_to_string(out.join("train.stage2.json"))
            .unwrap()
            .replace("\"bfloat16\"", "\"float16\""),
    )
    .unwrap();
    assert_eq!(
        code(&["emit-train-config", "--out-dir", s(&v), "--validate", s(&bad)]),
        2
    );
    let verdict = read_json(&v.join("train_config_verdict.json"));
    assert_eq!(verdict["diffs"][0]["field"], "precision");
    assert!(v.join("error.json").exists());
}

#[test]
fn extract_filters_journals_and_counts_figures() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("extract");
    ok(&["extract", "--input", s(&fixture("")), "--out-dir", s(&out)]);
    let articles = read_jsonl(&out.join("articles.jsonl"));
    assert_eq!(articles.len(), 1);
    assert_eq!(articles[0]["pmcid"], "PMC7000001");
    assert_eq!(articles[0]["article_type"], "case_report");
    let figures = read_jsonl(&out.join("figures.jsonl"));
    assert_eq!(figures.len(), 2);
    assert_eq!(
        figures[0]["raw_caption"],
        "Fundus photograph showing dense vitreal opacities (Fig. 1A) [3]."
    );
    let report = read_json(&out.join("extraction_report.json"));
    assert_eq!(report["skipped_figures"], 1);
    assert_eq!(report["filtered_out"], 1);
    check_manifest(&out, "extract");

    let all = tmp.path().join("all");
    ok(&[
        "extract",
        "--input",
        s(&fixture("")),
        "--out-dir",
        s(&all),
        "--all-journals",
    ]);
    assert_eq!(read_jsonl(&all.join("articles.jsonl")).len(), 2);

    // Offline revision of the extracted figures.
    let rev = tmp.path().join("rev");
    ok(&[
        "revise",
        "--input",
        s(&out.join("figures.jsonl")),
        "--out-dir",
        s(&rev),
        "--offline",
    ]);
    let revised = read_jsonl(&rev.join("figures.revised.jsonl"));
    assert_eq!(
        revised[0]["revised_caption"],
        "Fundus photograph showing dense vitreal opacities ."
    );
    assert_eq!(revised[0]["provenance"], "offline_cleaned");
    assert_eq!(revised[0]["weak_supervision"], true);
    check_manifest(&rev, "revise");
}

#[test]
fn revise_provider_down_without_fallback_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let figs = tmp.path().join("figures.jsonl");
    fs::write(
        &figs,
        r#"{"article":"PMC1","figure_id":"f1","graphic_uri":"a.jpg","raw_caption":"Drusen.","issues":[]}"#.to_string()
            + "\n",
    )
    .unwrap();
    let dead = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}/v1/chat/completions", l.local_addr().unwrap())
    };
    let out = tmp.path().join("out");
    let args = [
        "revise",
        "--input",
        s(&figs),
        "--out-dir",
        s(&out),
        "--provider",
        &dead,
        "--no-fallback",
        "--max-attempts",
        "2",
        "--backoff-secs",
        "0",
    ];
    let res = volmo(&args);
    assert_eq!(res.status.code(), Some(3));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&res.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(err["kind"], "external_service");
    assert!(!out.join("figures.revised.jsonl").exists());

    // Same outage with fallback enabled succeeds offline.
    ok(&[
        "revise",
        "--input",
        s(&figs),
        "--out-dir",
        s(&out),
        "--provider",
        &dead,
        "--max-attempts",
        "1",
    ]);
    assert_eq!(
        read_jsonl(&out.join("figures.revised.jsonl"))[0]["provenance"],
        "offline_cleaned"
    );
    // No endpoint at all and not offline is a usage error.
    assert_eq!(code(&["revise", "--input", s(&figs), "--out-dir", s(&out)]), 1);
}

#[test]
fn malformed_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("pairs.jsonl");
    fs::write(&bad, "{\"id\": \"a\", \"candidate\": \"x\"\n").unwrap();
    let out = tmp.path().join("o");
    assert_eq!(code(&["eval-text", "--input", s(&bad), "--out-dir", s(&out)]), 2);
    assert_eq!(
        code(&[
            "dialogues",
            "--input",
            s(&tmp.path().join("missing.jsonl")),
            "--out-dir",
            s(&out)
        ]),
        2
    );
}

fn write_pairs(path: &Path) {
    let refs = [
        "the macula shows soft drusen",
        "a full thickness macular hole is present",
        "optic disc cupping with rim thinning",
        "scattered retinal hemorrhages in all quadrants",
        "cystoid macular edema on oct",
        "peripapillary atrophy in a myopic fundus",
        "a choroidal nevus near the arcade",
        "branch retinal vein occlusion with hemorrhage",
        "laser scars in the peripheral retina",
        "hard exudates near the fovea",
    ];
    let mut lines = String::new();
    for (i, r) in refs.iter().enumerate() {
        let good = r.replace("the ", "").replace(" a ", " ");
        let bad: String = r.split(' ').rev().take(2).collect::<Vec<_>>().join(" ");
        for (model, cand) in [("volmo", good.as_str()), ("baseline", bad.as_str())] {
            lines.push_str(
                &serde_json::json!({"id": format!("case{i}"), "model_id": model, "candidate": cand, "reference": r})
                    .to_string(),
            );
            lines.push('\n');
        }
    }
    fs::write(path, lines).unwrap();
}

#[test]
fn eval_text_then_compare_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let pairs = tmp.path().join("pairs.jsonl");
    write_pairs(&pairs);
    let ev = tmp.path().join("eval");
    ok(&["eval-text", "--input", s(&pairs), "--out-dir", s(&ev)]);
    let scores = read_json(&ev.join("text_scores.json"));
    assert_eq!(scores["scored"], 20);
    assert!(
        scores["means"]["volmo"]["bleu_1"].as_f64().unwrap() > scores["means"]["baseline"]["bleu_1"].as_f64().unwrap()
    );
    check_manifest(&ev, "eval-text");

    let mut outputs = Vec::new();
    for run in ["c1", "c2"] {
        let out = tmp.path().join(run);
        let mut args = vec!["compare", "--input", s(&ev.join("pair_scores.jsonl"))];
        args.extend([
            "--model",
            "volmo",
            "--baseline",
            "baseline",
            "--seed",
            "7",
            "--repeats",
            "50",
        ]);
        args.extend(["--out-dir", s(&out)]);
        if run == "c2" {
            args.push("--sequential");
        }
        ok(&args);
        outputs.push(fs::read(out.join("comparison.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "comparison.json differs between runs");
    let cmp: Value = serde_json::from_slice(&outputs[0]).unwrap();
    assert_eq!(cmp["generator"], "volmo-ctr-v1");
    assert_eq!(cmp["bootstrap"]["sample_size"], 30);
    let first = &cmp["comparisons"][0];
    assert_eq!(first["model_summary"]["replicate_values"].as_array().unwrap().len(), 50);
    let formatted = first["formatted"].as_str().unwrap();
    assert!(formatted.contains(" ± ") && formatted.contains("(p "), "{formatted}");

    // Different seed, different replicates.
    let out = tmp.path().join("c3");
    let args = [
        "compare",
        "--input",
        s(&ev.join("pair_scores.jsonl")),
        "--model",
        "volmo",
        "--baseline",
        "baseline",
        "--seed",
        "8",
        "--repeats",
        "50",
        "--out-dir",
        s(&out),
    ];
    ok(&args);
    assert_ne!(fs::read(out.join("comparison.json")).unwrap(), outputs[0]);

    // Unknown model is an input error.
    let args = [
        "compare",
        "--input",
        s(&ev.join("pair_scores.jsonl")),
        "--model",
        "nope",
        "--baseline",
        "baseline",
        "--out-dir",
        s(&out),
    ];
    assert_eq!(code(&args), 2);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let pairs = tmp.path().join("pairs.jsonl");
    write_pairs(&pairs);
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        "policy = \"whitespace\"\nbeta = 2.0\nseed = 3\nrepeats = 20\nsample_size = 5\n",
    )
    .unwrap();
    let ev = tmp.path().join("eval");
    ok(&[
        "eval-text",
        "--config",
        s(&cfg),
        "--input",
        s(&pairs),
        "--out-dir",
        s(&ev),
        "--beta",
        "1.5",
    ]);
    let m = read_json(&ev.join("run_manifest.json"));
    assert_eq!(m["config"]["policy"], "whitespace-v1");
    assert_eq!(m["config"]["beta"], 1.5);

    let out = tmp.path().join("cmp");
    let args = [
        "compare",
        "--config",
        s(&cfg),
        "--input",
        s(&ev.join("pair_scores.jsonl")),
        "--model",
        "volmo",
        "--baseline",
        "baseline",
        "--metric",
        "rouge_l_f",
        "--repeats",
        "25",
        "--out-dir",
        s(&out),
    ];
    ok(&args);
    let cmp = read_json(&out.join("comparison.json"));
    assert_eq!(cmp["bootstrap"]["seed"], 3);
    assert_eq!(cmp["bootstrap"]["repeats"], 25);
    assert_eq!(cmp["bootstrap"]["sample_size"], 5);
    assert_eq!(cmp["comparisons"].as_array().unwrap().len(), 1);

    fs::write(&cfg, "sed = 1\n").unwrap();
    assert_eq!(
        code(&["emit-train-config", "--config", s(&cfg), "--out-dir", s(&out)]),
        1
    );
}

#[test]
fn convert_eval_classify_compare_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // Screening table with two conditions; staging table with one bad row.
    let mut csv = String::from("image,dr,amd\n");
    for i in 0..40 {
        csv.push_str(&format!("img{i}.jpg,{},{}\n", (i % 3 == 0) as u8, (i % 4 == 0) as u8));
    }
    fs::write(dir.join("screen.csv"), csv).unwrap();
    let mut jsonl = String::new();
    for i in 0..30 {
        let stage = if i == 29 { 5 } else { i % 5 };
        jsonl.push_str(&format!(
            "{{\"file\":\"eye{i}.png\",\"level\":{stage},\"split\":\"test\"}}\n"
        ));
    }
    fs::write(dir.join("stage.jsonl"), jsonl).unwrap();
    fs::write(
        dir.join("convert.toml"),
        r#"
[[datasets]]
input = "screen.csv"
dataset_name = "brset"
modality = "CFP"
population = "Brazilian"
license = "credentialed"
label_schema = "binary_condition"
image_column = "image"
conditions = { "diabetic retinopathy" = "dr", "AMD" = "amd" }

[[datasets]]
input = "stage.jsonl"
dataset_name = "eyepacs"
modality = "CFP"
label_schema = "stage_0_4"
image_column = "file"
label_column = "level"
split_column = "split"
"#,
    )
    .unwrap();
    let conv = dir.join("conv");
    ok(&[
        "convert",
        "--config",
        s(&dir.join("convert.toml")),
        "--out-dir",
        s(&conv),
        "--seed",
        "11",
    ]);
    let screening = read_jsonl(&conv.join("instances.screening.jsonl"));
    let staging = read_jsonl(&conv.join("instances.staging.jsonl"));
    let rejects = read_jsonl(&conv.join("rejects.jsonl"));
    assert_eq!(screening.len(), 80);
    assert_eq!(staging.len(), 29);
    assert_eq!(rejects.len(), 1);
    assert_eq!(rejects[0]["reason"], "label_out_of_range");
    let manifest = read_json(&conv.join("manifest.json"));
    assert_eq!(manifest["total_images"], 109);
    assert_eq!(manifest["datasets"]["brset"]["split"]["seed"], 11);
    assert_eq!(manifest["datasets"]["eyepacs"]["split"]["kind"], "source");
    assert!(screening[0]["prompt"]
        .as_str()
        .unwrap()
        .ends_with("Answer in format: TRUE or FALSE."));
    check_manifest(&conv, "convert");

    // Two models: one mostly right, one that always says FALSE / stage 0.
    let mut preds = String::new();
    for (k, inst) in screening.iter().enumerate() {
        let gold = inst["gold"] == "TRUE";
        let good = if k % 7 == 0 { !gold } else { gold };
        let good = if k == 5 {
            "I cannot tell".to_string()
        } else {
            format!("Answer: {}", if good { "TRUE" } else { "FALSE" })
        };
        for (model, out) in [("volmo", good.as_str()), ("baseline", "FALSE")] {
            preds.push_str(
                &serde_json::json!({"instance_id": inst["instance_id"], "model_id": model, "raw_output": out})
                    .to_string(),
            );
            preds.push('\n');
        }
    }
    for inst in &staging {
        let g = inst["gold"].as_u64().unwrap();
        for (model, out) in [("volmo", g.to_string()), ("baseline", "0".to_string())] {
            preds.push_str(
                &serde_json::json!({"instance_id": inst["instance_id"], "model_id": model, "raw_output": out})
                    .to_string(),
            );
            preds.push('\n');
        }
    }
    fs::write(dir.join("predictions.jsonl"), preds).unwrap();
    let ratings = dir.join("ratings.jsonl");
    fs::write(
        &ratings,
        [
            r#"{"sample_id":"s1","model_id":"volmo","rater_id":"r1","conciseness":5,"accuracy":3,"readability":5}"#,
            r#"{"sample_id":"s1","model_id":"volmo","rater_id":"r2","conciseness":4,"accuracy":2,"readability":4}"#,
        ]
        .join("\n"),
    )
    .unwrap();
    let ev = dir.join("ev");
    let args = [
        "eval-classify",
        "--input",
        s(&dir.join("predictions.jsonl")),
        "--instances",
        s(&conv.join("instances.screening.jsonl")),
        s(&conv.join("instances.staging.jsonl")),
        "--ratings",
        s(&ratings),
        "--out-dir",
        s(&ev),
    ];
    ok(&args);
    let scores = read_json(&ev.join("scores.json"));
    let volmo = &scores["models"]["volmo"];
    assert_eq!(volmo["staging"]["DR"]["overall"]["f1"], 1.0);
    assert_eq!(scores["models"]["baseline"]["screening"]["dr"]["scores"]["f1"], 0.0);
    assert!(volmo["macro_f1_positive_class"].as_f64().unwrap() > 0.5);
    assert!(volmo["invalid_rate"].as_f64().unwrap() > 0.0);
    assert_eq!(scores["manual"]["volmo"]["display"]["conciseness"], "4.50");
    check_manifest(&ev, "eval-classify");

    let cmp = dir.join("cmp");
    let args = [
        "compare",
        "--input",
        s(&ev.join("instance_labels.jsonl")),
        "--model",
        "volmo",
        "--baseline",
        "baseline",
        "--seed",
        "7",
        "--out-dir",
        s(&cmp),
    ];
    ok(&args);
    let c = read_json(&cmp.join("comparison.json"));
    let ids: Vec<&str> = c["comparisons"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["metric_id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"screening/dr/f1"));
    assert!(ids.contains(&"staging/DR/f1"));
    let f = c["comparisons"][0]["formatted"].as_str().unwrap();
    assert!(
        f.split(" ± ").next().unwrap().split('.').nth(1).unwrap().len() == 2,
        "percentage scale: {f}"
    );

    // Predictions for an unknown instance are rejected.
    fs::write(
        dir.join("p2.jsonl"),
        r#"{"instance_id":"nope","model_id":"m","raw_output":"TRUE"}"#,
    )
    .unwrap();
    let args = [
        "eval-classify",
        "--input",
        s(&dir.join("p2.jsonl")),
        "--instances",
        s(&conv.join("instances.staging.jsonl")),
        "--out-dir",
        s(&ev),
    ];
    assert_eq!(code(&args), 2);
}

#[test]
fn dialogues_from_jsonl_and_text() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = tmp.path().join("cases.jsonl");
    fs::write(
        &cases,
        serde_json::json!({
            "case_id": "c1",
            "symptoms": [{"description": "Blurred vision", "duration": "2 weeks"}],
            "differential_diagnoses": [{"diagnosis": "Uveitis", "severity": "Moderate"}],
        })
        .to_string()
            + "\n",
    )
    .unwrap();
    let profile = tmp.path().join("c2.txt");
    fs::write(&profile, "[PATIENT CLINICAL PROFILE]\n\n[FAMILY HISTORY]\nNo family history reported\n\n[SYMPTOMS]\n1. Symptom: Floaters\n").unwrap();
    let out = tmp.path().join("d");
    ok(&["dialogues", "--input", s(&cases), s(&profile), "--out-dir", s(&out)]);
    let scripts = read_jsonl(&out.join("dialogues.jsonl"));
    assert_eq!(scripts.len(), 2);
    let c1 = scripts.iter().find(|d| d["case_id"] == "c1").unwrap();
    assert_eq!(c1["turns"].as_array().unwrap().len(), 5);
    assert_eq!(c1["turns"][0]["prompt_only"], false);
    assert_eq!(c1["turns"][1]["prompt_only"], true);
    let c2 = scripts.iter().find(|d| d["case_id"] == "c2").unwrap();
    assert!(c2["turns"][0]["prompt"]
        .as_str()
        .unwrap()
        .contains("1. Symptom: Floaters"));
    check_manifest(&out, "dialogues");

    fs::write(&cases, "{\"case_id\": \"\"}\n").unwrap();
    assert_eq!(code(&["dialogues", "--input", s(&cases), "--out-dir", s(&out)]), 2);
}

#[test]
fn eval_text_embed_service_down_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let pairs = tmp.path().join("pairs.jsonl");
    write_pairs(&pairs);
    let dead = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}", l.local_addr().unwrap())
    };
    let out = tmp.path().join("o");
    let args = [
        "eval-text",
        "--input",
        s(&pairs),
        "--out-dir",
        s(&out),
        "--provider",
        &dead,
    ];
    assert_eq!(code(&args), 3);
    assert_eq!(read_json(&out.join("error.json"))["kind"], "external_service");
    // Missing precomputed file is an input error.
    let args = [
        "eval-text",
        "--input",
        s(&pairs),
        "--out-dir",
        s(&out),
        "--provider",
        "precomputed:/nonexistent.jsonl",
    ];
    assert_eq!(code(&args), 2);
}
