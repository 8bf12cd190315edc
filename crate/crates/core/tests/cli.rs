use std::path::Path;
use std::process::{Command, Output};

fn dpgda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpgda")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2_and_version_exits_0() {
    assert_eq!(dpgda(&["bench", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(dpgda(&["augment"]).status.code(), Some(2));
    let v = dpgda(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn print_config_merges_manifest_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("run.toml");
    std::fs::write(&manifest, "[bench]\nreps = 3\nmethods = \"ros\"\n[bench.pipeline.ga]\npopulation_size = 20\n")
        .unwrap();
    let out = dpgda(&["--manifest", s(&manifest), "--print-config", "bench", "--reps", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let doc: toml::Table = toml::from_str(&text).unwrap();
    let bench = doc["bench"].as_table().unwrap();
    assert_eq!(bench["reps"].as_integer(), Some(4));
    assert_eq!(bench["methods"].as_str(), Some("ros"));
    assert_eq!(bench["pipeline"]["ga"]["population_size"].as_integer(), Some(20));

    std::fs::write(&manifest, "[bench]\nrepz = 3\n").unwrap();
    assert_eq!(dpgda(&["--manifest", s(&manifest), "--print-config", "bench"]).status.code(), Some(2));
}

#[test]
fn augment_pipeline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(dpgda(&["gen-data", "--config", "healthcare", "--seed", "3", "--out", s(&data)]).status.success());
    let train = data.join("healthcare.csv");
    let rules = data.join("healthcare.rules.json");
    for ext in ["rules.json", "meta.json"] {
        assert!(data.join(format!("healthcare.{ext}")).exists());
    }

    let constraints = dir.path().join("constraints.json");
    let dot = dir.path().join("dpg.dot");
    assert!(dpgda(&[
        "extract-constraints",
        "--train",
        s(&train),
        "--seed",
        "1",
        "--out",
        s(&constraints),
        "--dot",
        s(&dot)
    ])
    .status
    .success());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&constraints).unwrap()).unwrap();
    assert!(doc["class_bounds"]["positive"]["Age"]["lower"].is_f64());
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));

    let out = dir.path().join("aug.csv");
    let synth = dir.path().join("synth.csv");
    let traces = dir.path().join("traces");
    let run = dpgda(&[
        "augment",
        "--train",
        s(&train),
        "--minority",
        "positive",
        "--level",
        "0.3",
        "--seed",
        "5",
        "--out",
        s(&out),
        "--synthetic-out",
        s(&synth),
        "--trace-dir",
        s(&traces),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(traces.join("constraints.json").exists());
    assert!(traces.join("trace_0.json").exists() && traces.join("trace_0.csv").exists());

    let report = dir.path().join("audit.json");
    assert!(dpgda(&["audit", "--data", s(&synth), "--rules", s(&rules), "--out", s(&report)]).status.success());
    let audit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(audit["violation_rate"].as_f64(), Some(0.0));
    assert!(audit["n_synth"].as_u64().unwrap() > 0);

    let by_box =
        dpgda(&["audit", "--data", s(&synth), "--rules", s(&traces.join("constraints.json")), "--class", "positive"]);
    assert!(by_box.status.success());
    assert!(String::from_utf8_lossy(&by_box.stdout).contains("\"n_violating_samples\": 0"));

    let heat = dir.path().join("heat.svg");
    let trace0 = traces.join("trace_0.json");
    assert!(dpgda(&["report", "evo-heatmap", "--in", s(&trace0), "--out", s(&heat)]).status.success());
    assert!(heat.with_extension("csv").exists());
    let table = dir.path().join("delta.txt");
    assert!(dpgda(&[
        "report",
        "delta-table",
        "--in",
        s(&trace0),
        "--out",
        s(&table),
        "--features",
        "Age,BMI,Cholesterol,Nuisance"
    ])
    .status
    .success());
    assert!(std::fs::read_to_string(&table).unwrap().contains("Cholesterol"));
}

#[test]
fn augment_below_current_share_is_a_noop() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(dpgda(&["gen-data", "--config", "healthcare", "--seed", "2", "--out", s(&data)]).status.success());
    let train = data.join("healthcare.csv");
    let out = dir.path().join("same.csv");
    let run = dpgda(&["augment", "--train", s(&train), "--level", "0.10", "--out", s(&out)]);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&run.stderr).contains("notice"));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), std::fs::read_to_string(&train).unwrap());
}
