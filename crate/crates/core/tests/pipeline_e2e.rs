use std::fs;
use std::path::Path;
use std::process::Command;

use ontoalign::fixture;
use ontoalign::pipeline::{run_pipeline, PipelineError, RunReport, Stage, ALIGNMENTS_FILE, REPORT_FILE};

const ARTIFACTS: [&str; 6] = [
    "corpus.csv",
    "distances.bin",
    "clusters.json",
    "field_embeddings.bin",
    "term_embeddings.bin",
    "alignments.json",
];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ontoalign"))
}

fn run_cli(args: &[&str]) -> std::process::Output {
    let out = bin().args(args).output().unwrap();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

#[test]
fn pipeline_writes_every_artifact_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture::write_inputs(dir.path()).unwrap();
    let report = run_pipeline(&config).unwrap();
    for name in ARTIFACTS {
        assert!(config.output_dir.join(name).is_file(), "{name}");
        assert!(!config.output_dir.join(format!("{name}.partial")).exists());
    }
    let names: Vec<&str> = report.artifacts.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ARTIFACTS);

    let loaded = RunReport::load(&config.output_dir).unwrap();
    assert_eq!(loaded, report);
    assert_eq!(loaded.config, config);
    assert_eq!(report.counts.fields, 20);
    assert_eq!(report.counts.terms, 50);

    let text = fs::read_to_string(config.output_dir.join(REPORT_FILE)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["config", "counts", "cluster_stats", "converged", "coverage", "artifacts"] {
        assert!(v.get(key).is_some(), "report.json lacks {key}");
    }
    let alignments: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(config.output_dir.join(ALIGNMENTS_FILE)).unwrap()).unwrap();
    assert_eq!(alignments["params"]["threshold"], 0.85);
    assert_eq!(alignments["params"]["num_terms"], 50);
}

#[test]
fn failed_stage_leaves_only_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture::write_inputs(dir.path()).unwrap();
    run_pipeline(&config).unwrap();
    fs::write(&config.terms, "not a term table\n").unwrap();

    let err = run_pipeline(&config).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Embed));
    assert_eq!(err.exit_code(), 3);
    let out = &config.output_dir;
    for name in ["corpus.csv", "distances.bin", "clusters.json"] {
        assert!(out.join(format!("{name}.partial")).is_file(), "{name}.partial");
        assert!(!out.join(name).exists(), "{name} from the earlier run survived");
    }
    assert!(!out.join(REPORT_FILE).exists());
    assert!(!out.join(ALIGNMENTS_FILE).exists());
}

#[test]
fn bad_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = fixture::write_inputs(dir.path()).unwrap();
    config.top_k = 0;
    let err = run_pipeline(&config).unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)));
    assert_eq!(err.exit_code(), 2);
}

fn write_config(dir: &Path, toml: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, toml).unwrap();
    path
}

#[test]
fn cli_run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture::write_inputs(dir.path()).unwrap();

    let ok = write_config(dir.path(), &config.to_toml());
    let out = run_cli(&["run", "--config", ok.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(config.output_dir.join(REPORT_FILE).is_file());

    let bad = write_config(dir.path(), "corpus = \"fields.txt\"\nunknown_key = 1\n");
    let out = run_cli(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let mut missing = config.clone();
    missing.vectors = dir.path().join("nope.txt");
    let path = write_config(dir.path(), &missing.to_toml());
    let out = run_cli(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.txt"));
}

#[test]
fn relative_config_paths_resolve_against_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fixture::write_inputs(dir.path()).unwrap();
    let toml = r#"
corpus = "fields.txt"
vectors = "vectors.txt"
idf = "idf.tsv"
terms = "terms.tsv"
output_dir = "rel_out"
metric = "jaro_winkler"

[clustering]
algorithm = "hdbscan"
params = { min_cluster_size = 2, min_samples = 1 }
"#;
    let path = write_config(dir.path(), toml);
    let out = bin().current_dir("/").args(["run", "--config", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("rel_out").join(REPORT_FILE).is_file());
}

/// The individual subcommands chained by hand reproduce the pipeline's
/// artifacts byte for byte.
#[test]
fn cli_stages_match_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture::write_inputs(dir.path()).unwrap();
    run_pipeline(&config).unwrap();

    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["normalize".into(), "--input".into(), p("fields.txt"), "--out".into(), p("corpus.csv")],
        vec![
            "distances".into(),
            "--metric".into(),
            "jaro_winkler".into(),
            "--corpus".into(),
            p("corpus.csv"),
            "--out".into(),
            p("distances.bin"),
        ],
        vec![
            "cluster".into(),
            "--algorithm".into(),
            "dbscan".into(),
            "--eps".into(),
            "0.2".into(),
            "--min-pts".into(),
            "2".into(),
            "--matrix".into(),
            p("distances.bin"),
            "--out".into(),
            p("clusters.json"),
        ],
        vec![
            "embed".into(),
            "--vectors".into(),
            p("vectors.txt"),
            "--idf".into(),
            p("idf.tsv"),
            "--labels".into(),
            p("corpus.csv"),
            "--out".into(),
            p("field_embeddings.bin"),
        ],
        vec![
            "embed".into(),
            "--vectors".into(),
            p("vectors.txt"),
            "--idf".into(),
            p("idf.tsv"),
            "--labels".into(),
            p("terms.tsv"),
            "--out".into(),
            p("term_embeddings.bin"),
        ],
        vec![
            "align".into(),
            "--corpus".into(),
            p("corpus.csv"),
            "--clusters".into(),
            p("clusters.json"),
            "--field-embeddings".into(),
            p("field_embeddings.bin"),
            "--term-embeddings".into(),
            p("term_embeddings.bin"),
            "--terms".into(),
            p("terms.tsv"),
            "--out".into(),
            p("alignments.json"),
        ],
    ];
    for step in &steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        let out = run_cli(&args);
        assert!(out.status.success(), "{} failed", step[0]);
    }
    for name in ARTIFACTS {
        let by_hand = fs::read(dir.path().join(name)).unwrap();
        let piped = fs::read(config.output_dir.join(name)).unwrap();
        assert!(by_hand == piped, "{name} differs between CLI stages and pipeline");
    }
}

#[test]
fn cli_ingest_writes_a_term_table() {
    let dir = tempfile::tempdir().unwrap();
    let nt = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/labels.nt");
    let out_path = dir.path().join("terms.tsv");
    let out = run_cli(&[
        "ingest",
        "--ntriples",
        nt.to_str().unwrap(),
        "--ontology-id",
        "TEST",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let index = ontoalign::ontology::TermIndex::load(&out_path).unwrap();
    assert_eq!(index.len(), 17);

    let out = run_cli(&[
        "ingest",
        "--ntriples",
        nt.to_str().unwrap(),
        "--ontology-id",
        "TEST",
        "--strict",
        "--out",
        dir.path().join("strict.tsv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
