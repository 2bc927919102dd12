use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;
use valuepref::dataio;

const SURVEY_COUNTS: [[u64; 6]; 5] = [
    [90, 85, 102, 85, 89, 58],
    [50, 29, 11, 269, 27, 47],
    [349, 40, 42, 13, 11, 3],
    [80, 131, 35, 17, 13, 31],
    [35, 305, 7, 8, 20, 16],
];

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_valuepref"))
        .args(args)
        .current_dir(cwd)
        .env_remove(dataio::CONFIG_ENV)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn values_and_options() -> (serde_json::Value, serde_json::Value) {
    (
        json!((1..=5).map(|i| json!({"id": format!("v{i}")})).collect::<Vec<_>>()),
        json!((1..=6).map(|i| json!({"id": format!("o{i}")})).collect::<Vec<_>>()),
    )
}

fn write_doc(dir: &Path, name: &str, participants: Vec<serde_json::Value>) -> PathBuf {
    let (values, options) = values_and_options();
    let doc = json!({
        "schema": "valuepref-dataset/1",
        "budget": 100,
        "values": values,
        "options": options,
        "participants": participants,
    });
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path
}

/// For each option `o` and each `k` up to the largest count in its column,
/// one participant puts all points on `o` and writes one motivation labeled
/// with every value whose count reaches `k`; the annotation counts are then
/// exactly the table.
fn survey_fixture(dir: &Path) -> PathBuf {
    let mut participants = Vec::new();
    for o in 0..6 {
        let max = (0..5).map(|v| SURVEY_COUNTS[v][o]).max().unwrap();
        for k in 1..=max {
            let labels: Vec<String> = (0..5)
                .filter(|&v| SURVEY_COUNTS[v][o] >= k)
                .map(|v| format!("v{}", v + 1))
                .collect();
            let mut choices = vec![0; 6];
            choices[o] = 100;
            participants.push(json!({
                "id": format!("o{}-{k}", o + 1),
                "choices": choices,
                "motivations": [{"option_id": format!("o{}", o + 1), "text": "", "labels": labels}],
            }));
        }
    }
    write_doc(dir, "survey.json", participants)
}

#[test]
fn build_vo_reproduces_survey_vo() {
    let dir = tempfile::tempdir().unwrap();
    let path = survey_fixture(dir.path());
    let ds = dataio::load_dataset(&path).unwrap();
    let counts = dataio::annotation_counts(&ds);
    assert_eq!(counts, SURVEY_COUNTS.iter().map(|r| r.to_vec()).collect::<Vec<_>>());

    let out = run(&["build-vo", "--dataset", path.to_str().unwrap(), "--threshold", "20"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "# threshold: 20\n\
         value,o1,o2,o3,o4,o5,o6\n\
         v1,1,1,1,1,1,1\n\
         v2,1,1,0,1,1,1\n\
         v3,1,1,1,0,0,0\n\
         v4,1,1,1,0,0,1\n\
         v5,1,1,0,0,1,0\n"
    );
}

fn no_motivation_dataset(dir: &Path) -> PathBuf {
    let participants = (0..4)
        .map(|i| {
            let mut choices = vec![10, 20, 30, 20, 0, 20];
            choices.rotate_left(i);
            json!({"id": format!("p{i}"), "choices": choices})
        })
        .collect();
    write_doc(dir, "plain.json", participants)
}

fn vo_file(dir: &Path) -> PathBuf {
    let path = dir.join("vo.csv");
    std::fs::write(
        &path,
        "value,o1,o2,o3,o4,o5,o6\nv1,1,1,1,1,1,1\nv2,1,1,0,1,1,1\nv3,1,1,1,0,0,0\nv4,1,1,1,0,0,1\nv5,1,1,0,0,1,0\n",
    )
    .unwrap();
    path
}

fn body_without_method(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let c: Vec<&str> = l.splitn(4, ',').collect();
            format!("{},{},{}", c[0], c[2], c[3])
        })
        .collect()
}

#[test]
fn comb_without_motivations_matches_c() {
    let dir = tempfile::tempdir().unwrap();
    let ds = no_motivation_dataset(dir.path());
    let vo = vo_file(dir.path());
    let args = |m: &'static str| {
        vec!["estimate", "--dataset", ds.to_str().unwrap(), "--vo", vo.to_str().unwrap(), "--method", m]
            .into_iter()
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    let run_m = |m| {
        let a = args(m);
        let out = run(&a.iter().map(String::as_str).collect::<Vec<_>>(), dir.path());
        assert!(out.status.success(), "{}", stderr(&out));
        stdout(&out)
    };
    let (c, comb) = (run_m("C"), run_m("comb"));
    assert_eq!(body_without_method(&c), body_without_method(&comb));
    assert!(c.contains("p0,C,v1 > v4 > v2 > v3 > v5,100 70 60 80 30"), "{c}");
}

#[test]
fn estimate_is_byte_identical_across_runs_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("s.json");
    let out = run(&["synth", "--participants", "50", "--seed", "4", "--out", ds.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("s.truth.json").exists());
    let loaded = dataio::load_dataset(&ds).unwrap();
    assert_eq!(loaded.ground_truth.as_ref().map(Vec::len), Some(50));

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = run(
            &["estimate", "--dataset", ds.to_str().unwrap(), "--mc-semantics", "pseudocode", "--order", "MC>MO>TB", "--out", p.to_str().unwrap()],
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.contains("pseudocode") && text.contains("MC>MO>TB"), "config snapshot missing");
    let (_, rows) = dataio::parse_rankings(&text, &loaded.values).unwrap();
    assert_eq!(rows.len(), 50);
}

#[test]
fn al_run_with_perfect_oracle_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("s.json");
    assert!(run(&["synth", "--participants", "120", "--out", ds.to_str().unwrap()], dir.path()).status.success());
    let curves = dir.path().join("c.csv");
    let out = run(
        &[
            "al-run", "--dataset", ds.to_str().unwrap(), "--classifier", "oracle", "--noise", "0", "--folds", "3",
            "--iterations", "2", "--seed", "9", "--out", curves.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let (meta, rows) = dataio::parse_curves(&std::fs::read_to_string(&curves).unwrap()).unwrap();
    assert_eq!(rows.len(), 3 * (3 * 3 + 2 * 3));
    for r in rows.iter().filter(|r| r.fold != dataio::FoldLabel::Std) {
        assert_eq!(r.micro_f1, 1.0);
        assert_eq!(r.mean_kemeny, 0.0);
    }
    let meta = dataio::meta_map(&meta);
    assert!(meta["config"].contains("\"seed\":9"));
    assert!(meta.contains_key("tie_break"));
}

#[test]
fn config_file_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "folds = 2\niterations = 1\n\n[classifier]\nkind = \"oracle\"\n").unwrap();
    let curves = dir.path().join("c.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_valuepref"))
        .args(["al-run", "--participants", "40", "--strategy", "random", "--out", curves.to_str().unwrap()])
        .env(dataio::CONFIG_ENV, &cfg)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let (meta, rows) = dataio::parse_curves(&std::fs::read_to_string(&curves).unwrap()).unwrap();
    assert_eq!(rows.iter().filter(|r| matches!(r.fold, dataio::FoldLabel::Fold(_))).count(), 2 * 2);
    assert!(dataio::meta_map(&meta)["config"].contains("\"folds\":2"));

    std::fs::write(&cfg, "folds = 2\nbogus = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_valuepref"))
        .args(["al-run", "--participants", "40"])
        .env(dataio::CONFIG_ENV, &cfg)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn compare_and_classify_eval_tables() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("s.json");
    assert!(run(&["synth", "--participants", "100", "--out", ds.to_str().unwrap()], dir.path()).status.success());
    let out = run(&["compare", "--dataset", ds.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("method,participants_changed,total_position_changes,mean_position_changes"));
    assert!(text.contains("value,C,M,TB,MC,MO,comb"));
    assert_eq!(text.lines().filter(|l| l.starts_with('v')).count(), 5 + 1);

    let out = run(
        &["classify-eval", "--dataset", ds.to_str().unwrap(), "--classifier", "oracle", "--folds", "4"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("mean,1,1"), "{}", stdout(&out));
}

#[test]
fn validation_errors_exit_1_runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_doc(
        dir.path(),
        "bad.json",
        vec![
            json!({"id": "ok", "choices": [100, 0, 0, 0, 0, 0]}),
            json!({"id": "short", "choices": [99, 0, 0, 0, 0, 0]}),
        ],
    );
    let out = run(&["build-vo", "--dataset", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("budget violation") && stderr(&out).contains("short"), "{}", stderr(&out));

    let out = run(&["build-vo", "--dataset", bad.to_str().unwrap(), "--lenient"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("dropping invalid participant"));

    let zero = write_doc(
        dir.path(),
        "zero.json",
        vec![json!({"id": "z", "choices": [100, 0, 0, 0, 0, 0],
                    "motivations": [{"option_id": "o2", "text": "x", "labels": ["v1"]}]})],
    );
    let out = run(&["estimate", "--dataset", zero.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("zero-point option"));

    let ok = no_motivation_dataset(dir.path());
    let out = run(&["estimate", "--dataset", ok.to_str().unwrap(), "--order", "TB>MO"], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let out = run(&["estimate", "--dataset", ok.to_str().unwrap(), "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["estimate", "--dataset", ok.to_str().unwrap(), "--method", "XYZ"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["build-vo", "--dataset", "/nonexistent/data.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/data.json"));

    let out = run(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}
