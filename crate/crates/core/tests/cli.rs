use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointillist"))
        .args(args)
        .current_dir(dir)
        .env_remove("POINTILLIST_STORE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixture() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/developer_conference.tsv").to_owned()
}

#[test]
fn print_config_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["--print-config"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    for line in [
        "sim_threshold = 0.97",
        "flatness_threshold = 0.98",
        "branch_width = 5",
        "time_budget = 60s",
        "trend_threshold = 100",
    ] {
        assert!(out.lines().any(|l| l == line), "missing `{line}` in:\n{out}");
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["connect", "--store", "x.tsv", "--from", "2011-10-26", "--days", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["sim", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn operational_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(
        &["validate-root", "--store", "missing.tsv", "--gram", "发者大", "--from", "2011-10-26", "--days", "14"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
}

#[test]
fn validate_and_sim_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture();
    let o =
        bin(&["validate-root", "--store", &f, "--gram", "发者大", "--from", "2011-10-26", "--days", "14"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("发者大\tOK\t"));

    let o = bin(
        &[
            "sim",
            "--store",
            &f,
            "--gram-a",
            "发者大",
            "--gram-b",
            "者大会",
            "--kind",
            "ft",
            "--from",
            "2011-10-26",
            "--days",
            "14",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!(v > 0.99 && v <= 1.0);
    assert_eq!(stdout(&o).trim().split('.').nth(1).unwrap().len(), 6);
}

#[test]
fn store_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pointillist"))
        .args(["connect", "--root", "发者大", "--from", "2011-10-26", "--days", "14", "--kind", "ft"])
        .env("POINTILLIST_STORE", fixture())
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let (score, phrase) = out.lines().next().unwrap().split_once('\t').unwrap();
    assert_eq!(phrase, "发者大会");
    assert!(score.parse::<f64>().unwrap() > 0.99);
}

#[test]
fn ingest_count_and_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("posts.tsv"), "1\t1319587200\t谷歌开发者大会\n2\t1319590800\t开发者大会，好\nbroken line\n")
        .unwrap();
    let o = bin(&["ingest", "--in", "posts.tsv", "--format", "tsv", "--out", "store.tsv"], p);
    assert!(o.status.success());
    assert!(stdout(&o).contains("rejected\t1"));
    let o = bin(&["ingest", "--in", "posts.tsv", "--format", "tsv", "--out", "store.tsv", "--strict"], p);
    assert_eq!(o.status.code(), Some(1));

    let o = bin(&["count", "--in", "posts.tsv", "--format", "tsv", "--out", "daily.tsv"], p);
    assert!(o.status.success());
    let daily = std::fs::read_to_string(p.join("daily.tsv")).unwrap();
    assert!(daily.lines().any(|l| l == "开发者\t2011-10-26\t2"));

    std::fs::write(p.join("runs.tsv"), "发者大\t发者大会\t166\n谷歌开\t谷歌开发\t68\n萌物鉴\tINVALID_ROOT\t1\n")
        .unwrap();
    std::fs::write(p.join("lexicon.txt"), "发者大会\n").unwrap();
    std::fs::write(p.join("judg.tsv"), "谷歌开发\t1\n").unwrap();
    let o = bin(
        &["eval", "--results", "runs.tsv", "--lexicon", "lexicon.txt", "--judgments", "judg.tsv", "--output", "jsonl"],
        p,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(first["lcp"], 0.5);
    assert_eq!(first["up"], 1.0);
    assert_eq!(first["invalid_roots"], 1);
}

#[test]
fn synth_manifest_regenerates_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args =
        ["synth", "--seed", "3", "--random", "4", "--bg-grams", "300", "--bg-words-per-day", "50", "--days", "5"];
    let mut a = args.to_vec();
    a.extend(["--out", "a.jsonl"]);
    assert!(bin(&a, p).status.success());
    let mut b = args.to_vec();
    b.extend(["--out", "b.jsonl"]);
    assert!(bin(&b, p).status.success());
    assert_eq!(std::fs::read(p.join("a.jsonl")).unwrap(), std::fs::read(p.join("b.jsonl")).unwrap());

    let manifest: pointillist::synth::Manifest =
        serde_json::from_slice(&std::fs::read(p.join("a.jsonl.manifest.json")).unwrap()).unwrap();
    let posts = pointillist::synth::generate_from_manifest(&manifest).unwrap();
    let mut buf = Vec::new();
    pointillist::synth::write_posts(&posts, &mut buf).unwrap();
    assert_eq!(buf, std::fs::read(p.join("a.jsonl")).unwrap());
}
