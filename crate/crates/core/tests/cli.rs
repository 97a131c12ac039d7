use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ce_rank::scenario::Report;

const BIN: &str = env!("CARGO_BIN_EXE_ce-rank");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const RANKING: &str = r#"
format_version = 1
kind = "ranking"

[[entities]]
id = "A"
utility = 1.0
click_prob = 0.4
abandon_prob = 0.1

[[entities]]
id = "B"
utility = 2.0
click_prob = 0.3
abandon_prob = 0.2

[[entities]]
id = "C"
utility = 0.7
click_prob = 0.9
abandon_prob = 0.0
"#;

const PAIR: &str = r#"
format_version = 1
kind = "equilibrium"

[[advertisers]]
id = "a1"
value = 10.0
ctr = 0.5
abandon_prob = 0.5

[[advertisers]]
id = "a2"
value = 4.0
ctr = 0.3
abandon_prob = 0.3
"#;

const NO_ABANDON: &str = r#"
format_version = 1
kind = "auction"
bids = [3.0, 5.0, 1.0]

[[advertisers]]
id = "x"
value = 4.0
ctr = 0.2
abandon_prob = 0.0

[[advertisers]]
id = "y"
value = 6.0
ctr = 0.5
abandon_prob = 0.0

[[advertisers]]
id = "z"
value = 2.0
ctr = 0.4
abandon_prob = 0.0
"#;

const P3: &str = r#"
format_version = 1
kind = "diversity"

[graph]
adjacency = [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
utility = 1.0
click_prob = 0.5
abandon_prob = 0.1
"#;

fn graph(n: usize) -> String {
    let row = format!("[{}]", vec!["0"; n].join(", "));
    format!(
        "format_version = 1\nkind = \"diversity\"\n\n[graph]\nadjacency = [{}]\nutility = 1.0\nclick_prob = 0.5\nabandon_prob = 0.1\n",
        vec![row; n].join(", ")
    )
}

#[test]
fn rank_with_oracle_has_no_gap() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "r.toml", RANKING);
    let out = run(&["rank", "--scenario", s.to_str().unwrap(), "--oracle"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r.rows.len(), 3);
    assert_eq!(r.metrics["oracle_gap"], 0.0);
    assert!(r.verdicts["matches_oracle"]);
    assert_eq!(
        r.rows.iter().map(|x| x.position).collect::<Vec<_>>(),
        vec![1, 2, 3]
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "r.toml", RANKING);
    let s = s.to_str().unwrap();
    for args in [
        vec!["rank", "--scenario", s, "--variant", "abandonment"],
        vec![
            "simulate",
            "--scenario",
            s,
            "--trials",
            "20000",
            "--seed",
            "3",
        ],
        vec!["compare", "--scenario", s, "--format", "tabular"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(
            a.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&a.stderr)
        );
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn worked_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "e.toml", PAIR);
    let out = run(&["equilibrium", "--scenario", s.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let bids: Vec<f64> = r.rows.iter().map(|x| x.score).collect();
    assert_eq!(bids, vec![10.0, 2.4]);
    assert!(r.verdicts["envy_free"]);
    assert_eq!(r.metrics["se_revenue"], r.metrics["vcg_truthful_revenue"]);
    assert_eq!(r.rows[0].price, Some(2.4));
    assert_eq!(r.rows[1].price, Some(0.0));
}

#[test]
fn equilibrium_batch() {
    let out = run(&["equilibrium", "--batch", "50", "--seed", "4"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(report(&out).passed());
}

#[test]
fn without_abandonment_ce_is_overture_and_prp() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "a.toml", NO_ABANDON);
    let s = s.to_str().unwrap();
    let ce = report(&run(&["auction", "--scenario", s, "--mechanism", "ce"]));
    let ov = report(&run(&[
        "auction",
        "--scenario",
        s,
        "--mechanism",
        "overture",
    ]));
    assert_eq!(ce.rows, ov.rows);
    assert!(ce.verdicts["dominates_vcg"]);

    let ranking = NO_ABANDON
        .replace(
            "kind = \"auction\"\nbids = [3.0, 5.0, 1.0]",
            "kind = \"ranking\"",
        )
        .replace("[[advertisers]]", "[[entities]]")
        .replace("value =", "utility =")
        .replace("ctr =", "click_prob =");
    let r = write(dir.path(), "r.toml", &ranking);
    let r = r.to_str().unwrap();
    let ce = report(&run(&["rank", "--scenario", r]));
    let prp = report(&run(&["rank", "--scenario", r, "--variant", "prp"]));
    let ids = |rep: &Report| rep.rows.iter().map(|x| x.id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(&ce), ids(&prp));
    assert_eq!(ids(&ce), vec!["y", "x", "z"]);
}

#[test]
fn single_advertiser_pays_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let one = "format_version = 1\nkind = \"auction\"\nbids = [5.0]\n\n[[advertisers]]\nid = \"solo\"\nvalue = 9.0\nctr = 0.4\nabandon_prob = 0.2\n";
    let s = write(dir.path(), "one.toml", one);
    for m in ["ce", "gsp", "overture", "vcg"] {
        let out = run(&[
            "auction",
            "--scenario",
            s.to_str().unwrap(),
            "--mechanism",
            m,
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(report(&out).rows[0].price, Some(0.0), "{m}");
    }
}

#[test]
fn diversity_path_graph() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "p3.toml", P3);
    let out = run(&["diversity", "--scenario", s.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r.metrics["max_independent_set_size"], 2.0);
    assert_eq!(r.metrics["nonzero_residual_count"], 2.0);
    assert!(r.verdicts["independent_set_correspondence"]);
    assert!(
        r.notes.iter().any(|n| n == "correspondence: match"),
        "{:?}",
        r.notes
    );

    let greedy = report(&run(&[
        "diversity",
        "--scenario",
        s.to_str().unwrap(),
        "--solver",
        "greedy",
    ]));
    assert!(greedy.metrics["objective"] <= greedy.metrics["optimum"] + 1e-12);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(
        dir.path(),
        "empty.toml",
        "format_version = 1\nkind = \"ranking\"\n",
    );
    let big = write(dir.path(), "big.toml", &graph(12));
    let ok = write(dir.path(), "r.toml", RANKING);
    let missing = dir.path().join("missing.toml");
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["frobnicate"],
        vec!["rank"],
        vec!["rank", "--scenario", empty.to_str().unwrap()],
        vec!["rank", "--scenario", missing.to_str().unwrap()],
        vec![
            "rank",
            "--scenario",
            ok.to_str().unwrap(),
            "--variant",
            "nope",
        ],
        vec![
            "rank",
            "--scenario",
            ok.to_str().unwrap(),
            "--variant",
            "r2k",
        ],
        vec!["auction", "--scenario", ok.to_str().unwrap()],
        vec!["diversity", "--scenario", big.to_str().unwrap()],
        vec!["equilibrium"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
    // The greedy solver has no size limit.
    let out = run(&[
        "diversity",
        "--scenario",
        big.to_str().unwrap(),
        "--solver",
        "greedy",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn failed_verification_exits_one() {
    // One trial has a zero standard error, so the estimate cannot sit within 4 of them.
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "r.toml", RANKING);
    let out = run(&[
        "simulate",
        "--scenario",
        s.to_str().unwrap(),
        "--trials",
        "1",
        "--seed",
        "0",
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(!report(&out).passed());
}

#[test]
fn out_file_and_tabular_format() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "r.toml", RANKING);
    let dest = dir.path().join("out.csv");
    let out = run(&[
        "rank",
        "--scenario",
        s.to_str().unwrap(),
        "--format",
        "tabular",
        "--out",
        dest.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&dest).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "position,id,score,price,click_prob,contribution");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,B,"));
}
