use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const CHAIN4: &str = "NAME: chain4
TYPE: ATSP
DIMENSION: 4
EDGE_WEIGHT_TYPE: EXPLICIT
EDGE_WEIGHT_FORMAT: FULL_MATRIX
EDGE_WEIGHT_SECTION
0 1 5 9
9 0 2 8
6 7 0 3
4 8 7 0
EOF
";

fn atsp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atsp"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env_remove("ATSP_TIME_LIMIT_MS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(dir: &Path, file: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(file)).unwrap()).unwrap()
}

fn non_timing_columns(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            [&cols[..6], &cols[7..]].concat().join(",")
        })
        .collect()
}

#[test]
fn generate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = [
        "generate", "--n", "10", "--seed", "42", "--range", "1:10", "--out",
    ];
    let first = atsp(dir.path(), &[&args[..], &["a.tsp"]].concat());
    let second = atsp(dir.path(), &[&args[..], &["b.tsp"]].concat());
    assert_eq!(code(&first), 0);
    let digest = |o: &Output| stdout(o).split_whitespace().nth(1).unwrap().to_owned();
    assert_eq!(
        digest(&first),
        "sha256:88de3a0fc1c6a8eb44a983fbb559641999fd77cdd98b4b51b360c21b29bf027b"
    );
    assert_eq!(digest(&first), digest(&second));
    let text = fs::read_to_string(dir.path().join("a.tsp")).unwrap();
    assert!(text.starts_with("NAME: atsp10\nTYPE: ATSP\nDIMENSION: 10\n"));
}

#[test]
fn generate_wide_range_as_csv() {
    let dir = TempDir::new().unwrap();
    let out = atsp(
        dir.path(),
        &[
            "generate", "--n", "6", "--seed", "7", "--range", "10:100", "--format", "csv", "--out",
            "m.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for (j, v) in line.split(',').enumerate() {
            if i != j {
                values.push(v.trim().parse::<i64>().unwrap());
            }
        }
    }
    assert_eq!(values.len(), 30);
    assert!(values.iter().all(|v| (10..=100).contains(v)));
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&atsp(
            dir.path(),
            &["generate", "--n", "1", "--out", "x.tsp"]
        )),
        2
    );
    assert_eq!(
        code(&atsp(
            dir.path(),
            &["generate", "--n", "5", "--range", "9:3", "--out", "x.tsp"]
        )),
        2
    );
    assert_eq!(code(&atsp(dir.path(), &["solve"])), 2);
    assert_eq!(code(&atsp(dir.path(), &["frobnicate"])), 2);
}

#[test]
fn io_and_format_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&atsp(dir.path(), &["solve", "--in", "missing.tsp"])),
        4
    );
    fs::write(
        dir.path().join("bad.tsp"),
        "DIMENSION: 3\nEDGE_WEIGHT_SECTION\n0 1\n",
    )
    .unwrap();
    assert_eq!(code(&atsp(dir.path(), &["solve", "--in", "bad.tsp"])), 5);
}

#[test]
fn solve_fixture_reports_optimum() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("chain4.tsp"), CHAIN4).unwrap();
    let out = atsp(
        dir.path(),
        &["solve", "--in", "chain4.tsp", "--report", "r.json"],
    );
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("cost 10 gap 0.0000% nodes 1 status optimal"));
    let report = json(dir.path(), "r.json");
    assert_eq!(report["optimal_cost"], 10);
    assert_eq!(report["gap_percent"], 0.0);
    assert_eq!(report["tour"]["order"], serde_json::json!([0, 1, 2, 3]));
}

#[test]
fn warmstart_flag_does_not_change_the_optimum() {
    let dir = TempDir::new().unwrap();
    for seed in ["3", "11"] {
        let base = ["solve", "--n", "11", "--seed", seed, "--report"];
        let on = atsp(
            dir.path(),
            &[&base[..], &["on.json", "--warmstart", "on"]].concat(),
        );
        let off = atsp(
            dir.path(),
            &[&base[..], &["off.json", "--warmstart", "off"]].concat(),
        );
        assert_eq!((code(&on), code(&off)), (0, 0));
        let cost = json(dir.path(), "on.json")["optimal_cost"].clone();
        assert_eq!(cost, json(dir.path(), "off.json")["optimal_cost"]);
        let oracle = atsp(
            dir.path(),
            &["oracle", "--n", "11", "--seed", seed, "brute-force"],
        );
        let oracle_cost = stdout(&oracle)
            .split_whitespace()
            .nth(2)
            .unwrap()
            .to_owned();
        assert_eq!(cost.to_string(), oracle_cost);
    }
}

#[test]
fn repeated_solves_share_the_hash() {
    let dir = TempDir::new().unwrap();
    let args = ["solve", "--n", "30", "--seed", "5", "--report"];
    atsp(dir.path(), &[&args[..], &["a.json"]].concat());
    atsp(dir.path(), &[&args[..], &["b.json"]].concat());
    let a = json(dir.path(), "a.json");
    assert_eq!(a["deterministic_fields_hash"].as_str().unwrap().len(), 64);
    assert_eq!(
        a["deterministic_fields_hash"],
        json(dir.path(), "b.json")["deterministic_fields_hash"]
    );
}

#[test]
fn time_limit_exits_3_with_report() {
    let dir = TempDir::new().unwrap();
    let out = atsp(
        dir.path(),
        &[
            "solve",
            "--n",
            "300",
            "--seed",
            "3",
            "--warmstart",
            "off",
            "--time-limit",
            "1",
            "--report",
            "r.json",
        ],
    );
    assert_eq!(code(&out), 3);
    let report = json(dir.path(), "r.json");
    assert_eq!(report["optimal"], false);
    assert!(report["gap_percent"].as_f64().unwrap() > 0.0);

    let out = Command::new(env!("CARGO_BIN_EXE_atsp"))
        .args(["solve", "--n", "300", "--seed", "3"])
        .current_dir(dir.path())
        .env("RUST_LOG", "warn")
        .env("ATSP_TIME_LIMIT_MS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn warmstart_subcommand_writes_a_tour() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("chain4.tsp"), CHAIN4).unwrap();
    let out = atsp(
        dir.path(),
        &["warmstart", "--in", "chain4.tsp", "--out", "t.json"],
    );
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("cost 10 "));
    assert_eq!(
        fs::read_to_string(dir.path().join("t.json")).unwrap(),
        "{\"order\":[0,1,2,3],\"cost\":10}\n"
    );
}

#[test]
fn export_model_counts_and_file() {
    let dir = TempDir::new().unwrap();
    let out = atsp(
        dir.path(),
        &[
            "export-model",
            "--n",
            "5000",
            "--formulation",
            "dfj",
            "--count-only",
        ],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out),
        "24,995,000 binaries, 0 continuous, 10,000 constraints\n"
    );
    let out = atsp(
        dir.path(),
        &[
            "export-model",
            "--n",
            "10",
            "--formulation",
            "mtz",
            "--count-only",
        ],
    );
    assert_eq!(stdout(&out), "90 binaries, 9 continuous, 92 constraints\n");

    fs::write(dir.path().join("chain4.tsp"), CHAIN4).unwrap();
    let out = atsp(
        dir.path(),
        &[
            "export-model",
            "--in",
            "chain4.tsp",
            "--formulation",
            "mtz",
            "--out",
            "m.lp",
        ],
    );
    assert_eq!(code(&out), 0);
    let lp = fs::read_to_string(dir.path().join("m.lp")).unwrap();
    assert!(lp.starts_with("\\ ATSP mtz formulation, n = 4\nMinimize\n"));
    assert!(lp.ends_with("End\n"));
    assert_eq!(code(&atsp(dir.path(), &["export-model", "--n", "4"])), 2);
}

#[test]
fn cutloop_rounds() {
    let dir = TempDir::new().unwrap();
    let base = [
        "cutloop", "--n", "5", "--seed", "3", "--state", "s.json", "--lp-out",
    ];
    let out = atsp(dir.path(), &[&base[..], &["r0.lp"]].concat());
    assert_eq!(stdout(&out), "solve r0.lp round 0 cuts 0\n");

    let subtours = "x_0_1 1\nx_1_0 1\nx_2_3 1\nx_3_4 1\nx_4_2 1\n";
    fs::write(dir.path().join("sol1.txt"), subtours).unwrap();
    let out = atsp(
        dir.path(),
        &[&base[..], &["r1.lp", "--solution", "sol1.txt"]].concat(),
    );
    assert_eq!(stdout(&out), "solve r1.lp round 1 cuts 2\n");
    let lp = fs::read_to_string(dir.path().join("r1.lp")).unwrap();
    assert!(lp.contains(" cut_0: x_0_1 + x_1_0 <= 1\n"));

    // A subtour that an earlier cut forbids is rejected.
    let out = atsp(
        dir.path(),
        &[&base[..], &["r2.lp", "--solution", "sol1.txt"]].concat(),
    );
    assert_eq!(code(&out), 5);

    let tour = "x_0_1 1\nx_1_2 1\nx_2_3 1\nx_3_4 1\nx_4_0 1\n";
    fs::write(dir.path().join("sol2.txt"), tour).unwrap();
    let out = atsp(
        dir.path(),
        &[&base[..], &["r2.lp", "--solution", "sol2.txt"]].concat(),
    );
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("done round 1 cost "));
    assert!(stdout(&out).ends_with("0 1 2 3 4\n"));
}

#[test]
fn bench_writes_deterministic_csv() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("suite.json"),
        r#"{"algorithms":["gta","nn","held_karp"],"n_values":[6,8,10],"seeds":[1,2],"repetitions":2}"#,
    )
    .unwrap();
    let a = atsp(
        dir.path(),
        &["bench", "--suite", "suite.json", "--out", "a.csv"],
    );
    let b = atsp(
        dir.path(),
        &["bench", "--suite", "suite.json", "--out", "b.csv"],
    );
    assert_eq!((code(&a), code(&b)), (0, 0));
    assert!(stdout(&a).starts_with("36 records -> a.csv\n"));
    let read = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap();
    assert_eq!(
        non_timing_columns(&read("a.csv")),
        non_timing_columns(&read("b.csv"))
    );
    assert!(
        read("a.csv").starts_with("algorithm,n,seed,range_low,range_high,repetition,runtime_ms,")
    );

    let out = atsp(
        dir.path(),
        &[
            "plot", "scaling", "--csv", "a.csv", "--axes", "loglog", "--out", "s.svg",
        ],
    );
    assert_eq!(code(&out), 0);
    assert!(read("s.svg").contains("runtime (ms)"));
}

#[test]
fn bench_skipped_cells_exit_3() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("suite.json"),
        r#"{"algorithms":["brute_force"],"n_values":[12],"seeds":[1],"repetitions":1}"#,
    )
    .unwrap();
    let out = atsp(
        dir.path(),
        &["bench", "--suite", "suite.json", "--out", "a.csv"],
    );
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("skipped brute_force n 12"));
}

#[test]
fn plot_route_from_report_or_line() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("chain4.tsp"), CHAIN4).unwrap();
    atsp(
        dir.path(),
        &["solve", "--in", "chain4.tsp", "--report", "r.json"],
    );
    let route = ["plot", "route", "--in", "chain4.tsp", "--tour"];
    let out = atsp(
        dir.path(),
        &[&route[..], &["r.json", "--out", "a.svg"]].concat(),
    );
    assert_eq!(code(&out), 0);
    fs::write(dir.path().join("t.txt"), "0 1 2 3\n").unwrap();
    atsp(
        dir.path(),
        &[&route[..], &["t.txt", "--out", "b.svg"]].concat(),
    );
    let a = fs::read_to_string(dir.path().join("a.svg")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.svg")).unwrap());
    assert_eq!(a.matches("class=\"start\"").count(), 1);

    fs::write(dir.path().join("short.txt"), "0 1 2\n").unwrap();
    let out = atsp(
        dir.path(),
        &[&route[..], &["short.txt", "--out", "c.svg"]].concat(),
    );
    assert_eq!(code(&out), 5);
}

#[test]
fn oracle_compare_agrees() {
    let dir = TempDir::new().unwrap();
    let out = atsp(
        dir.path(),
        &["oracle", "--n", "10", "--seed", "42", "compare"],
    );
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let costs: Vec<&str> = text
        .lines()
        .filter(|l| l.contains(" cost "))
        .map(|l| l.split_whitespace().nth(2).unwrap())
        .collect();
    assert_eq!(costs.len(), 2);
    assert_eq!(costs[0], costs[1]);
    assert!(text.ends_with("agree\n"));
    assert_eq!(
        code(&atsp(dir.path(), &["oracle", "--n", "25", "compare"])),
        2
    );
}
