use std::process::Command;

fn anfold(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_anfold")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn pieces_csv() {
    let (code, out, _) = anfold(&["pieces", "--n", "2", "--samples", "10000", "--format", "csv"]);
    assert_eq!(code, 0);
    assert_eq!(out, "n,formula,empirical,census\n2,3,3,3\n");
}

#[test]
fn verify_vr_json_is_reproducible() {
    let args = ["verify-vr", "--n", "4", "--samples", "5000", "--seed", "9"];
    let (code, a, _) = anfold(&args);
    assert_eq!(code, 0);
    let (_, b, _) = anfold(&args);
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    for key in ["version", "samples", "violations", "defect", "ci95", "seed"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["violations"], 0);
}

#[test]
fn fold_check_report() {
    let (code, out, _) = anfold(&["fold-check", "--n", "5", "--samples", "5000"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["max_deviation"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["folded_pieces"], 9);
    assert_eq!(v["folded_count_matches"], "2n-1");
}

#[test]
fn decode_file() {
    let dir = std::env::temp_dir().join(format!("anfold-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("points.txt");
    // lattice points of A_3: integer combinations of the rows of the generator
    let l = anfold::lattice::Lattice::an(3).unwrap();
    let lines: Vec<String> = [[0, 0, 0], [1, -1, 2], [3, 0, -2]]
        .iter()
        .map(|z| l.point(z).iter().map(|x| format!("{x:.17}")).collect::<Vec<_>>().join(" "))
        .collect();
    std::fs::write(&good, lines.join("\n") + "\n").unwrap();
    let (code, out, _) = anfold(&["decode", "--n", "3", "--points", good.to_str().unwrap(), "--format", "csv", "--verify"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "z1,z2,z3,distance");
    assert_eq!(rows[2].split(',').take(3).collect::<Vec<_>>(), ["1", "-1", "2"]);
    for r in &rows[1..] {
        let d: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!(d < 1e-9);
    }

    let bad = dir.join("bad.txt");
    std::fs::write(&bad, "0 0 0\n0.5 oops 1\n").unwrap();
    let (code, _, err) = anfold(&["decode", "--n", "3", "--points", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn network_stats_csv() {
    let (code, out, _) = anfold(&["network-stats", "--n-list", "4,8", "--format", "csv"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "n,depth,width,params,params_over_n4");
    assert!(rows[2].starts_with("8,25,128,"));
}

#[test]
fn out_flag_and_export() {
    let path = std::env::temp_dir().join(format!("anfold-export-{}.csv", std::process::id()));
    let (code, out, _) =
        anfold(&["boundary-export", "--n", "2", "--grid", "11", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(text.starts_with("y2,f,folded_f\n"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn bad_arguments() {
    let (code, _, _) = anfold(&["pieces", "--n", "1"]);
    assert_eq!(code, 2);
    let (code, _, _) = anfold(&["no-such-command"]);
    assert_ne!(code, 0);
}
