//! End-to-end runs of the `keyrace` binary.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn keyrace(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_keyrace"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/worked_example.csv")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("keyrace-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn worked_example_from_file_and_stdin() {
    let want = "#1,RED\n#2,WHITE\n#3,WHITE\n#4,YELLOW\n";
    let o = keyrace(&["sample", "--inject-keys", fixture().to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), want);

    let text = std::fs::read_to_string(fixture()).unwrap();
    let o = keyrace(&["sample", "--inject-keys", "--emit-keys", "-"], &text);
    assert!(stdout(&o).starts_with("#1,RED,5.612483956\n"), "{}", stdout(&o));
}

#[test]
fn sampling_without_keys_is_seeded() {
    let path = fixture();
    let run = |seed: &str| stdout(&keyrace(&["sample", "--seed", seed, path.to_str().unwrap()], ""));
    assert_eq!(run("5"), run("5"));
    assert_eq!(run("5").lines().count(), 4);
    let differs = (0..20).any(|s| run(&s.to_string()) != run("5"));
    assert!(differs);
}

#[test]
fn replicates_are_prefixed() {
    let o = keyrace(&["sample", "--replicates", "3", fixture().to_str().unwrap()], "");
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 12);
    assert!(lines[0].starts_with("0,#1,"));
    assert!(lines[11].starts_with("2,#4,"));
}

#[test]
fn header_only_input_gives_empty_output() {
    let o = keyrace(&["sample", "-"], "ID,QUAL,Strength\n");
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
}

#[test]
fn parse_and_domain_errors_set_exit_codes() {
    let o = keyrace(&["sample", "-"], "ID,QUAL,Strength\ng,a,notanumber\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = keyrace(&["sample", "-"], "ID,QUAL,Strength\ng,a,1\ng,a,2\n");
    assert_eq!(o.status.code(), Some(2));

    let o = keyrace(&["sample", "--model", "frechet2", "-"], "ID,QUAL,Strength\ng,a,1\ng,b,0\n");
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("(g, b)"), "{}", stderr(&o));

    let o = keyrace(&["sample", "--model", "gumbel1", "--scale=-1", "-"], "ID,QUAL,Strength\ng,a,1\n");
    assert_eq!(o.status.code(), Some(3));

    let o = keyrace(&["sample", "/nonexistent/table.csv"], "");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn update_stream_reports_cases() {
    let stream = "UPSERT #1,RED,3\nUPSERT #1,GREEN,-100\nDELETE #1,GREEN\nDELETE #1,RED\n";
    let o = keyrace(&["update"], stream);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("WINNER #1,RED,") && lines[0].ends_with("case-i comparisons=0"));
    assert!(lines[1].ends_with("case-ii comparisons=1"), "{}", lines[1]);
    assert!(lines[2].ends_with("no-rescan comparisons=1"), "{}", lines[2]);
    assert_eq!(lines[3], "REMOVED #1 group-removed comparisons=1");
}

#[test]
fn update_stream_warnings_exit_4() {
    let o = keyrace(&["update"], "UPSERT g,a,1\nFROB g\nDELETE g,zz\nUPSERT g,b,1\n");
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stdout(&o).lines().count(), 2);
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("line 3"), "{err}");
}

/// The state left by an update stream, dumped with versions, samples to the
/// same winners and keys the stream reported last.
#[test]
fn update_replay_matches_batch_sample() {
    let mut stream = String::new();
    let mut state: u64 = 17;
    for _ in 0..3000 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let g = (state >> 33) % 20;
        let l = (state >> 45) % 6;
        if (state >> 20) % 5 == 0 {
            stream.push_str(&format!("DELETE g{g},l{l}\n"));
        } else {
            let s = ((state >> 8) % 1000) as f64 / 100.0 - 5.0;
            stream.push_str(&format!("UPSERT g{g},l{l},{s}\n"));
        }
    }
    let dump = scratch("dump.csv");
    let o = keyrace(&["update", "--seed", "9", "--dump", dump.to_str().unwrap()], &stream);
    assert!(matches!(o.status.code(), Some(0) | Some(4)), "{}", stderr(&o));

    let mut live: BTreeMap<String, Option<(String, f64)>> = BTreeMap::new();
    for line in stdout(&o).lines() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts[0] {
            "WINNER" => {
                let f: Vec<&str> = parts[1].split(',').collect();
                live.insert(f[0].into(), Some((f[1].into(), f[2].parse().unwrap())));
            }
            "REMOVED" => {
                live.insert(parts[1].into(), None);
            }
            other => panic!("unexpected line {other}"),
        }
    }
    let live: BTreeMap<String, (String, f64)> = live.into_iter().filter_map(|(g, w)| w.map(|w| (g, w))).collect();

    let dumped = std::fs::read_to_string(&dump).unwrap();
    assert!(dumped.lines().next().unwrap().contains("Version"));
    let o = keyrace(&["sample", "--seed", "9", "--emit-keys", dump.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let batch: BTreeMap<String, (String, f64)> = stdout(&o)
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), (f[1].to_string(), f[2].parse().unwrap()))
        })
        .collect();
    assert_eq!(live, batch);
}

#[test]
fn validate_quick_passes() {
    let o = keyrace(&["validate", "--quick"], "");
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.lines().any(|l| l.starts_with("CRITERION worked-example PASS")));
    assert!(out.contains("criteria passed"));
    assert!(stderr(&o).contains("reduced-power"));
}

#[test]
fn validate_rejects_degenerate_fixture() {
    let path = scratch("degenerate.csv");
    std::fs::write(&path, "ID,QUAL,Strength\ng,a,1\ng,b,0\n").unwrap();
    let o = keyrace(&["validate", "--quick", "--model", "frechet2", "--input", path.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn bench_with_single_label_groups_agrees() {
    let o = keyrace(&["bench", "--rows", "2000", "--labels", "1", "--updates", "500"], "");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("single-label agreement: yes"), "{out}");
    assert!(out.contains("key race"));
}

#[test]
fn unknown_model_is_rejected() {
    let o = keyrace(&["sample", "--model", "weibull", fixture().to_str().unwrap()], "");
    assert_ne!(o.status.code(), Some(0));
}
