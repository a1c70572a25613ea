// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adderopt::library::CellLibrary;
use adderopt::netlist::{parse_netlist, CellNameMap};
use adderopt::verify::simulate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adderopt")).args(args).current_dir(dir).env_remove("AXON_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const GOLDEN_HEADER: &str = "# SPDX-License-Identifier: Apache-2.0\n";

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Set `UPDATE_GOLDEN=1` to rewrite the files after an intentional change.
#[test]
fn help_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let mut names = vec![String::new()];
    names.extend(adderopt_cli::command().get_subcommands().map(|c| c.get_name().to_string()));
    for name in names {
        let args: Vec<&str> = if name.is_empty() { vec!["--help"] } else { vec![name.as_str(), "--help"] };
        let o = run(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0));
        let file = golden_dir().join(format!("{}.txt", if name.is_empty() { "adderopt" } else { &name }));
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            fs::create_dir_all(golden_dir()).unwrap();
            fs::write(&file, format!("{GOLDEN_HEADER}{}", stdout(&o))).unwrap();
        }
        let text = fs::read_to_string(&file).unwrap_or_else(|_| panic!("missing {}", file.display()));
        let want = text.strip_prefix(GOLDEN_HEADER).unwrap_or(&text);
        assert_eq!(stdout(&o), want, "help for '{name}' changed");
    }
}

#[test]
fn help_lists_every_flag() {
    for sub in adderopt_cli::command().get_subcommands_mut() {
        let help = sub.render_long_help().to_string();
        for arg in sub.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(help.contains(&format!("--{long}")), "{} --help lacks --{long}", sub.get_name());
            }
        }
    }
}

#[test]
fn generated_adder_adds() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(run(p, &["gen", "--arch", "ks", "--bits", "16", "-o", "g.json"]).status.code(), Some(0));
    assert_eq!(run(p, &["emit", "--graph", "g.json", "-o", "x.v"]).status.code(), Some(0));
    let o = run(p, &["verify", "--netlist", "x.v", "--bits", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("result PASS"));

    let lib = CellLibrary::generic();
    let nl = parse_netlist(&fs::read_to_string(p.join("x.v")).unwrap(), &lib, &CellNameMap::identity()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let (a, b, cin) = (rng.gen::<u16>() as u128, rng.gen::<u16>() as u128, rng.gen::<bool>());
        let total = a + b + cin as u128;
        assert_eq!(simulate(&nl, &lib, a, b, cin).unwrap(), (total & 0xffff, total >> 16 == 1));
    }
}

#[test]
fn broken_netlist_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    run(p, &["gen", "--arch", "bk", "--bits", "6", "-o", "g.json"]);
    run(p, &["emit", "--graph", "g.json", "-o", "x.v"]);
    let text = fs::read_to_string(p.join("x.v")).unwrap().replacen("  NAND2 ", "  NOR2 ", 1);
    fs::write(p.join("bad.v"), text).unwrap();
    let o = run(p, &["verify", "--netlist", "bad.v"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("mode exhaustive") && stdout(&o).contains("result FAIL"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("adderopt.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "failed");
    assert_eq!(m["summary"]["pass"], false);
}

#[test]
fn two_bit_explore_has_one_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["explore", "--bits", "2", "-o", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/scatter.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(dir.path().join("out/manifest.json").exists());
    assert!(dir.path().join("out/cand_00000.v").exists());
}

#[test]
fn user_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = run(p, &["gen", "--arch", "ks", "--bits", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unsupported width 0"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("adderopt.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "error");

    for args in [
        &["gen", "--arch", "ks", "--bits", "8", "--bogus"][..],
        &["gen", "--arch", "xx", "--bits", "8"],
        &["gen", "--arch", "ks", "--bits", "8", "--bench", "16"],
        &["explore", "--bench", "17"],
        &["frobnicate"],
        &["verify", "--netlist", "missing.v"],
        &["search", "--bits", "8", "--depth", "2"],
        &["report", "--in", "nowhere"],
    ] {
        assert_eq!(run(p, args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_adderopt"))
        .args(["explore", "--bits", "4", "-o", "out"])
        .current_dir(dir.path())
        .env("AXON_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("AXON_THREADS"));
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn same_argv_same_files() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["explore", "--bits", "12", "--hybrid", "--cap", "120", "--seed", "7", "-o", out];
    assert_eq!(run(dir.path(), &args("x")).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_adderopt")).args(args("y")).current_dir(dir.path()).env("AXON_THREADS", "2").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let (x, y) = (snapshot(&dir.path().join("x")), snapshot(&dir.path().join("y")));
    assert!(x.len() > 5);
    assert_eq!(x, y);

    let r = run(dir.path(), &["report", "--in", "x"]);
    assert_eq!(r.status.code(), Some(0));
    assert!(stdout(&r).contains("frontier") && stdout(&r).contains("cand_"));
}

#[test]
fn graph_commands_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = run(p, &["search", "--bits", "8", "--depth", "4", "-o", "s.json"]);
    assert!(stdout(&o).contains("size 10") && stdout(&o).contains("optimal proven"));
    assert_eq!(run(p, &["hybridize", "--graph", "s.json", "-o", "h.json", "--manifest", "h.run.json"]).status.code(), Some(0));
    assert!(p.join("h.run.json").exists() && p.join("s.json.manifest.json").exists());
    run(p, &["emit", "--graph", "h.json", "--no-size", "-o", "h.v"]);
    let v = run(p, &["verify", "--netlist", "h.v"]);
    assert!(stdout(&v).contains("result PASS"), "{}", stdout(&v));
    let stdout_json = run(p, &["gen", "--arch", "sk", "--bench", "16"]);
    assert!(adderopt::prefix::PrefixGraph::from_json(&stdout(&stdout_json)).is_ok());
}
