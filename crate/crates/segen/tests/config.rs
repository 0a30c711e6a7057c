use std::fs;

use segen::config::{parse_config_text, resolve, RunConfig, KEYS};
use segen::RunError;
use segen_core::sampler::Strategy;

fn args(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

#[test]
fn empty_invocation_gives_defaults() {
    let cfg = resolve(None, None, &[]).unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!((cfg.k, cfg.pool_size, cfg.batch_size, cfg.population, cfg.generations), (10, 200, 10, 10, 30));
    assert_eq!(cfg.strategies, Strategy::ALL.to_vec());
    let snap = cfg.snapshot();
    for key in KEYS {
        assert!(snap.contains(&format!("\n{key} = ")), "{key} missing from snapshot");
    }
}

#[test]
fn presets_match_their_tables() {
    let cases = [
        ("ps1", 10, 200, 10, 10),
        ("ps2", 50, 600, 5, 50),
        ("ps3", 25, 300, 35, 5),
        ("ps4", 50, 700, 10, 5),
        ("ps5", 45, 500, 50, 5),
    ];
    for (name, k, p, b, m) in cases {
        let cfg = resolve(Some(name), None, &[]).unwrap();
        assert_eq!((cfg.k, cfg.pool_size, cfg.batch_size, cfg.population, cfg.generations), (k, p, b, m, 30), "{name}");
    }
    assert!(matches!(resolve(Some("ps9"), None, &[]), Err(RunError::Usage(_))));
}

#[test]
fn precedence_is_flag_then_file_then_preset() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.conf");
    fs::write(&file, "# comment\nk = 20   # trailing comment\nb = 7\n\nstrategies = bfs, es\n").unwrap();
    let cfg = resolve(Some("ps2"), Some(&file), &args("--k 30")).unwrap();
    assert_eq!(cfg.k, 30);
    assert_eq!(cfg.batch_size, 7);
    assert_eq!(cfg.pool_size, 600);
    assert_eq!(cfg.population, 50);
    assert_eq!(cfg.strategies, vec![Strategy::Bfs, Strategy::Es]);
}

#[test]
fn override_spellings() {
    let cfg = resolve(None, None, &args("--pool-size=50 --population 4 --K 3 --hidden 8,4 --np_ratios 2")).unwrap();
    assert_eq!(cfg.pool_size, 50);
    assert_eq!(cfg.population, 4);
    assert_eq!(cfg.generations, 3);
    assert_eq!(cfg.hidden, vec![8, 4]);
    assert_eq!(cfg.np_ratios, vec![2]);
    let cfg = resolve(None, None, &args("--hidden none --strategies HS")).unwrap();
    assert!(cfg.hidden.is_empty());
    assert_eq!(cfg.strategies, vec![Strategy::Hs]);
}

fn usage_message(r: Result<RunConfig, RunError>) -> String {
    match r {
        Err(RunError::Usage(m)) => m,
        other => panic!("expected usage error, got {other:?}"),
    }
}

#[test]
fn invalid_values_name_their_key() {
    assert!(usage_message(resolve(None, None, &args("--k 0"))).contains('k'));
    assert!(usage_message(resolve(None, None, &args("--alpha x"))).contains("alpha"));
    assert!(usage_message(resolve(None, None, &args("--b 500"))).contains('b'));
    assert!(usage_message(resolve(None, None, &args("--gamma_recon 1"))).contains("gamma_recon"));
    assert!(usage_message(resolve(None, None, &args("--strategies bfs,xyz"))).contains("strategies"));
    assert!(usage_message(resolve(None, None, &args("--m 1"))).contains('m'));
    assert!(usage_message(resolve(None, None, &args("--k 1 --strategies es"))).contains('k'));
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(usage_message(resolve(None, None, &args("--colour blue"))).contains("colour"));
    assert!(usage_message(resolve(None, None, &args("--seed"))).contains("seed"));
    assert!(parse_config_text("speed = 3\n").is_err());
    assert!(parse_config_text("k 3\n").is_err());
}

#[test]
fn snapshot_parses_back() {
    let cfg = resolve(Some("ps3"), None, &args("--seed 99 --graph_path g.txt --hidden none --dump_chromosomes true")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("snap.txt");
    fs::write(&file, cfg.snapshot()).unwrap();
    assert_eq!(resolve(None, Some(&file), &[]).unwrap(), cfg);
}
