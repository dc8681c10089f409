//! The checked-in fuzz seeds must be accepted by their decoders and
//! survive the same round trips the fuzz targets assert.

use std::fs;
use std::path::{Path, PathBuf};

use gridvis::cv::{apply_errata, literal_ruleset, parse_errata};
use gridvis::geometry::Configuration;
use gridvis::rules::{format_ruleset, parse_ruleset};
use gridvis::sim::Trace;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(PathBuf, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn rules_seeds() {
    for (path, text) in seeds("rules_parser") {
        let rs = parse_ruleset(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(parse_ruleset(&format_ruleset(&rs)).unwrap(), rs);
    }
}

#[test]
fn errata_seeds() {
    let base = literal_ruleset().unwrap();
    for (path, text) in seeds("errata_parser") {
        let errata = parse_errata(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(apply_errata(&base, &errata).unwrap().len(), 26);
    }
}

#[test]
fn config_seeds() {
    for (path, text) in seeds("config_json") {
        let c = Configuration::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(Configuration::from_json(&c.to_json()).unwrap(), c);
    }
}

#[test]
fn trace_seeds() {
    for (path, text) in seeds("trace_jsonl") {
        let t = Trace::from_jsonl(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(Trace::from_jsonl(&t.to_jsonl()).unwrap().hash(), t.hash());
        assert_eq!(t.config_at(t.events.len()).unwrap(), t.outcome.final_config);
    }
}
