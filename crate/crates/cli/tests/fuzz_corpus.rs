//! Replays the checked-in fuzz corpus for the command-line parsers.

use std::path::PathBuf;

use isoseg_cli::case::CaseManifest;
use isoseg_cli::config::RunConfig;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.display().to_string(), std::fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn parse_config(data: &[u8]) -> Result<RunConfig, String> {
    let (&selector, rest) = data.split_first().ok_or("empty")?;
    let text = std::str::from_utf8(rest).map_err(|e| e.to_string())?;
    if selector % 2 == 0 {
        RunConfig::parse_toml(text)
    } else {
        RunConfig::parse_json(text)
    }
}

#[test]
fn case_manifest_seeds() {
    for (name, bytes) in seeds("case_manifest") {
        CaseManifest::parse(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        for cut in 0..bytes.len() {
            let _ = CaseManifest::parse(&bytes[..cut]);
        }
    }
}

#[test]
fn run_config_seeds() {
    for (name, bytes) in seeds("run_config") {
        let config = parse_config(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(RunConfig::parse_json(&config.to_json()).unwrap(), config, "{name}");
        for cut in 0..bytes.len() {
            let _ = parse_config(&bytes[..cut]);
        }
    }
}
