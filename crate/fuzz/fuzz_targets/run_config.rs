#![no_main]

use isoseg_cli::config::RunConfig;
use libfuzzer_sys::fuzz_target;

// The first byte picks the syntax: even for TOML, odd for JSON.
fuzz_target!(|data: &[u8]| {
    let Some((&selector, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let parsed = if selector % 2 == 0 { RunConfig::parse_toml(text) } else { RunConfig::parse_json(text) };
    if let Ok(config) = parsed {
        RunConfig::parse_json(&config.to_json()).expect("serialized config parses");
    }
});
