#![no_main]

use gridvis::cv::{apply_errata, literal_ruleset, parse_errata};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(errata) = parse_errata(text) {
        let base = literal_ruleset().expect("builtin rules parse");
        if let Ok(patched) = apply_errata(&base, &errata) {
            assert_eq!(patched.len(), base.len());
        }
    }
});
