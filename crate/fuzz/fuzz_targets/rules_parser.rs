#![no_main]

use gridvis::rules::{format_ruleset, parse_ruleset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rs) = parse_ruleset(text) {
        let printed = format_ruleset(&rs);
        let again = parse_ruleset(&printed).expect("printed rules parse");
        assert_eq!(again, rs);
    }
});
