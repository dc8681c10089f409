#![no_main]

use gridvis::geometry::Configuration;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = Configuration::from_json(text) {
        assert_eq!(Configuration::from_json(&c.to_json()).expect("round trip"), c);
    }
});
