#![no_main]

use gridvis::sim::Trace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = Trace::from_jsonl(text) {
        let again = Trace::from_jsonl(&t.to_jsonl()).expect("round trip");
        assert_eq!(again.hash(), t.hash());
        let _ = t.config_at(t.events.len());
    }
});
