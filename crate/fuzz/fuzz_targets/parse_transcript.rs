#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(records) = locomind::llm::parse_transcript(text) {
        let again = locomind::llm::parse_transcript(&locomind::llm::transcript_to_jsonl(&records)).expect("round trip");
        assert_eq!(again, records);
    }
});
