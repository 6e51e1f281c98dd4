#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = locomind::llm::parse::parse_numeric_params(text);
    let _ = locomind::llm::parse::parse_numeric_values(text);
});
