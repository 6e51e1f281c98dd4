#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for mode in [locomind::llm::parse::CostMode::Binary, locomind::llm::parse::CostMode::Continuous] {
        if let Ok(a) = locomind::llm::parse::parse_cost_json(text, mode) {
            assert!(a.terrain.iter().all(|t| (0.0..=1.0).contains(&t.cost)));
        }
    }
});
