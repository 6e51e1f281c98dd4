#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(scene) = locomind::mapping::parse_scene(text) {
        let again = locomind::mapping::parse_scene(&locomind::mapping::scene_to_jsonl(&scene)).expect("round trip");
        assert_eq!(again, scene);
    }
});
