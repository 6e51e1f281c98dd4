#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = locomind::pgm::decode(data) {
        assert_eq!(img.pixels.len(), img.width * img.height);
    }
});
