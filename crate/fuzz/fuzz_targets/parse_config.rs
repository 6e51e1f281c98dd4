#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = locomind::config::Config::parse(text) {
        assert_eq!(locomind::config::Config::parse(&cfg.to_toml()).expect("round trip"), cfg);
    }
});
