#![no_main]

use libfuzzer_sys::fuzz_target;
use mixfrac::experiments::parse_config_str;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config_str(s) {
        // accepted configs must survive their own echo
        let again = parse_config_str(&cfg.to_text()).expect("echo of an accepted config was rejected");
        assert_eq!(again.to_text(), cfg.to_text());
    }
});
