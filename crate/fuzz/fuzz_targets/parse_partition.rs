#![no_main]

use libfuzzer_sys::fuzz_target;
use mixfrac::experiments::parse_partition;
use mixfrac::DomainSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let domains = [
        DomainSpec::Interval { a: 0.0, b: std::f64::consts::PI },
        DomainSpec::Rectangle { lx: 2.0, ly: 1.0 },
    ];
    for d in domains {
        if let Ok(part) = parse_partition(d, s) {
            assert!(part.measure().is_finite());
        }
    }
});
