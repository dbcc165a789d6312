#![no_main]

use libfuzzer_sys::fuzz_target;
use mixfrac::io::parse_basis_json;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(env) = parse_basis_json(s) {
        let basis = env.into_basis();
        let _ = basis.orthonormality_defect();
    }
});
