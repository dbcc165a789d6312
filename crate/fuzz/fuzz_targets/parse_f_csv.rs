#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use mixfrac::geometry::{classify_boundary_nodes, discretize};
use mixfrac::io::parse_f_csv;
use mixfrac::{BoundaryPartition, DomainSpec, Grid};

fn grids() -> &'static [Grid; 2] {
    static GRIDS: OnceLock<[Grid; 2]> = OnceLock::new();
    GRIDS.get_or_init(|| {
        let line = DomainSpec::Interval { a: 0.0, b: 1.0 };
        let square = DomainSpec::Rectangle { lx: 1.0, ly: 1.0 };
        let grid = |d: DomainSpec, n| classify_boundary_nodes(&discretize(d, n).unwrap(), &BoundaryPartition::full(d).unwrap());
        [grid(line, 5), grid(square, 3)]
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    for g in grids() {
        if let Ok(f) = parse_f_csv(s, g) {
            assert_eq!(f.len(), g.len());
        }
    }
});
