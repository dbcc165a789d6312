//! Replays the checked-in fuzz seeds through the same entry points as the
//! fuzz targets, so the corpus stays meaningful on a stable toolchain.

use std::fs;
use std::path::PathBuf;

use mixfrac::experiments::{parse_config_str, parse_partition};
use mixfrac::geometry::{classify_boundary_nodes, discretize};
use mixfrac::io::{parse_basis_json, parse_f_csv};
use mixfrac::{BoundaryPartition, DomainSpec};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn config_seeds() {
    for (name, text) in seeds("parse_config") {
        let res = parse_config_str(&text);
        assert_eq!(res.is_ok(), name != "bad_s", "{name}: {res:?}");
        if let Ok(cfg) = res {
            assert_eq!(parse_config_str(&cfg.to_text()).unwrap(), cfg);
        }
    }
}

#[test]
fn partition_seeds() {
    let rect = DomainSpec::Rectangle { lx: 2.0, ly: 1.0 };
    for (name, text) in seeds("parse_partition") {
        assert!(parse_partition(rect, &text).is_ok(), "{name}");
    }
}

#[test]
fn basis_seeds() {
    for (name, text) in seeds("parse_basis_json") {
        assert_eq!(parse_basis_json(&text).is_ok(), name == "one_mode", "{name}");
    }
}

#[test]
fn f_csv_seeds() {
    let line = DomainSpec::Interval { a: 0.0, b: 1.0 };
    let square = DomainSpec::Rectangle { lx: 1.0, ly: 1.0 };
    let grid = |d: DomainSpec, n| classify_boundary_nodes(&discretize(d, n).unwrap(), &BoundaryPartition::full(d).unwrap());
    let (g1, g2) = (grid(line, 5), grid(square, 3));
    for (name, text) in seeds("parse_f_csv") {
        let g = if name.starts_with("line") { &g1 } else { &g2 };
        let f = parse_f_csv(&text, g).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(f.len(), g.len());
    }
}
