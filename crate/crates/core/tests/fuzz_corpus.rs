//! Replays the checked-in fuzz corpus through the same checks the fuzz
//! targets make, so the seeds stay meaningful without a fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use occnav::formats::{
    decode_grid, decode_labels, encode_grid, encode_labels, parse_floorplan, parse_paths, parse_weights, read_manifest, write_floorplan, write_manifest,
    write_paths, write_weights,
};
use occnav::harness::parse_config;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(bytes: &[u8]) -> Option<&str> {
    std::str::from_utf8(bytes).ok()
}

#[test]
fn floorplan_seeds() {
    let mut ok = 0;
    for (_, data) in seeds("parse_floorplan") {
        if let Some(Ok(fp)) = text(&data).map(parse_floorplan) {
            assert_eq!(parse_floorplan(&write_floorplan(&fp)).unwrap(), fp);
            ok += 1;
        }
    }
    assert!(ok >= 2);
}

#[test]
fn grid_seeds() {
    let mut ok = 0;
    for (_, data) in seeds("decode_grid") {
        if let Ok(map) = decode_grid(&data) {
            assert_eq!(encode_grid(&map), data);
            ok += 1;
        }
    }
    assert!(ok >= 2);
}

#[test]
fn label_seeds() {
    let mut ok = 0;
    for (_, data) in seeds("decode_labels") {
        if let Ok((rows, cols, labels)) = decode_labels(&data) {
            assert_eq!(encode_labels(rows, cols, &labels).unwrap(), data);
            ok += 1;
        }
    }
    assert!(ok >= 1);
}

#[test]
fn weight_seeds() {
    for (name, data) in seeds("parse_weights") {
        let p = parse_weights(text(&data).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_weights(&write_weights(&p)).unwrap(), p);
    }
}

#[test]
fn manifest_seeds() {
    for (name, data) in seeds("read_manifest") {
        let rows = read_manifest(data.as_slice()).unwrap_or_else(|e| panic!("{name}: {e}"));
        let mut out = Vec::new();
        write_manifest(&mut out, &rows).unwrap();
        assert_eq!(read_manifest(out.as_slice()).unwrap(), rows);
    }
}

#[test]
fn path_seeds() {
    let mut ok = 0;
    for (_, data) in seeds("parse_paths") {
        if let Some(Ok(records)) = text(&data).map(parse_paths) {
            assert_eq!(parse_paths(&write_paths(&records)).unwrap(), records);
            ok += 1;
        }
    }
    assert!(ok >= 1);
}

#[test]
fn config_seeds() {
    let results: Vec<_> = seeds("parse_config").into_iter().map(|(n, d)| (n, parse_config(text(&d).unwrap()).is_ok())).collect();
    assert!(results.iter().any(|(_, ok)| *ok));
    assert!(results.iter().any(|(n, ok)| n.starts_with("bad") && !ok));
}
