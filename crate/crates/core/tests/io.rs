use proptest::prelude::*;
use std::path::PathBuf;
use symlab::experiment;
use symlab::io::*;

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    paths.iter().map(|p| std::fs::read(p).unwrap()).collect()
}

/// Accepted input re-encodes to the same bytes.
fn canonical(bytes: &[u8]) -> [Option<bool>; 3] {
    [
        decode_grid_function(bytes).ok().map(|u| encode_grid_function(&u) == bytes),
        decode_weight(bytes).ok().map(|w| encode_weight(&w) == bytes),
        decode_time_series(bytes).ok().map(|s| encode_time_series(&s) == bytes),
    ]
}

#[test]
fn checked_in_seeds_decode_and_round_trip() {
    for s in seeds("decode_grid_function") {
        assert_eq!(encode_grid_function(&decode_grid_function(&s).unwrap()), s);
    }
    for s in seeds("decode_weight") {
        assert_eq!(encode_weight(&decode_weight(&s).unwrap()), s);
    }
    for s in seeds("decode_time_series") {
        assert_eq!(encode_time_series(&decode_time_series(&s).unwrap()), s);
    }
    for s in seeds("parse_config") {
        let cfg = experiment::parse(std::str::from_utf8(&s).unwrap()).unwrap();
        assert!(experiment::validate(&cfg).is_empty());
    }
}

#[test]
fn rejects_malformed_headers() {
    let good = &seeds("decode_grid_function")[0];
    let mut bad = good.clone();
    bad[0] = 4; // dimension 4
    assert!(decode_grid_function(&bad).is_err());
    let mut bad = good.clone();
    bad[4] = 6; // size 6 is not a power of two
    assert!(decode_grid_function(&bad).is_err());
    let mut long = good.clone();
    long.push(0);
    assert!(decode_grid_function(&long).is_err());
    let mut nan = good.clone();
    let at = nan.len() - 8;
    nan[at..].copy_from_slice(&f64::NAN.to_le_bytes());
    assert!(decode_grid_function(&nan).is_err());
    // a huge declared size must fail on length, not on allocation
    let mut huge = good.clone();
    huge[4..8].copy_from_slice(&(1u32 << 31).to_le_bytes());
    assert!(decode_grid_function(&huge).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, ..ProptestConfig::default() })]

    #[test]
    fn mutated_seeds_never_panic_and_stay_canonical(
        pick in 0usize..7,
        edits in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..6),
    ) {
        let all: Vec<Vec<u8>> = ["decode_grid_function", "decode_weight", "decode_time_series"].iter().flat_map(|t| seeds(t)).collect();
        let mut bytes = all[pick % all.len()].clone();
        for (i, b) in edits {
            let k = i.index(bytes.len());
            bytes[k] = b;
        }
        for ok in canonical(&bytes).into_iter().flatten() {
            prop_assert!(ok);
        }
    }

    #[test]
    fn arbitrary_config_text_never_panics(text in "\\PC{0,200}") {
        if let Ok(cfg) = experiment::parse(&text) {
            let _ = experiment::validate(&cfg);
        }
    }
}
