//! Golden-file round trip for the index format. Set `GAKIT_BLESS=1` to
//! rewrite the committed file after an intentional format change.

use std::fs;
use std::path::PathBuf;

use gakit::persist::{decode_index, encode_index, sidecar_path};
use gakit::{build_index, load_index, save_index, Error, IndexInput, KernelConfig, RetrievalIndex};

fn golden_path() -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", "golden_index.sgix"]
        .iter()
        .collect()
}

/// 100 entries, dim 8, built from a closed-form recipe.
fn golden_index() -> RetrievalIndex {
    let inputs = (0..100)
        .map(|i| {
            let rep = (0..8)
                .map(|k| ((i * 8 + k) as f64 * 0.37).sin() + if k == i % 8 { 1.5 } else { 0.0 })
                .collect();
            let meta = if i % 3 == 0 {
                String::new()
            } else {
                format!("caption {i} ✓")
            };
            IndexInput::new(format!("doc-{i:03}"), rep, meta)
        })
        .collect();
    build_index(inputs, &KernelConfig::default())
        .unwrap()
        .with_created_at(1_700_000_000)
}

#[test]
fn golden_round_trip_is_byte_exact() {
    let idx = golden_index();
    let bytes = encode_index(&idx);
    let path = golden_path();
    if std::env::var_os("GAKIT_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        save_index(&idx, &path).unwrap();
    }
    let golden = fs::read(&path).expect("golden file present; run with GAKIT_BLESS=1 to create");
    assert_eq!(bytes, golden);

    let loaded = load_index(&path).unwrap();
    assert_eq!(loaded, idx);
    assert_eq!(loaded.config_fingerprint(), KernelConfig::default().fingerprint());
    assert_eq!(encode_index(&loaded), golden);

    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("copy.sgix");
    save_index(&loaded, &copy).unwrap();
    assert_eq!(fs::read(&copy).unwrap(), golden);
    assert_eq!(
        fs::read(sidecar_path(&copy)).unwrap(),
        fs::read(sidecar_path(&path)).unwrap()
    );
}

#[test]
fn every_single_bit_flip_is_detected() {
    let golden = encode_index(&golden_index());
    for byte in 0..golden.len() {
        for bit in 0..8 {
            let mut b = golden.clone();
            b[byte] ^= 1 << bit;
            match decode_index(&b) {
                Err(Error::BadMagic) => assert!(byte < 4),
                Err(Error::VersionMismatch(_)) => assert!((4..8).contains(&byte)),
                Err(Error::ChecksumMismatch) => assert!(byte >= 8),
                other => panic!("flip at byte {byte} bit {bit}: {other:?}"),
            }
        }
    }
}

#[test]
fn truncation_and_extension_are_detected() {
    let golden = encode_index(&golden_index());
    for cut in [golden.len() - 1, golden.len() - 4, golden.len() / 2, 9] {
        assert!(matches!(decode_index(&golden[..cut]), Err(Error::ChecksumMismatch)));
    }
    let mut longer = golden.clone();
    longer.push(0);
    assert!(decode_index(&longer).is_err());
}
