use std::fs;

use emotrans::tensor_store::{read_manifest, write_manifest, EmbeddingStore, MANIFEST_FILE};
use emotrans::Error;
use emotrans_core::EmbeddingMatrix;
use proptest::prelude::*;
use serde_json::Value;

fn two_by_three() -> EmbeddingMatrix {
    EmbeddingMatrix::new(
        "utterances",
        2,
        3,
        vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        vec!["c1#0".into(), "c1#1".into()],
    )
    .unwrap()
}

#[test]
fn two_by_three_writes_24_bytes_and_shape() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(&[two_by_three()], dir.path()).unwrap();
    assert_eq!(manifest, dir.path().join(MANIFEST_FILE));
    assert_eq!(
        fs::metadata(dir.path().join("utterances.bin"))
            .unwrap()
            .len(),
        24
    );
    let json: Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(json["version"], 1);
    assert_eq!(json["tensors"][0]["shape"], serde_json::json!([2, 3]));
    assert_eq!(json["tensors"][0]["dtype"], "f32");
    assert_eq!(
        json["tensors"][0]["row_keys"],
        serde_json::json!(["c1#0", "c1#1"])
    );
}

#[test]
fn bin_layout_is_row_major_little_endian() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(&[two_by_three()], dir.path()).unwrap();
    let bytes = fs::read(dir.path().join("utterances.bin")).unwrap();
    let expected: Vec<u8> = [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0]
        .iter()
        .flat_map(|x| x.to_le_bytes())
        .collect();
    assert_eq!(bytes, expected);
}

#[test]
fn empty_list_writes_empty_tensor_array() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(&[], dir.path()).unwrap();
    let json: Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(json["tensors"], serde_json::json!([]));
    assert!(read_manifest(dir.path()).unwrap().is_empty());
}

#[test]
fn round_trip_keeps_nan_payloads_and_infinities() {
    let specials = [
        f32::from_bits(0x7fc0_0001),
        f32::from_bits(0xffc1_2345),
        f32::from_bits(0x7f80_0001),
        f32::INFINITY,
        f32::NEG_INFINITY,
        -0.0,
        f32::MIN_POSITIVE / 2.0,
        f32::MAX,
    ];
    let m =
        EmbeddingMatrix::new("odd", 2, 4, specials.to_vec(), vec!["a".into(), "b".into()]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_manifest(std::slice::from_ref(&m), dir.path()).unwrap();
    let back = read_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(back.len(), 1);
    assert!(back[0].bit_eq(&m));
    let bits: Vec<u32> = back[0].data.iter().map(|x| x.to_bits()).collect();
    let want: Vec<u32> = specials.iter().map(|x| x.to_bits()).collect();
    assert_eq!(bits, want);
}

#[test]
fn short_bin_file_is_corruption() {
    let dir = tempfile::tempdir().unwrap();
    write_manifest(&[two_by_three()], dir.path()).unwrap();
    let bin = dir.path().join("utterances.bin");
    let bytes = fs::read(&bin).unwrap();
    fs::write(&bin, &bytes[..20]).unwrap();
    match read_manifest(dir.path()) {
        Err(Error::Corruption {
            expected, found, ..
        }) => {
            assert_eq!((expected, found), (24, 20));
        }
        other => panic!("expected corruption, got {other:?}"),
    }
}

#[test]
fn f64_dtype_is_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(&[two_by_three()], dir.path()).unwrap();
    let text = fs::read_to_string(&manifest)
        .unwrap()
        .replace("\"f32\"", "\"f64\"");
    fs::write(&manifest, text).unwrap();
    assert!(matches!(
        read_manifest(dir.path()),
        Err(Error::Format { .. })
    ));
}

#[test]
fn dimension_mismatch_is_format_error() {
    let other =
        EmbeddingMatrix::new("prototypes.full2", 1, 2, vec![0.5, 0.5], vec!["joy".into()]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        write_manifest(&[two_by_three(), other], dir.path()),
        Err(Error::Format { .. })
    ));
}

#[test]
fn missing_manifest_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        read_manifest(&dir.path().join("nope")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn store_looks_up_utterances_and_prototypes() {
    let protos = EmbeddingMatrix::new(
        "prototypes.full2",
        2,
        3,
        vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        vec!["Joy".into(), "anger".into()],
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_manifest(&[two_by_three(), protos], dir.path()).unwrap();
    let store = EmbeddingStore::open(dir.path()).unwrap();
    assert_eq!(store.dim(), Some(3));
    let rows = store.utterance_rows(&["c1#1", "c1#0"]).unwrap();
    assert_eq!(rows.as_slice(), &[4.0, 5.0, 6.0, 1.0, 2.0, 3.0]);
    let p = store
        .prototype_rows("prototypes.full2", &["anger", " JOY "])
        .unwrap();
    assert_eq!(p.as_slice(), &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    assert!(matches!(
        store.utterance_rows(&["c9#0"]),
        Err(Error::MissingRow { .. })
    ));
    assert!(matches!(
        store.prototype_rows("prototypes.dict", &["joy"]),
        Err(Error::MissingTensor { .. })
    ));
}

fn matrices() -> impl Strategy<Value = Vec<EmbeddingMatrix>> {
    (1usize..5).prop_flat_map(|dim| {
        prop::collection::vec(
            (0usize..4).prop_flat_map(move |rows| prop::collection::vec(any::<u32>(), rows * dim)),
            0..4,
        )
        .prop_map(move |tensors| {
            tensors
                .into_iter()
                .enumerate()
                .map(|(t, bits)| {
                    let rows = bits.len() / dim;
                    let keys = (0..rows).map(|r| format!("t{t}#{r}")).collect();
                    let data = bits.into_iter().map(f32::from_bits).collect();
                    EmbeddingMatrix::new(format!("tensor{t}"), rows, dim, data, keys).unwrap()
                })
                .collect()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn read_after_write_is_bit_identical(ms in matrices()) {
        let dir = tempfile::tempdir().unwrap();
        write_manifest(&ms, dir.path()).unwrap();
        let back = read_manifest(dir.path()).unwrap();
        prop_assert_eq!(back.len(), ms.len());
        for (a, b) in ms.iter().zip(&back) {
            prop_assert!(a.bit_eq(b));
            prop_assert_eq!(&a.name, &b.name);
        }
    }
}
