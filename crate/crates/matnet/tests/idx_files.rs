use matnet::mnist::{encode_images, encode_labels, write_idx, IMAGE_MAGIC, LABEL_MAGIC};
use matnet::{mnist_load, mnist_subset, MnistError};
use std::fs;

fn fixture_images() -> Vec<Vec<u8>> {
    vec![
        vec![0, 51, 102, 153, 204, 255, 1, 2, 3],
        vec![9, 8, 7, 6, 5, 4, 3, 2, 1],
    ]
}

#[test]
fn written_files_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
    write_idx(&img, &lab, &fixture_images(), &[3, 0], 3, 3).unwrap();
    let set = mnist_load(&img, &lab).unwrap();
    assert_eq!(set.labels, vec![3, 0]);
    for (parsed, raw) in set.images.iter().zip(fixture_images()) {
        let expected: Vec<f64> = raw.iter().map(|&b| f64::from(b) / 255.0).collect();
        assert_eq!(parsed, &expected);
    }
    assert_eq!(set.images[0][1], 0.2);
    assert_eq!(fs::read(&img).unwrap(), encode_images(&fixture_images(), 3, 3));
}

#[test]
fn swapped_paths_name_the_file_and_magic() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
    write_idx(&img, &lab, &fixture_images(), &[3, 0], 3, 3).unwrap();
    let err = mnist_load(&img, &img).unwrap_err();
    match &err {
        MnistError::Magic { file, expected, found } => {
            assert_eq!((*expected, *found), (LABEL_MAGIC, IMAGE_MAGIC));
            assert!(file.ends_with("img"));
        }
        other => panic!("{other:?}"),
    }
    assert!(err.to_string().contains("2051"));
}

#[test]
fn truncated_file_is_a_length_error() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
    let mut bytes = encode_images(&fixture_images(), 3, 3);
    bytes.truncate(bytes.len() - 4);
    fs::write(&img, bytes).unwrap();
    fs::write(&lab, encode_labels(&[3, 0])).unwrap();
    assert!(matches!(mnist_load(&img, &lab), Err(MnistError::Length { .. })));
}

#[test]
fn missing_file_is_io() {
    let dir = tempfile::tempdir().unwrap();
    let err = mnist_load(dir.path().join("nope"), dir.path().join("nope2")).unwrap_err();
    assert!(matches!(err, MnistError::Io { .. }));
}

#[test]
fn bundled_excerpt_has_the_expected_subsets() {
    let data = matnet::config::bundled_mnist_dir();
    let train = mnist_load(
        data.join("train-images-idx3-ubyte"),
        data.join("train-labels-idx1-ubyte"),
    )
    .unwrap();
    let test = mnist_load(data.join("t10k-images-idx3-ubyte"), data.join("t10k-labels-idx1-ubyte")).unwrap();
    assert_eq!((train.rows, train.cols), (28, 28));
    assert!(train.images.iter().flatten().all(|p| (0.0..=1.0).contains(p)));
    let d = mnist_subset(&train, &[0, 1, 2], 10).unwrap();
    assert_eq!(d.len(), 30);
    assert_eq!(d.samples()[0].target, vec![1.0, 0.0, 0.0]);
    assert_eq!(mnist_subset(&test, &[0, 1, 2], 100).unwrap().len(), 300);
    assert!(mnist_subset(&test, &[0, 1, 2], 101).is_err());
}
