//! End to end through the public API: manifest, corpus, dataset files,
//! training, model files and scanning.

use std::fs;

use oglasses_core::classifiers::{build_cnn, build_mlp, predict, train};
use oglasses_core::dataset::{build_corpus, read_dataset, write_dataset, CorpusManifest, Dataset, DatasetKind};
use oglasses_core::nn::{load_model, save_model};
use oglasses_core::visualize::{render_classification, scan};
use oglasses_core::{Classifier, Decision, Label, TrainConfig, DEFAULT_SEED};

fn code(len: usize) -> Vec<u8> {
    const BODY: &[u8] = &[
        0x55, 0x89, 0xE5, 0x53, 0x83, 0xEC, 0x14, 0x8B, 0x45, 0x08, 0x8B, 0x55, 0x0C, 0x01, 0xD0,
        0x89, 0x45, 0xF4, 0xE8, 0x00, 0x00, 0x00, 0x00, 0x8B, 0x5D, 0xFC, 0xC9, 0xC3,
    ];
    BODY.iter().copied().cycle().take(len).collect()
}

fn text(len: usize) -> Vec<u8> {
    b"the quick brown fox jumps over the lazy dog; ".iter().copied().cycle().take(len).collect()
}

#[test]
fn corpus_to_scan() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.bin"), code(8192)).unwrap();
    fs::write(dir.path().join("b.txt"), text(8192)).unwrap();
    let manifest =
        CorpusManifest::parse("Program\tsynthetic\ta.bin\nOthers\tprose\tb.txt\n", dir.path()).unwrap();
    let corpus = build_corpus(&manifest, DEFAULT_SEED, false);
    assert!(corpus.failures.is_empty(), "{:?}", corpus.failures);

    let code_set = Dataset::new(DatasetKind::Code, DEFAULT_SEED, corpus.code_samples());
    let path = dir.path().join("code.ogds");
    write_dataset(&code_set, &path).unwrap();
    let back = read_dataset(&path).unwrap();
    assert_eq!(back, code_set);
    let (p, o) = back.label_counts();
    assert!(p > 0 && o > 0);

    let cfg = TrainConfig { epochs: 40, batch_size: 16, ..TrainConfig::default() };
    let mut net = build_cnn(3);
    let curve = train(&mut net, &back.samples, None, &cfg).unwrap();
    assert_eq!(curve.epochs(), 40);
    let predicted = predict(&net, &back.samples, false).unwrap();
    let right = predicted.iter().zip(&back.samples).filter(|(l, s)| **l == s.label).count();
    assert_eq!(right, back.samples.len(), "two trivially separable sources");

    let model = dir.path().join("cnn.ognn");
    save_model(&net, &model).unwrap();
    let clf = Classifier::from_network(load_model(&model).unwrap()).unwrap();
    assert!(matches!(clf, Classifier::Cnn(_)));

    let mut file = text(3000);
    file.extend(code(3000));
    file.extend(text(3000));
    let report = scan(&file, &clf, false).unwrap();
    assert_eq!(report.decisions.len(), file.len());
    assert_eq!(report, scan(&file, &Classifier::Cnn(net), true).unwrap());
    assert!(report.program_fraction(3200..5800) > 0.9);
    assert!(report.program_fraction(0..2800) < 0.1);
    assert_eq!(report.decisions.last(), Some(&Decision::Undecodable));
    let img = render_classification(&report, 100).unwrap();
    assert_eq!((img.width(), img.height()), (100, 90));
}

#[test]
fn mlp_model_file_keeps_its_kind() {
    let dir = tempfile::tempdir().unwrap();
    let net = build_mlp(5);
    let path = dir.path().join("mlp.ognn");
    save_model(&net, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, net);
    let clf = Classifier::from_network(loaded).unwrap();
    assert!(matches!(clf, Classifier::Mlp(_)));
    let out = clf.classify(&[[0u8; 256], [0x90; 256]], false).unwrap();
    assert_eq!(out.len(), 2);
    assert!(out.iter().all(|l| matches!(l, Label::Program | Label::Others)));
}
