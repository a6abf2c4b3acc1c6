use smkl::data_io::{load_dense_matrix, load_labels, split_labeled, write_labels, write_matrix};
use smkl::synthetic::{three_blobs, two_moons};
use smkl::{
    build_bank, clustering_accuracy, evaluate, fit_clustering, fit_ssl, EvalMode, KernelBank, Recipe,
    SolverConfig,
};

#[test]
fn files_to_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let blobs = three_blobs(90, 3).unwrap();
    write_matrix(dir.path().join("x.csv"), blobs.data.values(), ',').unwrap();
    write_labels(dir.path().join("y.txt"), &blobs.classes).unwrap();

    let data = load_dense_matrix(dir.path().join("x.csv"), ',').unwrap();
    let truth = load_labels(dir.path().join("y.txt"), data.nrows()).unwrap();
    let bank = build_bank(&data, &Recipe::Clustering12).unwrap();
    bank.save(dir.path().join("bank")).unwrap();
    let bank = KernelBank::load(dir.path().join("bank")).unwrap();
    assert_eq!(bank.len(), 12);

    let cfg = SolverConfig::default().with_clusters(truth.num_classes());
    let fit = fit_clustering(&bank, &cfg).unwrap();
    assert_eq!(fit.labels.len(), 90);
    assert!(clustering_accuracy(&fit.labels, &blobs.classes).unwrap() >= 0.95);
    assert!(fit.weights.iter().all(|w| w.is_finite() && *w > 0.0));
}

#[test]
fn moons_with_few_labels() {
    let moons = two_moons(120, 0.05, 4).unwrap();
    let truth = smkl::LabelVector::from_classes(&moons.classes).unwrap();
    let bank = build_bank(&moons.data, &Recipe::Ssl7).unwrap();
    let mask = split_labeled(&truth, 0.1, 4).unwrap();
    let mut cfg = SolverConfig::default();
    cfg.alpha = 0.01;
    cfg.gamma = 0.1;
    let fit = fit_ssl(&bank, &truth, &mask, &cfg).unwrap();
    for &i in mask.labeled() {
        assert_eq!(Some(fit.labels[i]), truth.class_of(i));
    }
    let report = evaluate(&fit.labels, &moons.classes, Some(mask.unlabeled()), EvalMode::Ssl).unwrap();
    assert!(report.acc >= 0.85, "acc {}", report.acc);
}
