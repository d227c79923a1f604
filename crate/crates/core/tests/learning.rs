use scissor_core::experiments::{build_pool, cross_evaluate, offline_partition, Composition};
use scissor_core::features::{full_road_dataset, FeatureConfig};
use scissor_core::learn::tree::{Node, SplitCriterion, Tree, TreeConfig};
use scissor_core::learn::{evaluate, oversample, split, train, Dataset, LearnConfig, ModelKind, Schema};
use scissor_core::pipeline::PipelineConfig;
use scissor_core::road::{LabeledTest, RoadSegment, TestCase};
use scissor_core::scenario::generate;
use scissor_core::sim::{label_batch, DriverConfig};

fn h(labels: &[bool]) -> f64 {
    let n = labels.len() as f64;
    let p = labels.iter().filter(|&&l| l).count() as f64 / n;
    [p, 1.0 - p].iter().filter(|&&q| q > 0.0).map(|&q| -q * q.log2()).sum()
}

/// (gain, gain ratio, threshold) of the best-gain binary split.
fn best_split(values: &[f64], y: &[bool], min_leaf: usize) -> Option<(f64, f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let n = y.len() as f64;
    let mut best: Option<(f64, f64, f64)> = None;
    for w in v.windows(2) {
        let t = (w[0] + w[1]) / 2.0;
        let (l, r): (Vec<(f64, bool)>, Vec<(f64, bool)>) =
            values.iter().copied().zip(y.iter().copied()).partition(|(x, _)| *x <= t);
        if l.len() < min_leaf || r.len() < min_leaf {
            continue;
        }
        let ly: Vec<bool> = l.iter().map(|p| p.1).collect();
        let ry: Vec<bool> = r.iter().map(|p| p.1).collect();
        let (pl, pr) = (ly.len() as f64 / n, ry.len() as f64 / n);
        let gain = h(y) - pl * h(&ly) - pr * h(&ry);
        let split_info = -pl * pl.log2() - pr * pr.log2();
        if best.is_none_or(|b| gain > b.0 + 1e-12) {
            best = Some((gain, gain / split_info, t));
        }
    }
    best
}

#[test]
fn play_table_root_is_the_gain_ratio_winner() {
    // outlook (sunny 0, overcast 1, rain 2), temperature, humidity, windy
    let rows = [
        ([0.0, 85.0, 85.0, 0.0], false),
        ([0.0, 80.0, 90.0, 1.0], false),
        ([1.0, 83.0, 86.0, 0.0], true),
        ([2.0, 70.0, 96.0, 0.0], true),
        ([2.0, 68.0, 80.0, 0.0], true),
        ([2.0, 65.0, 70.0, 1.0], false),
        ([1.0, 64.0, 65.0, 1.0], true),
        ([0.0, 72.0, 95.0, 0.0], false),
        ([0.0, 69.0, 70.0, 0.0], true),
        ([2.0, 75.0, 80.0, 0.0], true),
        ([0.0, 75.0, 70.0, 1.0], true),
        ([1.0, 72.0, 90.0, 1.0], true),
        ([1.0, 81.0, 75.0, 0.0], true),
        ([2.0, 71.0, 91.0, 1.0], false),
    ];
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.0.to_vec()).collect();
    let y: Vec<bool> = rows.iter().map(|r| r.1).collect();
    let min_leaf = 2;

    let splits: Vec<(usize, (f64, f64, f64))> = (0..4)
        .filter_map(|j| best_split(&x.iter().map(|r| r[j]).collect::<Vec<_>>(), &y, min_leaf).map(|s| (j, s)))
        .filter(|(_, s)| s.0 > 1e-12)
        .collect();
    let avg = splits.iter().map(|(_, s)| s.0).sum::<f64>() / splits.len() as f64;
    let (want, (_, _, t)) = splits
        .iter()
        .filter(|(_, s)| s.0 >= avg - 1e-12)
        .copied()
        .reduce(|a, b| if b.1 .1 > a.1 .1 + 1e-12 { b } else { a })
        .unwrap();

    let cfg = TreeConfig { min_leaf, criterion: SplitCriterion::GainRatio, ..TreeConfig::default() };
    match Tree::fit(&x, &y, &cfg).root {
        Node::Split { feature, threshold, .. } => {
            assert_eq!(feature, want);
            assert!((threshold - t).abs() < 1e-12);
        }
        leaf => panic!("expected a split, got {leaf:?}"),
    }
}

fn fake(safe: usize, unsafe_: usize) -> Vec<LabeledTest> {
    (0..safe + unsafe_)
        .map(|i| {
            let t = TestCase::new(
                format!("t{i:05}"),
                vec![RoadSegment::straight(80.0).unwrap(), RoadSegment::left(40.0, 15.0 + (i % 20) as f64).unwrap()],
            )
            .unwrap();
            let obe = if i >= safe { vec![1] } else { vec![] };
            LabeledTest::new(t, obe, 12.0, 25.0).unwrap()
        })
        .collect()
}

#[test]
fn reference_dataset_split_and_pools() {
    let data = fake(3095, 2543);
    let (train_side, rest) = offline_partition(&data, 0.8, 1).unwrap();
    let count = |v: &[LabeledTest]| {
        let u = v.iter().filter(|t| t.label.is_unsafe()).count();
        (v.len() - u, u)
    };
    assert_eq!(count(&train_side), (2034, 2034));
    assert_eq!(count(&rest), (1061, 509));
    let pools: Vec<(usize, usize)> = Composition::standard()
        .iter()
        .map(|&c| build_pool(&rest, c, 2).unwrap().counts())
        .collect();
    assert_eq!(pools, [(1061, 55), (1061, 265), (763, 509), (218, 509)]);

    let bal = oversample(
        &Dataset::from_matrix(
            Schema::numeric(&["a"]),
            (0..5638).map(|i| vec![i as f64]).collect(),
            &(0..5638).map(|i| i >= 3095).collect::<Vec<_>>(),
        )
        .unwrap(),
        3,
    )
    .unwrap();
    assert_eq!(bal.class_counts(), (3095, 3095));
}

#[test]
fn aggressive_model_transfers_poorly_to_a_calm_driver() {
    let cfg = PipelineConfig::new(42).effective();
    let tests = generate(&cfg.generate.generator, 2000).unwrap().tests;
    let fc = FeatureConfig::default();
    let seed = cfg.label.driver.noise_seed;
    let hot = label_batch(&tests[..1000], &DriverConfig::aggressive(2.0).with_noise_seed(seed)).unwrap();
    let calm = label_batch(&tests[1000..], &DriverConfig::aggressive(1.0).with_noise_seed(seed)).unwrap();
    let hot = full_road_dataset(&hot, "af2", &fc);
    let calm = full_road_dataset(&calm, "af1", &fc);
    let (tr, te) = split(&hot, 0.8, 5).unwrap();
    let m = train(ModelKind::Logistic, &oversample(&tr, 6).unwrap(), &LearnConfig::default(), 7).unwrap();
    let in_domain = evaluate(&m, &te).unwrap().accuracy;
    let cross = cross_evaluate(&m, &calm).unwrap();
    assert_eq!((cross.model_provenance.as_str(), cross.data_provenance.as_str()), ("af2", "af1"));
    assert!(cross.report.accuracy < in_domain, "cross {} vs in-domain {in_domain}", cross.report.accuracy);
}

#[test]
fn features_survive_a_file_round_trip() {
    let cfg = PipelineConfig::new(3).effective();
    let tests = generate(&cfg.generate.generator, 50).unwrap().tests;
    let d = full_road_dataset(&label_batch(&tests, &cfg.label.driver).unwrap(), "af1.5", &FeatureConfig::default());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("features.csv");
    d.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let back = Dataset::read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back, d);
}
