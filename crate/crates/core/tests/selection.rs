use scissor_core::experiments::{
    build_pool, merge_reports, run_repetitions, Composition, Experiment, Report, RepetitionSpec, SelectionSummary,
    Selector,
};
use scissor_core::par::Exec;
use scissor_core::road::{LabeledTest, RoadSegment, TestCase};

fn fake(safe: usize, unsafe_: usize) -> Vec<LabeledTest> {
    (0..safe + unsafe_)
        .map(|i| {
            let t = TestCase::new(
                format!("s{i:05}"),
                vec![RoadSegment::straight(70.0).unwrap(), RoadSegment::right(60.0, 12.0 + (i % 9) as f64).unwrap()],
            )
            .unwrap();
            let obe = if i >= safe { vec![1] } else { vec![] };
            LabeledTest::new(t, obe, 10.0, if i >= safe { 18.0 } else { 24.0 }).unwrap()
        })
        .collect()
}

fn spec(experiment: Experiment, target: usize) -> RepetitionSpec {
    RepetitionSpec { experiment, target, reps: 30, master_seed: 17 }
}

#[test]
fn baseline_fix_tracks_pool_prevalence() {
    let data = fake(1400, 600);
    let pool = build_pool(&data, Composition::new(0.7).unwrap(), 1).unwrap();
    let r = run_repetitions(Exec::default(), &pool, &Selector::baseline(), spec(Experiment::Fix, 100)).unwrap();
    let mean = r.mean(|run| run.unsafe_ratio());
    assert!((0.25..=0.35).contains(&mean), "mean unsafe ratio {mean}");
}

#[test]
fn baseline_reach_draws_fall_with_prevalence() {
    let data = fake(1061, 509);
    let drawn = |safe: f64| {
        let pool = build_pool(&data, Composition::new(safe).unwrap(), 2).unwrap();
        run_repetitions(Exec::default(), &pool, &Selector::baseline(), spec(Experiment::Reach, 10))
            .unwrap()
            .mean(|run| run.drawn as f64)
    };
    let (rare, common) = (drawn(0.95), drawn(0.3));
    assert!(common * 5.0 < rare, "{common} draws at 70% unsafe vs {rare} at 5%");
}

#[test]
fn summaries_are_hand_averages_and_merge_keeps_sections() {
    let data = fake(300, 100);
    let pool = build_pool(&data, Composition::new(0.8).unwrap(), 3).unwrap();
    let fix = run_repetitions(Exec::default(), &pool, &Selector::baseline(), spec(Experiment::Fix, 10)).unwrap();
    let reach = run_repetitions(Exec::default(), &pool, &Selector::oracle(&pool), spec(Experiment::Reach, 10)).unwrap();
    let s = SelectionSummary::from_repetitions(&fix);
    let hand = fix.runs.iter().map(|r| r.drawn as f64).sum::<f64>() / 30.0;
    assert!((s.mean.drawn - hand).abs() < 1e-12);
    let hand = fix.runs.iter().map(|r| r.time_safe_s).sum::<f64>() / 30.0;
    assert!((s.mean.time_safe_s - hand).abs() < 1e-9);

    let one = Report { selection: vec![s.clone()], ..Report::default() };
    let two = Report { selection: vec![SelectionSummary::from_repetitions(&reach)], ..Report::default() };
    assert_eq!(merge_reports(std::slice::from_ref(&one)).unwrap(), one);
    let merged = merge_reports(&[one, two]).unwrap();
    let kinds: Vec<(&str, &str)> = merged.selection.iter().map(|s| (s.experiment.as_str(), s.strategy.as_str())).collect();
    assert_eq!(kinds, [("fix", "baseline"), ("reach", "oracle")]);

    let mut csv = Vec::new();
    merged.write_selection_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * (30 + 2));
    assert!(text.lines().next().unwrap().starts_with("experiment,strategy,pool"));
}
