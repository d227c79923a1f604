use scissor_core::features::{extract_full_road, segment_dataset, FullRoadFeatures};
use scissor_core::pipeline::PipelineConfig;
use scissor_core::scenario::{generate, GeneratorConfig};
use scissor_core::sim::label_batch;

fn reference() -> PipelineConfig {
    PipelineConfig::new(42).effective()
}

#[test]
fn reference_population_rejection_rate_is_frozen() {
    let g = generate(&reference().generate.generator, 1000).unwrap();
    assert_eq!(g.tests.len(), 1000);
    let rate = g.rejection_rate();
    assert!(rate < 0.30, "rejection rate {rate}");
}

#[test]
fn lengths_and_radii_stay_in_range() {
    let g = generate(&reference().generate.generator, 500).unwrap();
    for t in &g.tests {
        assert!((50.0..=3400.0).contains(&t.path_length()), "{} has length {}", t.id(), t.path_length());
        for s in t.segments().iter().filter(|s| s.is_turn()) {
            assert!((5.0..=47.0).contains(&s.radius()));
        }
    }
}

/// Empirical ranges of the whole-road attributes. Direct distance
/// and the lower radius bounds of median and max are left out: this
/// generator produces straighter long roads and radii down to 5 m.
#[test]
fn full_road_values_inside_reference_ranges() {
    let ranges: [(&str, fn(&FullRoadFeatures) -> f64, f64, f64); 8] = [
        ("length", |f| f.length, 50.6, 3317.9),
        ("num_l_turns", |f| f.num_l_turns as f64, 0.0, 18.0),
        ("num_r_turns", |f| f.num_r_turns as f64, 0.0, 17.0),
        ("num_straight", |f| f.num_straight as f64, 0.0, 11.0),
        ("median_radius", |f| f.median_radius, 5.0, 47.0),
        ("max_radius", |f| f.max_radius, 5.0, 47.0),
        ("min_radius", |f| f.min_radius, 2.0, 47.0),
        ("std_radius", |f| f.std_radius, 0.0, 22.5),
    ];
    let g = generate(&reference().generate.generator, 500).unwrap();
    let mut out_of_range = Vec::new();
    for t in &g.tests {
        let f = extract_full_road(t);
        if f.num_l_turns + f.num_r_turns == 0 {
            continue;
        }
        for (name, get, lo, hi) in ranges {
            let v = get(&f);
            if !(lo..=hi).contains(&v) {
                out_of_range.push(format!("{} {name}={v}", t.id()));
            }
        }
    }
    assert!(out_of_range.is_empty(), "{out_of_range:?}");
}

#[test]
fn unsafe_segments_are_a_small_minority() {
    let cfg = reference();
    let tests = generate(&cfg.generate.generator, 500).unwrap().tests;
    let labeled = label_batch(&tests, &cfg.label.driver).unwrap();
    let d = segment_dataset(&labeled, "af1.5");
    let (safe, unsafe_) = d.class_counts();
    assert!(unsafe_ * 4 < safe, "{unsafe_} unsafe vs {safe} safe segment rows");
}

#[test]
fn safe_execution_cost_is_calibrated() {
    let cfg = reference();
    let tests = generate(&cfg.generate.generator, 500).unwrap().tests;
    let labeled = label_batch(&tests, &cfg.label.driver).unwrap();
    let safe: Vec<f64> = labeled.iter().filter(|t| !t.label.is_unsafe()).map(|t| t.wall_cost).collect();
    let mean = safe.iter().sum::<f64>() / safe.len() as f64;
    assert!((15.0..=40.0).contains(&mean), "mean safe wall cost {mean}");
}

#[test]
fn generated_population_is_seed_stable() {
    let c = GeneratorConfig::default().with_seed(1);
    let a = serde_json::to_string(&generate(&c, 5).unwrap().tests).unwrap();
    let b = serde_json::to_string(&generate(&c, 5).unwrap().tests).unwrap();
    assert_eq!(a, b);
}
