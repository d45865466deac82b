use betacp::analysis::{analyze, holdout_split, AnalysisConfig};
use betacp::conformal::Method;
use betacp::simlab::{generate, Scenario, ScenarioConfig};
use betacp::Dataset;

fn data() -> Dataset {
    generate(&ScenarioConfig::new(Scenario::S3, 120, 31)).unwrap()
}

#[test]
fn holdout_sizes() {
    let (build, test) = holdout_split(183, 0.1, 0).unwrap();
    assert_eq!((build.len(), test.len()), (164, 19));
    let (build, test) = holdout_split(200, 0.1, 0).unwrap();
    assert_eq!((build.len(), test.len()), (180, 20));
    let mut all: Vec<usize> = build.into_iter().chain(test).collect();
    all.sort_unstable();
    assert_eq!(all, (0..200).collect::<Vec<_>>());
    assert!(holdout_split(10, 0.0, 0).is_err());
}

#[test]
fn report_shape_and_envelopes() {
    let cfg = AnalysisConfig {
        seed: 4,
        ..AnalysisConfig::default()
    };
    let rep = analyze(&data(), &cfg).unwrap();
    assert_eq!(rep.construction_size + rep.test_rows.len(), 120);
    assert_eq!(rep.test_rows.len(), 12);
    // 6 combinations x 2 methods, plus union and intersection for each method.
    assert_eq!(rep.summary.len(), 12 + 4);
    assert_eq!(rep.points.len(), 16 * 12);
    for row in &rep.test_rows {
        for method in [Method::Split, Method::Full] {
            let pick = |m: Method| {
                rep.points
                    .iter()
                    .find(|p| p.row == *row && p.method == m && p.score == method.label())
                    .unwrap()
            };
            let (u, i) = (pick(Method::Union), pick(Method::Intersection));
            assert!(i.empty || (u.lower <= i.lower && i.upper <= u.upper));
            assert!(u.upper - u.lower >= if i.empty { 0.0 } else { i.upper - i.lower });
            assert!(!i.covered || u.covered);
        }
    }
    for s in &rep.summary {
        let pts: Vec<_> = rep
            .points
            .iter()
            .filter(|p| p.model == s.model && p.score == s.score && p.method == s.method)
            .collect();
        assert_eq!(pts.len(), s.n_test);
        let cov = pts.iter().filter(|p| p.covered).count() as f64 / pts.len() as f64;
        assert_eq!(cov, s.coverage);
    }
}

#[test]
fn analysis_is_deterministic() {
    let cfg = AnalysisConfig {
        seed: 9,
        methods: vec![Method::Split],
        ..AnalysisConfig::default()
    };
    let d = data();
    assert_eq!(analyze(&d, &cfg).unwrap(), analyze(&d, &cfg).unwrap());
}

#[test]
fn larger_alpha_gives_narrower_intervals() {
    let d = data();
    let width = |alpha: f64| {
        let cfg = AnalysisConfig {
            alpha,
            seed: 2,
            full: betacp::FullConfig::with_alpha(alpha),
            ..AnalysisConfig::default()
        };
        analyze(&d, &cfg)
            .unwrap()
            .summary
            .iter()
            .filter(|s| s.model != "all")
            .map(|s| s.avg_width)
            .sum::<f64>()
    };
    assert!(width(0.5) < width(0.1));
}

#[test]
fn bootstrap_rows_are_added_per_model() {
    let cfg = AnalysisConfig {
        seed: 1,
        methods: vec![Method::Bootstrap],
        bootstrap_draws: 100,
        envelopes: false,
        ..AnalysisConfig::default()
    };
    let rep = analyze(&data(), &cfg).unwrap();
    assert_eq!(rep.summary.len(), 4);
    assert!(rep
        .summary
        .iter()
        .all(|s| s.method == Method::Bootstrap && s.score == "-"));
}
