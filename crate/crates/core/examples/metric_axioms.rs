// Checks positivity, symmetry and the triangle inequality for each built-in
// metric on a random sample, then shows squared Euclidean distance failing.

use nnkit::metrics::check_axioms_with;
use nnkit::synth_data::seeded_rng;
use nnkit::{check_metric_axioms, MetricKind, Point};
use rand::Rng;

pub fn run_example() -> nnkit::Result<()> {
    let mut rng = seeded_rng(7, 0);
    let sample: Vec<Point> = (0..30)
        .map(|_| Point::new((0..3).map(|_| rng.random_range(-10.0..10.0)).collect()))
        .collect::<nnkit::Result<_>>()?;

    for metric in [
        MetricKind::Euclidean,
        MetricKind::Manhattan,
        MetricKind::Chebyshev,
        MetricKind::minkowski(3.0)?,
    ] {
        let report = check_metric_axioms(metric, &sample)?;
        println!("{metric:<14} all axioms hold: {}", report.all_hold());
        assert!(report.all_hold());
    }

    let line = ["0", "1", "2"].map(|x| x.parse::<Point>());
    let line: Vec<Point> = line.into_iter().collect::<nnkit::Result<_>>()?;
    let squared = |a: &[f64], b: &[f64]| {
        let d = MetricKind::Euclidean.dist(a, b);
        d * d
    };
    let report = check_axioms_with(&line, squared)?;
    println!("squared euclidean triangle holds: {}", report.triangle);
    if let Some(c) = &report.counterexample {
        println!("  counterexample {c:?}");
    }
    assert!(!report.triangle);
    Ok(())
}

#[allow(dead_code)]
fn main() -> nnkit::Result<()> {
    run_example()
}
