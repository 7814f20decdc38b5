// Line-of-sight vs non-line-of-sight classification on synthetic ranging
// features, sweeping k and comparing the tree and scan backends.

use nnkit::classifier::{fit_with_backend, Backend};
use nnkit::synth_data::gen_los_nlos;
use nnkit::{fit, split, MetricKind};

pub fn run_example() -> nnkit::Result<()> {
    let data = gen_los_nlos(2024, 500, 500)?;
    let (train, test) = split(&data, 0.8, 2024)?;
    println!("train {} / test {}", train.len(), test.len());

    for k in [1, 3, 5, 7] {
        let report = fit(&train, k, MetricKind::Euclidean)?.evaluate(&test)?;
        println!("k={k}  accuracy {:.3}  confusion {:?}", report.accuracy(), report.confusion);
    }

    let tree = fit_with_backend(&train, 5, MetricKind::Euclidean, Backend::KdTree)?;
    let scan = fit_with_backend(&train, 5, MetricKind::Euclidean, Backend::LinearScan)?;
    let q = [-68.0, 0.9];
    println!("query {q:?}: tree says {}, scan says {}", tree.predict(&q)?, scan.predict(&q)?);
    assert_eq!(tree.predict(&q)?, scan.predict(&q)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> nnkit::Result<()> {
    run_example()
}
