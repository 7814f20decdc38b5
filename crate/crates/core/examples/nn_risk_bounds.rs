// 1-NN error on a two-class Gaussian mixture with known Bayes risk, against
// the asymptotic nearest-neighbor bounds.

use nnkit::synth_data::gen_gaussian_mixture;
use nnkit::{bayes_bounds, fit, split, MetricKind};

pub fn run_example() -> nnkit::Result<()> {
    let (lo, hi) = bayes_bounds(0.1, 2)?;
    println!("R*=0.1, M=2 -> [{lo}, {hi:.4}]");

    let mut rates = Vec::new();
    for run in 0..5 {
        let (data, r_star) = gen_gaussian_mixture(2.0, 2, 4000, run)?;
        let (train, test) = split(&data, 0.5, run)?;
        let report = fit(&train, 1, MetricKind::Euclidean)?
            .evaluate(&test)?
            .with_bayes_risk(r_star)?;
        println!(
            "run {run}: 1-NN error {:.4}, bounds [{:.4}, {:.4}]",
            report.error_rate,
            report.bound_low.unwrap_or(f64::NAN),
            report.bound_high.unwrap_or(f64::NAN)
        );
        rates.push(report.error_rate);
    }
    println!("mean error {:.4}", rates.iter().sum::<f64>() / rates.len() as f64);
    Ok(())
}

#[allow(dead_code)]
fn main() -> nnkit::Result<()> {
    run_example()
}
