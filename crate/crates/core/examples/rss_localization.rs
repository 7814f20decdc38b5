// RSS fingerprint localization on the default 20 m x 20 m floor with four
// corner access points.

use nnkit::synth_data::Scenario;

pub fn run_example() -> nnkit::Result<()> {
    for sigma in [0.0, 1.0, 2.0] {
        let scenario = Scenario::default().with_sigma(sigma);
        for run in scenario.localization_trial(&[1, 3, 5], 500, 2024)? {
            println!(
                "sigma={sigma} k={}  median {:.3} m  p90 {:.3} m  max {:.3} m",
                run.k, run.median, run.p90, run.max
            );
        }
    }

    let map = Scenario::default().fingerprint_map(2024)?;
    let reading = map.rss().point(0).to_vec();
    let est = map.localizer()?.locate(&reading, 1)?;
    println!("stored fingerprint of {:?} locates to {est:?}", map.locations()[0]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> nnkit::Result<()> {
    run_example()
}
