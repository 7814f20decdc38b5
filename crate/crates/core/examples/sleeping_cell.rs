// Sleeping-cell detection from KPI reports (RSRP, RSRQ, SINR, RACH success).

use nnkit::synth_data::gen_sleeping_cell;
use nnkit::{fit, split, MetricKind};

pub fn run_example() -> nnkit::Result<()> {
    let data = gen_sleeping_cell(2024, 1600, 400)?;
    let (train, test) = split(&data, 0.8, 2024)?;
    for k in [1, 5, 9] {
        let report = fit(&train, k, MetricKind::Euclidean)?.evaluate(&test)?;
        let c = &report.confusion;
        let detection = c[1][1] as f64 / (c[1][0] + c[1][1]) as f64;
        let false_alarm = c[0][1] as f64 / (c[0][0] + c[0][1]) as f64;
        println!(
            "k={k}  accuracy {:.3}  detection {:.3}  false alarms {:.3}",
            report.accuracy(),
            detection,
            false_alarm
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> nnkit::Result<()> {
    run_example()
}
