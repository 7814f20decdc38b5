// Euclidean minimum spanning tree and diameter of a small random cloud.

use nnkit::synth_data::seeded_rng;
use nnkit::{diameter, mst, Dataset, MetricKind};
use rand::Rng;

pub fn run_example() -> nnkit::Result<()> {
    let mut rng = seeded_rng(3, 0);
    let flat: Vec<f64> = (0..2 * 12).map(|_| rng.random_range(0.0..10.0)).collect();
    let ds = Dataset::from_flat(flat, 2, MetricKind::Euclidean)?;

    let edges = mst(&ds);
    println!("MST: {} edges, total weight {:.4}", edges.len(), edges.total_weight());
    let mut csv = Vec::new();
    edges.write_csv(&mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));

    let d = diameter(&ds)?;
    println!(
        "diameter: {:?} to {:?}, length {:.4}",
        ds.point(d.i),
        ds.point(d.j),
        d.weight
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> nnkit::Result<()> {
    run_example()
}
