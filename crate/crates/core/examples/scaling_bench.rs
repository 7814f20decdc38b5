// Visited-node counts for exact NN as n grows, in 2 and 8 dimensions.

use nnkit::cli::bench_size;

pub fn run_example() -> nnkit::Result<()> {
    for dim in [2, 8] {
        let mut prev: Option<f64> = None;
        for n in [1_000, 10_000, 100_000] {
            let row = bench_size(n, dim, 200, 2024, false)?;
            let growth = prev.map_or(String::new(), |p| format!("  growth x{:.2}", row.mean_visited / p));
            println!(
                "d={dim} n={n:>6}  depth {:>2}  visited {:>9.1} ({:.3}% of n){growth}",
                row.depth,
                row.mean_visited,
                100.0 * row.mean_visited / n as f64
            );
            prev = Some(row.mean_visited);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> nnkit::Result<()> {
    run_example()
}
