use nnkit::synth_data::seeded_rng;
use nnkit::{Dataset, KdTree, MetricKind};
use rand::Rng;

fn uniform_tree(n: usize, seed: u64) -> KdTree {
    let mut rng = seeded_rng(seed, 0);
    let flat = (0..2 * n).map(|_| rng.random::<f64>()).collect();
    KdTree::build(Dataset::from_flat(flat, 2, MetricKind::Euclidean).unwrap()).unwrap()
}

#[test]
fn depth_of_a_million_point_tree() {
    let n = 1 << 20;
    let tree = uniform_tree(n, 1);
    let s = tree.tree_stats();
    assert_eq!(s.nodes, n);
    assert!(s.depth <= 21, "depth {}", s.depth);
    // upper bound of the median-split recurrence
    assert!(s.build_comparisons as f64 <= 2.0 * n as f64 * (n as f64).log2() * (n as f64).log2());
}

#[test]
fn visited_nodes_at_one_million() {
    let n = 1_000_000;
    let tree = uniform_tree(n, 2);
    let mut rng = seeded_rng(2, 1);
    let mut h = tree.handle();
    let mut total = 0;
    let queries = 500;
    for _ in 0..queries {
        let q = [rng.random::<f64>(), rng.random::<f64>()];
        h.nn(&q).unwrap();
        total += h.last_visited().unwrap();
    }
    let mean = total as f64 / queries as f64;
    assert!(mean < n as f64 / 100.0, "mean visited {mean}");
    assert_eq!(h.stats().depth, tree.tree_stats().depth);
}
