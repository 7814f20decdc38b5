// Builds the six-point 2-d tree, prints it and runs each query type.

use nnkit::{scan_knn, Dataset, KdTree, MetricKind};

pub fn run_example() -> nnkit::Result<()> {
    let flat = vec![7., 2., 5., 4., 9., 6., 2., 3., 4., 7., 8., 1.];
    let tree = KdTree::build(Dataset::from_flat(flat, 2, MetricKind::Euclidean)?)?;
    tree.audit()?;
    print!("{}", tree.to_text());

    let q = [9., 2.];
    let show = |name: &str, list: &nnkit::NeighborList| {
        let pts: Vec<String> = list
            .iter()
            .map(|n| format!("{:?}@{:.4}", tree.dataset().point(n.index), n.distance))
            .collect();
        println!("{name:<12} {}", pts.join(" "));
    };
    show("nn", &tree.query_nn(&q)?);
    let knn = tree.query_knn(&q, 3)?;
    show("knn k=3", &knn);
    assert_eq!(knn, scan_knn(tree.dataset(), &q, 3)?);
    show("radius 2.5", &tree.query_radius(&q, 2.5)?);
    show("ann eps=0.5", &tree.query_ann(&q, 0.5)?);

    let mut h = tree.handle();
    h.nn(&[3., 4.5])?;
    println!("visited {} of {} nodes for (3, 4.5)", h.last_visited().unwrap_or(0), tree.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> nnkit::Result<()> {
    run_example()
}
