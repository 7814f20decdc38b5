use nnkit::classifier::{fit_with_backend, Backend};
use nnkit::linear_scan::NeighborSearch;
use nnkit::{
    diameter, fit, mst, scan_knn, scan_nn, scan_radius, Dataset, KdTree, Label, MetricKind, TrainingSet,
};
use proptest::prelude::*;

fn metric_strategy() -> impl Strategy<Value = MetricKind> {
    prop_oneof![
        Just(MetricKind::Euclidean),
        Just(MetricKind::Manhattan),
        Just(MetricKind::Chebyshev),
        (1.0f64..4.0).prop_map(|p| MetricKind::minkowski(p).unwrap()),
    ]
}

/// Points on a coarse lattice (many ties and duplicates) or continuous.
fn dataset_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=4, 1usize..=max_n, any::<bool>()).prop_flat_map(|(d, n, lattice)| {
        let coord = if lattice {
            (0i32..5).prop_map(f64::from).boxed()
        } else {
            (-100.0f64..100.0).boxed()
        };
        (Just(d), prop::collection::vec(coord, n * d))
    })
}

/// Full sort of all distances, the definition of k-NN.
fn sort_oracle(ds: &Dataset, q: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = (0..ds.len()).map(|i| (i, ds.metric().dist(q, ds.point(i)))).collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn labeled(flat: Vec<f64>, d: usize, labels: Vec<u32>) -> TrainingSet {
    let ds = Dataset::from_flat(flat, d, MetricKind::Euclidean)
        .unwrap()
        .set_labels(labels.into_iter().map(|l| Label::new(l).unwrap()).collect())
        .unwrap();
    TrainingSet::new(ds).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tree_matches_scan((d, flat) in dataset_strategy(300), metric in metric_strategy(),
                         qseed in prop::collection::vec(-110.0f64..110.0, 4), k in 1usize..8, rho in 0.0f64..60.0) {
        let ds = Dataset::from_flat(flat, d, metric).unwrap();
        let tree = KdTree::build(ds.clone()).unwrap();
        tree.audit().unwrap();
        let q = &qseed[..d];
        prop_assert_eq!(tree.query_nn(q).unwrap(), scan_nn(&ds, q).unwrap());
        prop_assert_eq!(tree.query_knn(q, k).unwrap(), scan_knn(&ds, q, k).unwrap());
        prop_assert_eq!(tree.query_radius(q, rho).unwrap(), scan_radius(&ds, q, rho).unwrap());
        // a stored point as query puts boundary ties everywhere
        let stored = ds.point(0).to_vec();
        let r = tree.query_knn(&stored, k).unwrap();
        prop_assert_eq!(&r, &scan_knn(&ds, &stored, k).unwrap());
        let edge = r[r.len() - 1].distance;
        prop_assert_eq!(tree.query_radius(&stored, edge).unwrap(), scan_radius(&ds, &stored, edge).unwrap());
    }

    #[test]
    fn scan_matches_full_sort((d, flat) in dataset_strategy(200), metric in metric_strategy(),
                              qseed in prop::collection::vec(-110.0f64..110.0, 4), k in 1usize..10) {
        let ds = Dataset::from_flat(flat, d, metric).unwrap();
        let q = &qseed[..d];
        let got: Vec<(usize, f64)> = ds.knn(q, k).unwrap().iter().map(|n| (n.index, n.distance)).collect();
        prop_assert_eq!(got, sort_oracle(&ds, q, k));
    }

    #[test]
    fn ann_within_factor((d, flat) in dataset_strategy(300), eps in 0.0f64..2.0,
                         qseed in prop::collection::vec(-110.0f64..110.0, 4)) {
        let ds = Dataset::from_flat(flat, d, MetricKind::Euclidean).unwrap();
        let tree = KdTree::build(ds.clone()).unwrap();
        let q = &qseed[..d];
        let got = tree.query_ann(q, eps).unwrap()[0].distance;
        let exact = scan_nn(&ds, q).unwrap()[0].distance;
        prop_assert!(got <= (1.0 + eps) * exact);
    }

    #[test]
    fn metric_axioms_on_triples(metric in metric_strategy(), d in 1usize..6,
                                raw in prop::collection::vec(-1e3f64..1e3, 18)) {
        let (a, rest) = raw.split_at(d);
        let (b, rest) = rest.split_at(d);
        let c = &rest[..d];
        let tol = 1e-9;
        let (ab, ba, bc, ac) = (metric.dist(a, b), metric.dist(b, a), metric.dist(b, c), metric.dist(a, c));
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(metric.dist(a, a), 0.0);
        prop_assert!((ab - ba).abs() <= tol * ab.max(1.0));
        prop_assert!(ac <= (ab + bc) * (1.0 + tol) + tol);
    }

    #[test]
    fn classifier_invariant_under_power_of_two_scaling(
        pts in prop::collection::vec((0i32..64, 0i32..64, 1u32..=3), 12..60),
        shift in (-1000i32..1000, -1000i32..1000), scale in (-6i32..6, -6i32..6),
        queries in prop::collection::vec((0i32..64, 0i32..64), 1..10), k in 1usize..6)
    {
        prop_assume!(pts.iter().map(|p| p.2).max() >= Some(2));
        let (s0, s1) = (2f64.powi(scale.0), 2f64.powi(scale.1));
        let (b0, b1) = (f64::from(shift.0), f64::from(shift.1));
        let base: Vec<f64> = pts.iter().flat_map(|p| [f64::from(p.0), f64::from(p.1)]).collect();
        let moved: Vec<f64> = pts.iter().flat_map(|p| [f64::from(p.0) * s0 + b0, f64::from(p.1) * s1 + b1]).collect();
        let labels: Vec<u32> = pts.iter().map(|p| p.2).collect();
        let k = k.min(pts.len());
        let m1 = fit(&labeled(base, 2, labels.clone()), k, MetricKind::Euclidean).unwrap();
        let m2 = fit(&labeled(moved, 2, labels), k, MetricKind::Euclidean).unwrap();
        for (x, y) in queries {
            let (x, y) = (f64::from(x), f64::from(y));
            prop_assert_eq!(m1.predict(&[x, y]).unwrap(), m2.predict(&[x * s0 + b0, y * s1 + b1]).unwrap());
        }
    }

    #[test]
    fn classifier_commutes_with_relabeling(
        flat in prop::collection::vec(-10.0f64..10.0, 60), raw_labels in prop::collection::vec(1u32..=3, 30),
        perm in Just([3u32, 1, 2]), q in prop::collection::vec(-12.0f64..12.0, 2), k in 1usize..8)
    {
        prop_assume!(raw_labels.contains(&3));
        let t = labeled(flat, 2, raw_labels);
        let map: Vec<Label> = perm.iter().map(|&l| Label::new(l).unwrap()).collect();
        let before = fit(&t, k, MetricKind::Euclidean).unwrap().predict(&q).unwrap();
        let after = fit(&t.relabel(&map).unwrap(), k, MetricKind::Euclidean).unwrap().predict(&q).unwrap();
        prop_assert_eq!(map[before.get() as usize - 1], after);
    }

    #[test]
    fn classifier_backends_agree(
        pts in prop::collection::vec((0i32..6, 0i32..6, 1u32..=3), 5..80),
        queries in prop::collection::vec((0i32..6, 0i32..6), 1..10), k in 1usize..9)
    {
        prop_assume!(pts.iter().map(|p| p.2).max() >= Some(2));
        let flat: Vec<f64> = pts.iter().flat_map(|p| [f64::from(p.0), f64::from(p.1)]).collect();
        let t = labeled(flat, 2, pts.iter().map(|p| p.2).collect());
        let k = k.min(pts.len());
        let a = fit_with_backend(&t, k, MetricKind::Euclidean, Backend::KdTree).unwrap();
        let b = fit_with_backend(&t, k, MetricKind::Euclidean, Backend::LinearScan).unwrap();
        for (x, y) in queries {
            let q = [f64::from(x), f64::from(y)];
            prop_assert_eq!(a.predict(&q).unwrap(), b.predict(&q).unwrap());
        }
    }

    #[test]
    fn mst_weight_ignores_point_order((d, flat) in dataset_strategy(40), rot in 0usize..40) {
        let n = flat.len() / d;
        let ds = Dataset::from_flat(flat.clone(), d, MetricKind::Euclidean).unwrap();
        let mut rows: Vec<&[f64]> = flat.chunks(d).collect();
        rows.rotate_left(rot % n);
        rows.reverse();
        let shuffled = Dataset::from_flat(rows.concat(), d, MetricKind::Euclidean).unwrap();
        let (a, b) = (mst(&ds), mst(&shuffled));
        prop_assert_eq!(a.len(), n - 1);
        prop_assert_eq!(a.total_weight(), b.total_weight());
    }

    #[test]
    fn diameter_invariant_under_rigid_motion(
        pts in prop::collection::vec((-1000i32..1000, -1000i32..1000), 2..60),
        shift in (-4096i32..4096, -4096i32..4096), angle in 0.0f64..std::f64::consts::TAU)
    {
        let flat: Vec<f64> = pts.iter().flat_map(|p| [f64::from(p.0), f64::from(p.1)]).collect();
        let d0 = diameter(&Dataset::from_flat(flat, 2, MetricKind::Euclidean).unwrap()).unwrap();

        // integer translation and quarter turn are exact
        let exact: Vec<f64> = pts
            .iter()
            .flat_map(|p| [f64::from(-p.1 + shift.0), f64::from(p.0 + shift.1)])
            .collect();
        let d1 = diameter(&Dataset::from_flat(exact, 2, MetricKind::Euclidean).unwrap()).unwrap();
        prop_assert_eq!(d0.weight, d1.weight);

        let (s, c) = angle.sin_cos();
        let rotated: Vec<f64> = pts
            .iter()
            .flat_map(|p| {
                let (x, y) = (f64::from(p.0), f64::from(p.1));
                [c * x - s * y, s * x + c * y]
            })
            .collect();
        let d2 = diameter(&Dataset::from_flat(rotated, 2, MetricKind::Euclidean).unwrap()).unwrap();
        prop_assert!((d0.weight - d2.weight).abs() <= 1e-9 * d0.weight.max(1.0));
    }

    #[test]
    fn text_format_round_trips((d, flat) in dataset_strategy(100), metric in metric_strategy()) {
        let tree = KdTree::build(Dataset::from_flat(flat, d, metric).unwrap()).unwrap();
        let back = KdTree::from_text(&tree.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), tree.to_text());
        prop_assert_eq!(back.dataset(), tree.dataset());
    }
}
