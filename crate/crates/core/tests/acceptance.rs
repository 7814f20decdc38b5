//! Acceptance suite: one `[PASS]` / `[FAIL]` line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report reads top to
//! bottom. Exits nonzero when any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nnkit::cli::bench_size;
use nnkit::metrics::check_axioms_with;
use nnkit::synth_data::{gaussian_q, gen_gaussian_mixture, gen_sleeping_cell, seeded_rng, Scenario};
use nnkit::{
    check_metric_axioms, diameter, fit, mst, scan_knn, scan_nn, scan_radius, split, Dataset, KdTree, MetricKind,
    Point,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;
const REL_TOL_DIST: f64 = 1e-12;
const AXIOM_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, d: usize, lattice: bool) -> Dataset {
    let flat = (0..n * d)
        .map(|_| {
            if lattice {
                rng.random_range(0..6) as f64
            } else {
                rng.random_range(-50.0..50.0)
            }
        })
        .collect();
    Dataset::from_flat(flat, d, MetricKind::Euclidean).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REL_TOL_DIST * a.abs().max(b.abs())
}

fn same_list(got: &nnkit::NeighborList, want: &nnkit::NeighborList) -> bool {
    got.indices() == want.indices() && got.iter().zip(want.iter()).all(|(g, w)| close(g.distance, w.distance))
}

fn c1_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(SEED, 1);
    let dims = [1, 2, 3, 5, 8];
    let mut instances = 0;
    for inst in 0..600 {
        let d = dims[inst % dims.len()];
        // log-uniform n in 1..=10^4, a quarter of them on a small lattice for ties
        let n = (10f64.powf(rng.random_range(0.0..=4.0)).round() as usize).clamp(1, 10_000);
        let ds = uniform(&mut rng, n, d, inst % 4 == 0);
        let tree = KdTree::build(ds.clone()).unwrap();
        for _ in 0..3 {
            let q: Vec<f64> = if inst % 4 == 0 {
                (0..d).map(|_| rng.random_range(0..6) as f64).collect()
            } else {
                (0..d).map(|_| rng.random_range(-60.0..60.0)).collect()
            };
            let k = [1, 3, 5][rng.random_range(0..3)];
            let knn = scan_knn(&ds, &q, k).unwrap();
            // radius either exactly at a neighbor distance or sampled freely
            let rho = if rng.random_bool(0.5) {
                knn[knn.len() - 1].distance
            } else {
                rng.random_range(0.0..40.0)
            };
            check(same_list(&tree.query_nn(&q).unwrap(), &scan_nn(&ds, &q).unwrap()), || {
                format!("nn mismatch: instance {inst} n={n} d={d}")
            })?;
            check(same_list(&tree.query_knn(&q, k).unwrap(), &knn), || {
                format!("knn mismatch: instance {inst} n={n} d={d} k={k}")
            })?;
            check(
                same_list(&tree.query_radius(&q, rho).unwrap(), &scan_radius(&ds, &q, rho).unwrap()),
                || format!("radius mismatch: instance {inst} n={n} d={d} rho={rho}"),
            )?;
            instances += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 60.0, || format!("took {secs:.1} s, budget 60 s"))?;
    Ok(format!("{instances} (dataset, query) instances identical, {secs:.1} s"))
}

fn c2_golden_tree() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let golden = std::fs::read_to_string(dir.join("six_point_tree.txt")).unwrap();
    let flat = vec![7., 2., 5., 4., 9., 6., 2., 3., 4., 7., 8., 1.];
    let tree = KdTree::build(Dataset::from_flat(flat, 2, MetricKind::Euclidean).unwrap()).unwrap();
    tree.audit().map_err(|e| format!("audit failed: {e}"))?;
    let text = tree.to_text();
    // the comparison count is an implementation detail of the build loop
    let strip = |s: &str| -> Vec<String> {
        s.lines()
            .map(|l| match l.find(" comparisons=") {
                Some(p) => l[..p].to_string(),
                None => l.to_string(),
            })
            .collect()
    };
    check(strip(&text) == strip(&golden), || format!("tree differs from golden:\n{text}"))?;
    let back = KdTree::from_text(&golden).map_err(|e| format!("golden does not parse: {e}"))?;
    back.audit().map_err(|e| format!("parsed golden fails audit: {e}"))?;
    Ok("golden tree reproduced, structural audit clean".into())
}

fn c3_epsilon_nn() -> Outcome {
    let mut summary = Vec::new();
    for eps in [0.0, 0.1, 0.5, 1.0] {
        let mut rng = seeded_rng(SEED, 3);
        let mut queries = 0;
        let mut visited_total = 0usize;
        for round in 0..20 {
            let d = [2, 3, 5][round % 3];
            let ds = uniform(&mut rng, 2000, d, false);
            let tree = KdTree::build(ds.clone()).unwrap();
            let mut h = tree.handle();
            for _ in 0..500 {
                let q: Vec<f64> = (0..d).map(|_| rng.random_range(-60.0..60.0)).collect();
                let got = h.ann(&q, eps).unwrap();
                visited_total += h.last_visited().unwrap_or(0);
                let exact = scan_nn(&ds, &q).unwrap();
                check(got[0].distance <= (1.0 + eps) * exact[0].distance, || {
                    format!("eps={eps}: {} > (1+eps)*{}", got[0].distance, exact[0].distance)
                })?;
                if eps == 0.0 {
                    check(got == tree.query_nn(&q).unwrap(), || "eps=0 differs from exact nn".into())?;
                }
                queries += 1;
            }
        }
        check(queries >= 10_000, || format!("only {queries} queries"))?;
        summary.push(format!("eps={eps}: mean visited {:.1}", visited_total as f64 / queries as f64));
    }
    Ok(format!("10000 queries per eps within (1+eps); {}", summary.join(", ")))
}

fn c4_nn_risk_band() -> Outcome {
    let start = Instant::now();
    let r_star = gaussian_q(1.0);
    let mut rates = Vec::new();
    for run in 0..20u64 {
        let (data, r) = gen_gaussian_mixture(2.0, 2, 10_000, SEED + run).unwrap();
        check((r - r_star).abs() < 1e-12, || format!("generator R* {r} != Q(1)"))?;
        let (train, test) = split(&data, 0.5, SEED + run).unwrap();
        let report = fit(&train, 1, MetricKind::Euclidean).unwrap().evaluate(&test).unwrap();
        rates.push(report.error_rate);
    }
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let sd = (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let se = sd / n.sqrt();
    let upper = r_star * (2.0 - 2.0 * r_star);
    check((upper - 0.2670).abs() < 5e-4, || format!("upper bound {upper}"))?;
    let (lo, hi) = (r_star - 3.0 * se, upper + 3.0 * se);
    check(lo <= mean && mean <= hi, || format!("mean 1-NN error {mean:.4} outside [{lo:.4}, {hi:.4}]"))?;
    let secs = start.elapsed().as_secs_f64();
    check(secs < 120.0, || format!("took {secs:.1} s, budget 120 s"))?;
    Ok(format!(
        "mean 1-NN error {mean:.4} (se {se:.4}) in [{lo:.4}, {hi:.4}], R*={r_star:.4}, {secs:.1} s"
    ))
}

/// Minimum spanning-tree weight over all labeled trees, enumerated through
/// Prüfer sequences.
fn prufer_min_weight(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let dist = |a: usize, b: usize| -> f64 {
        points[a].iter().zip(&points[b]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return dist(0, 1);
    }
    let mut best = f64::INFINITY;
    let mut seq = vec![0usize; n - 2];
    loop {
        let mut degree = vec![1usize; n];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut weights = Vec::with_capacity(n - 1);
        for &s in &seq {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            weights.push(dist(leaf, s));
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        weights.push(dist(rest[0], rest[1]));
        weights.sort_by(f64::total_cmp);
        best = best.min(weights.iter().sum());

        // next sequence in base n
        let mut i = 0;
        while i < seq.len() {
            seq[i] += 1;
            if seq[i] < n {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
        if i == seq.len() {
            return best;
        }
    }
}

fn c5_mst_oracle() -> Outcome {
    let mut rng = seeded_rng(SEED, 5);
    for case in 0..200 {
        let n = rng.random_range(1..=7);
        let d = rng.random_range(1..=3);
        let ds = uniform(&mut rng, n, d, false);
        let rows: Vec<Vec<f64>> = ds.rows().map(<[f64]>::to_vec).collect();
        let got = mst(&ds);
        let want = prufer_min_weight(&rows);
        check(got.len() == n.saturating_sub(1), || format!("case {case}: {} edges for n={n}", got.len()))?;
        check(got.total_weight() == want, || {
            format!("case {case}: mst weight {} != enumerated {want}", got.total_weight())
        })?;
    }
    Ok("200 datasets, n <= 7: weight equals exhaustive minimum exactly".into())
}

fn c6_diameter_oracle() -> Outcome {
    let mut rng = seeded_rng(SEED, 6);
    for case in 0..200 {
        let n = rng.random_range(2..=200);
        let d = rng.random_range(1..=4);
        let ds = uniform(&mut rng, n, d, case % 5 == 0);
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let s: f64 = ds.point(i).iter().zip(ds.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                best = best.max(s.sqrt());
            }
        }
        let got = diameter(&ds).unwrap();
        check(got.weight == best, || format!("case {case}: diameter {} != {best}", got.weight))?;
    }
    Ok("200 datasets, n <= 200: equals max over all pairs exactly".into())
}

fn c7_metric_axioms() -> Outcome {
    let metrics = [
        MetricKind::Euclidean,
        MetricKind::Manhattan,
        MetricKind::Chebyshev,
        MetricKind::minkowski(3.0).unwrap(),
    ];
    let mut rng = seeded_rng(SEED, 7);
    let mut pt = |d: usize| -> Vec<f64> { (0..d).map(|_| rng.random_range(-1e3..1e3)).collect() };
    let triples: Vec<[Vec<f64>; 3]> = (0..10_000)
        .map(|i| {
            let d = 1 + i % 5;
            let a = pt(d);
            // every tenth triple repeats a point to exercise the zero cases
            let b = if i % 10 == 0 { a.clone() } else { pt(d) };
            [a, b, pt(d)]
        })
        .collect();
    for m in metrics {
        for (t, [a, b, c]) in triples.iter().enumerate() {
            let (ab, ba, bc, ac) = (m.dist(a, b), m.dist(b, a), m.dist(b, c), m.dist(a, c));
            let tol = |x: f64| AXIOM_TOL * x.abs().max(1.0);
            check(ab >= 0.0 && ((ab == 0.0) == (a == b)), || format!("{m}: positivity, triple {t}"))?;
            check((ab - ba).abs() <= tol(ab), || format!("{m}: symmetry, triple {t}"))?;
            check(ac <= ab + bc + tol(ab + bc), || format!("{m}: triangle, triple {t}"))?;
        }
        // 22^3 > 10^4 ordered triples through the library checker as well
        let sample: Vec<Point> = triples
            .iter()
            .filter(|t| t[2].len() == 3)
            .take(22)
            .map(|t| Point::new(t[2].clone()).unwrap())
            .collect();
        let report = check_metric_axioms(m, &sample).unwrap();
        check(report.all_hold(), || format!("{m}: library checker reports {report:?}"))?;
    }
    let line: Vec<Point> = [[0.0], [1.0], [2.0]].into_iter().map(|c| Point::try_from(c).unwrap()).collect();
    let report = check_axioms_with(&line, |a, b| {
        let d = MetricKind::Euclidean.dist(a, b);
        d * d
    })
    .unwrap();
    check(!report.triangle, || "squared euclidean passed the triangle check".into())?;
    Ok("10000 triples x 4 metrics hold; squared euclidean fails triangle".into())
}

fn c8a_localization_noiseless() -> Outcome {
    let runs = Scenario::default().with_sigma(0.0).localization_trial(&[1], 1000, SEED).unwrap();
    check(runs[0].median == 0.0, || format!("median error {} m", runs[0].median))?;
    Ok("sigma=0, k=1: median error 0 m".into())
}

fn c8b_localization_default() -> Outcome {
    let scenario = Scenario::default();
    let spacing = scenario.grid.spacing;
    let runs = scenario.localization_trial(&[1, 3, 5], 1000, SEED).unwrap();
    let medians: Vec<String> = runs.iter().map(|r| format!("k={} {:.3} m", r.k, r.median)).collect();
    let k1 = &runs[0];
    check(k1.median <= spacing, || {
        format!(
            "sigma=2 dB median error {:.3} m > grid spacing {spacing} m (medians: {})",
            k1.median,
            medians.join(", ")
        )
    })?;
    Ok(format!("sigma=2 dB median error within grid spacing ({})", medians.join(", ")))
}

fn c9_sleeping_cell() -> Outcome {
    let data = gen_sleeping_cell(SEED, 1600, 400).unwrap();
    let (train, test) = split(&data, 0.8, SEED).unwrap();
    let acc = fit(&train, 5, MetricKind::Euclidean).unwrap().evaluate(&test).unwrap().accuracy();
    check(acc >= 0.94, || format!("accuracy {acc:.4} < 0.94"))?;
    Ok(format!("k=5 held-out accuracy {acc:.4} (synthetic stand-in)"))
}

fn c10_scaling() -> Outcome {
    let mut parts = Vec::new();
    let mut prev: Option<f64> = None;
    for n in [1_000, 10_000, 100_000] {
        let row = bench_size(n, 2, 1000, SEED, false).unwrap();
        check(row.nodes == n, || format!("n={n}: {} nodes", row.nodes))?;
        let frac = row.mean_visited / n as f64;
        check(frac < 0.05, || format!("n={n}: mean visited {:.1} = {:.2}% of n", row.mean_visited, 100.0 * frac))?;
        let growth = prev.map_or(String::new(), |p| format!(", growth x{:.2}", row.mean_visited / p));
        parts.push(format!("n={n}: visited {:.1}{growth}", row.mean_visited));
        prev = Some(row.mean_visited);
    }
    Ok(parts.join("; "))
}

fn c11_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_nnkit");
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| -> Result<Vec<u8>, String> {
        let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        check(out.status.success(), || {
            format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
        })?;
        Ok(out.stdout)
    };
    let p = |name: &str| d.join(name).to_str().unwrap().to_string();
    run(&["gen", "--kind", "uniform", "--n", "3000", "--dim", "3", "-o", &p("pts.csv")])?;
    run(&["gen", "--kind", "uniform", "--n", "200", "--dim", "3", "--seed", "9", "-o", &p("qs.csv")])?;
    run(&["gen", "--kind", "sleeping-cell", "-o", &p("kpi.csv")])?;

    let pts = p("pts.csv");
    let qs = p("qs.csv");
    let kpi = p("kpi.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["build", "-i", &pts],
        vec!["query", "-i", &pts, "--mode", "knn", "--k", "5", "--queries", &qs, "--oracle-check"],
        vec!["query", "-i", &pts, "--mode", "mst"],
        vec!["classify", "--k-sweep", "1,3,5,7", "--format", "jsonl"],
        vec!["localize", "--k-sweep", "1,3,5", "--queries", "2000"],
        vec!["detect", "-i", &kpi, "--k-sweep", "3,5"],
        vec!["bench", "--sizes", "1000,20000", "--queries", "300"],
        vec!["gen", "--kind", "mixture", "--n", "500"],
        vec!["gen", "--kind", "fingerprints"],
        vec!["gen", "--kind", "los-nlos"],
    ];
    for args in &cases {
        let a = run(args)?;
        let b = run(args)?;
        check(a == b, || format!("{args:?}: two runs differ"))?;
        let mut parallel = args.clone();
        parallel.extend(["--jobs", "4"]);
        let c = run(&parallel)?;
        check(a == c, || format!("{args:?}: --jobs 4 differs from --jobs 1"))?;
        check(!a.is_empty(), || format!("{args:?}: empty output"))?;
    }
    Ok(format!("{} subcommand configurations byte-identical across runs and --jobs 1/4", cases.len()))
}

fn main() {
    let criteria: Vec<(&str, &str, fn() -> Outcome)> = vec![
        ("1", "oracle equivalence", c1_oracle_equivalence),
        ("2", "golden 2-d tree", c2_golden_tree),
        ("3", "epsilon-NN guarantee", c3_epsilon_nn),
        ("4", "1-NN risk band", c4_nn_risk_band),
        ("5", "MST oracle", c5_mst_oracle),
        ("6", "diameter oracle", c6_diameter_oracle),
        ("7", "metric axioms", c7_metric_axioms),
        ("8a", "localization, noiseless", c8a_localization_noiseless),
        ("8b", "localization, sigma 2 dB", c8b_localization_default),
        ("9", "sleeping-cell accuracy", c9_sleeping_cell),
        ("10", "search scaling", c10_scaling),
        ("11", "CLI determinism", c11_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, f) in criteria {
        let outcome = match panic::catch_unwind(AssertUnwindSafe(f)) {
            Ok(o) => o,
            Err(e) => Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        match outcome {
            Ok(detail) => println!("[PASS] {id:>3} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id:>3} {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
