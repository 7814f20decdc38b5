//! K-d tree over a [`Dataset`], one point per node.
//!
//! Construction cycles the splitting axis with depth (`disc = depth mod K`)
//! and splits each subset at its upper median: after sorting the subset on
//! the splitting axis, the element at index `m / 2` becomes the node key.
//! Points whose coordinate is strictly below the key go to the left subtree,
//! everything else (including ties with the key) goes right. A subset of one
//! point becomes a leaf.
//!
//! Queries walk the tree depth-first with an explicit stack, visiting the
//! child on the query's side first. A subtree is skipped only when the
//! distance from the query to its bounding region is *strictly* greater than
//! the current bound, so exact queries return the same indices, order and
//! distances as the brute-force scan, tie-breaking included.

use std::cell::Cell;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linear_scan::{check_k, check_rho, Dataset, Neighbor, NeighborList, NeighborSearch};
use crate::metrics::MetricKind;

const NIL: u32 = u32::MAX;

/// First line of the text serialization.
pub const TEXT_FORMAT_HEADER: &str = "# nnkit kdtree v1";

#[derive(Clone, Debug, PartialEq, Eq)]
struct Node {
    point: u32,
    disc: u32,
    left: u32,
    right: u32,
}

/// Read-only view of one tree node.
#[derive(Clone, Copy, Debug)]
pub struct KdNode<'t> {
    tree: &'t KdTree,
    id: u32,
}

impl<'t> KdNode<'t> {
    fn raw(&self) -> &'t Node {
        &self.tree.nodes[self.id as usize]
    }

    /// Index of the node key in the tree's dataset.
    pub fn index(&self) -> usize {
        self.raw().point as usize
    }

    pub fn key(&self) -> &'t [f64] {
        self.tree.data.point(self.index())
    }

    pub fn disc(&self) -> usize {
        self.raw().disc as usize
    }

    /// Value of the key on the discriminating axis.
    pub fn split_value(&self) -> f64 {
        self.key()[self.disc()]
    }

    /// Subtree holding coordinates strictly below the split value.
    pub fn left(&self) -> Option<KdNode<'t>> {
        self.child(self.raw().left)
    }

    /// Subtree holding coordinates at or above the split value.
    pub fn right(&self) -> Option<KdNode<'t>> {
        self.child(self.raw().right)
    }

    pub fn is_leaf(&self) -> bool {
        self.raw().left == NIL && self.raw().right == NIL
    }

    fn child(&self, id: u32) -> Option<KdNode<'t>> {
        (id != NIL).then_some(KdNode { tree: self.tree, id })
    }
}

/// Build-time figures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeStats {
    pub nodes: usize,
    /// Number of levels; a single leaf has depth 1.
    pub depth: usize,
    /// Coordinate comparisons spent sorting subsets during the build.
    pub build_comparisons: u64,
}

/// Instrumentation returned by [`QueryHandle::stats`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchStats {
    /// Nodes whose key distance was evaluated by the most recent query, if any.
    pub last_visited: Option<usize>,
    pub depth: usize,
    pub build_comparisons: u64,
}

#[derive(Clone, Debug)]
pub struct KdTree {
    data: Dataset,
    nodes: Vec<Node>,
    depth: usize,
    build_comparisons: u64,
}

impl KdTree {
    /// Builds the tree. The dataset is moved into the tree; nodes refer to
    /// points by dataset index.
    pub fn build(data: Dataset) -> Result<Self> {
        let n = data.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if n >= NIL as usize {
            return Err(Error::param(format!("dataset too large for tree: {n} points")));
        }
        let dim = data.dim();
        let comparisons = Cell::new(0u64);
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes: Vec<Node> = Vec::with_capacity(n);
        let mut max_depth = 0;

        struct Pending {
            start: usize,
            end: usize,
            depth: usize,
            parent: u32,
            right: bool,
        }
        let mut work = vec![Pending {
            start: 0,
            end: n,
            depth: 0,
            parent: NIL,
            right: false,
        }];

        while let Some(Pending { start, end, depth, parent, right }) = work.pop() {
            let disc = depth % dim;
            let coord = |i: u32| data.point(i as usize)[disc];
            let subset = &mut order[start..end];
            subset.sort_unstable_by(|&a, &b| {
                comparisons.set(comparisons.get() + 1);
                coord(a).total_cmp(&coord(b)).then(a.cmp(&b))
            });
            let mid = subset.len() / 2;
            let split = coord(subset[mid]);
            // Keys equal to the split value belong right of it: move the
            // median in front of any equal elements that sorted before it.
            let first_eq = subset[..mid].partition_point(|&i| coord(i) < split);
            subset[first_eq..=mid].rotate_right(1);

            let id = nodes.len() as u32;
            nodes.push(Node {
                point: subset[first_eq],
                disc: disc as u32,
                left: NIL,
                right: NIL,
            });
            if parent != NIL {
                let p = &mut nodes[parent as usize];
                if right {
                    p.right = id;
                } else {
                    p.left = id;
                }
            }
            max_depth = max_depth.max(depth + 1);

            let split_at = start + first_eq;
            // Left is pushed last so nodes are laid out in preorder.
            if split_at + 1 < end {
                work.push(Pending {
                    start: split_at + 1,
                    end,
                    depth: depth + 1,
                    parent: id,
                    right: true,
                });
            }
            if start < split_at {
                work.push(Pending {
                    start,
                    end: split_at,
                    depth: depth + 1,
                    parent: id,
                    right: false,
                });
            }
        }

        Ok(KdTree {
            data,
            nodes,
            depth: max_depth,
            build_comparisons: comparisons.get(),
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn into_dataset(self) -> Dataset {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn metric(&self) -> MetricKind {
        self.data.metric()
    }

    pub fn root(&self) -> KdNode<'_> {
        KdNode { tree: self, id: 0 }
    }

    pub fn tree_stats(&self) -> TreeStats {
        TreeStats {
            nodes: self.nodes.len(),
            depth: self.depth,
            build_comparisons: self.build_comparisons,
        }
    }

    /// A handle that records per-query instrumentation.
    pub fn handle(&self) -> QueryHandle<'_> {
        QueryHandle {
            tree: self,
            last_visited: None,
        }
    }

    pub fn query_nn(&self, q: &[f64]) -> Result<NeighborList> {
        self.handle().nn(q)
    }

    pub fn query_knn(&self, q: &[f64], k: usize) -> Result<NeighborList> {
        self.handle().knn(q, k)
    }

    pub fn query_radius(&self, q: &[f64], rho: f64) -> Result<NeighborList> {
        self.handle().radius(q, rho)
    }

    pub fn query_ann(&self, q: &[f64], epsilon: f64) -> Result<NeighborList> {
        self.handle().ann(q, epsilon)
    }

    /// Dataset indices in in-order (left, node, right) sequence.
    pub fn in_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = Vec::new();
        let mut cur = 0u32;
        loop {
            while cur != NIL {
                stack.push(cur);
                cur = self.nodes[cur as usize].left;
            }
            match stack.pop() {
                Some(id) => {
                    let node = &self.nodes[id as usize];
                    out.push(node.point as usize);
                    cur = node.right;
                }
                None => break,
            }
        }
        out
    }

    /// Checks every structural invariant of the tree:
    ///
    /// * the root discriminator is 0 and `disc = depth mod K` on every level;
    /// * every node in a left subtree is `<=` its ancestor's key on the
    ///   ancestor's axis, and every node in a right subtree is `>=` it
    ///   (checked against all ancestors, not just the parent);
    /// * the nodes hold each dataset index exactly once.
    pub fn audit(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedTree(msg));
        if self.nodes.len() != self.len() {
            return bad(format!("{} nodes for {} points", self.nodes.len(), self.len()));
        }
        let dim = self.dim();
        let mut seen = vec![false; self.len()];
        let mut reached = 0usize;
        let mut max_depth = 0;
        // Each entry carries the ancestor constraints on its path:
        // (axis, split value, node lies in that ancestor's right subtree).
        let mut stack: Vec<(u32, usize, Vec<(usize, f64, bool)>)> = vec![(0, 0, Vec::new())];
        while let Some((id, depth, constraints)) = stack.pop() {
            reached += 1;
            max_depth = max_depth.max(depth + 1);
            let node = &self.nodes[id as usize];
            let idx = node.point as usize;
            if idx >= self.len() || std::mem::replace(&mut seen[idx], true) {
                return bad(format!("point index {idx} missing or repeated"));
            }
            if node.disc as usize != depth % dim {
                return bad(format!("node for point {idx} at depth {depth} has disc {}", node.disc));
            }
            let key = self.data.point(idx);
            for &(axis, split, in_right) in &constraints {
                let ok = if in_right { key[axis] >= split } else { key[axis] <= split };
                if !ok {
                    return bad(format!("point {idx} violates ancestor split {split} on axis {axis}"));
                }
            }
            let axis = node.disc as usize;
            for (child, in_right) in [(node.left, false), (node.right, true)] {
                if child != NIL {
                    let mut c = constraints.clone();
                    c.push((axis, key[axis], in_right));
                    stack.push((child, depth + 1, c));
                }
            }
        }
        if reached != self.len() {
            return bad(format!("{reached} nodes reachable of {}", self.len()));
        }
        if max_depth != self.depth {
            return bad(format!("recorded depth {} but tree has {max_depth} levels", self.depth));
        }
        Ok(())
    }

    /// Serializes the tree in preorder, one node per line:
    /// `depth disc key leaf side index`, where `key` is comma-joined
    /// coordinates, `leaf` is 0/1 and `side` is `root`, `L` or `R`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{TEXT_FORMAT_HEADER}");
        let _ = writeln!(
            out,
            "dim={} n={} metric={} depth={} comparisons={}",
            self.dim(),
            self.len(),
            self.metric(),
            self.depth,
            self.build_comparisons
        );
        let mut stack = vec![(0u32, 0usize, "root")];
        while let Some((id, depth, side)) = stack.pop() {
            let node = KdNode { tree: self, id };
            let key = node
                .key()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(
                out,
                "{depth} {} {key} {} {side} {}",
                node.disc(),
                u8::from(node.is_leaf()),
                node.index()
            );
            let raw = &self.nodes[id as usize];
            if raw.right != NIL {
                stack.push((raw.right, depth + 1, "R"));
            }
            if raw.left != NIL {
                stack.push((raw.left, depth + 1, "L"));
            }
        }
        out
    }

    /// Parses the output of [`KdTree::to_text`] and audits the result.
    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::MalformedTree(format!("line {line}: {msg}"));
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l.trim() == TEXT_FORMAT_HEADER => {}
            _ => return Err(bad(1, "missing format header")),
        }
        let (_, meta) = lines.next().ok_or_else(|| bad(2, "missing metadata line"))?;
        let mut dim = None;
        let mut n = None;
        let mut metric = None;
        let mut comparisons = 0;
        for field in meta.split_whitespace() {
            let (k, v) = field.split_once('=').ok_or_else(|| bad(2, "expected key=value"))?;
            match k {
                "dim" => dim = v.parse::<usize>().ok(),
                "n" => n = v.parse::<usize>().ok(),
                "metric" => metric = Some(v.parse::<MetricKind>()?),
                "comparisons" => comparisons = v.parse().map_err(|_| bad(2, "bad comparisons"))?,
                _ => {}
            }
        }
        let dim = dim.filter(|&d| d > 0).ok_or_else(|| bad(2, "bad dim"))?;
        let n = n.filter(|&n| n > 0).ok_or_else(|| bad(2, "bad n"))?;
        let metric = metric.ok_or_else(|| bad(2, "missing metric"))?;

        let mut coords: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut nodes: Vec<Node> = Vec::with_capacity(n);
        // (node id, depth) along the current root-to-node path
        let mut path: Vec<(u32, usize)> = Vec::new();
        let mut max_depth = 0;
        for (no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(bad(no, "expected 6 fields"));
            }
            let depth: usize = f[0].parse().map_err(|_| bad(no, "bad depth"))?;
            let disc: u32 = f[1].parse().map_err(|_| bad(no, "bad disc"))?;
            let key = f[2]
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(no, "bad key coordinates"))?;
            let index: usize = f[5].parse().map_err(|_| bad(no, "bad index"))?;
            if key.len() != dim || index >= n {
                return Err(bad(no, "key dimension or index out of range"));
            }
            if coords[index].replace(key).is_some() {
                return Err(bad(no, "duplicate index"));
            }
            let id = nodes.len() as u32;
            nodes.push(Node { point: index as u32, disc, left: NIL, right: NIL });
            while path.last().is_some_and(|&(_, d)| d + 1 > depth) {
                path.pop();
            }
            match (path.last(), f[4]) {
                (None, "root") if depth == 0 && id == 0 => {}
                (Some(&(parent, d)), side) if d + 1 == depth => {
                    let p = &mut nodes[parent as usize];
                    let slot = match side {
                        "L" => &mut p.left,
                        "R" => &mut p.right,
                        _ => return Err(bad(no, "bad side")),
                    };
                    if *slot != NIL {
                        return Err(bad(no, "child slot already taken"));
                    }
                    *slot = id;
                }
                _ => return Err(bad(no, "node does not attach to the tree")),
            }
            path.push((id, depth));
            max_depth = max_depth.max(depth + 1);
        }
        let coords = coords
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| Error::MalformedTree(format!("index {i} missing"))))
            .collect::<Result<Vec<_>>>()?
            .concat();
        let tree = KdTree {
            data: Dataset::from_flat(coords, dim, metric)?,
            nodes,
            depth: max_depth,
            build_comparisons: comparisons,
        };
        tree.audit()?;
        Ok(tree)
    }

    fn search(&self, q: &[f64], goal: Goal, epsilon: f64, visited: &mut usize) -> Vec<Neighbor> {
        let metric = self.metric();
        let dim = self.dim();
        let shrink = 1.0 + epsilon;

        let mut best: BinaryHeap<Ranked> = BinaryHeap::new();
        let mut hits: Vec<Neighbor> = Vec::new();
        let bound = |best: &BinaryHeap<Ranked>| match goal {
            Goal::Nearest(k) if best.len() < k => f64::INFINITY,
            Goal::Nearest(_) => best.peek().map_or(f64::INFINITY, |r| r.0.distance) / shrink,
            Goal::Within(rho) => rho,
        };

        // Stack entries carry their region's per-axis gap vector in `gaps`,
        // `dim` values per entry.
        let mut stack: Vec<(u32, f64)> = vec![(0, 0.0)];
        let mut gaps: Vec<f64> = vec![0.0; dim];
        let mut cur = vec![0.0; dim];
        *visited = 0;

        while let Some((id, region)) = stack.pop() {
            let base = stack.len() * dim;
            cur.copy_from_slice(&gaps[base..base + dim]);
            gaps.truncate(base);
            if region > bound(&best) {
                continue;
            }
            *visited += 1;
            let node = &self.nodes[id as usize];
            let key = self.data.point(node.point as usize);
            let cand = Neighbor {
                index: node.point as usize,
                distance: metric.dist(q, key),
            };
            match goal {
                Goal::Nearest(k) => {
                    if best.len() < k {
                        best.push(Ranked(cand));
                    } else if best.peek().is_some_and(|w| cand.cmp_rank(&w.0).is_lt()) {
                        best.pop();
                        best.push(Ranked(cand));
                    }
                }
                Goal::Within(rho) => {
                    if cand.distance <= rho {
                        hits.push(cand);
                    }
                }
            }

            let axis = node.disc as usize;
            let split = key[axis];
            let (near, far) = if q[axis] < split {
                (node.left, node.right)
            } else {
                (node.right, node.left)
            };
            if far != NIL {
                let saved = cur[axis];
                cur[axis] = (q[axis] - split).abs();
                let far_region = metric.norm_of_gaps(cur.iter().copied());
                if far_region <= bound(&best) {
                    stack.push((far, far_region));
                    gaps.extend_from_slice(&cur);
                }
                cur[axis] = saved;
            }
            if near != NIL {
                stack.push((near, region));
                gaps.extend_from_slice(&cur);
            }
        }

        match goal {
            Goal::Nearest(_) => {
                let mut v: Vec<Neighbor> = best.into_iter().map(|r| r.0).collect();
                v.sort_by(Neighbor::cmp_rank);
                v
            }
            Goal::Within(_) => {
                hits.sort_by(Neighbor::cmp_rank);
                hits
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Goal {
    Nearest(usize),
    Within(f64),
}

/// Heap entry ordered by (distance, index); the max element is the worst kept.
struct Ranked(Neighbor);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp_rank(&other.0)
    }
}

/// Query front-end that keeps the visited-node count of its latest query.
///
/// Handles are cheap; create one per thread to keep counters unshared.
#[derive(Debug)]
pub struct QueryHandle<'t> {
    tree: &'t KdTree,
    last_visited: Option<usize>,
}

impl QueryHandle<'_> {
    pub fn nn(&mut self, q: &[f64]) -> Result<NeighborList> {
        self.knn(q, 1)
    }

    pub fn knn(&mut self, q: &[f64], k: usize) -> Result<NeighborList> {
        self.tree.data.check_query(q)?;
        check_k(k)?;
        self.run(q, Goal::Nearest(k), 0.0)
    }

    pub fn radius(&mut self, q: &[f64], rho: f64) -> Result<NeighborList> {
        self.tree.data.check_query(q)?;
        check_rho(rho)?;
        self.run(q, Goal::Within(rho), 0.0)
    }

    /// Approximate nearest neighbor: the returned distance is at most
    /// `(1 + epsilon)` times the exact one. `epsilon = 0` is exact search.
    pub fn ann(&mut self, q: &[f64], epsilon: f64) -> Result<NeighborList> {
        self.tree.data.check_query(q)?;
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::param(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        self.run(q, Goal::Nearest(1), epsilon)
    }

    fn run(&mut self, q: &[f64], goal: Goal, epsilon: f64) -> Result<NeighborList> {
        let mut visited = 0;
        let found = self.tree.search(q, goal, epsilon, &mut visited);
        self.last_visited = Some(visited);
        Ok(NeighborList::from_unsorted(found))
    }

    pub fn last_visited(&self) -> Option<usize> {
        self.last_visited
    }

    pub fn stats(&self) -> SearchStats {
        let t = self.tree.tree_stats();
        SearchStats {
            last_visited: self.last_visited,
            depth: t.depth,
            build_comparisons: t.build_comparisons,
        }
    }
}

impl NeighborSearch for KdTree {
    fn dataset(&self) -> &Dataset {
        &self.data
    }

    fn nn(&self, q: &[f64]) -> Result<NeighborList> {
        self.query_nn(q)
    }

    fn knn(&self, q: &[f64], k: usize) -> Result<NeighborList> {
        self.query_knn(q, k)
    }

    fn radius(&self, q: &[f64], rho: f64) -> Result<NeighborList> {
        self.query_radius(q, rho)
    }
}
