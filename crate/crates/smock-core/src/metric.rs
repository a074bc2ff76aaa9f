//! The smocked pseudometric: exact distances with witness paths, a
//! chain-enumeration oracle, the single-interval closed form, and the
//! metric-axiom / one-stitch property suites.
//!
//! Engine formulation: a candidate chain visits stitches in sequence, and
//! the entry point into a stitch and the exit point out of it are chosen
//! independently of each other (collapsing a stitch to a point means
//! travel within it is free). Every consecutive pair of chain elements
//! therefore contributes exactly the Euclidean set-to-set distance between
//! them, minimized separately, so the minimum over all chain lengths is a
//! shortest path on the graph whose vertices are the two query nodes plus
//! nearby stitches and whose edge weights are exact set distances. That is
//! what this module computes.
//!
//! Search regions: a chain of length `len` can wander at most
//! `len * (1 + L/delta) + L` away from its start in the Euclidean sense
//! (each inter-stitch hop is at least `delta`, each stitch traversal is
//! free but moves at most `L`). The engine first searches a small region,
//! then certifies the result by re-running on the ellipse that provably
//! contains every chain shorter than the first answer.

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::pattern::{
    point_stitch_distance, stitch_closest_point, stitch_stitch_closest_pair,
    stitch_stitch_distance, SmockingPattern, Stitch, StitchId,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Points whose distance to a stitch is below this are treated as lying on
/// the stitch and canonicalized to it.
pub const CANON_TOL: f64 = 1e-12;

/// One endpoint or waypoint of a distance query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricNode {
    Point(Point2),
    Stitch(StitchId),
}

impl MetricNode {
    pub fn point(x: f64, y: f64) -> Self {
        MetricNode::Point(Point2::new(x, y))
    }

    fn key(&self) -> (u8, f64, f64, u32) {
        match self {
            MetricNode::Point(p) => (0, p.x, p.y, 0),
            MetricNode::Stitch(id) => (1, id.cell.0 as f64, id.cell.1 as f64, id.slot),
        }
    }

    fn cmp_key(&self, other: &MetricNode) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
            .then(a.3.cmp(&b.3))
    }
}

/// One straight hop of a witness: exit point on the previous node, entry
/// point on the next one.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Hop {
    pub exit: [f64; 2],
    pub entry: [f64; 2],
    pub len: f64,
}

/// The minimizing segment chain realizing a smocked distance.
#[derive(Debug, Clone)]
pub struct WitnessPath {
    pub nodes: Vec<MetricNode>,
    pub hops: Vec<Hop>,
    pub total: f64,
    /// Number of intermediate stitches jumped through.
    pub jump_count: usize,
}

impl WitnessPath {
    fn trivial(node: MetricNode) -> Self {
        WitnessPath {
            nodes: vec![node],
            hops: Vec::new(),
            total: 0.0,
            jump_count: 0,
        }
    }

    fn reversed(&self) -> WitnessPath {
        WitnessPath {
            nodes: self.nodes.iter().rev().copied().collect(),
            hops: self
                .hops
                .iter()
                .rev()
                .map(|h| Hop {
                    exit: h.entry,
                    entry: h.exit,
                    len: h.len,
                })
                .collect(),
            total: self.total,
            jump_count: self.jump_count,
        }
    }

    /// Number of hops that connect two stitch nodes (each is at least the
    /// separation factor long).
    pub fn stitch_to_stitch_hops(&self) -> usize {
        self.nodes
            .windows(2)
            .filter(|w| {
                matches!(w[0], MetricNode::Stitch(_)) && matches!(w[1], MetricNode::Stitch(_))
            })
            .count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .map(|n| match n {
                MetricNode::Point(p) => serde_json::json!({ "point": [p.x, p.y] }),
                MetricNode::Stitch(id) => serde_json::json!({
                    "stitch": { "cell": [id.cell.0, id.cell.1], "slot": id.slot }
                }),
            })
            .collect();
        serde_json::json!({
            "distance": self.total,
            "jumps": self.jump_count,
            "nodes": nodes,
            "hops": self.hops.iter().map(|h| serde_json::json!({
                "exit": h.exit, "entry": h.entry, "len": h.len
            })).collect::<Vec<_>>(),
        })
    }
}

/// A smocked distance together with its witness chain.
#[derive(Debug, Clone)]
pub struct DistanceResult {
    pub distance: f64,
    pub witness: WitnessPath,
}

/// Resolved query node: canonical form plus materialized geometry.
#[derive(Debug, Clone)]
struct RNode {
    node: MetricNode,
    st: Option<Stitch>,
    pt: Option<Point2>,
    center: Point2,
    radius: f64,
}

impl RNode {
    fn from_point(p: Point2) -> Self {
        RNode {
            node: MetricNode::Point(p),
            st: None,
            pt: Some(p),
            center: p,
            radius: 0.0,
        }
    }

    fn from_stitch(st: Stitch) -> Self {
        RNode {
            node: MetricNode::Stitch(st.id),
            st: Some(st.clone()),
            pt: None,
            center: st.center,
            radius: st.radius,
        }
    }
}

fn rnode_weight(a: &RNode, b: &RNode) -> f64 {
    match (&a.st, &b.st) {
        (None, None) => a.pt.unwrap().dist(b.pt.unwrap()),
        (Some(s), None) => point_stitch_distance(b.pt.unwrap(), s),
        (None, Some(t)) => point_stitch_distance(a.pt.unwrap(), t),
        (Some(s), Some(t)) => stitch_stitch_distance(s, t),
    }
}

fn rnode_closest_pair(a: &RNode, b: &RNode) -> (Point2, Point2, f64) {
    match (&a.st, &b.st) {
        (None, None) => {
            let (p, q) = (a.pt.unwrap(), b.pt.unwrap());
            (p, q, p.dist(q))
        }
        (Some(s), None) => {
            let q = b.pt.unwrap();
            let p = stitch_closest_point(q, s);
            (p, q, p.dist(q))
        }
        (None, Some(t)) => {
            let p = a.pt.unwrap();
            let q = stitch_closest_point(p, t);
            (p, q, p.dist(q))
        }
        (Some(s), Some(t)) => stitch_stitch_closest_pair(s, t),
    }
}

/// Canonicalize a node: points lying on a stitch become that stitch.
pub fn canonicalize(pattern: &SmockingPattern, node: MetricNode) -> Result<MetricNode> {
    match node {
        MetricNode::Stitch(id) => {
            pattern.stitch(id)?;
            Ok(node)
        }
        MetricNode::Point(p) => {
            if !p.is_finite() {
                return Err(Error::Domain("non-finite point coordinates".into()));
            }
            if pattern.has_stitches() {
                let (d, id) = pattern.distance_to_smocking_set(p)?;
                if d <= CANON_TOL {
                    return Ok(MetricNode::Stitch(id));
                }
            }
            Ok(node)
        }
    }
}

fn resolve(pattern: &SmockingPattern, node: MetricNode) -> Result<RNode> {
    match canonicalize(pattern, node)? {
        MetricNode::Point(p) => Ok(RNode::from_point(p)),
        MetricNode::Stitch(id) => Ok(RNode::from_stitch(pattern.stitch(id)?)),
    }
}

/// Chain-geometry constants of a pattern used for sound search bounds.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ChainBounds {
    pub delta: f64,
    pub l_max: f64,
    /// delta / (delta + L); 1.0 when the pattern has fewer than two stitches.
    pub shrink: f64,
    /// (delta + L) / delta, the Euclidean stretch of a unit of chain length.
    pub stretch: f64,
}

pub(crate) fn chain_bounds(pattern: &SmockingPattern) -> ChainBounds {
    ChainBounds::of(pattern)
}

impl ChainBounds {
    pub fn of(pattern: &SmockingPattern) -> Self {
        let delta = pattern.delta_min();
        let l_max = pattern.max_diameter();
        let (shrink, stretch) = if delta.is_finite() && delta > 0.0 {
            (delta / (delta + l_max), (delta + l_max) / delta)
        } else {
            (1.0, 1.0)
        };
        ChainBounds {
            delta,
            l_max,
            shrink,
            stretch,
        }
    }

    /// Lower bound on the chain length needed to span Euclidean gap `e`.
    pub fn chain_lb(&self, e: f64) -> f64 {
        ((e - self.l_max) * self.shrink).max(0.0)
    }
}

struct Graph {
    nodes: Vec<RNode>,
}

impl Graph {
    fn weight(&self, i: usize, j: usize) -> f64 {
        rnode_weight(&self.nodes[i], &self.nodes[j])
    }

    fn weight_lb(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.nodes[i], &self.nodes[j]);
        (a.center.dist(b.center) - a.radius - b.radius).max(0.0)
    }
}

#[derive(PartialEq)]
struct HeapItem {
    f: f64,
    g: f64,
    node: usize,
}

impl Eq for HeapItem {}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.g.total_cmp(&self.g))
            .then_with(|| other.node.cmp(&self.node))
    }
}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* from node 0 to node 1 over the dense set-distance graph. The
/// heuristic is admissible but not consistent, so the loop keeps popping
/// until no frontier key can beat the target; improvements reopen nodes.
fn astar(graph: &Graph, bounds: &ChainBounds, upper: f64) -> (f64, Vec<i32>) {
    let n = graph.nodes.len();
    let target = 1usize;
    let h = |i: usize| -> f64 {
        if i == target {
            0.0
        } else {
            bounds.chain_lb(graph.weight_lb(i, target))
        }
    };
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![-1i32; n];
    // Direct hop is always a candidate chain.
    dist[0] = 0.0;
    dist[target] = upper;
    parent[target] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem {
        f: h(0),
        g: 0.0,
        node: 0,
    });
    while let Some(HeapItem { f, g, node }) = heap.pop() {
        if f >= dist[target] {
            break;
        }
        if g > dist[node] {
            continue;
        }
        for m in 0..n {
            if m == node || m == 0 {
                continue;
            }
            let lb = g + graph.weight_lb(node, m);
            if lb >= dist[m] || lb + h(m) >= dist[target] {
                continue;
            }
            let nd = g + graph.weight(node, m);
            if nd < dist[m] {
                dist[m] = nd;
                parent[m] = node as i32;
                if m != target {
                    heap.push(HeapItem {
                        f: nd + h(m),
                        g: nd,
                        node: m,
                    });
                }
            } else if nd == dist[m] && nd.is_finite() {
                // Exact tie: keep the shorter, lexicographically smaller
                // chain. Parent is rewired without re-queueing, which keeps
                // tie plateaus linear and the output deterministic.
                if tie_prefers(graph, &parent, node, parent[m], m) {
                    parent[m] = node as i32;
                }
            }
        }
    }
    (dist[target], parent)
}

fn path_ids(graph: &Graph, parent: &[i32], mut node: i32) -> Vec<StitchId> {
    let mut rev = Vec::new();
    while node >= 0 {
        if let MetricNode::Stitch(id) = graph.nodes[node as usize].node {
            rev.push(id);
        }
        node = parent[node as usize];
    }
    rev.reverse();
    rev
}

fn tie_prefers(graph: &Graph, parent: &[i32], cand_pred: usize, cur_pred: i32, node: usize) -> bool {
    if cur_pred < 0 {
        return true;
    }
    let mut a = path_ids(graph, parent, cand_pred as i32);
    let mut b = path_ids(graph, parent, cur_pred);
    if let MetricNode::Stitch(id) = graph.nodes[node].node {
        a.push(id);
        b.push(id);
    }
    (a.len(), a) < (b.len(), b)
}

fn build_graph(
    pattern: &SmockingPattern,
    a: &RNode,
    b: &RNode,
    chain_cap: f64,
    bounds: &ChainBounds,
) -> Graph {
    // Every chain of length <= chain_cap stays inside the ellipse
    // chain_lb(e(A, x)) + chain_lb(e(x, B)) <= chain_cap; enumerate a disk
    // covering it and filter.
    let slack = a.radius + b.radius + 2.0 * bounds.l_max + 1.0;
    let span = chain_cap * bounds.stretch + 2.0 * bounds.l_max + slack;
    let mid = Point2::new(
        0.5 * (a.center.x + b.center.x),
        0.5 * (a.center.y + b.center.y),
    );
    let rho = 0.5 * a.center.dist(b.center) + span;
    let mut nodes = vec![a.clone(), b.clone()];
    for st in pattern.stitches_in_disk(mid, rho) {
        if Some(st.id) == a.st.as_ref().map(|s| s.id) || Some(st.id) == b.st.as_ref().map(|s| s.id)
        {
            continue;
        }
        let ea = (st.center.dist(a.center) - st.radius - a.radius).max(0.0);
        let eb = (st.center.dist(b.center) - st.radius - b.radius).max(0.0);
        if bounds.chain_lb(ea) + bounds.chain_lb(eb) <= chain_cap {
            nodes.push(RNode::from_stitch(st));
        }
    }
    Graph { nodes }
}

fn witness_from_parents(graph: &Graph, parent: &[i32]) -> WitnessPath {
    let mut order = Vec::new();
    let mut node = 1i32;
    while node >= 0 {
        order.push(node as usize);
        node = parent[node as usize];
    }
    order.reverse();
    let nodes: Vec<MetricNode> = order.iter().map(|&i| graph.nodes[i].node).collect();
    let mut hops = Vec::new();
    let mut total = 0.0;
    for w in order.windows(2) {
        let (p, q, len) = rnode_closest_pair(&graph.nodes[w[0]], &graph.nodes[w[1]]);
        total += len;
        hops.push(Hop {
            exit: [p.x, p.y],
            entry: [q.x, q.y],
            len,
        });
    }
    let jump_count = order.len().saturating_sub(2);
    WitnessPath {
        nodes,
        hops,
        total,
        jump_count,
    }
}

/// Exact smocked distance between two nodes, with a minimizing witness.
///
/// Queries are canonicalized (order and on-stitch points), so the result
/// is exactly symmetric and deterministic.
pub fn smocked_distance(
    pattern: &SmockingPattern,
    a: MetricNode,
    b: MetricNode,
) -> Result<DistanceResult> {
    smocked_distance_with_margin(pattern, a, b, 0.0)
}

/// Same as [`smocked_distance`] but with the certified search region
/// enlarged by `extra`; the result must not depend on it.
pub fn smocked_distance_with_margin(
    pattern: &SmockingPattern,
    a: MetricNode,
    b: MetricNode,
    extra: f64,
) -> Result<DistanceResult> {
    let ra = resolve(pattern, a)?;
    let rb = resolve(pattern, b)?;
    if ra.node.cmp_key(&rb.node) == Ordering::Greater {
        let res = smocked_distance_resolved(pattern, rb, ra, extra)?;
        return Ok(DistanceResult {
            distance: res.distance,
            witness: res.witness.reversed(),
        });
    }
    smocked_distance_resolved(pattern, ra, rb, extra)
}

fn smocked_distance_resolved(
    pattern: &SmockingPattern,
    a: RNode,
    b: RNode,
    extra: f64,
) -> Result<DistanceResult> {
    if a.node == b.node {
        return Ok(DistanceResult {
            distance: 0.0,
            witness: WitnessPath::trivial(a.node),
        });
    }
    if !pattern.has_stitches() {
        let (p, q) = (a.pt.unwrap(), b.pt.unwrap());
        let len = p.dist(q);
        return Ok(DistanceResult {
            distance: len,
            witness: WitnessPath {
                nodes: vec![a.node, b.node],
                hops: vec![Hop {
                    exit: [p.x, p.y],
                    entry: [q.x, q.y],
                    len,
                }],
                total: len,
                jump_count: 0,
            },
        });
    }
    let bounds = ChainBounds::of(pattern);
    let d0 = rnode_weight(&a, &b);

    // Warm-up pass on a small region around the query.
    let warm_cap = (bounds.delta.min(bounds.l_max + 1.0) + bounds.l_max + 1.0 + extra)
        .min(d0 + 1.0);
    let g1 = build_graph(pattern, &a, &b, warm_cap.min(d0), &bounds);
    let (d1, _) = astar(&g1, &bounds, d0);

    // Certified pass: the region provably contains every chain at least as
    // short as the warm-up answer.
    let g2 = build_graph(pattern, &a, &b, d1 + extra, &bounds);
    let (_, parent) = astar(&g2, &bounds, d0);
    let witness = witness_from_parents(&g2, &parent);
    Ok(DistanceResult {
        distance: witness.total,
        witness,
    })
}

/// All stitches within smocked distance `cap` of `node`, with exact
/// distances: a single-source Dijkstra over a provably sufficient region.
pub fn stitch_distances_from(
    pattern: &SmockingPattern,
    node: MetricNode,
    cap: f64,
) -> Result<Vec<(Stitch, f64)>> {
    let src = resolve(pattern, node)?;
    let bounds = ChainBounds::of(pattern);
    let rho = cap * bounds.stretch + 2.0 * bounds.l_max + src.radius + 1.0;
    let mut nodes = vec![src.clone()];
    for st in pattern.stitches_in_disk(src.center, rho) {
        if Some(st.id) == src.st.as_ref().map(|s| s.id) {
            continue;
        }
        nodes.push(RNode::from_stitch(st));
    }
    let graph = Graph { nodes };
    let n = graph.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    dist[0] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem {
        f: 0.0,
        g: 0.0,
        node: 0,
    });
    while let Some(HeapItem { g, node, .. }) = heap.pop() {
        if g > dist[node] || g > cap {
            continue;
        }
        for m in 1..n {
            if m == node {
                continue;
            }
            let lb = g + graph.weight_lb(node, m);
            if lb >= dist[m] || lb > cap {
                continue;
            }
            let nd = g + graph.weight(node, m);
            if nd < dist[m] {
                dist[m] = nd;
                heap.push(HeapItem {
                    f: nd,
                    g: nd,
                    node: m,
                });
            }
        }
    }
    let mut out = Vec::new();
    if let Some(st) = &src.st {
        out.push((st.clone(), 0.0));
    }
    for (i, rn) in graph.nodes.iter().enumerate().skip(1) {
        if dist[i] <= cap {
            out.push((rn.st.clone().unwrap(), dist[i]));
        }
    }
    out.sort_by(|x, y| {
        x.0.anchor
            .lex_cmp(&y.0.anchor)
            .then_with(|| x.0.id.slot.cmp(&y.0.id.slot))
    });
    Ok(out)
}

/// Closed-form distance in the single-interval (pulled thread) space:
/// the direct segment, or entering and leaving the collapsed interval.
pub fn pulled_thread_distance(interval: &Stitch, a: Point2, b: Point2) -> f64 {
    let direct = a.dist(b);
    let via = point_stitch_distance(a, interval) + point_stitch_distance(b, interval);
    direct.min(via)
}

/// Exhaustive enumeration of stitch chains with at most `max_jumps`
/// stitches, pruned only by cost bounds and dominance; the independent
/// oracle for the shortest-path engine.
pub fn brute_force_distance(
    pattern: &SmockingPattern,
    a: MetricNode,
    b: MetricNode,
    max_jumps: usize,
) -> Result<DistanceResult> {
    brute_force_distance_with_budget(pattern, a, b, max_jumps, 20_000_000)
}

pub fn brute_force_distance_with_budget(
    pattern: &SmockingPattern,
    a: MetricNode,
    b: MetricNode,
    max_jumps: usize,
    budget: u64,
) -> Result<DistanceResult> {
    let ra = resolve(pattern, a)?;
    let rb = resolve(pattern, b)?;
    if ra.node.cmp_key(&rb.node) == Ordering::Greater {
        let res = brute_force_distance_with_budget(pattern, b, a, max_jumps, budget)?;
        return Ok(DistanceResult {
            distance: res.distance,
            witness: res.witness.reversed(),
        });
    }
    if ra.node == rb.node {
        return Ok(DistanceResult {
            distance: 0.0,
            witness: WitnessPath::trivial(ra.node),
        });
    }
    if !pattern.has_stitches() {
        let len = ra.pt.unwrap().dist(rb.pt.unwrap());
        let w = WitnessPath {
            nodes: vec![ra.node, rb.node],
            hops: vec![Hop {
                exit: [ra.pt.unwrap().x, ra.pt.unwrap().y],
                entry: [rb.pt.unwrap().x, rb.pt.unwrap().y],
                len,
            }],
            total: len,
            jump_count: 0,
        };
        return Ok(DistanceResult {
            distance: len,
            witness: w,
        });
    }
    let bounds = ChainBounds::of(pattern);
    let d0 = rnode_weight(&ra, &rb);
    let graph = build_graph(pattern, &ra, &rb, d0, &bounds);
    let n = graph.nodes.len();

    // Pairwise weights, memoized lazily.
    let mut wcache = vec![f64::NAN; n * n];
    let mut weight = |g: &Graph, i: usize, j: usize, cache: &mut Vec<f64>| -> f64 {
        let k = i * n + j;
        if cache[k].is_nan() {
            let w = g.weight(i, j);
            cache[k] = w;
            cache[j * n + i] = w;
        }
        cache[k]
    };

    struct Dfs<'g> {
        graph: &'g Graph,
        bounds: ChainBounds,
        max_jumps: usize,
        best: f64,
        best_seq: Vec<usize>,
        budget: u64,
        // Pareto (cost, jumps) seen per node, for dominance pruning that
        // preserves minima exactly.
        seen: Vec<Vec<(f64, usize)>>,
        exceeded: bool,
    }

    impl<'g> Dfs<'g> {
        fn run(
            &mut self,
            node: usize,
            jumps: usize,
            partial: f64,
            seq: &mut Vec<usize>,
            wcache: &mut Vec<f64>,
            weight: &mut impl FnMut(&Graph, usize, usize, &mut Vec<f64>) -> f64,
        ) {
            if self.exceeded {
                return;
            }
            if self.budget == 0 {
                self.exceeded = true;
                return;
            }
            self.budget -= 1;

            // Complete the chain with a final hop to the target.
            let finish = partial + weight(self.graph, node, 1, wcache);
            if finish < self.best {
                self.best = finish;
                self.best_seq = seq.clone();
            }
            if jumps == self.max_jumps {
                return;
            }
            for m in 2..self.graph.nodes.len() {
                if m == node {
                    continue;
                }
                let rem = self.bounds.chain_lb(self.graph.weight_lb(m, 1));
                // Cheap center-distance bound before the exact weight.
                if partial + self.graph.weight_lb(node, m) + rem >= self.best {
                    continue;
                }
                let w = weight(self.graph, node, m, wcache);
                let p = partial + w;
                if p + rem >= self.best {
                    continue;
                }
                // Dominance merging within 1e-12 of cost keeps the found
                // minimum within jump-count * 1e-12 of exact, far below the
                // 1e-9 comparison tolerance. A recorded visit also wins
                // regardless of its jump count when its remaining budget
                // covers any completion cheaper than the incumbent (each
                // extra stitch costs at least the separation factor).
                let budget_free = |c: f64, j: usize| {
                    j as f64 + (self.best - c) / self.bounds.delta <= self.max_jumps as f64
                };
                let dominated = self.seen[m].iter().any(|&(c, j)| {
                    c <= p + 1e-12 && (j <= jumps + 1 || budget_free(c, j))
                });
                if dominated {
                    continue;
                }
                self.seen[m].retain(|&(c, j)| !(p <= c && jumps < j));
                self.seen[m].push((p, jumps + 1));
                seq.push(m);
                self.run(m, jumps + 1, p, seq, wcache, weight);
                seq.pop();
            }
        }
    }

    // Greedy stitch walk toward the target seeds the incumbent, so the
    // enumeration prunes against a near-optimal value from the start.
    let mut greedy_best = d0;
    let mut greedy_seq: Vec<usize> = Vec::new();
    {
        let mut cur = 0usize;
        let mut partial = 0.0f64;
        let mut seq = Vec::new();
        for _ in 0..(max_jumps.min(4 * n + 4)) {
            let finish = partial + graph.weight(cur, 1);
            if finish < greedy_best {
                greedy_best = finish;
                greedy_seq = seq.clone();
            }
            // Step to the stitch that most reduces the optimistic total.
            let mut pick: Option<(f64, f64, usize)> = None;
            for m in 2..n {
                if m == cur || seq.contains(&m) {
                    continue;
                }
                let rem = bounds.chain_lb(graph.weight_lb(m, 1));
                if pick.is_some_and(|(s, _, _)| partial + graph.weight_lb(cur, m) + rem >= s) {
                    continue;
                }
                let w = graph.weight(cur, m);
                let score = partial + w + rem;
                if pick.is_none_or(|(s, _, _)| score < s) {
                    pick = Some((score, w, m));
                }
            }
            match pick {
                Some((score, w, m)) if score < greedy_best => {
                    partial += w;
                    seq.push(m);
                    cur = m;
                }
                _ => break,
            }
        }
    }

    let mut dfs = Dfs {
        graph: &graph,
        bounds,
        max_jumps,
        best: greedy_best,
        best_seq: greedy_seq,
        budget,
        seen: vec![Vec::new(); n],
        exceeded: false,
    };
    let mut seq = Vec::new();
    dfs.run(0, 0, 0.0, &mut seq, &mut wcache, &mut weight);
    if dfs.exceeded {
        return Err(Error::Budget(format!(
            "chain enumeration exceeded {budget} expansions"
        )));
    }

    // Rebuild the witness from the best node sequence.
    let order: Vec<usize> = std::iter::once(0)
        .chain(dfs.best_seq.iter().copied())
        .chain(std::iter::once(1))
        .collect();
    let nodes: Vec<MetricNode> = order.iter().map(|&i| graph.nodes[i].node).collect();
    let mut hops = Vec::new();
    let mut total = 0.0;
    for w in order.windows(2) {
        let (p, q, len) = rnode_closest_pair(&graph.nodes[w[0]], &graph.nodes[w[1]]);
        total += len;
        hops.push(Hop {
            exit: [p.x, p.y],
            entry: [q.x, q.y],
            len,
        });
    }
    let jump_count = order.len() - 2;
    Ok(DistanceResult {
        distance: total,
        witness: WitnessPath {
            nodes,
            hops,
            total,
            jump_count,
        },
    })
}

/// One recorded violation of a metric axiom.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomViolation {
    pub axiom: String,
    pub points: Vec<[f64; 2]>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub triples: usize,
    pub violations: Vec<AxiomViolation>,
}

fn sample_point(rng: &mut ChaCha8Rng, pattern: &SmockingPattern, w: f64) -> Point2 {
    let p = Point2::new(rng.gen_range(-w..w), rng.gen_range(-w..w));
    if pattern.has_stitches() && rng.gen_bool(0.2) {
        // Snap onto the nearest stitch to exercise the quotient behavior.
        if let Ok((_, id)) = pattern.distance_to_smocking_set(p) {
            if let Ok(st) = pattern.stitch(id) {
                return stitch_closest_point(p, &st);
            }
        }
    }
    p
}

/// Random-triple check of symmetry, triangle inequality and definiteness
/// of the smocked pseudometric. Violations are report content, not errors.
pub fn metric_axiom_check(
    pattern: &SmockingPattern,
    samples: usize,
    seed: u64,
) -> Result<AxiomReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 12.0;
    let mut violations = Vec::new();
    for _ in 0..samples {
        let pts = [
            sample_point(&mut rng, pattern, w),
            sample_point(&mut rng, pattern, w),
            sample_point(&mut rng, pattern, w),
        ];
        let nodes: Vec<MetricNode> = pts.iter().map(|&p| MetricNode::Point(p)).collect();
        let coords: Vec<[f64; 2]> = pts.iter().map(|p| [p.x, p.y]).collect();
        let d = |i: usize, j: usize| -> Result<f64> {
            Ok(smocked_distance(pattern, nodes[i], nodes[j])?.distance)
        };
        let dxy = d(0, 1)?;
        let dyx = d(1, 0)?;
        let dyz = d(1, 2)?;
        let dxz = d(0, 2)?;
        if dxy != dyx {
            violations.push(AxiomViolation {
                axiom: "symmetry".into(),
                points: coords.clone(),
                detail: format!("d(x,y)={dxy} != d(y,x)={dyx}"),
            });
        }
        if dxz > dxy + dyz + 1e-9 {
            violations.push(AxiomViolation {
                axiom: "triangle".into(),
                points: coords.clone(),
                detail: format!("d(x,z)={dxz} > d(x,y)+d(y,z)={}", dxy + dyz),
            });
        }
        let same = canonicalize(pattern, nodes[0])? == canonicalize(pattern, nodes[1])?;
        if (dxy == 0.0) != same {
            violations.push(AxiomViolation {
                axiom: "definiteness".into(),
                points: coords.clone(),
                detail: format!("d(x,y)={dxy}, same image = {same}"),
            });
        }
        if dxy < 0.0 || dyz < 0.0 || dxz < 0.0 {
            violations.push(AxiomViolation {
                axiom: "nonnegativity".into(),
                points: coords,
                detail: "negative distance".into(),
            });
        }
    }
    Ok(AxiomReport {
        triples: samples,
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OneStitchReport {
    pub pairs: usize,
    pub pairs_below_delta: usize,
    pub violations: Vec<AxiomViolation>,
}

/// For sampled pairs closer than the separation factor, the minimizing
/// chain uses at most one stitch and the Euclidean gap exceeds the smocked
/// distance by at most one stitch length.
pub fn one_stitch_property_check(
    pattern: &SmockingPattern,
    samples: usize,
    seed: u64,
) -> Result<OneStitchReport> {
    let bounds = ChainBounds::of(pattern);
    if !bounds.delta.is_finite() {
        return Err(Error::Validation(
            "one-stitch check needs a pattern with at least two stitches".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 12.0;
    let reach = bounds.delta + bounds.l_max;
    let mut violations = Vec::new();
    let mut below = 0usize;
    for _ in 0..samples {
        let x = sample_point(&mut rng, pattern, w);
        let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let rad: f64 = rng.gen_range(0.0..reach);
        let y = x + Point2::new(ang.cos(), ang.sin()) * rad;
        let res = smocked_distance(pattern, MetricNode::Point(x), MetricNode::Point(y))?;
        if res.distance < bounds.delta - 1e-12 {
            below += 1;
            if res.witness.jump_count > 1 {
                violations.push(AxiomViolation {
                    axiom: "one-stitch".into(),
                    points: vec![[x.x, x.y], [y.x, y.y]],
                    detail: format!(
                        "d={} < delta but witness jumps {}",
                        res.distance, res.witness.jump_count
                    ),
                });
            }
            if x.dist(y) > res.distance + bounds.l_max + 1e-9 {
                violations.push(AxiomViolation {
                    axiom: "one-stitch-gap".into(),
                    points: vec![[x.x, x.y], [y.x, y.y]],
                    detail: format!(
                        "|x-y|={} > d + L = {}",
                        x.dist(y),
                        res.distance + bounds.l_max
                    ),
                });
            }
        }
    }
    Ok(OneStitchReport {
        pairs: samples,
        pairs_below_delta: below,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Segment;
    use crate::pattern::builtin_pattern;

    fn stitch_node(pattern: &SmockingPattern, x: f64, y: f64) -> MetricNode {
        MetricNode::Stitch(
            pattern
                .stitch_at_anchor(Point2::new(x, y), None, 1e-9)
                .unwrap()
                .id,
        )
    }

    #[test]
    fn woven_vertical_gap_is_two() {
        let p = builtin_pattern("woven").unwrap();
        let res = smocked_distance(&p, stitch_node(&p, 0.0, 0.0), stitch_node(&p, 0.0, 4.0))
            .unwrap();
        assert!((res.distance - 2.0).abs() < 1e-12, "{}", res.distance);
        assert_eq!(res.witness.jump_count, 1);
    }

    #[test]
    fn plus_axis_neighbor_is_one() {
        let p = builtin_pattern("plus").unwrap();
        let res =
            smocked_distance(&p, stitch_node(&p, 0.0, 0.0), stitch_node(&p, 3.0, 0.0)).unwrap();
        assert!((res.distance - 1.0).abs() < 1e-12);
        assert_eq!(res.witness.jump_count, 0);
    }

    #[test]
    fn bumpy_diagonal_and_knight() {
        let p = builtin_pattern("bumpy").unwrap();
        let d = smocked_distance(&p, stitch_node(&p, 0.0, 0.0), stitch_node(&p, 3.0, 3.0))
            .unwrap()
            .distance;
        assert!((d - 8f64.sqrt()).abs() < 1e-12);
        let d = smocked_distance(&p, stitch_node(&p, 0.0, 0.0), stitch_node(&p, 3.0, 6.0))
            .unwrap()
            .distance;
        assert!((d - (8f64.sqrt() + 2.0)).abs() < 1e-12);
        let d = smocked_distance(&p, stitch_node(&p, 0.0, 0.0), stitch_node(&p, 0.0, 3.0))
            .unwrap()
            .distance;
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_nodes_have_empty_witness() {
        let p = builtin_pattern("plus").unwrap();
        let a = stitch_node(&p, 0.0, 0.0);
        let res = smocked_distance(&p, a, a).unwrap();
        assert_eq!(res.distance, 0.0);
        assert!(res.witness.hops.is_empty());
        // Two points on the same stitch collapse to it.
        let res = smocked_distance(
            &p,
            MetricNode::point(0.5, 0.0),
            MetricNode::point(0.0, -0.25),
        )
        .unwrap();
        assert_eq!(res.distance, 0.0);
    }

    #[test]
    fn point_query_uses_stitch_shortcut() {
        let p = builtin_pattern("woven").unwrap();
        let res = smocked_distance(
            &p,
            MetricNode::point(0.0, 0.1),
            MetricNode::point(0.5, 0.1),
        )
        .unwrap();
        assert!((res.distance - 0.2).abs() < 1e-12);
        assert_eq!(res.witness.jump_count, 1);
        assert_eq!(res.witness.hops.len(), 2);
    }

    #[test]
    fn empty_pattern_falls_back_to_euclidean() {
        let p = SmockingPattern::empty("none");
        let res = smocked_distance(&p, MetricNode::point(0.0, 0.0), MetricNode::point(3.0, 4.0))
            .unwrap();
        assert_eq!(res.distance, 5.0);
    }

    #[test]
    fn symmetry_is_exact_and_margin_insensitive() {
        let p = builtin_pattern("checkered").unwrap();
        let a = MetricNode::point(0.3, 0.7);
        let b = MetricNode::point(-4.2, 5.1);
        let ab = smocked_distance(&p, a, b).unwrap().distance;
        let ba = smocked_distance(&p, b, a).unwrap().distance;
        assert_eq!(ab, ba);
        let wide = smocked_distance_with_margin(&p, a, b, 8.0).unwrap().distance;
        assert!((ab - wide).abs() < 1e-12);
    }

    #[test]
    fn pulled_thread_examples() {
        let p = SmockingPattern::from_stitches(
            "pt",
            vec![vec![Segment::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0))]],
        )
        .unwrap();
        let interval = p.stitch(StitchId::new((0, 0), 0)).unwrap();
        let d = pulled_thread_distance(&interval, Point2::new(-1.0, 0.0), Point2::new(2.0, 0.0));
        assert_eq!(d, 2.0);
        assert_eq!(
            pulled_thread_distance(&interval, Point2::new(0.3, 4.0), Point2::new(0.3, 4.0)),
            0.0
        );
        // Engine agrees with the closed form.
        let res = smocked_distance(
            &p,
            MetricNode::point(-1.0, 0.0),
            MetricNode::point(2.0, 0.0),
        )
        .unwrap();
        assert!((res.distance - 2.0).abs() < 1e-15);
    }

    #[test]
    fn brute_force_agrees_on_examples() {
        let p = builtin_pattern("bumpy").unwrap();
        let res = brute_force_distance(
            &p,
            stitch_node(&p, 0.0, 0.0),
            stitch_node(&p, 3.0, 3.0),
            3,
        )
        .unwrap();
        assert!((res.distance - 8f64.sqrt()).abs() < 1e-12);
        // max_jumps 0 degenerates to the direct hop.
        let res = brute_force_distance(
            &p,
            MetricNode::point(0.5, -1.0),
            MetricNode::point(0.5, 5.0),
            0,
        )
        .unwrap();
        assert_eq!(res.distance, 6.0);
    }

    #[test]
    fn axiom_checks_are_clean_on_builtins() {
        for name in ["woven", "plus"] {
            let p = builtin_pattern(name).unwrap();
            let report = metric_axiom_check(&p, 60, 7).unwrap();
            assert!(report.violations.is_empty(), "{name}: {:?}", report.violations);
            let one = one_stitch_property_check(&p, 60, 11).unwrap();
            assert!(one.violations.is_empty(), "{name}: {:?}", one.violations);
            assert!(one.pairs_below_delta > 0);
        }
    }
}
