//! Translation-invariant stitch-to-stitch distance fields and a batch
//! evaluator for point-pair distances.
//!
//! For a periodic pattern the distance between stitches depends only on
//! the template slots and the lattice offset between their cells, so one
//! single-source shortest-path pass per slot yields every stitch distance
//! in a window. Point pairs then reduce to
//! `min(|a-b|, min_{j,k} [ D_j(a) + d(I_j, I_k) + D_k(b) ])`
//! with the inner minimum pruned by Euclidean and anchor lower bounds.
//!
//! Exactness of the field under a finite enumeration disk: a chain of
//! length `len` stays within Euclidean distance `len * (1 + L/delta) + L`
//! of its start, so a stored value `v` is exact unless some shorter chain
//! escapes the disk, which costs at least the escape bound; values above
//! their escape bound are discarded at build time.

use crate::error::{Error, Result};
use crate::geom::{BoundingBox, Point2};
use crate::metric::{chain_bounds, smocked_distance, MetricNode};
use crate::pattern::{point_stitch_distance, stitch_stitch_distance, SmockingPattern, Stitch};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

#[derive(Debug, Clone)]
struct Grid {
    a0: i64,
    b0: i64,
    w: usize,
    h: usize,
    vals: Vec<f64>,
}

impl Grid {
    fn get(&self, a: i64, b: i64) -> Option<f64> {
        let (ia, ib) = (a - self.a0, b - self.b0);
        if ia < 0 || ib < 0 || ia as usize >= self.w || ib as usize >= self.h {
            return None;
        }
        let v = self.vals[ib as usize * self.w + ia as usize];
        if v.is_finite() {
            Some(v)
        } else {
            None
        }
    }
}

/// Exact stitch-to-stitch distances of a periodic pattern, keyed by
/// (source slot, target slot, lattice cell offset). Values are certified
/// exact up to `cap`.
pub struct StitchDistanceField {
    slots: usize,
    cap: f64,
    reach: f64,
    basis: (Point2, Point2),
    /// Template centers and circumradii per slot (relative to cell origin).
    slot_center: Vec<Point2>,
    slot_radius: Vec<f64>,
    grids: Vec<Grid>,
    inv_anchor: Vec<Point2>,
}

struct NodeArrays {
    x: Vec<f64>,
    y: Vec<f64>,
    r: Vec<f64>,
    slot: Vec<u32>,
    cell: Vec<(i64, i64)>,
}

#[derive(PartialEq)]
struct QItem {
    g: f64,
    node: usize,
}
impl Eq for QItem {}
impl Ord for QItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .g
            .total_cmp(&self.g)
            .then_with(|| other.node.cmp(&self.node))
    }
}
impl PartialOrd for QItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shared exact-edge cache keyed by slot pair and cell offset.
struct EdgeCache {
    pattern_templates: Vec<Vec<crate::geom::Segment>>,
    basis: (Point2, Point2),
    map: HashMap<(u32, u32, i64, i64), f64>,
}

impl EdgeCache {
    fn new(pattern: &SmockingPattern) -> Self {
        EdgeCache {
            pattern_templates: pattern
                .templates()
                .iter()
                .map(|t| t.segments.to_vec())
                .collect(),
            basis: pattern.basis().expect("periodic pattern"),
            map: HashMap::new(),
        }
    }

    fn weight(&mut self, su: u32, cu: (i64, i64), sv: u32, cv: (i64, i64)) -> f64 {
        let key = (su, sv, cv.0 - cu.0, cv.1 - cu.1);
        if let Some(&w) = self.map.get(&key) {
            return w;
        }
        let (u, v) = self.basis;
        let off = u * (key.2 as f64) + v * (key.3 as f64);
        let mut best = f64::INFINITY;
        for a in &self.pattern_templates[su as usize] {
            for b in &self.pattern_templates[sv as usize] {
                let d = crate::geom::segment_segment_distance(a, &b.translate(off));
                if d < best {
                    best = d;
                }
            }
        }
        self.map.insert(key, best);
        self.map.insert((sv, su, -key.2, -key.3), best);
        best
    }
}

impl StitchDistanceField {
    /// Field certified up to `cap`, with offsets reachable up to
    /// `cap * stretch` covered.
    pub fn build(pattern: &SmockingPattern, cap: f64) -> Result<Self> {
        let bounds = chain_bounds(pattern);
        let reach = cap * bounds.stretch + 2.0 * bounds.l_max + 2.0;
        Self::build_with_reach(pattern, cap, reach)
    }

    /// Field certified up to `cap` for lookups whose stitch centers are at
    /// most `reach` apart.
    pub fn build_with_reach(pattern: &SmockingPattern, cap: f64, reach: f64) -> Result<Self> {
        if !pattern.is_periodic() || !pattern.fixed_stitches().is_empty() {
            return Err(Error::Validation(
                "distance fields need a purely periodic pattern".into(),
            ));
        }
        let bounds = chain_bounds(pattern);
        let (u, v) = pattern.basis().unwrap();
        let slots = pattern.templates().len();
        let slot_center: Vec<Point2> = pattern
            .templates()
            .iter()
            .map(|t| {
                t.segments
                    .iter()
                    .flat_map(|s| [s.a, s.b])
                    .fold(None::<BoundingBox>, |acc, p| {
                        Some(match acc {
                            None => BoundingBox::new(p, p),
                            Some(bb) => BoundingBox::new(
                                Point2::new(bb.min.x.min(p.x), bb.min.y.min(p.y)),
                                Point2::new(bb.max.x.max(p.x), bb.max.y.max(p.y)),
                            ),
                        })
                    })
                    .unwrap()
                    .center()
            })
            .collect();
        let slot_radius: Vec<f64> = pattern
            .templates()
            .iter()
            .enumerate()
            .map(|(i, t)| {
                t.segments
                    .iter()
                    .flat_map(|s| [s.a, s.b])
                    .map(|p| p.dist(slot_center[i]))
                    .fold(0.0f64, f64::max)
            })
            .collect();
        let ext = slot_radius.iter().cloned().fold(0.0f64, f64::max);

        // Disk radius: cover all lookups, and make escaping chains cost
        // more than cap.
        let r_enum = (reach + 2.0 * ext + 2.0)
            .max(0.5 * (cap * bounds.stretch + reach) + 2.0 * bounds.l_max + ext + 2.0);

        let mut field = StitchDistanceField {
            slots,
            cap,
            reach,
            basis: (u, v),
            slot_center,
            slot_radius,
            grids: Vec::new(),
            inv_anchor: pattern.templates().iter().map(|t| t.anchor).collect(),
        };

        let mut cache = EdgeCache::new(pattern);
        for s in 0..slots {
            let grids = field.run_source(pattern, s as u32, r_enum, &bounds, &mut cache)?;
            field.grids.extend(grids);
        }
        Ok(field)
    }

    fn run_source(
        &self,
        pattern: &SmockingPattern,
        src_slot: u32,
        r_enum: f64,
        bounds: &crate::metric::ChainBounds,
        cache: &mut EdgeCache,
    ) -> Result<Vec<Grid>> {
        let (u, v) = self.basis;
        let src_center = self.slot_center[src_slot as usize];
        let src_radius = self.slot_radius[src_slot as usize];
        let all = pattern.stitches_in_disk(src_center, r_enum);
        let n = all.len();
        let mut na = NodeArrays {
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            slot: Vec::with_capacity(n),
            cell: Vec::with_capacity(n),
        };
        let mut src_idx = None;
        for (i, st) in all.iter().enumerate() {
            na.x.push(st.center.x);
            na.y.push(st.center.y);
            na.r.push(st.radius);
            na.slot.push(st.id.slot);
            na.cell.push(st.id.cell);
            if st.id.cell == (0, 0) && st.id.slot == src_slot {
                src_idx = Some(i);
            }
        }
        let src = src_idx.ok_or_else(|| {
            Error::Validation("source stitch missing from its own enumeration".into())
        })?;

        // Sparse warm-up: neighbor hops only, giving upper-bound seeds.
        let w_nbr = u.norm() + v.norm() + 2.0 * bounds.l_max + 1.0;
        let mut dist = sparse_seed(&na, src, w_nbr, cache);

        // Dense certified pass: every node pair is a potential hop; the
        // cheap center-distance bound rejects almost all of them.
        let mut heap: BinaryHeap<QItem> = BinaryHeap::new();
        for (i, d) in dist.iter().enumerate() {
            if d.is_finite() {
                heap.push(QItem { g: *d, node: i });
            }
        }
        while let Some(QItem { g, node }) = heap.pop() {
            // Keys ascend; nodes with true distance within the cap are all
            // settled once the frontier passes it.
            if g > self.cap {
                break;
            }
            if g > dist[node] {
                continue;
            }
            let (nx, ny, nr) = (na.x[node], na.y[node], na.r[node]);
            for m in 0..n {
                if m == node {
                    continue;
                }
                let t = dist[m] - g + nr + na.r[m];
                if t <= 0.0 {
                    continue;
                }
                let (dx, dy) = (na.x[m] - nx, na.y[m] - ny);
                if dx * dx + dy * dy >= t * t {
                    continue;
                }
                let w = cache.weight(na.slot[node], na.cell[node], na.slot[m], na.cell[m]);
                let nd = g + w;
                if nd < dist[m] {
                    dist[m] = nd;
                    heap.push(QItem { g: nd, node: m });
                }
            }
        }

        // Re-index into per-target-slot grids and certify against escape.
        let inv = invert_basis(u, v);
        let half = |r: f64| -> (i64, i64, i64, i64) {
            let corners = [
                Point2::new(src_center.x - r, src_center.y - r),
                Point2::new(src_center.x + r, src_center.y - r),
                Point2::new(src_center.x - r, src_center.y + r),
                Point2::new(src_center.x + r, src_center.y + r),
            ];
            let mut a_lo = i64::MAX;
            let mut a_hi = i64::MIN;
            let mut b_lo = i64::MAX;
            let mut b_hi = i64::MIN;
            for c in corners {
                let a = inv[0][0] * c.x + inv[0][1] * c.y;
                let b = inv[1][0] * c.x + inv[1][1] * c.y;
                a_lo = a_lo.min(a.floor() as i64 - 2);
                a_hi = a_hi.max(a.ceil() as i64 + 2);
                b_lo = b_lo.min(b.floor() as i64 - 2);
                b_hi = b_hi.max(b.ceil() as i64 + 2);
            }
            (a_lo, a_hi, b_lo, b_hi)
        };
        let (a_lo, a_hi, b_lo, b_hi) = half(r_enum + 1.0);
        let (w, h) = (
            (a_hi - a_lo + 1) as usize,
            (b_hi - b_lo + 1) as usize,
        );
        let mut grids: Vec<Grid> = (0..self.slots)
            .map(|_| Grid {
                a0: a_lo,
                b0: b_lo,
                w,
                h,
                vals: vec![f64::INFINITY; w * h],
            })
            .collect();
        let out_lb = bounds.chain_lb(r_enum - src_radius);
        for i in 0..n {
            if !dist[i].is_finite() || dist[i] > self.cap {
                continue;
            }
            let t_slot = na.slot[i] as usize;
            let dcent = (na.x[i] - src_center.x).hypot(na.y[i] - src_center.y);
            let escape = out_lb + bounds.chain_lb(r_enum - dcent - na.r[i]);
            if dist[i] > escape {
                continue;
            }
            let (a, b) = na.cell[i];
            let g = &mut grids[t_slot];
            let (ia, ib) = ((a - g.a0) as usize, (b - g.b0) as usize);
            g.vals[ib * g.w + ia] = dist[i];
        }
        Ok(grids)
    }

    /// Exact distance between slot `s` at the origin cell and slot `t` at
    /// cell offset `(da, db)`; `None` when the value exceeds the certified
    /// cap.
    pub fn lookup(&self, s: u32, t: u32, da: i64, db: i64) -> Option<f64> {
        if s as usize >= self.slots || t as usize >= self.slots {
            return None;
        }
        self.grids[s as usize * self.slots + t as usize].get(da, db)
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// Distance between the stitches anchored at the given points.
    pub fn anchor_distance(&self, a: Point2, b: Point2) -> Result<f64> {
        let (sa, ca) = self.resolve_anchor(a)?;
        let (sb, cb) = self.resolve_anchor(b)?;
        self.lookup(sa, sb, cb.0 - ca.0, cb.1 - ca.1).ok_or_else(|| {
            Error::Domain(format!(
                "stitch distance ({},{}) -> ({},{}) is outside the certified field",
                a.x, a.y, b.x, b.y
            ))
        })
    }

    fn resolve_anchor(&self, at: Point2) -> Result<(u32, (i64, i64))> {
        let inv = invert_basis(self.basis.0, self.basis.1);
        for (s, anchor) in self.inv_anchor.iter().enumerate() {
            let rel = at - *anchor;
            let af = inv[0][0] * rel.x + inv[0][1] * rel.y;
            let bf = inv[1][0] * rel.x + inv[1][1] * rel.y;
            let (a, b) = (af.round(), bf.round());
            if (af - a).abs() <= 1e-9 && (bf - b).abs() <= 1e-9 {
                return Ok((s as u32, (a as i64, b as i64)));
            }
        }
        Err(Error::Domain(format!(
            "({}, {}) is not a stitch anchor of the pattern",
            at.x, at.y
        )))
    }
}

fn invert_basis(u: Point2, v: Point2) -> [[f64; 2]; 2] {
    let det = u.cross(v);
    [[v.y / det, -v.x / det], [-u.y / det, u.x / det]]
}

/// Sparse Dijkstra over neighbor hops (center distance below `w_nbr`),
/// returning upper bounds on all stitch distances from `src`.
fn sparse_seed(na: &NodeArrays, src: usize, w_nbr: f64, cache: &mut EdgeCache) -> Vec<f64> {
    let n = na.x.len();
    // Bucket grid over centers for neighbor queries.
    let cell = w_nbr.max(1e-9);
    let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);
    for i in 0..n {
        buckets.entry(key(na.x[i], na.y[i])).or_default().push(i as u32);
    }
    let mut dist = vec![f64::INFINITY; n];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(QItem { g: 0.0, node: src });
    while let Some(QItem { g, node }) = heap.pop() {
        if g > dist[node] {
            continue;
        }
        let (kx, ky) = key(na.x[node], na.y[node]);
        for bx in (kx - 1)..=(kx + 1) {
            for by in (ky - 1)..=(ky + 1) {
                let Some(list) = buckets.get(&(bx, by)) else {
                    continue;
                };
                for &mu in list {
                    let m = mu as usize;
                    if m == node {
                        continue;
                    }
                    let (dx, dy) = (na.x[m] - na.x[node], na.y[m] - na.y[node]);
                    if dx * dx + dy * dy > w_nbr * w_nbr {
                        continue;
                    }
                    let w = cache.weight(na.slot[node], na.cell[node], na.slot[m], na.cell[m]);
                    let nd = g + w;
                    if nd < dist[m] {
                        dist[m] = nd;
                        heap.push(QItem { g: nd, node: m });
                    }
                }
            }
        }
    }
    dist
}

/// Batch evaluator for smocked distances over a fixed list of point pairs.
pub struct PairEvaluator<'p> {
    pattern: &'p SmockingPattern,
    pairs: Vec<(u32, u32)>,
    coords: Vec<(Point2, Point2)>,
    mode: Mode,
}

enum Mode {
    /// No stitches: plain Euclidean distance.
    Empty,
    /// Finitely many stitches: dense stitch matrix.
    Finite(FiniteEval),
    /// Periodic pattern: field-backed evaluation.
    Periodic(Box<PeriodicEval>),
    /// Mixed periodic + explicit stitches: per-pair engine queries.
    Direct,
}

struct FiniteEval {
    stitches: Vec<Stitch>,
    /// Row-major stitch-to-stitch smocked distances.
    ds: Vec<f64>,
}

struct PeriodicEval {
    field: StitchDistanceField,
    shrink: f64,
    l_max: f64,
    cap: f64,
    /// Local stitch arrays around the query window.
    sx: Vec<f64>,
    sy: Vec<f64>,
    sr: Vec<f64>,
    sslot: Vec<u32>,
    scell: Vec<(i64, i64)>,
    points: Vec<PointData>,
}

struct PointData {
    p: Point2,
    /// (local stitch index, exact point-set distance), ascending.
    cand: Vec<(u32, f64)>,
    nearest: Option<(u32, f64)>,
}

impl<'p> PairEvaluator<'p> {
    pub fn build(pattern: &'p SmockingPattern, pairs: &[(Point2, Point2)]) -> Result<Self> {
        // Dedupe endpoints bit-exactly.
        let mut ids: HashMap<(u64, u64), u32> = HashMap::new();
        let mut pts: Vec<Point2> = Vec::new();
        let mut pair_ids = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            let mut id_of = |p: Point2| -> u32 {
                *ids.entry((p.x.to_bits(), p.y.to_bits())).or_insert_with(|| {
                    pts.push(p);
                    (pts.len() - 1) as u32
                })
            };
            pair_ids.push((id_of(a), id_of(b)));
        }

        if !pattern.has_stitches() {
            return Ok(PairEvaluator {
                pattern,
                pairs: pair_ids,
                coords: pairs.to_vec(),
                mode: Mode::Empty,
            });
        }
        if !pattern.is_periodic() {
            return Ok(PairEvaluator {
                pattern,
                pairs: pair_ids,
                coords: pairs.to_vec(),
                mode: Mode::Finite(FiniteEval::build(pattern)?),
            });
        }
        if !pattern.fixed_stitches().is_empty() {
            return Ok(PairEvaluator {
                pattern,
                pairs: pair_ids,
                coords: pairs.to_vec(),
                mode: Mode::Direct,
            });
        }

        let bounds = chain_bounds(pattern);
        // Constructive route bound along lattice steps, for sizing.
        let walker = LatticeWalker::new(pattern);

        // Nearest stitch per point.
        let nearest: Vec<(crate::pattern::StitchId, f64)> = pts
            .iter()
            .map(|&p| {
                let (d, id) = pattern.distance_to_smocking_set(p)?;
                Ok((id, d))
            })
            .collect::<Result<Vec<_>>>()?;

        // Upper bound per pair, then the field cap.
        let mut ub_point = vec![0.0f64; pts.len()];
        let mut cap = 0.0f64;
        let mut max_dw = 0.0f64;
        for &(ia, ib) in &pair_ids {
            let (a, b) = (pts[ia as usize], pts[ib as usize]);
            let d0 = a.dist(b);
            let (ja, da) = nearest[ia as usize];
            let (jb, db) = nearest[ib as usize];
            let ub = d0.min(da + walker.route_ub(ja, jb) + db);
            cap = cap.max(ub);
            max_dw = max_dw.max(d0);
            ub_point[ia as usize] = ub_point[ia as usize].max(ub);
            ub_point[ib as usize] = ub_point[ib as usize].max(ub);
        }
        cap += 1e-6;

        let r_max = pattern
            .templates()
            .iter()
            .map(|t| t.diameter())
            .fold(0.0f64, f64::max);
        let max_near = nearest.iter().map(|(_, d)| *d).fold(0.0f64, f64::max);
        let reach = cap + max_dw + 2.0 * r_max + max_near + 2.0;
        let field = StitchDistanceField::build_with_reach(pattern, cap, reach)?;

        // Local stitches around the points.
        let mut bb: Option<BoundingBox> = None;
        for p in &pts {
            bb = Some(match bb {
                None => BoundingBox::new(*p, *p),
                Some(b) => BoundingBox::new(
                    Point2::new(b.min.x.min(p.x), b.min.y.min(p.y)),
                    Point2::new(b.max.x.max(p.x), b.max.y.max(p.y)),
                ),
            });
        }
        let window = bb
            .unwrap_or(BoundingBox::new(Point2::ORIGIN, Point2::ORIGIN))
            .inflate(cap + 2.0 * r_max + 2.0);
        let local = pattern.stitches_in_box(&window)?;
        let mut sx = Vec::with_capacity(local.len());
        let mut sy = Vec::with_capacity(local.len());
        let mut sr = Vec::with_capacity(local.len());
        let mut sslot = Vec::with_capacity(local.len());
        let mut scell = Vec::with_capacity(local.len());
        let mut by_id: HashMap<((i64, i64), u32), u32> = HashMap::new();
        for (i, st) in local.iter().enumerate() {
            sx.push(st.center.x);
            sy.push(st.center.y);
            sr.push(st.radius);
            sslot.push(st.id.slot);
            scell.push(st.id.cell);
            by_id.insert((st.id.cell, st.id.slot), i as u32);
        }

        // Bucket grid for candidate queries.
        let bucket = (2.0 * r_max + 3.0).max(3.0);
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, st) in local.iter().enumerate() {
            let k = (
                (st.center.x / bucket).floor() as i64,
                (st.center.y / bucket).floor() as i64,
            );
            buckets.entry(k).or_default().push(i as u32);
        }

        let lookup_local = |j: u32, k: u32| -> Option<f64> {
            let (ju, ku) = (j as usize, k as usize);
            let (ca, cb) = (scell[ju], scell[ku]);
            field.lookup(sslot[ju], sslot[ku], cb.0 - ca.0, cb.1 - ca.1)
        };
        let mut points = Vec::with_capacity(pts.len());
        for (pi, &p) in pts.iter().enumerate() {
            let rad = ub_point[pi] + 1e-9;
            let k0 = ((p.x - rad) / bucket).floor() as i64;
            let k1 = ((p.x + rad) / bucket).floor() as i64;
            let l0 = ((p.y - rad) / bucket).floor() as i64;
            let l1 = ((p.y + rad) / bucket).floor() as i64;
            let mut cand = Vec::new();
            for kx in k0..=k1 {
                for ky in l0..=l1 {
                    let Some(list) = buckets.get(&(kx, ky)) else {
                        continue;
                    };
                    for &iu in list {
                        let i = iu as usize;
                        let lb = (p.x - sx[i]).hypot(p.y - sy[i]) - sr[i];
                        if lb >= rad {
                            continue;
                        }
                        let d = point_stitch_distance(p, &local[i]);
                        if d < rad {
                            cand.push((iu, d));
                        }
                    }
                }
            }
            cand.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            let nearest_local = by_id
                .get(&(nearest[pi].0.cell, nearest[pi].0.slot))
                .map(|&i| (i, nearest[pi].1));
            // Anchor dominance: a first hop to stitch j that costs at least
            // the hop to the nearest stitch plus the fabric route to j is
            // never needed, because the routed chain reaches any target at
            // most as expensively.
            if let Some((anchor, ad)) = nearest_local {
                cand.retain(|&(j, dj)| {
                    j == anchor
                        || match lookup_local(anchor, j) {
                            Some(f) => dj <= ad + f + 1e-12,
                            None => true,
                        }
                });
            }
            points.push(PointData {
                p,
                cand,
                nearest: nearest_local,
            });
        }

        Ok(PairEvaluator {
            pattern,
            pairs: pair_ids,
            coords: pairs.to_vec(),
            mode: Mode::Periodic(Box::new(PeriodicEval {
                field,
                shrink: bounds.shrink,
                l_max: bounds.l_max,
                cap,
                sx,
                sy,
                sr,
                sslot,
                scell,
                points,
            })),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Exact smocked distance of pair `i`.
    pub fn distance(&self, i: usize) -> Result<f64> {
        let (a, b) = self.coords[i];
        match &self.mode {
            Mode::Empty => Ok(a.dist(b)),
            Mode::Direct => Ok(smocked_distance(
                self.pattern,
                MetricNode::Point(a),
                MetricNode::Point(b),
            )?
            .distance),
            Mode::Finite(f) => Ok(f.distance(self.pattern, a, b)),
            Mode::Periodic(pe) => {
                let (ia, ib) = self.pairs[i];
                Ok(pe.distance(ia as usize, ib as usize))
            }
        }
    }
}

impl FiniteEval {
    fn build(pattern: &SmockingPattern) -> Result<Self> {
        let mut stitches = Vec::new();
        let tcount = pattern.templates().len();
        for i in 0..pattern.fixed_stitches().len() {
            stitches.push(pattern.stitch(crate::pattern::StitchId::new(
                (0, 0),
                (tcount + i) as u32,
            ))?);
        }
        let n = stitches.len();
        let mut ds = vec![f64::INFINITY; n * n];
        // Dense Dijkstra per source; n is small for explicit patterns.
        for s in 0..n {
            let mut dist = vec![f64::INFINITY; n];
            dist[s] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(QItem { g: 0.0, node: s });
            while let Some(QItem { g, node }) = heap.pop() {
                if g > dist[node] {
                    continue;
                }
                for m in 0..n {
                    if m == node {
                        continue;
                    }
                    let nd = g + stitch_stitch_distance(&stitches[node], &stitches[m]);
                    if nd < dist[m] {
                        dist[m] = nd;
                        heap.push(QItem { g: nd, node: m });
                    }
                }
            }
            ds[s * n..(s + 1) * n].copy_from_slice(&dist);
        }
        Ok(FiniteEval { stitches, ds })
    }

    fn distance(&self, _pattern: &SmockingPattern, a: Point2, b: Point2) -> f64 {
        let n = self.stitches.len();
        let mut best = a.dist(b);
        let da: Vec<f64> = self
            .stitches
            .iter()
            .map(|s| point_stitch_distance(a, s))
            .collect();
        let db: Vec<f64> = self
            .stitches
            .iter()
            .map(|s| point_stitch_distance(b, s))
            .collect();
        for j in 0..n {
            if da[j] >= best {
                continue;
            }
            for k in 0..n {
                let t = da[j] + self.ds[j * n + k] + db[k];
                if t < best {
                    best = t;
                }
            }
        }
        best
    }
}

impl PeriodicEval {
    fn chain_lb(&self, e: f64) -> f64 {
        ((e - self.l_max) * self.shrink).max(0.0)
    }

    fn distance(&self, ia: usize, ib: usize) -> f64 {
        let pa = &self.points[ia];
        let pb = &self.points[ib];
        if ia == ib {
            return 0.0;
        }
        let (a, b) = (pa.p, pb.p);
        let mut best = a.dist(b);
        let (nb_idx, nb_d) = match pb.nearest {
            Some(x) => x,
            None => return best,
        };
        let (na_idx, na_d) = match pa.nearest {
            Some(x) => x,
            None => return best,
        };
        // Anchor route as the starting upper bound.
        if let Some(f) = self.lookup_idx(na_idx, nb_idx) {
            let t = na_d + f + nb_d;
            if t < best {
                best = t;
            }
        }
        let anchor_j = na_idx;
        for &(j, dj) in &pa.cand {
            if dj >= best {
                break;
            }
            // Remainder lower bounds: Euclidean chain bound to b, and the
            // anchor-triangle bound through b's nearest stitch.
            let ju = j as usize;
            let e_b = ((self.sx[ju] - b.x).hypot(self.sy[ju] - b.y) - self.sr[ju]).max(0.0);
            let mut rem = self.chain_lb(e_b);
            match self.lookup_idx(j, nb_idx) {
                Some(f) => {
                    let t = f - nb_d;
                    if t > rem {
                        rem = t;
                    }
                }
                None => {
                    // Beyond the certified cap: remainder is at least
                    // cap - nb_d.
                    let t = self.cap - nb_d;
                    if t > rem {
                        rem = t;
                    }
                }
            }
            if dj + rem >= best {
                continue;
            }
            let f_anchor_j = self.lookup_idx(anchor_j, j);
            for &(k, dk) in &pb.cand {
                if dj + dk >= best {
                    break;
                }
                let ku = k as usize;
                let de = ((self.sx[ju] - self.sx[ku]).hypot(self.sy[ju] - self.sy[ku])
                    - self.sr[ju]
                    - self.sr[ku])
                    .max(0.0);
                if dj + self.chain_lb(de) + dk >= best {
                    continue;
                }
                // Triangle prefilter via the source anchor.
                if let (Some(fak), Some(faj)) = (self.lookup_idx(anchor_j, k), f_anchor_j) {
                    if dj + (fak - faj) + dk >= best {
                        continue;
                    }
                }
                match self.lookup_idx(j, k) {
                    Some(f) => {
                        let t = dj + f + dk;
                        if t < best {
                            best = t;
                        }
                    }
                    // Value beyond cap >= best: cannot win.
                    None => {}
                }
            }
        }
        best
    }

    fn lookup_idx(&self, j: u32, k: u32) -> Option<f64> {
        let (ju, ku) = (j as usize, k as usize);
        let (ca, cb) = (self.scell[ju], self.scell[ku]);
        self.field
            .lookup(self.sslot[ju], self.sslot[ku], cb.0 - ca.0, cb.1 - ca.1)
    }
}

/// Constructive upper bound on stitch distances along lattice steps.
struct LatticeWalker {
    /// Cost of one basis step within a slot, per slot.
    cost_u: Vec<f64>,
    cost_v: Vec<f64>,
    /// Local connection cost between slot pairs at the same cell.
    cross: Vec<f64>,
    slots: usize,
}

impl LatticeWalker {
    fn new(pattern: &SmockingPattern) -> Self {
        let slots = pattern.templates().len();
        let st = |cell: (i64, i64), slot: usize| {
            pattern
                .stitch(crate::pattern::StitchId::new(cell, slot as u32))
                .unwrap()
        };
        let mut cost_u = Vec::new();
        let mut cost_v = Vec::new();
        for s in 0..slots {
            cost_u.push(stitch_stitch_distance(&st((0, 0), s), &st((1, 0), s)));
            cost_v.push(stitch_stitch_distance(&st((0, 0), s), &st((0, 1), s)));
        }
        let mut cross = vec![0.0; slots * slots];
        for s in 0..slots {
            for t in 0..slots {
                if s != t {
                    cross[s * slots + t] =
                        stitch_stitch_distance(&st((0, 0), s), &st((0, 0), t));
                }
            }
        }
        LatticeWalker {
            cost_u,
            cost_v,
            cross,
            slots,
        }
    }

    fn route_ub(&self, j: crate::pattern::StitchId, k: crate::pattern::StitchId) -> f64 {
        let (s, t) = (j.slot as usize, k.slot as usize);
        if s >= self.slots || t >= self.slots {
            return f64::INFINITY;
        }
        let da = (k.cell.0 - j.cell.0).abs() as f64;
        let db = (k.cell.1 - j.cell.1).abs() as f64;
        if da == 0.0 && db == 0.0 && s == t {
            return 0.0;
        }
        da * self.cost_u[s] + db * self.cost_v[s] + self.cross[s * self.slots + t]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::builtin_pattern;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn field_matches_closed_forms() {
        let p = builtin_pattern("plus").unwrap();
        let f = StitchDistanceField::build(&p, 12.0).unwrap();
        assert!((f.lookup(0, 0, 1, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!((f.lookup(0, 0, 2, 3).unwrap() - 5.0).abs() < 1e-12);
        assert!(
            (f.anchor_distance(Point2::new(0.0, 0.0), Point2::new(6.0, -9.0)).unwrap() - 5.0)
                .abs()
                < 1e-12
        );
        let p = builtin_pattern("bumpy").unwrap();
        let f = StitchDistanceField::build(&p, 12.0).unwrap();
        assert!(
            (f.anchor_distance(Point2::new(0.0, 0.0), Point2::new(3.0, 6.0)).unwrap()
                - (8f64.sqrt() + 2.0))
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn field_matches_engine_on_woven() {
        let p = builtin_pattern("woven").unwrap();
        let f = StitchDistanceField::build(&p, 16.0).unwrap();
        for (dx, dy) in [(2i64, 0i64), (0, 4), (4, 2), (6, 6), (10, 4), (8, 0)] {
            let id = p
                .stitch_at_anchor(Point2::new(dx as f64, dy as f64), None, 1e-9)
                .unwrap()
                .id;
            let want = smocked_distance(
                &p,
                MetricNode::Stitch(crate::pattern::StitchId::new((0, 0), 0)),
                MetricNode::Stitch(id),
            )
            .unwrap()
            .distance;
            let got = f
                .anchor_distance(Point2::ORIGIN, Point2::new(dx as f64, dy as f64))
                .unwrap();
            assert!(
                (got - want).abs() < 1e-12,
                "({dx},{dy}): field {got} engine {want}"
            );
        }
    }

    #[test]
    fn pair_evaluator_matches_engine_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for name in ["diamond", "ribbed", "woven", "plus", "checkered", "bumpy"] {
            let p = builtin_pattern(name).unwrap();
            let pairs: Vec<(Point2, Point2)> = (0..40)
                .map(|_| {
                    (
                        Point2::new(rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0)),
                        Point2::new(rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0)),
                    )
                })
                .collect();
            let eval = PairEvaluator::build(&p, &pairs).unwrap();
            for (i, &(a, b)) in pairs.iter().enumerate() {
                let got = eval.distance(i).unwrap();
                let want =
                    smocked_distance(&p, MetricNode::Point(a), MetricNode::Point(b))
                        .unwrap()
                        .distance;
                assert!(
                    (got - want).abs() < 1e-9,
                    "{name} pair {i}: bulk {got} vs engine {want}"
                );
            }
        }
    }

    #[test]
    fn pair_evaluator_finite_pattern() {
        let p = SmockingPattern::from_stitches(
            "pt",
            vec![vec![crate::geom::Segment::new(
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
            )]],
        )
        .unwrap();
        let pairs = vec![(Point2::new(-1.0, 0.0), Point2::new(2.0, 0.0))];
        let eval = PairEvaluator::build(&p, &pairs).unwrap();
        assert!((eval.distance(0).unwrap() - 2.0).abs() < 1e-15);
    }
}
