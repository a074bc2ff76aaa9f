//! Smocking patterns: stitch templates over a lattice, explicit stitch
//! lists, the pattern file parser, window enumeration and the exact
//! point/stitch set-distance primitives.

use crate::error::{Error, Result};
use crate::geom::{
    point_segment_distance, segment_segment_distance, BoundingBox, Point2, Segment,
};
use std::fmt;

/// Distances below this are treated as touching during validation.
pub const TOUCH_TOL: f64 = 1e-9;

/// Identifies one stitch: integer lattice coefficients plus template slot.
/// Explicit (non-lattice) stitches use `cell = (0, 0)` and a slot at or
/// beyond the periodic template count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StitchId {
    pub cell: (i64, i64),
    pub slot: u32,
}

impl StitchId {
    pub fn new(cell: (i64, i64), slot: u32) -> Self {
        StitchId { cell, slot }
    }
}

impl fmt::Display for StitchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})#{}", self.cell.0, self.cell.1, self.slot)
    }
}

/// One template: segments in coordinates relative to the lattice cell
/// origin, plus an anchor point used to label and address its translates.
#[derive(Debug, Clone)]
pub struct StitchTemplate {
    pub segments: Vec<Segment>,
    pub anchor: Point2,
    diameter: f64,
    center: Point2,
    radius: f64,
    extent: f64,
}

impl StitchTemplate {
    pub fn new(segments: Vec<Segment>, anchor: Point2) -> Self {
        let pts: Vec<Point2> = segments.iter().flat_map(|s| [s.a, s.b]).collect();
        let mut diameter = 0.0f64;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                diameter = diameter.max(pts[i].dist(pts[j]));
            }
        }
        let bbox = bbox_of(&pts);
        let center = bbox.center();
        let radius = pts
            .iter()
            .map(|p| p.dist(center))
            .fold(0.0f64, f64::max);
        let extent = pts.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
        StitchTemplate {
            segments,
            anchor,
            diameter,
            center,
            radius,
            extent,
        }
    }

    /// Diameter of the segment union; attained at segment endpoints.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Max distance of any template point from the cell origin.
    pub fn extent(&self) -> f64 {
        self.extent
    }

    fn connected(&self) -> bool {
        let n = self.segments.len();
        if n <= 1 {
            return true;
        }
        let mut root: Vec<usize> = (0..n).collect();
        fn find(root: &mut Vec<usize>, mut i: usize) -> usize {
            while root[i] != i {
                root[i] = root[root[i]];
                i = root[i];
            }
            i
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if segment_segment_distance(&self.segments[i], &self.segments[j]) <= TOUCH_TOL {
                    let (ri, rj) = (find(&mut root, i), find(&mut root, j));
                    root[ri] = rj;
                }
            }
        }
        let r0 = find(&mut root, 0);
        (1..n).all(|i| find(&mut root, i) == r0)
    }
}

fn bbox_of(pts: &[Point2]) -> BoundingBox {
    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    BoundingBox::new(min, max)
}

/// A materialized stitch: a template translated to its lattice cell,
/// with absolute coordinates.
#[derive(Debug, Clone)]
pub struct Stitch {
    pub id: StitchId,
    pub segments: Vec<Segment>,
    pub anchor: Point2,
    /// Center and circumradius of the segment union, for cheap bounds.
    pub center: Point2,
    pub radius: f64,
}

impl Stitch {
    pub fn translate(&self, v: Point2) -> Stitch {
        Stitch {
            id: self.id,
            segments: self.segments.iter().map(|s| s.translate(v)).collect(),
            anchor: self.anchor + v,
            center: self.center + v,
            radius: self.radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        let pts: Vec<Point2> = self.segments.iter().flat_map(|s| [s.a, s.b]).collect();
        let mut d = 0.0f64;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                d = d.max(pts[i].dist(pts[j]));
            }
        }
        d
    }
}

/// Exact Euclidean distance from a point to a stitch (min over segments).
pub fn point_stitch_distance(p: Point2, s: &Stitch) -> f64 {
    s.segments
        .iter()
        .map(|seg| point_segment_distance(p, seg))
        .fold(f64::INFINITY, f64::min)
}

/// Closest point of a stitch to `p`, lexicographically smallest on ties.
pub fn stitch_closest_point(p: Point2, s: &Stitch) -> Point2 {
    let mut best: Option<(f64, Point2)> = None;
    for seg in &s.segments {
        let q = seg.closest_point_to(p);
        let d = p.dist(q);
        let replace = match &best {
            None => true,
            Some((bd, bq)) => d < *bd || (d == *bd && q.lex_cmp(bq).is_lt()),
        };
        if replace {
            best = Some((d, q));
        }
    }
    best.expect("stitch has segments").1
}

/// Exact Euclidean set distance between two stitches (min over segment pairs).
pub fn stitch_stitch_distance(s1: &Stitch, s2: &Stitch) -> f64 {
    let mut d = f64::INFINITY;
    for a in &s1.segments {
        for b in &s2.segments {
            d = d.min(segment_segment_distance(a, b));
        }
    }
    d
}

/// Closest pair `(on s1, on s2)` realizing the set distance, deterministic
/// under ties.
pub fn stitch_stitch_closest_pair(s1: &Stitch, s2: &Stitch) -> (Point2, Point2, f64) {
    let mut best: Option<(Point2, Point2, f64)> = None;
    for a in &s1.segments {
        for b in &s2.segments {
            let (p, q, d) = crate::geom::segment_segment_closest_pair(a, b);
            let replace = match &best {
                None => true,
                Some((bp, bq, bd)) => {
                    d < *bd
                        || (d == *bd && p.lex_cmp(bp).then_with(|| q.lex_cmp(bq)).is_lt())
                }
            };
            if replace {
                best = Some((p, q, d));
            }
        }
    }
    best.expect("stitches have segments")
}

/// Whether `p` lies strictly inside the open tube of the given radius
/// around the segment set.
pub fn tube_contains(segments: &[Segment], radius: f64, p: Point2) -> bool {
    if radius <= 0.0 {
        return false;
    }
    segments
        .iter()
        .any(|s| point_segment_distance(p, s) < radius)
}

/// A smocking pattern: an optional lattice basis with periodic templates,
/// plus optional explicit stitches. Immutable after construction; all
/// queries are pure.
#[derive(Debug, Clone)]
pub struct SmockingPattern {
    pub name: String,
    basis: Option<(Point2, Point2)>,
    templates: Vec<StitchTemplate>,
    /// Explicit stitches in absolute coordinates; slot = templates.len() + i.
    fixed: Vec<StitchTemplate>,
    /// Inverse basis rows for coefficient solves.
    inv: Option<[[f64; 2]; 2]>,
    max_diameter: f64,
    max_extent: f64,
    /// Cached minimal set distance between distinct stitches; infinite for
    /// patterns with fewer than two stitches.
    delta_min: f64,
}

impl SmockingPattern {
    pub fn new(
        name: impl Into<String>,
        basis: Option<(Point2, Point2)>,
        templates: Vec<StitchTemplate>,
        fixed: Vec<StitchTemplate>,
    ) -> Result<Self> {
        let p = Self::new_unvalidated(name, basis, templates, fixed)?;
        p.validate()?;
        Ok(p)
    }

    /// Structural construction without the separation check; used by tests
    /// that need degenerate configurations.
    pub fn new_unvalidated(
        name: impl Into<String>,
        basis: Option<(Point2, Point2)>,
        templates: Vec<StitchTemplate>,
        fixed: Vec<StitchTemplate>,
    ) -> Result<Self> {
        if !templates.is_empty() && basis.is_none() {
            return Err(Error::Validation(
                "periodic templates require a basis".into(),
            ));
        }
        let inv = match basis {
            None => None,
            Some((u, v)) => {
                let det = u.cross(v);
                if det.abs() <= 1e-12 * (u.norm() * v.norm()).max(1.0) {
                    return Err(Error::Validation(
                        "degenerate basis (parallel vectors)".into(),
                    ));
                }
                Some([[v.y / det, -v.x / det], [-u.y / det, u.x / det]])
            }
        };
        let all = templates.iter().chain(fixed.iter());
        let mut max_diameter = 0.0f64;
        let mut max_extent = 0.0f64;
        for t in all {
            if t.segments.is_empty() {
                return Err(Error::Validation("empty stitch template".into()));
            }
            if t.segments.iter().any(|s| s.is_degenerate()) {
                return Err(Error::Validation("degenerate (zero-length) segment".into()));
            }
            if !t
                .segments
                .iter()
                .all(|s| s.a.is_finite() && s.b.is_finite())
            {
                return Err(Error::Validation("non-finite segment coordinates".into()));
            }
            if !t.connected() {
                return Err(Error::Validation(
                    "stitch template is not a connected segment union".into(),
                ));
            }
            if t.diameter() <= 0.0 {
                return Err(Error::Validation("stitch template has zero diameter".into()));
            }
            max_diameter = max_diameter.max(t.diameter());
            max_extent = max_extent.max(t.extent());
        }
        if basis.is_some() && templates.is_empty() && fixed.is_empty() {
            return Err(Error::Validation("no templates".into()));
        }
        let mut p = SmockingPattern {
            name: name.into(),
            basis,
            templates,
            fixed,
            inv,
            max_diameter,
            max_extent,
            delta_min: f64::INFINITY,
        };
        if p.stitch_count_hint() >= 2 {
            p.delta_min = p.separation_factor_unchecked();
        }
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.stitch_count_hint() >= 2 && self.delta_min <= TOUCH_TOL {
            return Err(Error::Validation("separation factor is zero".into()));
        }
        Ok(())
    }

    /// Cached minimal stitch separation; `f64::INFINITY` when the pattern
    /// has fewer than two stitches.
    pub fn delta_min(&self) -> f64 {
        self.delta_min
    }

    /// A pattern with no stitches at all (plain Euclidean plane).
    pub fn empty(name: impl Into<String>) -> Self {
        SmockingPattern {
            name: name.into(),
            basis: None,
            templates: Vec::new(),
            fixed: Vec::new(),
            inv: None,
            max_diameter: 0.0,
            max_extent: 0.0,
            delta_min: f64::INFINITY,
        }
    }

    /// Finite pattern from explicit stitches in absolute coordinates.
    pub fn from_stitches(
        name: impl Into<String>,
        stitches: Vec<Vec<Segment>>,
    ) -> Result<Self> {
        let fixed = stitches
            .into_iter()
            .map(|segs| {
                let anchor = segs
                    .iter()
                    .flat_map(|s| [s.a, s.b])
                    .min_by(|a, b| a.lex_cmp(b))
                    .unwrap_or(Point2::ORIGIN);
                StitchTemplate::new(segs, anchor)
            })
            .collect();
        SmockingPattern::new(name, None, Vec::new(), fixed)
    }

    pub fn basis(&self) -> Option<(Point2, Point2)> {
        self.basis
    }

    pub fn is_periodic(&self) -> bool {
        self.basis.is_some() && !self.templates.is_empty()
    }

    pub fn templates(&self) -> &[StitchTemplate] {
        &self.templates
    }

    pub fn fixed_stitches(&self) -> &[StitchTemplate] {
        &self.fixed
    }

    pub fn has_stitches(&self) -> bool {
        !self.templates.is_empty() || !self.fixed.is_empty()
    }

    /// Max stitch diameter over all templates (the smocking length `L_max`).
    pub fn max_diameter(&self) -> f64 {
        self.max_diameter
    }

    fn stitch_count_hint(&self) -> usize {
        if self.is_periodic() {
            usize::MAX
        } else {
            self.fixed.len()
        }
    }

    fn slot_template(&self, slot: u32) -> Option<&StitchTemplate> {
        let s = slot as usize;
        if s < self.templates.len() {
            self.templates.get(s)
        } else {
            self.fixed.get(s - self.templates.len())
        }
    }

    pub fn slot_count(&self) -> usize {
        self.templates.len() + self.fixed.len()
    }

    /// Materialize a stitch by id. Fixed-slot ids require cell (0, 0).
    pub fn stitch(&self, id: StitchId) -> Result<Stitch> {
        let t = self
            .slot_template(id.slot)
            .ok_or_else(|| Error::Domain(format!("unknown stitch slot {}", id.slot)))?;
        let offset = if (id.slot as usize) < self.templates.len() {
            let (u, v) = self
                .basis
                .ok_or_else(|| Error::Domain("lattice stitch id without basis".into()))?;
            u * (id.cell.0 as f64) + v * (id.cell.1 as f64)
        } else {
            if id.cell != (0, 0) {
                return Err(Error::Domain(format!(
                    "explicit stitch {} must have cell (0,0)",
                    id
                )));
            }
            Point2::ORIGIN
        };
        Ok(materialize(t, id, offset))
    }

    /// Resolve a stitch by the coordinates of its anchor point, as used by
    /// the CLI `stitch:x,y[,slot]` addressing.
    pub fn stitch_at_anchor(&self, at: Point2, slot: Option<u32>, tol: f64) -> Result<Stitch> {
        let mut candidates: Vec<Stitch> = Vec::new();
        for (i, t) in self.templates.iter().enumerate() {
            if slot.is_some() && slot != Some(i as u32) {
                continue;
            }
            if let Some(inv) = self.inv {
                let rel = at - t.anchor;
                let af = inv[0][0] * rel.x + inv[0][1] * rel.y;
                let bf = inv[1][0] * rel.x + inv[1][1] * rel.y;
                let (a, b) = (af.round(), bf.round());
                if (af - a).abs() <= tol && (bf - b).abs() <= tol {
                    let id = StitchId::new((a as i64, b as i64), i as u32);
                    candidates.push(self.stitch(id)?);
                }
            }
        }
        for (i, t) in self.fixed.iter().enumerate() {
            let s = (self.templates.len() + i) as u32;
            if slot.is_some() && slot != Some(s) {
                continue;
            }
            if t.anchor.dist(at) <= tol {
                candidates.push(self.stitch(StitchId::new((0, 0), s))?);
            }
        }
        match candidates.len() {
            0 => Err(Error::Domain(format!(
                "no stitch anchored at ({}, {})",
                at.x, at.y
            ))),
            1 => Ok(candidates.pop().unwrap()),
            _ => Err(Error::Domain(format!(
                "ambiguous stitch anchor ({}, {}); pass a slot",
                at.x, at.y
            ))),
        }
    }

    /// Integer coefficient ranges (a0..=a1, b0..=b1) whose cells could place
    /// template points inside the inflated box.
    fn coeff_ranges(&self, bbox: &BoundingBox) -> Option<((i64, i64), (i64, i64))> {
        let inv = self.inv?;
        let corners = [
            bbox.min,
            bbox.max,
            Point2::new(bbox.min.x, bbox.max.y),
            Point2::new(bbox.max.x, bbox.min.y),
        ];
        let mut a_lo = f64::INFINITY;
        let mut a_hi = f64::NEG_INFINITY;
        let mut b_lo = f64::INFINITY;
        let mut b_hi = f64::NEG_INFINITY;
        for c in corners {
            let a = inv[0][0] * c.x + inv[0][1] * c.y;
            let b = inv[1][0] * c.x + inv[1][1] * c.y;
            a_lo = a_lo.min(a);
            a_hi = a_hi.max(a);
            b_lo = b_lo.min(b);
            b_hi = b_hi.max(b);
        }
        Some((
            (a_lo.floor() as i64 - 1, a_hi.ceil() as i64 + 1),
            (b_lo.floor() as i64 - 1, b_hi.ceil() as i64 + 1),
        ))
    }

    /// All stitches whose segment union meets the closed box, in
    /// lexicographic anchor order.
    pub fn stitches_in_box(&self, bbox: &BoundingBox) -> Result<Vec<Stitch>> {
        if !bbox.is_valid() {
            return Err(Error::Domain("invalid bounding box (min > max)".into()));
        }
        let mut out: Vec<Stitch> = Vec::new();
        let query = bbox.inflate(self.max_extent + self.max_diameter + 1.0);
        if let Some(((a0, a1), (b0, b1))) = self.coeff_ranges(&query) {
            let (u, v) = self.basis.unwrap();
            for a in a0..=a1 {
                for b in b0..=b1 {
                    let offset = u * (a as f64) + v * (b as f64);
                    for (i, t) in self.templates.iter().enumerate() {
                        let id = StitchId::new((a, b), i as u32);
                        let st = materialize(t, id, offset);
                        if st.segments.iter().any(|s| bbox.intersects_segment(s)) {
                            out.push(st);
                        }
                    }
                }
            }
        }
        for (i, t) in self.fixed.iter().enumerate() {
            let id = StitchId::new((0, 0), (self.templates.len() + i) as u32);
            let st = materialize(t, id, Point2::ORIGIN);
            if st.segments.iter().any(|s| bbox.intersects_segment(s)) {
                out.push(st);
            }
        }
        sort_stitches(&mut out);
        Ok(out)
    }

    /// All stitches within set distance `rho` of `center` (closed), in
    /// lexicographic anchor order.
    pub fn stitches_in_disk(&self, center: Point2, rho: f64) -> Vec<Stitch> {
        let mut out: Vec<Stitch> = Vec::new();
        let query = BoundingBox::new(center, center)
            .inflate(rho + self.max_extent + self.max_diameter + 1.0);
        if let Some(((a0, a1), (b0, b1))) = self.coeff_ranges(&query) {
            let (u, v) = self.basis.unwrap();
            for a in a0..=a1 {
                for b in b0..=b1 {
                    let offset = u * (a as f64) + v * (b as f64);
                    for (i, t) in self.templates.iter().enumerate() {
                        if center.dist(t.center + offset) - t.radius > rho {
                            continue;
                        }
                        let id = StitchId::new((a, b), i as u32);
                        let st = materialize(t, id, offset);
                        if point_stitch_distance(center, &st) <= rho {
                            out.push(st);
                        }
                    }
                }
            }
        }
        for (i, t) in self.fixed.iter().enumerate() {
            let id = StitchId::new((0, 0), (self.templates.len() + i) as u32);
            let st = materialize(t, id, Point2::ORIGIN);
            if point_stitch_distance(center, &st) <= rho {
                out.push(st);
            }
        }
        sort_stitches(&mut out);
        out
    }

    /// Distance from `p` to the whole smocking set, with a witness nearest
    /// stitch. The search disk grows until it provably contains the minimum.
    pub fn distance_to_smocking_set(&self, p: Point2) -> Result<(f64, StitchId)> {
        if !self.has_stitches() {
            return Err(Error::Domain("pattern has no stitches".into()));
        }
        let mut rho = self.initial_search_radius();
        for _ in 0..64 {
            let near = self.stitches_in_disk(p, rho);
            let best = near
                .iter()
                .map(|s| (point_stitch_distance(p, s), s.id))
                .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            if let Some((d, id)) = best {
                // Anything outside the query disk is farther than rho >= d.
                if d <= rho {
                    return Ok((d, id));
                }
            }
            rho *= 2.0;
        }
        Err(Error::Budget(
            "distance_to_smocking_set search radius overflow".into(),
        ))
    }

    pub(crate) fn initial_search_radius(&self) -> f64 {
        match self.basis {
            Some((u, v)) => u.norm() + v.norm() + self.max_diameter + 1.0,
            None => {
                let r = self
                    .fixed
                    .iter()
                    .map(|t| t.center.norm() + t.radius)
                    .fold(1.0f64, f64::max);
                2.0 * r
            }
        }
    }

    /// Minimal Euclidean set distance between distinct stitches. Checks all
    /// template pairs against lattice translates in a radius that covers the
    /// minimizing pair by periodicity.
    pub fn separation_factor(&self) -> Result<f64> {
        if self.stitch_count_hint() < 2 {
            return Err(Error::Validation(
                "separation factor needs at least two stitches".into(),
            ));
        }
        if self.delta_min <= TOUCH_TOL {
            return Err(Error::Validation("separation factor is zero".into()));
        }
        Ok(self.delta_min)
    }

    fn separation_factor_unchecked(&self) -> f64 {
        let mut delta = f64::INFINITY;
        if let Some((u, v)) = self.basis {
            // Radius covering every candidate minimizing pair: some pair at
            // distance <= |u| always exists, and farther cells cannot beat it.
            let rho = u.norm() + v.norm() + 2.0 * (self.max_diameter + self.max_extent) + 1.0;
            let ((a0, a1), (b0, b1)) = self
                .coeff_ranges(&BoundingBox::new(Point2::ORIGIN, Point2::ORIGIN).inflate(rho))
                .unwrap();
            for (i, base) in self.templates.iter().enumerate() {
                let base_st = materialize(base, StitchId::new((0, 0), i as u32), Point2::ORIGIN);
                for a in a0..=a1 {
                    for b in b0..=b1 {
                        let offset = u * (a as f64) + v * (b as f64);
                        for (j, t) in self.templates.iter().enumerate() {
                            if a == 0 && b == 0 && i == j {
                                continue;
                            }
                            // Unordered pairs once.
                            if (a, b, j) < (0, 0, i) {
                                continue;
                            }
                            let st = materialize(t, StitchId::new((a, b), j as u32), offset);
                            delta = delta.min(stitch_stitch_distance(&base_st, &st));
                        }
                    }
                }
                for (j, t) in self.fixed.iter().enumerate() {
                    let id = StitchId::new((0, 0), (self.templates.len() + j) as u32);
                    let st = materialize(t, id, Point2::ORIGIN);
                    delta = delta.min(stitch_stitch_distance(&base_st, &st));
                }
                // Fixed stitches against lattice translates of templates
                // are covered below from the fixed side.
            }
            for (j, t) in self.fixed.iter().enumerate() {
                let fid = StitchId::new((0, 0), (self.templates.len() + j) as u32);
                let fst = materialize(t, fid, Point2::ORIGIN);
                let query = BoundingBox::new(fst.center, fst.center).inflate(rho + fst.radius);
                if let Some(((a0, a1), (b0, b1))) = self.coeff_ranges(&query) {
                    for a in a0..=a1 {
                        for b in b0..=b1 {
                            let offset = u * (a as f64) + v * (b as f64);
                            for (i, tt) in self.templates.iter().enumerate() {
                                let st =
                                    materialize(tt, StitchId::new((a, b), i as u32), offset);
                                delta = delta.min(stitch_stitch_distance(&fst, &st));
                            }
                        }
                    }
                }
            }
        }
        // Fixed-fixed pairs.
        for i in 0..self.fixed.len() {
            for j in (i + 1)..self.fixed.len() {
                let a = materialize(
                    &self.fixed[i],
                    StitchId::new((0, 0), (self.templates.len() + i) as u32),
                    Point2::ORIGIN,
                );
                let b = materialize(
                    &self.fixed[j],
                    StitchId::new((0, 0), (self.templates.len() + j) as u32),
                    Point2::ORIGIN,
                );
                delta = delta.min(stitch_stitch_distance(&a, &b));
            }
        }
        delta
    }
}

fn materialize(t: &StitchTemplate, id: StitchId, offset: Point2) -> Stitch {
    Stitch {
        id,
        segments: t.segments.iter().map(|s| s.translate(offset)).collect(),
        anchor: t.anchor + offset,
        center: t.center + offset,
        radius: t.radius,
    }
}

fn sort_stitches(out: &mut [Stitch]) {
    out.sort_by(|a, b| {
        a.anchor
            .lex_cmp(&b.anchor)
            .then_with(|| a.id.slot.cmp(&b.id.slot))
    });
}

/// Builtin pattern names, matching the six spaces studied by the library.
pub const BUILTIN_NAMES: [&str; 6] = ["diamond", "ribbed", "woven", "plus", "checkered", "bumpy"];

/// Construct one of the six builtin patterns.
pub fn builtin_pattern(name: &str) -> Result<SmockingPattern> {
    let seg = |x1: f64, y1: f64, x2: f64, y2: f64| {
        Segment::new(Point2::new(x1, y1), Point2::new(x2, y2))
    };
    let t = |segments: Vec<Segment>, ax: f64, ay: f64| {
        StitchTemplate::new(segments, Point2::new(ax, ay))
    };
    match name {
        // Horizontal unit intervals on the lattice spanned by (2,0), (-1,1):
        // row y = n holds centers at x = n mod 2 shifted by 2Z.
        "diamond" => SmockingPattern::new(
            "diamond",
            Some((Point2::new(2.0, 0.0), Point2::new(-1.0, 1.0))),
            vec![t(vec![seg(-0.5, 0.0, 0.5, 0.0)], 0.0, 0.0)],
            vec![],
        ),
        // Horizontal unit intervals on 2Z x Z.
        "ribbed" => SmockingPattern::new(
            "ribbed",
            Some((Point2::new(2.0, 0.0), Point2::new(0.0, 1.0))),
            vec![t(vec![seg(-0.5, 0.0, 0.5, 0.0)], 0.0, 0.0)],
            vec![],
        ),
        // Length-2 intervals on 2Z x 2Z, horizontal when (j1+j2)/2 is even
        // and vertical when odd; encoded as two templates on the sublattice
        // spanned by (4,0) and (2,2) so enumeration needs no parity branch.
        "woven" => SmockingPattern::new(
            "woven",
            Some((Point2::new(4.0, 0.0), Point2::new(2.0, 2.0))),
            vec![
                t(vec![seg(-1.0, 0.0, 1.0, 0.0)], 0.0, 0.0),
                t(vec![seg(2.0, -1.0, 2.0, 1.0)], 2.0, 0.0),
            ],
            vec![],
        ),
        // Plus-shaped stitches on 3Z x 3Z.
        "plus" => SmockingPattern::new(
            "plus",
            Some((Point2::new(3.0, 0.0), Point2::new(0.0, 3.0))),
            vec![t(
                vec![seg(-1.0, 0.0, 1.0, 0.0), seg(0.0, -1.0, 0.0, 1.0)],
                0.0,
                0.0,
            )],
            vec![],
        ),
        // Horizontal unit intervals on 3Z x 3Z plus vertical unit intervals
        // on the half-offset lattice (3Z+1.5) x (3Z+1.5).
        "checkered" => SmockingPattern::new(
            "checkered",
            Some((Point2::new(3.0, 0.0), Point2::new(0.0, 3.0))),
            vec![
                t(vec![seg(-0.5, 0.0, 0.5, 0.0)], 0.0, 0.0),
                t(vec![seg(1.5, 1.0, 1.5, 2.0)], 1.5, 1.5),
            ],
            vec![],
        ),
        // Unit square boundaries with lower-left corners on 3Z x 3Z.
        "bumpy" => SmockingPattern::new(
            "bumpy",
            Some((Point2::new(3.0, 0.0), Point2::new(0.0, 3.0))),
            vec![t(
                vec![
                    seg(0.0, 0.0, 1.0, 0.0),
                    seg(0.0, 1.0, 1.0, 1.0),
                    seg(0.0, 0.0, 0.0, 1.0),
                    seg(1.0, 0.0, 1.0, 1.0),
                ],
                0.0,
                0.0,
            )],
            vec![],
        ),
        _ => Err(Error::Domain(format!("unknown builtin pattern '{name}'"))),
    }
}

/// Parse the line-oriented pattern file format.
///
/// ```text
/// smockpattern 1
/// # comment
/// basis ux uy vx vy
/// stitch <slot> seg x1 y1 x2 y2 [x3 y3 ...]
/// absolute seg x1 y1 x2 y2 [...]
/// ```
pub fn parse_pattern(text: &str) -> Result<SmockingPattern> {
    let perr = |line: usize, col: usize, msg: &str| Error::Parse {
        line,
        col,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(perr(1, 1, "empty file, expected 'smockpattern 1' header")),
            Some((i, l)) => {
                let stripped = strip_comment(l).trim();
                if !stripped.is_empty() {
                    break (i + 1, stripped.to_string());
                }
            }
        }
    };
    if header.1.split_whitespace().collect::<Vec<_>>() != ["smockpattern", "1"] {
        return Err(perr(header.0, 1, "expected 'smockpattern 1' header"));
    }

    let mut basis: Option<(Point2, Point2)> = None;
    let mut slot_segments: Vec<(u32, Vec<Segment>)> = Vec::new();
    let mut fixed: Vec<Vec<Segment>> = Vec::new();

    for (i, raw) in lines {
        let lineno = i + 1;
        let line = strip_comment(raw);
        let tokens: Vec<(usize, &str)> = tokenize(line);
        if tokens.is_empty() {
            continue;
        }
        let (col0, keyword) = tokens[0];
        match keyword {
            "basis" => {
                if basis.is_some() {
                    return Err(perr(lineno, col0, "duplicate basis line"));
                }
                let nums = parse_numbers(&tokens[1..], lineno)?;
                if nums.len() != 4 {
                    return Err(perr(lineno, col0, "basis needs exactly 4 numbers"));
                }
                basis = Some((Point2::new(nums[0], nums[1]), Point2::new(nums[2], nums[3])));
            }
            "stitch" => {
                if tokens.len() < 2 {
                    return Err(perr(lineno, col0, "stitch line needs a slot number"));
                }
                let (scol, stok) = tokens[1];
                let slot: u32 = stok
                    .parse()
                    .map_err(|_| perr(lineno, scol, "slot must be a small non-negative integer"))?;
                let segs = parse_polyline(&tokens[2..], lineno)?;
                match slot_segments.iter_mut().find(|(s, _)| *s == slot) {
                    Some((_, v)) => v.extend(segs),
                    None => slot_segments.push((slot, segs)),
                }
            }
            "absolute" => {
                let segs = parse_polyline(&tokens[1..], lineno)?;
                fixed.push(segs);
            }
            _ => {
                return Err(perr(
                    lineno,
                    col0,
                    &format!("unknown directive '{keyword}'"),
                ))
            }
        }
    }

    if !slot_segments.is_empty() {
        if basis.is_none() {
            return Err(Error::Validation(
                "stitch templates given without a basis line".into(),
            ));
        }
        slot_segments.sort_by_key(|(s, _)| *s);
        for (want, (got, _)) in slot_segments.iter().enumerate() {
            if *got != want as u32 {
                return Err(Error::Validation(format!(
                    "template slots must be contiguous from 0, missing slot {want}"
                )));
            }
        }
    }
    if basis.is_some() && slot_segments.is_empty() && fixed.is_empty() {
        return Err(Error::Validation("no templates".into()));
    }
    if basis.is_none() && slot_segments.is_empty() && fixed.is_empty() {
        return Err(Error::Validation("no templates".into()));
    }

    let templates: Vec<StitchTemplate> = slot_segments
        .into_iter()
        .map(|(_, segs)| {
            let anchor = Point2::ORIGIN;
            StitchTemplate::new(segs, anchor)
        })
        .collect();
    let fixed_templates: Vec<StitchTemplate> = fixed
        .into_iter()
        .map(|segs| {
            let anchor = segs
                .iter()
                .flat_map(|s| [s.a, s.b])
                .min_by(|a, b| a.lex_cmp(b))
                .unwrap_or(Point2::ORIGIN);
            StitchTemplate::new(segs, anchor)
        })
        .collect();

    SmockingPattern::new("file", basis, templates, fixed_templates)
}

/// Load a pattern from a `builtin:<name>` spec or a file path.
pub fn load_pattern(spec: &str) -> Result<SmockingPattern> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return builtin_pattern(name);
    }
    let text = std::fs::read_to_string(spec)?;
    let mut p = parse_pattern(&text)?;
    p.name = spec.to_string();
    Ok(p)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_numbers(tokens: &[(usize, &str)], lineno: usize) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|(col, tok)| {
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                col: *col,
                msg: format!("expected a number, found '{tok}'"),
            })
        })
        .collect()
}

fn parse_polyline(tokens: &[(usize, &str)], lineno: usize) -> Result<Vec<Segment>> {
    let perr = |col: usize, msg: &str| Error::Parse {
        line: lineno,
        col,
        msg: msg.to_string(),
    };
    if tokens.is_empty() || tokens[0].1 != "seg" {
        let col = tokens.first().map(|t| t.0).unwrap_or(1);
        return Err(perr(col, "expected 'seg x1 y1 x2 y2 ...'"));
    }
    let nums = parse_numbers(&tokens[1..], lineno)?;
    if nums.len() < 4 || nums.len() % 2 != 0 {
        return Err(perr(
            tokens[0].0,
            "polyline needs an even number of coordinates, at least 4",
        ));
    }
    let pts: Vec<Point2> = nums.chunks(2).map(|c| Point2::new(c[0], c[1])).collect();
    if pts.iter().any(|p| !p.is_finite()) {
        return Err(perr(tokens[0].0, "coordinates must be finite"));
    }
    let mut segs = Vec::new();
    for w in pts.windows(2) {
        if w[0] == w[1] {
            return Err(perr(tokens[0].0, "zero-length segment in polyline"));
        }
        segs.push(Segment::new(w[0], w[1]));
    }
    Ok(segs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchors(stitches: &[Stitch]) -> Vec<(f64, f64)> {
        stitches.iter().map(|s| (s.anchor.x, s.anchor.y)).collect()
    }

    #[test]
    fn woven_box_enumeration_matches_known_window() {
        let p = builtin_pattern("woven").unwrap();
        let bbox = BoundingBox::new(Point2::new(0.0, 0.0), Point2::new(2.0, 2.0));
        let sts = p.stitches_in_box(&bbox).unwrap();
        assert_eq!(
            anchors(&sts),
            vec![(0.0, 0.0), (0.0, 2.0), (2.0, 0.0), (2.0, 2.0)]
        );
    }

    #[test]
    fn woven_parity_orientation() {
        let p = builtin_pattern("woven").unwrap();
        // (0,0): horizontal [-1,1] x {0}
        let s = p.stitch_at_anchor(Point2::new(0.0, 0.0), None, 1e-9).unwrap();
        assert_eq!(s.segments[0].a, Point2::new(-1.0, 0.0));
        assert_eq!(s.segments[0].b, Point2::new(1.0, 0.0));
        // (2,0): vertical {2} x [-1,1]
        let s = p.stitch_at_anchor(Point2::new(2.0, 0.0), None, 1e-9).unwrap();
        assert_eq!(s.segments[0].a, Point2::new(2.0, -1.0));
        assert_eq!(s.segments[0].b, Point2::new(2.0, 1.0));
        // (0,4): (0+4)/2 even -> horizontal
        let s = p.stitch_at_anchor(Point2::new(0.0, 4.0), None, 1e-9).unwrap();
        assert_eq!(s.segments[0].a, Point2::new(-1.0, 4.0));
    }

    #[test]
    fn plus_stitch_shape() {
        let p = builtin_pattern("plus").unwrap();
        let s = p.stitch(StitchId::new((0, 0), 0)).unwrap();
        assert_eq!(s.segments.len(), 2);
        assert_eq!(point_stitch_distance(Point2::new(0.0, 0.0), &s), 0.0);
        assert_eq!(point_stitch_distance(Point2::new(1.0, 0.0), &s), 0.0);
        assert_eq!(point_stitch_distance(Point2::new(0.0, -1.0), &s), 0.0);
        assert!((s.diameter() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bumpy_stitch_is_square_boundary() {
        let p = builtin_pattern("bumpy").unwrap();
        let s = p.stitch(StitchId::new((0, 0), 0)).unwrap();
        assert_eq!(point_stitch_distance(Point2::new(0.5, 0.0), &s), 0.0);
        assert_eq!(point_stitch_distance(Point2::new(1.0, 0.7), &s), 0.0);
        // interior of the square is off the stitch
        assert!(point_stitch_distance(Point2::new(0.5, 0.5), &s) > 0.4);
        assert!((s.diameter() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn diamond_lattice_rows_alternate() {
        let p = builtin_pattern("diamond").unwrap();
        // Row y=0 holds even centers, row y=1 holds odd centers.
        assert!(p.stitch_at_anchor(Point2::new(0.0, 0.0), None, 1e-9).is_ok());
        assert!(p.stitch_at_anchor(Point2::new(2.0, 0.0), None, 1e-9).is_ok());
        assert!(p.stitch_at_anchor(Point2::new(1.0, 1.0), None, 1e-9).is_ok());
        assert!(p.stitch_at_anchor(Point2::new(1.0, 0.0), None, 1e-9).is_err());
    }

    #[test]
    fn zero_width_box_away_from_stitches_is_empty() {
        let p = builtin_pattern("plus").unwrap();
        let bbox = BoundingBox::new(Point2::new(1.5, 1.5), Point2::new(1.5, 1.5));
        assert!(p.stitches_in_box(&bbox).unwrap().is_empty());
    }

    #[test]
    fn parses_canonical_woven_file() {
        let text = "\
smockpattern 1
# woven pattern, two templates on the (4,0),(2,2) sublattice
basis 4 0 2 2
stitch 0 seg -1 0 1 0
stitch 1 seg 2 -1 2 1
";
        let p = parse_pattern(text).unwrap();
        let b = builtin_pattern("woven").unwrap();
        let bbox = BoundingBox::new(Point2::new(-6.0, -6.0), Point2::new(6.0, 6.0));
        // The parsed pattern labels stitches differently; compare the
        // geometric stitch sets.
        let key = |s: &Stitch| {
            let mut segs: Vec<[i64; 4]> = s
                .segments
                .iter()
                .map(|sg| {
                    [
                        (sg.a.x * 64.0) as i64,
                        (sg.a.y * 64.0) as i64,
                        (sg.b.x * 64.0) as i64,
                        (sg.b.y * 64.0) as i64,
                    ]
                })
                .collect();
            segs.sort();
            segs
        };
        let mut got: Vec<_> = p.stitches_in_box(&bbox).unwrap().iter().map(key).collect();
        let mut want: Vec<_> = b.stitches_in_box(&bbox).unwrap().iter().map(key).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn rejects_empty_and_overlapping() {
        let text = "smockpattern 1\nbasis 2 0 0 2\n";
        match parse_pattern(text) {
            Err(Error::Validation(msg)) => assert!(msg.contains("no templates")),
            other => panic!("expected validation error, got {other:?}"),
        }
        // Unit horizontal segments on a 1-spaced lattice touch end to end.
        let text = "smockpattern 1\nbasis 1 0 0 1\nstitch 0 seg 0 0 1 0\n";
        match parse_pattern(text) {
            Err(Error::Validation(msg)) => assert!(msg.contains("separation factor")),
            other => panic!("expected separation error, got {other:?}"),
        }
    }

    #[test]
    fn reports_syntax_position() {
        let text = "smockpattern 1\nbasis 2 0 0 x\nstitch 0 seg 0 0 1 0\n";
        match parse_pattern(text) {
            Err(Error::Parse { line, col, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(col, 13);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn separation_factors_match_known_values() {
        for (name, want) in [
            ("diamond", 1.0),
            ("ribbed", 1.0),
            ("woven", 1.0),
            ("plus", 1.0),
            ("checkered", 2f64.sqrt()),
            ("bumpy", 2.0),
        ] {
            let p = builtin_pattern(name).unwrap();
            let delta = p.separation_factor().unwrap();
            assert!(
                (delta - want).abs() < 1e-12,
                "{name}: delta = {delta}, want {want}"
            );
        }
    }

    #[test]
    fn distance_to_set_examples() {
        let p = builtin_pattern("woven").unwrap();
        let (d, _) = p.distance_to_smocking_set(Point2::new(1.0, 1.0)).unwrap();
        assert!((d - 1.0).abs() < 1e-12);

        let p = builtin_pattern("diamond").unwrap();
        let (d, id) = p.distance_to_smocking_set(Point2::new(0.0, -0.625)).unwrap();
        assert!((d - 0.625).abs() < 1e-12);
        // Witness is one of the nearest stitches.
        let st = p.stitch(id).unwrap();
        assert!((point_stitch_distance(Point2::new(0.0, -0.625), &st) - 0.625).abs() < 1e-12);
    }

    #[test]
    fn tube_contains_strict() {
        let p = builtin_pattern("woven").unwrap();
        let s = p.stitch(StitchId::new((0, 0), 0)).unwrap();
        assert!(!tube_contains(&s.segments, 0.0, Point2::new(0.0, 0.0)));
        assert!(tube_contains(&s.segments, 0.1, Point2::new(0.0, 0.05)));
        assert!(!tube_contains(&s.segments, 0.1, Point2::new(0.0, 0.1)));
    }

    #[test]
    fn checkered_vertical_template_offset() {
        let p = builtin_pattern("checkered").unwrap();
        let s = p
            .stitch_at_anchor(Point2::new(1.5, 1.5), None, 1e-9)
            .unwrap();
        assert_eq!(s.segments[0].a, Point2::new(1.5, 1.0));
        assert_eq!(s.segments[0].b, Point2::new(1.5, 2.0));
        let h = p.stitch(StitchId::new((0, 0), 0)).unwrap();
        let d = stitch_stitch_distance(&h, &s);
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
    }
}
