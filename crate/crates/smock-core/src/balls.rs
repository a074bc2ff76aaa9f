//! Ball preimages under the smocking map: rasterization, frontier stitch
//! sets, and verification of the ball-growth identity.
//!
//! A cell-center distance field is computed from one single-source pass
//! over nearby stitches: the distance from a cell `x` to the center node
//! decomposes as the best of the direct segment and
//! `min_j [ D_j(x) + d(I_j, center) ]`, because a chain from `x` enters
//! some first stitch `I_j` with a straight hop of length at least `D_j(x)`
//! and continues with a chain realizing `d(I_j, center)`.

use crate::error::{Error, Result};
use crate::geom::{BoundingBox, Point2};
use crate::metric::{stitch_distances_from, MetricNode};
use crate::pattern::{point_stitch_distance, SmockingPattern, Stitch, StitchId};
use crate::raster::BitRaster;
use rayon::prelude::*;
use serde::Serialize;

/// Stitches that just touch the closed ball of the given radius.
#[derive(Debug, Clone, Serialize)]
pub struct FrontierSet {
    pub radius: f64,
    pub stitches: Vec<FrontierStitch>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontierStitch {
    pub anchor: [f64; 2],
    pub slot: u32,
    pub distance: f64,
}

/// Exact distance field from a center node, valid where `value <= cap`.
pub struct BallField {
    pub raster_origin: Point2,
    pub spacing: f64,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub cap: f64,
    /// Smocked distance to every stitch with distance at most `cap`.
    pub reached: Vec<(Stitch, f64)>,
    center_point: Option<Point2>,
}

impl BallField {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.raster_origin.x + i as f64 * self.spacing,
            self.raster_origin.y + j as f64 * self.spacing,
        )
    }

    /// Bits where the field is strictly below `r`.
    pub fn threshold(&self, r: f64) -> Result<BitRaster> {
        let mut out = BitRaster::new(self.raster_origin, self.spacing, self.width, self.height)?;
        for j in 0..self.height {
            for i in 0..self.width {
                if self.value(i, j) < r {
                    out.set(i, j, true);
                }
            }
        }
        Ok(out)
    }

    pub fn center_point(&self) -> Option<Point2> {
        self.center_point
    }
}

/// Compute the distance field to `center` on a grid over `window`,
/// exact wherever the value is at most `cap`.
pub fn ball_distance_field(
    pattern: &SmockingPattern,
    center: MetricNode,
    cap: f64,
    window: &BoundingBox,
    spacing: f64,
) -> Result<BallField> {
    if spacing <= 0.0 {
        return Err(Error::Domain("raster spacing must be positive".into()));
    }
    if !window.is_valid() {
        return Err(Error::Domain("invalid raster window".into()));
    }
    let reached = if pattern.has_stitches() {
        stitch_distances_from(pattern, center, cap)?
    } else {
        Vec::new()
    };
    let center_point = match center {
        MetricNode::Point(p) => {
            // Points sitting on a stitch are canonicalized inside the
            // engine; the direct term is still valid either way.
            Some(p)
        }
        MetricNode::Stitch(_) => None,
    };
    let width = ((window.max.x - window.min.x) / spacing).ceil() as usize + 1;
    let height = ((window.max.y - window.min.y) / spacing).ceil() as usize + 1;
    let mut values = vec![f64::INFINITY; width * height];
    // Rows are independent.
    values
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(j, row)| {
            for (i, out) in row.iter_mut().enumerate() {
                let x = Point2::new(
                    window.min.x + i as f64 * spacing,
                    window.min.y + j as f64 * spacing,
                );
                let mut best = match center_point {
                    Some(c) => x.dist(c),
                    None => f64::INFINITY,
                };
                for (st, g) in &reached {
                    let lb = (x.dist(st.center) - st.radius).max(0.0) + g;
                    if lb >= best {
                        continue;
                    }
                    let cand = point_stitch_distance(x, st) + g;
                    if cand < best {
                        best = cand;
                    }
                }
                *out = best;
            }
        });
    Ok(BallField {
        raster_origin: window.min,
        spacing,
        width,
        height,
        values,
        cap,
        reached,
        center_point,
    })
}

/// Raster of the open-ball preimage of radius `r` around `center`. Returns
/// the raster and a flag set when the ball reaches the window boundary
/// (i.e. the window clipped it).
pub fn ball_raster(
    pattern: &SmockingPattern,
    center: MetricNode,
    r: f64,
    spacing: f64,
    window: &BoundingBox,
) -> Result<(BitRaster, bool)> {
    if r <= 0.0 {
        return Err(Error::Domain("ball radius must be positive".into()));
    }
    let field = ball_distance_field(pattern, center, r, window, spacing)?;
    let bits = field.threshold(r)?;
    let mut clipped = false;
    for i in 0..bits.width {
        clipped |= bits.get(i, 0) || bits.get(i, bits.height - 1);
    }
    for j in 0..bits.height {
        clipped |= bits.get(0, j) || bits.get(bits.width - 1, j);
    }
    Ok((bits, clipped))
}

/// Raster of the open tube of radius `r` around one stitch.
pub fn stitch_tube_raster(
    stitch: &Stitch,
    r: f64,
    spacing: f64,
    window: &BoundingBox,
) -> Result<BitRaster> {
    let mut out = BitRaster::covering(window, spacing)?;
    out.fill(|p| point_stitch_distance(p, stitch) < r);
    Ok(out)
}

/// Raster of a Euclidean open disk.
pub fn disk_raster(
    center: Point2,
    r: f64,
    spacing: f64,
    window: &BoundingBox,
) -> Result<BitRaster> {
    let mut out = BitRaster::covering(window, spacing)?;
    out.fill(|p| p.dist(center) < r);
    Ok(out)
}

/// Stitches whose smocked distance to `center` is within `tol` of `r`.
pub fn frontier_stitches(
    pattern: &SmockingPattern,
    center: MetricNode,
    r: f64,
    tol: f64,
) -> Result<FrontierSet> {
    if r <= 0.0 {
        return Err(Error::Domain("frontier radius must be positive".into()));
    }
    let reached = stitch_distances_from(pattern, center, r + tol)?;
    let stitches = reached
        .into_iter()
        .filter(|(_, d)| (d - r).abs() <= tol)
        .map(|(st, d)| FrontierStitch {
            anchor: [st.anchor.x, st.anchor.y],
            slot: st.id.slot,
            distance: d,
        })
        .collect();
    Ok(FrontierSet {
        radius: r,
        stitches,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub r: f64,
    pub s: f64,
    pub spacing: f64,
    pub cells: usize,
    /// Frontier stitches used for the tube terms.
    pub frontier: Vec<FrontierStitch>,
    /// Conservative lower bound on the gap to the nearest stitch outside
    /// the closed ball.
    pub delta_bar: f64,
    pub mismatched: usize,
    pub excused: usize,
    pub sample_mismatches: Vec<[f64; 2]>,
    pub ok: bool,
}

/// Verify the ball-growth identity at raster resolution: the preimage of
/// `B_{r+s}` equals the disk dilation of the preimage of `B_r` together
/// with the `s`-tubes of the stitches that just touch the closed ball of
/// radius `r`. Mismatches are excused only within a boundary band of one
/// and a half cell diagonals around the `r+s` level set.
pub fn growth_check(
    pattern: &SmockingPattern,
    center: MetricNode,
    r: f64,
    s: f64,
    spacing: f64,
) -> Result<GrowthReport> {
    if r <= 0.0 || s <= 0.0 {
        return Err(Error::Domain("growth check needs positive r and s".into()));
    }
    let tol = crate::GEOM_TOL * r.max(1.0);
    let band = 1.5 * std::f64::consts::SQRT_2 * spacing;
    let cap = r + s + band + 10.0 * tol;

    // Window big enough to contain the preimage of the larger ball.
    let bounds = crate::metric::chain_bounds(pattern);
    let src = match center {
        MetricNode::Point(p) => p,
        MetricNode::Stitch(id) => pattern.stitch(id)?.center,
    };
    let extent = cap * bounds.stretch + 2.0 * bounds.l_max + 2.0;
    let window = BoundingBox::new(src, src).inflate(extent);

    let field = ball_distance_field(pattern, center, cap, &window, spacing)?;

    // Frontier and the separation to the nearest strictly-outside stitch.
    let mut frontier = Vec::new();
    let mut outside_gap = cap - r;
    let mut worst: Option<StitchId> = None;
    for (st, d) in &field.reached {
        if (d - r).abs() <= tol {
            frontier.push((st.clone(), *d));
        } else if *d > r && d - r < outside_gap {
            outside_gap = d - r;
            worst = Some(st.id);
        }
    }
    if s > outside_gap + tol {
        return Err(Error::Domain(format!(
            "step s = {s} exceeds the gap {outside_gap} to stitch {} outside the ball",
            worst.map(|id| id.to_string()).unwrap_or_default()
        )));
    }

    let lhs = field.threshold(r + s)?;
    let inner = field.threshold(r)?;
    let mut rhs = inner.dilate(s)?;
    for (st, _) in &frontier {
        // Exact open tube of radius s around a frontier stitch.
        for j in 0..rhs.height {
            for i in 0..rhs.width {
                if !rhs.get(i, j) {
                    let p = rhs.cell_center(i, j);
                    if (p.dist(st.center) - st.radius) < s
                        && point_stitch_distance(p, st) < s
                    {
                        rhs.set(i, j, true);
                    }
                }
            }
        }
    }

    let mut mismatched = 0usize;
    let mut excused = 0usize;
    let mut sample = Vec::new();
    for j in 0..lhs.height {
        for i in 0..lhs.width {
            if lhs.get(i, j) != rhs.get(i, j) {
                let v = field.value(i, j);
                if (v - (r + s)).abs() <= band {
                    excused += 1;
                } else {
                    mismatched += 1;
                    if sample.len() < 16 {
                        let p = lhs.cell_center(i, j);
                        sample.push([p.x, p.y]);
                    }
                }
            }
        }
    }
    Ok(GrowthReport {
        r,
        s,
        spacing,
        cells: lhs.len(),
        frontier: frontier
            .iter()
            .map(|(st, d)| FrontierStitch {
                anchor: [st.anchor.x, st.anchor.y],
                slot: st.id.slot,
                distance: *d,
            })
            .collect(),
        delta_bar: outside_gap,
        mismatched,
        excused,
        sample_mismatches: sample,
        ok: mismatched == 0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PlusProbeReport {
    pub r: f64,
    pub k: f64,
    pub cells: usize,
    pub inner_violations: usize,
    pub outer_violations: usize,
    pub ok: bool,
}

/// Probe the taxicab sandwich for balls of the plus pattern: with
/// `k = ceil(r)`, the taxicab ball of radius `3(k-2)` should sit inside
/// the preimage of `B_r`, which should sit inside the taxicab ball of
/// radius `3k`.
pub fn ball_shape_probe_plus(
    pattern: &SmockingPattern,
    r: f64,
    spacing: f64,
) -> Result<PlusProbeReport> {
    if r <= 1.0 {
        return Err(Error::Domain("plus-ball probe needs r > 1".into()));
    }
    let k = r.ceil();
    let half = 3.0 * k + 2.0;
    let window = BoundingBox::new(Point2::new(-half, -half), Point2::new(half, half));
    let center = MetricNode::Stitch(StitchId::new((0, 0), 0));
    let field = ball_distance_field(pattern, center, r, &window, spacing)?;
    let inner_r = 3.0 * (k - 2.0);
    let outer_r = 3.0 * k;
    let mut inner_violations = 0usize;
    let mut outer_violations = 0usize;
    for j in 0..field.height {
        for i in 0..field.width {
            let p = field.cell_center(i, j);
            let taxi = p.x.abs() + p.y.abs();
            let inside = field.value(i, j) < r;
            if taxi < inner_r && !inside {
                inner_violations += 1;
            }
            if inside && taxi >= outer_r {
                outer_violations += 1;
            }
        }
    }
    Ok(PlusProbeReport {
        r,
        k,
        cells: field.width * field.height,
        inner_violations,
        outer_violations,
        ok: inner_violations == 0 && outer_violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::builtin_pattern;

    #[test]
    fn small_ball_about_stitch_is_tube() {
        let p = builtin_pattern("plus").unwrap();
        let st = p.stitch(StitchId::new((0, 0), 0)).unwrap();
        let window = BoundingBox::new(Point2::new(-2.5, -2.5), Point2::new(2.5, 2.5));
        let (ball, _) = ball_raster(&p, MetricNode::Stitch(st.id), 0.9, 0.05, &window).unwrap();
        let tube = stitch_tube_raster(&st, 0.9, 0.05, &window).unwrap();
        assert_eq!(ball.difference_cells(&tube).unwrap().len(), 0);
        assert_eq!(tube.difference_cells(&ball).unwrap().len(), 0);
    }

    #[test]
    fn small_ball_about_point_is_disk() {
        let p = builtin_pattern("plus").unwrap();
        let x = Point2::new(1.5, 1.5);
        // D(x) = sqrt(2.5) there; r below that gives a plain disk.
        let window = BoundingBox::new(Point2::new(-1.0, -1.0), Point2::new(4.0, 4.0));
        let (ball, _) = ball_raster(&p, MetricNode::Point(x), 1.2, 0.05, &window).unwrap();
        let disk = disk_raster(x, 1.2, 0.05, &window).unwrap();
        assert_eq!(ball.difference_cells(&disk).unwrap().len(), 0);
        assert_eq!(disk.difference_cells(&ball).unwrap().len(), 0);
    }

    #[test]
    fn plus_frontier_at_radius_one() {
        let p = builtin_pattern("plus").unwrap();
        let f = frontier_stitches(
            &p,
            MetricNode::Stitch(StitchId::new((0, 0), 0)),
            1.0,
            1e-9,
        )
        .unwrap();
        let mut anchors: Vec<(i64, i64)> = f
            .stitches
            .iter()
            .map(|s| (s.anchor[0] as i64, s.anchor[1] as i64))
            .collect();
        anchors.sort();
        assert_eq!(anchors, vec![(-3, 0), (0, -3), (0, 3), (3, 0)]);
    }

    #[test]
    fn woven_frontier_at_radius_two() {
        let p = builtin_pattern("woven").unwrap();
        let f = frontier_stitches(
            &p,
            MetricNode::Stitch(StitchId::new((0, 0), 0)),
            2.0,
            1e-9,
        )
        .unwrap();
        let mut anchors: Vec<(i64, i64)> = f
            .stitches
            .iter()
            .map(|s| (s.anchor[0] as i64, s.anchor[1] as i64))
            .collect();
        anchors.sort();
        assert_eq!(
            anchors,
            vec![
                (-4, 0),
                (-2, -2),
                (-2, 2),
                (0, -4),
                (0, 4),
                (2, -2),
                (2, 2),
                (4, 0)
            ]
        );
    }

    #[test]
    fn bumpy_frontier_sequence() {
        let p = builtin_pattern("bumpy").unwrap();
        let center = MetricNode::Stitch(StitchId::new((0, 0), 0));
        let f = frontier_stitches(&p, center, 2.0, 1e-9).unwrap();
        let mut a: Vec<(i64, i64)> = f
            .stitches
            .iter()
            .map(|s| (s.anchor[0] as i64, s.anchor[1] as i64))
            .collect();
        a.sort();
        assert_eq!(a, vec![(-3, 0), (0, -3), (0, 3), (3, 0)]);
        let f = frontier_stitches(&p, center, 8f64.sqrt(), 1e-9).unwrap();
        let mut a: Vec<(i64, i64)> = f
            .stitches
            .iter()
            .map(|s| (s.anchor[0] as i64, s.anchor[1] as i64))
            .collect();
        a.sort();
        assert_eq!(a, vec![(-3, -3), (-3, 3), (3, -3), (3, 3)]);
        // Radius below the nearest stitch distance gives an empty frontier.
        let f = frontier_stitches(&p, center, 0.5, 1e-9).unwrap();
        assert!(f.stitches.is_empty());
    }

    #[test]
    fn growth_check_woven_r1_s1() {
        // One growth step from the tube ball: four frontier stitches, and
        // the ball of radius 2 is their 1-tubes plus the dilated tube ball.
        let p = builtin_pattern("woven").unwrap();
        let report = growth_check(
            &p,
            MetricNode::Stitch(StitchId::new((0, 0), 0)),
            1.0,
            1.0,
            0.04,
        )
        .unwrap();
        assert_eq!(report.frontier.len(), 4);
        let mut a: Vec<(i64, i64)> = report
            .frontier
            .iter()
            .map(|s| (s.anchor[0] as i64, s.anchor[1] as i64))
            .collect();
        a.sort();
        assert_eq!(a, vec![(-2, 0), (0, -2), (0, 2), (2, 0)]);
        assert!(report.ok, "{:?}", report.sample_mismatches);
    }

    #[test]
    fn growth_with_tiny_step_reduces_to_the_ball() {
        let p = builtin_pattern("plus").unwrap();
        let report = growth_check(
            &p,
            MetricNode::Stitch(StitchId::new((0, 0), 0)),
            0.6,
            0.02,
            0.02,
        )
        .unwrap();
        assert!(report.ok);
    }

    #[test]
    fn growth_check_woven_r2_s1() {
        let p = builtin_pattern("woven").unwrap();
        let report = growth_check(
            &p,
            MetricNode::Stitch(StitchId::new((0, 0), 0)),
            2.0,
            1.0,
            0.05,
        )
        .unwrap();
        assert_eq!(report.frontier.len(), 8);
        assert!(report.ok, "mismatched cells: {:?}", report.sample_mismatches);
    }

    #[test]
    fn plus_taxi_sandwich() {
        let p = builtin_pattern("plus").unwrap();
        let probe = ball_shape_probe_plus(&p, 4.0, 0.1).unwrap();
        assert!(probe.ok, "{probe:?}");
        let probe = ball_shape_probe_plus(&p, 1.5, 0.1).unwrap();
        assert!(probe.ok, "{probe:?}");
    }
}
