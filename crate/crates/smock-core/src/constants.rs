//! Smocking constants: separation factor, stitch lengths, and the
//! smocking depth with a certified bracket.

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::pattern::SmockingPattern;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// The constants of a pattern. The depth is reported as a certified
/// interval `[depth_lo, depth_hi]` with a witness sample point.
#[derive(Debug, Clone, Serialize)]
pub struct SmockingConstants {
    pub delta: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub depth_lo: f64,
    pub depth_hi: f64,
    pub depth_witness: [f64; 2],
}

/// Minimal set distance between distinct stitches.
pub fn separation_factor(pattern: &SmockingPattern) -> Result<f64> {
    pattern.separation_factor()
}

/// (min, max) stitch diameter over all templates. For straight intervals
/// the diameter is the interval length; for other stitches it is attained
/// at segment endpoints.
pub fn smocking_lengths(pattern: &SmockingPattern) -> Result<(f64, f64)> {
    let all: Vec<f64> = pattern
        .templates()
        .iter()
        .chain(pattern.fixed_stitches().iter())
        .map(|t| t.diameter())
        .collect();
    if all.is_empty() {
        return Err(Error::Validation("pattern has no stitches".into()));
    }
    let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.iter().cloned().fold(0.0f64, f64::max);
    Ok((lo, hi))
}

#[derive(PartialEq)]
struct Cell {
    /// Upper bound D(center) + half-diagonal for this cell.
    ub: f64,
    center: Point2,
    half: (f64, f64),
}

impl Eq for Cell {}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ub
            .total_cmp(&other.ub)
            .then_with(|| self.center.lex_cmp(&other.center))
    }
}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Certified bracket of the smocking depth `sup D` over the fundamental
/// parallelogram, by branch and bound: `D` is 1-Lipschitz, so a cell with
/// center `c` and half-diagonal `g` satisfies `sup_cell D <= D(c) + g`.
pub fn smocking_depth(pattern: &SmockingPattern, tol: f64) -> Result<SmockingConstants> {
    if tol <= 0.0 {
        return Err(Error::Domain("depth tolerance must be positive".into()));
    }
    let (u, v) = pattern.basis().filter(|_| pattern.is_periodic()).ok_or_else(|| {
        Error::Validation("depth undefined/infinite for non-periodic patterns".into())
    })?;
    let delta = pattern.separation_factor()?;
    let (l_min, l_max) = smocking_lengths(pattern)?;

    let eval = |p: Point2| -> Result<f64> { Ok(pattern.distance_to_smocking_set(p)?.0) };

    // Axis-aligned cover of the fundamental parallelogram {a u + b v}.
    let corners = [Point2::ORIGIN, u, v, u + v];
    let min_x = corners.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let max_x = corners.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = corners.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let max_y = corners.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);

    let mut heap: BinaryHeap<Cell> = BinaryHeap::new();
    let mut lo = 0.0f64;
    let mut witness = Point2::ORIGIN;
    let root_center = Point2::new(0.5 * (min_x + max_x), 0.5 * (min_y + max_y));
    let root_half = (0.5 * (max_x - min_x), 0.5 * (max_y - min_y));
    let d0 = eval(root_center)?;
    if d0 > lo {
        lo = d0;
        witness = root_center;
    }
    heap.push(Cell {
        ub: d0 + root_half.0.hypot(root_half.1),
        center: root_center,
        half: root_half,
    });

    let budget = 4_000_000usize;
    let mut expanded = 0usize;
    while let Some(cell) = heap.pop() {
        if cell.ub <= lo + tol {
            // Global gap certified: every remaining cell is below this one.
            return Ok(SmockingConstants {
                delta,
                l_min,
                l_max,
                depth_lo: lo,
                depth_hi: cell.ub.max(lo),
                depth_witness: [witness.x, witness.y],
            });
        }
        expanded += 1;
        if expanded > budget {
            return Err(Error::Budget(
                "depth branch-and-bound exceeded its cell budget".into(),
            ));
        }
        let h = (0.5 * cell.half.0, 0.5 * cell.half.1);
        let g = h.0.hypot(h.1);
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                let c = Point2::new(cell.center.x + sx * h.0, cell.center.y + sy * h.1);
                let d = eval(c)?;
                if d > lo {
                    lo = d;
                    witness = c;
                }
                heap.push(Cell {
                    ub: d + g,
                    center: c,
                    half: h,
                });
            }
        }
    }
    Ok(SmockingConstants {
        delta,
        l_min,
        l_max,
        depth_lo: lo,
        depth_hi: lo,
        depth_witness: [witness.x, witness.y],
    })
}

/// Full constants record for a periodic pattern.
pub fn constants(pattern: &SmockingPattern, tol: f64) -> Result<SmockingConstants> {
    smocking_depth(pattern, tol)
}

/// True iff every grid sample of the fundamental domain is within `r` of
/// the smocking set (a discrete check that the plane is covered by the
/// r-tube of the stitches).
pub fn cover_check(pattern: &SmockingPattern, r: f64, grid: f64) -> Result<bool> {
    if grid <= 0.0 {
        return Err(Error::Domain("grid spacing must be positive".into()));
    }
    if r <= 0.0 {
        return Ok(false);
    }
    let (u, v) = pattern.basis().filter(|_| pattern.is_periodic()).ok_or_else(|| {
        Error::Validation("cover check needs a periodic pattern".into())
    })?;
    // One stitch enumeration serves every sample of the fundamental domain.
    let corners = [Point2::ORIGIN, u, v, u + v];
    let cx = corners.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = corners.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let spread = corners
        .iter()
        .map(|p| p.dist(Point2::new(cx, cy)))
        .fold(0.0f64, f64::max);
    let near = pattern.stitches_in_disk(Point2::new(cx, cy), spread + r + 1.0);
    if near.is_empty() {
        return Ok(false);
    }
    let na = (u.norm() / grid).ceil() as usize + 1;
    let nb = (v.norm() / grid).ceil() as usize + 1;
    for i in 0..=na {
        for j in 0..=nb {
            let p = u * (i as f64 / na as f64) + v * (j as f64 / nb as f64);
            let mut d = f64::INFINITY;
            for st in &near {
                let lb = p.dist(st.center) - st.radius;
                if lb >= d {
                    continue;
                }
                d = d.min(crate::pattern::point_stitch_distance(p, st));
                if d < r {
                    break;
                }
            }
            if d >= r {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
