//! Gromov-Hausdorff machinery: finite metric samples, correspondence
//! distortion, Hausdorff distance, and the rescaling experiments that
//! witness tangent cones at infinity.
//!
//! The rescaling distortion samples a grid `u` over `[-1, 1]^2`, places
//! the points `w = R r u`, keeps those within smocked distance `R r` of
//! the base stitch, and measures
//! `sup |d(w1, w2)/R - F(f(w1) - f(w2))|` over a deterministic subset of
//! sample pairs, where `f` clamps `w/R` radially into the closed F-ball of
//! radius `r`. The subset (stride plus a pair-separation cap) keeps the
//! measurement a sampled lower bound of the true sup while making large
//! scales tractable.

use crate::error::{Error, Result};
use crate::field::PairEvaluator;
use crate::geom::Point2;
use crate::norms::{norm_eval, NormSpec};
use crate::pattern::{stitch_closest_point, SmockingPattern};
use rayon::prelude::*;
use serde::Serialize;

/// A finite metric space given by labels and a distance matrix.
#[derive(Debug, Clone)]
pub struct FiniteMetricSample {
    pub labels: Vec<String>,
    dist: Vec<f64>,
    n: usize,
}

impl FiniteMetricSample {
    pub fn new(labels: Vec<String>, dist: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if dist.len() != n * n {
            return Err(Error::Validation("distance matrix size mismatch".into()));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::Validation("nonzero diagonal".into()));
            }
            for j in 0..n {
                if dist[i * n + j] != dist[j * n + i] {
                    return Err(Error::Validation("asymmetric distance matrix".into()));
                }
                for k in 0..n {
                    if dist[i * n + j] > dist[i * n + k] + dist[k * n + j] + 1e-9 {
                        return Err(Error::Validation("triangle inequality violated".into()));
                    }
                }
            }
        }
        Ok(FiniteMetricSample { labels, dist, n })
    }

    /// Sample a metric over points with a callback.
    pub fn from_points<T>(
        points: &[T],
        label: impl Fn(&T) -> String,
        metric: impl Fn(&T, &T) -> f64,
    ) -> Result<Self> {
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = if i == j {
                    0.0
                } else if j < i {
                    dist[j * n + i]
                } else {
                    metric(&points[i], &points[j])
                };
                dist[i * n + j] = d;
            }
        }
        FiniteMetricSample::new(points.iter().map(label).collect(), dist)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }
}

/// A relation between two samples covering both sides.
#[derive(Debug, Clone)]
pub struct Correspondence {
    pub pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    pub fn identity(n: usize) -> Self {
        Correspondence {
            pairs: (0..n).map(|i| (i, i)).collect(),
        }
    }
}

/// Sup over pairs of correspondence pairs of the distance discrepancy.
/// The Gromov-Hausdorff distance is below twice this value.
pub fn correspondence_distortion(
    c: &Correspondence,
    dx: &FiniteMetricSample,
    dy: &FiniteMetricSample,
) -> Result<f64> {
    let mut seen_x = vec![false; dx.len()];
    let mut seen_y = vec![false; dy.len()];
    for &(i, j) in &c.pairs {
        if i >= dx.len() || j >= dy.len() {
            return Err(Error::Domain("correspondence index out of range".into()));
        }
        seen_x[i] = true;
        seen_y[j] = true;
    }
    if !seen_x.iter().all(|&b| b) || !seen_y.iter().all(|&b| b) {
        return Err(Error::Domain(
            "correspondence must cover both samples".into(),
        ));
    }
    let mut sup = 0.0f64;
    for a in 0..c.pairs.len() {
        let (x1, y1) = c.pairs[a];
        for b in (a + 1)..c.pairs.len() {
            let (x2, y2) = c.pairs[b];
            let d = (dx.distance(x1, x2) - dy.distance(y1, y2)).abs();
            if d > sup {
                sup = d;
            }
        }
    }
    Ok(sup)
}

/// Hausdorff distance between finite point sets under a common metric:
/// the max of the two directed sup-min distances.
pub fn hausdorff_distance<T>(a: &[T], b: &[T], d: impl Fn(&T, &T) -> f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("hausdorff distance of an empty set".into()));
    }
    let directed = |from: &[T], to: &[T]| -> f64 {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| d(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// One row of a rescaling experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RescaleRow {
    pub scale: f64,
    pub epsilon: f64,
    /// Analytic ceiling of the sampled distortion, `3 K / R`.
    pub bound: f64,
    pub samples: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaleReport {
    pub rows: Vec<RescaleRow>,
}

/// Base point of the rescalings: the closest point of the stitch nearest
/// the origin (so its image is the stitch itself).
fn base_point(pattern: &SmockingPattern) -> Result<Point2> {
    let (_, id) = pattern.distance_to_smocking_set(Point2::ORIGIN)?;
    let st = pattern.stitch(id)?;
    Ok(stitch_closest_point(Point2::ORIGIN, &st))
}

fn radial_clamp(spec: &NormSpec, w: Point2, scale: f64, r: f64) -> Point2 {
    let x = w * (1.0 / scale);
    let f = norm_eval(spec, x);
    if f > r {
        x * (r / f)
    } else {
        x
    }
}

/// Sampled distortion of the rescaled correspondence at one scale.
pub fn rescaled_ball_distortion(
    pattern: &SmockingPattern,
    spec: &NormSpec,
    scale: f64,
    r: f64,
    grid: f64,
) -> Result<RescaleRow> {
    if scale < 1.0 {
        return Err(Error::Domain("scale must be at least 1".into()));
    }
    if r <= 0.0 {
        return Err(Error::Domain("ball radius must be positive".into()));
    }
    if grid <= 0.0 || (2.0 / grid) < 8.0 {
        return Err(Error::Domain(
            "grid too coarse: need at least 8 samples per axis".into(),
        ));
    }
    let x0 = base_point(pattern)?;
    let steps = (2.0 / grid).round() as usize;
    let mut samples: Vec<Point2> = Vec::new();
    for i in 0..=steps {
        for j in 0..=steps {
            let u = Point2::new(-1.0 + i as f64 * grid, -1.0 + j as f64 * grid);
            samples.push(u * (scale * r));
        }
    }

    // Deterministic pair subset: stride the grid, cap pair separation.
    let max_pts = 320usize;
    let stride = samples.len().div_ceil(max_pts).max(1);
    let picked: Vec<usize> = (0..samples.len()).step_by(stride).collect();
    let sep_cap = 1.5 * scale * r;
    let mut dist_pairs: Vec<(usize, usize)> = Vec::new();
    for (a, &i) in picked.iter().enumerate() {
        for &j in &picked[(a + 1)..] {
            if samples[i].dist(samples[j]) <= sep_cap {
                dist_pairs.push((i, j));
            }
        }
    }

    // One evaluator serves both the membership filter and the distortion
    // pairs, sharing a single distance field.
    let mut all_pairs: Vec<(Point2, Point2)> =
        samples.iter().map(|&w| (w, x0)).collect();
    all_pairs.extend(dist_pairs.iter().map(|&(i, j)| (samples[i], samples[j])));
    let eval = PairEvaluator::build(pattern, &all_pairs)?;

    let mut member = vec![false; samples.len()];
    let mut total_inside = 0usize;
    for i in 0..samples.len() {
        if eval.distance(i)? <= scale * r + 1e-9 {
            member[i] = true;
            total_inside += 1;
        }
    }

    let per_pair: Vec<Result<f64>> = dist_pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            if !member[i] || !member[j] {
                return Ok(f64::NEG_INFINITY);
            }
            let d = eval.distance(samples.len() + k)? / scale;
            let f1 = radial_clamp(spec, samples[i], scale, r);
            let f2 = radial_clamp(spec, samples[j], scale, r);
            Ok((d - norm_eval(spec, f1 - f2)).abs())
        })
        .collect();
    let mut epsilon = 0.0f64;
    let mut used = 0usize;
    for e in per_pair {
        let e = e?;
        if e.is_finite() {
            used += 1;
            if e > epsilon {
                epsilon = e;
            }
        }
    }
    Ok(RescaleRow {
        scale,
        epsilon,
        bound: f64::NAN,
        samples: total_inside,
        pairs: used,
    })
}

/// Run the distortion measurement across ascending scales. `k_dev` is the
/// uniform deviation bound between the pseudometric and the norm; the
/// reported per-row ceiling is `3 k_dev / R`.
pub fn convergence_experiment(
    pattern: &SmockingPattern,
    spec: &NormSpec,
    k_dev: f64,
    scales: &[f64],
    r: f64,
    grid: f64,
) -> Result<RescaleReport> {
    if scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("scales must be strictly ascending".into()));
    }
    let mut rows = Vec::new();
    for &scale in scales {
        let mut row = rescaled_ball_distortion(pattern, spec, scale, r, grid)?;
        row.bound = 3.0 * k_dev / scale;
        rows.push(row);
    }
    Ok(RescaleReport { rows })
}
