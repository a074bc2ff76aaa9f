//! Closed-form stitch distances for the plus, woven and bumpy patterns,
//! the limit norms they converge to under rescaling, and the machinery
//! assembling uniform deviation bounds between the pseudometric and a norm.

use crate::error::{Error, Result};
use crate::field::PairEvaluator;
use crate::geom::Point2;
use crate::pattern::SmockingPattern;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// A planar norm from the family used by the limit spaces: either a scaled
/// taxicab norm or the `a min(|x|,|y|) + b ||x|-|y||` family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormSpec {
    /// `scale * (|x1| + |x2|)`
    Taxi { scale: f64 },
    /// `a * min(|x1|, |x2|) + b * ||x1| - |x2||`
    MinAbsDiff { a: f64, b: f64 },
    /// Plain Euclidean norm (the pulled-thread limit).
    Euclidean,
}

impl NormSpec {
    /// Limit norm of the plus pattern: `(|x1| + |x2|) / 3`.
    pub fn plus() -> Self {
        NormSpec::Taxi { scale: 1.0 / 3.0 }
    }

    /// Limit norm of the woven pattern: `(|x1| + |x2|) / 2`.
    pub fn woven() -> Self {
        NormSpec::Taxi { scale: 0.5 }
    }

    /// Limit norm of the bumpy pattern:
    /// `(2 sqrt2 / 3) min(|x1|,|x2|) + (2/3) ||x1|-|x2||`.
    pub fn bumpy() -> Self {
        NormSpec::MinAbsDiff {
            a: 2.0 * 2f64.sqrt() / 3.0,
            b: 2.0 / 3.0,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "plus" => Ok(NormSpec::plus()),
            "woven" => Ok(NormSpec::woven()),
            "bumpy" => Ok(NormSpec::bumpy()),
            "euclidean" => Ok(NormSpec::Euclidean),
            _ => Err(Error::Domain(format!("unknown norm '{name}'"))),
        }
    }

    /// Validate the norm axioms on seeded samples: definiteness, absolute
    /// homogeneity, triangle inequality.
    pub fn validate(&self, seed: u64) -> Result<()> {
        match self {
            NormSpec::Taxi { scale } if *scale <= 0.0 => {
                return Err(Error::Validation("taxi scale must be positive".into()))
            }
            NormSpec::MinAbsDiff { a, b } if *a < 0.0 || *b <= 0.0 => {
                return Err(Error::Validation(
                    "min/abs-diff coefficients must be nonnegative with b > 0".into(),
                ))
            }
            _ => {}
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..2000 {
            let x = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let y = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let fx = norm_eval(self, x);
            let fy = norm_eval(self, y);
            let fxy = norm_eval(self, x + y);
            if fxy > fx + fy + 1e-12 {
                return Err(Error::Validation(format!(
                    "triangle inequality fails at {x:?}, {y:?}"
                )));
            }
            let lam = rng.gen_range(-4.0..4.0);
            if (norm_eval(self, x * lam) - lam.abs() * fx).abs() > 1e-9 * (1.0 + fx) {
                return Err(Error::Validation("homogeneity fails".into()));
            }
            if fx <= 0.0 && x.norm() > 1e-12 {
                return Err(Error::Validation("definiteness fails".into()));
            }
        }
        Ok(())
    }
}

/// Evaluate a norm at a point.
pub fn norm_eval(spec: &NormSpec, x: Point2) -> f64 {
    match spec {
        NormSpec::Taxi { scale } => scale * (x.x.abs() + x.y.abs()),
        NormSpec::MinAbsDiff { a, b } => {
            let (p, q) = (x.x.abs(), x.y.abs());
            a * p.min(q) + b * (p - q).abs()
        }
        NormSpec::Euclidean => x.norm(),
    }
}

/// Pattern kinds with proven closed-form stitch distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormKind {
    Plus,
    Woven,
    Bumpy,
}

impl ClosedFormKind {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "plus" => Ok(ClosedFormKind::Plus),
            "woven" => Ok(ClosedFormKind::Woven),
            "bumpy" => Ok(ClosedFormKind::Bumpy),
            _ => Err(Error::Domain(format!(
                "no closed-form distance for pattern '{name}'"
            ))),
        }
    }

    pub fn pattern_name(&self) -> &'static str {
        match self {
            ClosedFormKind::Plus => "plus",
            ClosedFormKind::Woven => "woven",
            ClosedFormKind::Bumpy => "bumpy",
        }
    }

    pub fn norm(&self) -> NormSpec {
        match self {
            ClosedFormKind::Plus => NormSpec::plus(),
            ClosedFormKind::Woven => NormSpec::woven(),
            ClosedFormKind::Bumpy => NormSpec::bumpy(),
        }
    }

    fn check_index(&self, j: (i64, i64)) -> Result<()> {
        let ok = match self {
            ClosedFormKind::Plus | ClosedFormKind::Bumpy => j.0 % 3 == 0 && j.1 % 3 == 0,
            ClosedFormKind::Woven => j.0 % 2 == 0 && j.1 % 2 == 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "index ({}, {}) is not on the {} lattice",
                j.0,
                j.1,
                self.pattern_name()
            )))
        }
    }
}

/// Closed-form smocked distance between the stitches indexed `j` and `k`
/// (indices are the stitch anchors).
pub fn stitch_distance_closed_form(
    kind: ClosedFormKind,
    j: (i64, i64),
    k: (i64, i64),
) -> Result<f64> {
    kind.check_index(j)?;
    kind.check_index(k)?;
    let d = Point2::new((k.0 - j.0) as f64, (k.1 - j.1) as f64);
    Ok(norm_eval(&kind.norm(), d))
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormReport {
    pub pairs: usize,
    pub max_abs_error: f64,
    pub failures: Vec<ClosedFormFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormFailure {
    pub from: [i64; 2],
    pub to: [i64; 2],
    pub engine: f64,
    pub closed_form: f64,
}

/// Compare the shortest-path engine against the closed form on every index
/// pair with coordinates bounded by `window`.
pub fn closed_form_vs_engine(
    kind: ClosedFormKind,
    window: i64,
    tol: f64,
) -> Result<ClosedFormReport> {
    let pattern = crate::pattern::builtin_pattern(kind.pattern_name())?;
    let step = match kind {
        ClosedFormKind::Woven => 2i64,
        _ => 3i64,
    };
    let mut indices = Vec::new();
    let mut c = -window + ((-window).rem_euclid(step));
    while c <= window {
        indices.push(c);
        c += step;
    }
    // The engine side is a translation-invariant stitch distance field, so
    // evaluate it once per index difference and sweep all ordered pairs.
    let max_dist = indices
        .iter()
        .flat_map(|&a| indices.iter().map(move |&b| (a, b)))
        .map(|(a, b)| {
            stitch_distance_closed_form(kind, (indices[0], indices[0]), (a, b)).unwrap_or(0.0)
        })
        .fold(0.0f64, f64::max);
    let field = crate::field::StitchDistanceField::build(&pattern, max_dist + 1.0)?;

    let mut report = ClosedFormReport {
        pairs: 0,
        max_abs_error: 0.0,
        failures: Vec::new(),
    };
    for &jx in &indices {
        for &jy in &indices {
            for &kx in &indices {
                for &ky in &indices {
                    let j = (jx, jy);
                    let k = (kx, ky);
                    let want = stitch_distance_closed_form(kind, j, k)?;
                    let got = field.anchor_distance(
                        Point2::new(jx as f64, jy as f64),
                        Point2::new(kx as f64, ky as f64),
                    )?;
                    report.pairs += 1;
                    let err = (got - want).abs();
                    if err > report.max_abs_error {
                        report.max_abs_error = err;
                    }
                    if err > tol {
                        report.failures.push(ClosedFormFailure {
                            from: [jx, jy],
                            to: [kx, ky],
                            engine: got,
                            closed_form: want,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Sampled lower bound on the dilation (Lipschitz constant) of a norm,
/// from random pairs plus axis and diagonal directions.
pub fn dilation_estimate(spec: &NormSpec, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut consider = |a: Point2, b: Point2| {
        let e = a.dist(b);
        if e > 1e-12 {
            let r = (norm_eval(spec, a) - norm_eval(spec, b)).abs() / e;
            if r > best {
                best = r;
            }
        }
    };
    for d in [
        Point2::new(1.0, 0.0),
        Point2::new(0.0, 1.0),
        Point2::new(1.0, 1.0),
        Point2::new(1.0, -1.0),
    ] {
        consider(d, Point2::ORIGIN);
    }
    for _ in 0..samples {
        let a = Point2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let b = Point2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        consider(a, b);
    }
    best
}

/// Analytic dilation upper bounds used when assembling deviation bounds.
pub fn dilation_upper_bound(kind: ClosedFormKind) -> f64 {
    match kind {
        ClosedFormKind::Plus | ClosedFormKind::Woven => 1.0,
        ClosedFormKind::Bumpy => 4.0 / 3.0,
    }
}

/// A uniform bound `K` on `|d(x, y) - F(x - y)|` with the ingredients it
/// was assembled from.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DeviationBound {
    pub k: f64,
    pub h: f64,
    pub l: f64,
    pub c: f64,
    pub dil: f64,
}

/// Assemble the deviation bound `K = 2h + C + 2 dil (h + L)`: moving each
/// endpoint to its nearest stitch costs at most `h` of distance each, the
/// closed form is off by at most `C` on stitches, and evaluating the norm
/// at points instead of stitch anchors costs at most `dil (h + L)` per
/// endpoint.
pub fn deviation_bound_assemble(h: f64, l: f64, c: f64, dil: f64) -> Result<DeviationBound> {
    if h < 0.0 || l < 0.0 || c < 0.0 || dil < 0.0 {
        return Err(Error::Domain("bound ingredients must be nonnegative".into()));
    }
    Ok(DeviationBound {
        k: 2.0 * h + c + 2.0 * dil * (h + l),
        h,
        l,
        c,
        dil,
    })
}

/// Per-space deviation bound with exact closed forms (C = 0) and the
/// analytic dilation bound.
pub fn deviation_bound_for(kind: ClosedFormKind, h: f64, l: f64) -> Result<DeviationBound> {
    deviation_bound_assemble(h, l, 0.0, dilation_upper_bound(kind))
}

#[derive(Debug, Clone, Serialize)]
pub struct PointBoundReport {
    pub samples: usize,
    pub bound_k: f64,
    pub max_dev: f64,
    pub exceeded: bool,
    pub worst_pair: [[f64; 2]; 2],
}

/// Sample random point pairs in `[-window, window]^2` and report the
/// maximum of `|d(x,y) - F(x - y)|` against the bound `K`.
pub fn point_bound_check(
    pattern: &SmockingPattern,
    spec: &NormSpec,
    k: f64,
    samples: usize,
    seed: u64,
    window: f64,
) -> Result<PointBoundReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Point2, Point2)> = (0..samples)
        .map(|_| {
            (
                Point2::new(rng.gen_range(-window..window), rng.gen_range(-window..window)),
                Point2::new(rng.gen_range(-window..window), rng.gen_range(-window..window)),
            )
        })
        .collect();
    let eval = PairEvaluator::build(pattern, &pairs)?;
    let devs: Vec<Result<f64>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(a, b))| Ok((eval.distance(i)? - norm_eval(spec, a - b)).abs()))
        .collect();
    let mut max_dev = f64::NEG_INFINITY;
    let mut worst = [[0.0; 2]; 2];
    for (i, dev) in devs.into_iter().enumerate() {
        let dev = dev?;
        if dev > max_dev {
            max_dev = dev;
            let (a, b) = pairs[i];
            worst = [[a.x, a.y], [b.x, b.y]];
        }
    }
    Ok(PointBoundReport {
        samples,
        bound_k: k,
        max_dev,
        exceeded: max_dev > k,
        worst_pair: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_values_match_known_points() {
        assert!((norm_eval(&NormSpec::plus(), Point2::new(3.0, 0.0)) - 1.0).abs() < 1e-15);
        assert_eq!(norm_eval(&NormSpec::plus(), Point2::ORIGIN), 0.0);
        let f = norm_eval(&NormSpec::bumpy(), Point2::new(3.0, 6.0));
        assert!((f - (2.0 * 2f64.sqrt() + 2.0)).abs() < 1e-12);
        let f = norm_eval(&NormSpec::woven(), Point2::new(0.0, 4.0));
        assert!((f - 2.0).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_match_anchor_values() {
        assert!(
            (stitch_distance_closed_form(ClosedFormKind::Plus, (0, 0), (3, 0)).unwrap() - 1.0)
                .abs()
                < 1e-15
        );
        assert!(
            (stitch_distance_closed_form(ClosedFormKind::Woven, (0, 0), (2, 2)).unwrap() - 2.0)
                .abs()
                < 1e-15
        );
        assert!(
            (stitch_distance_closed_form(ClosedFormKind::Bumpy, (0, 0), (0, 3)).unwrap() - 2.0)
                .abs()
                < 1e-15
        );
        assert!(stitch_distance_closed_form(ClosedFormKind::Plus, (1, 0), (3, 0)).is_err());
    }

    #[test]
    fn norms_validate_and_dilations_are_bounded() {
        for spec in [NormSpec::plus(), NormSpec::woven(), NormSpec::bumpy()] {
            spec.validate(3).unwrap();
        }
        let d = dilation_estimate(&NormSpec::plus(), 100_000, 5);
        assert!(d <= 1.0 + 1e-12);
        assert!((d - 2f64.sqrt() / 3.0).abs() < 1e-3);
        let d = dilation_estimate(&NormSpec::bumpy(), 100_000, 5);
        assert!(d <= 4.0 / 3.0 + 1e-12);
    }

    #[test]
    fn bound_assembly_reproduces_per_space_constants() {
        // Taxi-family spaces: 2h + 2(h + L) = 4h + 2L.
        let b = deviation_bound_for(ClosedFormKind::Woven, 1.0, 2.0).unwrap();
        assert!((b.k - 8.0).abs() < 1e-12);
        let b = deviation_bound_for(ClosedFormKind::Plus, 2.5f64.sqrt(), 2.0).unwrap();
        assert!((b.k - (4.0 * 2.5f64.sqrt() + 4.0)).abs() < 1e-12);
        // Bumpy: 2h + (8/3)(h + L) = (14/3)h + (8/3)L.
        let s = 2f64.sqrt();
        let b = deviation_bound_for(ClosedFormKind::Bumpy, s, s).unwrap();
        assert!((b.k - 22.0 * s / 3.0).abs() < 1e-12);
        assert!((deviation_bound_assemble(0.0, 0.0, 0.0, 0.0).unwrap().k).abs() == 0.0);
    }
}
