//! Property tests: lattice invariance, set-distance symmetry, tubular
//! algebra on rasters, pseudometric invariants, witness bounds, norm
//! axioms, and the pulled-thread sandwiches.

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smock_core::balls::{ball_raster, disk_raster};
use smock_core::geom::{
    segment_segment_distance, BoundingBox, Point2, Segment,
};
use smock_core::metric::{
    pulled_thread_distance, smocked_distance, smocked_distance_with_margin, MetricNode,
};
use smock_core::norms::{norm_eval, stitch_distance_closed_form, ClosedFormKind, NormSpec};
use smock_core::pattern::{builtin_pattern, stitch_stitch_distance};
use smock_core::raster::BitRaster;
use smock_core::{SmockingPattern, StitchId};

fn arb_point(w: f64) -> impl Strategy<Value = Point2> {
    (-w..w, -w..w).prop_map(|(x, y)| Point2::new(x, y))
}

fn arb_segment() -> impl Strategy<Value = Segment> {
    (arb_point(5.0), arb_point(5.0))
        .prop_filter("nondegenerate", |(a, b)| a.dist(*b) > 1e-6)
        .prop_map(|(a, b)| Segment::new(a, b))
}

proptest! {
    #[test]
    fn segment_distance_is_symmetric_exactly(s in arb_segment(), t in arb_segment()) {
        prop_assert_eq!(
            segment_segment_distance(&s, &t),
            segment_segment_distance(&t, &s)
        );
    }

    #[test]
    fn stitch_distance_symmetric_and_engine_below_euclid(
        ax in -8.0..8.0f64, ay in -8.0..8.0f64,
        bx in -8.0..8.0f64, by in -8.0..8.0f64,
        pat in prop::sample::select(vec!["woven", "plus", "bumpy", "diamond"])
    ) {
        let p = builtin_pattern(pat).unwrap();
        let a = MetricNode::point(ax, ay);
        let b = MetricNode::point(bx, by);
        let res = smocked_distance(&p, a, b).unwrap();
        let rev = smocked_distance(&p, b, a).unwrap();
        prop_assert_eq!(res.distance, rev.distance);
        // The direct segment is always a candidate.
        let euclid = Point2::new(ax, ay).dist(Point2::new(bx, by));
        prop_assert!(res.distance <= euclid + 1e-12);
        // The reported distance is the witness total, and each hop between
        // stitches is at least the separation factor long.
        prop_assert_eq!(res.distance, res.witness.total);
        let delta = p.delta_min();
        let floor = res.witness.stitch_to_stitch_hops() as f64 * delta;
        prop_assert!(res.witness.total >= floor - 1e-9);
    }

    #[test]
    fn lattice_translates_are_stitches(
        a in -6i64..6, b in -6i64..6,
        da in -2i64..2, db in -2i64..2,
        pat in prop::sample::select(vec!["woven", "plus", "checkered", "diamond", "ribbed", "bumpy"])
    ) {
        let p = builtin_pattern(pat).unwrap();
        let (u, v) = p.basis().unwrap();
        for slot in 0..p.templates().len() as u32 {
            let st = p.stitch(StitchId::new((a, b), slot)).unwrap();
            let translated = st.translate(u * (da as f64) + v * (db as f64));
            let shifted = p.stitch(StitchId::new((a + da, b + db), slot)).unwrap();
            for (s1, s2) in translated.segments.iter().zip(shifted.segments.iter()) {
                prop_assert!(s1.a.dist(s2.a) < 1e-12 && s1.b.dist(s2.b) < 1e-12);
            }
        }
    }

    #[test]
    fn translation_invariance_of_the_pseudometric(
        ax in -6.0..6.0f64, ay in -6.0..6.0f64,
        bx in -6.0..6.0f64, by in -6.0..6.0f64,
        k in 1i64..3,
        pat in prop::sample::select(vec!["woven", "plus", "bumpy"])
    ) {
        let p = builtin_pattern(pat).unwrap();
        let (u, _) = p.basis().unwrap();
        let shift = u * (k as f64);
        let a = Point2::new(ax, ay);
        let b = Point2::new(bx, by);
        let d1 = smocked_distance(&p, MetricNode::Point(a), MetricNode::Point(b)).unwrap().distance;
        let d2 = smocked_distance(
            &p,
            MetricNode::Point(a + shift),
            MetricNode::Point(b + shift),
        ).unwrap().distance;
        prop_assert!((d1 - d2).abs() < 1e-9, "{} vs {}", d1, d2);
    }

    #[test]
    fn search_region_is_monotone(
        ax in -6.0..6.0f64, ay in -6.0..6.0f64,
        bx in -6.0..6.0f64, by in -6.0..6.0f64,
        extra in 0.5..6.0f64,
        pat in prop::sample::select(vec!["woven", "checkered", "bumpy"])
    ) {
        let p = builtin_pattern(pat).unwrap();
        let a = MetricNode::point(ax, ay);
        let b = MetricNode::point(bx, by);
        let base = smocked_distance(&p, a, b).unwrap().distance;
        let wide = smocked_distance_with_margin(&p, a, b, extra).unwrap().distance;
        prop_assert!((base - wide).abs() < 1e-12);
    }

    #[test]
    fn norm_homogeneity_exact_for_dyadic_scalars(
        x in arb_point(16.0),
        pow in -3i32..4,
        which in prop::sample::select(vec!["plus", "woven", "bumpy"])
    ) {
        let spec = NormSpec::by_name(which).unwrap();
        let lam = (2.0f64).powi(pow);
        prop_assert_eq!(norm_eval(&spec, x * lam), lam.abs() * norm_eval(&spec, x));
    }

    #[test]
    fn closed_form_symmetry_and_triangle(
        j in (-10i64..10, -10i64..10),
        k in (-10i64..10, -10i64..10),
        l in (-10i64..10, -10i64..10),
        kind in prop::sample::select(vec![ClosedFormKind::Plus, ClosedFormKind::Woven, ClosedFormKind::Bumpy])
    ) {
        let step = match kind { ClosedFormKind::Woven => 2, _ => 3 };
        let scale = |t: (i64, i64)| (t.0 * step, t.1 * step);
        let (j, k, l) = (scale(j), scale(k), scale(l));
        let d = |a, b| stitch_distance_closed_form(kind, a, b).unwrap();
        prop_assert_eq!(d(j, k), d(k, j));
        prop_assert!(d(j, l) <= d(j, k) + d(k, l) + 1e-12);
        prop_assert!(d(j, k) >= 0.0);
    }
}

#[test]
fn tubular_algebra_on_rasters() {
    let window = BoundingBox::new(Point2::new(-4.0, -4.0), Point2::new(4.0, 4.0));
    let spacing = 0.05;
    let p0 = Point2::new(0.3, -0.2);
    let band = 1.5 * std::f64::consts::SQRT_2 * spacing;

    // Dilating a metric ball grows its radius, up to boundary cells.
    for (r, s) in [(1.0, 0.5), (0.7, 1.1), (2.0, 0.25)] {
        let ball = disk_raster(p0, r, spacing, &window).unwrap();
        let grown = ball.dilate(s).unwrap();
        let want = disk_raster(p0, r + s, spacing, &window).unwrap();
        for (i, j) in grown.difference_cells(&want).unwrap() {
            let d = grown.cell_center(i, j).dist(p0);
            assert!((d - (r + s)).abs() <= band, "excess cell at distance {d}");
        }
        for (i, j) in want.difference_cells(&grown).unwrap() {
            let d = want.cell_center(i, j).dist(p0);
            assert!((d - (r + s)).abs() <= band, "missing cell at distance {d}");
        }
    }

    // Monotonicity, union and intersection laws hold cell-exactly.
    let mut k1 = BitRaster::covering(&window, spacing).unwrap();
    k1.fill(|p| p.dist(Point2::new(-1.0, 0.5)) < 0.8);
    let mut k2 = BitRaster::covering(&window, spacing).unwrap();
    k2.fill(|p| p.dist(Point2::new(-1.0, 0.5)) < 0.8 || (p.x.abs() < 2.0 && p.y < -1.0));
    assert!(k1.is_subset_of(&k2).unwrap());
    assert!(k1
        .dilate(0.6)
        .unwrap()
        .is_subset_of(&k2.dilate(0.6).unwrap())
        .unwrap());

    let mut a = BitRaster::covering(&window, spacing).unwrap();
    a.fill(|p| p.dist(Point2::new(1.0, 1.0)) < 0.9);
    let union_dilated = a.union(&k1).unwrap().dilate(0.4).unwrap();
    let dilated_union = a
        .dilate(0.4)
        .unwrap()
        .union(&k1.dilate(0.4).unwrap())
        .unwrap();
    assert_eq!(union_dilated.difference_cells(&dilated_union).unwrap().len(), 0);
    assert_eq!(dilated_union.difference_cells(&union_dilated).unwrap().len(), 0);

    let inter_dilated = a.intersection(&k1).unwrap().dilate(0.4).unwrap();
    let dilated_inter = a
        .dilate(0.4)
        .unwrap()
        .intersection(&k1.dilate(0.4).unwrap())
        .unwrap();
    assert!(inter_dilated.is_subset_of(&dilated_inter).unwrap());
}

#[test]
fn norm_triangle_inequality_on_many_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for spec in [NormSpec::plus(), NormSpec::woven(), NormSpec::bumpy()] {
        for _ in 0..10_000 {
            let x = Point2::new(rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0));
            let y = Point2::new(rng.gen_range(-9.0..9.0), rng.gen_range(-9.0..9.0));
            assert!(
                norm_eval(&spec, x + y) <= norm_eval(&spec, x) + norm_eval(&spec, y) + 1e-12
            );
        }
        assert_eq!(norm_eval(&spec, Point2::ORIGIN), 0.0);
    }
}

fn pulled_thread_pattern() -> (SmockingPattern, smock_core::Stitch) {
    let p = SmockingPattern::from_stitches(
        "pt",
        vec![vec![Segment::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0))]],
    )
    .unwrap();
    let st = p.stitch(StitchId::new((0, 0), 0)).unwrap();
    (p, st)
}

#[test]
fn pulled_thread_deviation_below_interval_length() {
    let (p, st) = pulled_thread_pattern();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let a = Point2::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
        let b = Point2::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
        let d = pulled_thread_distance(&st, a, b);
        assert!((d - a.dist(b)).abs() <= 1.0 + 1e-12);
        let engine = smocked_distance(&p, MetricNode::Point(a), MetricNode::Point(b))
            .unwrap()
            .distance;
        assert!((d - engine).abs() < 1e-12);
    }
}

#[test]
fn pulled_thread_ball_sandwich() {
    // B_r(x) sits inside the ball preimage, which sits inside B_{r+L}(x).
    let (p, _) = pulled_thread_pattern();
    let x = Point2::new(0.4, 1.1);
    let window = BoundingBox::new(Point2::new(-4.0, -4.0), Point2::new(5.0, 5.0));
    for r in [0.6, 1.3, 2.5] {
        let (ball, _) = ball_raster(&p, MetricNode::Point(x), r, 0.05, &window).unwrap();
        let inner = disk_raster(x, r, 0.05, &window).unwrap();
        let outer = disk_raster(x, r + 1.0, 0.05, &window).unwrap();
        assert!(inner.is_subset_of(&ball).unwrap(), "inner inclusion at r={r}");
        assert!(ball.is_subset_of(&outer).unwrap(), "outer inclusion at r={r}");
    }
}

#[test]
fn lifted_ball_inclusions_at_raster_level() {
    // Euclidean balls sit inside ball preimages, and dilating a preimage
    // by s stays inside the preimage of the ball grown by s.
    let p = builtin_pattern("plus").unwrap();
    let x = Point2::new(0.7, 1.2);
    let window = BoundingBox::new(Point2::new(-8.0, -8.0), Point2::new(8.0, 8.0));
    let spacing = 0.05;
    for (r, s) in [(1.0, 0.5), (2.0, 1.0)] {
        let (pre_r, _) = ball_raster(&p, MetricNode::Point(x), r, spacing, &window).unwrap();
        let euclid = disk_raster(x, r, spacing, &window).unwrap();
        assert!(euclid.is_subset_of(&pre_r).unwrap());

        let (pre_rs, _) =
            ball_raster(&p, MetricNode::Point(x), r + s, spacing, &window).unwrap();
        // The pseudometric is 1-Lipschitz against the plane metric, so the
        // dilation of the discrete preimage can overshoot the continuous
        // one by at most one cell diagonal; compare against the preimage
        // grown by that much.
        let fudge = 1.5 * std::f64::consts::SQRT_2 * spacing;
        let (pre_rs_fudged, _) =
            ball_raster(&p, MetricNode::Point(x), r + s + fudge, spacing, &window).unwrap();
        let dilated = pre_r.dilate(s).unwrap();
        assert!(pre_rs.is_subset_of(&pre_rs_fudged).unwrap());
        assert!(dilated.is_subset_of(&pre_rs_fudged).unwrap());
    }
}

#[test]
fn nested_balls_are_nested_cellwise() {
    let p = builtin_pattern("woven").unwrap();
    let window = BoundingBox::new(Point2::new(-8.0, -8.0), Point2::new(8.0, 8.0));
    let center = MetricNode::Stitch(StitchId::new((0, 0), 0));
    let mut prev: Option<BitRaster> = None;
    for r in [0.5, 1.0, 1.7, 2.4, 3.0] {
        let (ball, _) = ball_raster(&p, center, r, 0.05, &window).unwrap();
        if let Some(sm) = prev {
            assert!(sm.is_subset_of(&ball).unwrap(), "r={r}");
        }
        prev = Some(ball);
    }
}

#[test]
fn separation_factor_invariant_under_relabeling() {
    // Swapping the template slots of the woven pattern leaves delta alone.
    let text_a = "smockpattern 1\nbasis 4 0 2 2\nstitch 0 seg -1 0 1 0\nstitch 1 seg 2 -1 2 1\n";
    let text_b = "smockpattern 1\nbasis 4 0 2 2\nstitch 0 seg 2 -1 2 1\nstitch 1 seg -1 0 1 0\n";
    let da = smock_core::parse_pattern(text_a)
        .unwrap()
        .separation_factor()
        .unwrap();
    let db = smock_core::parse_pattern(text_b)
        .unwrap()
        .separation_factor()
        .unwrap();
    assert_eq!(da, db);
    // And under translation of the whole pattern.
    let text_c =
        "smockpattern 1\nbasis 4 0 2 2\nstitch 0 seg 9 5 11 5\nstitch 1 seg 12 4 12 6\n";
    let dc = smock_core::parse_pattern(text_c)
        .unwrap()
        .separation_factor()
        .unwrap();
    assert!((da - dc).abs() < 1e-12);
}

#[test]
fn checkered_cross_orientation_distance() {
    let p = builtin_pattern("checkered").unwrap();
    let h = p.stitch(StitchId::new((0, 0), 0)).unwrap();
    let v = p.stitch(StitchId::new((0, 0), 1)).unwrap();
    assert!((stitch_stitch_distance(&h, &v) - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(stitch_stitch_distance(&h, &h), 0.0);
}
