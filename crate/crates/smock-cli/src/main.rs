//! `smock`: constants, distances, balls, frontier sets, tangent-norm
//! checks, rescaling experiments and figure rendering for smocked metric
//! spaces.
//!
//! Patterns are given as `builtin:<name>` (diamond, ribbed, woven, plus,
//! checkered, bumpy) or as a path to a pattern file.
//!
//! Exit codes: 0 success, 1 property violations, 2 parse/usage errors,
//! 3 validation errors, 4 domain errors, 5 budget exceeded.

use clap::{Args, Parser, Subcommand};
use smock_core::balls;
use smock_core::constants;
use smock_core::error::Error;
use smock_core::geom::{BoundingBox, Point2};
use smock_core::gh;
use smock_core::metric::{self, MetricNode};
use smock_core::norms::{self, ClosedFormKind, NormSpec};
use smock_core::pattern::load_pattern;
use smock_core::render;
use smock_core::SmockingPattern;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "smock", version, about = "Smocked metric space toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CenterArgs {
    /// Stitch anchor `x,y[,slot]` to center on.
    #[arg(long, value_name = "X,Y[,SLOT]")]
    stitch: Option<String>,
    /// Plane point `x,y` to center on.
    #[arg(long, value_name = "X,Y")]
    point: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Separation factor, stitch lengths, and the certified depth bracket.
    Constants {
        pattern: String,
        /// Width of the certified depth bracket.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Smocked distance between two nodes (`x,y` or `stitch:x,y[,slot]`).
    Dist {
        pattern: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Include the witness chain in the output.
        #[arg(long)]
        witness: bool,
    },
    /// Rasterize the ball preimage around a stitch or point.
    Ball {
        pattern: String,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        radius: f64,
        /// Cell size; defaults to radius / 256.
        #[arg(long)]
        spacing: Option<f64>,
        /// Window `x0,y0,x1,y1`; defaults to a window containing the ball.
        #[arg(long)]
        window: Option<String>,
        /// Output file (.svg or .pgm); JSON summary to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stitches that just touch the closed ball of the given radius.
    Frontier {
        pattern: String,
        #[command(flatten)]
        center: CenterArgs,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Compare the pseudometric against a limit norm on random pairs.
    TangentCheck {
        pattern: String,
        #[arg(long)]
        norm: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Half-width of the sampling square.
        #[arg(long, default_value_t = 40.0)]
        window: f64,
    },
    /// Rescaled-ball distortion across scales; CSV to stdout.
    GhRescale {
        pattern: String,
        #[arg(long)]
        norm: String,
        #[arg(long, value_delimiter = ',')]
        scales: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.05)]
        grid: f64,
    },
    /// Render stitches with optional concentric ball preimages.
    Render {
        pattern: String,
        #[command(flatten)]
        center: CenterArgs,
        /// Comma-separated ball radii to draw.
        #[arg(long, value_delimiter = ',')]
        balls: Vec<f64>,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the property suites against the pattern.
    Check {
        pattern: String,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SMOCK_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("smock: {e}");
            ExitCode::from(match e {
                Error::Parse { .. } | Error::Io(_) => 2,
                Error::Validation(_) => 3,
                Error::Domain(_) => 4,
                Error::Budget(_) => 5,
            })
        }
    }
}

/// Round to 12 significant digits so output is deterministic and well
/// below the library tolerances.
fn sig12(x: f64) -> serde_json::Value {
    if !x.is_finite() {
        return serde_json::Value::Null;
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    serde_json::Number::from_f64(rounded)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

fn round_json(v: serde_json::Value) -> serde_json::Value {
    match v {
        serde_json::Value::Number(n) => match n.as_f64() {
            Some(f) if n.as_i64().is_none() && n.as_u64().is_none() => sig12(f),
            _ => serde_json::Value::Number(n),
        },
        serde_json::Value::Array(a) => {
            serde_json::Value::Array(a.into_iter().map(round_json).collect())
        }
        serde_json::Value::Object(o) => {
            serde_json::Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

fn emit(v: serde_json::Value) {
    println!("{}", round_json(v));
}

fn parse_coords(s: &str, what: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("bad {what} '{s}'")))
        })
        .collect()
}

fn parse_node(pattern: &SmockingPattern, s: &str) -> Result<MetricNode, Error> {
    if let Some(rest) = s.strip_prefix("stitch:") {
        let nums = parse_coords(rest, "stitch id")?;
        let (at, slot) = match nums.len() {
            2 => (Point2::new(nums[0], nums[1]), None),
            3 => (Point2::new(nums[0], nums[1]), Some(nums[2] as u32)),
            _ => return Err(Error::Domain(format!("bad stitch id '{s}'"))),
        };
        let st = pattern.stitch_at_anchor(at, slot, 1e-9)?;
        return Ok(MetricNode::Stitch(st.id));
    }
    let nums = parse_coords(s, "point")?;
    if nums.len() != 2 {
        return Err(Error::Domain(format!("bad point '{s}'")));
    }
    Ok(MetricNode::point(nums[0], nums[1]))
}

fn parse_center(pattern: &SmockingPattern, c: &CenterArgs) -> Result<MetricNode, Error> {
    match (&c.stitch, &c.point) {
        (Some(s), None) => parse_node(pattern, &format!("stitch:{s}")),
        (None, Some(p)) => parse_node(pattern, p),
        (None, None) => {
            // Default: the stitch nearest the origin.
            let (_, id) = pattern.distance_to_smocking_set(Point2::ORIGIN)?;
            Ok(MetricNode::Stitch(id))
        }
        _ => Err(Error::Domain(
            "pass either --stitch or --point, not both".into(),
        )),
    }
}

fn parse_window(s: &str) -> Result<BoundingBox, Error> {
    let nums = parse_coords(s, "window")?;
    if nums.len() != 4 {
        return Err(Error::Domain(format!("bad window '{s}'")));
    }
    let b = BoundingBox::new(
        Point2::new(nums[0], nums[1]),
        Point2::new(nums[2], nums[3]),
    );
    if !b.is_valid() {
        return Err(Error::Domain(format!("bad window '{s}' (min > max)")));
    }
    Ok(b)
}

fn auto_window(pattern: &SmockingPattern, center: &MetricNode, r: f64) -> Result<BoundingBox, Error> {
    let c = match center {
        MetricNode::Point(p) => *p,
        MetricNode::Stitch(id) => pattern.stitch(*id)?.center,
    };
    let delta = pattern.delta_min();
    let l = pattern.max_diameter();
    let stretch = if delta.is_finite() && delta > 0.0 {
        (delta + l) / delta
    } else {
        1.0
    };
    let extent = r * stretch + l + 1.0;
    Ok(BoundingBox::new(c, c).inflate(extent))
}

fn node_json(pattern: &SmockingPattern, n: &MetricNode) -> serde_json::Value {
    match n {
        MetricNode::Point(p) => serde_json::json!({ "point": [p.x, p.y] }),
        MetricNode::Stitch(id) => {
            let anchor = pattern
                .stitch(*id)
                .map(|s| [s.anchor.x, s.anchor.y])
                .unwrap_or([f64::NAN, f64::NAN]);
            serde_json::json!({ "stitch": { "at": anchor, "slot": id.slot } })
        }
    }
}

fn witness_json(pattern: &SmockingPattern, w: &metric::WitnessPath) -> serde_json::Value {
    serde_json::json!({
        "distance": w.total,
        "jumps": w.jump_count,
        "nodes": w.nodes.iter().map(|n| node_json(pattern, n)).collect::<Vec<_>>(),
        "hops": w.hops.iter().map(|h| serde_json::json!({
            "exit": h.exit, "entry": h.entry, "len": h.len
        })).collect::<Vec<_>>(),
    })
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Constants { pattern, tol } => {
            let p = load_pattern(&pattern)?;
            let c = constants::constants(&p, tol)?;
            emit(serde_json::json!({
                "delta": c.delta,
                "l_min": c.l_min,
                "l_max": c.l_max,
                "depth_lo": c.depth_lo,
                "depth_hi": c.depth_hi,
                "depth_witness": c.depth_witness,
            }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Dist {
            pattern,
            from,
            to,
            witness,
        } => {
            let p = load_pattern(&pattern)?;
            let a = parse_node(&p, &from)?;
            let b = parse_node(&p, &to)?;
            let res = metric::smocked_distance(&p, a, b)?;
            if witness {
                emit(serde_json::json!({
                    "distance": res.distance,
                    "witness": witness_json(&p, &res.witness),
                }));
            } else {
                emit(serde_json::json!({ "distance": res.distance }));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Ball {
            pattern,
            center,
            radius,
            spacing,
            window,
            out,
        } => {
            if radius <= 0.0 {
                eprintln!("smock: ball radius must be positive");
                return Ok(ExitCode::from(2));
            }
            let p = load_pattern(&pattern)?;
            let c = parse_center(&p, &center)?;
            let spacing = spacing.unwrap_or(radius / 256.0);
            let window = match window {
                Some(w) => parse_window(&w)?,
                None => auto_window(&p, &c, radius)?,
            };
            let (raster, clipped) = balls::ball_raster(&p, c, radius, spacing, &window)?;
            if clipped {
                eprintln!("smock: warning: ball reaches the window boundary");
            }
            match out {
                Some(path) => write_raster(&p, &window, &[(radius, raster)], &path)?,
                None => emit(serde_json::json!({
                    "radius": radius,
                    "spacing": spacing,
                    "cells": raster.len(),
                    "inside": raster.count_ones(),
                    "clipped": clipped,
                })),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Frontier {
            pattern,
            center,
            radius,
            tol,
        } => {
            let p = load_pattern(&pattern)?;
            let c = parse_center(&p, &center)?;
            let f = balls::frontier_stitches(&p, c, radius, tol)?;
            emit(serde_json::to_value(&f).unwrap());
            Ok(ExitCode::SUCCESS)
        }
        Command::TangentCheck {
            pattern,
            norm,
            samples,
            seed,
            window,
        } => {
            let p = load_pattern(&pattern)?;
            let kind = ClosedFormKind::by_name(&norm)?;
            let spec = kind.norm();
            let c = constants::constants(&p, 1e-6)?;
            let bound = norms::deviation_bound_for(kind, c.depth_hi, c.l_max)?;
            let report = norms::point_bound_check(&p, &spec, bound.k, samples, seed, window)?;
            emit(serde_json::json!({
                "max_dev": report.max_dev,
                "bound_K": report.bound_k,
                "exceeded": report.exceeded,
                "worst_pair": report.worst_pair,
            }));
            Ok(if report.exceeded {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::GhRescale {
            pattern,
            norm,
            scales,
            radius,
            grid,
        } => {
            let p = load_pattern(&pattern)?;
            let spec = NormSpec::by_name(&norm)?;
            let k_dev = match ClosedFormKind::by_name(&norm) {
                Ok(kind) => {
                    let c = constants::constants(&p, 1e-6)?;
                    norms::deviation_bound_for(kind, c.depth_hi, c.l_max)?.k
                }
                // Euclidean target: the single-interval deviation is the
                // stitch length.
                Err(_) => p.max_diameter(),
            };
            let report = gh::convergence_experiment(&p, &spec, k_dev, &scales, radius, grid)?;
            println!("R,epsilon,epsilon_times_R");
            for row in &report.rows {
                let eps: f64 = format!("{:.11e}", row.epsilon).parse().unwrap();
                let prod: f64 = format!("{:.11e}", row.epsilon * row.scale).parse().unwrap();
                println!("{},{},{}", row.scale, eps, prod);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Render {
            pattern,
            center,
            balls: radii,
            spacing,
            window,
            out,
        } => {
            let p = load_pattern(&pattern)?;
            let c = parse_center(&p, &center)?;
            let rmax = radii.iter().cloned().fold(0.0f64, f64::max);
            let window = match window {
                Some(w) => parse_window(&w)?,
                None => auto_window(&p, &c, rmax.max(3.0))?,
            };
            let spacing = spacing.unwrap_or((rmax.max(1.0)) / 256.0);
            let mut series = Vec::new();
            for &r in &radii {
                if r <= 0.0 {
                    return Err(Error::Domain("ball radii must be positive".into()));
                }
                let (raster, _) = balls::ball_raster(&p, c, r, spacing, &window)?;
                series.push((r, raster));
            }
            write_raster(&p, &window, &series, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            pattern,
            samples,
            seed,
        } => {
            let p = load_pattern(&pattern)?;
            let mut clean = true;

            let axioms = metric::metric_axiom_check(&p, samples, seed)?;
            clean &= axioms.violations.is_empty();

            let one_stitch = if p.delta_min().is_finite() {
                let r = metric::one_stitch_property_check(&p, samples, seed + 1)?;
                clean &= r.violations.is_empty();
                Some(r)
            } else {
                None
            };

            let growth = if p.is_periodic() {
                let c = parse_center(&p, &CenterArgs { stitch: None, point: None })?;
                let delta = p.delta_min();
                let mut result = None;
                for div in [2.0, 4.0, 8.0] {
                    match balls::growth_check(&p, c, delta, delta / div, delta / 128.0) {
                        Ok(rep) => {
                            clean &= rep.ok;
                            result = Some(rep);
                            break;
                        }
                        Err(Error::Domain(_)) => continue,
                        Err(e) => return Err(e),
                    }
                }
                result
            } else {
                None
            };

            let closed_form = match pattern.strip_prefix("builtin:") {
                Some(name) if ClosedFormKind::by_name(name).is_ok() => {
                    let kind = ClosedFormKind::by_name(name).unwrap();
                    let rep = norms::closed_form_vs_engine(kind, 12, 1e-9)?;
                    clean &= rep.failures.is_empty();
                    Some(rep)
                }
                _ => None,
            };

            emit(serde_json::json!({
                "metric_axioms": serde_json::to_value(&axioms).unwrap(),
                "one_stitch": one_stitch.map(|r| serde_json::to_value(&r).unwrap()),
                "growth": growth.map(|r| serde_json::to_value(&r).unwrap()),
                "closed_form": closed_form.map(|r| serde_json::json!({
                    "pairs": r.pairs,
                    "max_abs_error": r.max_abs_error,
                    "failures": r.failures.len(),
                })),
                "clean": clean,
            }));
            Ok(if clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn write_raster(
    pattern: &SmockingPattern,
    window: &BoundingBox,
    series: &[(f64, smock_core::raster::BitRaster)],
    path: &PathBuf,
) -> Result<(), Error> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("svg") => {
            let svg = render::render_svg(pattern, window, series)?;
            render::write_atomic(path, svg.as_bytes())
        }
        Some("pgm") => {
            let raster = series
                .last()
                .map(|(_, r)| r)
                .ok_or_else(|| Error::Domain("no raster to write".into()))?;
            render::write_atomic(path, &render::pgm_bytes(raster))
        }
        _ => Err(Error::Domain(
            "output must end in .svg or .pgm".into(),
        )),
    }
}
