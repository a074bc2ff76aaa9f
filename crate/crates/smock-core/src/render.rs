//! SVG and PGM emission for patterns and ball rasters.

use crate::error::Result;
use crate::geom::BoundingBox;
use crate::pattern::SmockingPattern;
use crate::raster::BitRaster;
use std::fmt::Write as _;
use std::path::Path;

/// Fill colors for concentric ball series, smallest radius first.
pub const BALL_COLORS: [&str; 8] = [
    "#d62728", // red
    "#ff7f0e", // orange
    "#ffd700", // yellow
    "#9acd32", // yellow-green
    "#2ca02c", // green
    "#17becf", // teal
    "#1f77b4", // blue
    "#9467bd", // purple
];

fn fmt_coord(x: f64) -> String {
    let s = format!("{x:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Render stitches (black) plus optional concentric ball rasters, colored
/// red through purple by radius. Rasters must share geometry; larger balls
/// are painted first so smaller ones sit on top.
pub fn render_svg(
    pattern: &SmockingPattern,
    window: &BoundingBox,
    series: &[(f64, BitRaster)],
) -> Result<String> {
    let w = window.max.x - window.min.x;
    let h = window.max.y - window.min.y;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"720\" height=\"{}\">",
        fmt_coord(window.min.x),
        fmt_coord(-window.max.y),
        fmt_coord(w),
        fmt_coord(h),
        fmt_coord(720.0 * h / w.max(1e-9)),
    );
    let _ = writeln!(out, "<!-- smock {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"white\"/>",
        fmt_coord(window.min.x),
        fmt_coord(-window.max.y),
        fmt_coord(w),
        fmt_coord(h)
    );

    // Largest radius first, so the smallest ball ends up on top.
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by(|&a, &b| series[b].0.total_cmp(&series[a].0));
    let mut rank: Vec<usize> = (0..series.len()).collect();
    {
        let mut by_radius: Vec<usize> = (0..series.len()).collect();
        by_radius.sort_by(|&a, &b| series[a].0.total_cmp(&series[b].0));
        for (color_idx, &series_idx) in by_radius.iter().enumerate() {
            rank[series_idx] = color_idx;
        }
    }
    for &si in &order {
        let (_, raster) = &series[si];
        let color = BALL_COLORS[rank[si] % BALL_COLORS.len()];
        let s = raster.spacing;
        let _ = writeln!(out, "<g fill=\"{color}\">");
        for j in 0..raster.height {
            // Merge runs of set cells into one rect per run.
            let mut i = 0;
            while i < raster.width {
                if raster.get(i, j) {
                    let start = i;
                    while i < raster.width && raster.get(i, j) {
                        i += 1;
                    }
                    let c0 = raster.cell_center(start, j);
                    let run = (i - start) as f64;
                    let _ = writeln!(
                        out,
                        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>",
                        fmt_coord(c0.x - 0.5 * s),
                        fmt_coord(-(c0.y + 0.5 * s)),
                        fmt_coord(run * s),
                        fmt_coord(s)
                    );
                } else {
                    i += 1;
                }
            }
        }
        let _ = writeln!(out, "</g>");
    }

    // Stitches on top, in black.
    let draw_box = window.inflate(1.0);
    let _ = writeln!(
        out,
        "<g stroke=\"black\" stroke-width=\"0.08\" stroke-linecap=\"round\">"
    );
    for st in pattern.stitches_in_box(&draw_box)? {
        for seg in &st.segments {
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                fmt_coord(seg.a.x),
                fmt_coord(-seg.a.y),
                fmt_coord(seg.b.x),
                fmt_coord(-seg.b.y)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

/// Binary PGM (P5), one byte per cell, 255 inside. Row 0 of the output is
/// the top of the image (max y).
pub fn pgm_bytes(raster: &BitRaster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", raster.width, raster.height).into_bytes();
    for j in (0..raster.height).rev() {
        for i in 0..raster.width {
            out.push(if raster.get(i, j) { 255 } else { 0 });
        }
    }
    out
}

/// Write a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
