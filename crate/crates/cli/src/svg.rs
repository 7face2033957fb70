//! SVG scatter plots of one run: archive points per generation with the
//! pivot marked, and archive duplication at selected generations.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use semgp_core::engine::RunResult;
use semgp_core::metrics::duplication_histogram;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const DOT_RADIUS: f64 = 2.5;
/// Radius of a multiplicity-1 point; larger counts scale with the square
/// root so marker area is proportional to multiplicity.
pub const BASE_RADIUS: f64 = 2.0;
const PIVOT_ARM: f64 = 5.0;

fn x(tpr: f64) -> f64 {
    MARGIN + tpr * (WIDTH - 2.0 * MARGIN)
}

fn y(tnr: f64) -> f64 {
    HEIGHT - MARGIN - tnr * (HEIGHT - 2.0 * MARGIN)
}

/// Hue ramp from blue (early) to red (late).
fn colour(step: usize, steps: usize) -> String {
    let t = if steps <= 1 { 0.0 } else { step as f64 / (steps - 1) as f64 };
    format!("hsl({:.0},75%,45%)", 240.0 * (1.0 - t))
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (x(0.0), x(1.0), y(0.0), y(1.0));
    let _ = writeln!(
        out,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#
    );
    let mut ticks = String::new();
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = write!(
            ticks,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            x(v),
            y0 + 16.0,
            x0 - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(out, r#"<g class="ticks">{ticks}</g>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">TPR</text>"#,
        WIDTH / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">TNR</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Archive points of every generation, one `circle.solution` per archive
/// member, coloured by generation, plus one `path.pivot` cross per pivot.
pub fn solutions_svg(result: &RunResult, title: &str) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let steps = result.per_generation.len();
    out.push_str("<g class=\"solutions\">\n");
    for (step, record) in result.per_generation.iter().enumerate() {
        let fill = colour(step, steps);
        for p in &record.archive {
            let _ = writeln!(
                out,
                r#"<circle class="solution" data-generation="{}" cx="{:.2}" cy="{:.2}" r="{DOT_RADIUS}" fill="{fill}" fill-opacity="0.6"/>"#,
                record.generation,
                x(p.tpr),
                y(p.tnr)
            );
        }
    }
    out.push_str("</g>\n<g class=\"pivots\">\n");
    for record in &result.per_generation {
        if let Some(p) = record.pivot {
            let (cx, cy) = (x(p.tpr), y(p.tnr));
            let a = PIVOT_ARM;
            let _ = writeln!(
                out,
                r#"<path class="pivot" data-generation="{}" d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="black" stroke-width="1.5" fill="none"/>"#,
                record.generation,
                cx - a,
                cy - a,
                cx + a,
                cy + a,
                cx - a,
                cy + a,
                cx + a,
                cy - a
            );
        }
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Distinct archive points at each requested generation (1-based; missing
/// generations are skipped), one `circle.duplicate` per point with radius
/// `BASE_RADIUS * sqrt(multiplicity)`.
pub fn duplication_svg(result: &RunResult, generations: &[usize], title: &str) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let records: Vec<_> = generations
        .iter()
        .filter_map(|&g| result.per_generation.iter().find(|r| r.generation == g))
        .collect();
    out.push_str("<g class=\"duplicates\">\n");
    for (step, record) in records.iter().enumerate() {
        let stroke = colour(step, records.len());
        for p in duplication_histogram(&record.archive) {
            let _ = writeln!(
                out,
                r#"<circle class="duplicate" data-generation="{}" data-multiplicity="{}" cx="{:.2}" cy="{:.2}" r="{:.4}" fill="none" stroke="{stroke}"/>"#,
                record.generation,
                p.multiplicity,
                x(p.tpr),
                y(p.tnr),
                BASE_RADIUS * (p.multiplicity as f64).sqrt()
            );
        }
    }
    out.push_str("</g>\n<g class=\"legend\">\n");
    for (step, record) in records.iter().enumerate() {
        let ly = MARGIN + 14.0 * step as f64;
        let _ = writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{ly:.1}" r="4" fill="none" stroke="{}"/><text x="{:.1}" y="{:.1}">gen {}</text>"#,
            WIDTH - MARGIN - 50.0,
            colour(step, records.len()),
            WIDTH - MARGIN - 42.0,
            ly + 4.0,
            record.generation
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Writes `<stem>_solutions.svg` and `<stem>_duplication.svg` into `dir`.
pub fn emit_svg_scatter(
    result: &RunResult,
    dir: &Path,
    stem: &str,
    generations: &[usize],
) -> io::Result<(PathBuf, PathBuf)> {
    let a = dir.join(format!("{stem}_solutions.svg"));
    let b = dir.join(format!("{stem}_duplication.svg"));
    std::fs::write(&a, solutions_svg(result, &format!("{stem}: archive by generation")))?;
    std::fs::write(&b, duplication_svg(result, generations, &format!("{stem}: duplication")))?;
    Ok((a, b))
}
