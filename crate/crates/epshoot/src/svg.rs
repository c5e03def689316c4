//! Self-contained SVG renderings of templates, trajectories and sweep grids.

use std::fmt::Write;

use epshoot_core::analysis::SweepTable;
use epshoot_core::integrator::Trajectory;
use epshoot_core::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    /// Closed polyline through the landmarks.
    Outline,
    /// A dot per landmark.
    Dots,
}

#[derive(Debug, Clone)]
pub struct Layer<'a> {
    pub label: &'a str,
    pub points: &'a [Vec2],
    pub color: &'a str,
    pub mark: Mark,
}

const SIZE: f64 = 520.0;
const MARGIN: f64 = 30.0;

struct Frame {
    lo: Vec2,
    scale: f64,
}

impl Frame {
    fn fit<'a>(points: impl Iterator<Item = &'a Vec2>) -> Frame {
        let (mut lo, mut hi) = (Vec2::new(f64::MAX, f64::MAX), Vec2::new(f64::MIN, f64::MIN));
        for p in points {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if lo.x > hi.x {
            return Frame { lo: Vec2::ZERO, scale: 1.0 };
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
        let scale = (SIZE - 2.0 * MARGIN) / span;
        // center the shorter axis
        let pad = Vec2::new(span - (hi.x - lo.x), span - (hi.y - lo.y)) * 0.5;
        Frame { lo: lo - pad, scale }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        (MARGIN + (p.x - self.lo.x) * self.scale, SIZE - MARGIN - (p.y - self.lo.y) * self.scale)
    }
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Templates and optional particle paths in a shared frame.
pub fn plot_templates(layers: &[Layer<'_>], paths: Option<&Trajectory>) -> String {
    let path_points = paths.into_iter().flat_map(|t| t.frames.iter().flat_map(|f| f.state.q.iter()));
    let frame = Frame::fit(layers.iter().flat_map(|l| l.points.iter()).chain(path_points));
    let mut out = String::new();
    header(&mut out, SIZE, SIZE + 20.0);
    if let Some(tr) = paths {
        let n = tr.frames.first().map_or(0, |f| f.state.q.len());
        for i in 0..n {
            let pts: Vec<String> = tr
                .frames
                .iter()
                .map(|f| {
                    let (x, y) = frame.map(f.state.q[i]);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                out,
                r##"<polyline points="{}" fill="none" stroke="#bbbbbb" stroke-width="0.8"/>"##,
                pts.join(" ")
            );
        }
    }
    for l in layers {
        match l.mark {
            Mark::Outline => {
                let pts: Vec<String> = l
                    .points
                    .iter()
                    .map(|&p| {
                        let (x, y) = frame.map(p);
                        format!("{x:.2},{y:.2}")
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<polygon points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    pts.join(" "),
                    l.color
                );
            }
            Mark::Dots => {
                for &p in l.points {
                    let (x, y) = frame.map(p);
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#, l.color);
                }
            }
        }
    }
    let mut x = MARGIN;
    for l in layers {
        let _ = writeln!(out, r#"<text x="{x}" y="{}" fill="{}">{}</text>"#, SIZE + 8.0, l.color, escape(l.label));
        x += 12.0 + 7.0 * l.label.len() as f64;
    }
    out.push_str("</svg>\n");
    out
}

/// Grid of iteration counts: darker means more iterations, white means the
/// cell diverged or hit the cap.
pub fn sweep_heat_map(table: &SweepTable, title: &str) -> String {
    let (rows, cols) = (table.alpha2_values.len(), table.h_values.len());
    let cell = 56.0;
    let (left, top) = (70.0, 50.0);
    let width = left + cell * cols as f64 + 20.0;
    let height = top + cell * rows as f64 + 50.0;
    let max_it = table.cells.iter().filter(|c| c.converged).map(|c| c.iterations).max().unwrap_or(1).max(1);
    let mut out = String::new();
    header(&mut out, width, height);
    let _ = writeln!(out, r#"<text x="{left}" y="20">{}</text>"#, escape(title));
    for (r, a2) in table.alpha2_values.iter().enumerate() {
        let y = top + cell * r as f64;
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{a2}</text>"#, left - 8.0, y + cell / 2.0 + 4.0);
        for c in 0..cols {
            let x = left + cell * c as f64;
            let sc = table.get(r, c);
            let (fill, ink, text) = if sc.converged {
                let g = 235.0 - 200.0 * sc.iterations as f64 / max_it as f64;
                let g = g.round() as u8;
                let ink = if g < 120 { "white" } else { "black" };
                (format!("rgb({g},{g},{g})"), ink, sc.iterations.to_string())
            } else {
                ("white".to_string(), "black", "×".to_string())
            };
            let _ = writeln!(
                out,
                r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" stroke="#888888"/>"##
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{text}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    for (c, h) in table.h_values.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{h}</text>"#,
            left + cell * c as f64 + cell / 2.0,
            top + cell * rows as f64 + 18.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">h</text>"#,
        left + cell * cols as f64 / 2.0,
        top + cell * rows as f64 + 38.0
    );
    let _ = writeln!(out, r#"<text x="12" y="{}">α²</text>"#, top - 10.0);
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
