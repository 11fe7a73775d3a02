use std::fmt::Write;

use crate::error::{Error, Result};

/// One polyline in the portrait.
#[derive(Debug, Clone, PartialEq)]
pub struct PortraitCurve {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
    pub dashed: bool,
}

/// 2D phase portrait with fixed styling.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhasePortrait {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub trajectories: Vec<PortraitCurve>,
    pub cycles: Vec<PortraitCurve>,
    pub segments: Vec<([f64; 2], [f64; 2])>,
    pub points: Vec<[f64; 2]>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 56.0;

fn project(states: &[Vec<f64>], projection: Option<(usize, usize)>) -> Result<Vec<[f64; 2]>> {
    let Some(first) = states.first() else {
        return Ok(Vec::new());
    };
    let (a, b) = match (first.len(), projection) {
        (_, Some((a, b))) => (a, b),
        (2, None) => (0, 1),
        (n, None) => {
            return Err(Error::InvalidParameter {
                name: "projection",
                reason: format!("state dimension {n} needs an explicit projection"),
            })
        }
    };
    states
        .iter()
        .map(|x| {
            if a >= x.len() || b >= x.len() {
                Err(Error::DimensionMismatch {
                    expected: a.max(b) + 1,
                    got: x.len(),
                })
            } else {
                Ok([x[a], x[b]])
            }
        })
        .collect()
}

impl PhasePortrait {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Self::default()
        }
    }

    pub fn add_trajectory(&mut self, states: &[Vec<f64>], projection: Option<(usize, usize)>) -> Result<()> {
        let points = project(states, projection)?;
        self.trajectories.push(PortraitCurve {
            points,
            closed: false,
            dashed: false,
        });
        Ok(())
    }

    pub fn add_cycle(&mut self, orbit: &[Vec<f64>], projection: Option<(usize, usize)>) -> Result<()> {
        let points = project(orbit, projection)?;
        self.cycles.push(PortraitCurve {
            points,
            closed: true,
            dashed: false,
        });
        Ok(())
    }

    /// Dashed ellipse with semi-axes `(a, b)` centred at the origin.
    pub fn add_predicted_ellipse(&mut self, a: f64, b: f64) {
        let points = (0..128)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / 128.0;
                [a * th.cos(), b * th.sin()]
            })
            .collect();
        self.cycles.push(PortraitCurve {
            points,
            closed: true,
            dashed: true,
        });
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut eat = |p: &[f64; 2]| {
            for c in 0..2 {
                if p[c].is_finite() {
                    lo[c] = lo[c].min(p[c]);
                    hi[c] = hi[c].max(p[c]);
                }
            }
        };
        for c in self.trajectories.iter().chain(&self.cycles) {
            c.points.iter().for_each(&mut eat);
        }
        for (a, b) in &self.segments {
            eat(a);
            eat(b);
        }
        self.points.iter().for_each(&mut eat);
        if lo[0] > hi[0] {
            return (-1.0, 1.0, -1.0, 1.0);
        }
        let pad = |l: f64, h: f64| {
            let w = (h - l).max(1e-9);
            (l - 0.05 * w, h + 0.05 * w)
        };
        let (x0, x1) = pad(lo[0], hi[0]);
        let (y0, y1) = pad(lo[1], hi[1]);
        (x0, x1, y0, y1)
    }

    /// Render to an SVG document. Output depends only on the portrait.
    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let sx = (WIDTH - 2.0 * MARGIN) / (x1 - x0);
        let sy = (HEIGHT - 2.0 * MARGIN) / (y1 - y0);
        let map = |p: &[f64; 2]| -> (f64, f64) { (MARGIN + (p[0] - x0) * sx, HEIGHT - MARGIN - (p[1] - y0) * sy) };
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        // axes through the origin when visible
        if x0 < 0.0 && x1 > 0.0 {
            let (px, _) = map(&[0.0, 0.0]);
            let _ = writeln!(
                s,
                r##"<line x1="{px:.2}" y1="{MARGIN}" x2="{px:.2}" y2="{:.2}" stroke="#999999" stroke-width="0.5"/>"##,
                HEIGHT - MARGIN
            );
        }
        if y0 < 0.0 && y1 > 0.0 {
            let (_, py) = map(&[0.0, 0.0]);
            let _ = writeln!(
                s,
                r##"<line x1="{MARGIN}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#999999" stroke-width="0.5"/>"##,
                WIDTH - MARGIN
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            MARGIN / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - MARGIN / 3.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            MARGIN / 3.0,
            HEIGHT / 2.0,
            MARGIN / 3.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (v, anchor, x, y) in [
            (x0, "start", MARGIN, HEIGHT - MARGIN + 14.0),
            (x1, "end", WIDTH - MARGIN, HEIGHT - MARGIN + 14.0),
            (y0, "end", MARGIN - 4.0, HEIGHT - MARGIN),
            (y1, "end", MARGIN - 4.0, MARGIN + 10.0),
        ] {
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="10" text-anchor="{anchor}">{v:.3}</text>"#
            );
        }
        let colors = ["#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
        for (i, c) in self.trajectories.iter().enumerate() {
            polyline(&mut s, c, colors[i % colors.len()], 1.0, &map);
        }
        for c in &self.cycles {
            polyline(&mut s, c, "#d62728", 1.8, &map);
        }
        for (a, b) in &self.segments {
            let (ax, ay) = map(a);
            let (bx, by) = map(b);
            let _ = writeln!(
                s,
                r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="black" stroke-width="4" stroke-linecap="round"/>"#
            );
        }
        for p in &self.points {
            let (px, py) = map(p);
            let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3.5" fill="black"/>"#);
        }
        s.push_str("</svg>\n");
        s
    }
}

fn polyline(s: &mut String, c: &PortraitCurve, color: &str, width: f64, map: &dyn Fn(&[f64; 2]) -> (f64, f64)) {
    if c.points.is_empty() {
        return;
    }
    let tag = if c.closed { "polygon" } else { "polyline" };
    let dash = if c.dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = write!(s, r#"<{tag} fill="none" stroke="{color}" stroke-width="{width}"{dash} points=""#);
    let mut prev = String::new();
    let mut first = true;
    for p in &c.points {
        if !(p[0].is_finite() && p[1].is_finite()) {
            continue;
        }
        let (x, y) = map(p);
        let pt = format!("{x:.2},{y:.2}");
        // drop repeats at render resolution
        if pt == prev {
            continue;
        }
        if !first {
            s.push(' ');
        }
        s.push_str(&pt);
        prev = pt;
        first = false;
    }
    s.push_str("\"/>\n");
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_portrait_renders_axes_only() {
        let svg = PhasePortrait::new("empty", "x1", "x2").render();
        assert!(svg.starts_with("<svg"));
        assert!(!svg.contains("polyline"));
        assert!(!svg.contains("polygon"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut p = PhasePortrait::new("t", "x1", "x2");
        p.add_trajectory(&[vec![0.0, 1.0], vec![1.0, 0.5], vec![0.3, -0.2]], None).unwrap();
        p.add_predicted_ellipse(1.0, 1.0);
        p.segments.push(([-0.2, 0.0], [0.2, 0.0]));
        assert_eq!(p.render(), p.clone().render());
        assert!(p.render().contains("stroke-dasharray"));
    }

    #[test]
    fn higher_dimension_needs_projection() {
        let mut p = PhasePortrait::default();
        let states = vec![vec![0.0, 1.0, 2.0]];
        assert!(p.add_trajectory(&states, None).is_err());
        p.add_trajectory(&states, Some((0, 2))).unwrap();
        assert_eq!(p.trajectories[0].points, vec![[0.0, 2.0]]);
    }
}
