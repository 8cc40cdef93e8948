//! SVG drawings of lattices and circle patterns.
//!
//! The y axis is flipped so the upper half-plane is drawn upward.

use std::fmt::Write;

use dcmap_core::geometry::{Circle, CirclePattern};
use dcmap_core::{Complex, ConformalLattice, ExtendedComplex};

/// Width of the drawing in pixels; the height follows the aspect ratio.
const CANVAS_WIDTH: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ColorScheme {
    /// Black quads, gray circles.
    #[default]
    Plain,
    /// Blue circles over dark quads.
    Blue,
}

impl ColorScheme {
    fn colors(self) -> (&'static str, &'static str) {
        match self {
            ColorScheme::Plain => ("#000000", "#888888"),
            ColorScheme::Blue => ("#1f2937", "#2563eb"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub stroke_width: f64,
    /// Margin around the drawing, in pixels.
    pub padding: f64,
    pub draw_circles: bool,
    pub draw_quads: bool,
    pub scheme: ColorScheme,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            stroke_width: 1.0,
            padding: 20.0,
            draw_circles: true,
            draw_quads: true,
            scheme: ColorScheme::Plain,
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.stroke_width > 0.0 && self.stroke_width.is_finite()) {
            return Err("stroke width must be positive");
        }
        if !(self.padding > 0.0 && self.padding.is_finite()) {
            return Err("padding must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    lo: Complex,
    hi: Complex,
}

impl Bounds {
    fn empty() -> Self {
        Bounds {
            lo: Complex::new(f64::INFINITY, f64::INFINITY),
            hi: Complex::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn add(&mut self, p: Complex, r: f64) {
        self.lo = Complex::new(self.lo.re.min(p.re - r), self.lo.im.min(p.im - r));
        self.hi = Complex::new(self.hi.re.max(p.re + r), self.hi.im.max(p.im + r));
    }

    fn is_valid(&self) -> bool {
        self.lo.re.is_finite()
            && self.hi.re.is_finite()
            && self.lo.im.is_finite()
            && self.hi.im.is_finite()
    }

    /// The part of the line `p + t d` inside the box.
    fn clip_line(&self, p: Complex, d: Complex) -> Option<(Complex, Complex)> {
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for (p, d, lo, hi) in [
            (p.re, d.re, self.lo.re, self.hi.re),
            (p.im, d.im, self.lo.im, self.hi.im),
        ] {
            if d == 0.0 {
                if p < lo || p > hi {
                    return None;
                }
                continue;
            }
            let (a, b) = ((lo - p) / d, (hi - p) / d);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        (t0 < t1).then(|| (p + d * t0, p + d * t1))
    }
}

/// Bounding box of what the drawing will show.
pub fn viewport(
    lat: &ConformalLattice,
    pattern: Option<&CirclePattern>,
    opts: &RenderOptions,
) -> Option<(Complex, Complex)> {
    let mut b = Bounds::empty();
    for v in lat.values() {
        if let ExtendedComplex::Finite(z) = v {
            b.add(*z, 0.0);
        }
    }
    if opts.draw_circles {
        for (_, c) in pattern.into_iter().flat_map(|p| p.iter()) {
            if let Circle::Round { center, radius } = c {
                b.add(center, radius);
            }
        }
    }
    b.is_valid().then_some((b.lo, b.hi))
}

pub fn render_svg(
    lat: &ConformalLattice,
    pattern: Option<&CirclePattern>,
    opts: &RenderOptions,
) -> Result<String, &'static str> {
    opts.validate()?;
    let (lo, hi) = viewport(lat, pattern, opts).ok_or("nothing finite to draw")?;
    let bounds = Bounds { lo, hi };
    let extent = (hi.re - lo.re).max(hi.im - lo.im);
    let scale = if extent > 0.0 {
        (CANVAS_WIDTH - 2.0 * opts.padding).max(1.0) / extent
    } else {
        1.0
    };
    let width = (hi.re - lo.re) * scale + 2.0 * opts.padding;
    let height = (hi.im - lo.im) * scale + 2.0 * opts.padding;
    let px = |z: Complex| {
        (
            opts.padding + (z.re - lo.re) * scale,
            opts.padding + (hi.im - z.im) * scale,
        )
    };
    let (quad_color, circle_color) = opts.scheme.colors();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    if opts.draw_circles {
        let _ = writeln!(
            svg,
            r#"<g id="circles" fill="none" stroke="{circle_color}" stroke-width="{}">"#,
            opts.stroke_width
        );
        for (z, circle) in pattern.into_iter().flat_map(|p| p.iter()) {
            match circle {
                Circle::Round { center, radius } => {
                    let (x, y) = px(center);
                    let _ = writeln!(
                        svg,
                        r#"<circle data-label="{z}" cx="{x:.3}" cy="{y:.3}" r="{:.3}"/>"#,
                        radius * scale
                    );
                }
                Circle::Line { point, direction } => {
                    if let Some((a, b)) = bounds.clip_line(point, direction) {
                        let ((x1, y1), (x2, y2)) = (px(a), px(b));
                        let _ = writeln!(
                            svg,
                            r#"<line data-label="{z}" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#
                        );
                    }
                }
            }
        }
        let _ = writeln!(svg, "</g>");
    }

    if opts.draw_quads {
        let _ = writeln!(
            svg,
            r#"<g id="edges" fill="none" stroke="{quad_color}" stroke-width="{}">"#,
            opts.stroke_width
        );
        let size = lat.size();
        for n in 0..=size {
            for m in 0..=size {
                let ExtendedComplex::Finite(a) = lat.get(n, m) else {
                    continue;
                };
                for (n2, m2) in [(n + 1, m), (n, m + 1)] {
                    if n2 > size || m2 > size {
                        continue;
                    }
                    let ExtendedComplex::Finite(b) = lat.get(n2, m2) else {
                        continue;
                    };
                    let ((x1, y1), (x2, y2)) = (px(a), px(b));
                    let _ = writeln!(
                        svg,
                        r#"<polyline points="{x1:.3},{y1:.3} {x2:.3},{y2:.3}"/>"#
                    );
                }
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dcmap_core::geometry::circles;
    use dcmap_core::{generate, LatticeKind, ToleranceConfig};

    fn count(svg: &str, tag: &str) -> usize {
        svg.matches(&format!("<{tag} ")).count()
    }

    #[test]
    fn identity_counts() {
        let lat = generate(LatticeKind::Zc, 1.0, 6).unwrap();
        let pat = circles(&lat, &ToleranceConfig::default()).unwrap();
        let svg = render_svg(&lat, Some(&pat), &RenderOptions::default()).unwrap();
        assert_eq!(count(&svg, "circle"), 25);
        assert_eq!(count(&svg, "polyline"), 2 * 6 * 7);
        assert_eq!(count(&svg, "line"), 0);
        let quads_only = RenderOptions {
            draw_circles: false,
            ..Default::default()
        };
        assert_eq!(
            count(
                &render_svg(&lat, Some(&pat), &quads_only).unwrap(),
                "circle"
            ),
            0
        );
    }

    #[test]
    fn log_line_circle() {
        let lat = generate(LatticeKind::Log, 0.0, 10).unwrap();
        let pat = circles(&lat, &ToleranceConfig::default()).unwrap();
        let svg = render_svg(&lat, Some(&pat), &RenderOptions::default()).unwrap();
        assert_eq!(count(&svg, "line"), 1);
        // edges at the infinite vertex are left out
        assert_eq!(count(&svg, "polyline"), 2 * 10 * 11 - 2);
    }

    #[test]
    fn y_axis_points_up() {
        let lat = generate(LatticeKind::Zc, 1.0, 2).unwrap();
        let opts = RenderOptions {
            draw_circles: false,
            ..Default::default()
        };
        let svg = render_svg(&lat, None, &opts).unwrap();
        // the edge from 0 to i runs upward, toward smaller pixel y
        assert!(
            svg.contains(r#"points="20.000,780.000 20.000,400.000""#),
            "{svg}"
        );
        assert!(
            svg.contains(r#"points="20.000,780.000 400.000,780.000""#),
            "{svg}"
        );
    }

    #[test]
    fn clipping() {
        let b = Bounds {
            lo: Complex::new(-1.0, -1.0),
            hi: Complex::new(1.0, 1.0),
        };
        let (a, c) = b
            .clip_line(Complex::new(0.0, 5.0), Complex::new(0.0, 1.0))
            .unwrap();
        assert_eq!((a.im, c.im), (-1.0, 1.0));
        assert!(b
            .clip_line(Complex::new(3.0, 0.0), Complex::new(0.0, 1.0))
            .is_none());
        assert!(RenderOptions {
            padding: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
