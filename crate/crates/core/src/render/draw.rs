//! Flat 2-D drawings that rasterize to an [`Image`] and serialize to SVG.

use std::fmt::Write;

use super::image::{Image, Rgb};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Polyline { points: Vec<[f64; 2]>, color: Rgb, width: f64 },
    Circle { center: [f64; 2], radius: f64, color: Rgb, width: f64, fill: Option<Rgb> },
    Polygon { points: Vec<[f64; 2]>, fill: Rgb },
    /// SVG only; the raster output skips labels.
    Text { at: [f64; 2], text: String, color: Rgb, size: f64 },
}

/// Pixel-space drawing; `y` grows downwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Drawing {
    pub width: usize,
    pub height: usize,
    pub background: Rgb,
    pub shapes: Vec<Shape>,
}

impl Drawing {
    pub fn new(width: usize, height: usize, background: Rgb) -> Self {
        Self {
            width,
            height,
            background,
            shapes: Vec::new(),
        }
    }

    pub fn polyline(&mut self, points: Vec<[f64; 2]>, color: Rgb, width: f64) {
        self.shapes.push(Shape::Polyline { points, color, width });
    }

    pub fn circle(&mut self, center: [f64; 2], radius: f64, color: Rgb, width: f64) {
        self.shapes.push(Shape::Circle {
            center,
            radius,
            color,
            width,
            fill: None,
        });
    }

    pub fn disk(&mut self, center: [f64; 2], radius: f64, fill: Rgb) {
        self.shapes.push(Shape::Circle {
            center,
            radius,
            color: fill,
            width: 0.0,
            fill: Some(fill),
        });
    }

    pub fn polygon(&mut self, points: Vec<[f64; 2]>, fill: Rgb) {
        self.shapes.push(Shape::Polygon { points, fill });
    }

    pub fn text(&mut self, at: [f64; 2], text: impl Into<String>, color: Rgb, size: f64) {
        self.shapes.push(Shape::Text {
            at,
            text: text.into(),
            color,
            size,
        });
    }

    /// Shaft plus a two-stroke head.
    pub fn arrow(&mut self, from: [f64; 2], to: [f64; 2], color: Rgb, width: f64) {
        let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
        let len = (dx * dx + dy * dy).sqrt();
        if len < 1e-9 {
            return;
        }
        let (ux, uy) = (dx / len, dy / len);
        let head = (0.3 * len).min(12.0);
        let wing = |s: f64| {
            let (c, sn) = (0.5f64.cos(), s * 0.5f64.sin());
            let (rx, ry) = (ux * c - uy * sn, ux * sn + uy * c);
            [to[0] - head * rx, to[1] - head * ry]
        };
        self.polyline(vec![from, to], color, width);
        self.polyline(vec![wing(1.0), to, wing(-1.0)], color, width);
    }

    pub fn to_image(&self) -> Result<Image> {
        let mut img = Image::new(self.width, self.height, self.background)?;
        for shape in &self.shapes {
            match shape {
                Shape::Polyline { points, color, width } => {
                    for w in points.windows(2) {
                        stroke_segment(&mut img, w[0], w[1], width * 0.5, *color);
                    }
                }
                Shape::Circle {
                    center,
                    radius,
                    color,
                    width,
                    fill,
                } => {
                    let reach = radius + width * 0.5 + 1.0;
                    for_pixels_in(&img, [center[0] - reach, center[1] - reach], [center[0] + reach, center[1] + reach], |x, y, px, py| {
                        let d = ((px - center[0]).powi(2) + (py - center[1]).powi(2)).sqrt();
                        if fill.is_some() && d <= *radius {
                            Some((x, y, fill.unwrap()))
                        } else if fill.is_none() && (d - radius).abs() <= width * 0.5 {
                            Some((x, y, *color))
                        } else {
                            None
                        }
                    })
                    .into_iter()
                    .for_each(|(x, y, c)| img.set(x, y, c));
                }
                Shape::Polygon { points, fill } => {
                    if points.len() < 3 || points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                        continue;
                    }
                    let lo = points.iter().fold([f64::INFINITY; 2], |a, p| [a[0].min(p[0]), a[1].min(p[1])]);
                    let hi = points.iter().fold([f64::NEG_INFINITY; 2], |a, p| [a[0].max(p[0]), a[1].max(p[1])]);
                    for_pixels_in(&img, lo, hi, |x, y, px, py| inside_polygon(points, px, py).then_some((x, y, *fill)))
                        .into_iter()
                        .for_each(|(x, y, c)| img.set(x, y, c));
                }
                Shape::Text { .. } => {}
            }
        }
        Ok(img)
    }

    pub fn to_svg(&self) -> String {
        let hex = |c: &Rgb| format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2]);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="{}"/>"#, hex(&self.background));
        let pts = |points: &[[f64; 2]]| {
            points
                .iter()
                .filter(|p| p[0].is_finite() && p[1].is_finite())
                .map(|p| format!("{:.3},{:.3}", p[0], p[1]))
                .collect::<Vec<_>>()
                .join(" ")
        };
        for shape in &self.shapes {
            match shape {
                Shape::Polyline { points, color, width } => {
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{:.3}" stroke-linejoin="round"/>"#,
                        pts(points),
                        hex(color),
                        width
                    );
                }
                Shape::Circle {
                    center,
                    radius,
                    color,
                    width,
                    fill,
                } => {
                    let fill = fill.as_ref().map(hex).unwrap_or_else(|| "none".into());
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="{}" stroke="{}" stroke-width="{:.3}"/>"#,
                        center[0],
                        center[1],
                        radius,
                        fill,
                        hex(color),
                        width
                    );
                }
                Shape::Polygon { points, fill } => {
                    let _ = writeln!(s, r#"<polygon points="{}" fill="{}"/>"#, pts(points), hex(fill));
                }
                Shape::Text { at, text, color, size } => {
                    let escaped = text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
                    let _ = writeln!(
                        s,
                        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="{:.1}" fill="{}">{}</text>"#,
                        at[0],
                        at[1],
                        size,
                        hex(color),
                        escaped
                    );
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Collects `f(x, y, center_x, center_y)` over the pixels whose centers fall
/// in the box.
fn for_pixels_in<F>(img: &Image, lo: [f64; 2], hi: [f64; 2], mut f: F) -> Vec<(usize, usize, Rgb)>
where
    F: FnMut(usize, usize, f64, f64) -> Option<(usize, usize, Rgb)>,
{
    let mut out = Vec::new();
    if !(lo[0].is_finite() && lo[1].is_finite() && hi[0].is_finite() && hi[1].is_finite()) {
        return out;
    }
    let x0 = lo[0].floor().max(0.0) as usize;
    let y0 = lo[1].floor().max(0.0) as usize;
    let x1 = (hi[0].ceil().max(0.0) as usize).min(img.width());
    let y1 = (hi[1].ceil().max(0.0) as usize).min(img.height());
    for y in y0..y1 {
        for x in x0..x1 {
            if let Some(hit) = f(x, y, x as f64 + 0.5, y as f64 + 0.5) {
                out.push(hit);
            }
        }
    }
    out
}

fn stroke_segment(img: &mut Image, a: [f64; 2], b: [f64; 2], half: f64, color: Rgb) {
    if !(a[0].is_finite() && a[1].is_finite() && b[0].is_finite() && b[1].is_finite()) {
        return;
    }
    let r = half.max(0.5);
    let lo = [a[0].min(b[0]) - r, a[1].min(b[1]) - r];
    let hi = [a[0].max(b[0]) + r, a[1].max(b[1]) + r];
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    for_pixels_in(img, lo, hi, |x, y, px, py| {
        let t = if len2 > 0.0 {
            (((px - a[0]) * dx + (py - a[1]) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (qx, qy) = (a[0] + t * dx, a[1] + t * dy);
        ((px - qx).powi(2) + (py - qy).powi(2) <= r * r).then_some((x, y, color))
    })
    .into_iter()
    .for_each(|(x, y, c)| img.set(x, y, c));
}

fn inside_polygon(points: &[[f64; 2]], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = points.len();
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        if (a[1] > y) != (b[1] > y) {
            let xi = a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if x < xi {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raster_and_svg_agree_on_content() {
        let mut d = Drawing::new(20, 20, [0, 0, 0]);
        d.polyline(vec![[0.0, 10.0], [20.0, 10.0]], [255, 0, 0], 2.0);
        d.disk([5.0, 5.0], 2.0, [0, 255, 0]);
        d.polygon(vec![[12.0, 12.0], [18.0, 12.0], [18.0, 18.0]], [0, 0, 255]);
        d.text([1.0, 19.0], "a<b", [255, 255, 255], 8.0);
        let img = d.to_image().unwrap();
        assert_eq!(img.get(10, 9), [255, 0, 0]);
        assert_eq!(img.get(10, 3), [0, 0, 0]);
        assert_eq!(img.get(5, 5), [0, 255, 0]);
        assert_eq!(img.get(17, 13), [0, 0, 255]);
        let svg = d.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline") && svg.contains("<circle") && svg.contains("<polygon"));
        assert!(svg.contains("a&lt;b"));
    }
}
