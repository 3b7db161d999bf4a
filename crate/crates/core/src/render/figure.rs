//! The 2-D illustrations: a line and its parallels in three models, the
//! octant walk on the sphere, walk loops, and the square-walk cycle.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::draw::Drawing;
use super::image::Rgb;
use crate::error::{precondition, Error, Result};
use crate::hyperboloid::{geodesic_point, MTangent};
use crate::models::{project_h2, unproject_h2, Model};
use crate::space::Space;
use crate::transport::{sphere_parallel_transport, SpherePoint};
use crate::walk::{horizontal_loop, ruld, run_script, solve_square_step, square_move, CameraFrame, Command};

const BG: Rgb = [255, 255, 255];
const INK: Rgb = [40, 40, 40];
const GRID: Rgb = [200, 200, 200];
const RED: Rgb = [200, 40, 40];
const BLUE: Rgb = [40, 90, 200];
const GREEN: Rgb = [30, 150, 60];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FigureKind {
    Models2d,
    SphereTransport,
    LoopPanels,
    TransportCycle,
}

impl std::str::FromStr for FigureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "models2d" | "models" => Ok(FigureKind::Models2d),
            "spheretransport" | "sphere" => Ok(FigureKind::SphereTransport),
            "looppanels" | "loops" => Ok(FigureKind::LoopPanels),
            "transportcycle" | "squarewalk" => Ok(FigureKind::TransportCycle),
            other => Err(Error::Parse(format!("unknown figure '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct FigureParams {
    pub width: usize,
    /// Ideal endpoints of the line L, as angles on the boundary circle.
    pub line_ends: [f64; 2],
    /// The point p, in Klein coordinates.
    pub point: [f64; 2],
    /// Number of parallels through p (the two limiting ones included).
    pub fan: usize,
    pub samples: usize,
    /// Restrict models2d to a single panel.
    pub model: Option<Model>,
    pub loop_length: f64,
}

impl Default for FigureParams {
    fn default() -> Self {
        Self {
            width: 1200,
            line_ends: [-150f64.to_radians(), -30f64.to_radians()],
            point: [0.1, 0.3],
            fan: 7,
            samples: 240,
            model: None,
            loop_length: 0.5,
        }
    }
}

/// One sampled geodesic: model coordinates and their pixel positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SampledCurve {
    pub model: Model,
    /// `true` for L itself.
    pub is_line: bool,
    pub model_points: Vec<[f64; 2]>,
    pub pixel_points: Vec<[f64; 2]>,
}

/// Numbers behind a loop or cycle panel.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PanelSummary {
    pub title: String,
    pub space: Space,
    pub moves: usize,
    pub closed: bool,
    pub rotation_deg: f64,
    pub moves_to_close: Option<usize>,
    pub physical_endpoint: Option<[i64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Figure {
    pub kind: FigureKind,
    #[serde(skip)]
    pub drawing: Drawing,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<SampledCurve>,
    /// Angle from the initial to the final transported arrow.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transport_angle_deg: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub panels: Vec<PanelSummary>,
}

impl Figure {
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("figure metadata serializes")
    }
}

pub fn render_figure(kind: FigureKind, params: &FigureParams) -> Result<Figure> {
    if params.width < 100 {
        return precondition("figure width must be at least 100 px");
    }
    if params.samples < 8 {
        return precondition("need at least 8 samples per curve");
    }
    match kind {
        FigureKind::Models2d => models2d(params),
        FigureKind::SphereTransport => sphere_transport(params),
        FigureKind::LoopPanels => loop_panels(params),
        FigureKind::TransportCycle => transport_cycle(params),
    }
}

/// Maps a square model window onto a pixel rectangle.
#[derive(Debug, Clone, Copy)]
struct Viewport {
    origin: [f64; 2],
    size: f64,
    /// Model coordinates at the top-left corner and model units per side.
    min: [f64; 2],
    span: f64,
}

impl Viewport {
    fn to_px(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + (p[0] - self.min[0]) / self.span * self.size,
            self.origin[1] + (self.min[1] + self.span - p[1]) / self.span * self.size,
        ]
    }

    fn centered(origin: [f64; 2], size: f64, center: [f64; 2], span: f64) -> Self {
        Self {
            origin,
            size,
            min: [center[0] - 0.5 * span, center[1] - 0.5 * span],
            span,
        }
    }
}

/// Part of segment `ab` inside the viewport (Liang–Barsky).
fn clip_segment(vp: &Viewport, a: [f64; 2], b: [f64; 2]) -> Option<([f64; 2], [f64; 2])> {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let (x0, y0) = (vp.origin[0], vp.origin[1]);
    let (x1, y1) = (x0 + vp.size, y0 + vp.size);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-dx, a[0] - x0), (dx, x1 - a[0]), (-dy, a[1] - y0), (dy, y1 - a[1])] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then(|| {
        (
            [a[0] + t0 * dx, a[1] + t0 * dy],
            [a[0] + t1 * dx, a[1] + t1 * dy],
        )
    })
}

/// Draws the parts of a polyline inside the viewport.
fn clipped_polyline(d: &mut Drawing, vp: &Viewport, pts: &[[f64; 2]], color: Rgb, width: f64) {
    let mut run: Vec<[f64; 2]> = Vec::new();
    for w in pts.windows(2) {
        match clip_segment(vp, w[0], w[1]) {
            Some((a, b)) => {
                if run.last() != Some(&a) {
                    if run.len() > 1 {
                        d.polyline(std::mem::take(&mut run), color, width);
                    }
                    run = vec![a];
                }
                run.push(b);
            }
            None => {
                if run.len() > 1 {
                    d.polyline(std::mem::take(&mut run), color, width);
                }
                run.clear();
            }
        }
    }
    if run.len() > 1 {
        d.polyline(run, color, width);
    }
}

fn klein_line_through(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    // signed area: zero when p is on the chord ab
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Geodesic of ℍ² through the Klein point `p` in Klein direction `dir`,
/// sampled at `n` parameters spread over `[-reach, reach]`.
fn sample_geodesic(p: [f64; 2], dir: [f64; 2], reach: f64, n: usize) -> Result<Vec<[f64; 3]>> {
    let base = unproject_h2(&p, Model::Klein)?;
    // derivative of (y, 1)/√(1 − |y|²) along dir
    let w2 = 1.0 - p[0] * p[0] - p[1] * p[1];
    let w = w2.sqrt();
    let pd = p[0] * dir[0] + p[1] * dir[1];
    let v = [
        dir[0] / w + p[0] * pd / (w * w2),
        dir[1] / w + p[1] * pd / (w * w2),
        pd / (w * w2),
    ];
    let t = MTangent::project(base, v).normalized()?;
    (0..n)
        .map(|i| {
            let s = -reach + 2.0 * reach * i as f64 / (n - 1) as f64;
            geodesic_point(&t, s).map(|q| *q.coords())
        })
        .collect()
}

fn angle_mod_pi(v: [f64; 2]) -> f64 {
    v[1].atan2(v[0]).rem_euclid(PI)
}

fn models2d(params: &FigureParams) -> Result<Figure> {
    let [a0, b0] = params.line_ends;
    let a = [a0.cos(), a0.sin()];
    let b = [b0.cos(), b0.sin()];
    if (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-6 {
        return precondition("the line's endpoints coincide");
    }
    let p = params.point;
    if p[0] * p[0] + p[1] * p[1] >= 1.0 - 1e-9 {
        return precondition("p must lie inside the unit disk");
    }
    if klein_line_through(a, b, p).abs() < 1e-9 {
        return precondition("p lies on L; parallels need a point off the line");
    }
    if params.fan < 2 {
        return precondition("the fan needs at least the two limiting parallels");
    }

    // directions through p that miss L: the arc between the limiting
    // directions (towards the ideal ends) not containing the chord's midpoint
    let alpha = angle_mod_pi([a[0] - p[0], a[1] - p[1]]);
    let beta = angle_mod_pi([b[0] - p[0], b[1] - p[1]]);
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let mu = angle_mod_pi([mid[0] - p[0], mid[1] - p[1]]);
    let sweep = (beta - alpha).rem_euclid(PI);
    let contains_mu = (mu - alpha).rem_euclid(PI) < sweep;
    let (start, len) = if contains_mu { (beta, PI - sweep) } else { (alpha, sweep) };
    let mut lines: Vec<([f64; 2], [f64; 2], bool)> = Vec::new();
    // L through its midpoint towards b
    lines.push((mid, [b[0] - a[0], b[1] - a[1]], true));
    for k in 0..params.fan {
        let th = start + len * k as f64 / (params.fan - 1) as f64;
        lines.push((p, [th.cos(), th.sin()], false));
    }

    let reach = 8.0;
    let mut hyperboloid = Vec::new();
    for (q, dir, is_line) in &lines {
        let n = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        let d = [dir[0] / n, dir[1] / n];
        hyperboloid.push((sample_geodesic(*q, d, reach, params.samples)?, *is_line));
    }

    let models: Vec<Model> = match params.model {
        Some(m) => vec![m],
        None => vec![Model::Klein, Model::Poincare, Model::HalfSpace],
    };
    let panel = params.width as f64 / models.len() as f64;
    let margin = 0.04 * panel;
    let height = panel.round() as usize;
    let mut d = Drawing::new(params.width, height, BG);
    let mut curves = Vec::new();
    for (i, model) in models.iter().enumerate() {
        let origin = [i as f64 * panel + margin, margin];
        let size = panel - 2.0 * margin;
        let vp = match model {
            Model::HalfSpace => Viewport::centered(origin, size, [0.0, 1.6], 3.4),
            _ => Viewport::centered(origin, size, [0.0, 0.0], 2.1),
        };
        match model {
            Model::HalfSpace => {
                let y0 = vp.to_px([0.0, 0.0])[1];
                d.polyline(vec![[origin[0], y0], [origin[0] + size, y0]], GRID, 2.0);
            }
            _ => {
                let c = vp.to_px([0.0, 0.0]);
                d.circle(c, size / vp.span, GRID, 2.0);
            }
        }
        for (pts, is_line) in &hyperboloid {
            let model_points: Vec<[f64; 2]> = pts
                .iter()
                .map(|x| project_h2(&crate::hyperboloid::MPoint::new_unchecked(*x), *model))
                .collect();
            let pixel_points: Vec<[f64; 2]> = model_points.iter().map(|m| vp.to_px(*m)).collect();
            let color = if *is_line { RED } else { BLUE };
            clipped_polyline(&mut d, &vp, &pixel_points, color, if *is_line { 3.0 } else { 1.5 });
            curves.push(SampledCurve {
                model: *model,
                is_line: *is_line,
                model_points,
                pixel_points,
            });
        }
        let pm = project_h2(&unproject_h2(&p, Model::Klein)?, *model);
        d.disk(vp.to_px(pm), 4.0, INK);
        let label = match model {
            Model::Klein => "Beltrami-Klein",
            Model::Poincare => "Poincare disk",
            Model::HalfSpace => "upper half-plane",
        };
        d.text([origin[0], origin[1] + 14.0], label, INK, 14.0);
    }
    Ok(Figure {
        kind: FigureKind::Models2d,
        drawing: d,
        curves,
        transport_angle_deg: None,
        panels: Vec::new(),
    })
}

/// Orthographic view of the unit sphere from the direction `(1, 1, 0.8)`.
struct SphereView {
    right: [f64; 3],
    up: [f64; 3],
    toward: [f64; 3],
    center: [f64; 2],
    radius: f64,
}

impl SphereView {
    fn new(center: [f64; 2], radius: f64) -> Self {
        let n = |v: [f64; 3]| {
            let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            v.map(|c| c / l)
        };
        let toward = n([1.0, 1.0, 0.8]);
        let right = n([-1.0, 1.0, 0.0]);
        let up = crate::transport::cross3(&toward, &right);
        Self {
            right,
            up,
            toward,
            center,
            radius,
        }
    }

    fn px(&self, v: [f64; 3]) -> [f64; 2] {
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        [
            self.center[0] + self.radius * dot(v, self.right),
            self.center[1] - self.radius * dot(v, self.up),
        ]
    }

    fn visible(&self, v: [f64; 3]) -> bool {
        v[0] * self.toward[0] + v[1] * self.toward[1] + v[2] * self.toward[2] >= 0.0
    }
}

fn slerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    let d = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
    let om = d.acos();
    if om < 1e-12 {
        return a;
    }
    let (sa, sb) = (((1.0 - t) * om).sin() / om.sin(), (t * om).sin() / om.sin());
    [0, 1, 2].map(|i| sa * a[i] + sb * b[i])
}

fn sphere_transport(params: &FigureParams) -> Result<Figure> {
    let w = params.width as f64;
    let mut d = Drawing::new(params.width, params.width, BG);
    let view = SphereView::new([0.5 * w, 0.5 * w], 0.42 * w);
    d.circle(view.center, view.radius, GRID, 2.0);
    // equator and two meridians for orientation
    for (a, b) in [([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), ([0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]), ([-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]), ([0.0, -1.0, 0.0], [1.0, 0.0, 0.0])] {
        let pts: Vec<[f64; 2]> = (0..=60)
            .map(|i| slerp(a, b, i as f64 / 60.0))
            .filter(|v| view.visible(*v))
            .map(|v| view.px(v))
            .collect();
        if pts.len() > 1 {
            d.polyline(pts, GRID, 1.0);
        }
    }

    let corners = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let steps = (params.samples / 3).max(4);
    let mut path = vec![SpherePoint::new(corners[0])?];
    for leg in corners.windows(2) {
        for i in 1..=steps {
            path.push(SpherePoint::normalized(slerp(leg[0], leg[1], i as f64 / steps as f64)));
        }
    }
    // the arrow starts pointing down the first leg
    let v0 = [1.0, 0.0, 0.0];
    let mut v = v0;
    let mut arrows = vec![(corners[0], v0)];
    for (i, w2) in path.windows(2).enumerate() {
        v = sphere_parallel_transport(&w2[0], &w2[1], &v)?;
        if (i + 1) % (steps / 2).max(1) == 0 {
            arrows.push((*w2[1].coords(), v));
        }
    }
    let line: Vec<[f64; 2]> = path.iter().map(|p| view.px(*p.coords())).collect();
    d.polyline(line, INK, 2.5);
    let alen = 0.25;
    for (k, (at, dir)) in arrows.iter().enumerate() {
        let tip = [0, 1, 2].map(|i| at[i] + alen * dir[i]);
        let color = if k == 0 {
            GREEN
        } else if k + 1 == arrows.len() {
            RED
        } else {
            BLUE
        };
        d.arrow(view.px(*at), view.px(tip), color, 2.5);
    }
    let dot = v0[0] * v[0] + v0[1] * v[1] + v0[2] * v[2];
    let angle = dot.clamp(-1.0, 1.0).acos().to_degrees();
    d.text([12.0, 24.0], format!("rotation after the loop: {angle:.3} deg"), INK, 18.0);
    Ok(Figure {
        kind: FigureKind::SphereTransport,
        drawing: d,
        curves: Vec::new(),
        transport_angle_deg: Some(angle),
        panels: Vec::new(),
    })
}

/// Plane coordinates of a frame position and a unit screen direction for
/// one of its axes: Klein in the chosen coordinate pair for ℍ³, Poincaré of
/// the horizontal part (or horizontal/vertical) for ℍ²×𝔼, plain for 𝔼³.
fn plot_frame(frame: &CameraFrame, coords: [usize; 2], axis: usize) -> ([f64; 2], [f64; 2]) {
    let m = frame.frame_matrix();
    let pos = m.col(3);
    let ax = m.col(axis);
    let proj = |x: [f64; 4]| -> [f64; 2] {
        match frame.space() {
            Space::H3 => [x[coords[0]] / x[3], x[coords[1]] / x[3]],
            Space::H2E => {
                let s = 1.0 + x[3];
                let f = |i: usize| if i == 2 { x[2] } else { x[i] / s };
                [f(coords[0]), f(coords[1])]
            }
            Space::Euclidean => [x[coords[0]], x[coords[1]]],
        }
    };
    let p = proj(pos.0);
    let eps = 1e-6;
    let q = proj([0, 1, 2, 3].map(|i| pos[i] + eps * ax[i]));
    let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
    let n = dx.hypot(dy).max(1e-300);
    (p, [dx / n, dy / n])
}

/// A traced walk: densely sampled frames and the frames at its corners.
struct Trace {
    dense: Vec<CameraFrame>,
    corners: Vec<CameraFrame>,
}

fn trace(start: &CameraFrame, script: &[Command]) -> Trace {
    const PIECES: usize = 16;
    let mut f = *start;
    let mut dense = vec![f];
    let mut corners = vec![f];
    for c in script {
        match *c {
            Command::Translate { axis, length } => {
                let piece = Command::translate(axis, length / PIECES as f64);
                for _ in 0..PIECES {
                    f = f.apply(&piece);
                    dense.push(f);
                }
                corners.push(f);
            }
            Command::Rotate { .. } => f = f.apply(c),
        }
    }
    // the final turn changes the frame but not the position
    *corners.last_mut().expect("nonempty") = f;
    Trace { dense, corners }
}

/// A traced path drawn into one panel with start and end arrows.
fn draw_path(d: &mut Drawing, vp: &Viewport, t: &Trace, coords: [usize; 2], arrow_axis: usize, disk: bool) {
    if disk {
        d.circle(vp.to_px([0.0, 0.0]), vp.size / vp.span, GRID, 1.5);
    }
    let px = |f: &CameraFrame| vp.to_px(plot_frame(f, coords, 0).0);
    let pts: Vec<[f64; 2]> = t.dense.iter().map(px).collect();
    clipped_polyline(d, vp, &pts, INK, 2.0);
    for c in &t.corners {
        d.disk(px(c), 3.0, INK);
    }
    let alen = 0.12 * vp.size;
    for (f, color) in [(t.corners[0], GREEN), (*t.corners.last().expect("nonempty"), RED)] {
        let (p, dir) = plot_frame(&f, coords, arrow_axis);
        let a = vp.to_px(p);
        // screen y points down
        d.arrow(a, [a[0] + alen * dir[0], a[1] - alen * dir[1]], color, 2.5);
    }
}

fn loop_panels(params: &FigureParams) -> Result<Figure> {
    let l = params.loop_length;
    if !(l > 0.0 && l < 3.0) {
        return precondition("loop length must be in (0, 3)");
    }
    // (title, space, script, plotted coordinates, arrow axis)
    let cases: [(&str, Space, Vec<Command>, [usize; 2], usize); 4] = [
        ("H3: right, up, left, down", Space::H3, ruld(l), [0, 1], 1),
        ("H2xE: right, up, left, down", Space::H2E, ruld(l), [0, 2], 1),
        ("H2xE: horizontal loop", Space::H2E, horizontal_loop(l), [0, 1], 2),
        ("E3: right, up, left, down", Space::Euclidean, ruld(l), [0, 1], 1),
    ];
    let panel = params.width as f64 / 4.0;
    let mut d = Drawing::new(params.width, panel.round() as usize, BG);
    let mut panels = Vec::new();
    for (i, (title, space, script, coords, axis)) in cases.iter().enumerate() {
        let start = CameraFrame::identity(*space);
        let report = run_script(&start, script)?;
        let path = trace(&start, script);
        let margin = 0.06 * panel;
        let origin = [i as f64 * panel + margin, 1.5 * margin];
        let size = panel - 2.0 * margin;
        let horizontal = *space == Space::H2E && coords[1] != 2;
        let (center, span) = match space {
            Space::H3 => {
                let c = 0.5 * l.tanh();
                ([c, c], 1.2)
            }
            _ if horizontal => {
                let c = 0.5 * l.tanh();
                ([-c, c], 1.2)
            }
            _ => ([0.5 * l, 0.5 * l], 2.2 * l),
        };
        let vp = Viewport::centered(origin, size, center, span);
        draw_path(&mut d, &vp, &path, *coords, *axis, false);
        let rot = report.classification.rotation_angle().to_degrees();
        d.text([origin[0], 0.9 * margin], *title, INK, 13.0);
        d.text([origin[0], origin[1] + size], format!("rotation {rot:.2} deg"), INK, 13.0);
        panels.push(PanelSummary {
            title: title.to_string(),
            space: *space,
            moves: script.len(),
            closed: report.closed,
            rotation_deg: rot,
            moves_to_close: report.moves_to_close,
            physical_endpoint: None,
        });
    }
    Ok(Figure {
        kind: FigureKind::LoopPanels,
        drawing: d,
        curves: Vec::new(),
        transport_angle_deg: None,
        panels,
    })
}

fn transport_cycle(params: &FigureParams) -> Result<Figure> {
    let turn = FRAC_PI_2;
    let h_step = solve_square_step(turn, 6, Space::H2E)?;
    let panel = params.width as f64 / 3.0;
    let margin = 0.06 * panel;
    let size = panel - 2.0 * margin;
    let mut d = Drawing::new(params.width, panel.round() as usize, BG);
    let mut panels = Vec::new();

    let cases = [
        ("room: four 90 deg turns", Space::Euclidean, 1.0, 4usize),
        ("H2: six 90 deg turns", Space::H2E, h_step, 6usize),
    ];
    for (i, (title, space, step, moves)) in cases.iter().enumerate() {
        let script: Vec<Command> = (0..*moves).flat_map(|_| square_move(*step, turn)).collect();
        let report = crate::walk::square_walk(*step, turn, *space, 12)?;
        let path = trace(&CameraFrame::identity(*space), &script);
        let origin = [i as f64 * panel + margin, 1.5 * margin];
        let vp = match space {
            Space::Euclidean => Viewport::centered(origin, size, [-0.5, -0.5], 3.0),
            _ => Viewport::centered(origin, size, [0.0, 0.0], 2.1),
        };
        let coords = if *space == Space::Euclidean { [0, 2] } else { [0, 1] };
        draw_path(&mut d, &vp, &path, coords, 2, *space != Space::Euclidean);
        d.text([origin[0], 0.9 * margin], *title, INK, 13.0);
        panels.push(PanelSummary {
            title: title.to_string(),
            space: *space,
            moves: report.moves,
            closed: report.closed,
            rotation_deg: report.classification.rotation_angle().to_degrees(),
            moves_to_close: report.moves_to_close,
            physical_endpoint: Some(report.physical_endpoint),
        });
    }

    // the same six turns replayed in the physical room's grid
    let report = crate::walk::square_walk(h_step, turn, Space::H2E, 12)?;
    let grid: Vec<Command> = (0..report.moves).flat_map(|_| square_move(1.0, turn)).collect();
    let path = trace(&CameraFrame::identity(Space::Euclidean), &grid);
    let origin = [2.0 * panel + margin, 1.5 * margin];
    let vp = Viewport::centered(origin, size, [-0.5, -0.5], 3.0);
    for k in -1..=1 {
        let kf = k as f64 - 0.5;
        let vertical = [vp.to_px([kf, -2.0]), vp.to_px([kf, 1.0])];
        let horizontal = [vp.to_px([-2.0, kf]), vp.to_px([1.0, kf])];
        clipped_polyline(&mut d, &vp, &vertical, GRID, 1.0);
        clipped_polyline(&mut d, &vp, &horizontal, GRID, 1.0);
    }
    draw_path(&mut d, &vp, &path, [0, 2], 2, false);
    let [ex, ey] = report.physical_endpoint;
    d.text(
        [origin[0], 0.9 * margin],
        format!("room replay: ends at ({ex}, {ey})"),
        INK,
        13.0,
    );
    panels.push(PanelSummary {
        title: "room replay".into(),
        space: Space::Euclidean,
        moves: report.moves,
        closed: report.physical_endpoint == [0, 0],
        rotation_deg: 0.0,
        moves_to_close: None,
        physical_endpoint: Some(report.physical_endpoint),
    });
    Ok(Figure {
        kind: FigureKind::TransportCycle,
        drawing: d,
        curves: Vec::new(),
        transport_angle_deg: None,
        panels,
    })
}
