//! First-person rendering: camera-relative cell transforms, projection to
//! view coordinates, and a z-buffered triangle rasterizer.
//!
//! View coordinates are `(right, up, forward)`. In ℍ³ a point is placed at
//! its Klein coordinates relative to the camera (geodesics through the eye
//! stay straight); in ℍ²×𝔼 at its exact geodesic direction scaled by its
//! distance; in 𝔼³ at its plain coordinates. Screen position comes from the
//! direction only, so all three give the true view.

use rayon::prelude::*;

use super::image::{Image, Rgb};
use super::scene::{LocalMesh, LocalPoint, MeshBuilder, MeshKind, Scene};
use crate::error::{precondition, Result};
use crate::linalg::{MVector, Matrix};
use crate::perception::{eye_frames, EyeConfig};
use crate::space::Space;
use crate::tiling::{inverse_of, TilingKind};
use crate::walk::CameraFrame;

type Mat4 = Matrix<f64, 4>;

/// Near plane on the forward view coordinate.
const NEAR: f64 = 1e-3;
/// Klein radius beyond which geometry is dropped.
const KLEIN_CLIP: f64 = 0.9999;
/// Stroke half-width for cell edges, pixels.
const LINE_HALF_WIDTH: f64 = 0.9;
/// Depth bias letting edges win against the faces they bound.
const LINE_DEPTH_BIAS: f64 = 1e-3;
/// Rows per parallel band.
const BAND_ROWS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum StereoMode {
    #[serde(rename = "inSpace")]
    InSpace,
    #[serde(rename = "modelSpace")]
    ModelSpace,
}

impl std::str::FromStr for StereoMode {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inspace" | "in-space" => Ok(StereoMode::InSpace),
            "modelspace" | "model-space" => Ok(StereoMode::ModelSpace),
            other => Err(crate::error::Error::Parse(format!("unknown stereo mode '{other}'"))),
        }
    }
}

/// Image size and vertical field of view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewSpec {
    pub width: usize,
    pub height: usize,
    pub fov_y: f64,
}

impl ViewSpec {
    pub fn new(width: usize, height: usize, fov_y: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return precondition("image size must be positive");
        }
        if !(fov_y > 0.0 && fov_y < std::f64::consts::PI) {
            return precondition(format!("field of view must be in (0, pi), got {fov_y}"));
        }
        Ok(Self { width, height, fov_y })
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        0.5 * self.height as f64 / (0.5 * self.fov_y).tan()
    }

    /// Screen position of a view-space point with positive forward coordinate.
    pub fn project(&self, p: &[f64; 3]) -> [f64; 2] {
        let f = self.focal();
        [
            0.5 * self.width as f64 + f * p[0] / p[2],
            0.5 * self.height as f64 - f * p[1] / p[2],
        ]
    }
}

/// Extra facts about a render.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RenderInfo {
    pub triangles: usize,
    pub segments: usize,
    /// The scene's tiling hit its cell budget.
    pub truncated: bool,
}

/// A vertex in view coordinates with its distance from the eye.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ViewVertex {
    p: [f64; 3],
    depth: f64,
}

impl ViewVertex {
    fn lerp(&self, o: &Self, t: f64) -> Self {
        Self {
            p: [
                self.p[0] + (o.p[0] - self.p[0]) * t,
                self.p[1] + (o.p[1] - self.p[1]) * t,
                self.p[2] + (o.p[2] - self.p[2]) * t,
            ],
            depth: self.depth + (o.depth - self.depth) * t,
        }
    }
}

/// How cell-local points reach view coordinates.
#[derive(Debug, Clone, Copy)]
enum Viewer {
    /// `R = camera⁻¹` (Lorentz or affine).
    Linear { space: Space, inv: Mat4 },
    /// ℍ²×𝔼: inverse horizontal motion, camera height, body axes in
    /// reference coordinates (columns of the orientation).
    Product { inv_h: Mat4, z: f64, orientation: Matrix<f64, 3> },
}

/// A viewer plus, for model-space stereo, a Euclidean eye offset along the
/// right axis applied to normal coordinates.
#[derive(Debug, Clone, Copy)]
struct Eye {
    viewer: Viewer,
    model_offset: Option<f64>,
}

/// Camera moved back into the fundamental cell by tiling symmetries.
///
/// The scene is invariant under those symmetries, so the view is the same;
/// the result is snapped to a 2⁻³⁰ grid so cameras that differ only by the
/// rounding of a symmetry give identical pixels.
pub fn reduce_camera(scene: &Scene, camera: &CameraFrame) -> CameraFrame {
    let t = &scene.tiling;
    let snap = |m: &Mat4| {
        let mut out = *m;
        for c in 0..4 {
            for r in 0..4 {
                let v = (m.get(r, c) * (1u64 << 30) as f64).round() / (1u64 << 30) as f64;
                out.set(r, c, v);
            }
        }
        out
    };
    match camera {
        CameraFrame::H3(g) => {
            let (k, _) = t.reduce_point(&g.matrix().col(3).0);
            let m = inverse_of(TilingKind::Hyperbolic, &k) * *g.matrix();
            CameraFrame::H3(crate::isometry::Isometry::from_matrix_unchecked(snap(&m)))
        }
        CameraFrame::Euclidean(g) => {
            let (k, _) = t.reduce_point(&g.matrix().col(3).0);
            let m = inverse_of(TilingKind::Euclidean, &k) * *g.matrix();
            CameraFrame::Euclidean(crate::space::EuclideanMotion::from_matrix_unchecked(snap(&m)))
        }
        CameraFrame::H2E { motion, orientation } => {
            let h = motion.embedded_h_matrix();
            let (k, _) = t.reduce_point(&h.col(3).0);
            let m = snap(&(inverse_of(TilingKind::Hyperbolic, &k) * h));
            let mut h3 = Matrix::<f64, 3>::identity();
            for (ci, c) in [0usize, 1, 3].into_iter().enumerate() {
                for (ri, r) in [0usize, 1, 3].into_iter().enumerate() {
                    h3.set(ri, ci, m.get(r, c));
                }
            }
            CameraFrame::H2E {
                motion: crate::product::ProductIsometry {
                    h_part: crate::isometry::Isometry::from_matrix_unchecked(h3),
                    ..*motion
                },
                orientation: *orientation,
            }
        }
    }
}

fn viewer_for(camera: &CameraFrame) -> Viewer {
    match camera {
        CameraFrame::H3(g) => Viewer::Linear {
            space: Space::H3,
            inv: g.matrix().minkowski_adjoint(),
        },
        CameraFrame::Euclidean(g) => Viewer::Linear {
            space: Space::Euclidean,
            inv: *g.inverse().matrix(),
        },
        CameraFrame::H2E { motion, orientation } => Viewer::Product {
            inv_h: motion.embedded_h_matrix().minkowski_adjoint(),
            z: motion.z_shift,
            orientation: *orientation,
        },
    }
}

impl Eye {
    /// Transform a cell matrix once; the result maps local points to view.
    fn cell(&self, to_cell: &Mat4) -> CellView {
        let m = match &self.viewer {
            Viewer::Linear { inv, .. } => *inv * *to_cell,
            Viewer::Product { inv_h, .. } => *inv_h * *to_cell,
        };
        CellView { eye: *self, m }
    }
}

#[derive(Debug, Clone, Copy)]
struct CellView {
    eye: Eye,
    m: Mat4,
}

impl CellView {
    /// View vertex of a local point, or `None` beyond the Klein clip.
    fn vertex(&self, p: &LocalPoint) -> Option<ViewVertex> {
        match self.eye.model_offset {
            None => self.in_space(p),
            Some(offset) => {
                let base = self.normal_coords(p)?;
                let q = [base[0] - offset, base[1], base[2]];
                let depth = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
                Some(ViewVertex { p: q, depth })
            }
        }
    }

    fn in_space(&self, p: &LocalPoint) -> Option<ViewVertex> {
        let x = self.m.mul_vec(&MVector(p.x));
        match self.eye.viewer {
            Viewer::Linear { space: Space::Euclidean, .. } => {
                let q = [x[0], x[1], x[2]];
                Some(ViewVertex {
                    p: q,
                    depth: (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt(),
                })
            }
            Viewer::Linear { .. } => {
                let q = [x[0] / x[3], x[1] / x[3], x[2] / x[3]];
                if q[0] * q[0] + q[1] * q[1] + q[2] * q[2] > KLEIN_CLIP * KLEIN_CLIP {
                    return None;
                }
                Some(ViewVertex {
                    p: q,
                    depth: x[3].max(1.0).acosh(),
                })
            }
            Viewer::Product { z, orientation, .. } => {
                // ℍ² log map at the origin, then into body axes
                let rho = x[3].max(1.0).acosh();
                let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let (u0, u1) = if s > 1e-300 { (rho * x[0] / s, rho * x[1] / s) } else { (0.0, 0.0) };
                let dz = p.z - z;
                // reference (right, up, forward) = (x₁, z, x₂)
                let w = MVector([u0, dz, u1]);
                let body = orientation.transpose().mul_vec(&w);
                Some(ViewVertex {
                    p: body.0,
                    depth: (rho * rho + dz * dz).sqrt(),
                })
            }
        }
    }

    /// Direction scaled by true distance (the Klein point pushed out radially).
    fn normal_coords(&self, p: &LocalPoint) -> Option<[f64; 3]> {
        let v = self.in_space(p)?;
        let n = (v.p[0] * v.p[0] + v.p[1] * v.p[1] + v.p[2] * v.p[2]).sqrt();
        if n < 1e-300 {
            return Some([0.0; 3]);
        }
        Some(v.p.map(|c| c * v.depth / n))
    }

    fn center_depth(&self) -> f64 {
        let o = LocalPoint {
            x: [0.0, 0.0, 0.0, 1.0],
            z: super::scene::MARKER_HEIGHT,
        };
        self.vertex(&o).map(|v| v.depth).unwrap_or(f64::INFINITY)
    }
}

/// A screen-space triangle with flat color and per-vertex depth.
#[derive(Debug, Clone, Copy)]
struct ScreenTri {
    pts: [[f64; 2]; 3],
    depth: [f64; 3],
    color: Rgb,
    y_range: (usize, usize),
}

/// Clips a convex polygon to `forward ≥ NEAR`.
fn clip_near(poly: &[ViewVertex]) -> Vec<ViewVertex> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (ina, inb) = (a.p[2] >= NEAR, b.p[2] >= NEAR);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (NEAR - a.p[2]) / (b.p[2] - a.p[2]);
            out.push(a.lerp(&b, t));
        }
    }
    out
}

fn fogged(color: Rgb, shade: f64, depth: f64, fog_scale: f64, bg: Rgb) -> Rgb {
    let f = (-depth / fog_scale).exp();
    let mut out = [0u8; 3];
    for k in 0..3 {
        let c = color[k] as f64 * shade;
        let v = bg[k] as f64 + (c - bg[k] as f64) * f;
        out[k] = v.round().clamp(0.0, 255.0) as u8;
    }
    out
}

struct Builder<'a> {
    view: &'a ViewSpec,
    fog_scale: f64,
    background: Rgb,
}

impl Builder<'_> {
    fn push_poly(&self, out: &mut Vec<ScreenTri>, poly: &[ViewVertex], color: Rgb, shade: f64, bias: f64) {
        let clipped = clip_near(poly);
        if clipped.len() < 3 {
            return;
        }
        let mean_depth = clipped.iter().map(|v| v.depth).sum::<f64>() / clipped.len() as f64;
        let c = fogged(color, shade, mean_depth, self.fog_scale, self.background);
        let screen: Vec<[f64; 2]> = clipped.iter().map(|v| self.view.project(&v.p)).collect();
        for i in 1..clipped.len() - 1 {
            let idx = [0, i, i + 1];
            let pts = idx.map(|k| screen[k]);
            if pts.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                continue;
            }
            let ymin = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
            let ymax = pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
            if ymax < 0.0 || ymin > self.view.height as f64 {
                continue;
            }
            let xmin = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let xmax = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            if xmax < 0.0 || xmin > self.view.width as f64 {
                continue;
            }
            let y0 = (ymin - 0.5).ceil().max(0.0) as usize;
            let y1 = ((ymax - 0.5).floor() + 1.0).clamp(0.0, self.view.height as f64) as usize;
            out.push(ScreenTri {
                pts,
                depth: idx.map(|k| clipped[k].depth - bias),
                color: c,
                y_range: (y0, y1),
            });
        }
    }

    fn push_segment(&self, out: &mut Vec<ScreenTri>, a: ViewVertex, b: ViewVertex, color: Rgb) {
        let (a, b) = match (a.p[2] >= NEAR, b.p[2] >= NEAR) {
            (true, true) => (a, b),
            (false, false) => return,
            (true, false) => (a, a.lerp(&b, (NEAR - a.p[2]) / (b.p[2] - a.p[2]))),
            (false, true) => (b.lerp(&a, (NEAR - b.p[2]) / (a.p[2] - b.p[2])), b),
        };
        let (sa, sb) = (self.view.project(&a.p), self.view.project(&b.p));
        let (dx, dy) = (sb[0] - sa[0], sb[1] - sa[1]);
        let len = (dx * dx + dy * dy).sqrt();
        if !len.is_finite() {
            return;
        }
        let (nx, ny) = if len > 1e-9 {
            (-dy / len * LINE_HALF_WIDTH, dx / len * LINE_HALF_WIDTH)
        } else {
            (LINE_HALF_WIDTH, 0.0)
        };
        // extend the ends by the half width so joints close
        let (ex, ey) = if len > 1e-9 {
            (dx / len * LINE_HALF_WIDTH, dy / len * LINE_HALF_WIDTH)
        } else {
            (0.0, LINE_HALF_WIDTH)
        };
        // quad as a polygon in a pseudo view space: unproject screen corners
        // at their endpoint depths so push_poly's projection returns them
        let f = self.view.focal();
        let (cx, cy) = (0.5 * self.view.width as f64, 0.5 * self.view.height as f64);
        let un = |s: [f64; 2], depth: f64| ViewVertex {
            p: [(s[0] - cx) / f, (cy - s[1]) / f, 1.0],
            depth,
        };
        let quad = [
            un([sa[0] - ex + nx, sa[1] - ey + ny], a.depth),
            un([sb[0] + ex + nx, sb[1] + ey + ny], b.depth),
            un([sb[0] + ex - nx, sb[1] + ey - ny], b.depth),
            un([sa[0] - ex - nx, sa[1] - ey - ny], a.depth),
        ];
        self.push_poly(out, &quad, color, 1.0, LINE_DEPTH_BIAS);
    }
}

fn rasterize(view: &ViewSpec, tris: &[ScreenTri], background: Rgb) -> Image {
    let (w, h) = (view.width, view.height);
    let mut pixels = vec![background; w * h];
    pixels.par_chunks_mut(w * BAND_ROWS).enumerate().for_each(|(band, rows)| {
        let y_start = band * BAND_ROWS;
        let nrows = rows.len() / w;
        let y_end = y_start + nrows;
        let mut zbuf = vec![f64::INFINITY; rows.len()];
        for t in tris {
            if t.y_range.1 <= y_start || t.y_range.0 >= y_end {
                continue;
            }
            let [a, b, c] = t.pts;
            let area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            if area.abs() < 1e-12 {
                continue;
            }
            let sign = area.signum();
            let xmin = a[0].min(b[0]).min(c[0]);
            let xmax = a[0].max(b[0]).max(c[0]);
            let x0 = (xmin - 0.5).ceil().max(0.0) as usize;
            let x1 = ((xmax - 0.5).floor() + 1.0).clamp(0.0, w as f64) as usize;
            let ya = t.y_range.0.max(y_start);
            let yb = t.y_range.1.min(y_end);
            for y in ya..yb {
                let py = y as f64 + 0.5;
                for x in x0..x1 {
                    let px = x as f64 + 0.5;
                    let w0 = sign * ((c[0] - b[0]) * (py - b[1]) - (c[1] - b[1]) * (px - b[0]));
                    let w1 = sign * ((a[0] - c[0]) * (py - c[1]) - (a[1] - c[1]) * (px - c[0]));
                    let w2 = sign * ((b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]));
                    if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                        continue;
                    }
                    let depth = (w0 * t.depth[0] + w1 * t.depth[1] + w2 * t.depth[2]) / (sign * area);
                    let i = (y - y_start) * w + x;
                    if depth < zbuf[i] {
                        zbuf[i] = depth;
                        rows[i] = t.color;
                    }
                }
            }
        }
    });
    Image::from_pixels(w, h, pixels)
}

/// Per-mesh-kind local meshes, built once per render.
fn meshes(scene: &Scene) -> Vec<(MeshKind, LocalMesh)> {
    let b = MeshBuilder::new(scene.space, &scene.tiling);
    let mut kinds: Vec<MeshKind> = scene.props.iter().map(|p| p.mesh).collect();
    kinds.sort_by_key(|k| *k as u8);
    kinds.dedup();
    kinds.into_iter().map(|k| (k, b.build(k))).collect()
}

fn render_with(scene: &Scene, viewer: Eye, view: &ViewSpec) -> Result<(Image, RenderInfo)> {
    let meshes = meshes(scene);
    let mesh_of = |k: MeshKind| &meshes.iter().find(|(m, _)| *m == k).expect("built").1;
    // painter's order: nearest cell first (strict depth test keeps it on ties)
    let mut order: Vec<(f64, usize, CellView)> = scene
        .props
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let cv = viewer.cell(&scene.tiling.cells[p.cell].to_cell);
            (cv.center_depth(), i, cv)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let builder = Builder {
        view,
        fog_scale: scene.fog_scale,
        background: scene.background,
    };
    let per_prop: Vec<(Vec<ScreenTri>, usize, usize)> = order
        .par_iter()
        .map(|(_, i, cv)| {
            let prop = &scene.props[*i];
            let mesh = mesh_of(prop.mesh);
            let mut out = Vec::new();
            let mut ntri = 0;
            let mut nseg = 0;
            for (tri, shade) in mesh.triangles.iter().zip(&mesh.shades) {
                let vs: Option<Vec<ViewVertex>> = tri.iter().map(|p| cv.vertex(p)).collect();
                if let Some(vs) = vs {
                    let before = out.len();
                    builder.push_poly(&mut out, &vs, prop.color, *shade, 0.0);
                    ntri += (out.len() > before) as usize;
                }
            }
            for seg in &mesh.segments {
                if let (Some(a), Some(b)) = (cv.vertex(&seg[0]), cv.vertex(&seg[1])) {
                    let before = out.len();
                    builder.push_segment(&mut out, a, b, prop.color);
                    nseg += (out.len() > before) as usize;
                }
            }
            (out, ntri, nseg)
        })
        .collect();
    let mut info = RenderInfo {
        truncated: scene.is_truncated(),
        ..Default::default()
    };
    let mut tris = Vec::new();
    for (t, a, b) in per_prop {
        tris.extend(t);
        info.triangles += a;
        info.segments += b;
    }
    Ok((rasterize(view, &tris, scene.background), info))
}

fn check_camera(scene: &Scene, camera: &CameraFrame) -> Result<()> {
    if camera.space() != scene.space {
        return precondition(format!("camera is in {} but the scene is {}", camera.space(), scene.space));
    }
    if !camera.frame_matrix().is_finite() {
        return precondition("camera frame is not finite");
    }
    Ok(())
}

/// The camera relative to the scene's unplaced tiling, reduced to the
/// fundamental cell for portal scenes.
fn view_camera(scene: &Scene, camera: &CameraFrame) -> Result<CameraFrame> {
    let cam = match &scene.placement {
        None => *camera,
        Some(p) => camera.moved_by(&p.inverse())?,
    };
    Ok(if scene.portal { reduce_camera(scene, &cam) } else { cam })
}

/// Renders the scene from `camera`.
pub fn render_frame(scene: &Scene, camera: &CameraFrame, view: &ViewSpec) -> Result<(Image, RenderInfo)> {
    check_camera(scene, camera)?;
    let cam = view_camera(scene, camera)?;
    render_with(scene, Eye { viewer: viewer_for(&cam), model_offset: None }, view)
}

/// Left and right eye images.
///
/// `InSpace` renders each eye from its own hyperbolic position. `ModelSpace`
/// lays the scene out once in the center camera's normal coordinates (the
/// Klein picture stretched radially so model distance equals true distance)
/// and views that Euclidean copy from two eyes offset by `±ipd/2`.
pub fn render_stereo(
    scene: &Scene,
    camera: &CameraFrame,
    eye: &EyeConfig,
    mode: StereoMode,
    view: &ViewSpec,
) -> Result<(Image, Image)> {
    check_camera(scene, camera)?;
    match mode {
        StereoMode::InSpace => {
            let (l, r) = eye_frames(camera, eye);
            Ok((render_frame(scene, &l, view)?.0, render_frame(scene, &r, view)?.0))
        }
        StereoMode::ModelSpace => {
            let viewer = viewer_for(&view_camera(scene, camera)?);
            let half = eye.half_baseline();
            let at = |offset| Eye { viewer, model_offset: Some(offset) };
            let left = render_with(scene, at(-half), view)?.0;
            let right = render_with(scene, at(half), view)?.0;
            Ok((left, right))
        }
    }
}

/// Mean column of pixels differing from the background, if any.
pub fn mean_column_of(img: &Image, color_test: impl Fn(Rgb) -> bool) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if color_test(img.get(x, y)) {
                sum += x as f64 + 0.5;
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}
