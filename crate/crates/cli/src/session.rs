//! One explorer session: the protocol state machine behind a connection.
//!
//! Messages are JSON text. `hello` picks the space and tiling and answers
//! with the first frame; each `input` is applied as body-frame commands and
//! answered with exactly one frame. The camera is kept inside the
//! fundamental cell: when it crosses a face, the camera, the loop anchor and
//! the reference floor are all carried back by the same tiling symmetry.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use hyperwalk::linalg::{MVector, Matrix};
use hyperwalk::perception::{vergence_angle, vergence_limit, EyeConfig};
use hyperwalk::render::scene::{check_tiling_for_space, default_schlafli};
use hyperwalk::render::StereoMode;
use hyperwalk::space::rotation3_angle;
use hyperwalk::tiling::{generate_cells, inverse_of, SchlafliSymbol, TilingGraph, TilingKind};
use hyperwalk::walk::{Axis, CameraFrame, Command, NetIsometry, Turn};
use hyperwalk::Space;
use serde::Deserialize;

type Mat4 = Matrix<f64, 4>;

/// Server-wide settings every session starts from.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub space: Space,
    pub depth: usize,
    /// Translation speed, model units per second.
    pub speed: f64,
    pub max_depth: usize,
    pub max_cells: usize,
    /// A loop counts as closed once the camera has been farther than
    /// `leave_radius` from the anchor and comes back within `close_radius`.
    pub close_radius: f64,
    pub leave_radius: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            space: Space::H3,
            depth: 4,
            speed: 1.0,
            max_depth: 6,
            max_cells: 20_000,
            close_radius: 0.15,
            leave_radius: 0.3,
        }
    }
}

/// Tilings shared read-only between sessions.
#[derive(Debug, Default)]
pub struct TilingCache {
    map: Mutex<HashMap<(Vec<u32>, usize), Arc<TilingGraph>>>,
}

impl TilingCache {
    pub fn get(&self, symbol: &SchlafliSymbol, depth: usize, max_cells: usize) -> hyperwalk::Result<Arc<TilingGraph>> {
        let key = (symbol.entries().to_vec(), depth);
        if let Some(t) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(t.clone());
        }
        let t = Arc::new(generate_cells(symbol, depth, max_cells)?);
        Ok(self.map.lock().expect("cache lock").entry(key).or_insert(t).clone())
    }
}

/// Everything sessions share.
#[derive(Debug, Default)]
pub struct Shared {
    pub config: SessionConfig,
    pub tilings: TilingCache,
}

impl Shared {
    pub fn new(config: SessionConfig) -> Arc<Self> {
        Arc::new(Self {
            config,
            tilings: TilingCache::default(),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ClientMessage {
    Hello(Hello),
    Input(Input),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Hello {
    space: Option<Space>,
    schlafli: Option<Vec<u32>>,
    depth: Option<i64>,
    ipd: Option<f64>,
    mode: Option<StereoMode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Input {
    #[serde(default)]
    dt: f64,
    #[serde(default, rename = "move")]
    movement: [f64; 3],
    #[serde(default)]
    yaw: f64,
    #[serde(default)]
    pitch: f64,
    #[serde(default)]
    reset: bool,
}

/// What to send back, and whether to close the connection afterwards.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Reply {
    pub messages: Vec<String>,
    pub close: bool,
}

impl Reply {
    fn one(m: String) -> Self {
        Self {
            messages: vec![m],
            close: false,
        }
    }
}

pub fn error_message(message: &str) -> String {
    serde_json::json!({"type": "error", "message": message}).to_string()
}

/// Reference floor, as a covector on ambient coordinates whose value at a
/// point gives its (signed) height above the floor plane.
#[derive(Debug, Clone, Copy)]
struct Floor {
    covector: [f64; 4],
    start_height: f64,
}

#[derive(Debug, Clone)]
pub struct SessionState {
    pub space: Space,
    pub tiling: Arc<TilingGraph>,
    pub camera: CameraFrame,
    pub eye: EyeConfig,
    pub mode: StereoMode,
    /// Frame where the current loop started.
    anchor: CameraFrame,
    /// The commanded turns since the anchor, composed as a flat frame.
    turns: CameraFrame,
    away: bool,
    floor: Floor,
}

#[derive(Debug)]
pub struct Session {
    shared: Arc<Shared>,
    state: Option<SessionState>,
}

impl Session {
    pub fn new(shared: Arc<Shared>) -> Self {
        Self { shared, state: None }
    }

    pub fn state(&self) -> Option<&SessionState> {
        self.state.as_ref()
    }

    /// Handles one text message.
    pub fn handle(&mut self, text: &str) -> Reply {
        let msg: ClientMessage = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => return Reply::one(error_message(&format!("malformed message: {e}"))),
        };
        match msg {
            ClientMessage::Hello(h) => {
                if self.state.is_some() {
                    return Reply {
                        messages: vec![error_message("hello already received")],
                        close: true,
                    };
                }
                match self.hello(h) {
                    Ok(state) => {
                        let frame = frame_message(&state, false);
                        self.state = Some(state);
                        Reply::one(frame)
                    }
                    Err(e) => Reply::one(error_message(&e)),
                }
            }
            ClientMessage::Input(input) => {
                let Some(state) = self.state.as_mut() else {
                    return Reply::one(error_message("send hello first"));
                };
                if let Err(e) = check_input(&input) {
                    return Reply::one(error_message(&e));
                }
                let closed = state.tick(&input, &self.shared.config);
                let frame = frame_message(state, closed);
                if closed {
                    state.restart_loop();
                }
                Reply::one(frame)
            }
        }
    }

    fn hello(&self, h: Hello) -> std::result::Result<SessionState, String> {
        let cfg = &self.shared.config;
        let space = h.space.unwrap_or(cfg.space);
        let symbol = match h.schlafli {
            Some(e) => SchlafliSymbol::new(e).map_err(|e| e.to_string())?,
            None => default_schlafli(space),
        };
        let depth = match h.depth {
            None => cfg.depth,
            Some(d) if d < 0 => return Err(format!("depth must be nonnegative, got {d}")),
            Some(d) if d as usize > cfg.max_depth => {
                return Err(format!("depth {d} exceeds the server limit {}", cfg.max_depth))
            }
            Some(d) => d as usize,
        };
        let eye = EyeConfig::new(h.ipd.unwrap_or(EyeConfig::default().ipd), 1.0).map_err(|e| e.to_string())?;
        let tiling = self
            .shared
            .tilings
            .get(&symbol, depth, cfg.max_cells)
            .map_err(|e| e.to_string())?;
        check_tiling_for_space(space, &tiling).map_err(|e| e.to_string())?;
        let camera = CameraFrame::identity(space);
        let floor = initial_floor(space, &tiling, &camera);
        Ok(SessionState {
            space,
            tiling,
            camera,
            eye,
            mode: h.mode.unwrap_or(StereoMode::InSpace),
            anchor: camera,
            turns: CameraFrame::identity(Space::Euclidean),
            away: false,
            floor,
        })
    }
}

fn check_input(i: &Input) -> std::result::Result<(), String> {
    if !(i.dt.is_finite() && i.dt >= 0.0) {
        return Err(format!("dt must be a nonnegative number of seconds, got {}", i.dt));
    }
    if i.dt > 10.0 {
        return Err(format!("dt {} s is longer than one tick may be", i.dt));
    }
    if i.movement.iter().any(|m| !(m.is_finite() && m.abs() <= 1.0)) {
        return Err("move components must lie in [-1, 1]".into());
    }
    if !(i.yaw.is_finite() && i.pitch.is_finite()) || i.yaw.abs() > PI || i.pitch.abs() > PI {
        return Err("yaw and pitch must be finite angles in [-pi, pi]".into());
    }
    Ok(())
}

impl SessionState {
    /// Applies one input; returns whether a loop closed on this tick.
    fn tick(&mut self, input: &Input, cfg: &SessionConfig) -> bool {
        if input.reset {
            self.camera = CameraFrame::identity(self.space);
            self.restart_loop();
            self.floor = initial_floor(self.space, &self.tiling, &self.camera);
        }
        let mut cmds = Vec::with_capacity(5);
        if input.yaw != 0.0 {
            cmds.push(Command::rotate(Turn::Yaw, input.yaw));
        }
        if input.pitch != 0.0 {
            cmds.push(Command::rotate(Turn::Pitch, input.pitch));
        }
        for (axis, m) in [Axis::Right, Axis::Up, Axis::Forward].into_iter().zip(input.movement) {
            let len = m * cfg.speed * input.dt;
            if len != 0.0 {
                cmds.push(Command::translate(axis, len));
            }
        }
        for c in &cmds {
            self.camera = self.camera.apply(c);
            if matches!(c, Command::Rotate { .. }) {
                self.turns = self.turns.apply(c);
            }
        }
        self.recenter();
        let d = self.camera.position_distance(&self.anchor).unwrap_or(f64::INFINITY);
        if d > cfg.leave_radius {
            self.away = true;
        }
        self.away && d < cfg.close_radius
    }

    /// The next loop starts where this one ended.
    fn restart_loop(&mut self) {
        self.anchor = self.camera;
        self.turns = CameraFrame::identity(Space::Euclidean);
        self.away = false;
    }

    /// Carries camera, anchor and floor back into the fundamental cell.
    fn recenter(&mut self) {
        let mut p = self.camera.position();
        if self.space == Space::H2E {
            p[2] = 0.0;
        }
        let (k, _) = self.tiling.reduce_point(&p);
        if k.max_abs_diff(&Mat4::identity()) < 1e-12 {
            return;
        }
        let g = NetIsometry::from_tiling_matrix(self.space, &inverse_of(self.tiling.kind, &k));
        let (Ok(cam), Ok(anchor)) = (self.camera.moved_by(&g), self.anchor.moved_by(&g)) else {
            return;
        };
        self.camera = cam;
        self.anchor = anchor;
        // covectors pull back through the inverse: c' = c·K
        if self.space != Space::H2E {
            let c = self.floor.covector;
            self.floor.covector = std::array::from_fn(|j| (0..4).map(|i| c[i] * k.get(i, j)).sum());
        }
    }

    /// Turn of the frame around the current loop, beyond the commanded turns.
    pub fn holonomy_deg(&self) -> f64 {
        let Ok(rel) = self.camera.relative_orientation(&self.anchor) else {
            return 0.0;
        };
        let CameraFrame::Euclidean(turns) = self.turns else {
            return 0.0;
        };
        rotation3_angle(&(rel * turns.rotation().transpose())).to_degrees()
    }

    /// Distance from the camera to the wall straight ahead in its cell.
    pub fn wall_distance(&self) -> f64 {
        let f = self.camera.frame_matrix();
        let (mut p, mut v) = (f.col(3).0, f.col(2).0);
        let t = &self.tiling;
        match self.space {
            Space::Euclidean => (0..t.face_count())
                .filter_map(|k| {
                    let n = t.face_planes[k];
                    let nv = n[0] * v[0] + n[1] * v[1] + n[2] * v[2];
                    let gap = n[3] - (n[0] * p[0] + n[1] * p[1] + n[2] * p[2]);
                    (nv > 1e-12).then(|| gap / nv)
                })
                .fold(f64::INFINITY, f64::min),
            Space::H3 | Space::H2E => {
                // in ℍ²×𝔼 follow the horizontal part, then lengthen by the slope
                let mut slope = 1.0;
                if self.space == Space::H2E {
                    p[2] = 0.0;
                    v[2] = 0.0;
                    let n2 = MVector(v).mdot(&MVector(v));
                    if n2 < 1e-12 {
                        return f64::INFINITY;
                    }
                    let n = n2.sqrt();
                    v = v.map(|x| x / n);
                    slope = 1.0 / n;
                }
                let (pp, vv) = (MVector(p), MVector(v));
                (0..t.face_count())
                    .filter_map(|k| {
                        let n = MVector(t.face_planes[k]);
                        let (a, b) = (n.mdot(&pp), n.mdot(&vv));
                        // cosh(s)·a + sinh(s)·b = 0 with a < 0
                        let r = -a / b;
                        (b > 0.0 && r < 1.0).then(|| r.atanh() * slope)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn vergence_deg(&self) -> f64 {
        let d = self.wall_distance();
        let v = if d.is_finite() && d > 0.0 {
            vergence_angle(&self.eye, d, self.space).unwrap_or(0.0)
        } else if self.space == Space::Euclidean {
            0.0
        } else {
            vergence_limit(&self.eye)
        };
        v.to_degrees()
    }

    /// How much farther the reference floor is than at the start.
    pub fn floor_drop_extra(&self) -> f64 {
        floor_height(self.space, &self.floor.covector, &self.camera) - self.floor.start_height
    }
}

fn floor_height(space: Space, c: &[f64; 4], camera: &CameraFrame) -> f64 {
    let x = camera.position();
    match space {
        Space::H2E => x[2],
        Space::Euclidean => c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + c[3] * x[3],
        // the covector is −⟨·, n⟩ for the outward floor normal n
        Space::H3 => (c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + c[3] * x[3]).asinh(),
    }
}

fn initial_floor(space: Space, tiling: &TilingGraph, camera: &CameraFrame) -> Floor {
    let covector = match (space, tiling.kind) {
        (Space::H2E, _) => [0.0, 0.0, 1.0, 0.0],
        (_, TilingKind::Euclidean) => {
            let n = tiling.face_planes[tiling.floor_face()];
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            [-n[0] / len, -n[1] / len, -n[2] / len, n[3] / len]
        }
        (_, TilingKind::Hyperbolic) => {
            let n = tiling.face_planes[tiling.floor_face()];
            [-n[0], -n[1], -n[2], n[3]]
        }
    };
    let start_height = floor_height(space, &covector, camera);
    Floor { covector, start_height }
}

/// Nine significant digits, as a JSON number.
pub fn push_number(out: &mut String, v: f64) {
    if v == 0.0 || !v.is_finite() {
        out.push('0');
        return;
    }
    let s = format!("{v:.8e}");
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let mant = if mant.contains('.') {
        mant.trim_end_matches('0').trim_end_matches('.')
    } else {
        mant
    };
    out.push_str(mant);
    if exp != "0" {
        out.push('e');
        out.push_str(exp);
    }
}

/// Camera-relative matrices of every cell, plus the HUD.
///
/// ℍ³: `camera⁻¹·toCell` (Lorentz). 𝔼³: the same with affine matrices.
/// ℍ²×𝔼: the horizontal part only, embedded in slots 0, 1, 3; the camera
/// height and body axes travel in `view`.
pub fn frame_message(state: &SessionState, loop_closed: bool) -> String {
    let (inv, view) = match &state.camera {
        CameraFrame::H3(g) => (g.matrix().minkowski_adjoint(), None),
        CameraFrame::Euclidean(g) => (*g.inverse().matrix(), None),
        CameraFrame::H2E { motion, orientation } => (
            motion.embedded_h_matrix().minkowski_adjoint(),
            Some((motion.z_shift, *orientation)),
        ),
    };
    let mut out = String::with_capacity(64 + state.tiling.cell_count() * 16 * 14);
    out.push_str("{\"type\":\"frame\",\"cells\":[");
    for (i, cell) in state.tiling.cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        let m = inv * cell.to_cell;
        for (k, v) in m.to_col_major().into_iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            push_number(&mut out, v);
        }
        out.push(']');
    }
    out.push_str("],\"hud\":{\"holonomyDeg\":");
    push_number(&mut out, state.holonomy_deg());
    out.push_str(",\"vergenceDeg\":");
    push_number(&mut out, state.vergence_deg());
    out.push_str(",\"floorDropExtra\":");
    push_number(&mut out, state.floor_drop_extra());
    let _ = write!(out, ",\"loopClosed\":{loop_closed},\"space\":\"{}\"}}", state.space.name());
    if let Some((z, r)) = view {
        out.push_str(",\"view\":{\"height\":");
        push_number(&mut out, z);
        out.push_str(",\"orientation\":[");
        for (k, v) in r.to_col_major().into_iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            push_number(&mut out, v);
        }
        out.push_str("]}");
    }
    out.push('}');
    out
}
