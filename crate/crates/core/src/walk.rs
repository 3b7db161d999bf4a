//! Camera frames and movement scripts in ℍ³, ℍ²×𝔼 and 𝔼³.
//!
//! A frame is stored as the motion carrying the reference frame at the
//! origin onto it; commands act in the body frame (`g ← g·step`), so a
//! translation moves along the named axis and parallel-transports the frame.
//!
//! Body axes are `(right, up, forward)`. Rotations follow the right-hand
//! rule about the physical axis: positive yaw turns left, positive pitch
//! looks up, positive roll tips the up axis towards the right.
//!
//! Ambient coordinates used by [`CameraFrame::frame_matrix`]: ℍ³ uses the
//! hyperboloid; ℍ²×𝔼 uses `(x₁, x₂, z, x₄)` with `(x₁, x₂, x₄)` on the ℍ²
//! hyperboloid (right ↦ `x₁`, forward ↦ `x₂`, up ↦ `z`); 𝔼³ uses affine
//! `(x, y, z, 1)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::isometry::{Classification, Isometry};
use crate::linalg::{euclidean_orthonormalize, MVector, Matrix};
use crate::product::ProductIsometry;
use crate::space::{axis_rotation, EuclideanMotion, Rotation3, Space};

type Mat4 = Matrix<f64, 4>;

/// Closure tolerance on position distance and frame entries.
pub const CLOSE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Right,
    Up,
    Forward,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::Right => 0,
            Axis::Up => 1,
            Axis::Forward => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turn {
    Yaw,
    Pitch,
    Roll,
}

impl Turn {
    /// Body axis the turn is about.
    pub fn axis(self) -> Axis {
        match self {
            Turn::Yaw => Axis::Up,
            Turn::Pitch => Axis::Right,
            Turn::Roll => Axis::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Command {
    Translate { axis: Axis, length: f64 },
    Rotate { turn: Turn, angle: f64 },
}

impl Command {
    pub fn translate(axis: Axis, length: f64) -> Self {
        Command::Translate { axis, length }
    }

    pub fn rotate(turn: Turn, angle: f64) -> Self {
        Command::Rotate { turn, angle }
    }

    pub fn inverse(&self) -> Self {
        match *self {
            Command::Translate { axis, length } => Command::Translate { axis, length: -length },
            Command::Rotate { turn, angle } => Command::Rotate { turn, angle: -angle },
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Command::Translate { length, .. } => length.is_finite(),
            Command::Rotate { angle, .. } => angle.is_finite(),
        }
    }

    /// Body-frame rotation matrix on `(right, up, forward)`.
    fn body_rotation(turn: Turn, angle: f64) -> Rotation3<f64> {
        // the body basis is left-handed, hence the sign
        axis_rotation(turn.axis().index(), -angle)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Translate { axis, length } => {
                let name = match axis {
                    Axis::Right => "right",
                    Axis::Up => "up",
                    Axis::Forward => "forward",
                };
                write!(f, "T {name} {length}")
            }
            Command::Rotate { turn, angle } => {
                let name = match turn {
                    Turn::Yaw => "yaw",
                    Turn::Pitch => "pitch",
                    Turn::Roll => "roll",
                };
                write!(f, "R {name} {angle}")
            }
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    /// `T <axis> <length>` or `R <turn> <radians>`. `left`, `down` and
    /// `backward` are negated `right`, `up` and `forward`.
    fn from_str(line: &str) -> Result<Self> {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("expected 3 fields, got '{line}'")));
        }
        let value: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad number '{}'", parts[2])))?;
        if !value.is_finite() {
            return Err(Error::Parse(format!("non-finite value '{}'", parts[2])));
        }
        let name = parts[1].to_ascii_lowercase();
        match parts[0].to_ascii_lowercase().as_str() {
            "t" | "translate" | "move" => {
                let (axis, sign) = match name.as_str() {
                    "right" => (Axis::Right, 1.0),
                    "left" => (Axis::Right, -1.0),
                    "up" => (Axis::Up, 1.0),
                    "down" => (Axis::Up, -1.0),
                    "forward" => (Axis::Forward, 1.0),
                    "backward" | "back" => (Axis::Forward, -1.0),
                    other => return Err(Error::Parse(format!("unknown axis '{other}'"))),
                };
                Ok(Command::translate(axis, sign * value))
            }
            "r" | "rotate" | "turn" => {
                let turn = match name.as_str() {
                    "yaw" => Turn::Yaw,
                    "pitch" => Turn::Pitch,
                    "roll" => Turn::Roll,
                    other => return Err(Error::Parse(format!("unknown rotation '{other}'"))),
                };
                Ok(Command::rotate(turn, value))
            }
            other => Err(Error::Parse(format!("unknown command '{other}'"))),
        }
    }
}

/// Parses a script: one command per line, `#` starts a comment.
pub fn parse_script(text: &str) -> Result<Vec<Command>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cmd = line
            .parse::<Command>()
            .map_err(|e| Error::Parse(format!("line {}: {}", i + 1, e.message())))?;
        out.push(cmd);
    }
    Ok(out)
}

/// The script that undoes `script`: reversed, each command inverted.
pub fn inverse_script(script: &[Command]) -> Vec<Command> {
    script.iter().rev().map(Command::inverse).collect()
}

/// Right, up, left, down with the given length.
pub fn ruld(length: f64) -> Vec<Command> {
    vec![
        Command::translate(Axis::Right, length),
        Command::translate(Axis::Up, length),
        Command::translate(Axis::Right, -length),
        Command::translate(Axis::Up, -length),
    ]
}

/// Forward, left, backward, right: a loop in the horizontal plane.
pub fn horizontal_loop(length: f64) -> Vec<Command> {
    vec![
        Command::translate(Axis::Forward, length),
        Command::translate(Axis::Right, -length),
        Command::translate(Axis::Forward, -length),
        Command::translate(Axis::Right, length),
    ]
}

/// Position and orientation of the viewer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CameraFrame {
    /// Columns: right, up, forward, position.
    H3(Isometry<f64, 4>),
    H2E {
        motion: ProductIsometry<f64>,
        /// Body axes in reference `(right, up, forward)` coordinates at the origin.
        orientation: Rotation3<f64>,
    },
    Euclidean(EuclideanMotion<f64>),
}

impl CameraFrame {
    pub fn identity(space: Space) -> Self {
        match space {
            Space::H3 => CameraFrame::H3(Isometry::identity()),
            Space::H2E => CameraFrame::H2E {
                motion: ProductIsometry::identity(),
                orientation: Rotation3::identity(),
            },
            Space::Euclidean => CameraFrame::Euclidean(EuclideanMotion::identity()),
        }
    }

    /// Frame at the end of the geodesic from the origin with initial
    /// velocity `position` (reference `(right, up, forward)` coordinates;
    /// in ℍ²×𝔼 the up component is the height), then turned by `yaw` and
    /// `pitch`.
    pub fn from_pose(space: Space, position: [f64; 3], yaw: f64, pitch: f64) -> Result<Self> {
        if position.iter().chain([&yaw, &pitch]).any(|v| !v.is_finite()) {
            return precondition("camera pose must be finite");
        }
        let [x, y, z] = position;
        let placed = match space {
            Space::H3 => {
                let len = (x * x + y * y + z * z).sqrt();
                if len == 0.0 {
                    CameraFrame::identity(space)
                } else {
                    CameraFrame::H3(Isometry::boost(&[x / len, y / len, z / len, 0.0], len))
                }
            }
            Space::H2E => {
                let len = (x * x + z * z).sqrt();
                let h_part = if len == 0.0 {
                    Isometry::identity()
                } else {
                    Isometry::<f64, 3>::boost(&[x / len, z / len, 0.0], len)
                };
                CameraFrame::H2E {
                    motion: ProductIsometry {
                        h_part,
                        z_shift: y,
                        z_flip: false,
                    },
                    orientation: Rotation3::identity(),
                }
            }
            Space::Euclidean => CameraFrame::Euclidean(EuclideanMotion::translation(position)),
        };
        Ok(placed
            .apply(&Command::rotate(Turn::Yaw, yaw))
            .apply(&Command::rotate(Turn::Pitch, pitch)))
    }

    /// Parses `"x,y,z,yaw,pitch"` (angles in radians) into [`Self::from_pose`].
    pub fn parse_pose(space: Space, text: &str) -> Result<Self> {
        let parts: Vec<f64> = text
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("camera '{text}': {e}")))?;
        let [x, y, z, yaw, pitch] = parts[..] else {
            return Err(Error::Parse(format!("camera '{text}' needs five numbers x,y,z,yaw,pitch")));
        };
        Self::from_pose(space, [x, y, z], yaw, pitch)
    }

    pub fn space(&self) -> Space {
        match self {
            CameraFrame::H3(_) => Space::H3,
            CameraFrame::H2E { .. } => Space::H2E,
            CameraFrame::Euclidean(_) => Space::Euclidean,
        }
    }

    /// Applies one body-frame command and renormalizes on drift.
    pub fn apply(&self, cmd: &Command) -> Self {
        match (self, *cmd) {
            (CameraFrame::H3(g), Command::Translate { axis, length }) => {
                let mut dir = [0.0; 4];
                dir[axis.index()] = 1.0;
                CameraFrame::H3(g.compose(&Isometry::boost(&dir, length)).renormalized_if_drifted())
            }
            (CameraFrame::H3(g), Command::Rotate { turn, angle }) => {
                let step = Isometry::from_matrix_unchecked(embed_rotation(&Command::body_rotation(turn, angle)));
                CameraFrame::H3(g.compose(&step).renormalized_if_drifted())
            }
            (CameraFrame::H2E { motion, orientation }, Command::Translate { axis, length }) => {
                let d = orientation.col(axis.index());
                // horizontal part along (right, forward) = (x₁, x₂)
                let horizontal = (d[0] * d[0] + d[2] * d[2]).sqrt();
                let h_part = Isometry::<f64, 3>::boost(&[d[0], d[2], 0.0], length * horizontal);
                let step = ProductIsometry {
                    h_part,
                    z_shift: length * d[1],
                    z_flip: false,
                };
                CameraFrame::H2E {
                    motion: motion.compose(&step).renormalized_if_drifted(),
                    orientation: *orientation,
                }
            }
            (CameraFrame::H2E { motion, orientation }, Command::Rotate { turn, angle }) => CameraFrame::H2E {
                motion: *motion,
                orientation: renormalize_rotation(&(*orientation * Command::body_rotation(turn, angle))),
            },
            (CameraFrame::Euclidean(m), Command::Translate { axis, length }) => {
                let mut t = [0.0; 3];
                t[axis.index()] = length;
                CameraFrame::Euclidean(m.compose(&EuclideanMotion::translation(t)))
            }
            (CameraFrame::Euclidean(m), Command::Rotate { turn, angle }) => {
                let step = EuclideanMotion::from_parts(&Command::body_rotation(turn, angle), [0.0; 3]);
                let next = m.compose(&step);
                let next = if next.invariant_error() > 1e-9 { next.renormalized() } else { next };
                CameraFrame::Euclidean(next)
            }
        }
    }

    pub fn apply_all(&self, script: &[Command]) -> Self {
        script.iter().fold(*self, |f, c| f.apply(c))
    }

    /// Columns right, up, forward, position in ambient coordinates.
    pub fn frame_matrix(&self) -> Mat4 {
        match self {
            CameraFrame::H3(g) => *g.matrix(),
            CameraFrame::Euclidean(m) => *m.matrix(),
            CameraFrame::H2E { motion, orientation } => {
                let h = motion.embedded_h_matrix();
                let mut out = Mat4::zero();
                for a in 0..3 {
                    let d = orientation.col(a);
                    // reference axes at the origin: right → x₁, up → z, forward → x₂
                    let tangent = MVector([d[0], d[2], d[1], 0.0]);
                    out.set_col(a, h.mul_vec(&tangent));
                }
                let mut pos = h.col(3);
                pos[2] = motion.z_shift;
                out.set_col(3, pos);
                out
            }
        }
    }

    pub fn position(&self) -> [f64; 4] {
        self.frame_matrix().col(3).0
    }

    /// Distance between the two frame positions in the space's metric.
    pub fn position_distance(&self, other: &Self) -> Result<f64> {
        match (self, other) {
            (CameraFrame::H3(a), CameraFrame::H3(b)) => {
                let o = crate::hyperboloid::MPoint::origin();
                crate::hyperboloid::distance(&a.apply_point(&o), &b.apply_point(&o))
            }
            (CameraFrame::H2E { motion: a, .. }, CameraFrame::H2E { motion: b, .. }) => {
                let o = crate::product::ProductPoint::origin();
                crate::product::product_distance(&a.apply(&o), &b.apply(&o))
            }
            (CameraFrame::Euclidean(a), CameraFrame::Euclidean(b)) => {
                let (p, q) = (a.translation_part(), b.translation_part());
                Ok((0..3).map(|i| (p[i] - q[i]).powi(2)).sum::<f64>().sqrt())
            }
            _ => precondition("frames live in different spaces"),
        }
    }

    /// Max-abs difference of the frame matrices.
    pub fn frame_difference(&self, other: &Self) -> f64 {
        self.frame_matrix().max_abs_diff(&other.frame_matrix())
    }

    /// Whether position and frame agree within `tol`.
    pub fn coincides(&self, other: &Self, tol: f64) -> bool {
        self.position_distance(other).map(|d| d <= tol).unwrap_or(false) && self.frame_difference(other) <= tol
    }

    /// Deviation of the three axes from orthonormality in the space's
    /// metric, and (curved spaces) of the position from the hyperboloid.
    pub fn orthonormality_error(&self) -> f64 {
        let f = self.frame_matrix();
        let dot = |u: &MVector<f64, 4>, v: &MVector<f64, 4>| match self {
            CameraFrame::Euclidean(_) => u.edot(v),
            _ => u.mdot(v),
        };
        let mut err: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 1.0 } else { 0.0 };
                err = err.max((dot(&f.col(a), &f.col(b)) - want).abs());
            }
        }
        // the height slot of an ℍ²×𝔼 position is not a hyperboloid coordinate
        let mut p = f.col(3);
        match self {
            CameraFrame::Euclidean(_) => return err,
            CameraFrame::H2E { .. } => p[2] = 0.0,
            CameraFrame::H3(_) => {}
        }
        err = err.max((p.mdot(&p) + 1.0).abs());
        for a in 0..3 {
            err = err.max(f.col(a).mdot(&p).abs());
        }
        err
    }

    /// Orientation of this frame after carrying it back to `anchor`'s
    /// position along the connecting geodesic, in `anchor`'s body axes.
    pub fn relative_orientation(&self, anchor: &Self) -> Result<Rotation3<f64>> {
        match (self, anchor) {
            (CameraFrame::H3(c), CameraFrame::H3(a)) => {
                let o = crate::hyperboloid::MPoint::origin();
                let back = Isometry::translation_along(&c.apply_point(&o), &a.apply_point(&o));
                let m = a.inverse().compose(&back).compose(c);
                Ok(Matrix::from_cols([0, 1, 2].map(|j| [0, 1, 2].map(|i| m.matrix().get(i, j)))))
            }
            (CameraFrame::Euclidean(c), CameraFrame::Euclidean(a)) => Ok(a.rotation().transpose() * c.rotation()),
            (
                CameraFrame::H2E {
                    motion: mc,
                    orientation: rc,
                },
                CameraFrame::H2E {
                    motion: ma,
                    orientation: ra,
                },
            ) => {
                let o = crate::hyperboloid::MPoint::origin();
                let back = Isometry::translation_along(&mc.h_part.apply_point(&o), &ma.h_part.apply_point(&o));
                let m = ma.h_part.inverse().compose(&back).compose(&mc.h_part);
                let h = m.matrix();
                // (x₁, x₂) rotation as a turn about the up axis
                let mut turn = Rotation3::identity();
                turn.set(0, 0, h.get(0, 0));
                turn.set(0, 2, h.get(0, 1));
                turn.set(2, 0, h.get(1, 0));
                turn.set(2, 2, h.get(1, 1));
                Ok(ra.transpose() * turn * *rc)
            }
            _ => precondition("frames live in different spaces"),
        }
    }

    /// This frame carried by the world isometry `g`.
    pub fn moved_by(&self, g: &NetIsometry) -> Result<Self> {
        match (self, g) {
            (CameraFrame::H3(a), NetIsometry::H3(g)) => Ok(CameraFrame::H3(g.compose(a))),
            (CameraFrame::Euclidean(a), NetIsometry::Euclidean(g)) => Ok(CameraFrame::Euclidean(g.compose(a))),
            (CameraFrame::H2E { motion, orientation }, NetIsometry::H2E(g)) => Ok(CameraFrame::H2E {
                motion: g.compose(motion),
                orientation: *orientation,
            }),
            _ => precondition("isometry and frame live in different spaces"),
        }
    }

    /// The isometry carrying this frame onto `end`.
    pub fn motion_to(&self, end: &Self) -> Result<NetIsometry> {
        match (self, end) {
            (CameraFrame::H3(a), CameraFrame::H3(b)) => Ok(NetIsometry::H3(b.compose(&a.inverse()))),
            (CameraFrame::Euclidean(a), CameraFrame::Euclidean(b)) => {
                Ok(NetIsometry::Euclidean(b.compose(&a.inverse())))
            }
            (
                CameraFrame::H2E {
                    motion: ma,
                    orientation: ra,
                },
                CameraFrame::H2E {
                    motion: mb,
                    orientation: rb,
                },
            ) => {
                let delta = *rb * ra.transpose();
                let turn = ProductIsometry::horizontal(horizontal_rotation(&delta));
                Ok(NetIsometry::H2E(mb.compose(&turn).compose(&ma.inverse())))
            }
            _ => precondition("frames live in different spaces"),
        }
    }
}

/// Best rotation about the up axis approximating `r`, as an ℍ² rotation at
/// the origin acting on `(x₁, x₂) = (right, forward)`.
fn horizontal_rotation(r: &Rotation3<f64>) -> Isometry<f64, 3> {
    let s = r.get(0, 2) - r.get(2, 0);
    let c = r.get(0, 0) + r.get(2, 2);
    let phi = s.atan2(c);
    let mut m = Matrix::<f64, 3>::identity();
    m.set(0, 0, phi.cos());
    m.set(0, 1, phi.sin());
    m.set(1, 0, -phi.sin());
    m.set(1, 1, phi.cos());
    Isometry::from_matrix_unchecked(m)
}

fn embed_rotation(r: &Rotation3<f64>) -> Mat4 {
    let mut m = Mat4::identity();
    for c in 0..3 {
        for row in 0..3 {
            m.set(row, c, r.get(row, c));
        }
    }
    m
}

fn renormalize_rotation(r: &Rotation3<f64>) -> Rotation3<f64> {
    if (r.transpose() * *r).max_abs_diff(&Rotation3::identity()) > 1e-9 {
        euclidean_orthonormalize(r)
    } else {
        *r
    }
}

/// Net motion of a walk, in the isometry group of its space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetIsometry {
    H3(Isometry<f64, 4>),
    H2E(ProductIsometry<f64>),
    Euclidean(EuclideanMotion<f64>),
}

impl NetIsometry {
    pub fn classify(&self) -> Classification<f64> {
        self.classify_with_tol(1e-9)
    }

    pub fn classify_with_tol(&self, tol: f64) -> Classification<f64> {
        match self {
            NetIsometry::H3(g) => g.classify_with_tol(tol),
            NetIsometry::H2E(g) => g.classify_with_tol(tol),
            NetIsometry::Euclidean(g) => g.classify_with_tol(tol),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            NetIsometry::H3(g) => NetIsometry::H3(g.inverse()),
            NetIsometry::H2E(g) => NetIsometry::H2E(g.inverse()),
            NetIsometry::Euclidean(g) => NetIsometry::Euclidean(g.inverse()),
        }
    }

    /// Wraps a tiling symmetry (4×4 as stored by the tiling) for `space`.
    pub fn from_tiling_matrix(space: Space, m: &Mat4) -> Self {
        match space {
            Space::H3 => NetIsometry::H3(Isometry::from_matrix_unchecked(*m)),
            Space::Euclidean => NetIsometry::Euclidean(EuclideanMotion::from_matrix_unchecked(*m)),
            Space::H2E => {
                let mut h = Matrix::<f64, 3>::identity();
                for (ci, c) in [0usize, 1, 3].into_iter().enumerate() {
                    for (ri, r) in [0usize, 1, 3].into_iter().enumerate() {
                        h.set(ri, ci, m.get(r, c));
                    }
                }
                NetIsometry::H2E(ProductIsometry::horizontal(Isometry::from_matrix_unchecked(h)))
            }
        }
    }

    /// 4×4 matrix: Lorentz for ℍ³, embedded ℍ² part for ℍ²×𝔼, affine for 𝔼³.
    pub fn matrix(&self) -> Mat4 {
        match self {
            NetIsometry::H3(g) => *g.matrix(),
            NetIsometry::H2E(g) => g.embedded_h_matrix(),
            NetIsometry::Euclidean(g) => *g.matrix(),
        }
    }
}

/// Outcome of a script or square walk.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkReport {
    pub space: Space,
    pub net_isometry: NetIsometry,
    pub classification: Classification<f64>,
    /// Position back at the start within [`CLOSE_TOL`].
    pub closed: bool,
    pub moves_to_close: Option<usize>,
    pub moves: usize,
    /// Endpoint of the same commands replayed on the physical grid, in
    /// `(right, forward)` squares.
    pub physical_endpoint: [i64; 2],
    /// Grid moves between the start square and the endpoint square.
    pub physical_squares_away: u64,
    pub position_error: f64,
    pub frame_error: f64,
    pub final_frame: CameraFrame,
}

impl WalkReport {
    pub fn to_json(&self) -> serde_json::Value {
        let c = &self.classification;
        serde_json::json!({
            "space": self.space,
            "classification": c.name(),
            "rotationAngle": c.rotation_angle(),
            "translationLength": match c { Classification::Translation { length } => *length, _ => 0.0 },
            "closed": self.closed,
            "movesToClose": self.moves_to_close,
            "moves": self.moves,
            "physicalEndpoint": self.physical_endpoint,
            "physicalSquaresAway": self.physical_squares_away,
            "positionError": self.position_error,
            "frameError": self.frame_error,
            "netIsometry": self.net_isometry.matrix().to_col_major(),
        })
    }
}

/// Replays commands in the flat room; translation lengths are in squares.
fn grid_endpoint(script: &[Command], square: f64) -> ([i64; 2], u64) {
    let end = CameraFrame::identity(Space::Euclidean).apply_all(script);
    let p = end.position();
    let cell = [(p[0] / square).round() as i64, (p[2] / square).round() as i64];
    (cell, cell[0].unsigned_abs() + cell[1].unsigned_abs())
}

/// Runs `script` from `start` and reports the net motion.
pub fn run_script(start: &CameraFrame, script: &[Command]) -> Result<WalkReport> {
    if let Some(bad) = script.iter().find(|c| !c.is_finite()) {
        return precondition(format!("non-finite command {bad}"));
    }
    let end = start.apply_all(script);
    let net = start.motion_to(&end)?;
    let position_error = start.position_distance(&end)?;
    let closed = position_error <= CLOSE_TOL;
    let (physical_endpoint, physical_squares_away) = grid_endpoint(script, 1.0);
    Ok(WalkReport {
        space: start.space(),
        net_isometry: net,
        classification: net.classify(),
        closed,
        moves_to_close: closed.then_some(script.len()),
        moves: script.len(),
        physical_endpoint,
        physical_squares_away,
        position_error,
        frame_error: start.frame_difference(&end),
        final_frame: end,
    })
}

/// One square-walk move: turn, then step forward.
pub fn square_move(step: f64, turn: f64) -> [Command; 2] {
    [Command::rotate(Turn::Yaw, turn), Command::translate(Axis::Forward, step)]
}

/// Repeats turn-then-step until position and frame are back at the start
/// (within [`CLOSE_TOL`]) or `max_moves` is reached.
///
/// The physical endpoint replays the same turns on the room's grid with one
/// square per move.
pub fn square_walk(step: f64, turn: f64, space: Space, max_moves: usize) -> Result<WalkReport> {
    if !(step > 0.0) || !step.is_finite() {
        return precondition("step length must be positive");
    }
    if max_moves < 1 {
        return precondition("need at least one move");
    }
    if !turn.is_finite() {
        return precondition("turn must be finite");
    }
    let start = CameraFrame::identity(space);
    let mut frame = start;
    let mut moves = 0;
    let mut closed_at = None;
    while moves < max_moves {
        for c in square_move(step, turn) {
            frame = frame.apply(&c);
        }
        moves += 1;
        if frame.coincides(&start, CLOSE_TOL) {
            closed_at = Some(moves);
            break;
        }
    }
    let grid: Vec<Command> = (0..moves).flat_map(|_| square_move(1.0, turn)).collect();
    let (physical_endpoint, physical_squares_away) = grid_endpoint(&grid, 1.0);
    let net = start.motion_to(&frame)?;
    Ok(WalkReport {
        space,
        net_isometry: net,
        classification: net.classify(),
        closed: closed_at.is_some(),
        moves_to_close: closed_at,
        moves,
        physical_endpoint,
        physical_squares_away,
        position_error: start.position_distance(&frame)?,
        frame_error: start.frame_difference(&frame),
        final_frame: frame,
    })
}

/// Cosine of the rotation angle of one square-walk move in the hyperbolic
/// plane (above 1 once the move stops being a rotation).
fn one_move_cos(step: f64, turn: f64) -> f64 {
    let m = CameraFrame::identity(Space::H2E).apply_all(&square_move(step, turn));
    let CameraFrame::H2E { motion, orientation } = m else {
        unreachable!()
    };
    let net = motion.compose(&ProductIsometry::horizontal(horizontal_rotation(&orientation)));
    (net.h_part.matrix().trace() - 1.0) / 2.0
}

/// Step length for which `moves` square-walk moves close up in the
/// hyperbolic plane, by bisection on the one-move rotation angle.
pub fn solve_square_step(turn: f64, moves: usize, space: Space) -> Result<f64> {
    if space == Space::Euclidean {
        return precondition("in Euclidean space the closing count does not depend on the step");
    }
    if moves < 3 {
        return precondition("need at least 3 moves");
    }
    let target = (2.0 * PI / moves as f64).cos();
    let f = |l: f64| one_move_cos(l, turn) - target;
    let (mut lo, mut hi) = (0.0, 1.0);
    if f(lo) >= 0.0 {
        return precondition(format!(
            "a turn of {turn} rad already closes in at most {moves} moves at zero step"
        ));
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 100.0 {
            return precondition("no closing step length found");
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn script_parsing() {
        let s = parse_script("# loop\nT right 0.5\n\nR yaw 1.5707963 # quarter\nT left 0.5\nt BACK 2").unwrap();
        assert_eq!(
            s,
            vec![
                Command::translate(Axis::Right, 0.5),
                Command::rotate(Turn::Yaw, 1.5707963),
                Command::translate(Axis::Right, -0.5),
                Command::translate(Axis::Forward, -2.0),
            ]
        );
        assert!(parse_script("T sideways 1").is_err());
        assert!(parse_script("T right").is_err());
        assert!(parse_script("R yaw nan").is_err());
        let err = parse_script("T up 1\nX up 1").unwrap_err();
        assert!(err.to_string().contains("line 2"));
        let round: Vec<Command> = s.iter().map(|c| c.to_string().parse().unwrap()).collect();
        assert_eq!(round, s);
    }

    #[test]
    fn yaw_turns_left() {
        for space in [Space::H3, Space::H2E, Space::Euclidean] {
            let f = CameraFrame::identity(space).apply(&Command::rotate(Turn::Yaw, FRAC_PI_2));
            let m = f.frame_matrix();
            let left = CameraFrame::identity(space)
                .apply(&Command::translate(Axis::Right, -1.0))
                .frame_matrix()
                .col(3);
            let fwd = m.col(2);
            // forward now points to where "left" was: same sign on the right coordinate
            assert!(fwd[0] < -0.99 && left[0] < 0.0, "{space}");
        }
    }

    #[test]
    fn zero_translate_and_reversal() {
        for space in [Space::H3, Space::H2E, Space::Euclidean] {
            let start = CameraFrame::identity(space).apply(&Command::rotate(Turn::Pitch, 0.3));
            let same = start.apply(&Command::translate(Axis::Forward, 0.0));
            assert!(same.frame_difference(&start) < 1e-15);
            let back = start
                .apply(&Command::translate(Axis::Forward, 1.3))
                .apply(&Command::translate(Axis::Forward, -1.3));
            assert!(back.frame_difference(&start) < 1e-8, "{space}");
        }
    }

    #[test]
    fn poses_match_scripts() {
        for space in [Space::H3, Space::H2E, Space::Euclidean] {
            let a = CameraFrame::parse_pose(space, "0, 0.4, 1.2, 0.5, -0.2").unwrap();
            let b = CameraFrame::identity(space).apply_all(&[
                Command::translate(Axis::Up, 0.4),
                Command::translate(Axis::Forward, 1.2),
                Command::rotate(Turn::Yaw, 0.5),
                Command::rotate(Turn::Pitch, -0.2),
            ]);
            let a_pos = CameraFrame::parse_pose(space, "0,0,0,0,0").unwrap();
            assert!(a_pos.frame_difference(&CameraFrame::identity(space)) < 1e-15);
            if space != Space::H3 {
                assert!(a.frame_difference(&b) < 1e-12, "{space}");
            } else {
                assert!((a.position_distance(&CameraFrame::identity(space)).unwrap() - 0.4f64.hypot(1.2)).abs() < 1e-12);
            }
        }
        assert!(CameraFrame::parse_pose(Space::H3, "1,2,3").is_err());
        assert!(CameraFrame::parse_pose(Space::H3, "1,2,3,x,0").is_err());
    }

    #[test]
    fn relative_orientation_sees_only_turns_in_flat_loops() {
        use crate::space::rotation3_angle;
        for space in [Space::H2E, Space::Euclidean] {
            let start = CameraFrame::identity(space);
            let end = start.apply_all(&ruld(0.5));
            assert!(rotation3_angle(&end.relative_orientation(&start).unwrap()) < 1e-12);
            let turned = end.apply(&Command::rotate(Turn::Yaw, 0.3));
            let a = rotation3_angle(&turned.relative_orientation(&start).unwrap());
            assert!((a - 0.3).abs() < 1e-12, "{space}");
        }
        let start = CameraFrame::identity(Space::H3);
        let end = start.apply_all(&ruld(0.5));
        assert!(rotation3_angle(&end.relative_orientation(&start).unwrap()) > 1e-3);
    }

    #[test]
    fn empty_script_is_closed_identity() {
        for space in [Space::H3, Space::H2E, Space::Euclidean] {
            let r = run_script(&CameraFrame::identity(space), &[]).unwrap();
            assert!(r.closed);
            assert_eq!(r.classification, Classification::Identity);
            assert_eq!(r.physical_squares_away, 0);
        }
    }

    #[test]
    fn geometry_discrimination() {
        let h3 = run_script(&CameraFrame::identity(Space::H3), &ruld(0.5)).unwrap();
        assert!(matches!(h3.classification, Classification::Rotation { angle } if angle > 1e-3));
        let h2e = run_script(&CameraFrame::identity(Space::H2E), &ruld(0.5)).unwrap();
        assert_eq!(h2e.classification, Classification::Identity);
        assert!(h2e.closed);
        let flat = run_script(&CameraFrame::identity(Space::H2E), &horizontal_loop(0.5)).unwrap();
        assert!(matches!(flat.classification, Classification::Rotation { .. }));
        let e = run_script(&CameraFrame::identity(Space::Euclidean), &ruld(0.5)).unwrap();
        assert_eq!(e.classification, Classification::Identity);
    }

    #[test]
    fn euclidean_square_walk() {
        for step in [0.3, 1.0, 2.5] {
            let r = square_walk(step, FRAC_PI_2, Space::Euclidean, 20).unwrap();
            assert_eq!(r.moves_to_close, Some(4));
            assert_eq!(r.physical_endpoint, [0, 0]);
        }
    }

    #[test]
    fn hyperbolic_square_walk_closes_in_six() {
        let expected = 2.0 * 1.5f64.sqrt().acosh();
        let step = solve_square_step(FRAC_PI_2, 6, Space::H2E).unwrap();
        assert!((step - expected).abs() < 1e-9, "{step} vs {expected}");
        let r = square_walk(step, FRAC_PI_2, Space::H2E, 20).unwrap();
        assert_eq!(r.moves_to_close, Some(6));
        assert!(r.position_error < 1e-6);
        assert_eq!(r.physical_squares_away, 2);
        assert_eq!(r.physical_endpoint, [-1, -1]);
        let r3 = square_walk(step, FRAC_PI_2, Space::H3, 20).unwrap();
        assert_eq!(r3.moves_to_close, Some(6));
    }

    #[test]
    fn solve_step_rejects_flat_space() {
        assert!(solve_square_step(FRAC_PI_2, 6, Space::Euclidean).is_err());
        assert!(square_walk(-1.0, FRAC_PI_2, Space::H3, 4).is_err());
    }
}
