//! Regular tilings and honeycombs from Coxeter reflection groups.
//!
//! A Schläfli symbol `{p,q}` or `{p,q,r}` determines a Coxeter simplex whose
//! mirrors `R₀…R_n` satisfy `(RᵢRⱼ)^{mᵢⱼ} = 1`. The cell stabilizer is
//! generated by all mirrors but the last, and the last mirror's orbit under
//! it gives the face mirrors of the fundamental cell. Cells are enumerated
//! breadth first over those face reflections.
//!
//! All matrices are 4×4 column-major. Two-dimensional hyperbolic tilings act
//! on `(x₁, x₂, x₄)` and leave `x₃` fixed; Euclidean tilings are affine
//! (last row `0 0 0 1`), realized as the integer lattice with spacing 2.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::linalg::{symmetric_eigen, MVector, Matrix};

type Mat4 = Matrix<f64, 4>;

/// A Schläfli symbol with 2 (plane tiling) or 3 (honeycomb) entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct SchlafliSymbol {
    entries: Vec<u32>,
}

impl SchlafliSymbol {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if !(2..=3).contains(&entries.len()) {
            return precondition(format!(
                "Schläfli symbol needs 2 or 3 entries, got {}",
                entries.len()
            ));
        }
        if let Some(bad) = entries.iter().find(|&&e| e < 2) {
            return precondition(format!("Schläfli entries must be >= 2, got {bad}"));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Dimension of the tiled space.
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Number of Coxeter mirrors (`dim + 1`).
    pub fn mirror_count(&self) -> usize {
        self.entries.len() + 1
    }

    /// Coxeter exponent `mᵢⱼ` between mirrors `i` and `j`.
    pub fn coxeter_exponent(&self, i: usize, j: usize) -> u32 {
        if i == j {
            1
        } else if i.abs_diff(j) == 1 {
            self.entries[i.min(j)]
        } else {
            2
        }
    }
}

impl TryFrom<Vec<u32>> for SchlafliSymbol {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SchlafliSymbol> for Vec<u32> {
    fn from(s: SchlafliSymbol) -> Self {
        s.entries
    }
}

impl FromStr for SchlafliSymbol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .trim()
            .trim_start_matches('{')
            .trim_end_matches('}')
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad Schläfli entry '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

impl fmt::Display for SchlafliSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Symmetric Gram matrix of the Coxeter simplex, `Gᵢⱼ = −cos(π/mᵢⱼ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn determinant(&self) -> f64 {
        match self.n {
            3 => self.fixed::<3>().determinant(),
            4 => self.fixed::<4>().determinant(),
            _ => unreachable!("Gram matrices are 3x3 or 4x4"),
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.n {
            3 => symmetric_eigen(&self.fixed::<3>()).0.to_vec(),
            4 => symmetric_eigen(&self.fixed::<4>()).0.to_vec(),
            _ => unreachable!("Gram matrices are 3x3 or 4x4"),
        }
    }

    /// `(positive, zero, negative)` eigenvalue counts at tolerance `1e−9`.
    pub fn signature(&self) -> (usize, usize, usize) {
        let ev = self.eigenvalues();
        let pos = ev.iter().filter(|v| **v > 1e-9).count();
        let neg = ev.iter().filter(|v| **v < -1e-9).count();
        (pos, ev.len() - pos - neg, neg)
    }

    pub fn geometry(&self) -> GeometryClass {
        match self.signature() {
            (p, 0, 0) if p == self.n => GeometryClass::Spherical,
            (p, 1, 0) if p + 1 == self.n => GeometryClass::Euclidean,
            (p, 0, 1) if p + 1 == self.n => GeometryClass::Hyperbolic,
            _ => GeometryClass::Other,
        }
    }

    /// Whether the leading block (all mirrors but the last) is positive
    /// definite, i.e. the fundamental cell is a finite polytope.
    fn leading_block_definite(&self) -> bool {
        let k = self.n - 1;
        let sub = GramMatrix {
            n: k,
            entries: (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| self.get(i, j)).collect(),
        };
        let ev = match k {
            2 => {
                let (a, b, d) = (sub.get(0, 0), sub.get(0, 1), sub.get(1, 1));
                let tr = a + d;
                let det = a * d - b * b;
                let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
                vec![tr / 2.0 - disc]
            }
            3 => sub.eigenvalues(),
            _ => return false,
        };
        ev.iter().all(|v| *v > 1e-9)
    }

    fn fixed<const D: usize>(&self) -> Matrix<f64, D> {
        let mut m = Matrix::<f64, D>::zero();
        for i in 0..D {
            for j in 0..D {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryClass {
    Spherical,
    Euclidean,
    Hyperbolic,
    Other,
}

pub fn gram_matrix(s: &SchlafliSymbol) -> GramMatrix {
    let n = s.mirror_count();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = if i == j {
                1.0
            } else {
                -(std::f64::consts::PI / s.coxeter_exponent(i, j) as f64).cos()
            };
        }
    }
    // cos(π/2) is 6e-17, not 0
    for e in entries.iter_mut() {
        if e.abs() < 1e-15 {
            *e = 0.0;
        }
    }
    GramMatrix { n, entries }
}

/// Mirrors of a Coxeter simplex realized in the matching space.
#[derive(Debug, Clone, PartialEq)]
pub struct Mirrors {
    pub geometry: GeometryClass,
    /// Hyperbolic: Minkowski unit normals. Euclidean: unit normals in the
    /// spatial slots, with the mirror offset stored in the last slot
    /// (mirror is `n·x = offset`).
    pub normals: Vec<[f64; 4]>,
    pub reflections: Vec<Mat4>,
}

fn spatial_slots(dim: usize) -> &'static [usize] {
    if dim == 2 {
        &[0, 1]
    } else {
        &[0, 1, 2]
    }
}

/// Realizes the mirrors of a hyperbolic (signature `(n,1)`) or Euclidean
/// (degenerate, handled in an affine chart) Gram matrix.
///
/// Normals are built triangularly, so the vertex of the simplex fixed by all
/// but the last mirror is the origin `(0,0,0,1)`.
pub fn mirrors_from_gram(g: &GramMatrix) -> Result<Mirrors> {
    let geometry = g.geometry();
    let n = g.size();
    let dim = n - 1;
    let slots = spatial_slots(dim);
    match geometry {
        GeometryClass::Hyperbolic => {
            if !g.leading_block_definite() {
                return Err(Error::UnsupportedGeometry(
                    "hyperbolic simplex whose cell is not a finite polytope".into(),
                ));
            }
            // rows of a lower-triangular factor in the ordered slots
            // (spatial slots, then the time slot with sign −1)
            let mut coords = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..i {
                    let sign_j = if j == n - 1 { -1.0 } else { 1.0 };
                    let mut acc = g.get(i, j);
                    for k in 0..j {
                        let sign_k = if k == n - 1 { -1.0 } else { 1.0 };
                        acc -= sign_k * coords[i][k] * coords[j][k];
                    }
                    coords[i][j] = acc / (sign_j * coords[j][j]);
                }
                let rest: f64 = (0..i).map(|k| coords[i][k] * coords[i][k]).sum();
                let diag2 = if i == n - 1 { rest - 1.0 } else { 1.0 - rest };
                if diag2 <= 0.0 {
                    return Err(Error::UnsupportedGeometry(format!(
                        "cannot realize mirror {i} (diag^2 = {diag2})"
                    )));
                }
                coords[i][i] = diag2.sqrt();
            }
            let normals: Vec<[f64; 4]> = coords
                .iter()
                .map(|c| {
                    let mut v = [0.0; 4];
                    for (k, &slot) in slots.iter().enumerate() {
                        v[slot] = c[k];
                    }
                    v[3] = c[n - 1];
                    v
                })
                .collect();
            let reflections = normals.iter().map(minkowski_reflection).collect();
            Ok(Mirrors {
                geometry,
                normals,
                reflections,
            })
        }
        GeometryClass::Euclidean => {
            // first `dim` mirrors through the origin (Cholesky), the last one
            // a combination of them at offset 1
            let mut rows = vec![vec![0.0; dim]; n];
            for i in 0..dim {
                for j in 0..i {
                    let mut acc = g.get(i, j);
                    for k in 0..j {
                        acc -= rows[i][k] * rows[j][k];
                    }
                    rows[i][j] = acc / rows[j][j];
                }
                let rest: f64 = (0..i).map(|k| rows[i][k] * rows[i][k]).sum();
                if 1.0 - rest <= 0.0 {
                    return Err(Error::UnsupportedGeometry("leading block not definite".into()));
                }
                rows[i][i] = (1.0 - rest).sqrt();
            }
            // solve rows_last · rows_j = G_last,j for j < dim (lower triangular)
            for j in 0..dim {
                let mut acc = g.get(dim, j);
                for k in 0..j {
                    acc -= rows[dim][k] * rows[j][k];
                }
                rows[dim][j] = acc / rows[j][j];
            }
            let normals: Vec<[f64; 4]> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut v = [0.0; 4];
                    for (k, &slot) in slots.iter().enumerate() {
                        v[slot] = r[k];
                    }
                    v[3] = if i == dim { 1.0 } else { 0.0 };
                    v
                })
                .collect();
            let reflections = normals.iter().map(affine_reflection).collect();
            Ok(Mirrors {
                geometry,
                normals,
                reflections,
            })
        }
        GeometryClass::Spherical => Err(Error::UnsupportedGeometry(
            "spherical symbols describe polytopes, not tilings".into(),
        )),
        GeometryClass::Other => Err(Error::UnsupportedGeometry(
            "Gram matrix has neither hyperbolic nor Euclidean signature".into(),
        )),
    }
}

fn minkowski_reflection(n: &[f64; 4]) -> Mat4 {
    let nv = MVector(*n);
    let nn = nv.mdot(&nv);
    let mut m = Mat4::identity();
    for c in 0..4 {
        let x = MVector::<f64, 4>::basis(c);
        m.set_col(c, x - nv * (2.0 * x.mdot(&nv) / nn));
    }
    m
}

fn affine_reflection(n: &[f64; 4]) -> Mat4 {
    let mut m = Mat4::identity();
    for c in 0..3 {
        for r in 0..3 {
            let v = if r == c { 1.0 } else { 0.0 } - 2.0 * n[r] * n[c];
            m.set(r, c, v);
        }
    }
    for r in 0..3 {
        m.set(r, 3, 2.0 * n[3] * n[r]);
    }
    m
}

/// One cell: the isometry carrying the fundamental cell onto it, and the
/// face-generator word that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TilingCell {
    pub to_cell: Mat4,
    pub word: Vec<u8>,
}

/// How cell coordinates are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TilingKind {
    /// Lorentz matrices on the hyperboloid.
    Hyperbolic,
    /// Affine matrices on `(x, y, z, 1)`.
    Euclidean,
}

/// Combinatorics of the fundamental cell in its local chart (Klein
/// coordinates for hyperbolic tilings, plain coordinates for Euclidean).
#[derive(Debug, Clone, PartialEq)]
pub struct CellShape {
    /// May lie on or outside the unit sphere when vertices are ideal.
    pub vertices: Vec<[f64; 3]>,
    pub edges: Vec<(usize, usize)>,
    /// Vertex loops of the faces (2-D tilings: the polygon itself).
    pub faces: Vec<Vec<usize>>,
}

/// Result of a breadth-first cell enumeration.
#[derive(Debug, Clone)]
pub struct TilingGraph {
    pub schlafli: SchlafliSymbol,
    pub kind: TilingKind,
    pub cells: Vec<TilingCell>,
    /// `(cell, face) → neighbor cell`.
    pub adjacency: BTreeMap<(usize, usize), usize>,
    /// Number of cells at each word length (graph radius).
    pub shells: Vec<usize>,
    /// Set when `max_cells` stopped the enumeration early.
    pub truncated: bool,
    /// Face-pairing generators of the fundamental cell, indexed by face.
    pub face_generators: Vec<Mat4>,
    /// Outward face planes: Minkowski normals (hyperbolic) or
    /// `(n, offset)` with the plane `n·x = offset` (Euclidean).
    pub face_planes: Vec<[f64; 4]>,
    pub shape: CellShape,
}

impl TilingGraph {
    pub fn dim(&self) -> usize {
        self.schlafli.dim()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn face_count(&self) -> usize {
        self.face_generators.len()
    }

    /// Center of the fundamental cell in ambient coordinates.
    pub fn base_center(&self) -> [f64; 4] {
        [0.0, 0.0, 0.0, 1.0]
    }

    pub fn cell_center(&self, index: usize) -> [f64; 4] {
        self.cells[index].to_cell.mul_vec(&MVector(self.base_center())).0
    }

    /// Cumulative cell counts by graph radius.
    pub fn cumulative_counts(&self) -> Vec<usize> {
        self.shells
            .iter()
            .scan(0, |acc, s| {
                *acc += s;
                Some(*acc)
            })
            .collect()
    }

    /// Whether an ambient point lies outside face `f` of the fundamental cell.
    fn outside_face(&self, x: &MVector<f64, 4>, f: usize) -> bool {
        let n = &self.face_planes[f];
        match self.kind {
            TilingKind::Hyperbolic => MVector(*n).mdot(x) > 1e-12 * x[3].abs().max(1.0),
            TilingKind::Euclidean => n[0] * x[0] + n[1] * x[1] + n[2] * x[2] - n[3] > 1e-12,
        }
    }

    /// Index of the face whose outward normal points most downwards (the
    /// floor of a room standing in the cell).
    pub fn floor_face(&self) -> usize {
        let down = |k: usize| {
            let n = self.face_planes[k];
            n[1] / (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
        };
        (0..self.face_planes.len())
            .min_by(|&i, &j| down(i).total_cmp(&down(j)))
            .expect("cells have faces")
    }

    /// Moves an ambient point into the fundamental cell by face pairings.
    ///
    /// Returns `(K, x₀)` with `x = K·x₀` and `x₀` in the fundamental cell.
    pub fn reduce_point(&self, x: &[f64; 4]) -> (Mat4, [f64; 4]) {
        let mut p = MVector(*x);
        let mut k = Mat4::identity();
        'outer: for _ in 0..10_000 {
            for f in 0..self.face_count() {
                if self.outside_face(&p, f) {
                    let g = self.face_generators[f];
                    p = inverse_of(self.kind, &g).mul_vec(&p);
                    k = k * g;
                    continue 'outer;
                }
            }
            break;
        }
        (k, p.0)
    }

    /// The export record written by `tiling --export`.
    pub fn export(&self) -> TilingExport {
        TilingExport {
            schlafli: self.schlafli.entries().to_vec(),
            cell_count: self.cells.len(),
            cells: self
                .cells
                .iter()
                .map(|c| ExportCell {
                    word: c.word.iter().map(|&w| w as u32).collect(),
                    matrix: c.to_cell.to_col_major(),
                })
                .collect(),
            adjacency: self.adjacency.iter().map(|(&(c, f), &n)| [c, f, n]).collect(),
        }
    }
}

/// Inverse of a cell matrix of the given kind.
pub fn inverse_of(kind: TilingKind, m: &Mat4) -> Mat4 {
    match kind {
        TilingKind::Hyperbolic => m.minkowski_adjoint(),
        TilingKind::Euclidean => {
            let mut r = Matrix::<f64, 3>::zero();
            for c in 0..3 {
                for row in 0..3 {
                    r.set(row, c, m.get(row, c));
                }
            }
            let rt = r.transpose();
            let t = rt.mul_vec(&MVector([m.get(0, 3), m.get(1, 3), m.get(2, 3)]));
            let mut out = Mat4::identity();
            for c in 0..3 {
                for row in 0..3 {
                    out.set(row, c, rt.get(row, c));
                }
                out.set(c, 3, -t[c]);
            }
            out
        }
    }
}

/// JSON export of a tiling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TilingExport {
    pub schlafli: Vec<u32>,
    pub cell_count: usize,
    pub cells: Vec<ExportCell>,
    pub adjacency: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportCell {
    pub word: Vec<u32>,
    /// 16 reals, column-major.
    pub matrix: Vec<f64>,
}

/// Spatial hash over cell centers with a neighbor-bucket search, so that
/// rounding never splits one center across two keys.
struct CenterIndex {
    buckets: HashMap<[i64; 3], Vec<usize>>,
    centers: Vec<[f64; 4]>,
}

impl CenterIndex {
    const BUCKET: f64 = 0.5;

    fn new() -> Self {
        Self {
            buckets: HashMap::new(),
            centers: Vec::new(),
        }
    }

    fn key(c: &[f64; 4]) -> [i64; 3] {
        [0, 1, 2].map(|i| (c[i] / Self::BUCKET).floor() as i64)
    }

    fn find(&self, c: &[f64; 4]) -> Option<usize> {
        let k = Self::key(c);
        let tol = 1e-5 * c[3].abs().max(1.0);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &id in ids {
                            let o = &self.centers[id];
                            if (0..4).all(|i| (o[i] - c[i]).abs() < tol) {
                                return Some(id);
                            }
                        }
                    }
                }
            }
        }
        None
    }

    fn insert(&mut self, c: [f64; 4]) -> usize {
        let id = self.centers.len();
        self.buckets.entry(Self::key(&c)).or_default().push(id);
        self.centers.push(c);
        id
    }
}

/// The pieces of a tiling that do not depend on the enumeration depth.
struct Fundamental {
    kind: TilingKind,
    face_generators: Vec<Mat4>,
    face_planes: Vec<[f64; 4]>,
    shape: CellShape,
}

fn fundamental(s: &SchlafliSymbol) -> Result<Fundamental> {
    let g = gram_matrix(s);
    match g.geometry() {
        GeometryClass::Euclidean => euclidean_lattice(s),
        GeometryClass::Hyperbolic => hyperbolic_fundamental(&g),
        GeometryClass::Spherical => Err(Error::UnsupportedGeometry(format!(
            "{s} is spherical (a polytope, not a tiling)"
        ))),
        GeometryClass::Other => Err(Error::UnsupportedGeometry(format!("{s} has no model geometry"))),
    }
}

fn euclidean_lattice(s: &SchlafliSymbol) -> Result<Fundamental> {
    let dim = s.dim();
    let square = matches!(s.entries(), [4, 4] | [4, 3, 4]);
    if !square {
        return Err(Error::UnsupportedGeometry(format!(
            "Euclidean tiling {s}: only the square {{4,4}} and cubic {{4,3,4}} lattices are supported"
        )));
    }
    let mut face_generators = Vec::new();
    let mut face_planes = Vec::new();
    for axis in 0..dim {
        for sign in [1.0, -1.0] {
            let mut t = [0.0; 3];
            t[axis] = 2.0 * sign;
            let mut m = Mat4::identity();
            for (r, v) in t.iter().enumerate() {
                m.set(r, 3, *v);
            }
            face_generators.push(m);
            let mut plane = [0.0; 4];
            plane[axis] = sign;
            plane[3] = 1.0;
            face_planes.push(plane);
        }
    }
    let shape = box_shape(dim, 1.0);
    Ok(Fundamental {
        kind: TilingKind::Euclidean,
        face_generators,
        face_planes,
        shape,
    })
}

/// Square/cube `[−h, h]^dim` (z = 0 for squares).
fn box_shape(dim: usize, h: f64) -> CellShape {
    let mut vertices = Vec::new();
    let count = 1usize << dim;
    for bits in 0..count {
        let mut v = [0.0; 3];
        for (axis, item) in v.iter_mut().enumerate().take(dim) {
            *item = if bits & (1 << axis) != 0 { h } else { -h };
        }
        vertices.push(v);
    }
    let mut edges = Vec::new();
    for a in 0..count {
        for axis in 0..dim {
            let b = a | (1 << axis);
            if b != a {
                edges.push((a, b));
            }
        }
    }
    let faces = if dim == 2 {
        vec![vec![0, 1, 3, 2]]
    } else {
        let mut faces = Vec::new();
        for axis in 0..3 {
            for high in [true, false] {
                let mut loop_: Vec<usize> = (0..8).filter(|v| ((v >> axis) & 1 == 1) == high).collect();
                order_loop(&mut loop_, &vertices);
                faces.push(loop_);
            }
        }
        faces
    };
    CellShape { vertices, edges, faces }
}

/// Orders coplanar vertex indices by angle around their centroid.
fn order_loop(ids: &mut [usize], vertices: &[[f64; 3]]) {
    if ids.len() < 3 {
        return;
    }
    let n = ids.len() as f64;
    let mut c = [0.0; 3];
    for &i in ids.iter() {
        for k in 0..3 {
            c[k] += vertices[i][k] / n;
        }
    }
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let u = sub(vertices[ids[0]], c);
    let w = sub(vertices[ids[1]], c);
    let mut normal = crate::transport::cross3(&u, &w);
    if MVector(normal).enorm() < 1e-12 {
        normal = crate::transport::cross3(&u, &sub(vertices[ids[2]], c));
    }
    // in-plane axes
    let e1 = {
        let l = MVector(u).enorm();
        u.map(|x| x / l)
    };
    let e2 = {
        let v = crate::transport::cross3(&normal, &e1);
        let l = MVector(v).enorm();
        v.map(|x| x / l)
    };
    let angle = |i: usize| {
        let d = sub(vertices[i], c);
        let x = MVector(d).edot(&MVector(e1));
        let y = MVector(d).edot(&MVector(e2));
        y.atan2(x)
    };
    ids.sort_by(|&a, &b| angle(a).partial_cmp(&angle(b)).unwrap());
}

/// Elements of the finite group generated by `gens` (matrix dedup).
fn finite_group(gens: &[Mat4], limit: usize) -> Result<Vec<Mat4>> {
    let mut elems = vec![Mat4::identity()];
    let mut frontier = vec![Mat4::identity()];
    while let Some(g) = frontier.pop() {
        for r in gens {
            let h = g * *r;
            if !elems.iter().any(|e| e.max_abs_diff(&h) < 1e-9) {
                if elems.len() >= limit {
                    return Err(Error::UnsupportedGeometry("cell stabilizer is not finite".into()));
                }
                elems.push(h);
                frontier.push(h);
            }
        }
    }
    Ok(elems)
}

fn hyperbolic_fundamental(g: &GramMatrix) -> Result<Fundamental> {
    let mirrors = mirrors_from_gram(g)?;
    let n = mirrors.normals.len();
    let dim = n - 1;
    let stab = finite_group(&mirrors.reflections[..n - 1], 1000)?;

    // face normals: orbit of the last mirror
    let last = MVector(mirrors.normals[n - 1]);
    let mut normals: Vec<[f64; 4]> = Vec::new();
    for k in &stab {
        let v = k.mul_vec(&last).0;
        if !normals.iter().any(|o| (0..4).all(|i| (o[i] - v[i]).abs() < 1e-9)) {
            normals.push(v);
        }
    }
    // deterministic face order: dominant axis, then + before −
    let key = |v: &[f64; 4]| {
        let (axis, _) = (0..3).fold((0, -1.0), |acc, i| if v[i].abs() > acc.1 + 1e-9 { (i, v[i].abs()) } else { acc });
        let sign = if v[axis] > 0.0 { 0 } else { 1 };
        (axis, sign, (v[0] * 1e6) as i64, (v[1] * 1e6) as i64, (v[2] * 1e6) as i64)
    };
    normals.sort_by_key(key);
    let face_generators: Vec<Mat4> = normals.iter().map(minkowski_reflection).collect();

    // vertex of the simplex fixed by mirrors 1..n (it lies opposite mirror 0)
    let vertex = fixed_vertex(&mirrors.normals[1..], dim);
    let klein_vertex = [vertex[0] / vertex[3], vertex[1] / vertex[3], vertex[2] / vertex[3]];
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let index_of = |vs: &mut Vec<[f64; 3]>, v: [f64; 3]| -> usize {
        if let Some(i) = vs.iter().position(|o| (0..3).all(|k| (o[k] - v[k]).abs() < 1e-9)) {
            i
        } else {
            vs.push(v);
            vs.len() - 1
        }
    };
    let apply_klein = |m: &Mat4, y: &[f64; 3]| {
        let x = m.mul_vec(&MVector([y[0], y[1], y[2], 1.0]));
        [x[0] / x[3], x[1] / x[3], x[2] / x[3]]
    };
    let r0 = mirrors.reflections[0];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for k in &stab {
        let a = index_of(&mut vertices, apply_klein(k, &klein_vertex));
        let b = index_of(&mut vertices, apply_klein(&(*k * r0), &klein_vertex));
        let e = (a.min(b), a.max(b));
        if a != b && !edges.contains(&e) {
            edges.push(e);
        }
    }
    edges.sort();
    let faces = if dim == 2 {
        let mut all: Vec<usize> = (0..vertices.len()).collect();
        order_loop_2d(&mut all, &vertices);
        vec![all]
    } else {
        normals
            .iter()
            .map(|nv| {
                let ns = [nv[0], nv[1], nv[2]];
                let mut on: Vec<usize> = (0..vertices.len())
                    .filter(|&i| {
                        let y = vertices[i];
                        (ns[0] * y[0] + ns[1] * y[1] + ns[2] * y[2] - nv[3]).abs() < 1e-9
                    })
                    .collect();
                order_loop(&mut on, &vertices);
                on
            })
            .collect()
    };
    Ok(Fundamental {
        kind: TilingKind::Hyperbolic,
        face_generators,
        face_planes: normals,
        shape: CellShape { vertices, edges, faces },
    })
}

fn order_loop_2d(ids: &mut [usize], vertices: &[[f64; 3]]) {
    ids.sort_by(|&a, &b| {
        let ta = vertices[a][1].atan2(vertices[a][0]);
        let tb = vertices[b][1].atan2(vertices[b][0]);
        ta.partial_cmp(&tb).unwrap()
    });
}

/// Timelike-side vector Minkowski-orthogonal to the given normals.
fn fixed_vertex(normals: &[[f64; 4]], dim: usize) -> [f64; 4] {
    // rows Jn so that ⟨x, n⟩ = (Jn)·x
    let rows: Vec<[f64; 4]> = normals.iter().map(|n| [n[0], n[1], n[2], -n[3]]).collect();
    let mut x = [0.0; 4];
    if dim == 2 {
        // unknowns in slots (0, 1, 3): cross product of the two rows
        let a = [rows[0][0], rows[0][1], rows[0][3]];
        let b = [rows[1][0], rows[1][1], rows[1][3]];
        let c = crate::transport::cross3(&a, &b);
        x = [c[0], c[1], 0.0, c[2]];
    } else {
        // generalized cross product of three rows in ℝ⁴
        for (i, xi) in x.iter_mut().enumerate() {
            let cols: Vec<usize> = (0..4).filter(|&c| c != i).collect();
            let m = Matrix::<f64, 3>::from_cols([
                [rows[0][cols[0]], rows[1][cols[0]], rows[2][cols[0]]],
                [rows[0][cols[1]], rows[1][cols[1]], rows[2][cols[1]]],
                [rows[0][cols[2]], rows[1][cols[2]], rows[2][cols[2]]],
            ]);
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *xi = sign * m.determinant();
        }
    }
    if x[3] < 0.0 {
        x = x.map(|v| -v);
    }
    x
}

/// Breadth-first enumeration of cells up to `max_word_length` face
/// crossings, stopping early (and flagging `truncated`) at `max_cells`.
pub fn generate_cells(s: &SchlafliSymbol, max_word_length: usize, max_cells: usize) -> Result<TilingGraph> {
    if max_cells == 0 {
        return precondition("cell budget must be positive");
    }
    let fund = fundamental(s)?;
    let kind = fund.kind;
    let faces = fund.face_generators.len();
    let mut cells = vec![TilingCell {
        to_cell: Mat4::identity(),
        word: Vec::new(),
    }];
    let mut index = CenterIndex::new();
    index.insert([0.0, 0.0, 0.0, 1.0]);
    let mut adjacency = BTreeMap::new();
    let mut shells = vec![1usize];
    let mut truncated = false;
    let mut frontier: Vec<usize> = vec![0];

    let step = |m: &Mat4, f: usize| -> Mat4 {
        let next = *m * fund.face_generators[f];
        match kind {
            TilingKind::Hyperbolic => crate::linalg::minkowski_orthonormalize(&next),
            TilingKind::Euclidean => next,
        }
    };
    let center_of = |m: &Mat4| m.col(3).0;

    for _depth in 1..=max_word_length {
        let mut next_frontier = Vec::new();
        for &c in &frontier {
            for f in 0..faces {
                let m = step(&cells[c].to_cell, f);
                let center = center_of(&m);
                let id = match index.find(&center) {
                    Some(id) => id,
                    None => {
                        if cells.len() >= max_cells {
                            truncated = true;
                            continue;
                        }
                        let id = index.insert(center);
                        let mut word = cells[c].word.clone();
                        word.push(f as u8);
                        cells.push(TilingCell { to_cell: m, word });
                        next_frontier.push(id);
                        id
                    }
                };
                adjacency.insert((c, f), id);
            }
        }
        if next_frontier.is_empty() {
            break;
        }
        shells.push(next_frontier.len());
        frontier = next_frontier;
    }
    // close adjacency among the outermost shell without adding cells
    for &c in &frontier {
        for f in 0..faces {
            if adjacency.contains_key(&(c, f)) {
                continue;
            }
            let m = step(&cells[c].to_cell, f);
            if let Some(id) = index.find(&center_of(&m)) {
                adjacency.insert((c, f), id);
            }
        }
    }
    Ok(TilingGraph {
        schlafli: s.clone(),
        kind,
        cells,
        adjacency,
        shells,
        truncated,
        face_generators: fund.face_generators,
        face_planes: fund.face_planes,
        shape: fund.shape,
    })
}
