//! Scenes: a tiling plus props placed in its cells, and the meshes of the
//! fundamental cell the props instantiate.

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::image::Rgb;
use crate::error::{precondition, Error, Result};
use crate::models::{unproject_h2, Model};
use crate::space::Space;
use crate::tiling::{generate_cells, SchlafliSymbol, TilingGraph, TilingKind};
use crate::walk::NetIsometry;

/// Radius of the Klein ball at which ideal vertices are cut off.
pub const IDEAL_CUTOFF: f64 = 0.995;
/// Subdivisions per polygon edge.
pub const SUBDIVISIONS: usize = 8;
/// Height of the room walls and of markers in ℍ²×𝔼.
pub const WALL_HEIGHT: f64 = 2.0;
pub const MARKER_HEIGHT: f64 = 1.0;
/// Marker half-extent (model units).
pub const MARKER_RADIUS: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MeshKind {
    CubeFrame,
    FloorTile,
    Marker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellSelector {
    All,
    Index(usize),
}

impl Serialize for CellSelector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CellSelector::All => s.serialize_str("all"),
            CellSelector::Index(i) => s.serialize_u64(*i as u64),
        }
    }
}

impl<'de> Deserialize<'de> for CellSelector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(CellSelector::Index(i)),
            Raw::Word(w) if w == "all" => Ok(CellSelector::All),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("cell must be an index or \"all\", got \"{w}\""))),
        }
    }
}

fn default_color() -> Rgb {
    [220, 220, 220]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropSpec {
    pub cell: CellSelector,
    pub mesh: MeshKind,
    #[serde(default = "default_color")]
    pub color: Rgb,
}

fn default_fog() -> f64 {
    4.0
}

fn default_max_cells() -> usize {
    200_000
}

/// The scene file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SceneSpec {
    pub space: Space,
    pub schlafli: Vec<u32>,
    pub tiling_depth: usize,
    pub props: Vec<PropSpec>,
    #[serde(default = "default_fog")]
    pub fog_scale: f64,
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
    #[serde(default = "default_portal")]
    pub portal: bool,
}

fn default_portal() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prop {
    pub cell: usize,
    pub mesh: MeshKind,
    pub color: Rgb,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub space: Space,
    pub tiling: Arc<TilingGraph>,
    pub props: Vec<Prop>,
    pub fog_scale: f64,
    pub background: Rgb,
    /// World isometry applied to the whole tiled scene.
    pub placement: Option<NetIsometry>,
    /// Camera-relative tiling: the camera is carried back into the
    /// fundamental cell before drawing, so prop cell indices count from
    /// the cell the viewer stands in. Off, the tiling is a fixed patch.
    pub portal: bool,
}

/// The tiling each space is rendered with by default.
pub fn default_schlafli(space: Space) -> SchlafliSymbol {
    let e = match space {
        Space::H3 => vec![4, 3, 6],
        Space::H2E => vec![4, 6],
        Space::Euclidean => vec![4, 3, 4],
    };
    SchlafliSymbol::new(e).expect("valid default symbol")
}

/// Checks that a tiling fits a space: ℍ³ takes hyperbolic honeycombs,
/// ℍ²×𝔼 hyperbolic plane tilings (the floor), 𝔼³ the cubic lattice.
pub fn check_tiling_for_space(space: Space, t: &TilingGraph) -> Result<()> {
    let ok = match space {
        Space::H3 => t.kind == TilingKind::Hyperbolic && t.dim() == 3,
        Space::H2E => t.kind == TilingKind::Hyperbolic && t.dim() == 2,
        Space::Euclidean => t.kind == TilingKind::Euclidean && t.dim() == 3,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::UnsupportedGeometry(format!(
            "tiling {} does not fit space {space}",
            t.schlafli
        )))
    }
}

impl Scene {
    pub fn new(space: Space, tiling: Arc<TilingGraph>, props: Vec<Prop>, fog_scale: f64) -> Result<Self> {
        check_tiling_for_space(space, &tiling)?;
        if !(fog_scale > 0.0) {
            return precondition(format!("fog scale must be positive, got {fog_scale}"));
        }
        if let Some(p) = props.iter().find(|p| p.cell >= tiling.cell_count()) {
            return precondition(format!(
                "prop cell {} out of range ({} cells)",
                p.cell,
                tiling.cell_count()
            ));
        }
        Ok(Self {
            space,
            tiling,
            props,
            fog_scale,
            background: [12, 14, 22],
            placement: None,
            portal: true,
        })
    }

    /// Expands `"all"` selectors over the tiling's cells.
    pub fn from_spec_with_tiling(spec: &SceneSpec, tiling: Arc<TilingGraph>) -> Result<Self> {
        let mut props = Vec::new();
        for p in &spec.props {
            match p.cell {
                CellSelector::All => props.extend((0..tiling.cell_count()).map(|cell| Prop {
                    cell,
                    mesh: p.mesh,
                    color: p.color,
                })),
                CellSelector::Index(cell) => props.push(Prop {
                    cell,
                    mesh: p.mesh,
                    color: p.color,
                }),
            }
        }
        Ok(Self::new(spec.space, tiling, props, spec.fog_scale)?.with_portal(spec.portal))
    }

    pub fn with_portal(self, portal: bool) -> Self {
        Self { portal, ..self }
    }

    pub fn from_spec(spec: &SceneSpec) -> Result<Self> {
        let symbol = SchlafliSymbol::new(spec.schlafli.clone())?;
        let tiling = generate_cells(&symbol, spec.tiling_depth, spec.max_cells)?;
        if tiling.truncated {
            log::warn!("tiling {symbol} truncated at {} cells", tiling.cell_count());
        }
        Self::from_spec_with_tiling(spec, Arc::new(tiling))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SceneSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    /// The scene carried by `g` (after any earlier placement).
    pub fn moved_by(&self, g: &NetIsometry) -> Result<Self> {
        let placement = match &self.placement {
            None => *g,
            Some(p) => compose_net(g, p)?,
        };
        Ok(Self {
            placement: Some(placement),
            ..self.clone()
        })
    }

    pub fn is_truncated(&self) -> bool {
        self.tiling.truncated
    }
}

fn compose_net(a: &NetIsometry, b: &NetIsometry) -> Result<NetIsometry> {
    Ok(match (a, b) {
        (NetIsometry::H3(a), NetIsometry::H3(b)) => NetIsometry::H3(a.compose(b)),
        (NetIsometry::H2E(a), NetIsometry::H2E(b)) => NetIsometry::H2E(a.compose(b)),
        (NetIsometry::Euclidean(a), NetIsometry::Euclidean(b)) => NetIsometry::Euclidean(a.compose(b)),
        _ => return precondition("placements live in different spaces"),
    })
}

/// A point of the fundamental cell in ambient coordinates: hyperboloid
/// (ℍ³; ℍ² in slots 0, 1, 3 with `z` the height for ℍ²×𝔼) or affine (𝔼³).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPoint {
    pub x: [f64; 4],
    pub z: f64,
}

/// Mesh of one prop in the fundamental cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalMesh {
    pub triangles: Vec<[LocalPoint; 3]>,
    /// Per-triangle brightness factor.
    pub shades: Vec<f64>,
    pub segments: Vec<[LocalPoint; 2]>,
}

fn lerp3(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

fn truncate_ideal(v: [f64; 3]) -> [f64; 3] {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if r > IDEAL_CUTOFF {
        v.map(|c| c * IDEAL_CUTOFF / r)
    } else {
        v
    }
}

/// Builds meshes for a space from its tiling's cell shape.
pub struct MeshBuilder<'a> {
    space: Space,
    tiling: &'a TilingGraph,
}

impl<'a> MeshBuilder<'a> {
    pub fn new(space: Space, tiling: &'a TilingGraph) -> Self {
        Self { space, tiling }
    }

    /// Chart point → ambient point (ℍ³ Klein, ℍ² Klein + height, 𝔼³ plain).
    fn lift(&self, y: [f64; 3], z: f64) -> LocalPoint {
        match self.space {
            Space::H3 => {
                let y = truncate_ideal(y);
                let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
                let t = 1.0 / (1.0 - r2).sqrt();
                LocalPoint {
                    x: [y[0] * t, y[1] * t, y[2] * t, t],
                    z: 0.0,
                }
            }
            Space::H2E => {
                let y = truncate_ideal(y);
                let p = unproject_h2(&[y[0], y[1]], Model::Klein).expect("inside the disk");
                let c = p.coords();
                LocalPoint {
                    x: [c[0], c[1], 0.0, c[2]],
                    z,
                }
            }
            Space::Euclidean => LocalPoint {
                x: [y[0], y[1], y[2], 1.0],
                z: 0.0,
            },
        }
    }

    /// Polygon in the chart (fan from its centroid, each fan triangle split
    /// into `SUBDIVISIONS²` pieces).
    fn fill_polygon(&self, mesh: &mut LocalMesh, loop_: &[[f64; 3]], z: f64, shade: f64) {
        let n = loop_.len() as f64;
        let c = loop_.iter().fold([0.0; 3], |a, v| [a[0] + v[0] / n, a[1] + v[1] / n, a[2] + v[2] / n]);
        let k = SUBDIVISIONS;
        for i in 0..loop_.len() {
            let (a, b) = (loop_[i], loop_[(i + 1) % loop_.len()]);
            // barycentric grid over (c, a, b)
            let pt = |u: usize, v: usize| {
                let (fu, fv) = (u as f64 / k as f64, v as f64 / k as f64);
                let w = 1.0 - fu - fv;
                [
                    w * c[0] + fu * a[0] + fv * b[0],
                    w * c[1] + fu * a[1] + fv * b[1],
                    w * c[2] + fu * a[2] + fv * b[2],
                ]
            };
            for u in 0..k {
                for v in 0..k - u {
                    let t1 = [pt(u, v), pt(u + 1, v), pt(u, v + 1)];
                    mesh.triangles.push(t1.map(|p| self.lift(p, z)));
                    mesh.shades.push(shade);
                    if u + v + 1 < k {
                        let t2 = [pt(u + 1, v), pt(u + 1, v + 1), pt(u, v + 1)];
                        mesh.triangles.push(t2.map(|p| self.lift(p, z)));
                        mesh.shades.push(shade);
                    }
                }
            }
        }
    }

    fn segment(&self, mesh: &mut LocalMesh, a: [f64; 3], za: f64, b: [f64; 3], zb: f64) {
        let k = SUBDIVISIONS;
        for i in 0..k {
            let (t0, t1) = (i as f64 / k as f64, (i + 1) as f64 / k as f64);
            mesh.segments.push([
                self.lift(lerp3(a, b, t0), za + (zb - za) * t0),
                self.lift(lerp3(a, b, t1), za + (zb - za) * t1),
            ]);
        }
    }

    pub fn build(&self, kind: MeshKind) -> LocalMesh {
        let shape = &self.tiling.shape;
        let mut mesh = LocalMesh::default();
        match (kind, self.space) {
            (MeshKind::CubeFrame, Space::H2E) => {
                let poly = &shape.faces[0];
                for i in 0..poly.len() {
                    let a = shape.vertices[poly[i]];
                    let b = shape.vertices[poly[(i + 1) % poly.len()]];
                    self.segment(&mut mesh, a, 0.0, b, 0.0);
                    self.segment(&mut mesh, a, WALL_HEIGHT, b, WALL_HEIGHT);
                    self.segment(&mut mesh, a, 0.0, a, WALL_HEIGHT);
                }
            }
            (MeshKind::CubeFrame, _) => {
                for &(i, j) in &shape.edges {
                    self.segment(&mut mesh, shape.vertices[i], 0.0, shape.vertices[j], 0.0);
                }
            }
            (MeshKind::FloorTile, Space::H2E) => {
                let poly: Vec<[f64; 3]> = shape.faces[0].iter().map(|&i| shape.vertices[i]).collect();
                self.fill_polygon(&mut mesh, &poly, 0.0, 1.0);
            }
            (MeshKind::FloorTile, _) => {
                let face = &shape.faces[self.tiling.floor_face()];
                let poly: Vec<[f64; 3]> = face.iter().map(|&i| shape.vertices[i]).collect();
                self.fill_polygon(&mut mesh, &poly, 0.0, 1.0);
            }
            (MeshKind::Marker, space) => {
                // octahedron; in the Klein chart a point at distance r sits at tanh r
                let (r, zc) = match space {
                    Space::Euclidean => (MARKER_RADIUS, 0.0),
                    Space::H3 => (MARKER_RADIUS.tanh(), 0.0),
                    Space::H2E => (MARKER_RADIUS.tanh(), MARKER_HEIGHT),
                };
                // (chart point, height) of the six tips
                let tips: [([f64; 3], f64); 6] = if space == Space::H2E {
                    [
                        ([r, 0.0, 0.0], zc),
                        ([-r, 0.0, 0.0], zc),
                        ([0.0, 0.0, 0.0], zc + MARKER_RADIUS),
                        ([0.0, 0.0, 0.0], zc - MARKER_RADIUS),
                        ([0.0, r, 0.0], zc),
                        ([0.0, -r, 0.0], zc),
                    ]
                } else {
                    [
                        ([r, 0.0, 0.0], 0.0),
                        ([-r, 0.0, 0.0], 0.0),
                        ([0.0, r, 0.0], 0.0),
                        ([0.0, -r, 0.0], 0.0),
                        ([0.0, 0.0, r], 0.0),
                        ([0.0, 0.0, -r], 0.0),
                    ]
                };
                let mut face = 0;
                for &sx in &[0usize, 1] {
                    for &sy in &[2usize, 3] {
                        for &sz in &[4usize, 5] {
                            let tri = [tips[sx], tips[sy], tips[sz]].map(|(p, z)| self.lift(p, z));
                            mesh.triangles.push(tri);
                            mesh.shades.push(0.6 + 0.05 * face as f64);
                            face += 1;
                        }
                    }
                }
            }
        }
        mesh
    }
}
