use std::path::{Path, PathBuf};
use std::sync::Arc;

use hyperwalk::perception::EyeConfig;
use hyperwalk::render::{render_frame, render_stereo, Image, MeshKind, Scene, SceneSpec, StereoMode, ViewSpec};
use hyperwalk::render::raster::mean_column_of;
use hyperwalk::render::scene::{default_schlafli, Prop};
use hyperwalk::tiling::generate_cells;
use hyperwalk::walk::{Axis, CameraFrame, Command, NetIsometry, Turn};
use hyperwalk::{project_h3, Matrix4, Model, MPoint, Space};
use serde::Deserialize;
use sha2::{Digest, Sha256};

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct StereoFixture {
    mode: StereoMode,
    ipd: f64,
    eye: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Fixture {
    scene: SceneSpec,
    camera: String,
    width: usize,
    height: usize,
    fov_y: f64,
    stereo: Option<StereoFixture>,
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/render")
}

fn render_fixture(path: &Path) -> Image {
    let f: Fixture = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let scene = Scene::from_spec(&f.scene).unwrap();
    let camera = CameraFrame::parse_pose(f.scene.space, &f.camera).unwrap();
    let view = ViewSpec::new(f.width, f.height, f.fov_y).unwrap();
    match f.stereo {
        None => render_frame(&scene, &camera, &view).unwrap().0,
        Some(s) => {
            let eye = EyeConfig::new(s.ipd, 1.0).unwrap();
            let (l, r) = render_stereo(&scene, &camera, &eye, s.mode, &view).unwrap();
            if s.eye == "left" {
                l
            } else {
                r
            }
        }
    }
}

fn digest(img: &Image) -> String {
    Sha256::digest(img.to_ppm()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Set `UPDATE_GOLDEN=1` to rewrite the digests (and drop PNGs next to them).
#[test]
fn golden_fixtures_are_byte_identical() {
    let dir = fixture_dir();
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    let lines: Vec<String> = names
        .iter()
        .map(|n| {
            let img = render_fixture(&dir.join(n));
            if std::env::var_os("UPDATE_GOLDEN").is_some() {
                img.save(&dir.join(n.replace(".json", ".png"))).unwrap();
            }
            format!("{}  {n}", digest(&img))
        })
        .collect();
    let golden_path = dir.join("golden.sha256");
    let text = lines.join("\n") + "\n";
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden_path, &text).unwrap();
    }
    let golden = std::fs::read_to_string(&golden_path).expect("golden digests present");
    assert_eq!(text, golden);
    // a second render of the same input is the same bytes
    let again = render_fixture(&dir.join(&names[0]));
    assert_eq!(format!("{}  {}", digest(&again), names[0]), lines[0]);
}

fn scene(space: Space, depth: usize, props: &[(usize, MeshKind, [u8; 3])]) -> Scene {
    let t = Arc::new(generate_cells(&default_schlafli(space), depth, 100_000).unwrap());
    let props = props.iter().map(|&(cell, mesh, color)| Prop { cell, mesh, color }).collect();
    Scene::new(space, t, props, 3.0).unwrap()
}

fn room(space: Space, depth: usize) -> Scene {
    let t = generate_cells(&default_schlafli(space), depth, 100_000).unwrap();
    let mut props: Vec<(usize, MeshKind, [u8; 3])> =
        (0..t.cell_count()).map(|c| (c, MeshKind::CubeFrame, [230, 230, 210])).collect();
    props.push((1, MeshKind::Marker, [220, 50, 40]));
    if space == Space::H2E {
        props.extend((0..t.cell_count()).map(|c| (c, MeshKind::FloorTile, [80, 150, 100])));
    }
    scene(space, depth, &props)
}

fn view() -> ViewSpec {
    ViewSpec::new(128, 96, 1.4).unwrap()
}

fn some_motion(space: Space) -> NetIsometry {
    let a = CameraFrame::identity(space);
    let b = CameraFrame::from_pose(space, [0.4, 0.1, -0.3], 0.8, 0.0).unwrap();
    a.motion_to(&b).unwrap()
}

#[test]
fn moving_camera_equals_moving_scene_back() {
    for space in [Space::H3, Space::H2E, Space::Euclidean] {
        let s = room(space, 2);
        let cam = CameraFrame::from_pose(space, [0.1, 0.6, 0.2], 0.3, -0.1).unwrap();
        let g = some_motion(space);
        let moved_cam = render_frame(&s, &cam.moved_by(&g).unwrap(), &view()).unwrap().0;
        let moved_scene = render_frame(&s.moved_by(&g.inverse()).unwrap(), &cam, &view()).unwrap().0;
        assert_eq!(moved_cam.count_differences(&moved_scene, 0), 0, "{space}");
        let plain = render_frame(&s, &cam, &view()).unwrap().0;
        assert!(plain.count_differences(&moved_cam, 0) > 0, "{space}: motion must change the view");
    }
}

#[test]
fn tiling_symmetries_leave_the_view_unchanged() {
    for space in [Space::H3, Space::H2E, Space::Euclidean] {
        let depth = 3;
        let t = generate_cells(&default_schlafli(space), depth, 100_000).unwrap();
        let props: Vec<_> = (0..t.cell_count()).map(|c| (c, MeshKind::CubeFrame, [230, 230, 210])).collect();
        let s = scene(space, depth, &props);
        let up = if space == Space::H2E { 0.7 } else { 0.15 };
        let cam = CameraFrame::from_pose(space, [0.05, up, 0.1], 0.4, 0.1).unwrap();
        let base = render_frame(&s, &cam, &view()).unwrap().0;
        for gen in &t.face_generators {
            let g = NetIsometry::from_tiling_matrix(space, gen);
            let other = cam.moved_by(&g).unwrap();
            let mut p = other.position();
            if space == Space::H2E {
                // slot 2 holds the height, which the floor tiling ignores
                p[2] = 0.0;
            }
            let (k, _) = t.reduce_point(&p);
            assert!(k.max_abs_diff(&Matrix4::identity()) > 0.1, "{space}: camera stayed in its cell");
            let img = render_frame(&s, &other, &view()).unwrap().0;
            assert_eq!(base.count_differences(&img, 0), 0, "{space}");
        }
    }
}

#[test]
fn fog_dims_the_farther_of_two_identical_markers() {
    let space = Space::H3;
    let t = generate_cells(&default_schlafli(space), 2, 10_000).unwrap();
    let cam = CameraFrame::identity(space);
    let near_cell = 1;
    let far_cell = (0..t.cell_count()).find(|&c| t.cells[c].word.len() == 2 && t.cells[c].word[0] == t.cells[1].word[0]).unwrap();
    let mean_lum = |cell: usize| {
        let s = scene(space, 2, &[(cell, MeshKind::Marker, [200, 200, 200])]);
        // look towards the marker
        let c = t.cell_center(cell);
        let dir = [c[0], c[1], c[2]];
        let yaw = (-dir[0]).atan2(dir[2]);
        let pitch = dir[1].atan2(dir[0].hypot(dir[2]));
        let cam = cam.apply(&Command::rotate(Turn::Yaw, yaw)).apply(&Command::rotate(Turn::Pitch, pitch));
        let img = render_frame(&s, &cam, &ViewSpec::new(200, 200, 1.2).unwrap()).unwrap().0;
        let bg = s.background;
        let px: Vec<f64> = img.pixels().iter().filter(|&&p| p != bg).map(|&p| hyperwalk::render::image::luminance(p)).collect();
        assert!(!px.is_empty(), "marker in cell {cell} not visible");
        (c[3].acosh(), px.iter().sum::<f64>() / px.len() as f64)
    };
    let (d1, l1) = mean_lum(near_cell);
    let (d2, l2) = mean_lum(far_cell);
    assert!(d1 < d2);
    assert!(l1 >= l2, "{l1} at {d1} vs {l2} at {d2}");
    assert!(l1 > l2);
}

fn red(p: [u8; 3]) -> bool {
    p[0] as i32 > p[1] as i32 + 12 && p[0] as i32 > p[2] as i32 + 6
}

/// One red marker `d` ahead of the camera in ℍ³.
fn marker_ahead(d: f64) -> Scene {
    let s = scene(Space::H3, 0, &[(0, MeshKind::Marker, [230, 40, 30])]).with_portal(false);
    let g = CameraFrame::identity(Space::H3)
        .motion_to(&CameraFrame::from_pose(Space::H3, [0.0, 0.0, d], 0.0, 0.0).unwrap())
        .unwrap();
    s.moved_by(&g).unwrap()
}

fn disparity(l: &Image, r: &Image) -> f64 {
    mean_column_of(l, red).unwrap() - mean_column_of(r, red).unwrap()
}

#[test]
fn stereo_disparity_in_space_exceeds_model_space() {
    let s = marker_ahead(4.0);
    let cam = CameraFrame::identity(Space::H3);
    let eye = EyeConfig::new(0.062, 1.0).unwrap();
    let v = ViewSpec::new(480, 360, 1.2).unwrap();
    let (l, r) = render_stereo(&s, &cam, &eye, StereoMode::InSpace, &v).unwrap();
    let d_in = disparity(&l, &r);
    let (ml, mr) = render_stereo(&s, &cam, &eye, StereoMode::ModelSpace, &v).unwrap();
    let d_model = disparity(&ml, &mr);
    assert!(d_in > 0.0 && d_model > 0.0, "{d_in} {d_model}");
    assert!(d_in > d_model, "in-space {d_in} px vs model-space {d_model} px");
    // the in-space disparity is the vergence of both eyes, in pixels
    let verge = hyperwalk::perception::vergence_angle(&eye, 4.0, Space::H3).unwrap();
    let expected = 2.0 * v.focal() * verge.tan();
    assert!((d_in - expected).abs() < 1.5, "{d_in} vs {expected}");
    // left and right swapped: the sign flips
    assert_eq!(disparity(&r, &l), -d_in);
    assert!(l.count_differences(&ml, 0) > 0);
}

#[test]
fn vanishing_ipd_gives_identical_eyes() {
    for space in [Space::H3, Space::H2E, Space::Euclidean] {
        let s = room(space, 2);
        let cam = CameraFrame::from_pose(space, [0.0, 0.5, 0.1], 0.2, 0.0).unwrap();
        let eye = EyeConfig::new(1e-9, 1.0).unwrap();
        for mode in [StereoMode::InSpace, StereoMode::ModelSpace] {
            let (l, r) = render_stereo(&s, &cam, &eye, mode, &view()).unwrap();
            assert_eq!(l.count_differences(&r, 1), 0, "{space} {mode:?}");
        }
    }
}

#[test]
fn center_pixel_and_empty_scene() {
    let s = scene(Space::H3, 0, &[(0, MeshKind::CubeFrame, [255, 255, 255])]);
    // from the cell center, half a right angle to the right is a vertical edge
    let cam = CameraFrame::identity(Space::H3).apply(&Command::rotate(Turn::Yaw, -std::f64::consts::FRAC_PI_4));
    let v = ViewSpec::new(101, 101, 1.2).unwrap();
    let img = render_frame(&s, &cam, &v).unwrap().0;
    assert_ne!(img.get(50, 50), s.background);
    let empty = scene(Space::H3, 1, &[]);
    let img = render_frame(&empty, &cam, &v).unwrap().0;
    assert!(img.pixels().iter().all(|&p| p == empty.background));
}

#[test]
fn projection_follows_klein_coordinates() {
    let v = ViewSpec::new(401, 301, 1.2).unwrap();
    // straight ahead at distance 1: Klein (0, 0, tanh 1)
    let ahead = v.project(&[0.0, 0.0, 1f64.tanh()]);
    assert_eq!(ahead, [200.5, 150.5]);
    // one forward, then one to the right
    let q = MPoint::new([1f64.sinh(), 0.0, 1f64.sinh() * 1f64.cosh(), 1f64.cosh().powi(2)]).unwrap();
    let k = project_h3(&q, Model::Klein);
    assert!((k[0] - 1f64.tanh() / 1f64.cosh()).abs() < 1e-12 && (k[2] - 1f64.tanh()).abs() < 1e-12);
    assert!((v.project(&k)[0] - (200.5 + v.focal() / 1f64.cosh())).abs() < 1e-9);
    // rendered: a marker two ahead and one to the right sits at the column
    // of its Klein direction tanh(1)/sinh(2), up to its own small extent
    let want_x = 200.5 + v.focal() * 1f64.tanh() / 2f64.sinh();
    let g = CameraFrame::identity(Space::H3)
        .motion_to(&CameraFrame::identity(Space::H3).apply_all(&[
            Command::translate(Axis::Forward, 2.0),
            Command::translate(Axis::Right, 1.0),
        ]))
        .unwrap();
    let s = scene(Space::H3, 0, &[(0, MeshKind::Marker, [230, 40, 30])])
        .with_portal(false)
        .moved_by(&g)
        .unwrap();
    let img = render_frame(&s, &CameraFrame::identity(Space::H3), &v).unwrap().0;
    let got = mean_column_of(&img, red).unwrap();
    assert!((got - want_x).abs() < 1.0, "{got} vs {want_x}");
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let s = room(Space::H3, 3);
    let cam = CameraFrame::from_pose(Space::H3, [0.2, 0.1, 0.3], 0.5, 0.2).unwrap();
    let v = ViewSpec::new(200, 150, 1.4).unwrap();
    let images: Vec<Vec<u8>> = [1, 3, 8]
        .iter()
        .map(|&n| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            pool.install(|| render_frame(&s, &cam, &v).unwrap().0.to_ppm())
        })
        .collect();
    assert!(images.windows(2).all(|w| w[0] == w[1]));
}
