//! Argument parsing and the one-shot subcommands.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use hyperwalk::perception::{floor_drop_distance, vergence_angle, vergence_limit, EyeConfig};
use hyperwalk::render::{render_figure, render_frame, render_stereo, FigureKind, FigureParams, Image, Scene, StereoMode, ViewSpec};
use hyperwalk::tiling::{generate_cells, SchlafliSymbol, TilingKind};
use hyperwalk::walk::{parse_script, run_script, solve_square_step, square_walk, CameraFrame};
use hyperwalk::{Model, Space};
use serde_json::{json, Map, Value};

use crate::config::merge_config;
use crate::server;
use crate::session::SessionConfig;

#[derive(Debug, Parser)]
#[command(name = "hyperwalk", version, about = "Walk, render and measure hyperbolic and product spaces")]
pub struct Cli {
    /// JSON file with default option values (flags win).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print results as one JSON object.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Draw one of the explanatory figures.
    Figure {
        /// models2d, sphereTransport, loopPanels or transportCycle
        kind: FigureKind,
        #[arg(long)]
        model: Option<Model>,
        #[arg(long)]
        width: Option<usize>,
        /// JSON file with figure parameters.
        #[arg(long, value_name = "FILE")]
        params: Option<PathBuf>,
        /// Output file: .svg, .png or .ppm
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate a tiling and report its growth.
    Tiling {
        #[arg(long)]
        schlafli: SchlafliSymbol,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        stats: bool,
        /// Write the cell set as JSON.
        #[arg(long, value_name = "FILE")]
        export: Option<PathBuf>,
        #[arg(long, default_value_t = 1_000_000)]
        max_cells: usize,
    },
    /// Run a command script and report the net motion.
    Walk {
        #[arg(long)]
        space: Space,
        #[arg(long, value_name = "FILE")]
        script: PathBuf,
        /// Start pose "x,y,z,yaw,pitch".
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
    },
    /// Turn and step until the walk closes.
    SquareWalk {
        #[arg(long)]
        space: Space,
        #[arg(long, required_unless_present = "solve_step")]
        step: Option<f64>,
        /// Find the step length that closes after --moves moves.
        #[arg(long, conflicts_with = "step")]
        solve_step: bool,
        #[arg(long, default_value_t = 90.0, allow_hyphen_values = true)]
        turn_deg: f64,
        #[arg(long, default_value_t = 6)]
        moves: usize,
        #[arg(long, default_value_t = 64)]
        max_moves: usize,
    },
    /// Vergence angle for a fixation distance.
    Vergence {
        /// Interpupillary distance in millimetres.
        #[arg(long)]
        ipd: f64,
        #[arg(long)]
        distance: f64,
        #[arg(long)]
        space: Space,
        /// Model units per metre.
        #[arg(long, default_value_t = 1.0)]
        world_scale: f64,
    },
    /// Distance to a floor plane seen from a point moving parallel to it.
    FloorDrop {
        #[arg(long)]
        height: f64,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        t: Vec<f64>,
    },
    /// Render a scene to an image.
    Render {
        #[arg(long, value_name = "FILE")]
        scene: PathBuf,
        /// "x,y,z,yaw,pitch", angles in radians.
        #[arg(long, allow_hyphen_values = true)]
        camera: String,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 640)]
        width: usize,
        #[arg(long, default_value_t = 480)]
        height: usize,
        #[arg(long, default_value_t = 90.0)]
        fov_deg: f64,
        /// Left and right eye side by side.
        #[arg(long)]
        stereo: bool,
        #[arg(long, default_value = "inSpace", requires = "stereo")]
        mode: StereoMode,
        /// Interpupillary distance in model units.
        #[arg(long, default_value_t = 0.062)]
        ipd: f64,
    },
    /// Serve explorer sessions over WebSocket.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value = "h3")]
        space: Space,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Translation speed, model units per second.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long, default_value_t = 64)]
        max_sessions: usize,
        #[arg(long, default_value_t = 6)]
        max_depth: usize,
    },
}

type Outcome = Result<Value, String>;

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let mut cmd = Cli::command();
    let argv = match merge_config(argv, &cmd) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("hyperwalk: {e}");
            return 2;
        }
    };
    let cli = match cmd.try_get_matches_from_mut(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(v) => {
            print_value(&v, cli.json);
            0
        }
        Err(e) => {
            eprintln!("hyperwalk: {e}");
            1
        }
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn print_value(v: &Value, as_json: bool) {
    match v {
        Value::Null => {}
        Value::Object(m) if !as_json => {
            for (k, v) in m {
                match v {
                    Value::String(s) => println!("{k}={s}"),
                    Value::Null => println!("{k}=none"),
                    other => println!("{k}={other}"),
                }
            }
        }
        other => println!("{other}"),
    }
}

pub fn run(cmd: Cmd) -> Outcome {
    match cmd {
        Cmd::Figure { kind, model, width, params, output } => figure(kind, model, width, params.as_deref(), &output),
        Cmd::Tiling { schlafli, depth, stats, export, max_cells } => tiling(&schlafli, depth, stats, export.as_deref(), max_cells),
        Cmd::Walk { space, script, start } => {
            let text = std::fs::read_to_string(&script).map_err(|e| format!("{}: {e}", script.display()))?;
            let commands = parse_script(&text).map_err(err)?;
            let start = match start {
                Some(p) => CameraFrame::parse_pose(space, &p).map_err(err)?,
                None => CameraFrame::identity(space),
            };
            Ok(run_script(&start, &commands).map_err(err)?.to_json())
        }
        Cmd::SquareWalk { space, step, solve_step, turn_deg, moves, max_moves } => {
            let turn = turn_deg.to_radians();
            let step = if solve_step {
                solve_square_step(turn, moves, space).map_err(err)?
            } else {
                step.expect("clap requires --step")
            };
            let report = square_walk(step, turn, space, max_moves).map_err(err)?;
            let mut out = Map::new();
            out.insert("step".into(), json!(step));
            if let Value::Object(m) = report.to_json() {
                out.extend(m);
            }
            Ok(Value::Object(out))
        }
        Cmd::Vergence { ipd, distance, space, world_scale } => {
            let eye = EyeConfig::new(ipd / 1000.0, world_scale).map_err(err)?;
            let v = vergence_angle(&eye, distance, space).map_err(err)?;
            let flat = vergence_angle(&eye, distance, Space::Euclidean).map_err(err)?;
            let mut out = json!({
                "space": space,
                "vergenceRad": v,
                "vergenceDeg": v.to_degrees(),
                "euclideanRad": flat,
            });
            if space != Space::Euclidean {
                out["limitRad"] = json!(vergence_limit(&eye));
            }
            Ok(out)
        }
        Cmd::FloorDrop { height, t } => {
            let mut distance = Vec::with_capacity(t.len());
            for &ti in &t {
                distance.push(floor_drop_distance(height, ti).map_err(err)?);
            }
            let extra: Vec<f64> = distance.iter().map(|d| d - height).collect();
            Ok(json!({ "height": height, "t": t, "distance": distance, "extra": extra }))
        }
        Cmd::Render { scene, camera, output, width, height, fov_deg, stereo, mode, ipd } => {
            let text = std::fs::read_to_string(&scene).map_err(|e| format!("{}: {e}", scene.display()))?;
            let scene = Scene::from_json(&text).map_err(err)?;
            let camera = CameraFrame::parse_pose(scene.space, &camera).map_err(err)?;
            let view = ViewSpec::new(width, height, fov_deg.to_radians()).map_err(err)?;
            let img = if stereo {
                let eye = EyeConfig::new(ipd, 1.0).map_err(err)?;
                let (l, r) = render_stereo(&scene, &camera, &eye, mode, &view).map_err(err)?;
                side_by_side(&l, &r)?
            } else {
                render_frame(&scene, &camera, &view).map_err(err)?.0
            };
            img.save(&output).map_err(err)?;
            Ok(json!({
                "output": output.display().to_string(),
                "width": img.width(),
                "height": img.height(),
                "truncated": scene.is_truncated(),
            }))
        }
        Cmd::Serve { port, host, space, depth, speed, max_sessions, max_depth } => {
            if depth > max_depth {
                return Err(format!("--depth {depth} exceeds --max-depth {max_depth}"));
            }
            if !(speed.is_finite() && speed > 0.0) {
                return Err("--speed must be positive".into());
            }
            let config = SessionConfig {
                space,
                depth,
                speed,
                max_depth,
                ..SessionConfig::default()
            };
            let handle = server::spawn(&format!("{host}:{port}"), config, max_sessions).map_err(err)?;
            eprintln!("serving on ws://{}", handle.addr);
            handle.join();
            Ok(Value::Null)
        }
    }
}

fn side_by_side(l: &Image, r: &Image) -> Result<Image, String> {
    let (w, h) = (l.width(), l.height());
    let mut out = Image::new(2 * w, h, [0, 0, 0]).map_err(err)?;
    for y in 0..h {
        for x in 0..w {
            out.set(x, y, l.get(x, y));
            out.set(w + x, y, r.get(x, y));
        }
    }
    Ok(out)
}

fn figure(kind: FigureKind, model: Option<Model>, width: Option<usize>, params: Option<&Path>, output: &Path) -> Outcome {
    let mut p = match params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str::<FigureParams>(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => FigureParams::default(),
    };
    if model.is_some() {
        p.model = model;
    }
    if let Some(w) = width {
        p.width = w;
    }
    let fig = render_figure(kind, &p).map_err(err)?;
    let ext = output.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("svg") => std::fs::write(output, fig.drawing.to_svg()).map_err(err)?,
        Some("png") | Some("ppm") => fig.drawing.to_image().map_err(err)?.save(output).map_err(err)?,
        _ => return Err(format!("{}: output must end in .svg, .png or .ppm", output.display())),
    }
    let mut meta = fig.metadata();
    meta["output"] = json!(output.display().to_string());
    Ok(meta)
}

fn tiling(symbol: &SchlafliSymbol, depth: usize, _stats: bool, export: Option<&Path>, max_cells: usize) -> Outcome {
    let start = std::time::Instant::now();
    let t = generate_cells(symbol, depth, max_cells).map_err(err)?;
    let seconds = start.elapsed().as_secs_f64();
    if let Some(path) = export {
        let text = serde_json::to_string(&t.export()).map_err(err)?;
        std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let growth: Vec<f64> = t.shells.windows(2).skip(1).map(|w| w[1] as f64 / w[0] as f64).collect();
    let kind = match t.kind {
        TilingKind::Euclidean => "euclidean",
        TilingKind::Hyperbolic => "hyperbolic",
    };
    Ok(json!({
        "schlafli": symbol.entries(),
        "kind": kind,
        "depth": depth,
        "cellCount": t.cell_count(),
        "shells": t.shells,
        "cumulative": t.cumulative_counts(),
        "growthRatios": growth,
        "truncated": t.truncated,
        "seconds": seconds,
    }))
}
