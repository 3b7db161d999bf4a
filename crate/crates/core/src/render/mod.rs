//! Software rendering: first-person views of tiled scenes and 2-D figures.

pub mod draw;
pub mod figure;
pub mod image;
pub mod raster;
pub mod scene;

pub use draw::Drawing;
pub use figure::{render_figure, Figure, FigureKind, FigureParams};
pub use image::{Image, Rgb};
pub use raster::{render_frame, render_stereo, RenderInfo, StereoMode, ViewSpec};
pub use scene::{MeshKind, Scene, SceneSpec};
