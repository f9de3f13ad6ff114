//! Synthetic worlds, clean ray-cast RGB-D rendering and glare corruption.

mod camera;
mod corruption;
mod dataset;
mod render;
mod scenario;
mod world;

pub use camera::{normalize_yaw, CameraIntrinsics, Pose};
pub use corruption::{apply_corruption, apply_corruption_on_surfaces, CorruptionParams, PixelFate};
pub use dataset::{
    generate_sequence, load_dataset, read_manifest, simulate_sequence, write_dataset, Dataset, Manifest,
    ManifestFrame, SimFrame,
};
pub use render::{render_clean_frame, render_frame, RenderedFrame, NO_SURFACE, SURFACE_TILE};
pub use scenario::{build_world, bundled_names, resample, Keyframe, ScenarioConfig, Trial};
pub use world::{room_walls, BoxObstacle, GlarePatch, Rect, Segment, World};

