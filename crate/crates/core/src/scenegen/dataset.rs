use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{DepthFrame, RgbFrame, Severity, SeverityMask};
use crate::pnm::{self, PnmImage};

use super::camera::{CameraIntrinsics, Pose};
use super::corruption::{apply_corruption_on_surfaces, CorruptionParams};
use super::render::render_frame;
use super::scenario::ScenarioConfig;
use super::world::World;

/// One synthetic RGB-D frame with its clean reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SimFrame {
    pub index: usize,
    pub pose: Pose,
    pub rgb: RgbFrame,
    pub depth: DepthFrame,
    pub clean: DepthFrame,
    pub severity: SeverityMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub index: usize,
    pub rgb: String,
    pub depth: String,
    pub clean: String,
    pub severity: String,
    pub pose: String,
    /// Strongest level present in the severity mask.
    pub max_severity: Severity,
    /// Pixel counts per level, L0 first.
    pub severity_pixels: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: ScenarioConfig,
    /// Level every glare patch was rendered at, when overridden.
    pub patch_severity: Option<Severity>,
    pub intrinsics: CameraIntrinsics,
    pub params: CorruptionParams,
    pub frames: Vec<ManifestFrame>,
}

/// A dataset loaded back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub frames: Vec<SimFrame>,
}

/// Renders and corrupts every pose. Samples are quantized to the precision
/// of the dataset files, so a written and reloaded sequence is identical.
pub fn simulate_sequence(
    world: &World,
    poses: &[Pose],
    intrinsics: &CameraIntrinsics,
    params: &CorruptionParams,
) -> Result<Vec<SimFrame>> {
    params.validate()?;
    poses
        .iter()
        .enumerate()
        .map(|(index, pose)| {
            let r = render_frame(world, pose, intrinsics)?;
            let mut clean = r.depth;
            clean.quantize_mm();
            let (mut depth, _) = apply_corruption_on_surfaces(&clean, &r.severity, &r.surfaces, params, index as u64)?;
            depth.quantize_mm();
            let mut rgb = r.rgb;
            rgb.quantize();
            Ok(SimFrame {
                index,
                pose: *pose,
                rgb,
                depth,
                clean,
                severity: r.severity,
            })
        })
        .collect()
}

fn frame_entry(f: &SimFrame) -> ManifestFrame {
    let hist = f.severity.histogram();
    let max_severity = Severity::ALL
        .into_iter()
        .rev()
        .find(|l| hist[l.index()] > 0)
        .unwrap_or(Severity::L0);
    ManifestFrame {
        index: f.index,
        rgb: format!("rgb_{:06}.ppm", f.index),
        depth: format!("depth_{:06}.pgm", f.index),
        clean: format!("clean_{:06}.pgm", f.index),
        severity: format!("severity_{:06}.pgm", f.index),
        pose: format!("pose_{:06}.json", f.index),
        max_severity,
        severity_pixels: hist,
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes frames and the manifest into `dir`, creating it if needed.
pub fn write_dataset(
    dir: &Path,
    scenario: &ScenarioConfig,
    patch_severity: Option<Severity>,
    intrinsics: &CameraIntrinsics,
    params: &CorruptionParams,
    frames: &[SimFrame],
) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(frames.len());
    for f in frames {
        let e = frame_entry(f);
        let (w, h) = f.depth.dims();
        pnm::write_ppm(&dir.join(&e.rgb), w, h, &f.rgb.to_bytes())?;
        pnm::write_pgm16(&dir.join(&e.depth), w, h, &f.depth.to_millimeters())?;
        pnm::write_pgm16(&dir.join(&e.clean), w, h, &f.clean.to_millimeters())?;
        pnm::write_pgm8(&dir.join(&e.severity), w, h, &f.severity.to_bytes())?;
        write_json(&dir.join(&e.pose), &f.pose)?;
        entries.push(e);
    }
    let manifest = Manifest {
        scenario: scenario.clone(),
        patch_severity,
        intrinsics: *intrinsics,
        params: params.clone(),
        frames: entries,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Simulates a trajectory and writes it as a dataset.
pub fn generate_sequence(
    dir: &Path,
    scenario: &ScenarioConfig,
    world: &World,
    poses: &[Pose],
    patch_severity: Option<Severity>,
    params: &CorruptionParams,
) -> Result<Manifest> {
    let frames = simulate_sequence(world, poses, &scenario.camera, params)?;
    write_dataset(dir, scenario, patch_severity, &scenario.camera, params, &frames)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn format_error(path: PathBuf, message: impl Into<String>) -> Error {
    Error::Format {
        path,
        message: message.into(),
    }
}

fn read_depth(path: PathBuf, dims: (usize, usize)) -> Result<DepthFrame> {
    match pnm::read_pnm(&path)? {
        PnmImage::Gray16 { width, height, data } if (width, height) == dims => {
            DepthFrame::from_millimeters(width, height, &data)
        }
        other => Err(format_error(
            path,
            format!("expected 16-bit gray {}x{}, found {:?}", dims.0, dims.1, other.dimensions()),
        )),
    }
}

/// Loads every frame listed in the manifest.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = read_manifest(dir)?;
    let dims = (manifest.intrinsics.width, manifest.intrinsics.height);
    let mut frames = Vec::with_capacity(manifest.frames.len());
    for e in &manifest.frames {
        let rgb_path = dir.join(&e.rgb);
        let rgb = match pnm::read_pnm(&rgb_path)? {
            PnmImage::Rgb8 { width, height, data } if (width, height) == dims => RgbFrame::from_bytes(width, height, &data)?,
            _ => return Err(format_error(rgb_path, "expected 8-bit RGB matching the intrinsics")),
        };
        let depth = read_depth(dir.join(&e.depth), dims)?;
        let clean_path = dir.join(&e.clean);
        if !clean_path.exists() {
            return Err(format_error(
                clean_path,
                "clean reference depth missing; regenerate the dataset with simgen",
            ));
        }
        let clean = read_depth(clean_path, dims)?;
        let sev_path = dir.join(&e.severity);
        let severity = match pnm::read_pnm(&sev_path)? {
            PnmImage::Gray8 { width, height, data } if (width, height) == dims => {
                let levels = data
                    .iter()
                    .map(|&g| Severity::from_gray(g))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| format_error(sev_path.clone(), "gray level is not 0, 128 or 255"))?;
                SeverityMask::from_levels(width, height, levels)?
            }
            _ => return Err(format_error(sev_path, "expected 8-bit gray matching the intrinsics")),
        };
        let pose_path = dir.join(&e.pose);
        let text = fs::read_to_string(&pose_path).map_err(|err| Error::io(&pose_path, err))?;
        let pose: Pose = serde_json::from_str(&text).map_err(|err| Error::json(&pose_path, err))?;
        frames.push(SimFrame {
            index: e.index,
            pose,
            rgb,
            depth,
            clean,
            severity,
        });
    }
    Ok(Dataset { manifest, frames })
}
