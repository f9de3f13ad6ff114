use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::camera::{CameraIntrinsics, Pose};
use super::corruption::CorruptionParams;
use super::world::{room_walls, BoxObstacle, GlarePatch, Rect, Segment, World};

/// A trajectory keyframe; `frames` poses are interpolated from the previous
/// keyframe up to and including this one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keyframe {
    pub x: f64,
    pub y: f64,
    /// Unwrapped heading in degrees, so 0 followed by 360 is a full turn.
    pub yaw_deg: f64,
    #[serde(default)]
    pub frames: usize,
}

/// A start/goal pair replayed identically for every method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trial {
    pub start: [f64; 2],
    pub goal: [f64; 2],
}

fn default_wall_height() -> f64 {
    2.5
}

fn default_mount_height() -> f64 {
    0.3
}

/// On-disk scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Defaults to `room` when absent.
    #[serde(default)]
    pub bounds: Option<Rect>,
    /// Adds the four walls of this rectangle.
    #[serde(default)]
    pub room: Option<Rect>,
    #[serde(default = "default_wall_height")]
    pub wall_height: f64,
    #[serde(default)]
    pub walls: Vec<Segment>,
    #[serde(default)]
    pub boxes: Vec<BoxObstacle>,
    #[serde(default)]
    pub glare_patches: Vec<GlarePatch>,
    #[serde(default)]
    pub camera: CameraIntrinsics,
    #[serde(default = "default_mount_height")]
    pub mount_height: f64,
    #[serde(default)]
    pub corruption: CorruptionParams,
    pub trajectory: Vec<Keyframe>,
    #[serde(default)]
    pub trials: Vec<Trial>,
}

const BUNDLED: &[(&str, &str)] = &[
    ("reflective_corridor", include_str!("../../scenarios/reflective_corridor.json")),
    ("glossy_room", include_str!("../../scenarios/glossy_room.json")),
    ("training_hall", include_str!("../../scenarios/training_hall.json")),
];

/// Names of the scenarios compiled into the library.
pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

impl ScenarioConfig {
    /// Parses JSON; errors name the offending key path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::config(if key == "." { "scenario".into() } else { key }, e.inner().to_string())
        })?;
        Ok(cfg)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let canonical = if name == "corridor" { "reflective_corridor" } else { name };
        match BUNDLED.iter().find(|(n, _)| *n == canonical) {
            Some((_, text)) => Self::from_json(text),
            None => Err(Error::config(
                "scenario",
                format!("unknown scenario `{name}`; bundled: {}", bundled_names().join(", ")),
            )),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config { key, message } => Error::config(key, format!("{message} (in {})", path.display())),
            other => other,
        })
    }

    /// Resolves a bundled scenario name, or reads a file when the argument
    /// looks like a path.
    pub fn load(name_or_path: &str) -> Result<Self> {
        let looks_like_path = name_or_path.contains('/') || name_or_path.ends_with(".json");
        if looks_like_path {
            Self::from_file(Path::new(name_or_path))
        } else {
            Self::bundled(name_or_path)
        }
    }

    /// Poses of the full trajectory at the configured mount height.
    pub fn poses(&self) -> Result<Vec<Pose>> {
        let Some(first) = self.trajectory.first() else {
            return Err(Error::config("trajectory", "needs at least one keyframe"));
        };
        let z = self.mount_height;
        let mut out = vec![Pose::new(first.x, first.y, first.yaw_deg.to_radians(), z)];
        for (i, pair) in self.trajectory.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            if b.frames == 0 {
                return Err(Error::config(format!("trajectory[{}].frames", i + 1), "must be positive"));
            }
            for k in 1..=b.frames {
                let s = k as f64 / b.frames as f64;
                out.push(Pose::new(
                    a.x + s * (b.x - a.x),
                    a.y + s * (b.y - a.y),
                    (a.yaw_deg + s * (b.yaw_deg - a.yaw_deg)).to_radians(),
                    z,
                ));
            }
        }
        Ok(out)
    }
}

/// Picks `n` poses evenly spaced by index, keeping both ends.
pub fn resample(poses: &[Pose], n: usize) -> Vec<Pose> {
    if n == 0 || poses.is_empty() {
        return Vec::new();
    }
    if n == 1 {
        return vec![poses[0]];
    }
    let last = poses.len() - 1;
    (0..n).map(|i| poses[(i * last + (n - 1) / 2) / (n - 1)]).collect()
}

/// Builds and validates the world described by a scenario.
pub fn build_world(cfg: &ScenarioConfig) -> Result<World> {
    let bounds = cfg
        .bounds
        .or(cfg.room)
        .ok_or_else(|| Error::config("bounds", "either `bounds` or `room` is required"))?;
    let mut walls = cfg.room.as_ref().map(room_walls).unwrap_or_default();
    walls.extend(cfg.walls.iter().copied());
    let world = World {
        bounds,
        wall_height: cfg.wall_height,
        walls,
        boxes: cfg.boxes.clone(),
        glare_patches: cfg.glare_patches.clone(),
    };
    world.validate()?;
    cfg.camera.validate()?;
    cfg.corruption.validate()?;
    if !(cfg.mount_height > 0.0 && cfg.mount_height < cfg.wall_height) {
        return Err(Error::config("mount_height", "must lie strictly between the floor and the wall top"));
    }
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EMPTY_ROOM: &str = r#"{
        "name": "empty",
        "room": {"min": [0, 0], "max": [12, 12]},
        "trajectory": [{"x": 6, "y": 6, "yaw_deg": 0}]
    }"#;

    #[test]
    fn empty_room_has_four_walls() {
        let cfg = ScenarioConfig::from_json(EMPTY_ROOM).unwrap();
        let w = build_world(&cfg).unwrap();
        assert_eq!(w.walls.len(), 4);
        assert!(w.boxes.is_empty());
    }

    #[test]
    fn patch_over_box_is_rejected() {
        let mut cfg = ScenarioConfig::from_json(EMPTY_ROOM).unwrap();
        cfg.boxes.push(BoxObstacle {
            footprint: Rect { min: [2.0, 2.0], max: [3.0, 3.0] },
            z_min: 0.0,
            z_max: 1.0,
        });
        cfg.glare_patches.push(GlarePatch {
            region: Rect { min: [2.5, 2.5], max: [4.0, 4.0] },
            severity: crate::frame::Severity::L2,
        });
        let err = build_world(&cfg).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "glare_patches[0]"), "{err}");
    }

    #[test]
    fn malformed_key_is_named() {
        let text = EMPTY_ROOM.replace(r#""max": [12, 12]"#, r#""max": "wide""#);
        match ScenarioConfig::from_json(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "room.max"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn keyframes_interpolate_inclusive() {
        let mut cfg = ScenarioConfig::from_json(EMPTY_ROOM).unwrap();
        cfg.trajectory.push(Keyframe { x: 8.0, y: 6.0, yaw_deg: 90.0, frames: 4 });
        let p = cfg.poses().unwrap();
        assert_eq!(p.len(), 5);
        assert!((p[2].x - 7.0).abs() < 1e-12);
        assert!((p[4].yaw - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn resample_keeps_endpoints() {
        let poses: Vec<Pose> = (0..10).map(|i| Pose::new(i as f64, 0.0, 0.0, 0.3)).collect();
        let r = resample(&poses, 4);
        assert_eq!(r.len(), 4);
        assert_eq!(r[0].x, 0.0);
        assert_eq!(r[3].x, 9.0);
    }
}
