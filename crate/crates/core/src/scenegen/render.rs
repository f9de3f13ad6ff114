use crate::error::{Error, Result};
use crate::frame::{DepthFrame, RgbFrame, Severity, SeverityMask};

use super::camera::{CameraIntrinsics, Pose};
use super::world::{Segment, World, GEOM_EPS};

/// Edge length of the surface tiles that key world-anchored corruption.
pub const SURFACE_TILE: f64 = 0.2;

/// Surface key for rays that hit nothing.
pub const NO_SURFACE: u64 = 0;

/// Everything the renderer knows about one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub rgb: RgbFrame,
    pub depth: DepthFrame,
    pub severity: SeverityMask,
    /// Per-pixel surface tile key, `NO_SURFACE` for escaped rays.
    pub surfaces: Vec<u64>,
}

#[derive(Debug, Clone, Copy)]
enum Surface {
    Floor,
    Ceiling,
    Wall { index: usize, along: f64 },
    BoxFace { index: usize, along: f64 },
    BoxCap { index: usize },
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    t: f64,
    point: [f64; 3],
    cos_incidence: f64,
    surface: Surface,
}

/// Renders clean RGB and depth for one pose.
pub fn render_clean_frame(
    world: &World,
    pose: &Pose,
    intrinsics: &CameraIntrinsics,
) -> Result<(RgbFrame, DepthFrame)> {
    let f = render_frame(world, pose, intrinsics)?;
    Ok((f.rgb, f.depth))
}

/// Renders one pose, also returning the glare severity and surface tile of
/// every pixel.
pub fn render_frame(world: &World, pose: &Pose, intrinsics: &CameraIntrinsics) -> Result<RenderedFrame> {
    intrinsics.validate()?;
    if !world.bounds.contains(pose.x, pose.y, 0.0) {
        return Err(Error::Domain(format!(
            "pose ({:.3}, {:.3}) outside world bounds",
            pose.x, pose.y
        )));
    }
    if !(pose.z > 0.0 && pose.z < world.wall_height) {
        return Err(Error::Domain(format!("camera height {} outside (0, wall_height)", pose.z)));
    }
    let (w, h) = (intrinsics.width, intrinsics.height);
    let mut rgb = RgbFrame::new(w, h);
    let mut depth = DepthFrame::invalid(w, h);
    let mut levels = vec![Severity::L0; w * h];
    let mut surfaces = vec![NO_SURFACE; w * h];
    let origin = [pose.x, pose.y, pose.z];
    for v in 0..h {
        for u in 0..w {
            let i = v * w + u;
            let a = (u as f64 - intrinsics.cx) / intrinsics.fx;
            let b = (v as f64 - intrinsics.cy) / intrinsics.fy;
            let dir = pose.rotate([a, b, 1.0]);
            match cast(world, origin, dir) {
                Some(hit) => {
                    let level = match hit.surface {
                        Surface::Ceiling => Severity::L0,
                        _ => world.severity_at(hit.point[0], hit.point[1]),
                    };
                    depth.set(i, Some(hit.t));
                    levels[i] = level;
                    surfaces[i] = surface_key(&hit);
                    rgb.set(i, shade(&hit, level));
                }
                None => rgb.set(i, SKY),
            }
        }
    }
    Ok(RenderedFrame {
        rgb,
        depth,
        severity: SeverityMask::from_levels(w, h, levels)?,
        surfaces,
    })
}

const SKY: [f64; 3] = [0.08, 0.08, 0.10];

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Ray parameter and position along `seg` (as a fraction) where the
/// ground-plane projection of the ray crosses it.
fn hit_segment(origin: [f64; 3], dir: [f64; 3], seg: &Segment) -> Option<(f64, f64)> {
    let e = [seg.b[0] - seg.a[0], seg.b[1] - seg.a[1]];
    let hd = [dir[0], dir[1]];
    let denom = cross(hd, e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ao = [seg.a[0] - origin[0], seg.a[1] - origin[1]];
    let t = cross(ao, e) / denom;
    let s = cross(ao, hd) / denom;
    (t > 1e-9 && (-1e-12..=1.0 + 1e-12).contains(&s)).then_some((t, s))
}

fn vertical_hit(origin: [f64; 3], dir: [f64; 3], seg: &Segment, z_lo: f64, z_hi: f64) -> Option<(f64, f64, [f64; 3], f64)> {
    let (t, s) = hit_segment(origin, dir, seg)?;
    let z = origin[2] + t * dir[2];
    if z < z_lo || z > z_hi {
        return None;
    }
    let point = [origin[0] + t * dir[0], origin[1] + t * dir[1], z];
    let len = seg.length();
    let n = [-(seg.b[1] - seg.a[1]) / len, (seg.b[0] - seg.a[0]) / len];
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let cos = (n[0] * dir[0] + n[1] * dir[1]).abs() / norm;
    Some((t, s * len, point, cos))
}

fn cast(world: &World, origin: [f64; 3], dir: [f64; 3]) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    let mut offer = |hit: Hit| {
        if best.is_none_or(|b| hit.t < b.t) {
            best = Some(hit);
        }
    };
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if dir[2] < 0.0 {
        let t = -origin[2] / dir[2];
        offer(Hit {
            t,
            point: [origin[0] + t * dir[0], origin[1] + t * dir[1], 0.0],
            cos_incidence: -dir[2] / norm,
            surface: Surface::Floor,
        });
    }
    if dir[2] > 0.0 {
        let t = (world.wall_height - origin[2]) / dir[2];
        offer(Hit {
            t,
            point: [origin[0] + t * dir[0], origin[1] + t * dir[1], world.wall_height],
            cos_incidence: dir[2] / norm,
            surface: Surface::Ceiling,
        });
    }
    for (index, seg) in world.walls.iter().enumerate() {
        if let Some((t, along, point, cos)) = vertical_hit(origin, dir, seg, 0.0, world.wall_height) {
            offer(Hit {
                t,
                point,
                cos_incidence: cos,
                surface: Surface::Wall { index, along },
            });
        }
    }
    for (bi, bx) in world.boxes.iter().enumerate() {
        for (fi, face) in bx.faces().iter().enumerate() {
            if let Some((t, along, point, cos)) = vertical_hit(origin, dir, face, bx.z_min, bx.z_max) {
                offer(Hit {
                    t,
                    point,
                    cos_incidence: cos,
                    surface: Surface::BoxFace { index: bi * 4 + fi, along },
                });
            }
        }
        for cap in [bx.z_min, bx.z_max] {
            if dir[2].abs() < 1e-15 || cap <= 0.0 {
                continue;
            }
            let t = (cap - origin[2]) / dir[2];
            if t <= 1e-9 {
                continue;
            }
            let p = [origin[0] + t * dir[0], origin[1] + t * dir[1], cap];
            if bx.footprint.contains(p[0], p[1], GEOM_EPS) {
                offer(Hit {
                    t,
                    point: p,
                    cos_incidence: dir[2].abs() / norm,
                    surface: Surface::BoxCap { index: bi },
                });
            }
        }
    }
    best
}

/// 64-bit mix used for deterministic hashing of small integer tuples.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_of(parts: &[i64]) -> u64 {
    let mut h = 0x5EED_u64;
    for &p in parts {
        h = mix64(h ^ p as u64);
    }
    h.max(1)
}

fn tile(v: f64) -> i64 {
    (v / SURFACE_TILE).floor() as i64
}

fn surface_key(hit: &Hit) -> u64 {
    match hit.surface {
        Surface::Floor => key_of(&[1, tile(hit.point[0]), tile(hit.point[1])]),
        Surface::Ceiling => key_of(&[5, tile(hit.point[0]), tile(hit.point[1])]),
        Surface::Wall { index, along } => key_of(&[2, index as i64, tile(along)]),
        Surface::BoxFace { index, along } => key_of(&[3, index as i64, tile(along)]),
        Surface::BoxCap { index } => key_of(&[4, index as i64, tile(hit.point[0]), tile(hit.point[1])]),
    }
}

/// Blend toward white applied to glare surfaces.
fn glare_blend(level: Severity) -> f64 {
    match level {
        Severity::L0 => 0.0,
        Severity::L1 => 0.75,
        Severity::L2 => 0.92,
    }
}

fn shade(hit: &Hit, level: Severity) -> [f64; 3] {
    let base = match hit.surface {
        Surface::Floor => [0.46, 0.42, 0.38],
        Surface::Ceiling => [0.80, 0.80, 0.78],
        Surface::Wall { .. } => [0.72, 0.70, 0.64],
        Surface::BoxFace { .. } | Surface::BoxCap { .. } => [0.55, 0.38, 0.24],
    };
    let lambert = 0.55 + 0.45 * hit.cos_incidence.clamp(0.0, 1.0);
    let g = glare_blend(level);
    base.map(|c| c * lambert * (1.0 - g) + g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegen::world::{room_walls, Rect};

    fn room(size: f64) -> World {
        let bounds = Rect { min: [0.0, 0.0], max: [size, size] };
        World {
            bounds,
            wall_height: 2.5,
            walls: room_walls(&bounds),
            boxes: vec![],
            glare_patches: vec![],
        }
    }

    #[test]
    fn perpendicular_wall_depth() {
        let w = room(12.0);
        let k = CameraIntrinsics::default();
        let pose = Pose::new(10.0, 6.0, 0.0, 0.3);
        let (_, d) = render_clean_frame(&w, &pose, &k).unwrap();
        let c = d.at(k.cx as usize, k.cy as usize).unwrap();
        assert!((c - 2.0).abs() < 1e-9, "{c}");
    }

    #[test]
    fn escaped_ray_is_invalid() {
        let bounds = Rect { min: [0.0, 0.0], max: [30.0, 30.0] };
        let w = World {
            bounds,
            wall_height: 2.5,
            walls: vec![],
            boxes: vec![],
            glare_patches: vec![],
        };
        let k = CameraIntrinsics::default();
        let (_, d) = render_clean_frame(&w, &Pose::new(1.0, 1.0, 0.0, 0.3), &k).unwrap();
        // the horizon row never meets floor or ceiling
        assert!(d.at(10, 48).is_none() && d.at(64, 48).is_none());
        assert!(d.at(64, 0).is_some() && d.at(64, 95).is_some());
    }

    #[test]
    fn pose_outside_bounds_is_domain_error() {
        let w = room(4.0);
        let r = render_clean_frame(&w, &Pose::new(5.0, 1.0, 0.0, 0.3), &CameraIntrinsics::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn glare_pixels_are_near_saturated() {
        let mut w = room(12.0);
        w.glare_patches.push(crate::scenegen::world::GlarePatch {
            region: Rect { min: [11.0, 0.0], max: [12.0, 12.0] },
            severity: Severity::L2,
        });
        let k = CameraIntrinsics::default();
        let f = render_frame(&w, &Pose::new(10.0, 6.0, 0.0, 0.3), &k).unwrap();
        let i = 48 * k.width + 64;
        assert_eq!(f.severity.get(i), Severity::L2);
        assert!(f.rgb.get(i).iter().all(|&c| c > 0.9));
    }
}
