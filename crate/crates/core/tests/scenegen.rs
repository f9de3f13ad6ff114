use proptest::prelude::*;
use rgf_core::frame::SeverityMask;
use rgf_core::scenegen::{
    apply_corruption, build_world, generate_sequence, read_manifest, render_frame, resample, simulate_sequence, CameraIntrinsics,
    CorruptionParams, PixelFate, Pose, Rect, ScenarioConfig, Segment, World,
};
use rgf_core::{DepthFrame, Severity, RANGE_MAX, RANGE_MIN};

fn open_room(walls: Vec<Segment>) -> World {
    World {
        bounds: Rect { min: [-50.0, -50.0], max: [50.0, 50.0] },
        wall_height: 2.5,
        walls,
        boxes: Vec::new(),
        glare_patches: Vec::new(),
    }
}

/// Depth along the optical axis where the ray through `(u, v)` meets `s`,
/// solved in the ground plane.
fn analytic_depth(pose: &Pose, cam: &CameraIntrinsics, u: usize, v: usize, s: &Segment) -> Option<f64> {
    let a = (u as f64 - cam.cx) / cam.fx;
    let b = (v as f64 - cam.cy) / cam.fy;
    let (sy, cy) = pose.yaw.sin_cos();
    // ground direction of the camera ray per unit optical depth
    let d = [cy + sy * a, sy - cy * a];
    let e = [s.b[0] - s.a[0], s.b[1] - s.a[1]];
    let det = d[0] * (-e[1]) - d[1] * (-e[0]);
    if det.abs() < 1e-12 {
        return None;
    }
    let r = [s.a[0] - pose.x, s.a[1] - pose.y];
    let t = (r[0] * (-e[1]) - r[1] * (-e[0])) / det;
    let k = (d[0] * r[1] - d[1] * r[0]) / det;
    let z = pose.z - b * t;
    (t > 0.0 && (0.0..=1.0).contains(&k) && (0.0..=2.5).contains(&z)).then_some(t)
}

#[test]
fn oblique_wall_matches_intersection() {
    let cam = CameraIntrinsics::default();
    let ang = 30f64.to_radians();
    let wall = Segment {
        a: [3.0 - 4.0 * ang.sin(), -4.0 * ang.cos()],
        b: [3.0 + 4.0 * ang.sin(), 4.0 * ang.cos()],
    };
    let pose = Pose::new(0.0, 0.0, 0.0, 1.0);
    let f = render_frame(&open_room(vec![wall]), &pose, &cam).unwrap();
    let mut checked = 0;
    for &(u, v) in &[(20usize, 40usize), (64, 48), (100, 30), (30, 60)] {
        let expect = analytic_depth(&pose, &cam, u, v, &wall).unwrap();
        let got = f.depth.at(u, v).unwrap();
        assert!((got - expect).abs() < 1e-6, "({u},{v}): {got} vs {expect}");
        checked += 1;
    }
    assert_eq!(checked, 4);
}

proptest! {
    #[test]
    fn renderer_matches_oracle_on_random_walls(
        cx in 2.0f64..6.0, cy in -2.0f64..2.0, ang in 0.0f64..std::f64::consts::PI, half in 1.0f64..5.0,
        yaw in -0.5f64..0.5, u in 0usize..128, v in 30usize..66,
    ) {
        let wall = Segment {
            a: [cx - half * ang.cos(), cy - half * ang.sin()],
            b: [cx + half * ang.cos(), cy + half * ang.sin()],
        };
        let cam = CameraIntrinsics::default();
        let pose = Pose::new(0.0, 0.0, yaw, 1.0);
        let f = render_frame(&open_room(vec![wall]), &pose, &cam).unwrap();
        let got = f.depth.at(u, v);
        match analytic_depth(&pose, &cam, u, v, &wall) {
            Some(t) if t > RANGE_MIN + 1e-6 && t < RANGE_MAX - 1e-6 => {
                // a grazing ray can also reach the floor first
                if let Some(g) = got {
                    prop_assert!(g <= t + 1e-6);
                    if (g - t).abs() > 1e-6 {
                        let b = (v as f64 - cam.cy) / cam.fy;
                        prop_assert!(b > 0.0 && (pose.z / b - g).abs() < 1e-6, "depth {g} is neither wall {t} nor floor");
                    }
                }
            }
            _ => {}
        }
    }
}

#[test]
fn bundled_corridor_has_one_central_panel() {
    let cfg = ScenarioConfig::load("corridor").unwrap();
    let world = build_world(&cfg).unwrap();
    let patches: Vec<_> = world.glare_patches.iter().filter(|p| p.severity == Severity::L2).collect();
    assert_eq!(patches.len(), 1);
    let r = &patches[0].region;
    let (x0, x1) = (world.bounds.min[0], world.bounds.max[0]);
    let third = (x1 - x0) / 3.0;
    assert!(r.min[0] >= x0 + third && r.max[0] <= x1 - third, "patch {r:?} outside the middle third");
    assert!(!cfg.trials.is_empty());
}

#[test]
fn l2_hole_fraction_is_binomial() {
    let (w, h) = (400, 250);
    let clean = DepthFrame::from_depths(w, h, &vec![3.0; w * h]).unwrap();
    let mask = SeverityMask::uniform(w, h, Severity::L2);
    let params = CorruptionParams::default().with_seed(17);
    let (_, fates) = apply_corruption(&clean, &mask, &params, 0).unwrap();
    let holes = fates.iter().filter(|&&f| f == PixelFate::Hole).count() as f64 / fates.len() as f64;
    let p = params.hole_prob[2];
    // 3 sigma of the binomial, well inside the 0.01 band
    assert!((holes - p).abs() < 3.0 * (p * (1.0 - p) / fates.len() as f64).sqrt(), "{holes}");
    assert!((holes - p).abs() < 0.01);
}

#[test]
fn hole_counts_grow_with_severity() {
    let cfg = ScenarioConfig::load("corridor").unwrap();
    let base = build_world(&cfg).unwrap();
    let poses = resample(&cfg.poses().unwrap(), 4);
    let params = cfg.corruption.clone().with_seed(9);
    let holes: Vec<usize> = Severity::ALL
        .iter()
        .map(|&l| {
            let frames = simulate_sequence(&base.with_patch_severity(l), &poses, &cfg.camera, &params).unwrap();
            frames.iter().map(|f| f.depth.len() - f.depth.valid_count()).sum()
        })
        .collect();
    assert!(holes[0] <= holes[1] && holes[1] <= holes[2], "{holes:?}");
    assert!(holes[2] > holes[0]);
}

#[test]
fn valid_depths_stay_in_range() {
    let cfg = ScenarioConfig::load("glossy_room").unwrap();
    let world = build_world(&cfg).unwrap().with_patch_severity(Severity::L2);
    let poses = resample(&cfg.poses().unwrap(), 5);
    for f in simulate_sequence(&world, &poses, &cfg.camera, &cfg.corruption).unwrap() {
        for d in [&f.depth, &f.clean] {
            for i in 0..d.len() {
                if let Some(v) = d.get(i) {
                    assert!((RANGE_MIN..=RANGE_MAX).contains(&v));
                }
            }
        }
    }
}

#[test]
fn ten_poses_give_ten_frames_and_identical_reruns() {
    let cfg = ScenarioConfig::load("corridor").unwrap();
    let world = build_world(&cfg).unwrap();
    let poses = resample(&cfg.poses().unwrap(), 10);
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let params = cfg.corruption.clone().with_seed(5);
    let m = generate_sequence(&a, &cfg, &world, &poses, None, &params).unwrap();
    generate_sequence(&b, &cfg, &world, &poses, None, &params).unwrap();
    assert_eq!(m.frames.len(), 10);
    for e in &m.frames {
        for name in [&e.rgb, &e.depth, &e.clean, &e.severity, &e.pose] {
            assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
        }
    }
    assert_eq!(std::fs::read(a.join("manifest.json")).unwrap(), std::fs::read(b.join("manifest.json")).unwrap());
}

#[test]
fn manifest_severities_match_emitted_masks() {
    let cfg = ScenarioConfig::load("corridor").unwrap();
    let world = build_world(&cfg).unwrap();
    let poses = resample(&cfg.poses().unwrap(), 100);
    let tmp = tempfile::tempdir().unwrap();
    generate_sequence(tmp.path(), &cfg, &world, &poses, None, &cfg.corruption).unwrap();
    let m = read_manifest(tmp.path()).unwrap();
    assert_eq!(m.frames.len(), 100);
    let mut saw_glare = false;
    for e in &m.frames {
        let img = rgf_core::pnm::read_pnm(&tmp.path().join(&e.severity)).unwrap();
        let rgf_core::pnm::PnmImage::Gray8 { data, .. } = img else {
            panic!("severity mask is 8-bit gray");
        };
        let mut counts = [0usize; 3];
        for g in data {
            let l = Severity::ALL.into_iter().find(|l| l.gray() == g).expect("gray level names a severity");
            counts[l.index()] += 1;
        }
        assert_eq!(counts, e.severity_pixels);
        let max = Severity::ALL.into_iter().rev().find(|l| counts[l.index()] > 0).unwrap();
        assert_eq!(max, e.max_severity);
        saw_glare |= max > Severity::L0;
    }
    assert!(saw_glare);
}
