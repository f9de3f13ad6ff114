use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rgf_core::baselines::naive_weights;
use rgf_core::evalsuite::{astar, gt_costmap};
use rgf_core::gridfusion::{CellState, FusionParams, GridSpec, OccupancyGrid};
use rgf_core::harness::simulate_scenario;
use rgf_core::reliability::drm::{drm_forward, temporal_diff, DrmModel, DrmNet, DrmSchedule};
use rgf_core::reliability::{heuristic_reliability, TargetMode};
use rgf_core::scenegen::{build_world, ScenarioConfig};
use rgf_core::Severity;

fn benches(c: &mut Criterion) {
    let scenario = ScenarioConfig::load("reflective_corridor").expect("bundled scenario");
    let (_, frames) = simulate_scenario(&scenario, Some(Severity::L2), 1, Some(4)).expect("simulation");
    let f = &frames[1];
    let tdiff = temporal_diff(&f.depth, Some(&frames[0].depth)).unwrap();

    let model = DrmModel::new(DrmNet::init(DrmSchedule::default(), 0), 0, TargetMode::Binary, [128, 96], 0);
    c.bench_function("drm_forward_128x96", |b| b.iter(|| drm_forward(&model, black_box(&f.rgb), black_box(&f.depth), &tdiff).unwrap()));
    c.bench_function("heuristic_128x96", |b| {
        b.iter(|| heuristic_reliability(black_box(&f.rgb), black_box(&f.depth), Some(&frames[0].depth)).unwrap())
    });

    let weights = naive_weights(&f.depth);
    let params = FusionParams::default();
    let spec = GridSpec::default();
    c.bench_function("fuse_frame", |b| {
        let mut grid = OccupancyGrid::new(spec).unwrap();
        b.iter(|| grid.fuse_frame(black_box(&f.depth), &weights, &f.pose, &scenario.camera, &params).unwrap())
    });

    let world = build_world(&scenario).unwrap();
    let gt = gt_costmap(&world, &spec, 0.55).unwrap();
    let passable: Vec<bool> = gt.as_costmap().states().iter().map(|&s| s == CellState::Free).collect();
    let trial = &scenario.trials[0];
    let (s, g) = (spec.cell_of(trial.start[0], trial.start[1]).unwrap(), spec.cell_of(trial.goal[0], trial.goal[1]).unwrap());
    let (s, g) = (spec.index(s.0, s.1), spec.index(g.0, g.1));
    c.bench_function("astar_gt", |b| b.iter(|| astar(black_box(&passable), &spec, s, g)));
}

criterion_group!(pipeline, benches);
criterion_main!(pipeline);
