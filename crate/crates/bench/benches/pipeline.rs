use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{Matrix3, Vector3};
use recurdepth::completion::{cspn_refine, run_sequence, spatial_complete, PipelineConfig};
use recurdepth::geometry::warp_depth;
use recurdepth::kitti::{project_lidar, CalibBundle};
use recurdepth::synth::{make_sequence, simulate_scan, BeamModel, LidarPattern, SceneSpec, SyntheticSequence, Trajectory};
use recurdepth::{Grid, Intrinsics, RigidTransform};

fn street(frames: usize) -> SyntheticSequence {
    let trajectory = Trajectory::from_generator(&format!("forward:{frames}:0.5")).unwrap();
    make_sequence(&SceneSpec::street(1), &trajectory, &Intrinsics::kitti_cropped(), &LidarPattern::default(), 1).unwrap()
}

fn warp(c: &mut Criterion) {
    let seq = street(2);
    let k = seq.intrinsics;
    let mut group = c.benchmark_group("warp_depth");
    for (name, map) in [("sparse", &seq.frames[0].sparse), ("dense", &seq.frames[0].groundtruth)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), map, |b, m| {
            b.iter(|| warp_depth(black_box(m), &k, &seq.poses_to_next[0]).unwrap())
        });
    }
    group.finish();
}

fn lidar(c: &mut Criterion) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/2011_09_26");
    let calib = CalibBundle::read_dir(dir, 2).unwrap();
    let axes = Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0);
    let mount = RigidTransform::new(axes, Vector3::new(0.0, 1.65 - 1.73, 0.0)).unwrap();
    let scan = simulate_scan(&SceneSpec::street(1), &mount, &BeamModel::hdl64e());
    c.bench_function("project_lidar", |b| b.iter(|| project_lidar(black_box(&scan.cloud), &calib)));
}

fn completion(c: &mut Criterion) {
    let seq = street(1);
    let frame = &seq.frames[0];
    let cfg = PipelineConfig::default();
    let (w, h) = frame.sparse.dims();
    let weights = Grid::filled(w, h, 1.0);
    c.bench_function("spatial_complete", |b| {
        b.iter(|| spatial_complete(black_box(&frame.sparse), &weights, &cfg).unwrap())
    });
    let coarse = spatial_complete(&frame.sparse, &weights, &cfg).unwrap();
    c.bench_function("cspn_refine", |b| {
        b.iter(|| cspn_refine(black_box(&coarse), &frame.guide, &frame.sparse, &cfg).unwrap())
    });
}

fn sequence(c: &mut Criterion) {
    let seq = street(5).to_sequence();
    let cfg = PipelineConfig::default();
    let mut group = c.benchmark_group("run_sequence_5_frames");
    group.sample_size(10);
    for temporal in [false, true] {
        group.bench_with_input(BenchmarkId::from_parameter(temporal), &temporal, |b, &t| {
            b.iter(|| run_sequence(&seq, &cfg, t).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, warp, lidar, completion, sequence);
criterion_main!(benches);
