//! End-to-end acceptance checks. Runs as a plain binary so the per-criterion
//! lines always reach the console; exits nonzero if any criterion fails.
//!
//! Set `KITTI_VELODYNE_DIR` to a directory of velodyne `.bin` sweeps (and
//! optionally `KITTI_CALIB_DIR` to their calibration) to measure lidar
//! density on real frames instead of simulated sweeps.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use recurdepth::completion::{run_sequence, PipelineConfig, SequenceRun};
use recurdepth::eval::{block_error_diff, metrics, per_frame_rmse};
use recurdepth::geometry::{warp_backward, warp_depth};
use recurdepth::kitti::{
    decode_depth_png_bytes, encode_depth_png, project_lidar, read_velodyne_bin, relative_camera_pose, world_poses,
    CalibBundle, OxtsRecord,
};
use recurdepth::synth::{make_sequence, render_depth, simulate_scan, BeamModel, LidarPattern, SceneSpec, Trajectory};
use recurdepth::{DepthMap, Grid, Intrinsics, RigidTransform};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn warp_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let k = Intrinsics::kitti_cropped();
    let maps: Vec<DepthMap> = (0..100)
        .map(|_| {
            let density = rng.gen_range(0.02..1.0);
            random_depth(&mut rng, k.width(), k.height(), density, 0.5, 120.0)
        })
        .collect();
    let start = Instant::now();
    let mut exact = 0;
    for d in &maps {
        let (out, _) = warp_depth(d, &k, &RigidTransform::identity()).unwrap();
        let same = out.as_slice().iter().zip(d.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
        exact += same as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        exact == 100 && secs < 5.0,
        format!("{exact}/100 maps bit-exact at 1216x352 in {secs:.2} s (limit 5 s)"),
    )
}

fn warp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let k = Intrinsics::new(300.0, 300.0, 159.5, 119.5, 320, 240).unwrap();
    let mut agree = 0;
    for case in 0..50 {
        let d = if case % 2 == 0 {
            let density = rng.gen_range(0.05..1.0);
            random_depth(&mut rng, 320, 240, density, 1.0, 60.0)
        } else {
            // dense smooth fields under strong motion force many collisions
            smooth_depth(320, 240, rng.gen_range(3.0..10.0), 0.01, 0.02)
        };
        let pose = random_pose(&mut rng, 0.15, 1.5);
        let (out, corr) = warp_depth(&d, &k, &pose).unwrap();
        let (reference, winners) = sequential_warp(&d, &k, &pose);
        let bits = out.as_slice().iter().zip(reference.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
        let win = corr.winners().iter().zip(&winners).all(|(a, b)| a.map(|s| s as usize) == *b);
        agree += (bits && win) as usize;
    }
    outcome(agree == 50, format!("{agree}/50 cases bit-identical to the sequential loop (depth and winners)"))
}

fn warp_render() -> Outcome {
    let k = Intrinsics::kitti_cropped();
    let mut worst_frac = f64::INFINITY;
    let mut worst_median: f64 = 0.0;
    let mut all_pass = true;
    for i in 0..10u64 {
        let scene = SceneSpec::street(100 + i);
        let traj = if i % 2 == 0 {
            Trajectory::straight(3, 1.0)
        } else {
            Trajectory::turning(3, 0.8, 3f64.to_radians())
        };
        let gts: Vec<DepthMap> = traj.poses.iter().map(|p| render_depth(&scene, p, &k)).collect();
        for (t, pose) in traj.relative_poses().iter().enumerate() {
            let (warped, _) = warp_depth(&gts[t], &k, pose).unwrap();
            let mut errs: Vec<f64> = warped
                .as_slice()
                .iter()
                .zip(gts[t + 1].as_slice())
                .filter(|(w, g)| **w > 0.0 && **g > 0.0)
                .map(|(w, g)| (w - g).abs())
                .collect();
            let frac = errs.iter().filter(|&&e| e <= 0.1).count() as f64 / errs.len() as f64;
            let med = median(&mut errs);
            all_pass &= frac >= 0.9 && med < 0.05;
            worst_frac = worst_frac.min(frac);
            worst_median = worst_median.max(med);
        }
    }
    outcome(
        all_pass,
        format!(
            "10 scenes x 2 steps: worst within-0.1 m fraction {:.2}% (need >= 90%), worst median {:.4} m (need < 0.05)",
            100.0 * worst_frac,
            worst_median
        ),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let k = small_k();
    let (mut good, mut total) = (0usize, 0usize);
    for _ in 0..20 {
        let base = smooth_depth(96, 64, rng.gen_range(4.0..20.0), rng.gen_range(-0.02..0.02), 0.01);
        let d = map_valid(&base, |v| v * (1.0 + rng.gen_range(-0.01..0.01)));
        let pose = random_pose(&mut rng, 0.05, 0.3);
        let (_, corr) = warp_depth(&d, &k, &pose).unwrap();
        let grad = warp_backward(&Grid::filled(96, 64, 1.0), &corr).unwrap();
        let step = |s: f64| map_valid(&d, |v| v * (1.0 + s));
        let h = 1e-6;
        let (plus, cp) = warp_depth(&step(h), &k, &pose).unwrap();
        let (minus, cm) = warp_depth(&step(-h), &k, &pose).unwrap();
        for t in 0..96 * 64 {
            let Some(s) = corr.winner(t) else { continue };
            if cp.winner(t) != Some(s) || cm.winner(t) != Some(s) {
                continue;
            }
            let hs = h * d.as_slice()[s];
            let fd = (plus.as_slice()[t] - minus.as_slice()[t]) / (2.0 * hs);
            let g = grad.as_slice()[s];
            total += 1;
            good += ((fd - g).abs() <= 1e-4 * g.abs().max(1e-12)) as usize;
        }
    }
    let frac = good as f64 / total as f64;
    outcome(
        frac >= 0.99 && total > 0,
        format!("{good}/{total} stable-winner pixels within 1e-4 relative ({:.3}%, need >= 99%)", 100.0 * frac),
    )
}

fn pose_math() -> Outcome {
    let calib = CalibBundle::read_dir(calib_dir(), 2).unwrap();
    let a = OxtsRecord::read(fixture_dir().join("oxts/0000000000.txt")).unwrap();
    let b = OxtsRecord::read(fixture_dir().join("oxts/0000000001.txt")).unwrap();

    let still = world_poses(&[a.clone(), a.clone()]).unwrap();
    let zero = relative_camera_pose(&still[0], &still[1], &calib).identity_error();

    let at = |lat: f64| OxtsRecord { lat, ..a.clone() };
    let w = world_poses(&[at(49.0), at(49.0 + 1e-5)]).unwrap();
    let dist = (w[1].translation() - w[0].translation()).norm();
    let dist_ok = (dist - 1.1131).abs() <= 1.1131e-3;

    let poses = world_poses(&[a, b]).unwrap();
    let ab = relative_camera_pose(&poses[0], &poses[1], &calib);
    let ba = relative_camera_pose(&poses[1], &poses[0], &calib);
    let loop_err = ab.compose(&ba).identity_error();

    outcome(
        zero <= 1e-9 && dist_ok && loop_err <= 1e-6,
        format!(
            "zero motion {zero:.1e} (<= 1e-9); 1e-5 deg lat step {dist:.5} m (1.1131 +- 0.1%); P_ab*P_ba {loop_err:.1e} (<= 1e-6) with 2011_09_26 calibration"
        ),
    )
}

fn metrics_check() -> Outcome {
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();
    let one = |v: f64| DepthMap::from_vec(1, 1, vec![v]).unwrap();
    let m1 = metrics(&one(11.0), &one(10.0)).unwrap();
    let single = rel(m1.rmse, 1000.0) && rel(m1.mae, 1000.0) && rel(m1.irmse, 1000.0 / 110.0) && rel(m1.imae, 1000.0 / 110.0);

    let gt = DepthMap::from_vec(2, 1, vec![10.0, 20.0]).unwrap();
    let pred = DepthMap::from_vec(2, 1, vec![11.0, 18.0]).unwrap();
    let m2 = metrics(&pred, &gt).unwrap();
    // inverse errors 1/110 and 1/180 per meter
    let (i1, i2): (f64, f64) = (1000.0 / 110.0, 1000.0 / 180.0);
    let two = rel(m2.rmse, 2.5f64.sqrt() * 1000.0)
        && rel(m2.mae, 1500.0)
        && rel(m2.irmse, ((i1 * i1 + i2 * i2) / 2.0).sqrt())
        && rel(m2.imae, (i1 + i2) / 2.0);

    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut ordered = 0;
    for _ in 0..1000 {
        let density = rng.gen_range(0.1..1.0);
        let gt = random_depth(&mut rng, 24, 16, density, 1.0, 80.0);
        let pred = DepthMap::from_fn(24, 16, |_, _| rng.gen_range(0.5..90.0)).unwrap();
        if gt.valid_count() == 0 {
            ordered += 1;
            continue;
        }
        let m = metrics(&pred, &gt).unwrap();
        ordered += (m.rmse >= m.mae && m.irmse >= m.imae) as usize;
    }
    outcome(
        single && two && ordered == 1000,
        format!(
            "single pixel rmse {:.6} irmse {:.6}; two pixel rmse {:.6} (hand values to 1e-9 rel: {}); rmse >= mae on {ordered}/1000",
            m1.rmse,
            m1.irmse,
            m2.rmse,
            single && two
        ),
    )
}

struct SuiteRun {
    label: String,
    parked: bool,
    temporal: SequenceRun,
    spatial: SequenceRun,
}

fn run_suite() -> Vec<SuiteRun> {
    let k = Intrinsics::kitti_cropped();
    let cfg = PipelineConfig::default();
    let cases: Vec<(u64, f64)> = (1..=4).flat_map(|s| [(s, 0.0), (s, 0.5)]).collect();
    cases
        .into_par_iter()
        .map(|(seed, step)| {
            let syn = make_sequence(
                &SceneSpec::street(seed),
                &Trajectory::straight(20, step),
                &k,
                &LidarPattern::default(),
                seed,
            )
            .unwrap();
            let seq = syn.to_sequence();
            SuiteRun {
                label: format!("street {seed}, {step} m/frame"),
                parked: step == 0.0,
                temporal: run_sequence(&seq, &cfg, true).unwrap(),
                spatial: run_sequence(&seq, &cfg, false).unwrap(),
            }
        })
        .collect()
}

struct Benefit {
    worse_frames: Vec<usize>,
    ratio: f64,
    first_identical: bool,
}

fn benefit(r: &SuiteRun) -> Benefit {
    let t = r.temporal.rmse_curve();
    let s = r.spatial.rmse_curve();
    let worse_frames = (2..t.len()).filter(|&i| t[i] > s[i]).map(|i| i + 1).collect();
    let mean = |v: &[f64]| v[2..].iter().sum::<f64>() / (v.len() - 2) as f64;
    Benefit {
        worse_frames,
        ratio: mean(&t) / mean(&s),
        first_identical: r.temporal.frames[0].prediction == r.spatial.frames[0].prediction,
    }
}

fn temporal_benefit(suite: &[SuiteRun]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in suite.iter().filter(|r| r.parked) {
        let b = benefit(r);
        pass &= b.worse_frames.is_empty() && b.ratio <= 0.9 && b.first_identical;
        parts.push(format!(
            "{}: mean ratio {:.3}, worse frames {:?}, frame 1 identical {}",
            r.label, b.ratio, b.worse_frames, b.first_identical
        ));
    }
    outcome(pass, format!("20 frames at 6%, frames 3-20 (ratio <= 0.900): {}", parts.join("; ")))
}

fn curve_shape(suite: &[SuiteRun]) -> Outcome {
    let curves: Vec<Vec<f64>> = suite.iter().map(|r| r.temporal.rmse_curve()).collect();
    let curve = per_frame_rmse(&curves);
    let head: Vec<f64> = curve.iter().take(5).map(|&(_, v)| v).collect();
    let ok = head.len() == 5 && head.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = head.iter().map(|v| format!("{v:.1}")).collect();
    outcome(
        ok,
        format!("mean temporal RMSE over {} sequences, frames 1-5: [{}] mm", curves.len(), shown.join(", ")),
    )
}

fn density_at_frame5(r: &SuiteRun) -> f64 {
    let f = &r.temporal.frames[4];
    f.fused_density / f.sparse_density
}

fn density_accumulation(suite: &[SuiteRun]) -> Outcome {
    let ratios: Vec<(String, f64)> = suite
        .iter()
        .filter(|r| r.parked)
        .map(|r| (r.label.clone(), density_at_frame5(r)))
        .collect();
    let pass = ratios.iter().all(|(_, v)| *v >= 3.0);
    let shown: Vec<String> = ratios.iter().map(|(l, v)| format!("{l}: {v:.2}x")).collect();
    outcome(pass, format!("fused / sparse density at frame 5 (need >= 3x): {}", shown.join("; ")))
}

fn png_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let d = random_depth(&mut rng, 128, 64, 0.5, 1.0 / 256.0, 255.0);
        let back = decode_depth_png_bytes(&encode_depth_png(&d).unwrap()).unwrap();
        for (a, b) in d.as_slice().iter().zip(back.as_slice()) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= 1.0 / 512.0, format!("max error {worst:.6} m over 20 maps (<= {:.6})", 1.0 / 512.0))
}

fn real_velodyne_frames() -> Option<(Vec<PathBuf>, CalibBundle)> {
    let dir = std::env::var_os("KITTI_VELODYNE_DIR")?;
    let calib = std::env::var_os("KITTI_CALIB_DIR").map(PathBuf::from).unwrap_or_else(calib_dir);
    let mut bins: Vec<PathBuf> = std::fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    bins.sort();
    Some((bins, CalibBundle::read_dir(calib, 2).ok()?))
}

fn lidar_density() -> Outcome {
    let (source, densities) = match real_velodyne_frames() {
        Some((bins, calib)) if !bins.is_empty() => {
            let d: Vec<f64> = bins
                .iter()
                .map(|p| {
                    let scan = read_velodyne_bin(p).unwrap();
                    let full = project_lidar(&scan.cloud, &calib);
                    full.bottom_center_crop(1216, 352).unwrap().0.density()
                })
                .collect();
            (format!("{} real sweeps", d.len()), d)
        }
        _ => {
            let calib = CalibBundle::read_dir(calib_dir(), 2).unwrap();
            let mount = RigidTransform::new(lidar_axes(), Vector3::new(0.0, 1.65 - 1.73, 0.0)).unwrap();
            let d: Vec<f64> = (1..=5)
                .map(|seed| {
                    let scan = simulate_scan(&SceneSpec::street(seed), &mount, &BeamModel::hdl64e());
                    let full = project_lidar(&scan.cloud, &calib);
                    full.bottom_center_crop(1216, 352).unwrap().0.density()
                })
                .collect();
            ("5 simulated HDL-64E sweeps through the 2011_09_26 calibration".to_string(), d)
        }
    };
    let lo = densities.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = densities.iter().cloned().fold(0.0, f64::max);
    outcome(
        !densities.is_empty() && lo >= 0.04 && hi <= 0.08,
        format!("{source}: density {:.2}% to {:.2}% of 1216x352 (need 4% to 8%)", 100.0 * lo, 100.0 * hi),
    )
}

fn block_diff() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let mut anti = 0;
    for _ in 0..20 {
        let (w, h) = (rng.gen_range(10..70), rng.gen_range(10..50));
        let gt = random_depth(&mut rng, w, h, 0.3, 1.0, 80.0);
        let a = random_depth(&mut rng, w, h, 1.0, 1.0, 80.0);
        let b = random_depth(&mut rng, w, h, 1.0, 1.0, 80.0);
        let block = rng.gen_range(1..12);
        let ab = block_error_diff(&a, &b, &gt, block).unwrap();
        let ba = block_error_diff(&b, &a, &gt, block).unwrap();
        let same = ab
            .values
            .as_slice()
            .iter()
            .zip(ba.values.as_slice())
            .all(|(x, y)| match (x, y) {
                (Some(x), Some(y)) => x.to_bits() == (-y).to_bits(),
                (None, None) => true,
                _ => false,
            });
        anti += same as usize;
    }

    // 16x16, 8x8 blocks: gt 10 everywhere except an empty top-right block;
    // a is off by 1 m on the left half, b off by 2 m on the bottom row of pixels
    let gt = DepthMap::from_fn(16, 16, |x, y| if x >= 8 && y < 8 { 0.0 } else { 10.0 }).unwrap();
    let a = DepthMap::from_fn(16, 16, |x, _| if x < 8 { 11.0 } else { 10.0 }).unwrap();
    let b = DepthMap::from_fn(16, 16, |_, y| if y == 15 { 12.0 } else { 10.0 }).unwrap();
    let map = block_error_diff(&a, &b, &gt, 8).unwrap();
    let expected = [Some(1000.0), None, Some(1000.0 - 250.0), Some(-250.0)];
    let mut brute = [None; 4];
    for (i, e) in brute.iter_mut().enumerate() {
        let (bx, by) = (i % 2, i / 2);
        let (mut sa, mut sb, mut n) = (0.0, 0.0, 0);
        for y in by * 8..by * 8 + 8 {
            for x in bx * 8..bx * 8 + 8 {
                let g = *gt.get(x, y);
                if g > 0.0 {
                    sa += (a.get(x, y) - g).abs();
                    sb += (b.get(x, y) - g).abs();
                    n += 1;
                }
            }
        }
        *e = (n > 0).then(|| 1000.0 * (sa - sb) / n as f64);
    }
    let close = |x: &[Option<f64>]| {
        x.iter()
            .zip(map.values.as_slice())
            .all(|(e, v)| match (e, v) {
                (Some(e), Some(v)) => (e - v).abs() < 1e-9,
                (None, None) => true,
                _ => false,
            })
    };
    let oracle = close(&expected) && close(&brute);
    outcome(
        anti == 20 && oracle,
        format!("{anti}/20 random cases exactly antisymmetric; 16x16 hand case matches brute force: {oracle}"),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("warp identity", warp_identity()),
        ("warp oracle", warp_oracle()),
        ("warp-render consistency", warp_render()),
        ("gradient check", gradient_check()),
        ("pose math", pose_math()),
        ("metrics", metrics_check()),
    ];
    let suite = run_suite();
    results.push(("temporal benefit", temporal_benefit(&suite)));
    results.push(("per-frame curve shape", curve_shape(&suite)));
    results.push(("density accumulation", density_accumulation(&suite)));
    results.push(("io: depth png round trip", png_round_trip()));
    results.push(("io: lidar projection density", lidar_density()));
    results.push(("block diff antisymmetry", block_diff()));

    println!();
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    for r in suite.iter().filter(|r| !r.parked) {
        let b = benefit(r);
        println!(
            "INFO {}: temporal/non-temporal mean RMSE frames 3-20 {:.3}, worse frames {:?}, density at frame 5 {:.2}x",
            r.label,
            b.ratio,
            b.worse_frames,
            density_at_frame5(r)
        );
    }
    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
