use std::io::Write;

use anyhow::{bail, Context, Result};
use recurdepth::completion::{run_sequence, PipelineConfig};
use recurdepth::eval::{
    block_error_diff, per_frame_rmse, write_curve_csv, BlockDiffAccumulator, MetricsReport, MetricsSums,
};
use recurdepth::geometry::warp_depth;
use recurdepth::kitti::{
    relative_camera_pose, world_poses, write_depth_png, CalibBundle, GeoOrigin, OxtsRecord, SequenceIndex,
};
use recurdepth::synth::{make_sequence, LidarPattern, SceneSpec, Trajectory};
use recurdepth::{CropOffset, Intrinsics};
use serde::Serialize;
use serde_json::{json, Value};

use crate::files::{crop_to_kitti, matched_files, parse_intrinsics, parse_pose, read_depth, require_file};
use crate::{CompleteArgs, CurveArgs, DiffmapArgs, EvalArgs, PosesArgs, SynthArgs, WarpArgs, CROP};

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn synth(a: &SynthArgs, as_json: bool) -> Result<()> {
    let scene = match &a.scene {
        Some(path) => {
            require_file(path)?;
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SceneSpec::from_json(&text).with_context(|| format!("scene {}", path.display()))?
        }
        None => SceneSpec::street(a.seed),
    };
    let trajectory = Trajectory::from_generator(&a.trajectory)?;
    let k = match &a.intrinsics {
        Some(text) => parse_intrinsics(text, None)?,
        None => Intrinsics::kitti_cropped(),
    };
    let pattern = LidarPattern {
        density: a.density,
        beam_rows: a.beam_rows,
    };
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let seq = make_sequence(&scene, &trajectory, &k, &pattern, a.seed)?;
    let manifest = seq.write_kitti_layout(&a.out, &GeoOrigin::default())?;
    if as_json {
        print_json(&json!({
            "manifest": manifest,
            "frames": seq.frames.len(),
            "width": k.width(),
            "height": k.height(),
            "seed": a.seed,
        }))
    } else {
        println!("wrote {} frames ({}x{}) to {}", seq.frames.len(), k.width(), k.height(), a.out.display());
        println!("manifest: {}", manifest.display());
        Ok(())
    }
}

pub fn poses(a: &PosesArgs, as_json: bool) -> Result<()> {
    require_file(&a.manifest)?;
    let index = SequenceIndex::open(&a.manifest)?;
    let Some(poses) = index.poses_to_next()? else {
        bail!("{} lacks a calibration directory or OXTS records", a.manifest.display());
    };
    if as_json {
        let rows: Vec<Value> = poses
            .iter()
            .enumerate()
            .map(|(i, p)| json!({ "from": i, "to": i + 1, "matrix_3x4": p.to_row_major_3x4() }))
            .collect();
        return print_json(&rows);
    }
    for (i, p) in poses.iter().enumerate() {
        let row: Vec<String> = p.to_row_major_3x4().iter().map(|v| format!("{v:.9e}")).collect();
        println!("{i} {} {}", i + 1, row.join(" "));
    }
    Ok(())
}

pub fn warp(a: &WarpArgs, as_json: bool) -> Result<()> {
    require_file(&a.input)?;
    let depth = read_depth(&a.input, false)?;
    let (w, h) = depth.dims();
    let calib = match &a.calib {
        Some(dir) => Some(CalibBundle::read_dir(dir, 2)?.with_image_size(w, h)?),
        None => None,
    };
    let k = match (&calib, &a.intrinsics) {
        (Some(c), _) => c.intrinsics,
        (None, Some(text)) => parse_intrinsics(text, Some((w, h)))?,
        (None, None) => bail!("give --calib or --intrinsics"),
    };
    let pose = match (&a.pose, &a.oxts_from, &a.oxts_to) {
        (Some(text), _, _) => parse_pose(text)?,
        (None, Some(from), Some(to)) => {
            let calib = calib.as_ref().context("--oxts-from needs --calib")?;
            let world = world_poses(&[OxtsRecord::read(from)?, OxtsRecord::read(to)?])?;
            relative_camera_pose(&world[0], &world[1], calib)
        }
        _ => bail!("give --pose or both --oxts-from and --oxts-to"),
    };
    let (depth, k) = if a.crop {
        let offset = CropOffset::bottom_center((w, h), CROP.0, CROP.1)?;
        (crop_to_kitti(depth)?, k.cropped(offset, CROP.0, CROP.1)?)
    } else {
        (depth, k)
    };
    let (warped, _) = warp_depth(&depth, &k, &pose)?;
    write_depth_png(&a.out, &warped)?;
    if as_json {
        print_json(&json!({
            "output": a.out,
            "valid_in": depth.valid_count(),
            "valid_out": warped.valid_count(),
        }))
    } else {
        println!(
            "warped {} valid pixels to {} valid pixels: {}",
            depth.valid_count(),
            warped.valid_count(),
            a.out.display()
        );
        Ok(())
    }
}

#[derive(Serialize)]
struct CompleteReport {
    temporal: bool,
    config: PipelineConfig,
    frames: Vec<recurdepth::completion::FrameResult>,
    pooled: Option<MetricsReport>,
}

pub fn complete(a: &CompleteArgs, as_json: bool) -> Result<()> {
    require_file(&a.manifest)?;
    let cfg = match &a.config {
        Some(path) => {
            require_file(path)?;
            PipelineConfig::load(path)?
        }
        None => PipelineConfig::default(),
    };
    let seq = SequenceIndex::open(&a.manifest)?.load()?;
    let seq = if a.crop { seq.cropped(CROP.0, CROP.1)? } else { seq };
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let run = run_sequence(&seq, &cfg, a.temporal)?;
    let mut sums = MetricsSums::default();
    for (frame, result) in seq.frames.iter().zip(&run.frames) {
        write_depth_png(a.out.join(format!("{}.png", result.name)), &result.prediction)?;
        if let Some(gt) = &frame.groundtruth {
            sums = sums.merge(MetricsSums::from_maps(&result.prediction, gt)?);
        }
    }
    let report = CompleteReport {
        temporal: run.temporal,
        config: cfg,
        pooled: sums.report().ok(),
        frames: run.frames,
    };
    let path = a.out.join("results.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)?).with_context(|| format!("writing {}", path.display()))?;
    if as_json {
        return print_json(&report);
    }
    println!("{:<12} {:>8} {:>8} {:>12}", "frame", "lidar%", "seed%", "RMSE mm");
    for f in &report.frames {
        let rmse = f.metrics.map(|m| format!("{:.1}", m.rmse)).unwrap_or_else(|| "-".into());
        println!(
            "{:<12} {:>8.2} {:>8.2} {:>12}",
            f.name,
            100.0 * f.sparse_density,
            100.0 * f.fused_density,
            rmse
        );
    }
    if let Some(m) = report.pooled {
        println!("\nall frames\n{m}");
    }
    println!("predictions: {}", a.out.display());
    Ok(())
}

pub fn eval(a: &EvalArgs, as_json: bool) -> Result<()> {
    let pairs = matched_files(&[&a.pred, &a.gt])?;
    let mut sums = MetricsSums::default();
    let mut frames = Vec::with_capacity(pairs.len());
    for (name, paths) in &pairs {
        let pred = read_depth(&paths[0], a.crop)?;
        let gt = read_depth(&paths[1], a.crop)?;
        let s = MetricsSums::from_maps(&pred, &gt).with_context(|| format!("frame {name}"))?;
        sums = sums.merge(s);
        frames.push((name.clone(), s.report().ok()));
    }
    let pooled = sums.report()?;
    if as_json {
        let per_frame: Vec<Value> = frames.iter().map(|(n, m)| json!({ "name": n, "metrics": m })).collect();
        return print_json(&json!({ "frames": per_frame, "pooled": pooled }));
    }
    if frames.len() > 1 {
        println!("{:<20} {:>12} {:>12}", "frame", "RMSE mm", "MAE mm");
        for (name, m) in &frames {
            match m {
                Some(m) => println!("{name:<20} {:>12.1} {:>12.1}", m.rmse, m.mae),
                None => println!("{name:<20} {:>12} {:>12}", "-", "-"),
            }
        }
        println!();
    }
    println!("{pooled}");
    Ok(())
}

pub fn diffmap(a: &DiffmapArgs, as_json: bool) -> Result<()> {
    let triples = matched_files(&[&a.pred_a, &a.pred_b, &a.gt])?;
    let mut acc: Option<BlockDiffAccumulator> = None;
    for (name, paths) in &triples {
        let pa = read_depth(&paths[0], a.crop)?;
        let pb = read_depth(&paths[1], a.crop)?;
        let gt = read_depth(&paths[2], a.crop)?;
        let map = block_error_diff(&pa, &pb, &gt, a.block).with_context(|| format!("frame {name}"))?;
        let acc = match &mut acc {
            Some(acc) => acc,
            None => acc.insert(BlockDiffAccumulator::new(gt.width(), gt.height(), a.block)?),
        };
        acc.add(&map).with_context(|| format!("frame {name}"))?;
    }
    let map = acc.expect("at least one frame").finish();
    map.write_png(&a.out, a.range)?;
    let filled: Vec<f64> = map.values.as_slice().iter().flatten().copied().collect();
    let mean = filled.iter().sum::<f64>() / filled.len().max(1) as f64;
    if as_json {
        return print_json(&json!({
            "output": a.out,
            "frames": triples.len(),
            "block": a.block,
            "blocks": [map.values.width(), map.values.height()],
            "max_abs_mm": map.max_abs(),
            "mean_mm": mean,
        }));
    }
    println!(
        "{} frames, {}x{} blocks of {} px: mean {:.1} mm, max |diff| {:.1} mm -> {}",
        triples.len(),
        map.values.width(),
        map.values.height(),
        a.block,
        mean,
        map.max_abs(),
        a.out.display()
    );
    Ok(())
}

pub fn curve(a: &CurveArgs, as_json: bool) -> Result<()> {
    let mut curves = Vec::with_capacity(a.results.len());
    for path in &a.results {
        require_file(path)?;
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let frames = v["frames"]
            .as_array()
            .with_context(|| format!("{} has no frames list", path.display()))?;
        let rmse: Vec<f64> = frames.iter().filter_map(|f| f["metrics"]["rmse"].as_f64()).collect();
        if rmse.is_empty() {
            bail!("{} has no frames with ground truth", path.display());
        }
        curves.push(rmse);
    }
    let curve = per_frame_rmse(&curves);
    if let Some(out) = &a.out {
        let mut file = std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
        write_curve_csv(&mut file, &curve)?;
    }
    if as_json {
        let rows: Vec<Value> = curve.iter().map(|(f, r)| json!({ "frame": f, "rmse_mm": r })).collect();
        return print_json(&rows);
    }
    if a.out.is_none() {
        let mut stdout = std::io::stdout().lock();
        write_curve_csv(&mut stdout, &curve)?;
        stdout.flush()?;
    }
    Ok(())
}
