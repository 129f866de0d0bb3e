use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use recurdepth::kitti::read_depth_png;
use recurdepth::{DepthMap, Intrinsics, RigidTransform};

use crate::CROP;

pub fn parse_numbers(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("{what}: {t:?} is not a number")))
        .collect()
}

/// `fx,fy,cx,cy` with the image size supplied, or all six values.
pub fn parse_intrinsics(text: &str, size: Option<(usize, usize)>) -> Result<Intrinsics> {
    let v = parse_numbers(text, "intrinsics")?;
    let (w, h) = match (v.len(), size) {
        (4, Some(s)) => s,
        (6, _) => (v[4] as usize, v[5] as usize),
        (n, _) => bail!("intrinsics need fx,fy,cx,cy,width,height (got {n} values)"),
    };
    Ok(Intrinsics::new(v[0], v[1], v[2], v[3], w, h)?)
}

pub fn parse_pose(text: &str) -> Result<RigidTransform> {
    if text.trim() == "identity" {
        return Ok(RigidTransform::identity());
    }
    let v = parse_numbers(text, "pose")?;
    if v.len() != 12 {
        bail!("pose needs 12 numbers of a row-major 3x4 matrix (got {})", v.len());
    }
    Ok(RigidTransform::from_row_major_3x4(&v)?)
}

pub fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("{} does not exist or is not a file", path.display());
    }
    Ok(())
}

pub fn read_depth(path: &Path, crop: bool) -> Result<DepthMap> {
    let d = read_depth_png(path)?;
    Ok(if crop { crop_to_kitti(d)? } else { d })
}

/// Bottom-center crop to the KITTI benchmark size; smaller maps pass through.
pub fn crop_to_kitti(d: DepthMap) -> Result<DepthMap> {
    let (w, h) = CROP;
    if d.width() > w || d.height() > h {
        Ok(d.bottom_center_crop(w.min(d.width()), h.min(d.height()))?.0)
    } else {
        Ok(d)
    }
}

fn pngs_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "png"))
        .collect();
    out.sort();
    Ok(out)
}

/// Pairs up files by name. Each input is a single PNG or a directory;
/// with directories, names present in the first input are looked up in
/// the others and missing ones are skipped.
pub fn matched_files(inputs: &[&Path]) -> Result<Vec<(String, Vec<PathBuf>)>> {
    for p in inputs {
        if !p.exists() {
            bail!("{} does not exist", p.display());
        }
    }
    if inputs.iter().all(|p| p.is_file()) {
        let name = inputs[0].file_name().unwrap_or_default().to_string_lossy().into_owned();
        return Ok(vec![(name, inputs.iter().map(|p| p.to_path_buf()).collect())]);
    }
    if !inputs.iter().all(|p| p.is_dir()) {
        bail!("inputs must be all files or all directories");
    }
    let mut out = Vec::new();
    for first in pngs_in(inputs[0])? {
        let name = first.file_name().unwrap_or_default().to_owned();
        let others: Vec<PathBuf> = inputs[1..].iter().map(|d| d.join(&name)).collect();
        if others.iter().all(|p| p.is_file()) {
            let mut paths = vec![first.clone()];
            paths.extend(others);
            out.push((name.to_string_lossy().into_owned(), paths));
        }
    }
    if out.is_empty() {
        bail!("no PNG names in {} are present in every input", inputs[0].display());
    }
    Ok(out)
}
