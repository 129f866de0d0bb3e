//! 16-bit depth PNGs (`meters = value / 256`, 0 = invalid) and the 8-bit
//! images that accompany them.

use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Write};
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid, Intensity};

/// Depth step of one PNG code, meters.
pub const DEPTH_SCALE: f64 = 256.0;

pub fn read_depth_png(path: impl AsRef<Path>) -> Result<DepthMap> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_depth_png(BufReader::new(file)).map_err(|m| Error::format(path, m))
}

pub fn write_depth_png(path: impl AsRef<Path>, depth: &DepthMap) -> Result<()> {
    let path = path.as_ref();
    let codes = quantize(depth)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode_gray16(&mut w, depth.width(), depth.height(), &codes)
        .map_err(|m| Error::format(path, m))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// In-memory encoding, byte-identical to what [`write_depth_png`] writes.
pub fn encode_depth_png(depth: &DepthMap) -> Result<Vec<u8>> {
    let codes = quantize(depth)?;
    let mut buf = Vec::new();
    encode_gray16(&mut buf, depth.width(), depth.height(), &codes)
        .map_err(|m| Error::format("<memory>", m))?;
    Ok(buf)
}

pub fn decode_depth_png_bytes(bytes: &[u8]) -> Result<DepthMap> {
    decode_depth_png(Cursor::new(bytes)).map_err(|m| Error::format("<memory>", m))
}

/// Nearest 16-bit code for each depth.
pub fn quantize(depth: &DepthMap) -> Result<Vec<u16>> {
    depth
        .as_slice()
        .iter()
        .map(|&d| {
            let code = (d * DEPTH_SCALE).round();
            if code > u16::MAX as f64 {
                Err(Error::Range(format!(
                    "depth {d} m does not fit a 16-bit PNG (max {} m)",
                    u16::MAX as f64 / DEPTH_SCALE
                )))
            } else {
                Ok(code as u16)
            }
        })
        .collect()
}

fn decode_depth_png<R: std::io::BufRead + std::io::Seek>(
    r: R,
) -> std::result::Result<DepthMap, String> {
    let decoder = png::Decoder::new(r);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let info = reader.info();
    if info.color_type != ColorType::Grayscale {
        return Err(format!(
            "expected a single-channel image, found {:?}",
            info.color_type
        ));
    }
    if info.bit_depth != BitDepth::Sixteen {
        return Err(format!("expected 16-bit samples, found {:?}", info.bit_depth));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0; reader.output_buffer_size().ok_or("image too large")?];
    reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let values = buf
        .chunks_exact(2)
        .take(width * height)
        .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / DEPTH_SCALE)
        .collect();
    DepthMap::from_vec(width, height, values).map_err(|e| e.to_string())
}

fn encode_gray16<W: Write>(
    w: W,
    width: usize,
    height: usize,
    codes: &[u16],
) -> std::result::Result<(), String> {
    let bytes: Vec<u8> = codes.iter().flat_map(|c| c.to_be_bytes()).collect();
    write_png(w, width, height, ColorType::Grayscale, BitDepth::Sixteen, &bytes)
}

fn write_png<W: Write>(
    w: W,
    width: usize,
    height: usize,
    color: ColorType,
    depth: BitDepth,
    data: &[u8],
) -> std::result::Result<(), String> {
    let mut enc = png::Encoder::new(w, width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(depth);
    let mut writer = enc.write_header().map_err(|e| e.to_string())?;
    writer.write_image_data(data).map_err(|e| e.to_string())?;
    writer.finish().map_err(|e| e.to_string())
}

/// Reads any 8/16-bit gray, gray-alpha, RGB or RGBA PNG as luminance in
/// `[0, 1]` (Rec. 601 weights).
pub fn read_intensity_png(path: impl AsRef<Path>) -> Result<Intensity> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let fail = |m: String| Error::format(path, m);
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| fail(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| fail("image too large".into()))?];
    let out = reader.next_frame(&mut buf).map_err(|e| fail(e.to_string()))?;
    let (width, height) = (out.width as usize, out.height as usize);
    let samples: Vec<f64> = match out.bit_depth {
        BitDepth::Eight => buf.iter().map(|&b| b as f64 / 255.0).collect(),
        BitDepth::Sixteen => buf
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 65535.0)
            .collect(),
        other => return Err(fail(format!("unsupported bit depth {other:?}"))),
    };
    let channels = out.color_type.samples();
    let data = samples
        .chunks_exact(channels)
        .take(width * height)
        .map(|px| match channels {
            1 | 2 => px[0],
            _ => 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2],
        })
        .collect();
    Grid::from_vec(width, height, data)
}

/// Writes intensities in `[0, 1]` as an 8-bit grayscale PNG.
pub fn write_intensity_png(path: impl AsRef<Path>, image: &Intensity) -> Result<()> {
    let bytes: Vec<u8> = image
        .as_slice()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    write_png_file(path.as_ref(), image.width(), image.height(), ColorType::Grayscale, &bytes)
}

/// Writes packed 8-bit RGB pixels.
pub fn write_rgb_png(path: impl AsRef<Path>, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    if rgb.len() != width * height * 3 {
        return Err(Error::InvalidArgument(format!(
            "{} bytes do not fill a {width}x{height} RGB image",
            rgb.len()
        )));
    }
    write_png_file(path.as_ref(), width, height, ColorType::Rgb, rgb)
}

fn write_png_file(path: &Path, width: usize, height: usize, color: ColorType, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_png(&mut w, width, height, color, BitDepth::Eight, data)
        .map_err(|m| Error::format(path, m))?;
    w.flush().map_err(|e| Error::io(path, e))
}
