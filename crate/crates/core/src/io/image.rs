//! 8-bit grayscale PGM (binary, P5) and PNG.

use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linops::ImageGrid;

/// Byte for an intensity in `[0, 1]`: clamp, scale by 255, round half up.
pub fn quantize(v: f64) -> Result<u8> {
    if !v.is_finite() {
        return Err(Error::invalid(format!("cannot quantize non-finite value {v}")));
    }
    Ok((v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8)
}

pub fn dequantize(b: u8) -> f64 {
    f64::from(b) / 255.0
}

fn to_bytes(img: &ImageGrid) -> Result<Vec<u8>> {
    img.as_slice().iter().map(|&v| quantize(v)).collect()
}

fn from_bytes(height: usize, width: usize, bytes: &[u8]) -> Result<ImageGrid> {
    ImageGrid::new(height, width, bytes.iter().map(|&b| dequantize(b)).collect())
}

pub fn encode_pgm(img: &ImageGrid) -> Result<Vec<u8>> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(to_bytes(img)?);
    Ok(out)
}

struct PgmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmHeader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("pgm: bad {what}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::Format("pgm: expected magic P5".into()));
    }
    let mut h = PgmHeader { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("pgm: unsupported maxval {maxval} (only 255)")));
    }
    // exactly one whitespace byte separates the header from the raster
    if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
        return Err(Error::Format("pgm: missing separator after maxval".into()));
    }
    let raster = &bytes[h.pos + 1..];
    let n = width
        .checked_mul(height)
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Format("pgm: bad dimensions".into()))?;
    if raster.len() != n {
        return Err(Error::Format(format!(
            "pgm: expected {n} raster bytes, found {}",
            raster.len()
        )));
    }
    from_bytes(height, width, raster)
}

pub fn encode_png(img: &ImageGrid) -> Result<Vec<u8>> {
    let fmt = |e: png::EncodingError| Error::Format(format!("png: {e}"));
    let w = u32::try_from(img.width()).map_err(|_| Error::Format("png: width too large".into()))?;
    let h = u32::try_from(img.height()).map_err(|_| Error::Format("png: height too large".into()))?;
    let data = to_bytes(img)?;
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w, h);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(fmt)?;
        writer.write_image_data(&data).map_err(fmt)?;
        writer.finish().map_err(fmt)?;
    }
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<ImageGrid> {
    let fmt = |e: png::DecodingError| Error::Format(format!("png: {e}"));
    let mut reader = png::Decoder::new(Cursor::new(bytes)).read_info().map_err(fmt)?;
    let (color, depth) = reader.output_color_type();
    if color != png::ColorType::Grayscale || depth != png::BitDepth::Eight {
        return Err(Error::Format(format!(
            "png: unsupported {color:?}/{depth:?}, need 8-bit grayscale"
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("png: image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(fmt)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let mut pixels = Vec::with_capacity(w * h);
    for row in buf.chunks(info.line_size).take(h) {
        pixels.extend_from_slice(&row[..w]);
    }
    from_bytes(h, w, &pixels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("pgm") => Ok(ImageFormat::Pgm),
            Some("png") => Ok(ImageFormat::Png),
            _ => Err(Error::Format(format!(
                "{}: unknown image extension (use .pgm or .png)",
                path.display()
            ))),
        }
    }
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        ImageFormat::Pgm => decode_pgm(&bytes),
        ImageFormat::Png => decode_png(&bytes),
    }
}

pub fn write_image(path: impl AsRef<Path>, img: &ImageGrid) -> Result<()> {
    let path = path.as_ref();
    let bytes = match ImageFormat::from_path(path)? {
        ImageFormat::Pgm => encode_pgm(img)?,
        ImageFormat::Png => encode_png(img)?,
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
