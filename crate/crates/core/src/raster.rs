//! Pixel and mask data model plus lossless file I/O.
//!
//! Only PNG and binary PPM (P6) are accepted. Both are lossless, which is
//! what sentinel-based gap detection needs: a single altered bit in a
//! sentinel pixel turns a gap pixel into a valid one.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;
use std::str::FromStr;

use image::codecs::png::PngEncoder;
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One RGB pixel, 8 bits per channel.
pub type Rgb = [u8; 3];

/// Owned row-major RGB pixel grid.
#[derive(Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl fmt::Debug for Raster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Raster")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Raster {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::InvalidRaster(format!(
                "{width}x{height} raster needs {expected} pixels, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// A raster where every pixel is `color`.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be non-zero");
        Self {
            width,
            height,
            pixels: vec![color; width as usize * height as usize],
        }
    }

    /// Builds a raster by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Rgb) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be non-zero");
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.pixels
    }

    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[self.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, value: Rgb) {
        let i = self.index(x, y);
        self.pixels[i] = value;
    }

    /// Interleaved `RGBRGB...` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn from_bytes(width: u32, height: u32, bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(3) {
            return Err(Error::InvalidRaster(format!(
                "byte buffer length {} is not a multiple of 3",
                bytes.len()
            )));
        }
        let pixels = bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, pixels)
    }

    pub(crate) fn check_same_dims(&self, width: u32, height: u32) -> Result<()> {
        if (self.width, self.height) != (width, height) {
            return Err(Error::DimensionMismatch {
                expected: (self.width, self.height),
                actual: (width, height),
            });
        }
        Ok(())
    }
}

/// Per-pixel validity: `true` is valid data, `false` is gap / no-data.
#[derive(Clone, PartialEq, Eq)]
pub struct GapMask {
    width: u32,
    height: u32,
    valid: Vec<bool>,
}

impl fmt::Debug for GapMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GapMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("gap_count", &self.gap_count())
            .finish()
    }
}

impl GapMask {
    pub fn new(width: u32, height: u32, valid: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || valid.len() != width as usize * height as usize {
            return Err(Error::InvalidRaster(format!(
                "mask of {width}x{height} cannot hold {} entries",
                valid.len()
            )));
        }
        Ok(Self {
            width,
            height,
            valid,
        })
    }

    pub fn all_valid(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            valid: vec![true; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut is_valid: impl FnMut(u32, u32) -> bool) -> Self {
        let mut valid = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                valid.push(is_valid(x, y));
            }
        }
        Self {
            width,
            height,
            valid,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, x: u32, y: u32) -> bool {
        self.valid[y as usize * self.width as usize + x as usize]
    }

    pub fn is_gap(&self, x: u32, y: u32) -> bool {
        !self.is_valid(x, y)
    }

    pub fn set_valid(&mut self, x: u32, y: u32, valid: bool) {
        let i = y as usize * self.width as usize + x as usize;
        self.valid[i] = valid;
    }

    pub fn gap_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.len() - self.gap_count()
    }

    pub fn gap_fraction(&self) -> f64 {
        self.gap_count() as f64 / self.valid.len() as f64
    }

    /// Row-major indices of gap pixels.
    pub fn gap_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.valid
            .iter()
            .enumerate()
            .filter_map(|(i, v)| (!v).then_some(i))
    }

    /// Pixels that are gap in either mask become gap.
    pub fn union_gaps(&self, other: &GapMask) -> Result<GapMask> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::DimensionMismatch {
                expected: self.dimensions(),
                actual: other.dimensions(),
            });
        }
        let valid = self
            .valid
            .iter()
            .zip(&other.valid)
            .map(|(a, b)| *a && *b)
            .collect();
        Ok(GapMask {
            width: self.width,
            height: self.height,
            valid,
        })
    }

    pub(crate) fn check_matches(&self, raster: &Raster) -> Result<()> {
        raster.check_same_dims(self.width, self.height)
    }
}

/// Reserved color marking no-data pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentinelColor {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl SentinelColor {
    pub const BLACK: SentinelColor = SentinelColor::new(0, 0, 0);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub fn rgb(self) -> Rgb {
        [self.r, self.g, self.b]
    }

    pub fn matches(self, pixel: Rgb) -> bool {
        pixel == self.rgb()
    }
}

impl fmt::Display for SentinelColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.r, self.g, self.b)
    }
}

impl FromStr for SentinelColor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected R,G,B but got {s:?}"));
        }
        let mut rgb = [0u8; 3];
        for (slot, part) in rgb.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| format!("channel {part:?} is not an integer in 0..=255"))?;
        }
        Ok(Self::new(rgb[0], rgb[1], rgb[2]))
    }
}

/// Exact-equality sentinel scan: a pixel is gap iff all three channels match.
pub fn mask_from_sentinel(raster: &Raster, sentinel: SentinelColor) -> GapMask {
    let valid = raster.pixels().iter().map(|p| !sentinel.matches(*p)).collect();
    GapMask {
        width: raster.width,
        height: raster.height,
        valid,
    }
}

/// Real-valued single-channel grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LumaGrid {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl LumaGrid {
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// Rec. 601 luma of an RGB triple.
pub fn luminance(p: Rgb) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

pub fn to_grayscale(raster: &Raster) -> LumaGrid {
    LumaGrid {
        width: raster.width,
        height: raster.height,
        values: raster.pixels().iter().map(|p| luminance(*p)).collect(),
    }
}

/// A decoded file: the RGB raster plus its alpha plane when the file had one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceImage {
    pub raster: Raster,
    pub alpha: Option<Vec<u8>>,
}

pub fn load_raster(path: impl AsRef<Path>) -> Result<Raster> {
    load_source(path).map(|s| s.raster)
}

/// Loads a PNG or P6 PPM file, keeping the alpha plane if present.
pub fn load_source(path: impl AsRef<Path>) -> Result<SourceImage> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let format = guess_format(path, &bytes)?;
    let decoded = decode(path, &bytes, format)?;
    let (width, height) = (decoded.width(), decoded.height());
    match decoded {
        DynamicImage::ImageRgb8(img) => Ok(SourceImage {
            raster: Raster::from_bytes(width, height, img.as_raw())?,
            alpha: None,
        }),
        DynamicImage::ImageRgba8(img) => {
            let raw = img.as_raw();
            let pixels = raw.chunks_exact(4).map(|c| [c[0], c[1], c[2]]).collect();
            let alpha = raw.chunks_exact(4).map(|c| c[3]).collect();
            Ok(SourceImage {
                raster: Raster::new(width, height, pixels)?,
                alpha: Some(alpha),
            })
        }
        other => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("expected 8-bit RGB or RGBA, found {:?}", other.color()),
        }),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::io(path, e),
    })
}

fn guess_format(path: &Path, bytes: &[u8]) -> Result<ImageFormat> {
    match image::guess_format(bytes) {
        Ok(ImageFormat::Png) => Ok(ImageFormat::Png),
        Ok(ImageFormat::Pnm) => Ok(ImageFormat::Pnm),
        Ok(other) => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("{other:?} is not a lossless PNG/PPM format"),
        }),
        Err(_) => {
            // Unrecognized magic: a .png/.ppm name means a damaged file,
            // anything else is simply not a format we read.
            let ext = path
                .extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase);
            match ext.as_deref() {
                Some("png" | "ppm" | "pnm") => Err(Error::CorruptFile {
                    path: path.to_path_buf(),
                    reason: "unrecognized file signature".into(),
                }),
                _ => Err(Error::UnsupportedFormat {
                    path: path.to_path_buf(),
                    reason: "unrecognized file signature".into(),
                }),
            }
        }
    }
}

fn decode(path: &Path, bytes: &[u8], format: ImageFormat) -> Result<DynamicImage> {
    let mut reader = ImageReader::new(Cursor::new(bytes));
    reader.set_format(format);
    reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(u) => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: u.to_string(),
        },
        other => Error::CorruptFile {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })
}

/// Writes PNG, or binary PPM when the extension is `.ppm`/`.pnm`.
pub fn save_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_ppm = matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("ppm" | "pnm")
    );
    let bytes = raster.to_bytes();
    if is_ppm {
        let mut out = Vec::with_capacity(bytes.len() + 32);
        out.extend_from_slice(format!("P6\n{} {}\n255\n", raster.width, raster.height).as_bytes());
        out.extend_from_slice(&bytes);
        write_file(path, &out)
    } else {
        let png = encode_png(&bytes, raster.width, raster.height, ExtendedColorType::Rgb8)
            .map_err(|e| Error::io(path, e))?;
        write_file(path, &png)
    }
}

/// Grayscale PNG, 255 = valid, 0 = gap.
pub fn save_mask(mask: &GapMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = mask.valid.iter().map(|v| if *v { 255 } else { 0 }).collect();
    let png = encode_png(&bytes, mask.width, mask.height, ExtendedColorType::L8)
        .map_err(|e| Error::io(path, e))?;
    write_file(path, &png)
}

/// Reads a grayscale mask PNG; values >= 128 are valid.
pub fn load_mask(path: impl AsRef<Path>) -> Result<GapMask> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let format = guess_format(path, &bytes)?;
    match decode(path, &bytes, format)? {
        DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            let valid = img.as_raw().iter().map(|v| *v >= 128).collect();
            GapMask::new(w, h, valid)
        }
        other => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("mask must be 8-bit grayscale, found {:?}", other.color()),
        }),
    }
}

/// 16-bit grayscale PNG of arbitrary per-pixel values, saturating at `u16::MAX`.
pub fn save_gray16(
    width: u32,
    height: u32,
    values: &[u32],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = values
        .iter()
        .flat_map(|v| (u16::try_from(*v).unwrap_or(u16::MAX)).to_be_bytes())
        .collect();
    let png = encode_png(&bytes, width, height, ExtendedColorType::L16)
        .map_err(|e| Error::io(path, e))?;
    write_file(path, &png)
}

fn encode_png(
    bytes: &[u8],
    width: u32,
    height: u32,
    color: ExtendedColorType,
) -> std::io::Result<Vec<u8>> {
    let mut out = Vec::new();
    // L16 input is big-endian already; PngEncoder expects native order for
    // 16-bit samples, so swap back on little-endian hosts.
    let native;
    let data = if color == ExtendedColorType::L16 && cfg!(target_endian = "little") {
        native = bytes
            .chunks_exact(2)
            .flat_map(|c| [c[1], c[0]])
            .collect::<Vec<u8>>();
        &native[..]
    } else {
        bytes
    };
    PngEncoder::new(&mut out)
        .write_image(data, width, height, color)
        .map_err(std::io::Error::other)?;
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
