//! Volume loading, persistence, and synthetic phantom generation.
//!
//! A [`Volume`] is an ordered stack of 2D grayscale slices. Two on-disk
//! representations are supported: a directory of single-channel PNG/PGM
//! files (slice order = lexicographic filename order) and a raw format
//! consisting of a small key/value header next to a contiguous
//! little-endian blob in slice-major, row-major order.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Intensity step between the two levels of a checkerboard phantom band.
pub const CHECKER_CONTRAST: u16 = 128;

/// An ordered stack of 2D grayscale slices, the unit of all processing.
///
/// Intensities are widened to `u16` on load so 8- and 16-bit sources share
/// one code path. Slices are row-major and immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub slices: Vec<Vec<u16>>,
    /// Min/max intensity over all pixels of all slices.
    pub global_range: (u16, u16),
}

impl Volume {
    /// Build a volume from raw slice data, validating dimensions and
    /// computing the global intensity range.
    pub fn new(id: impl Into<String>, width: usize, height: usize, slices: Vec<Vec<u16>>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::invalid(format!(
                "volume dimensions must be at least 2x2, got {width}x{height}"
            )));
        }
        if slices.is_empty() {
            return Err(Error::invalid("volume must contain at least one slice"));
        }
        for (i, slice) in slices.iter().enumerate() {
            if slice.len() != width * height {
                return Err(Error::invalid(format!(
                    "slice {i} has {} pixels, expected {}",
                    slice.len(),
                    width * height
                )));
            }
        }
        let mut lo = u16::MAX;
        let mut hi = u16::MIN;
        for slice in &slices {
            for &v in slice {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok(Volume {
            id: id.into(),
            width,
            height,
            slices,
            global_range: (lo, hi),
        })
    }

    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, index: usize) -> &[u16] {
        &self.slices[index]
    }
}

/// On-disk sample width of the raw volume format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    U8,
    U16,
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::U16 => 2,
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dtype::U8 => write!(f, "u8"),
            Dtype::U16 => write!(f, "u16"),
        }
    }
}

impl std::str::FromStr for Dtype {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "u8" => Ok(Dtype::U8),
            "u16" => Ok(Dtype::U16),
            other => Err(format!("unknown dtype \"{other}\"")),
        }
    }
}

/// Texture descriptor for one band of a phantom volume.
#[derive(Debug, Clone, PartialEq)]
pub enum Texture {
    /// Every pixel equals the base intensity.
    Constant,
    /// Two-level checkerboard with the given cell period.
    Checker { period: usize },
    /// Reproducible uniform noise in `[base, base + amplitude]`.
    Noise { seed: u64, amplitude: u16 },
}

/// One band of consecutive slices sharing a texture.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub length: usize,
    pub texture: Texture,
}

/// Specification for a synthetic test volume built from texture bands.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub bands: Vec<Band>,
    pub base_intensity: u16,
}

impl PhantomSpec {
    fn validate(&self) -> Result<()> {
        if self.bands.is_empty() {
            return Err(Error::invalid("phantom spec must declare at least one band"));
        }
        for (i, band) in self.bands.iter().enumerate() {
            if band.length == 0 {
                return Err(Error::invalid(format!("band {i} has zero length")));
            }
            match band.texture {
                Texture::Checker { period: 0 } => {
                    return Err(Error::invalid(format!("band {i}: checker period must be >= 1")));
                }
                Texture::Checker { .. } => {
                    if self.base_intensity.checked_add(CHECKER_CONTRAST).is_none() {
                        return Err(Error::invalid(format!(
                            "band {i}: base intensity {} leaves no headroom for the checker contrast",
                            self.base_intensity
                        )));
                    }
                }
                Texture::Noise { amplitude, .. } => {
                    if self.base_intensity.checked_add(amplitude).is_none() {
                        return Err(Error::invalid(format!(
                            "band {i}: base intensity {} plus noise amplitude {amplitude} overflows u16",
                            self.base_intensity
                        )));
                    }
                }
                Texture::Constant => {}
            }
        }
        Ok(())
    }
}

/// Generate a deterministic synthetic volume from a band specification.
///
/// Noise bands reseed their generator from the band's own seed, so two
/// bands with identical descriptors produce identical slice sequences.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<Volume> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut slices = Vec::with_capacity(spec.bands.iter().map(|b| b.length).sum());
    for band in &spec.bands {
        match band.texture {
            Texture::Constant => {
                for _ in 0..band.length {
                    slices.push(vec![spec.base_intensity; w * h]);
                }
            }
            Texture::Checker { period } => {
                let mut slice = vec![0u16; w * h];
                for y in 0..h {
                    for x in 0..w {
                        let parity = (x / period + y / period) % 2;
                        slice[y * w + x] = spec.base_intensity + parity as u16 * CHECKER_CONTRAST;
                    }
                }
                for _ in 0..band.length {
                    slices.push(slice.clone());
                }
            }
            Texture::Noise { seed, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..band.length {
                    let slice = (0..w * h)
                        .map(|_| spec.base_intensity + rng.random_range(0..=amplitude))
                        .collect();
                    slices.push(slice);
                }
            }
        }
    }
    Volume::new("phantom", w, h, slices)
}

fn is_raster_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
        Some(ref e) if e == "png" || e == "pgm"
    )
}

/// Load a volume from a directory of single-channel PNG/PGM files.
///
/// Files sorted lexicographically by name define the slice order. Every
/// file must be 8- or 16-bit grayscale and share one set of dimensions.
pub fn load_image_stack(dir_path: &Path, id: &str) -> Result<Volume> {
    let entries = fs::read_dir(dir_path).map_err(|e| Error::io(dir_path, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_raster_file(p))
        .collect();
    files.sort_by_key(|p| p.file_name().map(|n| n.to_os_string()));
    if files.is_empty() {
        return Err(Error::malformed(dir_path, "no image files found (expected .png or .pgm)"));
    }

    // Decode in parallel; dimension checks run afterwards in filename order
    // so diagnostics are independent of scheduling.
    let decoded: Vec<Result<(usize, usize, Vec<u16>)>> =
        files.par_iter().map(|path| decode_gray(path)).collect();

    let mut slices = Vec::with_capacity(files.len());
    let mut dims: Option<(usize, usize)> = None;
    for (path, result) in files.iter().zip(decoded) {
        let (w, h, pixels) = result?;
        match dims {
            None => dims = Some((w, h)),
            Some((ew, eh)) if (ew, eh) != (w, h) => {
                return Err(Error::malformed(
                    path,
                    format!("mixed dimensions: expected {ew}x{eh}, got {w}x{h}"),
                ));
            }
            Some(_) => {}
        }
        slices.push(pixels);
    }
    let (w, h) = dims.unwrap();
    Volume::new(id, w, h, slices)
}

fn decode_gray(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let img = image::open(path).map_err(|e| Error::malformed(path, e.to_string()))?;
    match img {
        image::DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            Ok((w as usize, h as usize, buf.into_raw().into_iter().map(u16::from).collect()))
        }
        image::DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            Ok((w as usize, h as usize, buf.into_raw()))
        }
        other => Err(Error::malformed(
            path,
            format!("non-grayscale input (color type {:?})", other.color()),
        )),
    }
}

/// Load a volume from a raw-format header file.
///
/// The header is `key = value` text declaring `width`, `height`,
/// `n_slices`, `dtype` (`u8`|`u16`), `endianness` (`little`), and
/// `data_file`, the blob path relative to the header.
pub fn load_raw_volume(header_path: &Path) -> Result<Volume> {
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let mut width = None;
    let mut height = None;
    let mut n_slices = None;
    let mut dtype = None;
    let mut data_file = None;
    let mut endianness = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::malformed(header_path, format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let parse_count = |v: &str, k: &str| -> Result<usize> {
            v.parse()
                .map_err(|_| Error::malformed(header_path, format!("invalid {k} \"{v}\"")))
        };
        match key {
            "width" => width = Some(parse_count(value, "width")?),
            "height" => height = Some(parse_count(value, "height")?),
            "n_slices" => n_slices = Some(parse_count(value, "n_slices")?),
            "dtype" => {
                dtype = Some(value.parse::<Dtype>().map_err(|e| Error::malformed(header_path, e))?)
            }
            "endianness" => {
                if value != "little" {
                    return Err(Error::malformed(
                        header_path,
                        format!("unsupported endianness \"{value}\" (only little is supported)"),
                    ));
                }
                endianness = Some(());
            }
            "data_file" => data_file = Some(value.to_string()),
            other => {
                return Err(Error::malformed(header_path, format!("unknown key \"{other}\"")));
            }
        }
    }
    let missing = |k: &str| Error::malformed(header_path, format!("missing key \"{k}\""));
    let width = width.ok_or_else(|| missing("width"))?;
    let height = height.ok_or_else(|| missing("height"))?;
    let n_slices = n_slices.ok_or_else(|| missing("n_slices"))?;
    let dtype = dtype.ok_or_else(|| missing("dtype"))?;
    endianness.ok_or_else(|| missing("endianness"))?;
    let data_file = data_file.ok_or_else(|| missing("data_file"))?;

    let blob_path = header_path.parent().unwrap_or(Path::new(".")).join(&data_file);
    let blob = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    let expected = width * height * n_slices * dtype.size();
    if blob.len() != expected {
        return Err(Error::malformed(
            &blob_path,
            format!("size mismatch: expected {expected}, got {}", blob.len()),
        ));
    }

    let slice_px = width * height;
    let slices: Vec<Vec<u16>> = match dtype {
        Dtype::U8 => blob
            .chunks_exact(slice_px)
            .map(|chunk| chunk.iter().map(|&b| u16::from(b)).collect())
            .collect(),
        Dtype::U16 => blob
            .chunks_exact(slice_px * 2)
            .map(|chunk| {
                chunk
                    .chunks_exact(2)
                    .map(|b| u16::from_le_bytes([b[0], b[1]]))
                    .collect()
            })
            .collect(),
    };
    let id = header_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "volume".to_string());
    Volume::new(id, width, height, slices)
}

/// Write a volume in the raw format: a canonical header at `header_path`
/// and the blob next to it, named after the header stem.
///
/// With `Dtype::U8` every intensity must fit in a byte.
pub fn write_raw_volume(volume: &Volume, header_path: &Path, dtype: Dtype) -> Result<()> {
    if dtype == Dtype::U8 && volume.global_range.1 > 255 {
        return Err(Error::invalid(format!(
            "volume intensities exceed u8 range (max {})",
            volume.global_range.1
        )));
    }
    let stem = header_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "volume".to_string());
    let data_name = format!("{stem}.raw");
    let blob_path = header_path.parent().unwrap_or(Path::new(".")).join(&data_name);

    let mut blob = Vec::with_capacity(volume.width * volume.height * volume.n_slices() * dtype.size());
    for slice in &volume.slices {
        match dtype {
            Dtype::U8 => blob.extend(slice.iter().map(|&v| v as u8)),
            Dtype::U16 => {
                for &v in slice {
                    blob.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }

    let header = format!(
        "width = {}\nheight = {}\nn_slices = {}\ndtype = {}\nendianness = little\ndata_file = {}\n",
        volume.width,
        volume.height,
        volume.n_slices(),
        dtype,
        data_name
    );
    fs::write(header_path, header).map_err(|e| Error::io(header_path, e))?;
    fs::write(&blob_path, blob).map_err(|e| Error::io(&blob_path, e))?;
    Ok(())
}
