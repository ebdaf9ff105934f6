//! Gray-level co-occurrence matrices and per-slice entropy profiles.
//!
//! Each slice is quantized to `L` gray levels, pairs of pixels at a fixed
//! spatial offset are counted into an `L` x `L` matrix, and the Shannon
//! entropy of the normalized matrix summarizes the slice's textural
//! complexity. Stacking those entropies along the slice axis gives the
//! volume's entropy profile, the input to the adaptive sampler.

use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::curation::CurationManifest;
use crate::error::{Error, Result};
use crate::volume::Volume;

/// Quantization range policy for a profile run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangeMode {
    /// One range for the whole volume; entropies stay comparable across
    /// slices, which the profile's derivative depends on.
    #[default]
    Global,
    /// Min/max of each slice individually.
    PerSlice,
}

impl fmt::Display for RangeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeMode::Global => write!(f, "global"),
            RangeMode::PerSlice => write!(f, "per-slice"),
        }
    }
}

impl std::str::FromStr for RangeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "global" => Ok(RangeMode::Global),
            "per-slice" => Ok(RangeMode::PerSlice),
            other => Err(format!("unknown range mode \"{other}\" (expected global or per-slice)")),
        }
    }
}

/// GLCM construction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GlcmConfig {
    /// Number of gray levels L.
    pub levels: usize,
    /// Pixel displacement (dx, dy) between the pair members.
    pub offset: (i32, i32),
    /// Count each pair in both directions.
    pub symmetric: bool,
    pub range_mode: RangeMode,
}

impl Default for GlcmConfig {
    fn default() -> Self {
        GlcmConfig {
            levels: 32,
            offset: (1, 0),
            symmetric: true,
            range_mode: RangeMode::Global,
        }
    }
}

impl GlcmConfig {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::invalid(format!("levels must be >= 2, got {}", self.levels)));
        }
        if self.levels > usize::from(u16::MAX) + 1 {
            return Err(Error::invalid(format!("levels must be <= 65536, got {}", self.levels)));
        }
        let (dx, dy) = self.offset;
        if (dx, dy) == (0, 0) {
            return Err(Error::invalid("offset must be nonzero"));
        }
        if dx.unsigned_abs() as usize >= width || dy.unsigned_abs() as usize >= height {
            return Err(Error::invalid(format!(
                "offset ({dx},{dy}) exceeds grid extent {width}x{height}"
            )));
        }
        Ok(())
    }
}

/// Normalized L x L co-occurrence matrix for one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    pub levels: usize,
    /// Row-major probabilities, `p[a * levels + b]`.
    pub p: Vec<f64>,
}

impl Glcm {
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.p[a * self.levels + b]
    }
}

/// Per-slice GLCM entropies for the curated slices of one volume.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyProfile {
    pub volume_id: String,
    /// Entropy in nats, one value per curated slice.
    pub values: Vec<f64>,
    /// Original volume indices of the curated slices, strictly ascending.
    pub slice_indices: Vec<usize>,
    pub config: GlcmConfig,
}

/// Map intensities in `[lo, hi]` onto levels `0..levels`.
///
/// `level(v) = min(L-1, floor((v - lo) * L / (hi - lo + 1)))`; values
/// outside the range clamp to the nearest end, and a constant range maps
/// everything to level 0.
pub fn quantize(slice: &[u16], range: (u16, u16), levels: usize) -> Vec<u16> {
    let (lo, hi) = range;
    debug_assert!(lo <= hi);
    debug_assert!((2..=65536).contains(&levels));
    if lo == hi {
        return vec![0; slice.len()];
    }
    let span = u64::from(hi) - u64::from(lo) + 1;
    let levels_u64 = levels as u64;
    let top = levels as u16 - 1;
    slice
        .iter()
        .map(|&v| {
            if v <= lo {
                0
            } else if v >= hi {
                (((u64::from(hi) - u64::from(lo)) * levels_u64 / span) as u16).min(top)
            } else {
                (((u64::from(v) - u64::from(lo)) * levels_u64 / span) as u16).min(top)
            }
        })
        .collect()
}

/// Count level pairs at the given offset and normalize.
///
/// For every pixel `q` with `q + offset` inside the grid, the pair
/// `(level(q), level(q + offset))` is counted; in symmetric mode the
/// reversed pair is counted too. Fails when the offset admits no pairs.
pub fn cooccurrence(
    levels_grid: &[u16],
    width: usize,
    height: usize,
    levels: usize,
    offset: (i32, i32),
    symmetric: bool,
) -> Result<Glcm> {
    assert_eq!(levels_grid.len(), width * height);
    let (dx, dy) = offset;
    let mut counts = vec![0u64; levels * levels];

    let x_range = if dx >= 0 {
        0..width.saturating_sub(dx as usize)
    } else {
        (dx.unsigned_abs() as usize).min(width)..width
    };
    let y_range = if dy >= 0 {
        0..height.saturating_sub(dy as usize)
    } else {
        (dy.unsigned_abs() as usize).min(height)..height
    };

    let mut total = 0u64;
    for y in y_range {
        let row = y * width;
        let row2 = (y as isize + dy as isize) as usize * width;
        for x in x_range.clone() {
            let a = levels_grid[row + x] as usize;
            let b = levels_grid[row2 + (x as isize + dx as isize) as usize] as usize;
            debug_assert!(a < levels && b < levels);
            counts[a * levels + b] += 1;
            total += 1;
            if symmetric {
                counts[b * levels + a] += 1;
                total += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::invalid(format!(
            "offset ({dx},{dy}) leaves no valid pixel pairs in a {width}x{height} grid"
        )));
    }
    let total_f = total as f64;
    let p = counts.into_iter().map(|c| c as f64 / total_f).collect();
    Ok(Glcm { levels, p })
}

/// Shannon entropy of the GLCM in nats; zero cells contribute nothing.
pub fn glcm_entropy(glcm: &Glcm) -> f64 {
    let mut acc = 0.0;
    for &p in &glcm.p {
        if p > 0.0 {
            acc += p * p.ln();
        }
    }
    if acc == 0.0 {
        0.0
    } else {
        -acc
    }
}

fn check_manifest(volume: &Volume, manifest: &CurationManifest) -> Result<()> {
    if manifest.volume_id != volume.id {
        return Err(Error::invalid(format!(
            "manifest is for volume \"{}\", not \"{}\"",
            manifest.volume_id, volume.id
        )));
    }
    if manifest.entries.len() != volume.n_slices()
        || manifest.entries.iter().enumerate().any(|(i, e)| e.slice_index != i)
    {
        return Err(Error::invalid("manifest entries do not cover the volume's slices"));
    }
    Ok(())
}

fn slice_entropy(volume: &Volume, index: usize, config: &GlcmConfig) -> Result<f64> {
    let slice = volume.slice(index);
    let range = match config.range_mode {
        RangeMode::Global => volume.global_range,
        RangeMode::PerSlice => {
            let lo = *slice.iter().min().expect("nonempty slice");
            let hi = *slice.iter().max().expect("nonempty slice");
            (lo, hi)
        }
    };
    let levels = quantize(slice, range, config.levels);
    let glcm = cooccurrence(&levels, volume.width, volume.height, config.levels, config.offset, config.symmetric)?;
    Ok(glcm_entropy(&glcm))
}

/// Entropy profile over the manifest's kept slices, ascending.
pub fn entropy_profile(volume: &Volume, manifest: &CurationManifest, config: &GlcmConfig) -> Result<EntropyProfile> {
    config.validate(volume.width, volume.height)?;
    check_manifest(volume, manifest)?;
    let kept = manifest.kept_indices();
    if kept.is_empty() {
        return Err(Error::invalid("manifest keeps zero slices; nothing to profile"));
    }
    let values = kept
        .iter()
        .map(|&i| slice_entropy(volume, i, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(EntropyProfile {
        volume_id: volume.id.clone(),
        values,
        slice_indices: kept,
        config: config.clone(),
    })
}

/// Parallel [`entropy_profile`]. Slices are independent, so the result is
/// bit-identical to the sequential version.
pub fn par_entropy_profile(
    volume: &Volume,
    manifest: &CurationManifest,
    config: &GlcmConfig,
) -> Result<EntropyProfile> {
    config.validate(volume.width, volume.height)?;
    check_manifest(volume, manifest)?;
    let kept = manifest.kept_indices();
    if kept.is_empty() {
        return Err(Error::invalid("manifest keeps zero slices; nothing to profile"));
    }
    let values = kept
        .par_iter()
        .map(|&i| slice_entropy(volume, i, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(EntropyProfile {
        volume_id: volume.id.clone(),
        values,
        slice_indices: kept,
        config: config.clone(),
    })
}

const PROFILE_HEADER: &str = "slice_index,entropy_nats";
const SMOOTHED_HEADER: &str = "slice_index,entropy_nats,smoothed_nats";

/// Entropy values read back from a profile CSV. The GLCM configuration is
/// not part of the CSV, so only indices and values survive a round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRows {
    pub slice_indices: Vec<usize>,
    pub entropy: Vec<f64>,
    pub smoothed: Option<Vec<f64>>,
}

/// Entropy formatted with 17 significant digits, enough to round-trip f64.
fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_profile_csv(path: &Path, profile: &EntropyProfile) -> Result<()> {
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    for (&i, &v) in profile.slice_indices.iter().zip(&profile.values) {
        out.push_str(&format!("{i},{}\n", fmt_value(v)));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Profile CSV with a third column holding the smoothed entropy.
pub fn write_smoothed_profile_csv(path: &Path, profile: &EntropyProfile, smoothed: &[f64]) -> Result<()> {
    assert_eq!(smoothed.len(), profile.values.len());
    let mut out = String::from(SMOOTHED_HEADER);
    out.push('\n');
    for ((&i, &v), &s) in profile.slice_indices.iter().zip(&profile.values).zip(smoothed) {
        out.push_str(&format!("{i},{},{}\n", fmt_value(v), fmt_value(s)));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_profile_csv(path: &Path) -> Result<ProfileRows> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let has_smoothed = match header {
        PROFILE_HEADER => false,
        SMOOTHED_HEADER => true,
        other => {
            return Err(Error::malformed(path, format!("unexpected header \"{other}\"")));
        }
    };
    let mut slice_indices = Vec::new();
    let mut entropy = Vec::new();
    let mut smoothed = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::malformed(path, format!("row {}: {msg}", lineno + 2));
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if has_smoothed { 3 } else { 2 };
        if fields.len() != expected {
            return Err(bad(&format!("expected {expected} fields, got {}", fields.len())));
        }
        let idx: usize = fields[0].parse().map_err(|_| bad("invalid slice index"))?;
        if let Some(&prev) = slice_indices.last() {
            if idx <= prev {
                return Err(bad("slice indices must be strictly ascending"));
            }
        }
        let value: f64 = fields[1].parse().map_err(|_| bad("invalid entropy value"))?;
        slice_indices.push(idx);
        entropy.push(value);
        if has_smoothed {
            smoothed.push(fields[2].parse().map_err(|_| bad("invalid smoothed value"))?);
        }
    }
    if slice_indices.is_empty() {
        return Err(Error::malformed(path, "empty profile (no data rows)"));
    }
    Ok(ProfileRows {
        slice_indices,
        entropy,
        smoothed: if has_smoothed { Some(smoothed) } else { None },
    })
}
