//! Per-slice curation: keep a slice only when its lung mask covers a
//! sufficient fraction of the frame (default 5%).
//!
//! Masks are either supplied externally (an image stack parallel to the
//! volume, nonzero = lung) or produced by a classical fallback segmenter:
//! Otsu threshold on the rescaled slice, 4-connected components, border
//! rejection, and a minimum-area cut. External masks always take
//! precedence over the fallback.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glcm::quantize;
use crate::volume::{load_image_stack, Volume};

/// Minimum component area for the fallback segmenter, as a fraction of
/// the frame.
const MIN_COMPONENT_FRACTION: f64 = 0.005;

/// Binary lung mask for one slice (1 = lung).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskSource {
    External,
    Fallback,
}

/// Keep/drop decision for one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationEntry {
    pub slice_index: usize,
    pub lung_fraction: f64,
    pub kept: bool,
    pub mask_source: MaskSource,
}

/// Per-slice keep/drop decisions for one volume, with the threshold that
/// produced them. Entries cover every slice index exactly once, ascending,
/// and `kept == (lung_fraction >= threshold_fraction)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationManifest {
    pub volume_id: String,
    pub threshold_fraction: f64,
    pub entries: Vec<CurationEntry>,
}

impl CurationManifest {
    /// Original indices of the kept slices, ascending.
    pub fn kept_indices(&self) -> Vec<usize> {
        self.entries.iter().filter(|e| e.kept).map(|e| e.slice_index).collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))
    }
}

/// Fraction of mask pixels set, in [0, 1].
pub fn lung_fraction(mask: &Mask) -> f64 {
    mask.popcount() as f64 / (mask.width * mask.height) as f64
}

/// Otsu's method on a 256-bin histogram: the threshold `t` maximizing
/// between-class variance for the split `{level <= t} | {level > t}`,
/// scanned exhaustively with ties broken toward the smallest `t`.
pub fn otsu_threshold(histogram: &[u64; 256]) -> Result<u8> {
    let total: u64 = histogram.iter().sum();
    if total == 0 {
        return Err(Error::invalid("otsu threshold requires a nonempty histogram"));
    }
    let total_f = total as f64;
    let weighted_sum: f64 = histogram.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();

    let mut best_t = 0u8;
    let mut best_var = f64::MIN;
    let mut count_below = 0.0;
    let mut sum_below = 0.0;
    for (t, &count) in histogram.iter().enumerate() {
        count_below += count as f64;
        sum_below += t as f64 * count as f64;
        let w0 = count_below / total_f;
        let w1 = 1.0 - w0;
        let var = if count_below == 0.0 || count_below == total_f {
            0.0
        } else {
            let mu0 = sum_below / count_below;
            let mu1 = (weighted_sum - sum_below) / (total_f - count_below);
            w0 * w1 * (mu0 - mu1) * (mu0 - mu1)
        };
        if var > best_var {
            best_var = var;
            best_t = t as u8;
        }
    }
    Ok(best_t)
}

/// 4-connected component labeling of a binary grid.
///
/// Returns the label grid (background 0, labels dense from 1) and the
/// area of each label, indexed by `label - 1`.
pub fn connected_components(binary: &[bool], width: usize, height: usize) -> (Vec<u32>, Vec<usize>) {
    assert_eq!(binary.len(), width * height);
    let mut labels = vec![0u32; binary.len()];
    let mut areas = Vec::new();
    let mut stack = Vec::new();
    for start in 0..binary.len() {
        if !binary[start] || labels[start] != 0 {
            continue;
        }
        let label = areas.len() as u32 + 1;
        let mut area = 0usize;
        stack.push(start);
        labels[start] = label;
        while let Some(idx) = stack.pop() {
            area += 1;
            let (x, y) = (idx % width, idx / width);
            let mut visit = |nx: usize, ny: usize| {
                let nidx = ny * width + nx;
                if binary[nidx] && labels[nidx] == 0 {
                    labels[nidx] = label;
                    stack.push(nidx);
                }
            };
            if x > 0 {
                visit(x - 1, y);
            }
            if x + 1 < width {
                visit(x + 1, y);
            }
            if y > 0 {
                visit(x, y - 1);
            }
            if y + 1 < height {
                visit(x, y + 1);
            }
        }
        areas.push(area);
    }
    (labels, areas)
}

/// Classical stand-in for a learned lung segmenter.
///
/// Rescales to 256 levels over `global_range`, thresholds with Otsu
/// (lung and air are dark, so the foreground is the low class), labels
/// 4-connected components, discards any component touching the image
/// border (exterior air), and keeps components covering at least 0.5%
/// of the frame. Degenerate slices yield an empty mask.
pub fn fallback_lung_mask(slice: &[u16], width: usize, height: usize, global_range: (u16, u16)) -> Mask {
    debug_assert!(width >= 2 && height >= 2);
    let levels = quantize(slice, global_range, 256);
    let mut histogram = [0u64; 256];
    for &lv in &levels {
        histogram[lv as usize] += 1;
    }
    // levels is nonempty, so the histogram is too
    let threshold = otsu_threshold(&histogram).expect("nonempty histogram");
    let foreground: Vec<bool> = levels.iter().map(|&lv| lv <= u16::from(threshold)).collect();

    let (labels, areas) = connected_components(&foreground, width, height);
    let mut touches_border = vec![false; areas.len()];
    let mut mark = |idx: usize| {
        if labels[idx] != 0 {
            touches_border[labels[idx] as usize - 1] = true;
        }
    };
    for x in 0..width {
        mark(x);
        mark((height - 1) * width + x);
    }
    for y in 0..height {
        mark(y * width);
        mark(y * width + width - 1);
    }

    let min_area = MIN_COMPONENT_FRACTION * (width * height) as f64;
    let keep: Vec<bool> = areas
        .iter()
        .zip(&touches_border)
        .map(|(&area, &border)| !border && area as f64 >= min_area)
        .collect();
    let bits = labels.iter().map(|&l| l != 0 && keep[l as usize - 1]).collect();
    Mask { width, height, bits }
}

/// Load external masks from an image stack directory (nonzero = lung).
pub fn load_mask_stack(dir_path: &Path) -> Result<Vec<Mask>> {
    let volume = load_image_stack(dir_path, "masks")?;
    Ok(volume
        .slices
        .iter()
        .map(|s| Mask {
            width: volume.width,
            height: volume.height,
            bits: s.iter().map(|&v| v != 0).collect(),
        })
        .collect())
}

/// Decide, per slice, whether enough lung area is present to keep it.
///
/// A slice is kept when its lung fraction is at least
/// `threshold_fraction`, so threshold 0 keeps everything. When `masks`
/// is absent the fallback segmenter supplies one mask per slice.
pub fn curate_volume(
    volume: &Volume,
    masks: Option<&[Mask]>,
    threshold_fraction: f64,
) -> Result<CurationManifest> {
    if !(0.0..=1.0).contains(&threshold_fraction) {
        return Err(Error::invalid("threshold must be in [0,1]"));
    }
    if let Some(masks) = masks {
        if masks.len() != volume.n_slices() {
            return Err(Error::invalid(format!(
                "mask count mismatch: expected {}, got {}",
                volume.n_slices(),
                masks.len()
            )));
        }
        for (i, mask) in masks.iter().enumerate() {
            if (mask.width, mask.height) != (volume.width, volume.height) {
                return Err(Error::invalid(format!(
                    "mask dimension mismatch at slice {i}: expected {}x{}, got {}x{}",
                    volume.width, volume.height, mask.width, mask.height
                )));
            }
        }
    }

    let fractions: Vec<f64> = match masks {
        Some(masks) => masks.iter().map(lung_fraction).collect(),
        None => volume
            .slices
            .par_iter()
            .map(|s| lung_fraction(&fallback_lung_mask(s, volume.width, volume.height, volume.global_range)))
            .collect(),
    };
    let source = if masks.is_some() { MaskSource::External } else { MaskSource::Fallback };
    let entries = fractions
        .into_iter()
        .enumerate()
        .map(|(slice_index, lung_fraction)| CurationEntry {
            slice_index,
            lung_fraction,
            kept: lung_fraction >= threshold_fraction,
            mask_source: source,
        })
        .collect();
    Ok(CurationManifest {
        volume_id: volume.id.clone(),
        threshold_fraction,
        entries,
    })
}
