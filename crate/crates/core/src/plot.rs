//! Standalone SVG rendering of entropy profiles and sampling plans.
//!
//! The output is dependency-free SVG on a fixed 960x480 canvas: the raw
//! entropy polyline, the smoothed polyline when present, one vertical
//! marker per distinct selected slice, and the plan's CDF as a secondary
//! polyline scaled to the plot height.

use crate::error::{Error, Result};
use crate::glcm::ProfileRows;
use crate::sampler::SamplingPlan;

pub const CANVAS_WIDTH: f64 = 960.0;
pub const CANVAS_HEIGHT: f64 = 480.0;

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 48.0;

struct Frame {
    x_min: f64,
    x_span: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, slice_index: f64) -> f64 {
        let usable = CANVAS_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (slice_index - self.x_min) / self.x_span * usable
    }

    fn y(&self, value: f64) -> f64 {
        let usable = CANVAS_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        CANVAS_HEIGHT - MARGIN_BOTTOM - value / self.y_max * usable
    }
}

fn polyline(class: &str, color: &str, points: &[(f64, f64)]) -> String {
    let coords: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!(
        r#"<polyline class="{class}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
        coords.join(" ")
    )
}

/// Render a profile (and optionally a plan) to SVG text.
///
/// When the plan carries a CDF it must have one entry per adjacent pair
/// of profile rows; a plan generated from a different profile is
/// rejected.
pub fn render_svg(rows: &ProfileRows, plan: Option<&SamplingPlan>) -> Result<String> {
    let n = rows.slice_indices.len();
    if n == 0 {
        return Err(Error::invalid("cannot plot an empty profile"));
    }
    if let Some(plan) = plan {
        if !plan.cdf.is_empty() && plan.cdf.len() + 1 != n {
            return Err(Error::invalid(format!(
                "plan CDF has {} entries but the profile has {} rows; they do not match",
                plan.cdf.len(),
                n
            )));
        }
    }

    let x_min = rows.slice_indices[0] as f64;
    let x_max = *rows.slice_indices.last().unwrap() as f64;
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let mut y_max = rows.entropy.iter().cloned().fold(0.0, f64::max);
    if let Some(smoothed) = &rows.smoothed {
        y_max = smoothed.iter().cloned().fold(y_max, f64::max);
    }
    if y_max <= 0.0 {
        y_max = 1.0;
    }
    let frame = Frame { x_min, x_span, y_max: y_max * 1.05 };

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_WIDTH}" height="{CANVAS_HEIGHT}" viewBox="0 0 {CANVAS_WIDTH} {CANVAS_HEIGHT}">"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<rect width="{CANVAS_WIDTH}" height="{CANVAS_HEIGHT}" fill="white"/>"#
    ));
    svg.push('\n');

    let bottom = CANVAS_HEIGHT - MARGIN_BOTTOM;
    let right = CANVAS_WIDTH - MARGIN_RIGHT;
    svg.push_str(&format!(
        r#"<line x1="{MARGIN_LEFT}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{bottom}" stroke="black"/>"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="14">slice index</text>"#,
        (MARGIN_LEFT + right) / 2.0,
        CANVAS_HEIGHT - 12.0
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="18" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 18 {:.2})">entropy (nats)</text>"#,
        (MARGIN_TOP + bottom) / 2.0,
        (MARGIN_TOP + bottom) / 2.0
    ));
    svg.push('\n');
    // axis extent labels
    svg.push_str(&format!(
        r#"<text x="{MARGIN_LEFT}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        bottom + 16.0,
        rows.slice_indices[0]
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="{right}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        bottom + 16.0,
        rows.slice_indices.last().unwrap()
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="12">{:.3}</text>"#,
        MARGIN_LEFT - 6.0,
        MARGIN_TOP + 4.0,
        frame.y_max
    ));
    svg.push('\n');

    // markers behind the data polylines
    if let Some(plan) = plan {
        let mut distinct: Vec<usize> = plan.selected.clone();
        distinct.sort_unstable();
        distinct.dedup();
        for index in distinct {
            let x = frame.x(index as f64);
            svg.push_str(&format!(
                r##"<line class="marker" x1="{x:.2}" y1="{MARGIN_TOP}" x2="{x:.2}" y2="{bottom}" stroke="#888888" stroke-dasharray="4 3"/>"##
            ));
            svg.push('\n');
        }
        if !plan.cdf.is_empty() {
            let usable = bottom - MARGIN_TOP;
            let points: Vec<(f64, f64)> = plan
                .cdf
                .iter()
                .enumerate()
                .map(|(k, &f)| (frame.x(rows.slice_indices[k + 1] as f64), bottom - f * usable))
                .collect();
            svg.push_str(&polyline("cdf", "#2ca02c", &points));
            svg.push('\n');
        }
    }

    let raw_points: Vec<(f64, f64)> = rows
        .slice_indices
        .iter()
        .zip(&rows.entropy)
        .map(|(&i, &v)| (frame.x(i as f64), frame.y(v)))
        .collect();
    svg.push_str(&polyline("raw", "#1f77b4", &raw_points));
    svg.push('\n');

    if let Some(smoothed) = &rows.smoothed {
        let points: Vec<(f64, f64)> = rows
            .slice_indices
            .iter()
            .zip(smoothed)
            .map(|(&i, &v)| (frame.x(i as f64), frame.y(v)))
            .collect();
        svg.push_str(&polyline("smoothed", "#d62728", &points));
        svg.push('\n');
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{sample_glcm, SamplingConfig};

    fn rows(n: usize) -> ProfileRows {
        ProfileRows {
            slice_indices: (0..n).collect(),
            entropy: (0..n).map(|i| i as f64 * 0.1).collect(),
            smoothed: None,
        }
    }

    fn count(haystack: &str, needle: &str) -> usize {
        haystack.matches(needle).count()
    }

    fn polyline_points(svg: &str, class: &str) -> usize {
        let tag = format!("class=\"{class}\"");
        let start = svg.find(&tag).expect("polyline present");
        let rest = &svg[start..];
        let points_attr = rest.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        points_attr.split_whitespace().count()
    }

    #[test]
    fn raw_polyline_has_one_point_per_row() {
        let svg = render_svg(&rows(7), None).unwrap();
        assert_eq!(count(&svg, "class=\"raw\""), 1);
        assert_eq!(polyline_points(&svg, "raw"), 7);
        assert_eq!(count(&svg, "class=\"smoothed\""), 0);
        assert_eq!(count(&svg, "class=\"marker\""), 0);
        assert!(svg.contains("slice index") && svg.contains("entropy (nats)"));
    }

    #[test]
    fn markers_match_distinct_selected_slices() {
        let profile = crate::glcm::EntropyProfile {
            volume_id: "v".into(),
            values: vec![1.0, 1.0, 2.0, 4.0, 4.0],
            slice_indices: (0..5).collect(),
            config: crate::glcm::GlcmConfig::default(),
        };
        let plan = sample_glcm(&profile, &SamplingConfig { n_samples: 2, ..Default::default() }).unwrap();
        let r = ProfileRows {
            slice_indices: profile.slice_indices.clone(),
            entropy: profile.values.clone(),
            smoothed: Some(profile.values.clone()),
        };
        let svg = render_svg(&r, Some(&plan)).unwrap();
        assert_eq!(count(&svg, "class=\"marker\""), 2);
        assert_eq!(count(&svg, "class=\"smoothed\""), 1);
        assert_eq!(count(&svg, "class=\"cdf\""), 1);
        assert_eq!(polyline_points(&svg, "cdf"), 4);
    }

    #[test]
    fn empty_profile_and_mismatched_plan_are_rejected() {
        let empty = ProfileRows { slice_indices: vec![], entropy: vec![], smoothed: None };
        assert!(render_svg(&empty, None).is_err());

        let profile = crate::glcm::EntropyProfile {
            volume_id: "v".into(),
            values: vec![1.0, 2.0, 3.0],
            slice_indices: (0..3).collect(),
            config: crate::glcm::GlcmConfig::default(),
        };
        let plan = sample_glcm(&profile, &SamplingConfig { n_samples: 1, ..Default::default() }).unwrap();
        let err = render_svg(&rows(10), Some(&plan)).unwrap_err().to_string();
        assert!(err.contains("do not match"), "got: {err}");
    }

    #[test]
    fn single_row_profile_renders() {
        let svg = render_svg(&rows(1), None).unwrap();
        assert_eq!(polyline_points(&svg, "raw"), 1);
    }
}
